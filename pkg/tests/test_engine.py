# maxmix 📈, AGPL-3.0 license

import json
import math

import pandas as pd
import pytest

from maxmix.cfg import get_cfg, merge_equals_args, merge_flag_args
from maxmix.extremes.estimators import optimal_y
from maxmix.tasks import BoundsRunner, EstimateRunner, SimulateRunner
from maxmix.utils import DEFAULT_CFG, WINDOWS, emojis, yaml_load
from maxmix.utils.errors import ConfigError
from maxmix.utils.rng import make_streams

SIM = {'model': 'moving-maximum', 'window': 4, 'replicates': 6, 'seed': 7, 'verbose': False}


def run_files(save_dir):
    """Map of relative path -> bytes of every data file of a run, args.yaml excluded."""
    return {p.relative_to(save_dir).as_posix(): p.read_bytes()
            for p in sorted(save_dir.rglob('*')) if p.is_file() and p.name != 'args.yaml'}


def test_func(runner=None):
    print('callback test passed')


def test_worker_count_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv('MAXMIX_WORKERS', raising=False)
    a = SimulateRunner(overrides={**SIM, 'workers': 1, 'out': str(tmp_path / 'a')})
    b = SimulateRunner(overrides={**SIM, 'workers': 4, 'out': str(tmp_path / 'b')})
    assert (a.workers, b.workers) == (1, 4)
    a(), b()
    files = run_files(a.save_dir)
    assert 'samples/00005.csv' in files and 'summary.csv' in files
    assert files == run_files(b.save_dir)


def test_replicate_streams():
    s1, s2 = make_streams(0, 'simulate', 3), make_streams(0, 'simulate', 3)
    assert s1.field.random() == s2.field.random()
    assert s1.tilde.random() != make_streams(0, 'simulate', 4).tilde.random()


def test_callbacks(tmp_path):
    runner = SimulateRunner(overrides={**SIM, 'out': str(tmp_path)})
    runner.add_callback('on_run_start', test_func)
    assert test_func in runner.callbacks['on_run_start'], 'callback test failed'
    seen = []
    runner.add_callback('on_replicate_end', lambda r: seen.append(r.replicate_index))
    runner()
    assert seen == list(range(SIM['replicates']))


def test_manifest(tmp_path):
    report = SimulateRunner(overrides={**SIM, 'out': str(tmp_path), 'format': 'json'})()
    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['mode'] == 'simulate' and manifest['seed'] == 7
    assert manifest['streams'][2] == [7, 0, 2]
    assert manifest['replicates'] == 6 and 0.0 <= manifest['flag_rate'] <= 1.0
    assert 'samples/00000.json' in manifest['files'] and 'manifest.json' in manifest['files']
    assert yaml_load(tmp_path / 'args.yaml')['window'] == 4
    assert report['replicates'] == 6


def test_args_round_trip(tmp_path):
    runner = SimulateRunner(overrides={**SIM, 'scale': math.inf, 'out': str(tmp_path)})
    runner()
    assert vars(get_cfg(tmp_path / 'args.yaml')) == vars(runner.args)


def test_estimate_runner(tmp_path):
    overrides = {'window': 12, 'replicates': 3, 'estimators': ['theta2', 'theta3'], 'verbose': False}
    report = EstimateRunner(overrides={**overrides, 'out': str(tmp_path)})()
    assert (tmp_path / 'estimates.csv').is_file()
    assert report.name == 'estimate'


def test_estimate_runner_thresholds(tmp_path):
    overrides = {'window': 8, 'replicates': 2, 'estimators': ['theta1'], 'verbose': False}
    runner = EstimateRunner(overrides={**overrides, 'out': str(tmp_path / 'auto')})
    runner()
    y = optimal_y(runner.spec, runner.lags[0], runner.providers[0])
    assert runner.ys == {0: [pytest.approx(y)]}
    df = pd.read_csv(tmp_path / 'auto/estimates.csv')
    assert len(df) == 2 and df.y.to_numpy() == pytest.approx([y, y])
    runner = EstimateRunner(overrides={**overrides, 'thresholds': [0.5, 2.0], 'out': str(tmp_path / 'fixed')})
    runner()
    assert runner.ys == {0: [0.5, 2.0]}
    assert sorted(pd.read_csv(tmp_path / 'fixed/estimates.csv').y) == [0.5, 0.5, 2.0, 2.0]


def test_bounds_runner(tmp_path):
    overrides = {'model': 'brown-resnick', 'scale': 0.25, 'distances': [1, 2, 4], 'mc_draws': 200, 'verbose': False}
    BoundsRunner(overrides={**overrides, 'out': str(tmp_path)})()
    assert (tmp_path / 'bounds.csv').is_file()


def test_get_cfg():
    cfg = get_cfg(DEFAULT_CFG, {'scale': 'inf', 'window': 16})
    assert math.isinf(cfg.scale) and cfg.window == 16
    assert get_cfg(DEFAULT_CFG, {'thresholds': 'auto'}).thresholds is None
    assert get_cfg(DEFAULT_CFG).thresholds is None
    for bad in ({'windw': 16}, {'replicates': 1.5}, {'level': 1.5}, {'kernel': 'triangle'}, {'seed': -1},
                {'scale': 0.0}, {'save_atoms': 'yes'}, {'thresholds': 'best'}):
        with pytest.raises(ConfigError):
            get_cfg(DEFAULT_CFG, bad)


def test_run_arg_checks(tmp_path):
    for bad in ({'window': [8, 8, 8]}, {'lags': [[1, 0, 0]]}, {'windows': [[64, 1], [128, 1]]},
                {'estimators': ['theta4']}, {'model': 'brown-resnick', 'exponent': 2.5}):
        with pytest.raises(ConfigError):
            SimulateRunner(overrides={**bad, 'out': str(tmp_path)})


def test_merge_args():
    assert merge_equals_args(['window', '=', '64', 'seed=', '3']) == ['window=64', 'seed=3']
    assert merge_flag_args(['--seed', '3', '--out=runs/x', 'window=8']) == ['seed=3', 'out=runs/x', 'window=8']
    with pytest.raises(ConfigError):
        merge_flag_args(['--seed'])


def test_emojis():
    assert emojis('maxmix 📈') == ('maxmix ' if WINDOWS else 'maxmix 📈')
