# maxmix 📈, AGPL-3.0 license

import json
import subprocess

import pytest


def run(cmd, check=True):
    # Run a subprocess command with check=True
    return subprocess.run(cmd.split(), check=check)


def test_special_modes():
    run('maxmix checks')
    run('maxmix version')
    run('maxmix help')
    run('maxmix cfg')


def test_simulate(tmp_path):
    run(f'maxmix simulate window=4 replicates=3 --seed 2 --workers 2 --out {tmp_path} --format json verbose=False')
    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['seed'] == 2 and 'samples/00002.json' in manifest['files']


def test_bounds(tmp_path):
    run(f'maxmix bounds model=brown-resnick scale=0.5 distances=[1,2,4] mc_draws=100 --out {tmp_path}')
    assert (tmp_path / 'bounds.csv').is_file() and (tmp_path / 'conditions.json').is_file()


@pytest.mark.parametrize('args', ['simulate windw=4', 'simulate replicates=1.5', 'simulate kernel=triangle',
                                  'coupling model=brown-resnick', 'simulate window=[8,8,8]', 'simulate --seed'])
def test_config_errors(tmp_path, args):
    assert run(f'maxmix {args} --out {tmp_path}', check=False).returncode == 2
