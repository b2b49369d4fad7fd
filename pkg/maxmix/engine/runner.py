# maxmix 📈, AGPL-3.0 license
"""
Base class of the experiment runners behind the six CLI modes.

Usage:
    $ maxmix simulate model=moving-maximum window=64 replicates=100 seed=0
    $ maxmix clt-verify window=200 replicates=500 workers=8

A runner resolves its arguments, builds the model, creates the run directory, maps its replicates over a thread pool
with one counter-based stream family per replicate and writes args.yaml, manifest.json and its data files. Results
are collected in replicate order, so every data file is identical for any worker count.
"""

from multiprocessing.pool import ThreadPool
from pathlib import Path

from tqdm import tqdm

from maxmix import __version__
from maxmix.cfg import get_cfg
from maxmix.extremes.estimators import optimal_y
from maxmix.fields.models import ModelSpec, TruncationPolicy
from maxmix.utils import (DEFAULT_CFG, LOGGER, RUNS_DIR, TQDM_BAR_FORMAT, callbacks, colorstr, get_workers,
                          yaml_save)
from maxmix.utils.checks import check_run_args
from maxmix.utils.errors import ConfigError, MaxMixError
from maxmix.utils.files import csv_dump, increment_path, json_dump
from maxmix.utils.ops import Profile
from maxmix.utils.rng import make_streams, stream_key


class BaseRunner:
    """
    BaseRunner

    A base class for creating experiment runners.

    Attributes:
        args (IterableSimpleNamespace): Resolved run arguments.
        spec (ModelSpec): Model built from the arguments.
        trunc (TruncationPolicy): Simulation stopping controls.
        workers (int): Replicate worker threads.
        save_dir (Path): Run directory.
        callbacks (defaultdict): Event name -> list of callbacks.
        manifest (dict): Seeds, stream triples, flag counts and written files of the run.
        operations (tuple): Functions every emitted number is computed by, recorded in the manifest.
        dt (Profile): Wall time of the run, logged only.
    """
    mode = 'simulate'
    operations = ()

    def __init__(self, cfg=DEFAULT_CFG, overrides=None, _callbacks=None):
        """
        Initializes a BaseRunner instance.

        Args:
            cfg (str | dict | SimpleNamespace): Configuration file or namespace. Defaults to DEFAULT_CFG.
            overrides (dict, optional): Argument overrides. Defaults to None.
        """
        self.args = get_cfg(cfg, overrides)
        self.args.mode = self.mode
        check_run_args(self.args)
        self.spec = ModelSpec.from_cfg(self.args)
        self.trunc = TruncationPolicy.from_cfg(self.args)
        self.workers = get_workers(self.args.workers)
        self.save_dir = Path(self.args.out) if self.args.out else increment_path(
            RUNS_DIR / self.mode / 'run', exist_ok=self.args.exist_ok)
        self.callbacks = _callbacks or callbacks.get_default_callbacks()
        callbacks.add_integration_callbacks(self)
        self.manifest = {}
        self.files = []
        self.replicate_index = None  # index of the last collected replicate
        self.replicate_result = None
        self.dt = Profile()

    def add_callback(self, event: str, callback):
        """Appends the given callback."""
        self.callbacks[event].append(callback)

    def run_callbacks(self, event: str):
        """Runs all callbacks associated with a specified event."""
        for callback in self.callbacks.get(event, []):
            callback(self)

    def __call__(self):
        """Run the experiment and write its files, returning the mode's result object."""
        try:
            self.save_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory '{self.save_dir}' is not writable: {e}") from e
        yaml_save(self.save_dir / 'args.yaml', vars(self.args))
        self.files.append('args.yaml')
        self.run_callbacks('on_run_start')
        with self.dt:
            results = self.run()
        self.run_callbacks('on_run_end')
        self.write_manifest()
        self.run_callbacks('on_save')
        LOGGER.info(f"{colorstr('bold', self.mode)} finished in {self.dt.t:.1f}s")
        return results

    def run(self):
        """Run the experiment, implemented by each mode."""
        raise NotImplementedError('run() needs to be implemented by the mode runner')

    def replicate(self, index, streams):
        """Compute one replicate from its ReplicateStreams, implemented by replicated modes."""
        raise NotImplementedError('replicate() needs to be implemented by replicated modes')

    def thresholds(self, h, provider=None):
        """Thresholds y of theta1 at lag h: `thresholds` when set, otherwise the model's variance-optimal y*."""
        if self.args.thresholds:
            return [float(y) for y in self.args.thresholds]
        try:
            y = optimal_y(self.spec, h, provider)
        except MaxMixError as e:
            LOGGER.warning(f'WARNING ⚠️ no optimal threshold at lag {h.tolist()}: {e}, theta1 uses y=1.0')
            return [1.0]
        LOGGER.info(f'theta1 threshold at lag {h.tolist()}: y*={y:.4g}')
        return [y]

    def map_replicates(self, n=None, desc=None, start=0):
        """
        Run replicate() for indices start..start+n-1 over the worker pool.

        Args:
            n (int, optional): Number of replicates, default args.replicates.
            desc (str, optional): Progress bar description.
            start (int): First stream index, distinct batches of one run use disjoint index ranges.

        Returns:
            (list): Replicate results in index order.
        """
        n = self.args.replicates if n is None else n
        seed = self.args.seed

        def work(i):
            return self.replicate(i, make_streams(seed, self.mode, i))

        indices = range(start, start + n)
        self.manifest.setdefault('streams', []).extend(stream_key(seed, self.mode, i) for i in indices)
        self.manifest['replicates'] = self.manifest.get('replicates', 0) + n
        results = []
        pool = ThreadPool(self.workers) if self.workers > 1 and n > 1 else None
        try:
            it = pool.imap(work, indices) if pool else map(work, indices)
            pbar = tqdm(it, total=n, desc=desc or f'{self.mode} replicates', bar_format=TQDM_BAR_FORMAT,
                        disable=not self.args.verbose)
            for i, r in zip(indices, pbar):
                results.append(r)
                self.replicate_index, self.replicate_result = i, r
                self.run_callbacks('on_replicate_end')
        finally:
            if pool:
                pool.close()
                pool.join()
        return results

    def write_csv(self, name, rows, columns=None):
        """Write a table to the run directory and record it in the manifest."""
        csv_dump(rows, self.save_dir / name, columns)
        self.files.append(name)

    def write_json(self, name, data):
        """Write a report to the run directory and record it in the manifest."""
        json_dump(data, self.save_dir / name)
        self.files.append(name)

    def write_manifest(self):
        """Write manifest.json: version, mode, seed, operations, stream triples, flag rates and the file list."""
        replicates = self.manifest.get('replicates', 0)
        flagged = self.manifest.get('flagged', 0)
        self.manifest.update({
            'version': __version__,
            'mode': self.mode,
            'seed': self.args.seed,
            'model': self.spec.to_dict(),
            'operations': list(self.operations),
            'flag_rate': flagged / replicates if replicates else 0.0,
            'files': sorted(self.files + ['manifest.json'])})
        json_dump(self.manifest, self.save_dir / 'manifest.json')
