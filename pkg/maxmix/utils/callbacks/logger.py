# maxmix 📈, AGPL-3.0 license
from maxmix.utils import LOGGER, colorstr


def on_run_start(runner):
    """Log where the run writes and how it is parallelised."""
    prefix = colorstr(f'{runner.mode}: ')
    LOGGER.info(f'{prefix}{runner.spec.describe()}, {runner.args.replicates} replicates, seed {runner.args.seed}, '
                f'{runner.workers} worker{"s" if runner.workers > 1 else ""}, saving to {runner.save_dir}')


def on_run_end(runner):
    """Log truncation flags collected over the replicates."""
    flagged = runner.manifest.get('flagged', 0)
    if flagged:
        LOGGER.warning(f'WARNING ⚠️ {flagged}/{runner.manifest.get("replicates", 0)} replicates hit the truncation cap '
                       f"'max_atoms={runner.args.max_atoms}' without a stopping certificate")


def on_save(runner):
    """Log the written files."""
    files = runner.manifest.get('files', [])
    LOGGER.info(f"Results saved to {colorstr('bold', runner.save_dir)} ({len(files)} files)")


callbacks = {'on_run_start': on_run_start, 'on_run_end': on_run_end, 'on_save': on_save}
