# maxmix 📈, AGPL-3.0 license
import ast
import math
import re
import shutil
import sys
from difflib import get_close_matches
from pathlib import Path
from types import SimpleNamespace
from typing import Dict, List, Union

from maxmix.utils import (DEFAULT_CFG, DEFAULT_CFG_DICT, DEFAULT_CFG_PATH, LOGGER, IterableSimpleNamespace,
                          __version__, colorstr, yaml_load, yaml_print)
from maxmix.utils.errors import AcceptanceError, ConfigError, MaxMixError

# Define valid modes and model families
MODES = 'simulate', 'estimate', 'clt-verify', 'bounds', 'coupling', 'variance-opt'
MODELS = 'brown-resnick', 'moving-maximum'
GLOBAL_FLAGS = {'--config': 'cfg', '--seed': 'seed', '--workers': 'workers', '--out': 'out', '--format': 'format'}

CLI_HELP_MSG = \
    f"""
    Arguments received: {str(['maxmix'] + sys.argv[1:])}. maxmix commands use the following syntax:

        maxmix MODE ARGS

        Where   MODE (required) is one of {MODES}
                ARGS (optional) are any number of 'arg=value' pairs like 'window=64' that override defaults, and the
                    global flags --config <path>, --seed <u64>, --workers <n>, --out <dir>, --format csv|json.
                    See all ARGS with 'maxmix cfg'

    1. Simulate 20 Brown-Resnick fields on a 16 x 16 box and write them as JSON
        maxmix simulate model=brown-resnick scale=2.0 window=16 replicates=20 --format json

    2. Estimate the pair extremal coefficient at two lags with all three estimators
        maxmix estimate window=64 lags=[[1,0],[2,0]] replicates=50 --workers 8

    3. Check asymptotic normality of the estimators on a 200 x 200 window
        maxmix clt-verify window=200 replicates=500 --seed 3

    4. Mixing bounds along a distance ladder, optimal threshold and coupling experiments
        maxmix bounds model=brown-resnick distances=[1,2,4,8]
        maxmix variance-opt lags=[[2,0]]
        maxmix coupling window=6 replicates=1000

    5. Run special commands:
        maxmix help
        maxmix checks
        maxmix version
        maxmix copy-cfg
        maxmix cfg
    """

# Define keys for arg type checks
CFG_FLOAT_KEYS = 'scale', 'exponent', 'bandwidth', 'radius', 'bias_tol', 'quad_rtol', 'delta'
CFG_FRACTION_KEYS = 'boundary_ratio', 'pilot_quantile', 'level', 'ks_level', 'min_valid'  # limited to 0.0 - 1.0
CFG_INT_KEYS = ('dim', 'replicates', 'seed', 'workers', 'max_atoms', 'pilot_draws', 'theta4_draws', 'mc_draws',
                'quad_max_points', 'bandwidth_L', 'grid')
CFG_BOOL_KEYS = 'exist_ok', 'save_atoms', 'verbose'
CFG_POSITIVE_KEYS = ('scale', 'exponent', 'bandwidth', 'radius', 'bias_tol', 'quad_rtol', 'delta', 'dim', 'replicates',
                     'max_atoms', 'pilot_draws', 'theta4_draws', 'mc_draws', 'quad_max_points', 'bandwidth_L', 'grid')
CFG_LIST_KEYS = ('lags', 'thresholds', 'estimators', 'windows', 'variance_band', 'fit_range', 'distances', 'set1',
                 'set2', 'count_levels')
CFG_CHOICES = {
    'mode': MODES,
    'model': MODELS,
    'variogram': ('power', 'fractional'),
    'kernel': ('gaussian', 'compact-gaussian', 'indicator-box'),
    'theta4_method': ('auto', 'quadrature', 'monte-carlo'),
    'format': ('csv', 'json')}


def cfg2dict(cfg):
    """
    Convert a configuration object to a dictionary, whether it is a file path, a string, or a SimpleNamespace object.

    Inputs:
        cfg (str) or (Path) or (SimpleNamespace): Configuration object to be converted to a dictionary.

    Returns:
        cfg (dict): Configuration object in dictionary format.
    """
    if isinstance(cfg, (str, Path)):
        if not Path(cfg).is_file():
            raise ConfigError(f"Configuration file '{cfg}' not found ❌")
        cfg = yaml_load(cfg)  # load dict
    elif isinstance(cfg, SimpleNamespace):
        cfg = vars(cfg)  # convert to dict
    return dict(cfg)


def get_cfg(cfg: Union[str, Path, Dict, SimpleNamespace] = DEFAULT_CFG_DICT, overrides: Dict = None):
    """
    Load and merge configuration data from a file or dictionary.

    Args:
        cfg (str) or (Path) or (Dict) or (SimpleNamespace): Configuration data.
        overrides (str) or (Dict), optional: Overrides in the form of a file name or a dictionary. Default is None.

    Returns:
        (SimpleNamespace): Run arguments namespace.
    """
    cfg = cfg2dict(cfg)

    # Merge overrides
    if overrides:
        overrides = cfg2dict(overrides)
        check_cfg_mismatch(cfg, overrides)
        cfg = {**cfg, **overrides}  # merge cfg and overrides dicts (prefer overrides)

    # Special handling for strings YAML cannot read as numbers
    for k in CFG_FLOAT_KEYS:
        if isinstance(cfg.get(k), str) and cfg[k].lower() in ('inf', '.inf', 'infinity'):
            cfg[k] = math.inf
    if isinstance(cfg.get('thresholds'), str) and cfg['thresholds'].lower() == 'auto':
        cfg['thresholds'] = None  # resolved per lag by the runners
    if isinstance(cfg.get('out'), (int, float)):
        cfg['out'] = str(cfg['out'])

    # Type and Value checks
    for k, v in cfg.items():
        if v is not None:  # None values may be from optional args
            if k in CFG_FLOAT_KEYS and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ConfigError(f"'{k}={v}' is of invalid type {type(v).__name__}. "
                                  f"Valid '{k}' types are int (i.e. '{k}=1') or float (i.e. '{k}=0.5')")
            elif k in CFG_FRACTION_KEYS:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"'{k}={v}' is of invalid type {type(v).__name__}. "
                                      f"Valid '{k}' types are int (i.e. '{k}=0') or float (i.e. '{k}=0.5')")
                if not (0.0 < v < 1.0):
                    raise ConfigError(f"'{k}={v}' is an invalid value. "
                                      f"Valid '{k}' values are strictly between 0.0 and 1.0.")
            elif k in CFG_INT_KEYS and (isinstance(v, bool) or not isinstance(v, int)):
                raise ConfigError(f"'{k}={v}' is of invalid type {type(v).__name__}. "
                                  f"'{k}' must be an int (i.e. '{k}=8')")
            elif k in CFG_BOOL_KEYS and not isinstance(v, bool):
                raise ConfigError(f"'{k}={v}' is of invalid type {type(v).__name__}. "
                                  f"'{k}' must be a bool (i.e. '{k}=True' or '{k}=False')")
            elif k in CFG_LIST_KEYS and not isinstance(v, (list, tuple)):
                raise ConfigError(f"'{k}={v}' is of invalid type {type(v).__name__}. "
                                  f"'{k}' must be a list (i.e. '{k}={DEFAULT_CFG_DICT.get(k) or [1, 2]}')")
            if k in CFG_POSITIVE_KEYS and not v > 0:
                raise ConfigError(f"'{k}={v}' is an invalid value. '{k}' must be positive.")
            if k in CFG_CHOICES and v not in CFG_CHOICES[k]:
                raise ConfigError(f"Invalid '{k}={v}'. Valid '{k}' values are {CFG_CHOICES[k]}.")
    if cfg.get('seed') is not None and not 0 <= cfg['seed'] < 2 ** 64:
        raise ConfigError(f"'seed={cfg['seed']}' must be an unsigned 64-bit integer.")

    # Return instance
    return IterableSimpleNamespace(**cfg)


def check_cfg_mismatch(base: Dict, custom: Dict, e=None):
    """
    This function checks for any mismatched keys between a custom configuration list and a base configuration list.
    If any mismatched keys are found, the function reports similar keys from the base list and raises ConfigError.

    Inputs:
        - custom (Dict): a dictionary of custom configuration options
        - base (Dict): a dictionary of base configuration options
    """
    base, custom = (set(x.keys()) for x in (base, custom))
    mismatched = [x for x in custom if x not in base and x != 'yaml_file']
    if mismatched:
        string = ''
        for x in mismatched:
            matches = get_close_matches(x, base)  # key list
            matches = [f'{k}={DEFAULT_CFG_DICT[k]}' if DEFAULT_CFG_DICT.get(k) is not None else k for k in matches]
            match_str = f'Similar arguments are i.e. {matches}.' if matches else ''
            string += f"'{colorstr('red', 'bold', x)}' is not a valid maxmix argument. {match_str}\n"
        raise ConfigError(string + CLI_HELP_MSG) from e


def merge_equals_args(args: List[str]) -> List[str]:
    """
    Merges arguments around isolated '=' args in a list of strings.
    The function considers cases where the first argument ends with '=' or the second starts with '=',
    as well as when the middle one is an equals sign.

    Args:
        args (List[str]): A list of strings where each element is an argument.

    Returns:
        List[str]: A list of strings where the arguments around isolated '=' are merged.
    """
    new_args = []
    for i, arg in enumerate(args):
        if arg == '=' and 0 < i < len(args) - 1:  # merge ['arg', '=', 'val']
            new_args[-1] += f'={args[i + 1]}'
            del args[i + 1]
        elif arg.endswith('=') and i < len(args) - 1 and '=' not in args[i + 1]:  # merge ['arg=', 'val']
            new_args.append(f'{arg}{args[i + 1]}')
            del args[i + 1]
        elif arg.startswith('=') and i > 0:  # merge ['arg', '=val']
            new_args[-1] += arg
        else:
            new_args.append(arg)
    return new_args


def merge_flag_args(args: List[str]) -> List[str]:
    """
    Rewrites the global flags '--seed 3' or '--seed=3' as 'seed=3' ('--config' becomes 'cfg').

    Args:
        args (List[str]): Command line arguments after merge_equals_args().

    Returns:
        List[str]: Arguments with every global flag in 'key=value' form.
    """
    new_args, i = [], 0
    while i < len(args):
        flag, _, value = args[i].partition('=')
        if flag in GLOBAL_FLAGS:
            if not value:
                if i == len(args) - 1 or args[i + 1].startswith('--'):
                    raise ConfigError(f"Global flag '{flag}' requires a value, i.e. '{flag} <value>'")
                value = args[i + 1]
                i += 1
            new_args.append(f'{GLOBAL_FLAGS[flag]}={value}')
        else:
            new_args.append(args[i])
        i += 1
    return new_args


def parse_value(v: str):
    """Convert a CLI string value to None, bool, a python literal or leave it as a string."""
    if v.lower() == 'none':
        return None
    elif v.lower() == 'true':
        return True
    elif v.lower() == 'false':
        return False
    try:
        return ast.literal_eval(v)
    except (ValueError, SyntaxError):
        return v


def entrypoint(debug=''):
    """
    This function is the maxmix package entrypoint, it's responsible for parsing the command line arguments passed to
    the package.

    This function allows for:
    - specifying the mode, one of MODES
    - passing 'arg=value' overrides and the global flags
    - running special modes like 'checks'

    Errors derived from MaxMixError terminate the process with their exit code (2 configuration, 3 numerical failure,
    4 acceptance failure).
    """
    args = (debug.split(' ') if debug else sys.argv)[1:]
    if not args:  # no arguments passed
        LOGGER.info(CLI_HELP_MSG)
        return

    try:
        _entrypoint(args)
    except MaxMixError as e:
        LOGGER.error(f"{colorstr('red', 'bold', type(e).__name__)}: {e}")
        sys.exit(e.exit_code)


def _entrypoint(args: List[str]):
    """Parse arguments and run the requested mode, see entrypoint()."""
    from maxmix.utils import checks

    special = {
        'help': lambda: LOGGER.info(CLI_HELP_MSG),
        'checks': checks.check_maxmix,
        'version': lambda: LOGGER.info(__version__),
        'cfg': lambda: yaml_print(DEFAULT_CFG_PATH),
        'copy-cfg': copy_default_cfg}
    full_args_dict = {**DEFAULT_CFG_DICT, **{k: None for k in MODES}, **special}

    # Define common mis-uses of special commands, i.e. -h, -help, --help
    special.update({k[0]: v for k, v in special.items()})  # singular
    special.update({k[:-1]: v for k, v in special.items() if len(k) > 1 and k.endswith('s')})  # singular
    special = {**special, **{f'-{k}': v for k, v in special.items()}, **{f'--{k}': v for k, v in special.items()}}

    overrides = {}  # basic overrides, i.e. window=64
    for a in merge_flag_args(merge_equals_args(args)):  # merge spaces around '=' sign and global flags
        if a.startswith('--') and a.lower() not in special:
            LOGGER.warning(f"WARNING ⚠️ '{a}' does not require leading dashes '--', updating to '{a[2:]}'.")
            a = a[2:]
        if a.endswith(','):
            LOGGER.warning(f"WARNING ⚠️ '{a}' does not require trailing comma ',', updating to '{a[:-1]}'.")
            a = a[:-1]
        if '=' in a:
            a = re.sub(r' *= *', '=', a)  # remove spaces around equals sign
            k, v = a.split('=', 1)  # split on first '=' sign
            if not v:
                check_cfg_mismatch(full_args_dict, {a: ''})
                raise ConfigError(f"missing '{k}' value, i.e. try '{k}={DEFAULT_CFG_DICT.get(k)}'")
            if k == 'cfg':  # custom.yaml passed
                LOGGER.info(f'Overriding {DEFAULT_CFG_PATH} with {v}')
                overrides = {**{k: val for k, val in cfg2dict(v).items() if k != 'cfg'}, **overrides}
            else:
                overrides[k] = parse_value(v)
        elif a in MODES:
            overrides['mode'] = a
        elif a.lower() in special:
            special[a.lower()]()
            return
        elif a in DEFAULT_CFG_DICT and isinstance(DEFAULT_CFG_DICT[a], bool):
            overrides[a] = True  # auto-True for default bool args, i.e. 'maxmix simulate save_atoms'
        elif a in DEFAULT_CFG_DICT:
            raise ConfigError(f"'{colorstr('red', 'bold', a)}' is a valid maxmix argument but is missing an '=' sign "
                              f"to set its value, i.e. try '{a}={DEFAULT_CFG_DICT[a]}'\n{CLI_HELP_MSG}")
        else:
            check_cfg_mismatch(full_args_dict, {a: ''})

    # Check keys
    check_cfg_mismatch(full_args_dict, overrides)

    # Mode
    mode = overrides.pop('mode', None)
    if mode is None:
        mode = DEFAULT_CFG.mode or 'simulate'
        LOGGER.warning(f"WARNING ⚠️ 'mode' is missing. Valid modes are {MODES}. Using default 'mode={mode}'.")
    elif mode not in MODES:
        raise ConfigError(f"Invalid 'mode={mode}'. Valid modes are {MODES}.\n{CLI_HELP_MSG}")

    # Model
    from maxmix.engine.model import MaxStableModel
    model = MaxStableModel(overrides.pop('model', DEFAULT_CFG.model), **overrides)

    # Run command in python
    results = getattr(model, mode.replace('-', '_'))()
    if getattr(results, 'passed', True) is False:
        raise AcceptanceError(f"'{mode}' finished but failed its acceptance checks, see {model.save_dir}")
    return results


# Special modes --------------------------------------------------------------------------------------------------------
def copy_default_cfg():
    """Copy and create a new default configuration file with '_copy' appended to its name."""
    new_file = Path.cwd() / DEFAULT_CFG_PATH.name.replace('.yaml', '_copy.yaml')
    shutil.copy2(DEFAULT_CFG_PATH, new_file)
    LOGGER.info(f'{DEFAULT_CFG_PATH} copied to {new_file}\n'
                f"Example maxmix command with this new custom cfg:\n    maxmix estimate cfg='{new_file}' window=64")


if __name__ == '__main__':
    # Example Usage: entrypoint(debug='maxmix bounds model=brown-resnick')
    entrypoint(debug='')
