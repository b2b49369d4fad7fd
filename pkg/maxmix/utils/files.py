# maxmix 📈, AGPL-3.0 license

import json
import os
from pathlib import Path

import numpy as np
import pandas as pd

FLOAT_FORMAT = '%.17g'  # round-trip exact, keeps data files byte-identical across runs


def increment_path(path, exist_ok=False, sep='', mkdir=False):
    """
    Increments a file or directory path, i.e. runs/exp --> runs/exp{sep}2, runs/exp{sep}3, ... etc.

    If the path exists and exist_ok is not set to True, the path will be incremented by appending a number and sep to
    the end of the path. If the path is a file, the file extension will be preserved. If the path is a directory, the
    number will be appended directly to the end of the path. If mkdir is set to True, the path will be created as a
    directory if it does not already exist.

    Args:
        path (str, pathlib.Path): Path to increment.
        exist_ok (bool, optional): If True, the path will not be incremented and returned as-is. Defaults to False.
        sep (str, optional): Separator to use between the path and the incrementation number. Defaults to ''.
        mkdir (bool, optional): Create a directory if it does not exist. Defaults to False.

    Returns:
        (pathlib.Path): Incremented path.
    """
    path = Path(path)  # os-agnostic
    if path.exists() and not exist_ok:
        path, suffix = (path.with_suffix(''), path.suffix) if path.is_file() else (path, '')

        for n in range(2, 9999):
            p = f'{path}{sep}{n}{suffix}'  # increment path
            if not os.path.exists(p):
                break
        path = Path(p)

    if mkdir:
        path.mkdir(parents=True, exist_ok=True)  # make directory

    return path


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays, tuples and paths into JSON-serializable python objects."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def json_dump(data, file=None):
    """Serialize `data` to a JSON string with sorted keys, writing it to `file` when given."""
    s = json.dumps(to_builtin(data), indent=2, sort_keys=True)
    if file:
        file = Path(file)
        file.parent.mkdir(parents=True, exist_ok=True)
        file.write_text(s + '\n', encoding='utf-8')
    return s


def csv_dump(rows, file=None, columns=None):
    """
    Write a table to CSV through pandas with RFC-4180 quoting and exact float formatting.

    Args:
        rows (list[dict] | pd.DataFrame): Table rows.
        file (str | Path, optional): Destination, the CSV text is returned when omitted.
        columns (list, optional): Column order.

    Returns:
        (str | None): CSV text when `file` is None.
    """
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame([to_builtin(r) for r in rows], columns=columns)
    if file is None:
        return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    file = Path(file)
    file.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(file, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
