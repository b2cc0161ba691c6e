"""Atomic, reproducible file outputs.

All writers stage into a temp file in the target directory and rename, so an
interrupted run never leaves a truncated artifact.  Floats are rendered with
``repr`` (shortest round-trip), which makes outputs byte-stable across runs
of the same build.
"""

import json
import os
import tempfile

import numpy as np

__all__ = ["atomic_write_text", "write_csv", "write_json", "format_value",
           "out_root"]

OUT_ROOT_ENV = "SOFTSNAKE_OUT_ROOT"


def out_root(default: str = ".") -> str:
    return os.environ.get(OUT_ROOT_ENV, default)


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-softsnake-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
