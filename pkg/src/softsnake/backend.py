"""Kernel backend selection.

The compiled extension (``softsnake._core``) is preferred when it imports;
otherwise the pure-Python reference kernels (``softsnake._ref``) are used.
Set ``SOFTSNAKE_BACKEND=python`` or ``=compiled`` to force a choice (forcing
``compiled`` raises if the extension is missing).  Both backends implement
the same functions with bit-identical floating-point behavior.
"""

import os

from softsnake import _ref


def _select():
    choice = os.environ.get("SOFTSNAKE_BACKEND", "").strip().lower()
    if choice == "python":
        return _ref
    try:
        from softsnake import _core
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "SOFTSNAKE_BACKEND=compiled but the softsnake._core extension "
                "is not built; reinstall with a working C toolchain")
        return _ref
    return _core


kernels = _select()


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "python")."""
    return kernels.BACKEND_NAME


def available_backends():
    """All importable kernel modules, keyed by backend name."""
    out = {_ref.BACKEND_NAME: _ref}
    try:
        from softsnake import _core
        out[_core.BACKEND_NAME] = _core
    except ImportError:
        pass
    return out
