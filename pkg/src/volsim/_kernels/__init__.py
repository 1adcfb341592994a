"""Numeric kernel backends with import-time selection.

The compiled Cython core is used when built; otherwise the pure-Python
fallback. `VOL_BACKEND=pure` or `VOL_BACKEND=compiled` forces the choice
(forcing `compiled` fails loudly if the extension is missing). All callers
go through the module attribute `impl` so tests can swap backends.
"""

import contextlib
import os

from volsim._kernels import _pure

try:
    from volsim._kernels import _core
except ImportError:
    _core = None

_forced = os.environ.get("VOL_BACKEND", "").strip().lower()
if _forced and _forced not in ("pure", "compiled"):
    raise ImportError(f"VOL_BACKEND must be 'pure' or 'compiled', got {_forced!r}")
if _forced == "compiled" and _core is None:
    raise ImportError("VOL_BACKEND=compiled but the compiled core is not built; "
                      "run 'pip install -e .' or unset VOL_BACKEND")

impl = _pure if (_forced == "pure" or _core is None) else _core


def available_backends():
    names = ["pure"]
    if _core is not None:
        names.append("compiled")
    return names


def get_backend(name):
    if name == "pure":
        return _pure
    if name == "compiled":
        if _core is None:
            raise ImportError("compiled kernel core is not built")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def backend_name():
    return impl.BACKEND


@contextlib.contextmanager
def forced(name):
    """Temporarily switch the active backend (test/benchmark hook)."""
    global impl
    prev = impl
    impl = get_backend(name)
    try:
        yield impl
    finally:
        impl = prev
