"""Kernel backend selection.

The compiled extension (``_speedups``, built from Cython) is preferred; the
pure-Python reference (``_ref``) is the fallback.  Set ``NDECERT_KERNELS`` to
``python`` or ``compiled`` to force a backend.
"""

import os

from . import opcodes  # noqa: F401  (re-exported for callers)

_forced = os.environ.get("NDECERT_KERNELS")

if _forced == "python":
    from . import _ref as _impl
elif _forced == "compiled":
    from . import _speedups as _impl  # raises if the extension is missing
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        from . import _ref as _impl

BACKEND = _impl.BACKEND_NAME
eval_scalar = _impl.eval_scalar
eval_grid = _impl.eval_grid
integrate_loop = _impl.integrate_loop


def get_impl(name):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        from . import _ref
        return _ref
    if name == "compiled":
        from . import _speedups
        return _speedups
    raise ValueError(f"unknown kernel backend {name!r}")
