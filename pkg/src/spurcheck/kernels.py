"""Backend selection for the hot kernels.

The compiled extension is used when importable; ``SPURCHECK_PURE=1`` in
the environment forces the numpy fallback. ``set_backend`` switches at
runtime (tests and the benchmark use it to compare both paths).
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("SPURCHECK_PURE", "") not in ("", "0") or _compiled is None:
    _impl = _fallback
    BACKEND = "python"
else:
    _impl = _compiled
    BACKEND = "compiled"


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    previous = BACKEND
    _impl = _BACKENDS[name]
    BACKEND = name
    return previous


def kendall_counts(x, y):
    return _impl.kendall_counts(x, y)


def arma_filter(phi, theta, p0, data):
    return _impl.arma_filter(phi, theta, p0, data)


def loess(x, y, span):
    return _impl.loess(x, y, span)
