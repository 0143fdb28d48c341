"""Backend selection for the integration kernels.

The compiled ``_ckernels`` extension is used when it has been built; the
pure-Python ``_pykernels`` module is the fallback.  Setting the environment
variable ``WSLIP_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

if os.environ.get("WSLIP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

stance_accel = _impl.stance_accel
reduced_accel = _impl.reduced_accel
rk4_stance = _impl.rk4_stance
rk4_reduced_poly = _impl.rk4_reduced_poly


def backends():
    """Return the importable backend modules keyed by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
