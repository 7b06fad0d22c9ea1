"""Select the compiled core when available, else the pure-Python twin.

Set DROPLETLAB_PURE=1 to force the fallback.
"""
import os

import numpy as np

from . import _core_py

BACKEND = "python"
_impl = _core_py
if os.environ.get("DROPLETLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _core_py


def get_impl(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _core_py
    from . import _core
    return _core


def polyline_min_distance(z, s0, s1, impl=None):
    """Distance from points z to the nearest segment [s0_k, s1_k] (complex input)."""
    m = impl or _impl
    z = np.ascontiguousarray(np.atleast_1d(z), dtype=complex)
    s0 = np.ascontiguousarray(s0, dtype=complex)
    s1 = np.ascontiguousarray(s1, dtype=complex)
    return m.polyline_min_distance(np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag),
                                   np.ascontiguousarray(s0.real), np.ascontiguousarray(s0.imag),
                                   np.ascontiguousarray(s1.real), np.ascontiguousarray(s1.imag))


def potential_values(P, z, impl=None):
    m = impl or _impl
    fam, par = P.core_params()
    z = np.ascontiguousarray(np.atleast_1d(z), dtype=complex)
    return m.potential_values(fam, np.ascontiguousarray(par, dtype=float),
                              np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag))
