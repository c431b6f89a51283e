"""Hot loops, compiled when available.

The Cython extension ``rotnum._kernels`` is imported if it was built; otherwise
the numpy versions in ``rotnum._kernels_py`` are used. Set ``ROTNUM_PURE=1`` to
force the fallback (used by the test-suite and the benchmark).
"""

import os

from . import _kernels_py as pure

try:
    if os.environ.get("ROTNUM_PURE"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as compiled
except ImportError:
    compiled = None

backend = compiled if compiled is not None else pure
BACKEND_NAME = "cython" if compiled is not None else "python"

matrix_sequence_orbit = backend.matrix_sequence_orbit
matrix_power_orbits = backend.matrix_power_orbits
sine_orbit = backend.sine_orbit
angle_heun = backend.angle_heun
heun_windows = backend.heun_windows

__all__ = [
    "BACKEND_NAME",
    "angle_heun",
    "compiled",
    "heun_windows",
    "matrix_power_orbits",
    "matrix_sequence_orbit",
    "pure",
    "sine_orbit",
]
