"""Hot numeric kernels with two interchangeable backends.

The numba-compiled backend is used when available; setting the environment
variable ``SHAPEFORGE_NUMBA=0`` (before import) forces the pure-numpy
fallback.  ``python -m shapeforge.benchmarks`` times one against the other.
"""

import os

from .mc_tables import EDGE_TABLE, TRI_COUNTS, TRI_TABLE

_flag = os.environ.get("SHAPEFORGE_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

if _want_numba:
    try:
        from . import numba_impl as _impl

        NUMBA_ENABLED = True
    except ImportError:
        from . import numpy_impl as _impl

        NUMBA_ENABLED = False
else:
    from . import numpy_impl as _impl

    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

min_sqdist_to_triangles = _impl.min_sqdist_to_triangles
tri_sqdist_pairs = _impl.tri_sqdist_pairs
ray_crossings = _impl.ray_crossings
winding_numbers = _impl.winding_numbers
emit_mc_triangles = _impl.emit_mc_triangles
rasterize_triangles = _impl.rasterize_triangles
nn_sqdist = _impl.nn_sqdist
nn_sqdist_grid = _impl.nn_sqdist_grid

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "EDGE_TABLE",
    "TRI_TABLE",
    "TRI_COUNTS",
    "min_sqdist_to_triangles",
    "tri_sqdist_pairs",
    "ray_crossings",
    "winding_numbers",
    "emit_mc_triangles",
    "rasterize_triangles",
    "nn_sqdist",
    "nn_sqdist_grid",
]
