"""Hot-kernel dispatch.

The numeric inner loops (patch unfold/fold for convolutions, pooling,
bilinear resize, 3x3 correlation) exist twice: a numba-jitted version and
a pure-numpy fallback. ``DUCA_BACKEND`` selects the path:

* ``auto`` (default): numba if it imports, else numpy
* ``numba``: require numba, fail loudly otherwise
* ``numpy``: force the fallback

``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os

from ..errors import ConfigurationError

_choice = os.environ.get("DUCA_BACKEND", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ConfigurationError(
        f"DUCA_BACKEND must be one of auto/numba/numpy, got {_choice!r}"
    )

if _choice == "numpy":
    from . import numpy_impl as _impl
else:
    # quiet the threading-layer probe on machines without a recent TBB
    os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
    try:
        from . import numba_impl as _impl
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_impl as _impl

im2col = _impl.im2col
col2im = _impl.col2im
maxpool2x2 = _impl.maxpool2x2
maxpool2x2_backward = _impl.maxpool2x2_backward
bilinear_resize = _impl.bilinear_resize
correlate3 = _impl.correlate3


def backend_name():
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _impl.NAME
