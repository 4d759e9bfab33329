"""Hot kernels: the compiled extension when built, numpy otherwise."""

import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("NONCUTOFF_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

lattice_offsets = _core_py.lattice_offsets
nsg_pair_sum = _impl.nsg_pair_sum
