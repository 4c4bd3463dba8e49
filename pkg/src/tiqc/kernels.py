"""Kernel backend selection.

The compiled extension is used when importable; setting ``TIQC_PURE_PYTHON=1``
forces the numpy fallback. Both expose the same in-place functions.
"""

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"
if not os.environ.get("TIQC_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python' or None=active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


apply_1q = _impl.apply_1q
apply_z_phases = _impl.apply_z_phases
apply_popcount_phase = _impl.apply_popcount_phase
excited_population = _impl.excited_population
