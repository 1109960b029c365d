"""Spectra, eigenfunction zeros, crossings and Stokes geometry of the PT-symmetric double well
H = hbar^2 p^2 + i (x^3 - x)."""

import os as _os

__version__ = "0.1.0"

# PTWELL_THREADS caps the BLAS/OpenMP pools; it must be set before numpy loads
if _os.environ.get("PTWELL_THREADS"):
    for _k in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_k, _os.environ["PTWELL_THREADS"])

from .errors import PTWellError  # noqa: E402
from .model import PotentialSpec, Rep  # noqa: E402
from .spectral import stabilized_spectrum  # noqa: E402

__all__ = ["PTWellError", "PotentialSpec", "Rep", "stabilized_spectrum", "__version__"]
