"""Spectral toolkit for a time-fractional stochastic heat equation.

Modules
-------
mlf       Mittag-Leffler evaluation, Simon envelopes, L1 Caputo scheme
domains   Dirichlet eigensystems on intervals, boxes, disks and annuli
spectrum  fractional eigenvalue transform, Weyl and summability diagnostics
kernels   Green and covariance kernels, exact variograms
simulate  seeded Gaussian ensembles
analyze   slope fits, regularity bounds, sample-path modulus
cli       JSON-configured batch runs
"""

__version__ = "0.1.0"

from .domains import DomainSpec, EigenSystem, build_eigensystem  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .mlf import TimeGrid, caputo_l1, eval_mlf, mlf_envelope  # noqa: E402
from .spectrum import FracParams, SpectralTruncation, build_truncation  # noqa: E402

__all__ = [
    "DomainSpec",
    "EigenSystem",
    "FracParams",
    "SpectralTruncation",
    "TimeGrid",
    "build_eigensystem",
    "build_truncation",
    "caputo_l1",
    "eval_mlf",
    "mlf_envelope",
]
