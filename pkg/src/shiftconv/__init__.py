"""Numerical toolkit for shifted convolution sums of GL(3) x GL(2) coefficients.

Submodules:
    arith         modular arithmetic, sieves, CRT
    expsums       Kloosterman-type complete sums, Fourier transforms mod q
    coefficients  Hecke eigenvalue streams (tau, symmetric square, tau_3)
    circle        Jutila's circle method kernel and its exact integrals
    spectral      smoothed sums, resonance sups, FFT shift spectra
    voronoi       weight 12 Voronoi summation checks
    optimizer     exact exponent bookkeeping
    acceptance    the acceptance battery
"""

from .arith import DomainError, NotSquarefreeError
from .report import SumReport

__version__ = "0.1.0"

__all__ = ["DomainError", "NotSquarefreeError", "SumReport", "__version__"]
