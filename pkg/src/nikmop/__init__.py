"""Verified numerical laboratory for the multiple orthogonal polynomials of
the sinh/cosh Nikishin pair: exact rescaled polynomials, the constrained
vector equilibrium problem, the genus-0 spectral curve and global
parametrix, and the finite-n Christoffel-Darboux kernel with its limit laws.
"""

from .numerics import PrecCtx, QQ, MonicPolynomial

__all__ = ["PrecCtx", "QQ", "MonicPolynomial"]
__version__ = "0.1.0"
