"""Numerical verification of hypergeometric qKZ solutions at |q| = 1.

Subpackages cover the double sine function, the modular-pair quantum
algebra (R-matrices and the boundary operator K), the hypergeometric
pairing integrals, and the closed determinant formula they combine into.
"""

__version__ = "0.1.0"
