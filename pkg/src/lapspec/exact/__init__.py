"""Exact rational arithmetic, Laurent-polynomial matrices and lattices."""

from .linalg import (Q, Subspace, charpoly, kernel_basis, mat_inv, mat_mul,
                     mat_vec, qmat, rational_eigendata, rational_roots, rref,
                     solve_linear, subspace_intersect)
from .laurent import LaurentMatrix, LaurentPoly, lp
from .lattice import Lattice, Window, poly_hnf_columns, stabilized, window_slice

__all__ = [
    "Q", "Subspace", "charpoly", "kernel_basis", "mat_inv", "mat_mul",
    "mat_vec", "qmat", "rational_eigendata", "rational_roots", "rref",
    "solve_linear", "subspace_intersect", "LaurentMatrix", "LaurentPoly",
    "lp", "Lattice", "Window", "poly_hnf_columns", "stabilized",
    "window_slice",
]
