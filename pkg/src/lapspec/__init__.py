"""lapspec: spectral data of Fourier-Laplace transforms on the affine line.

Exact layer: rational/Laurent linear algebra, meromorphic connections with
V-filtrations and formal decompositions, Brieskorn lattices and spectral
polynomials.  Numeric layer: rescaling of harmonic data, Birkhoff
factorization on the circle, and verification of the rescaling limits.
"""

__version__ = "0.1.0"
