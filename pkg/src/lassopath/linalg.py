"""Dense linear-algebra kernel: column extraction, Gram products, and
minimal-norm least squares with a configurable rank cutoff.

Everything here is a pure function of its arguments and deterministic for a
fixed input, which keeps computed kink sequences reproducible.
"""

from __future__ import annotations

import numpy as np

DEFAULT_RANK_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Validate and return a finite 2-d float array (owned copy)."""
    A = np.array(a, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim {A.ndim}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise ValueError(f"matrix dimensions must be positive, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must all be finite")
    return A


def as_vector(v) -> np.ndarray:
    """Validate and return a finite 1-d float array (owned copy)."""
    x = np.array(v, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got ndim {x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector entries must all be finite")
    return x


def index_set(indices, n: int) -> np.ndarray:
    """Normalize `indices` to a strictly increasing int array within [0, n).

    Duplicates and out-of-range entries are construction errors.
    """
    S = np.asarray(list(indices), dtype=int)
    if S.ndim != 1:
        S = S.ravel()
    S = np.sort(S)
    if S.size and (S[0] < 0 or S[-1] >= n):
        raise ValueError(f"index out of range for {n} columns: {S}")
    if S.size > 1 and np.any(np.diff(S) == 0):
        raise ValueError(f"duplicate indices in index set: {S}")
    return S


def columns(A, S) -> np.ndarray:
    """Submatrix of `A` made of the columns listed in `S` (sorted order)."""
    A = np.asarray(A, dtype=float)
    return A[:, index_set(S, A.shape[1])]


def gram(A, S, T) -> np.ndarray:
    """Gram product of two column subsets: A_S^T A_T."""
    A = np.asarray(A, dtype=float)
    return columns(A, S).T @ columns(A, T)


def least_squares_min_norm(G, b, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Minimal-l2-norm minimizer of ||G x - b||_2.

    Uses an SVD-based solve; singular values below `rank_tol` times the
    largest are treated as zero, so rank-deficient systems get the
    pseudoinverse solution.
    """
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    if G.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim {G.ndim}")
    if b.shape != (G.shape[0],):
        raise ValueError(f"shape mismatch: G is {G.shape}, b has shape {b.shape}")
    if G.shape[1] == 0:
        return np.zeros(0)
    x, _, _, _ = np.linalg.lstsq(G, b, rcond=rank_tol)
    return x
