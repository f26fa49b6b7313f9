"""Small dense matrix operators used by the BEKK model.

vech/vec and the duplication matrix follow the usual convention: vech stacks
the lower triangle column by column, so for a 3x3 matrix the order is
(a11, a21, a31, a22, a32, a33).
"""

import numpy as np

SYMMETRY_RTOL = 1e-10
PD_RTOL = 1e-12


class ShapeError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


class DefinitenessError(ValueError):
    pass


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2D matrix, got shape {M.shape}")
    return M


def _require_square(M):
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")


def is_symmetric(M, rtol=SYMMETRY_RTOL):
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        return False
    scale = max(np.abs(M).max(), 1.0)
    return bool(np.abs(M - M.T).max() <= rtol * scale)


def is_positive_definite(M, rtol=PD_RTOL):
    """Symmetric with smallest eigenvalue above ``rtol * trace``."""
    M = _as_matrix(M)
    if not is_symmetric(M):
        return False
    w = np.linalg.eigvalsh(M)
    return bool(w[0] > rtol * max(np.trace(M), 0.0) and w[0] > 0)


def vec(M):
    """Stack the columns of ``M``."""
    return _as_matrix(M).flatten(order="F")


def unvec(v, rows, cols=None):
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=float).reshape((rows, cols), order="F")


def _tril_indices_colmajor(m):
    # column j contributes rows j..m-1
    rows = [i for j in range(m) for i in range(j, m)]
    cols = [j for j in range(m) for i in range(j, m)]
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def vech(M):
    """Half-vectorization of a symmetric matrix.

    Raises ShapeError for non-square input and SymmetryError when ``M`` is
    not symmetric to within a relative tolerance of 1e-10.
    """
    M = _as_matrix(M)
    _require_square(M)
    if not is_symmetric(M):
        raise SymmetryError("vech requires a symmetric matrix")
    r, c = _tril_indices_colmajor(M.shape[0])
    return M[r, c].copy()


def unvech(v):
    v = np.asarray(v, dtype=float).ravel()
    m = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if m * (m + 1) // 2 != v.size:
        raise ShapeError(f"length {v.size} is not triangular")
    r, c = _tril_indices_colmajor(m)
    M = np.zeros((m, m))
    M[r, c] = v
    M[c, r] = v
    return M


def duplication_matrix(m):
    """Return ``(D, D_plus)`` with vec(A) = D vech(A) and vech(A) = D_plus vec(A).

    ``D`` has shape (m*m, m(m+1)/2) with exactly one unit entry per row and
    ``D_plus = (D'D)^{-1} D'`` is its left pseudoinverse.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    r, c = _tril_indices_colmajor(m)
    D = np.zeros((m * m, r.size))
    for k, (i, j) in enumerate(zip(r, c)):
        D[j * m + i, k] = 1.0
        D[i * m + j, k] = 1.0
    # D'D is diagonal (1 on the diagonal positions, 2 elsewhere)
    D_plus = D.T / np.sum(D, axis=0)[:, None]
    return D, D_plus


def kronecker(A, B):
    return np.kron(_as_matrix(A), _as_matrix(B))


def spectral_radius(M):
    M = _as_matrix(M)
    _require_square(M)
    if M.shape[0] == 1:
        return float(abs(M[0, 0]))
    if is_symmetric(M):
        return float(np.abs(np.linalg.eigvalsh(M)).max())
    return float(np.abs(np.linalg.eigvals(M)).max())


def pd_sqrt(H):
    """Symmetric positive definite square root via the eigendecomposition."""
    H = _as_matrix(H)
    _require_square(H)
    if not is_symmetric(H):
        raise SymmetryError("pd_sqrt requires a symmetric matrix")
    w, V = np.linalg.eigh(H)
    if w[0] <= PD_RTOL * max(np.trace(H), 0.0) or w[0] <= 0:
        raise DefinitenessError(f"matrix is not positive definite (min eigenvalue {w[0]:.3g})")
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)
