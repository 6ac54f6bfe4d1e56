"""POD bases from snapshot matrices and projection onto reduced coordinates."""

import numpy as np
import scipy.linalg as la

RANK_TOL = 1e-13  # singular values below RANK_TOL * sigma_1 do not count as rank


class Basis:
    """Orthonormal reduced basis: columns of `matrix` ordered by singular value.

    `singular_values` keeps the spectrum of the snapshot matrix the basis was
    cut from (all values that the factorization produced, not just the
    leading ones) for truncation diagnostics.
    """

    def __init__(self, matrix, singular_values=None):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] > matrix.shape[0]:
            raise ValueError(f"basis matrix must be tall, got shape {matrix.shape}")
        gram_err = np.abs(matrix.T @ matrix - np.eye(matrix.shape[1])).max()
        if gram_err > 1e-10:
            raise ValueError(f"basis columns not orthonormal (deviation {gram_err:.2e})")
        self.matrix = matrix
        self.singular_values = (
            None if singular_values is None else np.asarray(singular_values, dtype=float)
        )

    @property
    def state_dim(self):
        return self.matrix.shape[0]

    @property
    def reduced_dim(self):
        return self.matrix.shape[1]

    def truncated(self, n):
        """The leading-n-columns sub-basis."""
        if not 1 <= n <= self.reduced_dim:
            raise ValueError(f"need 1 <= n <= {self.reduced_dim}, got {n}")
        return Basis(self.matrix[:, :n], self.singular_values)


def pod_basis(snapshots, n):
    """Leading n left singular vectors of a snapshot matrix.

    A thin SVD of the snapshot matrix itself (not of a Gram matrix) supplies
    the modes; requesting more modes than the numerical rank (singular values
    above RANK_TOL * sigma_1) is an error.  Each column's sign is fixed so
    its largest-magnitude entry is positive, which makes bases reproducible
    across runs.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    if snapshots.ndim != 2:
        raise ValueError(f"snapshots must be 2-D, got shape {snapshots.shape}")
    if not np.isfinite(snapshots).all():
        raise ValueError("snapshots must be finite")
    U, s, _ = la.svd(snapshots, full_matrices=False)
    rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if not 1 <= n <= rank:
        raise ValueError(f"requested {n} modes but numerical rank is {rank}")
    V = U[:, :n].copy()
    for j in range(n):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] = -V[:, j]
    return Basis(V, singular_values=s)


def basis_matrix(V):
    """The plain ndarray behind a Basis (arrays pass through unchanged)."""
    return V.matrix if isinstance(V, Basis) else np.asarray(V, dtype=float)


def project(V, X):
    """Reduced coordinates V^T X of full-dimension columns X."""
    M = basis_matrix(V)
    X = np.asarray(X, dtype=float)
    if X.shape[0] != M.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows, basis has {M.shape[0]}")
    return M.T @ X

def lift(V, Z):
    """Full-dimension reconstruction V Z of reduced columns Z."""
    M = basis_matrix(V)
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != M.shape[1]:
        raise ValueError(f"Z has {Z.shape[0]} rows, basis has {M.shape[1]} columns")
    return M @ Z


def orthonormal_complement(V):
    """Orthonormal basis of the complement of span(V), shape (N, N - n)."""
    M = basis_matrix(V)
    return la.null_space(M.T)


def save_basis_csv(basis, path):
    """Write a basis column-major: row j holds sigma_j followed by mode v_j."""
    sv = basis.singular_values
    with open(path, "w", newline="") as fh:
        fh.write("sigma," + ",".join(f"x{i}" for i in range(basis.state_dim)) + "\n")
        for j in range(basis.reduced_dim):
            s = sv[j] if sv is not None and j < sv.size else float("nan")
            fh.write(",".join(f"{v:.17g}" for v in [s, *basis.matrix[:, j]]) + "\n")


def load_basis_csv(path):
    """Read a basis written by `save_basis_csv`.

    Only the stored leading singular values survive a round trip; the tail of
    the spectrum is a diagnostic of the original snapshot matrix.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Basis(data[:, 1:].T.copy(), singular_values=data[:, 0].copy())
