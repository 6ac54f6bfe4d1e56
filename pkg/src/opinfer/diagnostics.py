"""Error metrics, closure error, data conditioning, and the Mori-Zwanzig
split of projected linear dynamics."""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import fom as _fom
from .opinf import DataMatrix
from .subspace import basis_matrix, lift, orthonormal_complement

UNDERFLOW_GUARD = 1e-300


def _states(traj):
    return traj.states if isinstance(traj, _fom.Trajectory) else np.asarray(traj, dtype=float)


def closure_error(projected, reduced):
    """Frobenius norm of the gap between a projected and a reduced trajectory.

    Non-zero in general: projected full dynamics are non-Markovian in the
    reduced space, the reduced model is Markovian.  Zero (to round-off) when
    the first argument is a re-projected trajectory.
    """
    P, R = _states(projected), _states(reduced)
    if P.shape != R.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {R.shape}")
    return float(np.linalg.norm(P - R))


def closure_error_per_step(projected, reduced):
    """2-norm of the per-column gap, one value per time step."""
    P, R = _states(projected), _states(reduced)
    if P.shape != R.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {R.shape}")
    return np.linalg.norm(P - R, axis=0)


ErrorSummary = namedtuple("ErrorSummary", ["value", "used", "excluded"])


def _is_diverged(reduced, expected_columns):
    if reduced is None:
        return True
    if isinstance(reduced, _fom.Trajectory):
        if reduced.diverged:
            return True
        reduced = reduced.states
    return np.asarray(reduced).shape[1] < expected_columns


def avg_rel_state_error(full_trajectories, reduced_trajectories, V):
    """Average relative state error (1/m) sum ||V Z_i - X_i||_F / ||X_i||_F.

    Pairs whose reduced trajectory diverged (divergence flag set, or fewer
    columns than the full trajectory) are excluded from the average and
    counted separately; the paper's plots show them as missing values.
    Returns an ErrorSummary(value, used, excluded); value is NaN if every
    pair diverged.
    """
    return _paired_metric(
        full_trajectories,
        reduced_trajectories,
        lambda X, Z: np.linalg.norm(lift(V, Z) - X) / _nonzero_norm(X),
    )


def rel_trajectory_difference(reduced_trajectories, reference_trajectories):
    """Average relative difference (1/m) sum ||Z_i - Xt_i||_F / ||Xt_i||_F.

    Measures how far learned-model trajectories are from the intrusive
    reduced model's trajectories; divergence handling as in
    `avg_rel_state_error`.
    """
    return _paired_metric(
        reference_trajectories,
        reduced_trajectories,
        lambda Xt, Z: np.linalg.norm(Z - Xt) / _nonzero_norm(Xt),
    )


def _nonzero_norm(X):
    norm = np.linalg.norm(X)
    if norm == 0.0:
        raise ValueError("reference trajectory has zero norm")
    return norm


def _paired_metric(references, candidates, pair_error):
    if len(references) == 0:
        raise ValueError("empty trajectory list")
    if len(references) != len(candidates):
        raise ValueError("trajectory lists must have equal length")
    values, excluded = [], 0
    for ref, cand in zip(references, candidates):
        R = _states(ref)
        if _is_diverged(cand, R.shape[1]):
            excluded += 1
            continue
        C = _states(cand)
        if C.shape[1] != R.shape[1]:
            raise ValueError(f"column mismatch: {C.shape[1]} vs {R.shape[1]}")
        values.append(pair_error(R, C))
    value = float(np.mean(values)) if values else float("nan")
    return ErrorSummary(value=value, used=len(values), excluded=excluded)


def condition_number(D):
    """cond_2 of D^T D, computed as (sigma_max / sigma_min)^2 of D itself.

    Works from the singular values of D and never forms D^T D.  Returns the
    +inf sentinel when the smallest singular value underflows.
    """
    matrix = D.matrix if isinstance(D, DataMatrix) else np.asarray(D, dtype=float)
    if matrix.size == 0 or not np.any(matrix):
        raise ValueError("data matrix is zero or empty")
    s = la.svdvals(matrix)
    if s[-1] < UNDERFLOW_GUARD:
        return float("inf")
    return float((s[0] / s[-1]) ** 2)


@dataclass(frozen=True)
class MZDecomposition:
    """Split of a projected linear trajectory into Markovian, memory
    (non-Markovian), and initial-condition terms.

    Column k of each sequence is its contribution to the projected state at
    time k + 1, so markovian + memory + initial equals the projected
    trajectory columns x_1 .. x_K.  The four blocks are the restrictions of
    the system matrix to span(V) and its orthogonal complement.
    """

    markovian: np.ndarray
    memory: np.ndarray
    initial: np.ndarray
    block_vv: np.ndarray  # V^T  A V
    block_vc: np.ndarray  # V^T  A Vperp
    block_cv: np.ndarray  # Vperp^T A V
    block_cc: np.ndarray  # Vperp^T A Vperp

    def total(self):
        return self.markovian + self.memory + self.initial


def mori_zwanzig_decompose(A1, V, x0, num_steps):
    """Decompose the projected dynamics of x_{k+1} = A1 x_k over span(V).

    Propagates the coupled recurrences for the in-space component, the memory
    accumulator, and the complement flow; no explicit matrix power is ever
    formed.  With a full basis (n = N) the complement is empty and the memory
    and initial sequences are identically zero.
    """
    A1 = np.asarray(A1, dtype=float)
    if A1.ndim != 2 or A1.shape[0] != A1.shape[1]:
        raise ValueError(f"A1 must be square, got shape {A1.shape}")
    M = basis_matrix(V)
    if M.shape[0] != A1.shape[0]:
        raise ValueError("basis rows must match the system dimension")
    C = orthonormal_complement(M)
    a_vv = M.T @ A1 @ M
    a_vc = M.T @ A1 @ C
    a_cv = C.T @ A1 @ M
    a_cc = C.T @ A1 @ C

    x0 = np.asarray(x0, dtype=float)
    xpar = M.T @ x0
    mem_acc = np.zeros(C.shape[1])  # sum_{i<k} (A_cc)^{k-1-i} A_cv xpar_i
    ini_acc = C.T @ x0              # (A_cc)^k xperp_0

    markovian = np.empty((M.shape[1], num_steps))
    memory = np.empty((M.shape[1], num_steps))
    initial = np.empty((M.shape[1], num_steps))
    for k in range(num_steps):
        markovian[:, k] = a_vv @ xpar
        memory[:, k] = a_vc @ mem_acc
        initial[:, k] = a_vc @ ini_acc
        xpar_next = markovian[:, k] + memory[:, k] + initial[:, k]
        mem_acc = a_cc @ mem_acc + a_cv @ xpar
        ini_acc = a_cc @ ini_acc
        xpar = xpar_next
    return MZDecomposition(
        markovian=markovian,
        memory=memory,
        initial=initial,
        block_vv=a_vv,
        block_vc=a_vc,
        block_cv=a_cv,
        block_cc=a_cc,
    )
