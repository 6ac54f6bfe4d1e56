"""Operator inference from trajectory data, with and without re-projection.

Re-projection sampling alternates a single full-model time step with a
projection onto the reduced space, so the sampled sequence obeys exactly the
Markovian reduced dynamics.  Fitting operators to such data by least squares
recovers the intrusive Galerkin operators whenever the recovery certificate
holds: enough columns (K >= p + sum_i n_i) and a full-rank data matrix.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import fom as _fom
from .polytensor import compressed_dim, compressed_power_matrix
from .rom import PolynomialModel
from .subspace import Basis, basis_matrix, pod_basis

RANK_TOL = 1e-12  # singular values below RANK_TOL * sigma_1 do not count as rank
MEMBERSHIP_TOL = 1e-10  # relative residual allowed for x0 in span(V)


@dataclass(frozen=True)
class DataMatrix:
    """Stacked blocks [X; X^2; ...; X^ell; U] of shape (p + sum n_i, K).

    `source` records whether the states came from plain projection of a full
    trajectory or from re-projection sampling.
    """

    matrix: np.ndarray
    reduced_dim: int
    degree: int
    input_dim: int
    source: str = "projected"

    def __post_init__(self):
        if self.source not in ("projected", "re-projected"):
            raise ValueError(f"unknown data source {self.source!r}")
        rows = self.input_dim + sum(
            compressed_dim(self.reduced_dim, i) for i in range(1, self.degree + 1)
        )
        if self.matrix.shape[0] != rows:
            raise ValueError(f"data matrix must have {rows} rows, got {self.matrix.shape[0]}")

    @property
    def num_columns(self):
        return self.matrix.shape[1]

    @property
    def required_columns(self):
        """Column count demanded by the exact-recovery condition."""
        return self.matrix.shape[0]


@dataclass(frozen=True)
class RecoveryCertificate:
    """Checkable conditions under which least squares returns the intrusive
    operators: enough data columns and a full-rank data matrix."""

    num_columns: int
    required_columns: int
    numerical_rank: int
    condition_number: float
    satisfied: bool
    singular_values: np.ndarray = None


def reproject_sample(model, V, x0, U=None, num_steps=None):
    """Sample a trajectory of the exactly-Markovian reduced dynamics.

    Starting from x0 (which must lie in span(V) up to MEMBERSHIP_TOL), each
    iteration queries the full model for a single time step at the lifted
    current reduced state and projects the result back:

        xbar_{k+1} = V^T f(V xbar_k, u_k).

    Returns a reduced-dimension Trajectory holding xbar_0 .. xbar_K; its
    X / Y views are the regression data.  Divergence mid-sampling yields a
    partial trajectory with the flag set, as in `fom.simulate`.
    """
    M = basis_matrix(V)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.state_dim,) or M.shape[0] != model.state_dim:
        raise ValueError("x0 and basis must match the model's state dimension")
    z0 = M.T @ x0
    residual = np.linalg.norm(x0 - M @ z0)
    if residual > MEMBERSHIP_TOL * (1.0 + np.linalg.norm(x0)):
        raise ValueError(
            f"x0 lies outside span(V): relative residual {residual:.2e}"
        )
    U = _fom._input_columns(model, U, num_steps)
    if num_steps is None:
        num_steps = U.shape[1] if U is not None else 0

    def reduced_step(z, u):
        return M.T @ model.step(M @ z, u)

    return _fom._run(reduced_step, M.shape[1], z0, U, num_steps)


def assemble_data_matrix(states, U, degree, source="projected"):
    """Stack compressed state powers and inputs into a data matrix.

    `states` holds the regression inputs x_0 .. x_{K-1} (n, K); U holds the
    matching input columns (p, K) or None.  Blocks are stacked in the order
    X, X^2, ..., X^ell, U.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise ValueError(f"states must be 2-D, got shape {states.shape}")
    if not np.isfinite(states).all():
        raise ValueError("states must be finite")
    blocks = [compressed_power_matrix(states, i) for i in range(1, degree + 1)]
    p = 0
    if U is not None:
        if isinstance(U, _fom.InputTrajectory):
            U = U.inputs
        U = np.asarray(U, dtype=float)
        if U.shape[1] != states.shape[1]:
            raise ValueError(
                f"states have {states.shape[1]} columns but U has {U.shape[1]}"
            )
        blocks.append(U)
        p = U.shape[0]
    return DataMatrix(
        matrix=np.vstack(blocks),
        reduced_dim=states.shape[0],
        degree=degree,
        input_dim=p,
        source=source,
    )


def concat_trajectories(pieces):
    """Concatenate (trajectory, inputs) pieces into one (X, Y, U) data set.

    Each piece is a pair (states, U) where states is a Trajectory or an
    (n, K_j + 1) array of consecutive states and U has at least K_j input
    columns (None for input-free systems).  The X/Y pairing is preserved per
    piece; no transition across piece boundaries is fabricated.
    """
    if not pieces:
        raise ValueError("no pieces to concatenate")
    xs, ys, us = [], [], []
    for states, U in pieces:
        if isinstance(states, _fom.Trajectory):
            states = states.states
        states = np.asarray(states, dtype=float)
        k = states.shape[1] - 1
        xs.append(states[:, :-1])
        ys.append(states[:, 1:])
        if U is not None:
            if isinstance(U, _fom.InputTrajectory):
                U = U.inputs
            us.append(np.asarray(U, dtype=float)[:, :k])
    dims = {x.shape[0] for x in xs}
    if len(dims) != 1:
        raise ValueError(f"pieces disagree in state dimension: {sorted(dims)}")
    if us and len(us) != len(xs):
        raise ValueError("either all pieces carry inputs or none do")
    X = np.hstack(xs)
    Y = np.hstack(ys)
    U = np.hstack(us) if us else None
    return X, Y, U


def certify(data):
    """Recovery certificate of a data matrix (column count, rank, conditioning)."""
    s = la.svdvals(data.matrix)
    return _certificate(s, data.num_columns, data.required_columns)


def _certificate(singular_values, num_columns, required):
    s = np.asarray(singular_values, dtype=float)
    rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if rank == 0:
        cond = float("inf")
    else:
        cond = float((s[0] / s[rank - 1]) ** 2)
    return RecoveryCertificate(
        num_columns=num_columns,
        required_columns=required,
        numerical_rank=rank,
        condition_number=cond,
        satisfied=bool(num_columns >= required and rank == required),
        singular_values=s,
    )


def infer_operators(data, Y):
    """Least-squares operator fit min ||D^T O^T - Y^T||_F.

    Solved through an SVD-based rank-revealing factorization (never the
    normal equations, whose condition number is squared).  A rank-deficient
    data matrix yields the minimum-norm solution together with an
    unsatisfied certificate; the certificate is always attached, so silent
    bad fits cannot occur.

    Returns (model, residual, certificate) where residual is the Frobenius
    norm of the regression misfit.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != data.reduced_dim:
        raise ValueError(
            f"Y must have shape ({data.reduced_dim}, K), got {Y.shape}"
        )
    if Y.shape[1] != data.num_columns:
        raise ValueError(
            f"Y has {Y.shape[1]} columns, data matrix has {data.num_columns}"
        )
    D = data.matrix
    solution, _, _, s = la.lstsq(D.T, Y.T, cond=RANK_TOL, lapack_driver="gelsd")
    O = solution.T
    residual = float(np.linalg.norm(D.T @ O.T - Y.T))
    certificate = _certificate(s, data.num_columns, data.required_columns)

    n = data.reduced_dim
    operators, start = [], 0
    for i in range(1, data.degree + 1):
        ni = compressed_dim(n, i)
        operators.append(O[:, start : start + ni])
        start += ni
    B = O[:, start:] if data.input_dim else None
    provenance = "inferred-reprojected" if data.source == "re-projected" else "inferred-plain"
    model = PolynomialModel(operators=tuple(operators), input_matrix=B, provenance=provenance)
    return model, residual, certificate


def learn_with_reprojection(
    fom_factory,
    parameters,
    initial_conditions,
    input_sets,
    nbar,
    reproj_horizon=None,
    snapshot_stride=1,
    basis_input_sets=None,
):
    """End-to-end pipeline: simulate, POD, re-project, concatenate, infer.

    For each parameter the full model is simulated once per input trajectory;
    the POD basis of dimension `nbar` is cut from all simulated states; each
    (parameter, input) pair is then re-sampled with re-projection (optionally
    only for the first `reproj_horizon` steps, which is cheaper) and the
    per-parameter concatenated data feed one least-squares problem each.

    `snapshot_stride` thins the snapshot matrix column-wise before the POD
    (stride 1 keeps everything); recovery does not depend on how the basis
    was obtained, so thinning trades basis quality for memory only.  When
    `basis_input_sets` is given, those inputs drive the basis-building
    simulations while `input_sets` drive the re-projection sampling (the 2-D
    benchmark uses one long trajectory per parameter for the basis but many
    short ones for re-projection).

    Returns (basis, models, certificates), one model and one certificate per
    parameter.  Divergence during sampling shortens the affected data piece
    and eventually surfaces as an unsatisfied certificate rather than an
    exception.
    """
    parameters = list(parameters)
    if not (len(parameters) == len(initial_conditions) == len(input_sets)):
        raise ValueError("parameters, initial_conditions, and input_sets must align")
    if basis_input_sets is None:
        basis_input_sets = input_sets
    elif len(basis_input_sets) != len(parameters):
        raise ValueError("basis_input_sets must align with parameters")

    models = [fom_factory(mu) for mu in parameters]
    columns = []
    for model, x0, inputs in zip(models, initial_conditions, basis_input_sets):
        if isinstance(x0, (list, tuple)):  # per-piece starts apply to re-projection
            x0 = x0[0]
        for U in inputs:
            traj = _fom.simulate(model, x0, U)
            # copy so the full trajectory can be freed immediately
            columns.append(traj.X[:, ::snapshot_stride].copy())
    basis = pod_basis(np.hstack(columns), nbar)
    del columns

    learned, certificates = [], []
    for model, x0, inputs in zip(models, initial_conditions, input_sets):
        data, Y = reprojected_data(model, basis, x0, inputs, reproj_horizon)
        fitted, _, certificate = infer_operators(data, Y)
        fitted = PolynomialModel(
            operators=fitted.operators,
            input_matrix=fitted.input_matrix,
            provenance=fitted.provenance,
            parameter=model.parameter,
        )
        learned.append(fitted)
        certificates.append(certificate)
    return basis, learned, certificates


def reprojected_data(model, basis, x0, inputs, reproj_horizon=None):
    """Re-projected regression data for one parameter: (DataMatrix, Y).

    Samples one re-projected piece per input trajectory (optionally capped at
    `reproj_horizon` steps), concatenates them, and assembles the stacked
    data matrix tagged as re-projected.  `x0` is either one initial condition
    shared by all pieces or a sequence with one start per piece (each must
    lie in span(V); varied starts enrich the data when trajectories from a
    single start leave monomial directions unexplored).
    """
    starts = (
        list(x0)
        if isinstance(x0, (list, tuple))
        else [np.asarray(x0, dtype=float)] * len(inputs)
    )
    if len(starts) != len(inputs):
        raise ValueError("one initial condition per input trajectory required")
    pieces = []
    for x0_piece, U in zip(starts, inputs):
        if isinstance(U, _fom.InputTrajectory):
            U = U.inputs
        U = np.asarray(U, dtype=float)
        horizon = U.shape[1] if reproj_horizon is None else min(reproj_horizon, U.shape[1])
        bar = reproject_sample(model, basis, x0_piece, U[:, :horizon])
        pieces.append((bar, U[:, :horizon]))
    X, Y, U_all = concat_trajectories(pieces)
    data = assemble_data_matrix(X, U_all, model.degree, source="re-projected")
    return data, Y
