"""Reduced polynomial models: Galerkin projection, simulation, truncation,
parameter interpolation, and the CSV bundle format."""

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import fom as _fom
from .polytensor import (
    ORDERING_CONVENTION,
    compressed_dim,
    multiset_indices,
    multiplicity,
    truncation_mask,
)
from .subspace import basis_matrix

PROVENANCES = ("intrusive", "inferred-reprojected", "inferred-plain", "interpolated")


@dataclass(frozen=True)
class PolynomialModel:
    """Reduced system x_{k+1} = sum_i A_i x_k^i + B u_k on compressed powers.

    `operators[i-1]` has shape (n, compressed_dim(n, i)); `provenance` records
    how the model was obtained (one of PROVENANCES).
    """

    operators: tuple
    input_matrix: np.ndarray = None
    provenance: str = "intrusive"
    parameter: float = None

    def __post_init__(self):
        object.__setattr__(
            self, "operators", tuple(np.asarray(A, dtype=float) for A in self.operators)
        )
        if self.input_matrix is not None:
            object.__setattr__(self, "input_matrix", np.asarray(self.input_matrix, float))
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        n = self.operators[0].shape[0]
        for i, A in enumerate(self.operators, start=1):
            expected = (n, compressed_dim(n, i))
            if A.shape != expected:
                raise ValueError(f"degree-{i} operator must have shape {expected}, got {A.shape}")
            if not np.isfinite(A).all():
                raise ValueError(f"degree-{i} operator has non-finite entries")
        if self.input_matrix is not None:
            if self.input_matrix.shape[0] != n:
                raise ValueError("input matrix row count must equal the reduced dimension")
            if not np.isfinite(self.input_matrix).all():
                raise ValueError("input matrix has non-finite entries")

    @property
    def degree(self):
        return len(self.operators)

    @property
    def reduced_dim(self):
        return self.operators[0].shape[0]

    @property
    def input_dim(self):
        return 0 if self.input_matrix is None else self.input_matrix.shape[1]

    def step(self, z, u=None):
        """One reduced time step."""
        z = np.asarray(z, dtype=float)
        out = self.operators[0] @ z
        for i in range(2, self.degree + 1):
            out += self.operators[i - 1] @ np.prod(z[multiset_indices(z.size, i)], axis=1)
        if self.input_matrix is not None:
            out += self.input_matrix @ np.atleast_1d(np.asarray(u, dtype=float))
        return out

    def stacked(self):
        """The block matrix [A_1, ..., A_ell, B]."""
        blocks = list(self.operators)
        if self.input_matrix is not None:
            blocks.append(self.input_matrix)
        return np.hstack(blocks)


def galerkin_project(model, V):
    """Intrusive reduced operators of a full-order model on span(V).

    Column alpha = (a_1, ..., a_i) of the degree-i reduced operator is
    multiplicity(alpha) * V^T L_i(v_{a_1}, ..., v_{a_i}), which needs only
    compressed_dim(n, i) applications of the model's multilinear forms and
    never materializes a full Kronecker-space operator.
    """
    M = basis_matrix(V)
    if M.shape[0] != model.state_dim:
        raise ValueError(
            f"basis has {M.shape[0]} rows, model state dimension is {model.state_dim}"
        )
    n = M.shape[1]
    operators = []
    for i in range(1, model.degree + 1):
        idx = multiset_indices(n, i)
        A = np.empty((n, idx.shape[0]))
        for col, alpha in enumerate(idx):
            w = model.forms[i - 1](*(M[:, a] for a in alpha))
            A[:, col] = multiplicity(alpha) * (M.T @ w)
        operators.append(A)
    B = None if model.input_matrix is None else M.T @ model.input_matrix
    return PolynomialModel(
        operators=tuple(operators),
        input_matrix=B,
        provenance="intrusive",
        parameter=model.parameter,
    )


def reduced_simulate(model, z0, U=None, num_steps=None):
    """Time step a reduced model; same conventions as `fom.simulate`."""
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (model.reduced_dim,):
        raise ValueError(f"z0 must have shape ({model.reduced_dim},), got {z0.shape}")
    if isinstance(U, _fom.InputTrajectory):
        U = U.inputs
    if model.input_dim == 0:
        U = None
    else:
        if U is None:
            raise ValueError("model has inputs; provide U")
        U = np.asarray(U, dtype=float)
        if U.shape[0] != model.input_dim:
            raise ValueError(f"U must have {model.input_dim} rows, got {U.shape[0]}")
    if num_steps is None:
        num_steps = U.shape[1] if U is not None else 0

    n = model.reduced_dim
    idx = [multiset_indices(n, i) for i in range(2, model.degree + 1)]
    ops = model.operators
    B = model.input_matrix
    states = np.empty((n, num_steps + 1))
    states[:, 0] = z0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(num_steps):
            z = states[:, k]
            x = ops[0] @ z
            for A, ix in zip(ops[1:], idx):
                x += A @ np.prod(z[ix], axis=1)
            if B is not None:
                x += B @ U[:, k]
            if not np.isfinite(x).all():
                return _fom.Trajectory(states=states[:, : k + 1].copy(), diverged_at=k + 1)
            states[:, k + 1] = x
    return _fom.Trajectory(states=states)


def truncate(model, new_dim):
    """Restrict a reduced model to its leading `new_dim` modes.

    Keeps the first new_dim rows of every operator and exactly the columns
    whose monomials use only the surviving modes; the surviving columns are
    already in canonical order over new_dim modes.
    """
    n = model.reduced_dim
    if not 1 <= new_dim <= n:
        raise ValueError(f"need 1 <= new_dim <= {n}, got {new_dim}")
    operators = tuple(
        A[:new_dim][:, truncation_mask(n, i, new_dim)]
        for i, A in enumerate(model.operators, start=1)
    )
    B = None if model.input_matrix is None else model.input_matrix[:new_dim]
    return PolynomialModel(
        operators=operators,
        input_matrix=B,
        provenance=model.provenance,
        parameter=model.parameter,
    )


def interpolate(parameters, models, target):
    """Entrywise spline interpolation of reduced operators over a scalar grid.

    Natural cubic splines through each operator entry (linear when only two
    parameter values are given); `target` must lie inside the parameter range,
    extrapolation is refused.
    """
    parameters = np.asarray(parameters, dtype=float)
    if parameters.ndim != 1 or parameters.size < 2:
        raise ValueError("need at least two scalar parameter values")
    if np.unique(parameters).size != parameters.size:
        raise ValueError("parameter values must be distinct")
    if len(models) != parameters.size:
        raise ValueError("one model per parameter value required")
    shapes = {(m.degree, m.reduced_dim, m.input_dim) for m in models}
    if len(shapes) != 1:
        raise ValueError(f"models disagree in (degree, n, p): {sorted(shapes)}")
    if not parameters.min() <= target <= parameters.max():
        raise ValueError(
            f"target {target} outside the sampled range "
            f"[{parameters.min()}, {parameters.max()}]; extrapolation is refused"
        )

    order = np.argsort(parameters)
    grid = parameters[order]
    table = np.array([models[j].stacked() for j in order])
    if grid.size == 2:
        w = (grid[1] - target) / (grid[1] - grid[0])
        stacked = w * table[0] + (1.0 - w) * table[1]
    else:
        stacked = CubicSpline(grid, table, axis=0, bc_type="natural")(target)

    template = models[0]
    operators, start = [], 0
    for i in range(1, template.degree + 1):
        ni = compressed_dim(template.reduced_dim, i)
        operators.append(stacked[:, start : start + ni])
        start += ni
    B = stacked[:, start:] if template.input_dim else None
    return PolynomialModel(
        operators=tuple(operators),
        input_matrix=B,
        provenance="interpolated",
        parameter=float(target),
    )


# ---------------------------------------------------------------------------
# CSV bundle serialization
# ---------------------------------------------------------------------------

MANIFEST_SCHEMA = "opinfer-model-v1"


def save_model_bundle(model, directory, seed=None):
    """Write a model as one CSV per operator plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    for i, A in enumerate(model.operators, start=1):
        np.savetxt(os.path.join(directory, f"A{i}.csv"), A, fmt="%.17g", delimiter=",")
    if model.input_matrix is not None:
        np.savetxt(os.path.join(directory, "B.csv"), model.input_matrix, fmt="%.17g", delimiter=",")
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "ordering": ORDERING_CONVENTION,
        "degree": model.degree,
        "reduced_dim": model.reduced_dim,
        "input_dim": model.input_dim,
        "provenance": model.provenance,
        "parameter": None if model.parameter is None else float(model.parameter),
        "seed": seed,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model_bundle(directory):
    """Read a model bundle written by `save_model_bundle`."""
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unknown bundle schema {manifest.get('schema')!r}")
    if manifest.get("ordering") != ORDERING_CONVENTION:
        raise ValueError(f"bundle uses ordering {manifest.get('ordering')!r}")
    n = manifest["reduced_dim"]
    operators = []
    for i in range(1, manifest["degree"] + 1):
        A = np.loadtxt(os.path.join(directory, f"A{i}.csv"), delimiter=",", ndmin=2)
        operators.append(A.reshape(n, compressed_dim(n, i)))
    B = None
    if manifest["input_dim"]:
        B = np.loadtxt(os.path.join(directory, "B.csv"), delimiter=",", ndmin=2)
        B = B.reshape(n, manifest["input_dim"])
    return PolynomialModel(
        operators=tuple(operators),
        input_matrix=B,
        provenance=manifest["provenance"],
        parameter=manifest["parameter"],
    )
