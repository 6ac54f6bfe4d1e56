"""Full-order polynomial dynamical systems and the benchmark discretizations.

A full-order model is a time-discrete system

    x_{k+1} = f(x_k, u_k) = sum_i L_i(x_k, ..., x_k) + B u_k

with symmetric multilinear forms L_i of degree i = 1..ell acting on the state
and an input matrix B.  The constructors below build the four benchmark
systems (a random stable linear map, viscous Burgers, Chafee-Infante, and a
2-D diffusion-reaction problem) plus generic random polynomial systems for
testing.  `step` evaluates f through a direct (stencil) path when one is
attached; `polynomial_step` always goes through the multilinear forms, which
gives an independent cross-check of each discretization.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .polytensor import compressed_dim, compressed_power, symmetrized_compressed_power


@dataclass(frozen=True)
class Trajectory:
    """A simulated state sequence, columns x_0 .. x_K (full or reduced).

    `simulate` stores K+1 columns for K requested steps.  If a non-finite
    state appears, storage stops before it: `diverged_at` is the sequence
    index of the first non-finite state and only the finite columns x_0 ..
    x_{diverged_at - 1} are kept.  The `X`/`Y` views always pair valid
    one-step transitions.
    """

    states: np.ndarray
    diverged_at: int = None

    def __post_init__(self):
        if self.states.ndim != 2:
            raise ValueError(f"states must be 2-D, got shape {self.states.shape}")
        if not np.isfinite(self.states).all():
            raise ValueError("stored trajectory columns must be finite")

    @property
    def diverged(self):
        return self.diverged_at is not None

    @property
    def X(self):
        """Columns x_0 .. x_{K-1} (inputs of each stored transition)."""
        return self.states[:, :-1]

    @property
    def Y(self):
        """Columns x_1 .. x_K (outputs of each stored transition)."""
        return self.states[:, 1:]


@dataclass(frozen=True)
class InputTrajectory:
    """Columns u_0 .. u_{K-1} of an input signal, with seed provenance."""

    inputs: np.ndarray
    seed: int = None

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {self.inputs.shape}")
        if not np.isfinite(self.inputs).all():
            raise ValueError("input entries must be finite")


@dataclass(frozen=True)
class FullOrderModel:
    """Polynomial system of degree `degree` with `state_dim` states.

    `forms[i-1]` is the degree-i symmetric multilinear form, callable on i
    state-dimension vectors.  `compressed_operators`, when present, holds the
    matrices A_i acting on compressed powers (kept for models that are built
    from explicit operators; stencil-based benchmarks leave it None).
    """

    state_dim: int
    input_dim: int
    degree: int
    forms: tuple
    input_matrix: np.ndarray = None
    parameter: float = None
    label: str = "fom"
    step_impl: object = None
    compressed_operators: tuple = None

    def multilinear(self, i, args):
        """Apply the degree-i form to i argument vectors."""
        if not 1 <= i <= self.degree:
            raise ValueError(f"degree {i} outside 1..{self.degree}")
        if len(args) != i:
            raise ValueError(f"degree-{i} form takes {i} arguments, got {len(args)}")
        return self.forms[i - 1](*args)

    def input_term(self, u):
        return self.input_matrix @ np.asarray(u, dtype=float)

    def step(self, x, u=None):
        """One time step f(x, u); uses the direct evaluation path if attached."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise ValueError(f"state must have shape ({self.state_dim},), got {x.shape}")
        u = _check_input(self, u)
        if self.step_impl is not None:
            return self.step_impl(x, u)
        return self.polynomial_step(x, u)

    def polynomial_step(self, x, u=None):
        """f(x, u) evaluated strictly through the multilinear forms."""
        x = np.asarray(x, dtype=float)
        u = _check_input(self, u)
        out = np.zeros(self.state_dim)
        for i in range(1, self.degree + 1):
            out += self.forms[i - 1](*([x] * i))
        if self.input_dim:
            out += self.input_matrix @ u
        return out


def _check_input(model, u):
    if model.input_dim == 0:
        return None
    if u is None:
        raise ValueError(f"model expects inputs of dimension {model.input_dim}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (model.input_dim,):
        raise ValueError(f"input must have shape ({model.input_dim},), got {u.shape}")
    return u


def simulate(model, x0, U=None, num_steps=None):
    """Time step a model for `num_steps` steps from x0.

    U holds the input columns u_0 .. (at least num_steps of them); it may be
    an InputTrajectory or a (p, K) array, and is ignored for input-free
    models.  Simulation stops early with the divergence flag set as described
    on `Trajectory`.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.state_dim,):
        raise ValueError(f"x0 must have shape ({model.state_dim},), got {x0.shape}")
    U = _input_columns(model, U, num_steps)
    if num_steps is None:
        num_steps = U.shape[1] if U is not None else 0
    return _run(model.step, model.state_dim, x0, U, num_steps)


def _input_columns(model, U, num_steps):
    if isinstance(U, InputTrajectory):
        U = U.inputs
    if model.input_dim == 0:
        return None
    if U is None:
        raise ValueError("model has inputs; provide U")
    U = np.asarray(U, dtype=float)
    if U.shape[0] != model.input_dim:
        raise ValueError(f"U must have {model.input_dim} rows, got {U.shape[0]}")
    if num_steps is not None and U.shape[1] < num_steps:
        raise ValueError(f"U has {U.shape[1]} columns, need at least {num_steps}")
    return U


def _run(step, dim, x0, U, num_steps):
    states = np.empty((dim, num_steps + 1))
    states[:, 0] = x0
    if not np.isfinite(x0).all():
        raise ValueError("x0 must be finite")
    # divergence is detected, not propagated: overflow warnings are expected
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(num_steps):
            x = step(states[:, k], None if U is None else U[:, k])
            if not np.isfinite(x).all():
                return Trajectory(states=states[:, : k + 1].copy(), diverged_at=k + 1)
            states[:, k + 1] = x
    return Trajectory(states=states)


def random_input_trajectory(num_steps, input_dim, low, high, seed):
    """I.i.d. uniform input columns in [low, high) from a seeded generator."""
    if not low < high:
        raise ValueError(f"need low < high, got [{low}, {high})")
    rng = np.random.default_rng(seed)
    return InputTrajectory(inputs=rng.uniform(low, high, (input_dim, num_steps)), seed=seed)


def with_constant_channel(U):
    """Append a constant-one input row (used for constant forcing terms)."""
    if isinstance(U, InputTrajectory):
        return InputTrajectory(
            inputs=np.vstack([U.inputs, np.ones(U.inputs.shape[1])]), seed=U.seed
        )
    U = np.asarray(U, dtype=float)
    return np.vstack([U, np.ones(U.shape[1])])


# ---------------------------------------------------------------------------
# Benchmark systems
# ---------------------------------------------------------------------------

def make_toy_linear(state_dim=10, seed=0, radius=0.95):
    """Random stable linear map x_{k+1} = A1 x_k.

    A1 entries are uniform in [0, 1], then rescaled by radius / rho(A1) so the
    spectral radius is below one.
    """
    rng = np.random.default_rng(seed)
    A1 = rng.uniform(0.0, 1.0, (state_dim, state_dim))
    A1 *= radius / np.abs(np.linalg.eigvals(A1)).max()
    return FullOrderModel(
        state_dim=state_dim,
        input_dim=0,
        degree=1,
        forms=(lambda w: A1 @ w,),
        label="toy-linear",
        compressed_operators=(A1,),
    )


def make_random_polynomial(
    state_dim, degree, input_dim=0, seed=0, linear_radius=0.6, nonlinear_scale=0.25
):
    """Random polynomial system with bounded short-horizon dynamics.

    The linear operator is rescaled to spectral radius `linear_radius`; the
    degree-i operators (i >= 2) get entries of size nonlinear_scale / n_i so
    that order-one states stay bounded over a few hundred steps.  Used by the
    recovery test suites.
    """
    rng = np.random.default_rng(seed)
    ops = []
    A1 = rng.uniform(-1.0, 1.0, (state_dim, state_dim))
    A1 *= linear_radius / np.abs(np.linalg.eigvals(A1)).max()
    ops.append(A1)
    for i in range(2, degree + 1):
        ni = compressed_dim(state_dim, i)
        ops.append(rng.uniform(-1.0, 1.0, (state_dim, ni)) * (nonlinear_scale / ni))
    B = rng.uniform(-0.5, 0.5, (state_dim, input_dim)) if input_dim else None
    return _model_from_compressed(ops, B, label="random-polynomial")


def _model_from_compressed(operators, input_matrix, parameter=None, label="fom"):
    """Model whose forms and step come from explicit compressed operators."""
    operators = tuple(np.asarray(A, dtype=float) for A in operators)
    state_dim = operators[0].shape[0]
    degree = len(operators)

    def make_form(A, i):
        if i == 1:
            return lambda w: A @ w
        return lambda *ws: A @ symmetrized_compressed_power(ws)

    def step_impl(x, u):
        out = operators[0] @ x
        for i in range(2, degree + 1):
            out += operators[i - 1] @ compressed_power(x, i).values
        if input_matrix is not None:
            out += input_matrix @ u
        return out

    return FullOrderModel(
        state_dim=state_dim,
        input_dim=0 if input_matrix is None else input_matrix.shape[1],
        degree=degree,
        forms=tuple(make_form(A, i + 1) for i, A in enumerate(operators)),
        input_matrix=None if input_matrix is None else np.asarray(input_matrix, float),
        parameter=parameter,
        label=label,
        step_impl=step_impl,
        compressed_operators=operators,
    )


def make_burgers(mu, dt=1e-4, num_nodes=128):
    """Viscous Burgers on (-1, 1), Dirichlet x(-1)=u, x(1)=-u, forward Euler.

    The state holds all `num_nodes` grid values including the two boundary
    nodes; their next value is injected from the input (rows of A1 and the
    quadratic term are zero there), which keeps the quadratic operator and
    the input matrix independent of the diffusion parameter.  Interior nodes
    use central differences for both diffusion and the convection term
    x * dx/dxi.
    """
    if not 0.1 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0.1, 1], got {mu}")
    N = num_nodes
    h = 2.0 / (N - 1)

    A1 = np.zeros((N, N))
    inner = np.arange(1, N - 1)
    A1[inner, inner] = 1.0 - 2.0 * dt * mu / h**2
    A1[inner, inner - 1] = dt * mu / h**2
    A1[inner, inner + 1] = dt * mu / h**2

    B = np.zeros((N, 1))
    B[0, 0] = 1.0
    B[-1, 0] = -1.0

    conv = dt / (2.0 * h)

    def quad(w, z):
        out = np.zeros(N)
        out[1:-1] = -0.5 * conv * (
            w[1:-1] * (z[2:] - z[:-2]) + z[1:-1] * (w[2:] - w[:-2])
        )
        return out

    def step_impl(x, u):
        out = np.empty(N)
        out[1:-1] = x[1:-1] + dt * (
            mu * (x[2:] - 2.0 * x[1:-1] + x[:-2]) / h**2
            - x[1:-1] * (x[2:] - x[:-2]) / (2.0 * h)
        )
        out[0] = u[0]
        out[-1] = -u[0]
        return out

    return FullOrderModel(
        state_dim=N,
        input_dim=1,
        degree=2,
        forms=(lambda w: A1 @ w, quad),
        input_matrix=B,
        parameter=mu,
        label="burgers",
        step_impl=step_impl,
    )


def make_chafee_infante(dt=1e-5, num_nodes=128):
    """Chafee-Infante on (0, 1): x_t = x_xx - x^3 + x, forward Euler.

    Dirichlet x(0) = u(t) is eliminated into the input matrix; the Neumann
    condition at xi = 1 uses a mirrored ghost node.  Parameter-free; the
    degree-2 slot is present but identically zero.
    """
    N = num_nodes
    h = 1.0 / N

    A1 = np.zeros((N, N))
    idx = np.arange(N)
    A1[idx, idx] = 1.0 + dt * (1.0 - 2.0 / h**2)
    A1[idx[:-1], idx[:-1] + 1] = dt / h**2
    A1[idx[1:], idx[1:] - 1] = dt / h**2
    A1[-1, -2] = 2.0 * dt / h**2  # mirrored ghost at the Neumann end

    B = np.zeros((N, 1))
    B[0, 0] = dt / h**2

    zero2 = lambda w, z: np.zeros(N)
    cubic = lambda w, z, y: -dt * (w * z * y)

    def step_impl(x, u):
        lap = np.empty(N)
        lap[1:-1] = x[2:] - 2.0 * x[1:-1] + x[:-2]
        lap[0] = x[1] - 2.0 * x[0] + u[0]
        lap[-1] = 2.0 * x[-2] - 2.0 * x[-1]
        return x + dt * (lap / h**2 + x - x**3)

    return FullOrderModel(
        state_dim=N,
        input_dim=1,
        degree=3,
        forms=(lambda w: A1 @ w, zero2, cubic),
        input_matrix=B,
        label="chafee-infante",
        step_impl=step_impl,
    )


def reaction_taylor_coeff(mu, k, a=0.1, b=2.7, c=1.8):
    """k-th Taylor coefficient about 0 of -(a sin(mu)+2) exp(-mu^2 b) exp(mu x c)."""
    return -(a * math.sin(mu) + 2.0) * math.exp(-b * mu * mu) * (c * mu) ** k / math.factorial(k)


def make_diffusion_reaction_2d(mu, grid_points_per_dim=64, dt=1e-2, degree=3):
    """2-D diffusion-reaction problem on the unit square, forward Euler.

    Homogeneous Neumann boundary everywhere (mirrored ghost nodes), source
    0.1 sin(2 pi xi1) sin(2 pi xi2) driven by the physical input, and a
    pointwise reaction given by the Taylor expansion about 0 of
    -(0.1 sin(mu)+2) exp(-2.7 mu^2) exp(1.8 mu x), truncated at `degree`
    (2 or 3).  The expansion's constant term is routed through a second,
    constant-one input channel, so input_dim is 2.  The five-point Laplacian
    is applied in grid units (unscaled); with the 1/h^2 scaling the stated
    forward-Euler step size would be unstable.
    """
    if not 1.0 <= mu <= 1.5:
        raise ValueError(f"mu must lie in [1, 1.5], got {mu}")
    if degree not in (2, 3):
        raise ValueError(f"reaction degree must be 2 or 3, got {degree}")
    g = grid_points_per_dim
    N = g * g

    xi = np.linspace(0.0, 1.0, g)
    s1, s2 = np.meshgrid(np.sin(2 * np.pi * xi), np.sin(2 * np.pi * xi), indexing="ij")
    source = 0.1 * (s1 * s2).ravel()

    coeff = [reaction_taylor_coeff(mu, k) for k in range(degree + 1)]
    B = np.column_stack([dt * source, dt * coeff[0] * np.ones(N)])

    def lap(w):
        W = np.pad(w.reshape(g, g), 1, mode="reflect")
        return (
            W[:-2, 1:-1] + W[2:, 1:-1] + W[1:-1, :-2] + W[1:-1, 2:] - 4.0 * W[1:-1, 1:-1]
        ).ravel()

    def linear(w):
        return w + dt * (lap(w) + coeff[1] * w)

    forms = [linear, lambda w, z: dt * coeff[2] * (w * z)]
    if degree == 3:
        forms.append(lambda w, z, y: dt * coeff[3] * (w * z * y))

    def step_impl(x, u):
        react = coeff[1] * x + coeff[2] * x * x
        if degree == 3:
            react += coeff[3] * x * x * x
        return x + dt * (lap(x) + react) + B @ u

    return FullOrderModel(
        state_dim=N,
        input_dim=2,
        degree=degree,
        forms=tuple(forms),
        input_matrix=B,
        parameter=mu,
        label="diffusion-reaction-2d",
        step_impl=step_impl,
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def save_trajectory_csv(trajectory, path):
    """Write a trajectory as CSV with header k,x0,...,x{N-1}."""
    states = trajectory.states
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"x{i}" for i in range(states.shape[0])])
        for k in range(states.shape[1]):
            writer.writerow([k] + [f"{v:.17g}" for v in states[:, k]])


def load_trajectory_csv(path):
    """Read a trajectory written by `save_trajectory_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(states=data[:, 1:].T.copy())
