import numpy as np
import pytest

from opinfer import fom


def _random_state_input(model, rng, scale=1.0):
    x = scale * rng.normal(size=model.state_dim)
    u = scale * rng.normal(size=model.input_dim) if model.input_dim else None
    return x, u


BENCHMARKS = [
    lambda: fom.make_toy_linear(seed=4),
    lambda: fom.make_random_polynomial(9, 3, input_dim=2, seed=1),
    lambda: fom.make_burgers(0.5, num_nodes=32),
    lambda: fom.make_chafee_infante(num_nodes=24),
    lambda: fom.make_diffusion_reaction_2d(1.2, grid_points_per_dim=8),
    lambda: fom.make_diffusion_reaction_2d(1.2, grid_points_per_dim=8, degree=2),
]


@pytest.mark.parametrize("build", BENCHMARKS)
def test_step_matches_multilinear_expansion(build):
    model = build()
    rng = np.random.default_rng(20)
    for _ in range(100):
        x, u = _random_state_input(model, rng)
        fast = model.step(x, u)
        poly = model.polynomial_step(x, u)
        assert np.linalg.norm(fast - poly) <= 1e-12 * (1.0 + np.linalg.norm(fast))


@pytest.mark.parametrize("build", BENCHMARKS)
def test_multilinear_forms_are_symmetric(build):
    model = build()
    rng = np.random.default_rng(21)
    for i in range(2, model.degree + 1):
        args = [rng.normal(size=model.state_dim) for _ in range(i)]
        base = model.multilinear(i, args)
        for _ in range(3):
            perm = rng.permutation(i)
            permuted = model.multilinear(i, [args[j] for j in perm])
            assert np.linalg.norm(permuted - base) <= 1e-14 * max(1.0, np.linalg.norm(base))


def test_toy_linear_spectral_radius_below_one():
    model = fom.make_toy_linear(seed=3)
    (A1,) = model.compressed_operators
    assert A1.shape == (10, 10)
    assert np.abs(np.linalg.eigvals(A1)).max() < 1.0


def test_toy_linear_is_deterministic():
    a = fom.make_toy_linear(seed=12).compressed_operators[0]
    b = fom.make_toy_linear(seed=12).compressed_operators[0]
    assert np.array_equal(a, b)
    c = fom.make_toy_linear(seed=13).compressed_operators[0]
    assert not np.array_equal(a, c)


def test_toy_linear_zero_fixed_point():
    model = fom.make_toy_linear(seed=1)
    assert np.array_equal(model.step(np.zeros(10)), np.zeros(10))


def test_simulate_zero_steps_returns_initial_state():
    model = fom.make_toy_linear(seed=0)
    x0 = np.arange(10.0)
    traj = fom.simulate(model, x0, num_steps=0)
    assert traj.states.shape == (10, 1)
    assert np.array_equal(traj.states[:, 0], x0)
    assert not traj.diverged


def test_simulate_identity_dynamics_is_constant():
    model = fom.FullOrderModel(
        state_dim=3, input_dim=0, degree=1, forms=(lambda w: w.copy(),)
    )
    traj = fom.simulate(model, np.array([1.0, -2.0, 0.5]), num_steps=5)
    assert np.all(traj.states == traj.states[:, :1])


def test_simulate_norm_bounded_by_matrix_power():
    model = fom.make_toy_linear(seed=9)
    (A1,) = model.compressed_operators
    x0 = np.ones(10)
    K = 100
    traj = fom.simulate(model, x0, num_steps=K)
    bound = np.linalg.norm(np.linalg.matrix_power(A1, K), 2) * np.linalg.norm(x0)
    assert np.linalg.norm(traj.states[:, -1]) <= bound * (1.0 + 1e-12)


def test_simulate_is_bitwise_deterministic():
    model = fom.make_burgers(0.4, num_nodes=32)
    U = fom.random_input_trajectory(50, 1, 0.0, 10.0, seed=5)
    a = fom.simulate(model, np.zeros(32), U)
    b = fom.simulate(model, np.zeros(32), U)
    assert np.array_equal(a.states, b.states)


def test_simulate_flags_divergence_and_truncates():
    calls = {"k": 0}

    def exploding(w):
        calls["k"] += 1
        return np.full(2, np.inf) if calls["k"] == 3 else 2.0 * w

    model = fom.FullOrderModel(state_dim=2, input_dim=0, degree=1, forms=(exploding,))
    traj = fom.simulate(model, np.ones(2), num_steps=10)
    # x_3 is the first non-finite state: flag it, keep x_0..x_2 only.
    assert traj.diverged_at == 3
    assert traj.states.shape == (2, 3)
    assert np.isfinite(traj.states).all()
    assert traj.X.shape == (2, 2) and traj.Y.shape == (2, 2)


def test_simulate_rejects_dimension_mismatch():
    model = fom.make_toy_linear(seed=0)
    with pytest.raises(ValueError):
        fom.simulate(model, np.zeros(7), num_steps=1)
    burgers = fom.make_burgers(0.5, num_nodes=16)
    with pytest.raises(ValueError):
        fom.simulate(burgers, np.zeros(16), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        fom.simulate(burgers, np.zeros(16), np.zeros((1, 3)), num_steps=5)


def test_burgers_constants():
    with pytest.raises(ValueError):
        fom.make_burgers(0.05)
    model = fom.make_burgers(1.0)
    assert model.state_dim == 128
    assert model.input_dim == 1
    assert model.degree == 2


def test_burgers_zero_state_step_is_input_injection():
    model = fom.make_burgers(0.3, num_nodes=16)
    out = model.step(np.zeros(16), np.array([2.5]))
    expected = np.zeros(16)
    expected[0], expected[-1] = 2.5, -2.5
    assert np.array_equal(out, expected)


def test_burgers_quadratic_is_step_minus_linear_minus_input():
    model = fom.make_burgers(0.7, num_nodes=24)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.normal(size=24)
        u = rng.normal(size=1)
        residual = model.step(x, u) - model.multilinear(1, [x]) - model.input_term(u)
        quad = model.multilinear(2, [x, x])
        assert np.allclose(residual, quad, atol=1e-13)


def test_burgers_quadratic_and_input_are_parameter_independent():
    rng = np.random.default_rng(8)
    m1 = fom.make_burgers(0.1, num_nodes=20)
    m2 = fom.make_burgers(1.0, num_nodes=20)
    w, z = rng.normal(size=(2, 20))
    assert np.array_equal(m1.multilinear(2, [w, z]), m2.multilinear(2, [w, z]))
    assert np.array_equal(m1.input_matrix, m2.input_matrix)


def test_chafee_infante_cubic_is_pointwise():
    model = fom.make_chafee_infante(num_nodes=16)
    w = np.linspace(-1.0, 2.0, 16)
    assert np.allclose(model.multilinear(3, [w, w, w]), -1e-5 * w**3, rtol=1e-13)
    assert np.array_equal(model.multilinear(2, [w, w]), np.zeros(16))


def test_chafee_infante_shapes():
    model = fom.make_chafee_infante()
    assert model.state_dim == 128
    assert (model.degree, model.input_dim) == (3, 1)


def test_chafee_infante_test_input_profile():
    # u(t) = 25 (sin(pi t) + 1) evaluated on the discrete time grid
    dt = 1e-5
    t = np.arange(10) * dt
    u = 25.0 * (np.sin(np.pi * t) + 1.0)
    assert u[0] == 25.0
    assert np.all((0.0 <= u) & (u <= 50.0))


def test_reaction_taylor_coeff_oracle():
    # direct evaluation of the k-th derivative of the reaction at 0
    mu = 1.0
    base = -(0.1 * np.sin(mu) + 2.0) * np.exp(-2.7 * mu**2)
    assert fom.reaction_taylor_coeff(mu, 0) == pytest.approx(base, rel=1e-14)
    assert fom.reaction_taylor_coeff(mu, 1) == pytest.approx(base * 1.8, rel=1e-14)
    assert fom.reaction_taylor_coeff(mu, 2) == pytest.approx(base * 1.8**2 / 2, rel=1e-14)
    assert fom.reaction_taylor_coeff(mu, 3) == pytest.approx(base * 1.8**3 / 6, rel=1e-14)


def test_reaction2d_finite_difference_of_reaction_matches_coeffs():
    # Finite-difference the scalar reaction against the model's pointwise terms.
    mu, g = 1.25, 8
    model = fom.make_diffusion_reaction_2d(mu, grid_points_per_dim=g)
    dt = 1e-2
    e = np.zeros(g * g)
    e[5] = 1.0
    c2 = (model.multilinear(2, [e, e]) / dt)[5]
    c3 = (model.multilinear(3, [e, e, e]) / dt)[5]

    def reaction(x):
        return -(0.1 * np.sin(mu) + 2.0) * np.exp(-2.7 * mu**2) * np.exp(1.8 * mu * x)

    h = 1e-3
    d2 = (reaction(h) - 2 * reaction(0.0) + reaction(-h)) / h**2
    d3 = (reaction(2 * h) - 2 * reaction(h) + 2 * reaction(-h) - reaction(-2 * h)) / (2 * h**3)
    assert c2 == pytest.approx(d2 / 2.0, rel=1e-5)
    assert c3 == pytest.approx(d3 / 6.0, rel=1e-4)


def test_reaction2d_zero_state_driven_by_constant_channel():
    model = fom.make_diffusion_reaction_2d(1.0, grid_points_per_dim=8)
    out = model.step(np.zeros(64), np.array([0.0, 1.0]))
    assert np.allclose(out, 1e-2 * fom.reaction_taylor_coeff(1.0, 0) * np.ones(64))


def test_reaction2d_validation():
    with pytest.raises(ValueError):
        fom.make_diffusion_reaction_2d(0.9)
    with pytest.raises(ValueError):
        fom.make_diffusion_reaction_2d(1.2, degree=4)


def test_reaction2d_default_size():
    model = fom.make_diffusion_reaction_2d(1.0)
    assert model.state_dim == 4096
    assert model.input_dim == 2


def test_random_input_trajectory_range_and_determinism():
    a = fom.random_input_trajectory(200, 2, -1.0, 3.0, seed=42)
    b = fom.random_input_trajectory(200, 2, -1.0, 3.0, seed=42)
    assert np.array_equal(a.inputs, b.inputs)
    assert a.inputs.shape == (2, 200)
    assert a.inputs.min() >= -1.0 and a.inputs.max() < 3.0
    assert a.seed == 42
    with pytest.raises(ValueError):
        fom.random_input_trajectory(10, 1, 2.0, 2.0, seed=0)


def test_random_input_trajectory_mean_converges():
    U = fom.random_input_trajectory(10**6, 1, 0.0, 10.0, seed=7)
    assert abs(U.inputs.mean() - 5.0) < 0.05


def test_with_constant_channel():
    U = fom.random_input_trajectory(5, 1, 0.0, 1.0, seed=0)
    augmented = fom.with_constant_channel(U)
    assert augmented.inputs.shape == (2, 5)
    assert np.array_equal(augmented.inputs[1], np.ones(5))


def test_trajectory_csv_roundtrip(tmp_path):
    model = fom.make_toy_linear(seed=2)
    traj = fom.simulate(model, np.ones(10), num_steps=7)
    path = tmp_path / "traj.csv"
    fom.save_trajectory_csv(traj, path)
    header = path.read_text().splitlines()[0]
    assert header == "k," + ",".join(f"x{i}" for i in range(10))
    loaded = fom.load_trajectory_csv(path)
    assert np.allclose(loaded.states, traj.states, rtol=1e-15)
