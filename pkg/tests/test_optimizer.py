import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nessvqa.ansatz import standard_layout
from nessvqa.core import infidelity
from nessvqa.errors import SingularSystem, WrongFrequencySet
from nessvqa.lindblad import exact_steady_state
from nessvqa.models import ModelParams, damping_spec, ising_spec
from nessvqa.optimizer import (
    PAULI_SHIFTS,
    PAULI_WEIGHTS,
    CostEvaluator,
    OptConfig,
    ShadowConfig,
    grad_finite_diff,
    grad_full,
    grad_general_shift,
    grad_param_shift,
    multi_restart,
    run_optimization,
    shift_rule,
)


def four_point(f, theta):
    return sum(w * f(theta + s) for s, w in zip(PAULI_SHIFTS, PAULI_WEIGHTS))


def test_four_point_weights():
    assert PAULI_WEIGHTS[2] == pytest.approx(-0.20710678118654752, abs=1e-15)
    assert sorted(PAULI_SHIFTS) == pytest.approx([-np.pi / 2, -np.pi / 4, np.pi / 4, np.pi / 2])


@pytest.mark.parametrize("theta", np.linspace(-3, 3, 13))
def test_four_point_rule_on_cosines(theta):
    assert four_point(np.cos, theta) == pytest.approx(-np.sin(theta), abs=1e-12)
    assert four_point(lambda t: np.cos(2 * t), theta) == pytest.approx(-2 * np.sin(2 * theta), abs=1e-12)


freq_sets = st.sampled_from([
    (-1.0, 0.0, 1.0),
    (-2.0, -1.0, 0.0, 1.0, 2.0),
    tuple(np.arange(-2, 2.01, 0.5)),
    (-3.0, -1.0, 1.0, 3.0),
    (-2.0, -0.5, 0.5, 2.0),
])


@settings(max_examples=40, deadline=None)
@given(freq_sets, st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi))
def test_general_rule_is_exact_for_trig_polynomials(freqs, seed, theta):
    rng = np.random.default_rng(seed)
    g = np.array(freqs)
    beta = rng.normal(size=g.size) + 1j * rng.normal(size=g.size)
    beta = (beta + np.conj(beta[::-1])) / 2  # real-valued function

    def f(t):
        return float(np.real(np.sum(beta * np.exp(1j * g * t))))

    exact = float(np.real(np.sum(1j * g * beta * np.exp(1j * g * theta))))
    shifts, weights = shift_rule(freqs)
    assert np.dot(weights, [f(theta + s) for s in shifts]) == pytest.approx(exact, abs=1e-9)


def test_singular_spacing_detected():
    with pytest.raises(SingularSystem):
        shift_rule((-1.0, 0.0, 1.0), 2 * np.pi)
    with pytest.raises(ValueError):
        shift_rule((0.0, 1.0))


@pytest.fixture(scope="module")
def ising_cost():
    layout = standard_layout(2, 4, 4)
    return CostEvaluator(ising_spec(ModelParams(2, 1.0, (1.0, 0.5))), layout)


def test_param_shift_rejects_controlled_angle(ising_cost):
    layout = ising_cost.layout
    j = next(k for k in range(layout.n_params) if layout.param_gate(k).kind == "CRY")
    with pytest.raises(WrongFrequencySet):
        grad_param_shift(ising_cost, np.zeros(layout.n_params), j)
    freqs = tuple(np.arange(-2, 2.01, 0.5))
    theta = np.random.default_rng(0).uniform(-np.pi, np.pi, layout.n_params)
    assert grad_general_shift(ising_cost, theta, j, freqs) == pytest.approx(
        grad_finite_diff(ising_cost, theta, j), abs=1e-7
    )


@pytest.mark.parametrize("seed", range(5))
def test_full_gradient_modes_agree(ising_cost, seed):
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, ising_cost.layout.n_params)
    ps = grad_full(ising_cost, theta, "param_shift")
    gs = grad_full(ising_cost, theta, "general_shift")
    fd = grad_full(ising_cost, theta, "finite_diff", 1e-5)
    assert np.max(np.abs(ps - gs)) < 1e-10
    assert np.max(np.abs(ps - fd)) < 1e-6
    assert ps[3] == pytest.approx(grad_param_shift(ising_cost, theta, 3), abs=1e-12)


@pytest.fixture(scope="module")
def damping_problem():
    spec = damping_spec(ModelParams(1, 1.0, (1.0,)))
    return CostEvaluator(spec, standard_layout(1, 1, 1)), exact_steady_state(spec)


@pytest.mark.parametrize("method", ["bfgs", "gd"])
def test_optimizer_finds_damped_drive_steady_state(damping_problem, method):
    cost, oracle = damping_problem
    cfg = OptConfig(method=method, learning_rate=0.5, epsilon=1e-12, max_iters=3000)
    res = multi_restart(cost, cfg, n_restarts=4, seed=1)
    assert res.best.terminated_by == "CostBelowEps"
    assert infidelity(cost.state(res.best.theta_star), oracle.mat) < 1e-5
    assert res.best.cost_history[-1] < 1e-12


def test_max_iters_and_histories(damping_problem):
    cost, _ = damping_problem
    run = run_optimization(cost, OptConfig(max_iters=3), np.full(cost.layout.n_params, 0.3))
    assert run.terminated_by == "MaxIters"
    assert len(run.cost_history) == len(run.grad_norm_history) == run.n_iters + 1
    assert run.to_dict(timing=False)["wall_time"] is None


def test_flat_cost_stalls():
    run = run_optimization(lambda t: 1.0, OptConfig(method="gd", max_iters=500), np.zeros(2))
    assert run.terminated_by == "Stalled"


def test_restarts_are_deterministic(damping_problem):
    cost, _ = damping_problem
    cfg = OptConfig(max_iters=20, epsilon=1e-30)
    a = multi_restart(cost, cfg, n_restarts=2, seed=5, stop_on_success=False)
    b = multi_restart(cost, cfg, n_restarts=2, seed=5, stop_on_success=False)
    assert np.array_equal(a.best.theta_star, b.best.theta_star)
    assert len(a.runs) == 2 and a.seeds == b.seeds


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        OptConfig(epsilon=0)
    with pytest.raises(ValueError):
        OptConfig(method="adam")


def test_shadow_evaluator_replay(damping_problem):
    cost, _ = damping_problem
    noisy = CostEvaluator(cost.spec, cost.layout, "shadow", ShadowConfig(200, 5, seed=3))
    theta = np.full(cost.layout.n_params, 0.4)
    pinned = noisy.pinned(7)
    assert pinned(theta) == pinned(theta)
    assert noisy(theta) != noisy(theta)
    faithful = CostEvaluator(cost.spec, cost.layout, "shadow", ShadowConfig(2000, 5, seed=3, faithful=True))
    vals = [faithful.pinned(k)(theta) for k in range(20)]
    assert np.mean(vals) == pytest.approx(cost(theta), abs=4 * np.std(vals) / np.sqrt(20) + 1e-3)
