import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nessvqa.ansatz import (
    AnsatzLayout,
    ParamVector,
    basis_unitary,
    build_unitary,
    distribution_amplitudes,
    init_params,
    mixed_state_batch,
    param_frequency_set,
    prepare_mixed_state,
    sample_basis_index,
    standard_layout,
)
from nessvqa.core import I2, Z, kron_all
from nessvqa.errors import ParamLengthMismatch
from nessvqa.lindblad import cost_exact
from nessvqa.models import ModelParams, ising_spec

P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def ry(t):
    return np.array([[np.cos(t / 2), -np.sin(t / 2)], [np.sin(t / 2), np.cos(t / 2)]], dtype=complex)


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def embed(ops: dict, n: int):
    return kron_all(*(ops.get(q, I2) for q in range(n)))


def naive_unitary(layout: AnsatzLayout, which: str, theta):
    """Gate-by-gate product of full 2^n x 2^n matrices built with kron."""
    n = layout.n_qubits
    u = np.eye(2**n, dtype=complex)
    for g in layout.block_gates(which):
        if g.kind == "RY":
            m = embed({g.target: ry(theta[g.param])}, n)
        elif g.kind == "RZ":
            m = embed({g.target: rz(theta[g.param])}, n)
        elif g.kind == "CRY":
            m = embed({g.control: P0}, n) + embed({g.control: P1, g.target: ry(theta[g.param])}, n)
        else:
            m = embed({g.control: P0}, n) + embed({g.control: P1, g.target: Z}, n)
        u = m @ u
    return u


layouts = st.builds(standard_layout, st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))


def test_parameter_counts():
    lay = standard_layout(2, 4, 4)
    assert lay.n_params_d == 4 * (2 + 1)
    assert lay.n_params_v == (4 + 1) * 2 * 2
    assert lay.n_params == 32
    assert AnsatzLayout.from_config(lay.to_config()) == lay


@settings(max_examples=25, deadline=None)
@given(layouts, st.integers(0, 2**32 - 1))
def test_blocks_match_naive_kron_product(layout, seed):
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, layout.n_params)
    pv = ParamVector.from_joint(layout, theta)
    assert np.allclose(build_unitary(layout, "UD", pv), naive_unitary(layout, "UD", theta), atol=1e-12)
    assert np.allclose(build_unitary(layout, "UV", pv.theta_v), naive_unitary(layout, "UV", theta), atol=1e-12)
    ud = naive_unitary(layout, "UD", theta)
    assert np.allclose(distribution_amplitudes(layout, theta), ud[:, 0], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(layouts, st.integers(0, 2**32 - 1))
def test_mixed_state_matches_dense_construction(layout, seed):
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, layout.n_params)
    p = np.abs(naive_unitary(layout, "UD", theta)[:, 0]) ** 2
    uv = naive_unitary(layout, "UV", theta)
    ref = uv @ np.diag(p) @ uv.conj().T
    rho = prepare_mixed_state(layout, theta)
    assert np.allclose(rho.mat, ref, atol=1e-12)
    assert np.isclose(np.trace(rho.mat), 1.0)


def test_batching_matches_single_calls():
    layout = standard_layout(2, 2, 2)
    thetas = np.random.default_rng(1).normal(size=(3, 4, layout.n_params))
    batch = mixed_state_batch(layout, thetas)
    assert batch.shape == (3, 4, 4, 4)
    assert np.allclose(batch[2, 1], mixed_state_batch(layout, thetas[2, 1]))
    assert basis_unitary(layout, thetas).shape == (3, 4, 4, 4)


def test_length_mismatch_raises():
    layout = standard_layout(2, 1, 1)
    with pytest.raises(ParamLengthMismatch):
        mixed_state_batch(layout, np.zeros(layout.n_params + 1))
    with pytest.raises(ParamLengthMismatch):
        build_unitary(layout, "UD", np.zeros(layout.n_params))
    with pytest.raises(ParamLengthMismatch):
        ParamVector.from_joint(layout, np.zeros(3))


def test_zero_angles_give_ground_state():
    layout = standard_layout(2, 2, 2)
    rho = mixed_state_batch(layout, np.zeros(layout.n_params))
    assert np.isclose(rho[0, 0], 1.0)


def test_frequency_sets():
    layout = standard_layout(2, 1, 1)
    kinds = {layout.param_gate(j).kind: param_frequency_set(layout, j) for j in range(layout.n_params)}
    assert kinds["RY"] == (-2.0, -1.0, 0.0, 1.0, 2.0)
    assert kinds["RZ"] == kinds["RY"]
    assert kinds["CRY"] == tuple(np.arange(-2, 2.01, 0.5))


@pytest.mark.parametrize("j", [0, 2, 7, 14])
def test_cost_is_trig_polynomial_in_each_angle(j):
    # sample the cost on a fine grid of one angle and check its Fourier support
    layout = standard_layout(2, 1, 2)
    spec = ising_spec(ModelParams(2, 0.7, (1.0, 0.5)))
    theta = np.random.default_rng(j).uniform(-np.pi, np.pi, layout.n_params)
    freqs = param_frequency_set(layout, j)
    k = 64
    grid = np.linspace(0, 4 * np.pi, k, endpoint=False)  # period 4 pi covers half-integer frequencies
    pts = np.repeat(theta[None], k, axis=0)
    pts[:, j] = grid
    vals = cost_exact(spec, mixed_state_batch(layout, pts))
    spectrum = np.fft.fft(vals) / k
    allowed = {int(round(2 * f)) % k for f in freqs}
    outside = [abs(spectrum[q]) for q in range(k) if q not in allowed]
    assert max(outside) < 1e-12


def test_sample_basis_index_follows_distribution():
    layout = standard_layout(2, 2, 1)
    rng = np.random.default_rng(3)
    theta = rng.uniform(-np.pi, np.pi, layout.n_params)
    p = np.abs(distribution_amplitudes(layout, theta)) ** 2
    draws = sample_basis_index(layout, theta[: layout.n_params_d], rng, size=40000)
    freq = np.bincount(draws, minlength=4) / 40000
    assert np.allclose(freq, p, atol=0.01)


def test_init_params_scale():
    layout = standard_layout(2, 4, 4)
    th = init_params(layout, np.random.default_rng(0), 0.1)
    assert th.shape == (layout.n_params,) and np.all(np.abs(th) <= 0.1)
