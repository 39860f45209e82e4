import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nessvqa.core import I2, X, Y, Z, kron_all, single_site
from nessvqa.errors import BadParams
from nessvqa.lindblad import apply_lindbladian, exact_steady_state
from nessvqa.models import (
    SIGMA_MINUS,
    SIGMA_MINUS_X,
    SIGMA_MINUS_Y,
    SIGMA_MINUS_Z,
    ModelParams,
    build_model,
    heisenberg_spec,
    ising_spec,
)


def test_lowering_operators():
    assert np.allclose(SIGMA_MINUS_Z, np.array([[0, 0], [1, 0]]))
    assert np.allclose(SIGMA_MINUS, SIGMA_MINUS_Z)
    assert np.allclose(SIGMA_MINUS_Y, (X - 1j * Z) / 2)
    assert np.allclose(SIGMA_MINUS_X, (-Z - 1j * Y) / 2)
    for s in (SIGMA_MINUS_Z, SIGMA_MINUS_Y, SIGMA_MINUS_X):
        assert np.allclose(s @ s, 0)
        assert np.linalg.matrix_rank(s) == 1


def test_ising_two_sites_explicit():
    g = 0.7
    spec = ising_spec(ModelParams(2, g, (1.0, 0.5)))
    h = 0.5 * np.kron(Z, Z) + g * (np.kron(X, I2) + np.kron(I2, X))
    assert np.allclose(spec.hamiltonian, h)
    ops = [(c, gam) for c, gam in spec.jumps]
    assert len(ops) == 4
    assert np.allclose(ops[0][0], np.kron(SIGMA_MINUS, I2)) and ops[0][1] == 1.0
    assert np.allclose(ops[1][0], np.kron(Z, I2)) and ops[1][1] == 0.5
    assert np.allclose(ops[3][0], np.kron(I2, Z))


def test_heisenberg_two_sites_explicit():
    g = 1.3
    spec = heisenberg_spec(ModelParams(2, g, (1.0, 1.0, 1.0)))
    h = sum(np.kron(p, p) for p in (X, Y, Z)) + g * (np.kron(X, I2) + np.kron(I2, X))
    assert np.allclose(spec.hamiltonian, h)
    assert len(spec.jumps) == 6


@pytest.mark.parametrize("name,count", [("ising", 2), ("heisenberg", 3)])
def test_wrong_gamma_count_names_the_field(name, count):
    with pytest.raises(BadParams) as info:
        build_model(name, ModelParams(2, 1.0, (1.0,) * (count + 1)))
    assert info.value.field == "gammas"


def test_unknown_model_and_bad_params():
    with pytest.raises(BadParams):
        build_model("potts", ModelParams(2, 1.0, (1.0,)))
    with pytest.raises(BadParams):
        ModelParams(2, 1.0, (-1.0, 0.5))
    with pytest.raises(BadParams):
        ModelParams(2, 1.0, (1.0, 0.5), boundary="twisted")


def _site_shift(n):
    """Permutation unitary relabelling site q -> q+1 (mod n)."""
    d = 2**n
    perm = np.zeros((d, d))
    for bits in itertools.product((0, 1), repeat=n):
        src = int("".join(map(str, bits)), 2)
        rolled = bits[-1:] + bits[:-1]
        perm[int("".join(map(str, rolled)), 2), src] = 1
    return perm


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["ising", "heisenberg"]), st.floats(0, 2), st.integers(3, 4))
def test_periodic_chain_is_translation_covariant(name, g, n):
    gammas = (1.0, 0.5) if name == "ising" else (1.0, 0.7, 0.3)
    spec = build_model(name, ModelParams(n, g, gammas, "periodic"))
    t = _site_shift(n)
    assert np.allclose(t @ spec.hamiltonian @ t.T, spec.hamiltonian)
    shifted = [t @ c @ t.T for c, _ in spec.jumps]
    for c in shifted:
        assert any(np.allclose(c, c2) for c2, _ in spec.jumps)
    rho = exact_steady_state(spec).mat
    assert np.allclose(t @ rho @ t.T, rho, atol=1e-9)


def test_open_chain_is_not_periodic():
    open_h = ising_spec(ModelParams(3, 0.0, (1.0, 0.5))).hamiltonian
    per_h = ising_spec(ModelParams(3, 0.0, (1.0, 0.5), "periodic")).hamiltonian
    assert np.allclose(per_h - open_h, 0.5 * single_site(Z, 2, 3) @ single_site(Z, 0, 3))


def test_conventions_give_different_ising_dynamics():
    params = ModelParams(2, 1.0, (1.0, 0.5))
    rho = np.eye(4) / 4 + 0.1 * kron_all(X, Z)
    std = apply_lindbladian(ising_spec(params, "standard"), rho)
    lit = apply_lindbladian(ising_spec(params, "paper"), rho)
    assert not np.allclose(std, lit)
