import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from nessvqa.clifford import (
    gf2_inverse,
    is_symplectic,
    random_clifford_tableau,
    random_symplectic,
    row_pauli,
    tableau_to_unitary,
)
from nessvqa.core import pauli_matrix
from nessvqa.errors import TooLarge

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), seeds)
def test_sampled_matrices_are_symplectic(n, seed):
    assert is_symplectic(random_symplectic(n, np.random.default_rng(seed)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), seeds)
def test_unitary_realizes_tableau(n, seed):
    tab = random_clifford_tableau(n, np.random.default_rng(seed))
    u = tableau_to_unitary(tab)
    assert np.allclose(u.conj().T @ u, np.eye(2**n), atol=1e-10)
    for i in range(n):
        x_i = pauli_matrix("I" * i + "X" + "I" * (n - i - 1))
        z_i = pauli_matrix("I" * i + "Z" + "I" * (n - i - 1))
        assert np.allclose(u @ x_i @ u.conj().T, row_pauli(tab[i], n), atol=1e-10)
        assert np.allclose(u @ z_i @ u.conj().T, row_pauli(tab[n + i], n), atol=1e-10)


@pytest.mark.parametrize("n,classes", [(1, 6), (2, 720)])
def test_symplectic_sampling_is_uniform(n, classes):
    # |Sp(2n, 2)| is 6 for one qubit and 720 for two
    rng = np.random.default_rng(11)
    draws = 40 * classes
    counts: dict[bytes, int] = {}
    for _ in range(draws):
        key = random_symplectic(n, rng).astype(np.uint8).tobytes()
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == classes
    assert chisquare(list(counts.values())).pvalue > 1e-4


def test_gf2_inverse():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = np.tril(rng.integers(0, 2, (4, 4)), -1) + np.eye(4, dtype=int)
        assert np.array_equal((m @ gf2_inverse(m)) % 2, np.eye(4, dtype=int))
    with pytest.raises(ValueError):
        gf2_inverse(np.zeros((2, 2), dtype=int))


def test_size_guard():
    with pytest.raises(TooLarge):
        random_clifford_tableau(5, np.random.default_rng(0))
