"""Uniformly random n-qubit Cliffords as stabilizer tableaux.

A tableau is a boolean array of shape ``(2n, 2n + 1)``. Row ``i < n`` is the
image of X_i and row ``n + i`` the image of Z_i under conjugation; columns are
the x bits, the z bits, and a sign bit. Sampling uses the canonical form of a
quantum Mallows permutation plus a Hadamard layer, sandwiched between two
random Hadamard-free Cliffords.
"""

from __future__ import annotations

import numpy as np

from .core import I2, X, Y, Z, kron_all
from .errors import TooLarge

MAX_CLIFFORD_QUBITS = 4

_LETTER = {(0, 0): I2, (1, 0): X, (0, 1): Z, (1, 1): Y}


def _sample_qmallows(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    had = np.zeros(n, dtype=bool)
    perm = np.zeros(n, dtype=int)
    remaining = list(range(n))
    for i in range(n):
        m = n - i
        eps = 4.0 ** (-m)
        r = rng.uniform(0, 1)
        index = -int(np.ceil(np.log2(r + (1 - r) * eps)))
        had[i] = index < m
        k = index if index < m else 2 * m - index - 1
        perm[i] = remaining.pop(k)
    return had, perm


def _fill_tril(mat: np.ndarray, rng: np.random.Generator, symmetric: bool = False) -> None:
    rows, cols = np.tril_indices(mat.shape[0], -1)
    vals = rng.integers(2, size=rows.size, dtype=np.int8)
    mat[rows, cols] = vals
    if symmetric:
        mat[cols, rows] = vals


def gf2_inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse of a square binary matrix over GF(2) by Gauss-Jordan elimination."""
    n = mat.shape[0]
    aug = np.concatenate([mat.astype(np.int8) % 2, np.eye(n, dtype=np.int8)], axis=1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r, col]), None)
        if pivot is None:
            raise ValueError("matrix is singular over GF(2)")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] ^= aug[col]
    return aug[:, n:]


def random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random 2n x 2n binary symplectic matrix."""
    had, perm = _sample_qmallows(n, rng)
    gamma1 = np.diag(rng.integers(2, size=n, dtype=np.int8))
    gamma2 = np.diag(rng.integers(2, size=n, dtype=np.int8))
    delta1 = np.eye(n, dtype=np.int8)
    delta2 = np.eye(n, dtype=np.int8)
    _fill_tril(gamma1, rng, symmetric=True)
    _fill_tril(gamma2, rng, symmetric=True)
    _fill_tril(delta1, rng)
    _fill_tril(delta2, rng)

    zero = np.zeros((n, n), dtype=np.int8)
    prod1 = (gamma1 @ delta1) % 2
    prod2 = (gamma2 @ delta2) % 2
    inv1 = gf2_inverse(delta1).T
    inv2 = gf2_inverse(delta2).T
    table1 = np.block([[delta1, zero], [prod1, inv1]])
    table2 = np.block([[delta2, zero], [prod2, inv2]])

    table = table2[np.concatenate([perm, n + perm])]
    inds = np.flatnonzero(had)
    lhs = np.concatenate([inds, inds + n])
    rhs = np.concatenate([inds + n, inds])
    table[lhs, :] = table[rhs, :]
    return (table1 @ table) % 2


def random_clifford_tableau(n: int, rng: np.random.Generator) -> np.ndarray:
    if n > MAX_CLIFFORD_QUBITS:
        raise TooLarge(f"global Clifford sampling is limited to n <= {MAX_CLIFFORD_QUBITS}")
    tab = np.zeros((2 * n, 2 * n + 1), dtype=bool)
    tab[:, :-1] = random_symplectic(n, rng).astype(bool)
    tab[:, -1] = rng.integers(2, size=2 * n).astype(bool)
    return tab


def symplectic_form(n: int) -> np.ndarray:
    zero = np.zeros((n, n), dtype=np.int8)
    eye = np.eye(n, dtype=np.int8)
    return np.block([[zero, eye], [eye, zero]])


def is_symplectic(mat: np.ndarray) -> bool:
    mat = np.asarray(mat, dtype=np.int64) % 2
    n = mat.shape[0] // 2
    omega = symplectic_form(n)
    return bool(np.array_equal((mat @ omega @ mat.T) % 2, omega))


def row_pauli(row: np.ndarray, n: int) -> np.ndarray:
    """Hermitian Pauli matrix of one tableau row (x bits, z bits, sign)."""
    x, z, sign = row[:n].astype(int), row[n : 2 * n].astype(int), int(row[2 * n])
    mat = kron_all(*(_LETTER[(x[q], z[q])] for q in range(n)))
    return -mat if sign else mat


def tableau_to_unitary(tab: np.ndarray) -> np.ndarray:
    """A unitary (up to global phase) whose conjugation action matches the tableau.

    Column 0 is the joint +1 eigenvector of the Z-images; column x applies the
    X-images selected by the bits of x.
    """
    tab = np.asarray(tab, dtype=bool)
    n = tab.shape[0] // 2
    d = 2**n
    destab = [row_pauli(tab[i], n) for i in range(n)]
    proj = np.eye(d, dtype=complex)
    for i in range(n):
        proj = proj @ (np.eye(d) + row_pauli(tab[n + i], n)) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, col] / np.linalg.norm(proj[:, col])
    u = np.empty((d, d), dtype=complex)
    for x in range(d):
        v = psi0
        for i in range(n):
            if (x >> (n - 1 - i)) & 1:
                v = destab[i] @ v
        u[:, x] = v
    return u
