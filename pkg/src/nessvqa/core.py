"""Dense linear-algebra and quantum-state primitives.

Matrices are plain complex ``numpy`` arrays. Qubit 0 is the most significant
bit of a basis index, i.e. the leftmost factor of every Kronecker product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionMismatch, InvalidState, NotHermitian, NotPSD

HERM_TOL = 1e-10
PSD_CLAMP = 1e-8
NULL_RTOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*mats) -> np.ndarray:
    return reduce(np.kron, (as_matrix(m) for m in mats))


def frobenius_norm_sq(a) -> float:
    """Squared Frobenius norm tr(a^dag a)."""
    a = np.asarray(a)
    return float(np.sum(a.real**2 + a.imag**2))


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol * scale)


def herm_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Raises NotHermitian when ``a`` is not Hermitian within 1e-10.
    """
    a = as_matrix(a)
    if not is_hermitian(a):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    return np.linalg.eigh((a + a.conj().T) / 2)


def matrix_sqrt_psd(a) -> np.ndarray:
    w, v = herm_eig(a)
    if w.size and w[0] < -PSD_CLAMP:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative")
    root = np.sqrt(np.clip(w, 0.0, None))
    r = (v * root) @ v.conj().T
    return (r + r.conj().T) / 2


def null_space(a, tol: float | None = None) -> list[np.ndarray]:
    """Orthonormal right singular vectors whose singular values are <= tol.

    ``tol`` defaults to 1e-9 times the largest singular value (absolute 1e-9 for
    the zero matrix).
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("null_space expects a square matrix")
    _, s, vh = np.linalg.svd(a)
    if tol is None:
        smax = s[0] if s.size else 0.0
        tol = NULL_RTOL * smax if smax > 0 else NULL_RTOL
    return [vh[k].conj().copy() for k in range(len(s)) if s[k] <= tol]


@dataclass(frozen=True)
class PauliString:
    letters: str
    phase: complex = 1

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or any(c not in PAULIS for c in letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")
        if not any(np.isclose(self.phase, p) for p in (1, -1, 1j, -1j)):
            raise ValueError(f"phase must be one of +-1, +-i, got {self.phase}")
        object.__setattr__(self, "letters", letters)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)


def pauli_matrix(p: PauliString | str) -> np.ndarray:
    if isinstance(p, str):
        p = PauliString(p)
    return p.phase * kron_all(*(PAULIS[c] for c in p.letters))


def single_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-qubit operator at ``site`` in an n-qubit register."""
    return kron_all(*(op if k == site else I2 for k in range(n)))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix (Hermitian, unit trace, PSD)."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = as_matrix(self.mat)
        d = m.shape[0]
        if m.shape != (d, d) or d & (d - 1) or d == 0:
            raise DimensionMismatch(f"density matrix must be 2^n x 2^n, got {m.shape}")
        if not is_hermitian(m):
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > HERM_TOL:
            raise InvalidState(f"trace is {np.trace(m).real:.12g}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -HERM_TOL:
            raise InvalidState("density matrix has a negative eigenvalue")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def n_qubits(self) -> int:
        return int(self.mat.shape[0]).bit_length() - 1

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def expectation(self, op) -> float:
        return float(np.real(np.trace(as_matrix(op) @ self.mat)))

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    s = matrix_sqrt_psd(sigma)
    inner = s @ rho @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def infidelity(rho, sigma) -> float:
    return 1.0 - fidelity(rho, sigma)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a complex Ginibre matrix of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return (rho + rho.conj().T) / 2


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2
