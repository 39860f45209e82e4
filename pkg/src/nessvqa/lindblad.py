"""Lindblad generator, its cost, vectorization and the exact steady state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import DensityMatrix, as_matrix, frobenius_norm_sq, is_hermitian, null_space
from .errors import DegenerateSteadySpace, DimensionMismatch, InvalidState, NoSteadyState, TooLarge

Convention = Literal["standard", "paper"]
MAX_VECTORIZED_QUBITS = 6
STEADY_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class LindbladSpec:
    """Hamiltonian plus weighted jump operators.

    ``convention="standard"`` uses the GKSL anticommutator {c^dag c, rho};
    ``convention="paper"`` uses {c c^dag, rho}.
    """

    n_qubits: int
    hamiltonian: np.ndarray = field(repr=False)
    jumps: tuple[tuple[np.ndarray, float], ...] = field(default=(), repr=False)
    convention: Convention = "standard"

    def __post_init__(self):
        d = 2**self.n_qubits
        h = as_matrix(self.hamiltonian)
        if h.shape != (d, d):
            raise DimensionMismatch(f"Hamiltonian shape {h.shape}, expected {(d, d)}")
        if not is_hermitian(h):
            raise ValueError("Hamiltonian is not Hermitian")
        if self.convention not in ("standard", "paper"):
            raise ValueError(f"unknown convention {self.convention!r}")
        jumps = []
        for c, gamma in self.jumps:
            c = as_matrix(c)
            if c.shape != (d, d):
                raise DimensionMismatch(f"jump operator shape {c.shape}, expected {(d, d)}")
            if gamma < 0:
                raise ValueError(f"dissipation strength must be >= 0, got {gamma}")
            jumps.append((c.copy(), float(gamma)))
        object.__setattr__(self, "hamiltonian", h.copy())
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def with_convention(self, convention: Convention) -> "LindbladSpec":
        return LindbladSpec(self.n_qubits, self.hamiltonian, self.jumps, convention)

    def anticommutator_op(self, c: np.ndarray) -> np.ndarray:
        return c.conj().T @ c if self.convention == "standard" else c @ c.conj().T

    def drift(self) -> np.ndarray:
        """G such that L(rho) = G rho + rho G^dag + sum_k gamma_k c_k rho c_k^dag."""
        g = -1j * self.hamiltonian
        for c, gamma in self.jumps:
            g = g - 0.5 * gamma * self.anticommutator_op(c)
        return g

    def to_dict(self) -> dict:
        def enc(m):
            return {"re": m.real.tolist(), "im": m.imag.tolist()}

        return {
            "n_qubits": self.n_qubits,
            "convention": self.convention,
            "hamiltonian": enc(self.hamiltonian),
            "jumps": [{"op": enc(c), "gamma": g} for c, g in self.jumps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LindbladSpec":
        def dec(m):
            return np.asarray(m["re"], float) + 1j * np.asarray(m.get("im", 0.0), float)

        return cls(
            int(data["n_qubits"]),
            dec(data["hamiltonian"]),
            tuple((dec(j["op"]), float(j["gamma"])) for j in data.get("jumps", [])),
            data.get("convention", "standard"),
        )


@dataclass(frozen=True)
class KrausSumForm:
    """L(rho) = sum_i A_i rho B_i^dag."""

    terms: tuple[tuple[np.ndarray, np.ndarray], ...]

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        for a, b in self.terms:
            out = out + a @ rho @ b.conj().T
        return out


def _check_rho(spec: LindbladSpec, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (spec.dim, spec.dim):
        raise DimensionMismatch(f"state shape {rho.shape}, expected (..., {spec.dim}, {spec.dim})")
    return rho


def apply_lindbladian(spec: LindbladSpec, rho) -> np.ndarray:
    """L(rho); ``rho`` may carry leading batch dimensions."""
    rho = _check_rho(spec, rho)
    g = spec.drift()
    out = g @ rho + rho @ g.conj().T
    for c, gamma in spec.jumps:
        if gamma:
            out = out + gamma * (c @ rho @ c.conj().T)
    return out


def cost_exact(spec: LindbladSpec, rho) -> float | np.ndarray:
    """Squared Frobenius norm of L(rho); batched over leading dimensions."""
    if isinstance(rho, DensityMatrix):
        rho = rho.mat
    lr = apply_lindbladian(spec, rho)
    val = np.sum(lr.real**2 + lr.imag**2, axis=(-2, -1))
    return float(val) if np.ndim(val) == 0 else val


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def vectorized_lindbladian(spec: LindbladSpec) -> np.ndarray:
    """Superoperator M with M vec(rho) = vec(L(rho)), using vec(A X B) = (B^T kron A) vec(X)."""
    if spec.n_qubits > MAX_VECTORIZED_QUBITS:
        raise TooLarge(f"vectorized Lindbladian limited to n <= {MAX_VECTORIZED_QUBITS}")
    d = spec.dim
    eye = np.eye(d, dtype=complex)
    g = spec.drift()
    m = np.kron(eye, g) + np.kron(g.conj(), eye)
    for c, gamma in spec.jumps:
        if gamma:
            m = m + gamma * np.kron(c.conj(), c)
    return m


def exact_steady_state(spec: LindbladSpec, tol: float | None = None) -> DensityMatrix:
    """Unique steady state from the null space of the vectorized Lindbladian."""
    m = vectorized_lindbladian(spec)
    kernel = null_space(m, tol)
    if not kernel:
        raise NoSteadyState("vectorized Lindbladian has no null vector at tolerance")
    if len(kernel) > 1:
        raise DegenerateSteadySpace(len(kernel))
    x = unvec(kernel[0], spec.dim)
    tr = np.trace(x)
    if abs(tr) < 1e-12 * max(1.0, np.abs(x).max()):
        raise NoSteadyState("null vector is traceless; no normalizable steady state")
    x = x / tr
    x = (x + x.conj().T) / 2
    x = x / np.trace(x).real
    try:
        rho = DensityMatrix(x)
    except InvalidState as exc:
        raise NoSteadyState(f"null vector is not a physical state: {exc}") from exc
    residual = np.sqrt(frobenius_norm_sq(apply_lindbladian(spec, rho.mat)))
    if residual > STEADY_RESIDUAL_TOL:
        raise NoSteadyState(f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL}")
    return rho


def steady_state_residual(spec: LindbladSpec, rho) -> float:
    return float(np.sqrt(frobenius_norm_sq(apply_lindbladian(spec, np.asarray(rho)))))


def kraus_sum_form(spec: LindbladSpec) -> KrausSumForm:
    d = spec.dim
    eye = np.eye(d, dtype=complex)
    terms: list[tuple[np.ndarray, np.ndarray]] = []
    h = spec.hamiltonian
    if np.any(h != 0):
        terms.append((-1j * h, eye))
        terms.append((eye, -1j * h))
    for c, gamma in spec.jumps:
        if not gamma:
            continue
        dk = spec.anticommutator_op(c)
        root = np.sqrt(gamma)
        terms.append((root * c, root * c))
        terms.append((-0.5 * gamma * dk, eye))
        terms.append((eye, -0.5 * gamma * dk.conj().T))
    return KrausSumForm(tuple(terms))
