"""Classical shadows of a mixed state and the estimators built on them.

A shadow set holds ``N`` random unitaries, each measured ``M`` times; the
averaged reconstruction of unitary ``i`` is ``rho_hat_i``. Quadratic functionals
tr(O1 rho O2 rho) are estimated by the U-statistic over ordered pairs i != i'.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .ansatz import AnsatzLayout, basis_unitary, eigen_distribution
from .clifford import random_clifford_tableau, tableau_to_unitary
from .core import DensityMatrix, as_matrix
from .errors import BadTolerance, DimensionMismatch, EmptyShadowSet, TooFewShadows, TooLarge
from .lindblad import LindbladSpec, apply_lindbladian, kraus_sum_form

log = logging.getLogger(__name__)

Ensemble = Literal["pauli", "clifford"]
ENSEMBLES = ("pauli", "clifford")
CHUNK = 512
MAX_BUDGET_QUBITS = 4

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# measurement-basis rotations indexed by basis code 0=X, 1=Y, 2=Z
BASIS_ROTATIONS = np.stack([_H, _H @ _SDG, np.eye(2, dtype=complex)])
BASIS_LETTERS = "XYZ"


def _single_qubit_inverse_table() -> np.ndarray:
    """R[basis, bit] = 3 u^dag |bit><bit| u - I."""
    table = np.empty((3, 2, 2, 2), dtype=complex)
    for k, u in enumerate(BASIS_ROTATIONS):
        for bit in (0, 1):
            ket = u.conj().T[:, bit]
            table[k, bit] = 3 * np.outer(ket, ket.conj()) - np.eye(2)
    return table


_INV_TABLE = _single_qubit_inverse_table()


def check_ensemble(ensemble: str) -> str:
    if ensemble not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
    return ensemble


@dataclass(frozen=True)
class Snapshot:
    """One random unitary and one measured outcome."""

    ensemble: Ensemble
    descriptor: np.ndarray  # basis codes (n,) or a Clifford tableau (2n, 2n+1)
    outcome: int

    @property
    def n_qubits(self) -> int:
        return self.descriptor.shape[0] if self.ensemble == "pauli" else self.descriptor.shape[0] // 2

    def unitary(self) -> np.ndarray:
        return _descriptor_unitary(self.ensemble, self.descriptor)


def _kron_rows(factors: np.ndarray) -> np.ndarray:
    """Kronecker product over axis -3 of a stack ``(..., n, a, b)``."""
    out = factors[..., 0, :, :]
    for q in range(1, factors.shape[-3]):
        f = factors[..., q, :, :]
        out = np.einsum("...ab,...cd->...acbd", out, f)
        out = out.reshape(out.shape[:-4] + (out.shape[-4] * out.shape[-3], out.shape[-2] * out.shape[-1]))
    return out


def _descriptor_unitary(ensemble: str, descriptor: np.ndarray) -> np.ndarray:
    if ensemble == "pauli":
        return _kron_rows(BASIS_ROTATIONS[np.asarray(descriptor, dtype=int)])
    return tableau_to_unitary(descriptor)


def _bits(outcomes: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return (np.asarray(outcomes)[..., None] >> shifts) & 1


def reconstruct(snapshot: Snapshot, ensemble: str | None = None) -> np.ndarray:
    """Inverse-channel image of one snapshot; always unit trace."""
    ensemble = check_ensemble(ensemble or snapshot.ensemble)
    n = snapshot.n_qubits
    if ensemble == "pauli":
        codes = np.asarray(snapshot.descriptor, dtype=int)
        return _kron_rows(_INV_TABLE[codes, _bits(snapshot.outcome, n)])
    u = snapshot.unitary()
    d = 2**n
    ket = u.conj().T[:, snapshot.outcome]
    return (d + 1) * np.outer(ket, ket.conj()) - np.eye(d)


def mean_shadow(snapshots: Sequence[Snapshot]) -> np.ndarray:
    if len(snapshots) == 0:
        raise EmptyShadowSet("mean_shadow needs at least one snapshot")
    return sum(reconstruct(s) for s in snapshots) / len(snapshots)


def _outcome_probs(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    p = np.einsum("nab,bc,nac->na", u, rho, u.conj()).real
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def _draw(probs: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of ``size`` outcomes from each row of ``probs``."""
    cdf = np.cumsum(probs, axis=-1)
    cdf[..., -1] = 1.0
    u = rng.random(probs.shape[:-1] + (size,))
    return (u[..., None] >= cdf[..., None, :]).sum(-1)


def sample_snapshot(rho, ensemble: Ensemble, rng: np.random.Generator) -> Snapshot:
    rho = as_matrix(rho.mat if isinstance(rho, DensityMatrix) else rho)
    n = rho.shape[0].bit_length() - 1
    desc = _draw_descriptors(ensemble, n, 1, rng)
    u = np.stack([_descriptor_unitary(ensemble, d) for d in desc])
    outcome = _draw(_outcome_probs(u, rho), 1, rng)[0, 0]
    return Snapshot(ensemble, desc[0], int(outcome))


def _draw_descriptors(ensemble: str, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if check_ensemble(ensemble) == "pauli":
        return rng.integers(0, 3, size=(count, n), dtype=np.int8)
    return np.stack([random_clifford_tableau(n, rng) for _ in range(count)])


@dataclass
class ShadowSet:
    """N random unitaries with M recorded outcomes each."""

    ensemble: Ensemble
    n_qubits: int
    descriptors: np.ndarray
    outcomes: np.ndarray  # (N, M) basis indices
    seed: int | None = None
    _mats: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_unitaries(self) -> int:
        return self.outcomes.shape[0]

    @property
    def shots(self) -> int:
        return self.outcomes.shape[1]

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def matrices(self) -> np.ndarray:
        """Averaged reconstructions rho_hat_i, shape (N, d, d)."""
        if self._mats is None:
            self._mats = np.concatenate(
                [self._reconstruct(slice(a, a + CHUNK)) for a in range(0, self.n_unitaries, CHUNK)]
            ) if self.n_unitaries else np.zeros((0, self.dim, self.dim), complex)
        return self._mats

    def _reconstruct(self, sl: slice) -> np.ndarray:
        d = self.dim
        outs = self.outcomes[sl]
        freq = np.zeros((outs.shape[0], d))
        np.add.at(freq, (np.arange(outs.shape[0])[:, None], outs), 1.0 / self.shots)
        if self.ensemble == "pauli":
            codes = self.descriptors[sl].astype(int)
            bits = _bits(np.arange(d), self.n_qubits)  # (d, n)
            factors = _INV_TABLE[codes[:, None, :], bits[None, :, :]]  # (Nc, d, n, 2, 2)
            per_outcome = _kron_rows(factors)
            return np.einsum("no,noab->nab", freq, per_outcome)
        us = np.stack([tableau_to_unitary(t) for t in self.descriptors[sl]])
        proj = np.einsum("noa,no,nob->nab", us.conj(), freq, us)
        return (d + 1) * proj - np.eye(d)

    def snapshots(self, i: int) -> list[Snapshot]:
        return [Snapshot(self.ensemble, self.descriptors[i], int(o)) for o in self.outcomes[i]]

    def subset(self, idx) -> "ShadowSet":
        mats = None if self._mats is None else self._mats[idx]
        return ShadowSet(self.ensemble, self.n_qubits, self.descriptors[idx], self.outcomes[idx], self.seed, mats)

    def save(self, path: str | Path) -> None:
        header = {
            "ensemble": self.ensemble,
            "n_qubits": self.n_qubits,
            "n_unitaries": self.n_unitaries,
            "shots": self.shots,
            "seed": self.seed,
        }
        with open(path, "wb") as fh:
            np.savez_compressed(fh, header=json.dumps(header), descriptors=self.descriptors, outcomes=self.outcomes)

    @classmethod
    def load(cls, path: str | Path) -> "ShadowSet":
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            return cls(header["ensemble"], header["n_qubits"], data["descriptors"], data["outcomes"], header["seed"])


def _chunk_rng(seed: int, stream: tuple, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream) + (chunk,)))


def _run_chunks(fn, n_unitaries: int, workers: int):
    starts = list(range(0, n_unitaries, CHUNK))
    jobs = [(k, a, min(CHUNK, n_unitaries - a)) for k, a in enumerate(starts)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return parts


def sample_shadow_set(
    rho,
    n_unitaries: int,
    shots: int = 1,
    ensemble: Ensemble = "pauli",
    seed: int = 0,
    stream: tuple = (),
    workers: int = 1,
) -> ShadowSet:
    """Simulate random measurements on ``rho``.

    Snapshots are generated in fixed-size chunks, chunk ``k`` drawing from the
    stream seeded by ``(seed, *stream, k)``, so the result does not depend on
    ``workers``.
    """
    rho = as_matrix(rho.mat if isinstance(rho, DensityMatrix) else rho)
    n = rho.shape[0].bit_length() - 1
    if rho.shape != (2**n, 2**n):
        raise DimensionMismatch(f"state shape {rho.shape} is not 2^n x 2^n")
    if n_unitaries < 1 or shots < 1:
        raise EmptyShadowSet("need at least one unitary and one shot")
    check_ensemble(ensemble)

    def chunk(k, start, size):
        rng = _chunk_rng(seed, stream, k)
        desc = _draw_descriptors(ensemble, n, size, rng)
        us = np.stack([_descriptor_unitary(ensemble, dsc) for dsc in desc]) if ensemble == "clifford" else _kron_rows(BASIS_ROTATIONS[desc.astype(int)])
        return desc, _draw(_outcome_probs(us, rho), shots, rng)

    parts = _run_chunks(chunk, n_unitaries, workers)
    desc = np.concatenate([p[0] for p in parts])
    outs = np.concatenate([p[1] for p in parts])
    return ShadowSet(ensemble, n, desc, outs, seed)


def sample_shadow_set_circuit(
    layout: AnsatzLayout,
    theta,
    n_unitaries: int,
    shots: int = 1,
    ensemble: Ensemble = "pauli",
    seed: int = 0,
    stream: tuple = (),
) -> ShadowSet:
    """Shot-faithful variant: every shot draws its own intermediate outcome b.

    Each circuit run samples b from p_b, prepares U_V|b>, applies the random
    unitary and measures; no density matrix is formed.
    """
    n = layout.n_qubits
    p = eigen_distribution(layout, theta)
    p = p / p.sum()
    uv = basis_unitary(layout, theta)

    def chunk(k, start, size):
        rng = _chunk_rng(seed, stream, k)
        desc = _draw_descriptors(ensemble, n, size, rng)
        us = np.stack([_descriptor_unitary(ensemble, dsc) for dsc in desc])
        w = us @ uv  # (size, d, d)
        b = _draw(np.broadcast_to(p, (size, p.size)), shots, rng)  # (size, shots)
        amps = np.take_along_axis(w, b[:, None, :], axis=2)  # (size, d, shots)
        probs = np.moveaxis(amps.real**2 + amps.imag**2, 1, 2)
        probs /= probs.sum(-1, keepdims=True)
        outs = _draw(probs.reshape(-1, probs.shape[-1]), 1, rng).reshape(size, shots)
        return desc, outs

    parts = _run_chunks(chunk, n_unitaries, 1)
    return ShadowSet(ensemble, n, np.concatenate([q[0] for q in parts]), np.concatenate([q[1] for q in parts]), seed)


def _require_pairs(ss: ShadowSet) -> np.ndarray:
    if ss.n_unitaries < 2:
        raise TooFewShadows(f"quadratic estimation needs N >= 2 shadows, got {ss.n_unitaries}")
    return ss.matrices


def _pair_sum(a: np.ndarray, b: np.ndarray) -> complex:
    """sum_{i != j} tr(a_i b_j), in O(N) via the full double sum minus its diagonal."""
    total = np.einsum("ab,ba->", a.sum(0), b.sum(0))
    diag = np.einsum("nab,nba->", a, b)
    return complex(total - diag)


def estimate_quadratic(ss: ShadowSet, O1, O2) -> complex:
    """Unbiased U-statistic for tr(O1 rho O2 rho); O1 and O2 may be non-Hermitian."""
    mats = _require_pairs(ss)
    O1, O2 = as_matrix(O1), as_matrix(O2)
    n = len(mats)
    return _pair_sum(O1 @ mats, O2 @ mats) / (n * (n - 1))


def estimate_cost(ss: ShadowSet, spec: LindbladSpec, return_imag: bool = False):
    """Unbiased estimate of ||L(rho)||_F^2 from pairs of distinct shadows.

    Averages tr(L(rho_hat_i) L(rho_hat_i')^dag) over i != i'. The real part is
    returned; the imaginary residue is logged (and returned on request).
    """
    mats = _require_pairs(ss)
    lm = apply_lindbladian(spec, mats)
    n = len(mats)
    value = _pair_sum(lm, np.conj(np.swapaxes(lm, -1, -2))) / (n * (n - 1))
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        log.debug("cost estimate imaginary residue %.3e", value.imag)
    return (value.real, value.imag) if return_imag else value.real


def estimate_cost_kraus(ss: ShadowSet, spec: LindbladSpec) -> complex:
    """Same estimator expanded over the operator-sum terms L(rho) = sum_i A_i rho B_i^dag.

    ||L(rho)||^2 = sum_{i,j} tr(A_j^dag A_i rho B_i^dag B_j rho).
    """
    terms = kraus_sum_form(spec).terms
    total = 0j
    for a_i, b_i in terms:
        for a_j, b_j in terms:
            total += estimate_quadratic(ss, a_j.conj().T @ a_i, b_i.conj().T @ b_j)
    return total


def estimate_observable(ss: ShadowSet, O) -> float:
    if ss.n_unitaries * ss.shots < 1:
        raise EmptyShadowSet("no snapshots to average")
    O = as_matrix(O)
    return float(np.mean(np.einsum("ab,nba->n", O, ss.matrices)).real)


def cost_observable(spec: LindbladSpec) -> np.ndarray:
    """O = sum_{ij} (B_i^dag B_j kron A_j^dag A_i) S, so that C(rho) = tr(O rho kron rho)."""
    if spec.n_qubits > MAX_BUDGET_QUBITS:
        raise TooLarge(f"two-copy cost observable limited to n <= {MAX_BUDGET_QUBITS}")
    from .distillation import shift_operator

    d = spec.dim
    terms = kraus_sum_form(spec).terms
    t = np.zeros((d * d, d * d), dtype=complex)
    for a_i, b_i in terms:
        for a_j, b_j in terms:
            t += np.kron(b_i.conj().T @ b_j, a_j.conj().T @ a_i)
    return t @ shift_operator(2, d)


def shadow_norm_proxy(spec: LindbladSpec, locality: int, ensemble: Ensemble = "pauli") -> float:
    """x = 4^k ||O||_inf^2 (Pauli) or sqrt(9 + 6/2^n) tr(O^dag O) (Clifford)."""
    o = cost_observable(spec)
    if check_ensemble(ensemble) == "pauli":
        return float(4**locality * np.linalg.norm(o, 2) ** 2)
    return float(np.sqrt(9 + 6 / 2**spec.n_qubits) * np.real(np.vdot(o, o)))


def required_measurements(x: float, epsilon: float, delta: float) -> int:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise BadTolerance(f"epsilon and delta must lie in (0, 1), got {epsilon}, {delta}")
    raw = x / (epsilon**2 * delta)
    return int(math.ceil(raw * (1 - 1e-12)))


def measurement_budget(spec: LindbladSpec, locality: int, epsilon: float, delta: float, ensemble: Ensemble = "pauli") -> int:
    """Number of random unitaries for additive error epsilon with probability 1 - delta."""
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise BadTolerance(f"epsilon and delta must lie in (0, 1), got {epsilon}, {delta}")
    return required_measurements(shadow_norm_proxy(spec, locality, ensemble), epsilon, delta)


def variance_bound(x: float, n_unitaries: int) -> float:
    """Variance bound 4x^2/N^2 + 4x/N of the two-copy shadow estimator."""
    return 4 * x**2 / n_unitaries**2 + 4 * x / n_unitaries
