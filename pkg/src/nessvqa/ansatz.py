"""Parameterized mixed-state ansatz.

The state is prepared by a "distribution" circuit U_D acting on |0...0>, a
computational-basis measurement, and a "basis rotation" circuit U_V:

    rho(theta) = sum_b p_b U_V |b><b| U_V^dag,   p_b = |<b|U_D|0>|^2

All simulation routines accept a batch of joint parameter vectors with shape
``(..., P)`` so the many shifted evaluations of a gradient run in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .core import DensityMatrix
from .errors import ParamLengthMismatch

GateKind = Literal["RY", "RZ", "CRY", "CZ"]

_RY_FREQS = (-2.0, -1.0, 0.0, 1.0, 2.0)
_CRY_FREQS = (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    target: int
    control: int | None = None
    param: int | None = None  # index into the joint vector (theta_D, theta_V)
    block: Literal["UD", "UV"] = "UD"


@dataclass(frozen=True)
class AnsatzLayout:
    n_qubits: int
    d1: int
    d2: int
    gates: tuple[Gate, ...]

    @property
    def n_params_d(self) -> int:
        return sum(g.param is not None for g in self.gates if g.block == "UD")

    @property
    def n_params_v(self) -> int:
        return sum(g.param is not None for g in self.gates if g.block == "UV")

    @property
    def n_params(self) -> int:
        return self.n_params_d + self.n_params_v

    def block_gates(self, which: str) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.block == which)

    def param_gate(self, index: int) -> Gate:
        for g in self.gates:
            if g.param == index:
                return g
        raise IndexError(f"no gate carries parameter {index}")

    def to_config(self) -> dict:
        return {"n": self.n_qubits, "d1": self.d1, "d2": self.d2}

    @classmethod
    def from_config(cls, cfg: dict) -> "AnsatzLayout":
        return standard_layout(int(cfg["n"]), int(cfg["d1"]), int(cfg["d2"]))


@dataclass(frozen=True)
class ParamVector:
    theta_d: np.ndarray
    theta_v: np.ndarray

    def joint(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.theta_d, float), np.asarray(self.theta_v, float)])

    @classmethod
    def from_joint(cls, layout: AnsatzLayout, theta) -> "ParamVector":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (layout.n_params,):
            raise ParamLengthMismatch(f"expected {layout.n_params} parameters, got {theta.shape}")
        return cls(theta[: layout.n_params_d].copy(), theta[layout.n_params_d :].copy())


def standard_layout(n: int, d1: int, d2: int) -> AnsatzLayout:
    """Layout of the two hardware-efficient blocks.

    U_D repeats [RY on every qubit, CRY ladder (i -> i+1)] ``d1`` times.
    U_V repeats [RY, RZ on every qubit, CZ ladder] ``d2`` times, then closes
    with one more RY-RZ column.
    """
    if n < 1 or d1 < 1 or d2 < 1:
        raise ValueError("n, d1 and d2 must all be >= 1")
    gates: list[Gate] = []
    p = 0
    for _ in range(d1):
        for q in range(n):
            gates.append(Gate("RY", q, param=p, block="UD"))
            p += 1
        for q in range(n - 1):
            gates.append(Gate("CRY", q + 1, control=q, param=p, block="UD"))
            p += 1
    for rep in range(d2 + 1):
        for q in range(n):
            gates.append(Gate("RY", q, param=p, block="UV"))
            gates.append(Gate("RZ", q, param=p + 1, block="UV"))
            p += 2
        if rep < d2:
            for q in range(n - 1):
                gates.append(Gate("CZ", q + 1, control=q, block="UV"))
    return AnsatzLayout(n, d1, d2, tuple(gates))


def init_params(layout: AnsatzLayout, rng: np.random.Generator, scale: float = 0.1) -> np.ndarray:
    return rng.uniform(-scale, scale, size=layout.n_params)


def param_frequency_set(layout: AnsatzLayout, param_index: int) -> tuple[float, ...]:
    """Frequencies present in the cost as a trigonometric polynomial of one angle."""
    g = layout.param_gate(param_index)
    return _CRY_FREQS if g.kind == "CRY" else _RY_FREQS


# --- batched gate application -------------------------------------------------


def _ry(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _rz(theta: np.ndarray) -> np.ndarray:
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def _apply_1q(state: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    # state: (B, 2^n, K); u: (B, 2, 2)
    b = state.shape[0]
    s = state.reshape(b, 2**q, 2, -1)
    return np.einsum("bij,bajr->bair", u, s).reshape(state.shape)


def _apply_controlled(state: np.ndarray, u: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    b = state.shape[0]
    lo, hi = min(c, t), max(c, t)
    s = state.reshape(b, 2**lo, 2, 2 ** (hi - lo - 1), 2, -1).copy()
    if c < t:
        sub = s[:, :, 1]
        s[:, :, 1] = np.einsum("bij,bamjr->bamir", u, sub)
    else:
        sub = s[:, :, :, :, 1]
        s[:, :, :, :, 1] = np.einsum("bij,bajmr->baimr", u, sub)
    return s.reshape(state.shape)


def _apply_cz(state: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    b = state.shape[0]
    lo, hi = min(c, t), max(c, t)
    s = state.reshape(b, 2**lo, 2, 2 ** (hi - lo - 1), 2, -1).copy()
    s[:, :, 1, :, 1] *= -1
    return s.reshape(state.shape)


def _run_block(gates: Sequence[Gate], thetas: np.ndarray, state: np.ndarray, n: int) -> np.ndarray:
    for g in gates:
        if g.kind == "CZ":
            state = _apply_cz(state, g.control, g.target, n)
            continue
        ang = thetas[:, g.param]
        if g.kind == "RY":
            state = _apply_1q(state, _ry(ang), g.target, n)
        elif g.kind == "RZ":
            state = _apply_1q(state, _rz(ang), g.target, n)
        elif g.kind == "CRY":
            state = _apply_controlled(state, _ry(ang), g.control, g.target, n)
        else:
            raise ValueError(f"unknown gate kind {g.kind}")
    return state


def _as_joint_batch(layout: AnsatzLayout, theta) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(theta, ParamVector):
        theta = theta.joint()
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0 or theta.shape[-1] != layout.n_params:
        raise ParamLengthMismatch(
            f"expected {layout.n_params} parameters "
            f"({layout.n_params_d} for U_D, {layout.n_params_v} for U_V), got shape {theta.shape}"
        )
    lead = theta.shape[:-1]
    return theta.reshape(-1, layout.n_params), lead


def distribution_amplitudes(layout: AnsatzLayout, theta) -> np.ndarray:
    """Amplitudes of U_D|0...0>, shape ``(..., 2^n)``."""
    thetas, lead = _as_joint_batch(layout, theta)
    d = 2**layout.n_qubits
    state = np.zeros((thetas.shape[0], d, 1), dtype=complex)
    state[:, 0, 0] = 1.0
    state = _run_block(layout.block_gates("UD"), thetas, state, layout.n_qubits)
    return state[..., 0].reshape(lead + (d,))


def basis_unitary(layout: AnsatzLayout, theta) -> np.ndarray:
    """U_V for a batch of joint parameter vectors, shape ``(..., 2^n, 2^n)``."""
    thetas, lead = _as_joint_batch(layout, theta)
    d = 2**layout.n_qubits
    state = np.broadcast_to(np.eye(d, dtype=complex), (thetas.shape[0], d, d)).copy()
    state = _run_block(layout.block_gates("UV"), thetas, state, layout.n_qubits)
    return state.reshape(lead + (d, d))


def build_unitary(layout: AnsatzLayout, which: Literal["UD", "UV"], params) -> np.ndarray:
    """Dense unitary of one block.

    ``params`` is either a :class:`ParamVector` or the block's own angle vector
    (``theta_d`` for ``"UD"``, ``theta_v`` for ``"UV"``).
    """
    if which not in ("UD", "UV"):
        raise ValueError("which must be 'UD' or 'UV'")
    if isinstance(params, ParamVector):
        joint = params.joint()
    else:
        own = np.asarray(params, dtype=float)
        expected = layout.n_params_d if which == "UD" else layout.n_params_v
        if own.shape != (expected,):
            raise ParamLengthMismatch(f"{which} needs {expected} parameters, got {own.shape}")
        joint = np.zeros(layout.n_params)
        if which == "UD":
            joint[: layout.n_params_d] = own
        else:
            joint[layout.n_params_d :] = own
    thetas, _ = _as_joint_batch(layout, joint)
    d = 2**layout.n_qubits
    state = np.eye(d, dtype=complex)[None].copy()
    return _run_block(layout.block_gates(which), thetas, state, layout.n_qubits)[0]


def mixed_state_batch(layout: AnsatzLayout, theta) -> np.ndarray:
    """rho(theta) for a batch of parameter vectors, shape ``(..., 2^n, 2^n)``."""
    thetas, lead = _as_joint_batch(layout, theta)
    amps = distribution_amplitudes(layout, thetas)
    probs = amps.real**2 + amps.imag**2
    uv = basis_unitary(layout, thetas)
    rho = (uv * probs[:, None, :]) @ np.conj(np.swapaxes(uv, -1, -2))
    d = rho.shape[-1]
    return rho.reshape(lead + (d, d))


def eigen_distribution(layout: AnsatzLayout, theta) -> np.ndarray:
    amps = distribution_amplitudes(layout, theta)
    return amps.real**2 + amps.imag**2


def prepare_mixed_state(layout: AnsatzLayout, theta) -> DensityMatrix:
    rho = mixed_state_batch(layout, theta)
    if rho.ndim != 2:
        raise ParamLengthMismatch("prepare_mixed_state takes a single parameter vector")
    return DensityMatrix((rho + rho.conj().T) / 2)


def sample_basis_index(layout: AnsatzLayout, theta_d, rng: np.random.Generator, size=None):
    """Simulate the intermediate measurement: draw b with probability p_b."""
    theta_d = np.asarray(theta_d, dtype=float)
    if theta_d.shape != (layout.n_params_d,):
        raise ParamLengthMismatch(f"U_D needs {layout.n_params_d} parameters, got {theta_d.shape}")
    joint = np.concatenate([theta_d, np.zeros(layout.n_params_v)])
    p = eigen_distribution(layout, joint)
    p = p / p.sum()
    return rng.choice(p.size, p=p, size=size)
