"""Shift-rule gradients and the variational steady-state search loop."""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzLayout, ParamVector, init_params, mixed_state_batch, param_frequency_set
from .errors import SingularSystem, WrongFrequencySet
from .lindblad import LindbladSpec, cost_exact

log = logging.getLogger(__name__)

PAULI_FREQS = (-2.0, -1.0, 0.0, 1.0, 2.0)
# Shifts of the closed-form rule for frequency support {0, +-1, +-2}.
PAULI_SHIFTS = (np.pi / 4, -np.pi / 4, np.pi / 2, -np.pi / 2)
PAULI_WEIGHTS = (1.0, -1.0, -(np.sqrt(2) - 1) / 2, (np.sqrt(2) - 1) / 2)

GradMode = Literal["param_shift", "general_shift", "finite_diff"]
Method = Literal["bfgs", "gd"]


@dataclass(frozen=True)
class ShadowConfig:
    n_unitaries: int = 1000
    shots: int = 1
    ensemble: Literal["pauli", "clifford"] = "pauli"
    seed: int = 0
    faithful: bool = False  # sample the intermediate measurement shot by shot


@dataclass
class CostEvaluator:
    """C(theta) = ||L(rho(theta))||_F^2, evaluated exactly or from classical shadows.

    Exact evaluations are deterministic. In shadow mode every call draws a new
    shadow set unless ``replay`` is pinned, in which case the snapshot stream is
    a pure function of ``(shadow.seed, replay)``.
    """

    spec: LindbladSpec
    layout: AnsatzLayout
    mode: Literal["exact", "shadow"] = "exact"
    shadow: ShadowConfig | None = None
    replay: int | None = None
    _draws: itertools.count = field(default_factory=itertools.count, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in ("exact", "shadow"):
            raise ValueError(f"unknown cost mode {self.mode!r}")
        if self.mode == "shadow" and self.shadow is None:
            self.shadow = ShadowConfig()
        if self.spec.n_qubits != self.layout.n_qubits:
            raise ValueError("spec and layout disagree on the number of qubits")

    def pinned(self, replay: int) -> "CostEvaluator":
        return replace(self, replay=replay)

    def state(self, theta) -> np.ndarray:
        return mixed_state_batch(self.layout, theta)

    def batch(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if self.mode == "exact":
            rhos = mixed_state_batch(self.layout, thetas)
            return np.asarray(cost_exact(self.spec, rhos), dtype=float).reshape(len(thetas))
        return np.array([self._shadow_cost(theta) for theta in thetas])

    def __call__(self, theta) -> float:
        return float(self.batch(np.asarray(theta, dtype=float)[None])[0])

    def shadow_set(self, theta):
        """Shadow set of rho(theta) drawn from this evaluator's stream."""
        from .shadows import sample_shadow_set, sample_shadow_set_circuit

        cfg = self.shadow or ShadowConfig()
        # common random numbers: under a pinned replay every evaluation reuses one stream
        key = (self.replay,) if self.replay is not None else (10**6 + next(self._draws),)
        if cfg.faithful:
            return sample_shadow_set_circuit(
                self.layout, theta, cfg.n_unitaries, cfg.shots, cfg.ensemble, seed=cfg.seed, stream=key
            )
        rho = mixed_state_batch(self.layout, theta)
        return sample_shadow_set(rho, cfg.n_unitaries, cfg.shots, cfg.ensemble, seed=cfg.seed, stream=key)

    def _shadow_cost(self, theta: np.ndarray) -> float:
        from .shadows import estimate_cost

        return estimate_cost(self.shadow_set(theta), self.spec)


def _evaluate(cost, thetas: np.ndarray) -> np.ndarray:
    if hasattr(cost, "batch"):
        return np.asarray(cost.batch(thetas), dtype=float)
    return np.array([float(cost(t)) for t in thetas])


def _layout_of(cost) -> AnsatzLayout | None:
    return getattr(cost, "layout", None)


@lru_cache(maxsize=64)
def shift_rule(freqs: tuple[float, ...], alpha: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shifts s_k and real weights w_k with f'(theta) = sum_k w_k f(theta + s_k).

    Valid for any f(theta) = sum_{gamma in freqs} beta_gamma exp(i gamma theta).
    The L shifts are equally spaced with spacing ``alpha`` and centred on zero;
    the weights come from inverting the Vandermonde system in the nodes
    exp(i alpha gamma).
    """
    g = np.array(sorted(set(float(f) for f in freqs)))
    if g.size != len(freqs) or not np.allclose(g, -g[::-1]):
        raise ValueError("frequency set must be finite, symmetric and without repeats")
    L = g.size
    if alpha is None:
        steps = np.diff(g)
        if np.allclose(steps, steps[0]):
            alpha = 2 * np.pi / (L * steps[0])
        else:
            alpha = np.pi / (2 * np.max(np.abs(g)))
    nodes = np.exp(1j * alpha * g)
    if np.min(np.abs(nodes[:, None] - nodes[None, :]) + np.eye(L) * 10) < 1e-9:
        raise SingularSystem(f"shift spacing {alpha} maps distinct frequencies to the same node")
    shifts = (np.arange(L) - (L - 1) / 2) * alpha
    vander = np.exp(1j * np.outer(shifts, g))
    if np.linalg.cond(vander) > 1e12:
        raise SingularSystem(f"Vandermonde system ill-conditioned for alpha={alpha}")
    # f(theta + s_j) = sum_k vander[j, k] b_k  =>  f' = sum_k i g_k b_k = (i g) vander^{-1} f
    weights = (1j * g) @ np.linalg.inv(vander)
    return shifts, weights.real


def _param_shift_points(theta: np.ndarray, j: int) -> np.ndarray:
    pts = np.repeat(theta[None], len(PAULI_SHIFTS), axis=0)
    pts[:, j] += PAULI_SHIFTS
    return pts


def grad_param_shift(cost, theta, j: int) -> float:
    """Four-point rule for angles whose cost frequencies lie in {0, +-1, +-2}."""
    layout = _layout_of(cost)
    if layout is not None and param_frequency_set(layout, j) != PAULI_FREQS:
        raise WrongFrequencySet(f"parameter {j} is not a Pauli-rotation angle")
    theta = np.asarray(theta, dtype=float)
    vals = _evaluate(cost, _param_shift_points(theta, j))
    return float(np.dot(PAULI_WEIGHTS, vals))


def grad_general_shift(cost, theta, j: int, freqs: Sequence[float], alpha: float | None = None) -> float:
    theta = np.asarray(theta, dtype=float)
    try:
        shifts, weights = shift_rule(tuple(float(f) for f in freqs), alpha)
    except SingularSystem:
        if alpha is None:
            raise
        shifts, weights = shift_rule(tuple(float(f) for f in freqs), alpha / 2)
    pts = np.repeat(theta[None], len(shifts), axis=0)
    pts[:, j] += shifts
    return float(np.dot(weights, _evaluate(cost, pts)))


def grad_finite_diff(cost, theta, j: int, h: float = 1e-5) -> float:
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(theta, dtype=float)
    pts = np.repeat(theta[None], 2, axis=0)
    pts[0, j] += h
    pts[1, j] -= h
    vals = _evaluate(cost, pts)
    return float((vals[0] - vals[1]) / (2 * h))


def grad_full(cost, theta, mode: GradMode = "param_shift", h: float = 1e-5) -> np.ndarray:
    """Full gradient; all shifted evaluations go through one batched call.

    ``param_shift`` uses the four-point rule on RY/RZ angles and the general
    Vandermonde rule on CRY angles. ``general_shift`` uses the Vandermonde rule
    everywhere.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    layout = _layout_of(cost)
    points, blocks = [], []
    for j in range(p):
        freqs = param_frequency_set(layout, j) if layout is not None else PAULI_FREQS
        if mode == "finite_diff":
            shifts, weights = np.array([h, -h]), np.array([1.0, -1.0]) / (2 * h)
        elif mode == "param_shift" and freqs == PAULI_FREQS:
            shifts, weights = np.array(PAULI_SHIFTS), np.array(PAULI_WEIGHTS)
        elif mode in ("param_shift", "general_shift"):
            shifts, weights = shift_rule(tuple(freqs))
        else:
            raise ValueError(f"unknown gradient mode {mode!r}")
        pts = np.repeat(theta[None], len(shifts), axis=0)
        pts[:, j] += shifts
        points.append(pts)
        blocks.append(weights)
    vals = _evaluate(cost, np.concatenate(points))
    grad = np.empty(p)
    start = 0
    for j, w in enumerate(blocks):
        grad[j] = np.dot(w, vals[start : start + len(w)])
        start += len(w)
    return grad


@dataclass(frozen=True)
class OptConfig:
    method: Method = "bfgs"
    learning_rate: float = 0.1
    epsilon: float = 1e-12
    max_iters: int = 2000
    grad_mode: GradMode = "param_shift"
    fd_step: float = 1e-5
    stall_window: int = 50
    stall_rtol: float = 1e-12

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.method not in ("bfgs", "gd"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class OptRun:
    theta_star: np.ndarray
    cost_history: list[float]
    grad_norm_history: list[float]
    terminated_by: Literal["CostBelowEps", "MaxIters", "Stalled"]
    n_iters: int
    wall_time: float = 0.0

    @property
    def final_cost(self) -> float:
        return self.cost_history[-1]

    def params(self, layout: AnsatzLayout) -> ParamVector:
        return ParamVector.from_joint(layout, self.theta_star)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "theta_star": self.theta_star.tolist(),
            "cost_history": list(self.cost_history),
            "grad_norm_history": list(self.grad_norm_history),
            "terminated_by": self.terminated_by,
            "n_iters": self.n_iters,
            "final_cost": self.final_cost,
            "wall_time": self.wall_time if timing else None,
        }


class _Stop(Exception):
    pass


class _Tracker:
    """Bookkeeping shared by both optimizers: histories and stall detection."""

    def __init__(self, config: OptConfig):
        self.config = config
        self.costs: list[float] = []
        self.gnorms: list[float] = []
        self.reason = None

    def record(self, cost: float, gnorm: float) -> None:
        self.costs.append(float(cost))
        self.gnorms.append(float(gnorm))
        cfg = self.config
        if cost < cfg.epsilon:
            self.reason = "CostBelowEps"
        elif len(self.costs) > cfg.max_iters:
            self.reason = "MaxIters"
        elif len(self.costs) > cfg.stall_window:
            old = self.costs[-cfg.stall_window - 1]
            window = np.array(self.costs[-cfg.stall_window :])
            if np.all(np.abs(window - old) <= cfg.stall_rtol * max(abs(old), 1e-300)):
                self.reason = "Stalled"
        if self.reason is not None:
            raise _Stop


def run_optimization(cost: CostEvaluator | Callable, config: OptConfig, theta0) -> OptRun:
    """Minimize the cost from ``theta0`` until C < epsilon, max_iters, or a stall."""
    t0 = time.perf_counter()
    theta = np.array(theta0, dtype=float)
    tracker = _Tracker(config)
    shadowed = getattr(cost, "mode", "exact") == "shadow"
    iteration = [0]

    def current():
        return cost.pinned(iteration[0]) if shadowed else cost

    def fun(x):
        return float(_evaluate(current(), np.asarray(x)[None])[0])

    def jac(x):
        return grad_full(current(), x, config.grad_mode, config.fd_step)

    best = {"theta": theta.copy()}
    try:
        c0 = fun(theta)
        g0 = jac(theta) if c0 >= config.epsilon else np.zeros_like(theta)
        tracker.record(c0, np.linalg.norm(g0))
        if config.method == "bfgs":
            _bfgs(fun, jac, theta, tracker, iteration, best)
        else:
            _gradient_descent(fun, jac, theta, c0, g0, config, tracker, iteration, best, shadowed)
    except _Stop:
        pass
    reason = tracker.reason or "Stalled"
    run = OptRun(
        theta_star=best["theta"],
        cost_history=tracker.costs,
        grad_norm_history=tracker.gnorms,
        terminated_by=reason,
        n_iters=len(tracker.costs) - 1,
        wall_time=time.perf_counter() - t0,
    )
    log.debug("optimization stopped: %s after %d iterations, cost %.3e", reason, run.n_iters, run.final_cost)
    return run


def _bfgs(fun, jac, theta, tracker: _Tracker, iteration, best) -> None:
    def callback(intermediate_result):
        x = intermediate_result.x
        best["theta"] = np.array(x, dtype=float)
        iteration[0] += 1
        tracker.record(intermediate_result.fun, np.linalg.norm(jac(x)))

    # gtol=0 leaves termination to the cost threshold, max_iters and stall rules.
    # A failed line search (common with noisy costs) restarts from the current
    # point with a fresh Hessian; a restart that makes no step ends the run.
    while True:
        before = iteration[0]
        res = minimize(
            fun,
            best["theta"],
            jac=jac,
            method="BFGS",
            callback=callback,
            options={"gtol": 0.0, "maxiter": tracker.config.max_iters + 1},
        )
        if res.fun < tracker.costs[-1]:
            best["theta"] = np.array(res.x, dtype=float)
            tracker.record(res.fun, np.linalg.norm(jac(res.x)))
        if iteration[0] == before:
            break
    tracker.reason = tracker.reason or "Stalled"


def _gradient_descent(fun, jac, theta, cost, grad, config: OptConfig, tracker: _Tracker, iteration, best, noisy=False) -> None:
    step = config.learning_rate
    while True:
        gg = float(np.dot(grad, grad))
        accepted = False
        while step > 1e-12 * config.learning_rate:
            trial = theta - step * grad
            c_trial = fun(trial)
            if c_trial <= cost - 1e-4 * step * gg:
                accepted = True
                break
            step /= 2
        iteration[0] += 1
        if accepted:
            theta, cost = trial, c_trial
            best["theta"] = theta.copy()
            step = min(2 * step, 10 * config.learning_rate)
        else:
            step = config.learning_rate
        if noisy:
            # compare the next trial steps against an estimate from the same stream
            cost = fun(theta)
        grad = jac(theta)
        tracker.record(cost, np.linalg.norm(grad))


@dataclass
class RestartResult:
    best: OptRun
    runs: list[OptRun]
    seeds: list[int]


def multi_restart(
    cost: CostEvaluator,
    config: OptConfig,
    n_restarts: int = 8,
    seed: int = 0,
    init_scale: float = 0.1,
    theta0=None,
    stop_on_success: bool = True,
) -> RestartResult:
    """Run several optimizations from random starts and keep the lowest final cost.

    ``theta0`` (e.g. a warm start) replaces the first random start. With
    ``stop_on_success`` the remaining restarts are skipped once a run reaches
    the cost threshold.
    """
    children = np.random.SeedSequence(seed).spawn(n_restarts)
    runs, seeds = [], []
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        start = init_params(cost.layout, rng, init_scale)
        if k == 0 and theta0 is not None:
            start = np.asarray(theta0, dtype=float)
        run = run_optimization(cost, config, start)
        runs.append(run)
        seeds.append(int(child.generate_state(1)[0]))
        if stop_on_success and run.terminated_by == "CostBelowEps":
            break
    best = min(runs, key=lambda r: r.final_cost)
    return RestartResult(best, runs, seeds)
