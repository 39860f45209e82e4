"""Shadow distillation: tr(O1 rho^m O2 rho^m) / tr(rho^m)^2 from classical shadows.

The cyclic shift S_k|b_1 ... b_k> = |b_2 ... b_k b_1> satisfies
tr[(X_1 kron ... kron X_k) S_k] = tr(X_1 X_2 ... X_k), so every multi-copy trace
is evaluated as a chain of d x d products instead of a d^k dimensional matrix.
"""

from __future__ import annotations

import numpy as np

from .core import as_matrix
from .errors import TooFewShadows, TooLarge
from .shadows import ShadowSet, estimate_quadratic

MAX_SHIFT_DIM = 4096
MAX_COPIES = 3


def shift_operator(m: int, dim: int) -> np.ndarray:
    """Permutation matrix of the cyclic shift over ``m`` copies of a ``dim``-level system."""
    if m < 1:
        raise ValueError("m must be >= 1")
    total = dim**m
    if total > MAX_SHIFT_DIM:
        raise TooLarge(f"shift operator of dimension {total} exceeds {MAX_SHIFT_DIM}")
    idx = np.arange(total)
    digits = np.stack(np.unravel_index(idx, (dim,) * m))  # (m, total), digit 0 most significant
    shifted = np.ravel_multi_index(tuple(np.roll(digits, -1, axis=0)), (dim,) * m)
    s = np.zeros((total, total))
    s[shifted, idx] = 1.0
    return s


def chain_trace(mats) -> np.ndarray:
    """tr(X_1 X_2 ... X_k) for stacks ``mats[k]`` of shape (..., d, d)."""
    prod = mats[0]
    for x in mats[1:]:
        prod = prod @ x
    return np.trace(prod, axis1=-2, axis2=-1)


def _distinct_tuples(n: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` tuples of ``k`` mutually distinct indices below ``n`` (rejection sampling)."""
    out = np.empty((0, k), dtype=np.int64)
    while len(out) < count:
        cand = rng.integers(0, n, size=(max(2 * (count - len(out)), 16), k))
        srt = np.sort(cand, axis=1)
        ok = np.all(np.diff(srt, axis=1) != 0, axis=1)
        out = np.concatenate([out, cand[ok]])
    return out[:count]


def distilled_terms(ss: ShadowSet, O1, O2, m: int, n_tuples: int = 10_000, seed: int = 0):
    """Per-tuple numerator and denominator samples.

    Returns ``(num, den)`` where ``num[t] = tr(O1 r_1 ... r_m O2 r_{m+1} ... r_2m)``
    and ``den[t] = tr(r_1 ... r_m)`` for independently drawn distinct shadows.
    """
    if m < 1 or m > MAX_COPIES:
        raise TooLarge(f"distillation supports 1 <= m <= {MAX_COPIES}")
    if ss.n_unitaries < 2 * m:
        raise TooFewShadows(f"need at least {2 * m} shadows for m={m}, got {ss.n_unitaries}")
    mats = ss.matrices
    O1, O2 = as_matrix(O1), as_matrix(O2)
    rng = np.random.default_rng(seed)
    idx = _distinct_tuples(ss.n_unitaries, 2 * m, n_tuples, rng)
    chain = [O1 @ mats[idx[:, 0]]] + [mats[idx[:, k]] for k in range(1, m)]
    chain += [O2 @ mats[idx[:, m]]] + [mats[idx[:, k]] for k in range(m + 1, 2 * m)]
    num = chain_trace(chain)
    didx = _distinct_tuples(ss.n_unitaries, m, n_tuples, rng)
    den = chain_trace([mats[didx[:, k]] for k in range(m)])
    return num, den


def distilled_estimate(ss: ShadowSet, O1, O2, m: int, n_tuples: int = 10_000, seed: int = 0) -> float:
    """Estimate tr(O1 rho^m O2 rho^m) / tr(rho^m)^2.

    ``m = 1`` uses the exact pair U-statistic (the denominator is identically 1).
    """
    if m == 1:
        if ss.n_unitaries < 2:
            raise TooFewShadows("need at least 2 shadows")
        return float(estimate_quadratic(ss, O1, O2).real)
    num, den = distilled_terms(ss, O1, O2, m, n_tuples, seed)
    return float((np.mean(num) / np.mean(den) ** 2).real)


def distilled_value_exact(rho, O1, O2, m: int) -> float:
    """Dense reference tr(O1 rho^m O2 rho^m) / tr(rho^m)^2."""
    rho, O1, O2 = as_matrix(rho), as_matrix(O1), as_matrix(O2)
    rm = np.linalg.matrix_power(rho, m)
    return float((np.trace(O1 @ rm @ O2 @ rm) / np.trace(rm) ** 2).real)


def distilled_value_two_copy(rho, O1, O2, m: int) -> float:
    """Dense reference tr(O sigma^m) / tr(sigma^m) with sigma = rho kron rho, O = S_2 (O1 kron O2)."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    sigma = np.kron(rho, rho)
    o = shift_operator(2, d) @ np.kron(as_matrix(O1), as_matrix(O2))
    sm = np.linalg.matrix_power(sigma, m)
    return float((np.trace(o @ sm) / np.trace(sm)).real)
