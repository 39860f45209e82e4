"""Dissipative spin-chain benchmarks: transverse-field Ising and Heisenberg."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import X, Y, Z, single_site
from .errors import BadParams
from .lindblad import Convention, LindbladSpec

# Lowering operators along z, y and x, each of the form (A - iB)/2.
SIGMA_MINUS_Z = (X - 1j * Y) / 2
SIGMA_MINUS_Y = (X - 1j * Z) / 2
SIGMA_MINUS_X = (-Z - 1j * Y) / 2
SIGMA_MINUS = SIGMA_MINUS_Z

Boundary = Literal["open", "periodic"]


@dataclass(frozen=True)
class ModelParams:
    n_sites: int
    g: float = 0.0
    gammas: tuple[float, ...] = field(default=())
    boundary: Boundary = "open"

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(x) for x in self.gammas))
        if self.boundary not in ("open", "periodic"):
            raise BadParams(f"unknown boundary {self.boundary!r}", field="boundary")
        if any(x < 0 for x in self.gammas):
            raise BadParams("dissipation strengths must be non-negative", field="gammas")


def _bonds(n: int, boundary: Boundary) -> list[tuple[int, int]]:
    bonds = [(i, i + 1) for i in range(n - 1)]
    if boundary == "periodic":
        bonds.append((n - 1, 0))
    return bonds


def _two_site(a: np.ndarray, i: int, b: np.ndarray, j: int, n: int) -> np.ndarray:
    return single_site(a, i, n) @ single_site(b, j, n)


def _check(params: ModelParams, n_gammas: int, name: str) -> None:
    if params.n_sites < 2:
        raise BadParams(f"{name} model needs at least 2 sites", field="n_sites")
    if len(params.gammas) != n_gammas:
        raise BadParams(
            f"{name} model takes {n_gammas} dissipation strengths, got {len(params.gammas)}",
            field="gammas",
        )


def ising_spec(params: ModelParams, convention: Convention = "standard") -> LindbladSpec:
    """H = 1/2 sum ZZ + g sum X with damping (gamma_1) and dephasing (gamma_2) on every site."""
    _check(params, 2, "ising")
    n = params.n_sites
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for i, j in _bonds(n, params.boundary):
        h += 0.5 * _two_site(Z, i, Z, j, n)
    for i in range(n):
        h += params.g * single_site(X, i, n)
    g1, g2 = params.gammas
    jumps = []
    for i in range(n):
        jumps.append((single_site(SIGMA_MINUS, i, n), g1))
        jumps.append((single_site(Z, i, n), g2))
    return LindbladSpec(n, h, tuple(jumps), convention)


def heisenberg_spec(params: ModelParams, convention: Convention = "standard") -> LindbladSpec:
    """H = sum (ZZ + YY + XX) + g sum X with damping along z, y and x on every site."""
    _check(params, 3, "heisenberg")
    n = params.n_sites
    d = 2**n
    h = np.zeros((d, d), dtype=complex)
    for i, j in _bonds(n, params.boundary):
        for p in (Z, Y, X):
            h += _two_site(p, i, p, j, n)
    for i in range(n):
        h += params.g * single_site(X, i, n)
    jumps = []
    for i in range(n):
        for op, gamma in zip((SIGMA_MINUS_Z, SIGMA_MINUS_Y, SIGMA_MINUS_X), params.gammas):
            jumps.append((single_site(op, i, n), gamma))
    return LindbladSpec(n, h, tuple(jumps), convention)


# Decay towards |0>, used by the single-qubit toy models.
DECAY_TO_ZERO = np.array([[0, 1], [0, 0]], dtype=complex)


def damping_spec(params: ModelParams, convention: Convention = "standard") -> LindbladSpec:
    """Toy model: H = g sum X with decay |1> -> |0> of strength gamma on every site."""
    if params.n_sites < 1 or len(params.gammas) != 1:
        raise BadParams("damping model takes n_sites >= 1 and one dissipation strength", field="gammas")
    n = params.n_sites
    h = sum(params.g * single_site(X, i, n) for i in range(n))
    jumps = tuple((single_site(DECAY_TO_ZERO, i, n), params.gammas[0]) for i in range(n))
    return LindbladSpec(n, h, jumps, convention)


def dephasing_spec(params: ModelParams, convention: Convention = "standard") -> LindbladSpec:
    """Toy model: H = g sum Z with pure Z dephasing; its steady space is degenerate."""
    if params.n_sites < 1 or len(params.gammas) != 1:
        raise BadParams("dephasing model takes n_sites >= 1 and one dissipation strength", field="gammas")
    n = params.n_sites
    h = sum(params.g * single_site(Z, i, n) for i in range(n))
    jumps = tuple((single_site(Z, i, n), params.gammas[0]) for i in range(n))
    return LindbladSpec(n, h, jumps, convention)


MODELS = {
    "ising": ising_spec,
    "heisenberg": heisenberg_spec,
    "damping": damping_spec,
    "dephasing": dephasing_spec,
}

DEFAULT_GAMMAS = {
    "ising": (1.0, 0.5),
    "heisenberg": (1.0, 1.0, 1.0),
    "damping": (1.0,),
    "dephasing": (1.0,),
}


def build_model(name: str, params: ModelParams, convention: Convention = "standard") -> LindbladSpec:
    try:
        builder = MODELS[name.lower()]
    except KeyError:
        raise BadParams(f"unknown model {name!r}; choose from {sorted(MODELS)}", field="model") from None
    return builder(params, convention)

