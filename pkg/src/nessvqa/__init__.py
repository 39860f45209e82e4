"""Variational quantum search for nonequilibrium steady states of open spin chains."""

from .ansatz import AnsatzLayout, ParamVector, prepare_mixed_state, standard_layout
from .core import DensityMatrix, PauliString, fidelity, infidelity, pauli_matrix
from .distillation import distilled_estimate
from .errors import NessError
from .lindblad import LindbladSpec, apply_lindbladian, cost_exact, exact_steady_state
from .models import ModelParams, build_model, heisenberg_spec, ising_spec
from .optimizer import CostEvaluator, OptConfig, ShadowConfig, multi_restart, run_optimization
from .shadows import ShadowSet, estimate_cost, estimate_quadratic, sample_shadow_set

__version__ = "0.1.0"

__all__ = [
    "AnsatzLayout",
    "ParamVector",
    "prepare_mixed_state",
    "standard_layout",
    "DensityMatrix",
    "PauliString",
    "fidelity",
    "infidelity",
    "pauli_matrix",
    "distilled_estimate",
    "NessError",
    "LindbladSpec",
    "apply_lindbladian",
    "cost_exact",
    "exact_steady_state",
    "ModelParams",
    "build_model",
    "heisenberg_spec",
    "ising_spec",
    "CostEvaluator",
    "OptConfig",
    "ShadowConfig",
    "multi_restart",
    "run_optimization",
    "ShadowSet",
    "estimate_cost",
    "estimate_quadratic",
    "sample_shadow_set",
]
