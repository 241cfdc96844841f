"""Approximate pointer states for open quantum systems with Lie-algebraic structure."""

__version__ = "0.1.0"

from .adjoint import AdjointDecomposition, Block, canonical_decomposition, decompose, evaluate_R
from .algebra import (LieModel, killing_form, model_from_generators, normalize_basis,
                      validate)
from .bath import (BathCoefficients, BathSpec, SpectralDensity, bath_coefficients,
                   coefficients_from_ratio)
from .dynamics import averaged_rate_oracle, integrate, linear_entropy, master_operator
from .errors import InputError, NumericalError, PointerSieveError
from .functional import (EntropyReport, FunctionalSpec, PureState, covariance,
                         entropy_functional, entropy_production, high_T_metric,
                         invariant_dispersion)
from .optimizer import (MinimizeConfig, SieveResult, brute_force_min, haar_random_state,
                        minimize, riemannian_gradient)
from .qbm import family_comparison, oscillator_model, qbm_entropy
from .spin import (coherent_entropy, coherent_minimum, coherent_overlap_analysis,
                   coherent_state, spin1_observables, spin1_solve, spin_functional,
                   spin_generators)

__all__ = [
    "AdjointDecomposition", "Block", "canonical_decomposition", "decompose", "evaluate_R",
    "LieModel", "killing_form", "model_from_generators", "normalize_basis", "validate",
    "BathCoefficients", "BathSpec", "SpectralDensity", "bath_coefficients",
    "coefficients_from_ratio", "averaged_rate_oracle", "integrate", "linear_entropy",
    "master_operator", "InputError", "NumericalError", "PointerSieveError", "EntropyReport",
    "FunctionalSpec", "PureState", "covariance", "entropy_functional", "entropy_production",
    "high_T_metric", "invariant_dispersion", "MinimizeConfig", "SieveResult", "brute_force_min",
    "haar_random_state", "minimize", "riemannian_gradient", "family_comparison",
    "oscillator_model", "qbm_entropy", "coherent_entropy", "coherent_minimum",
    "coherent_overlap_analysis", "coherent_state", "spin1_observables", "spin1_solve",
    "spin_functional", "spin_generators",
]
