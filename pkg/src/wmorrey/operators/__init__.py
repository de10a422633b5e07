"""Maximal, singular, commutator and reflected operators on sampled fields."""
from .kernels import KernelCheck, KernelError, KernelSpec, hilbert, kernel_by_name, laplace_hessian, riesz_quadratic
from .reflection import (
    EllipticityViolated,
    ReflectionMap,
    geometric_inequality_check,
    nonsingular_apply,
    random_spd_field,
    reflect,
    reflect_bounds_check,
    tilde,
)
from .singular import commutator_apply, cz_apply, jump_cells, maximal, pv_cutoff_consistency
from .ratios import local_commutator_ratio, local_growth_ratio, norm_ratio_estimate, support_sweep, test_fields

__all__ = [
    "KernelCheck", "KernelError", "KernelSpec", "hilbert", "kernel_by_name", "laplace_hessian",
    "riesz_quadratic", "EllipticityViolated", "ReflectionMap", "geometric_inequality_check",
    "nonsingular_apply", "random_spd_field", "reflect", "reflect_bounds_check", "tilde",
    "commutator_apply", "cz_apply", "jump_cells", "maximal", "pv_cutoff_consistency",
    "local_commutator_ratio", "local_growth_ratio", "norm_ratio_estimate", "support_sweep", "test_fields",
]
