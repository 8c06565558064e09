"""Exact algebra of normalized jet variables and its unitary invariants."""

from .core import (ANTIHOLO, G, H, HOLO, OMEGA, OMEGABAR, ONE, DimensionError,
                   JetVariable, MalformedVariableError, Monomial, Polynomial,
                   canonicalize, count_by_kind, degree, monomial_variables, omega1,
                   omegabar1, restrict, weight)
from .enumerate import DEFAULT_BOUNDS, ResourceLimitError, enumerate_monomials
from .invariants import (BEntry, NotInKernelError, SpecialMonomialReport,
                         TwoMonomialReport, apply_derivation, b_set,
                         check_degree_balance, check_two_monomial_property,
                         echelon_basis, in_top_weight_space, invariant_basis,
                         is_top_weight_normal_form, kernel_of_restriction,
                         rotation_coefficients, single_changes, special_monomial,
                         transform, u_count)
from .serialize import basis_from_json, basis_to_json

__all__ = [
    "ANTIHOLO", "G", "H", "HOLO", "OMEGA", "OMEGABAR", "ONE", "DimensionError",
    "JetVariable", "MalformedVariableError", "Monomial", "Polynomial", "canonicalize",
    "count_by_kind", "degree", "monomial_variables", "omega1", "omegabar1", "restrict",
    "weight", "DEFAULT_BOUNDS", "ResourceLimitError", "enumerate_monomials", "BEntry",
    "NotInKernelError", "SpecialMonomialReport", "TwoMonomialReport", "apply_derivation",
    "b_set", "check_degree_balance", "check_two_monomial_property", "echelon_basis",
    "in_top_weight_space", "invariant_basis", "is_top_weight_normal_form", "kernel_of_restriction",
    "rotation_coefficients", "single_changes", "special_monomial", "transform", "u_count",
    "basis_from_json", "basis_to_json",
]
