"""Nondivergence Dirichlet problems: solver, representation check, local semi-norms and a priori constants."""
from .apriori import NormPair, PreconditionFailed, apriori_estimate, default_pairs, precondition_gate
from .problem import EllipticProblem, manufactured, problem_by_name
from .representation import representation_check
from .seminorms import Cutoff, LocalField, WeightSpec, seminorms
from .solver import Solution, SolverError, gradient, hessian, solve_dirichlet, unit_square

__all__ = ["EllipticProblem", "manufactured", "problem_by_name", "Solution", "SolverError", "gradient",
           "hessian", "solve_dirichlet", "unit_square", "representation_check", "Cutoff", "LocalField",
           "WeightSpec", "seminorms", "NormPair", "PreconditionFailed", "apriori_estimate", "default_pairs",
           "precondition_gate"]
