"""Conditional infimum over finite correspondences, its law suite, and
hidden convexity of linear-quadratic problems under the square mapping."""

from .correspondence import Correspondence, FiniteSet
from .cond_inf import ExtRealFunction, cond_inf, cond_sup
from .convex_solver import Ball, Band, Box, Halfspaces, SolverParams, minimize
from .extended_real import ExtReal, lower_add, upper_add
from .quadratic_hidden import QuadraticProblem, SolveReport, solve

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Band",
    "Box",
    "Correspondence",
    "ExtReal",
    "ExtRealFunction",
    "FiniteSet",
    "Halfspaces",
    "QuadraticProblem",
    "SolveReport",
    "SolverParams",
    "cond_inf",
    "cond_sup",
    "lower_add",
    "minimize",
    "solve",
    "upper_add",
]
