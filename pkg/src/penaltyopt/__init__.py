"""Distance-penalty methods for constrained optimization."""
from . import cones, sets, penalty, model, merit, direction, solver, stationarity, oracle
from .model import MaxOfSmooth, MinOfSmooth, Problem, Smooth
from .problemfile import parse_problem, render_problem
from .solver import SolverConfig, select_rho, solve

__all__ = [
    "cones", "sets", "penalty", "model", "merit", "direction", "solver", "stationarity", "oracle",
    "Smooth", "MaxOfSmooth", "MinOfSmooth", "Problem", "parse_problem", "render_problem",
    "SolverConfig", "select_rho", "solve",
]
