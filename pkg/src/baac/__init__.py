"""Simulator for agents described by action theories over shared integer fluents.

Each agent plans locally; a supervisor merges the proposed action sets,
resolves conflicts and commits one global state per step.
"""
from .lang import parse_theory
from .lang.settings import RunConfig, load_settings, parse_settings
from .planner import Plan, Planner, plan, replan
from .problem import Problem, State
from .runner import RunResult, run
from .semantics import Trajectory, check_trajectory

__all__ = [
    "Plan", "Planner", "Problem", "RunConfig", "RunResult", "State", "Trajectory",
    "check_trajectory", "load_settings", "parse_settings", "parse_theory", "plan",
    "replan", "run",
]

__version__ = "0.1.0"
