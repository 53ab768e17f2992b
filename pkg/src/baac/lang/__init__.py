from .ast import (
    FALSE, TRUE, Abs, And, BinOp, Bool, Cmp, Fluent, Neg, Not, Num, Or, Rei,
    conj, conjuncts, disj, fluents, shift,
)
from .parser import ParseError, parse_constraint, parse_expr, parse_theory
from .settings import RenderHints, RunConfig, SettingsError, load_settings, parse_settings
from .theory import (
    ActionDecl, AgentTheory, ConflictOption, DynamicLaw, ExecAxiom,
    FailureOption, FluentDecl, GlobalConstraint, HelpAxiom, RequestAxiom,
)
from .validate import Diagnostic, validate_problem

__all__ = [
    "FALSE", "TRUE", "Abs", "And", "BinOp", "Bool", "Cmp", "Fluent", "Neg",
    "Not", "Num", "Or", "Rei", "conj", "conjuncts", "disj", "fluents", "shift",
    "ParseError", "parse_constraint", "parse_expr", "parse_theory",
    "RenderHints", "RunConfig", "SettingsError", "load_settings", "parse_settings",
    "ActionDecl", "AgentTheory", "ConflictOption", "DynamicLaw", "ExecAxiom",
    "FailureOption", "FluentDecl", "GlobalConstraint", "HelpAxiom", "RequestAxiom",
    "Diagnostic", "validate_problem",
]
