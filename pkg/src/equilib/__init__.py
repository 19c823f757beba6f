"""Equilibrium problems (NEP, GNEP, MOPEC, VI, QVI) reformulated as MCPs."""

from .errors import (
    EquilibError, DomainError, ParseError, UnknownSymbol, IndexOutOfRange, DuplicateName,
    PairSizeMismatch, MixedTopLevel, ValidationError, MultipleOwnership,
    NonImplicitSharedVariable, MissingOwnership, SharedEquNotEnabled,
    NoObjectiveDefiningEquation, ImplicitNotSquare, NonSquareImplicit, NonFreeImplicit,
    InvalidRelation, AssemblyError, AmbiguousReplication, UnmatchedParameterVariable,
    MismatchedExpectation,
)
from .model import Model, parse_model, format_model, fix_variable
from .empinfo import EquilibriumSpec, parse_empinfo, validate_ownership, STRATEGIES
from .options import Options, parse_options
from .reformulate import (MCPInstance, ModelStats, assemble_mcp, agent_kkt,
                          model_stats, block_density, extract_solution)
from .solver import SolverOptions, Status, Solution, solve_mcp
from .cli import load_problem, solve_problem, solve_texts, check_texts

__version__ = "0.1.0"
