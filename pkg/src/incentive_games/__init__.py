"""Incentive-based dynamics and equilibria for finite normal-form games."""

__version__ = "0.1.0"

from .errors import ConfigurationError, EvaluationError, GameError, SymmetryError
from .game import (Game, OpponentIndexCodec, Profile, decode_opponent_index, encode_opponent_index,
                   payoff_range, utility, utility_replace)
from .incentives import Incentive, SwitchRateTable, catalog as incentive_catalog
from .dynamics import (IntegratorConfig, Trajectory, check_invariant_region, derivative_limit_check,
                       dynamics_rhs, integrate, iterate_map, map_residual, t_map)
from .symmetry import SymmetricRegion
from .search import (EquilibriumReport, SearchConfig, enumerate_pure, equilibrium_residual, find_equilibria,
                     find_symmetric_equilibrium, nash_residual)
from .catalog import builtin_catalog, builtin_game
from .io import load_game, parse_incentive, parse_profile, save_game

__all__ = [
    "ConfigurationError", "EvaluationError", "GameError", "SymmetryError",
    "Game", "OpponentIndexCodec", "Profile", "decode_opponent_index", "encode_opponent_index",
    "payoff_range", "utility", "utility_replace",
    "Incentive", "SwitchRateTable", "incentive_catalog",
    "IntegratorConfig", "Trajectory", "check_invariant_region", "derivative_limit_check", "dynamics_rhs",
    "integrate", "iterate_map", "map_residual", "t_map",
    "SymmetricRegion",
    "EquilibriumReport", "SearchConfig", "enumerate_pure", "equilibrium_residual", "find_equilibria",
    "find_symmetric_equilibrium", "nash_residual",
    "builtin_catalog", "builtin_game",
    "load_game", "parse_incentive", "parse_profile", "save_game",
]
