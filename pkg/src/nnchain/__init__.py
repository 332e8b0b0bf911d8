"""Nearest-neighbor chain algorithms with brute-force oracles.

Submodules: geom, kann, snn, params, mftsp, steiner, motorcycle, matching,
cover, and the command-line workbench in cli.
"""

from .geom import LpMetric
from .kann import KannIndex
from .snn import Hard, Soft, SnnIndex, closest_pair
from .params import Arity, ValidParams, analytic_2d_l2, find_params, falsify_params
from .mftsp import mftsp_oracle, mftsp_snnc, mnn_strategy_random
from .steiner import WeightedGraph, steiner_mftsp
from .motorcycle import Motorcycle, mc_oracle, motorcycle_graph
from .matching import gale_shapley_oracle, narcissistic_match, verify_stability
from .cover import CoverInstance, cover_exact, cover_greedy_alt, cover_nnc, greedy_15d, tightness_search

__version__ = "0.1.0"

__all__ = [
    "LpMetric", "KannIndex", "Hard", "Soft", "SnnIndex", "closest_pair",
    "Arity", "ValidParams", "analytic_2d_l2", "find_params", "falsify_params",
    "mftsp_oracle", "mftsp_snnc", "mnn_strategy_random", "WeightedGraph", "steiner_mftsp",
    "Motorcycle", "mc_oracle", "motorcycle_graph", "gale_shapley_oracle", "narcissistic_match",
    "verify_stability", "CoverInstance", "cover_exact", "cover_greedy_alt", "cover_nnc", "greedy_15d",
    "tightness_search",
]
