"""Sampling schemes built from several rank-1 lattices for sparse trigonometric polynomials."""

from .construct import (
    ConstructionAborted,
    ConstructionParams,
    ConstructionReport,
    compute_s,
    construct,
    construct_alg1,
    construct_alg2,
    construct_alg3,
    construct_alg4,
    construct_alg5,
    construct_alg6,
    construct_alg7,
    find_M_ICc,
)
from .estimator import LatticeSampler
from .freqset import expansion, hyperbolic_cross, hyperbolic_cross_size, random_cube_freqset, reduce_mod
from .lattice import MultipleRank1Lattice, Rank1Lattice, aliasing_free_set, mr1l_node_count
from .numtheory import collision_free_primes, is_collision_free, is_prime, next_prime
from .plan import PeelingPlan, PeelingStage
from .transform import adjoint, dft_arbitrary_length, evaluate, reconstruct_direct, reconstruct_peeling
from .verify import check_peeling_plan, check_reconstruction_property, column_rank_full, condition_number

__version__ = "0.1.0"

__all__ = [
    "ConstructionAborted",
    "ConstructionParams",
    "ConstructionReport",
    "LatticeSampler",
    "MultipleRank1Lattice",
    "PeelingPlan",
    "PeelingStage",
    "Rank1Lattice",
    "adjoint",
    "aliasing_free_set",
    "check_peeling_plan",
    "check_reconstruction_property",
    "collision_free_primes",
    "column_rank_full",
    "compute_s",
    "condition_number",
    "construct",
    "construct_alg1",
    "construct_alg2",
    "construct_alg3",
    "construct_alg4",
    "construct_alg5",
    "construct_alg6",
    "construct_alg7",
    "dft_arbitrary_length",
    "evaluate",
    "expansion",
    "find_M_ICc",
    "hyperbolic_cross",
    "hyperbolic_cross_size",
    "is_collision_free",
    "is_prime",
    "mr1l_node_count",
    "next_prime",
    "random_cube_freqset",
    "reconstruct_direct",
    "reconstruct_peeling",
    "reduce_mod",
]
