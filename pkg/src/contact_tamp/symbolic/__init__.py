from .transitions import (
    SymbolicAction,
    candidate_pairs,
    enumerate_transitions,
    goal_satisfied,
)
from .skeleton import (
    GRASP,
    LIFT,
    PLACE,
    RELEASE,
    ManipulationSkeleton,
    SkeletonStep,
    generate_skeletons,
    goal_pairs_for_placements,
    grasp_bindings,
)
from .search import ContactSearch, SearchConfig, SearchNode

__all__ = [
    "SymbolicAction",
    "candidate_pairs",
    "enumerate_transitions",
    "goal_satisfied",
    "GRASP",
    "LIFT",
    "PLACE",
    "RELEASE",
    "ManipulationSkeleton",
    "SkeletonStep",
    "generate_skeletons",
    "goal_pairs_for_placements",
    "grasp_bindings",
    "ContactSearch",
    "SearchConfig",
    "SearchNode",
]
