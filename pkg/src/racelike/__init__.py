"""Unsupervised discovery of race-like groups from spatial and social segregation."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FeatureSchema,
    GroupAssignment,
    Population,
    SeededRng,
    SocialGraph,
    TractMap,
    build_graph,
    build_population,
)
from .detect import CenteredZero, Quantile  # noqa: E402
from .fairness import (  # noqa: E402
    PredictionSet,
    alignment_score,
    dp_gap,
    eo_adjust,
    eo_gap,
    ftu_check,
)
from .network import aggregate_edges, assortativity, detect_network_groups, mixing_matrix  # noqa: E402
from .spatial import (  # noqa: E402
    aggregate_tracts,
    detect_spatial_groups,
    dissimilarity,
    dissimilarity_for_assignment,
)
