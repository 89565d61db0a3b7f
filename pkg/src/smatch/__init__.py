"""Neuron activation subspace matching.

Find the maximum match, v-minimal matches and simple matches between two sets
of neuron activation vectors, plus brute-force oracles and instance generators
for checking them.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateNeuronError,
    DimensionMismatchError,
    FormatError,
    GenerationError,
    InvalidInputError,
    ParseError,
    SmatchError,
    TooLargeError,
)
from .geometry import (
    NumericPolicy,
    OrthonormalBasis,
    dist_to_span,
    orthonormal_basis,
    relative_residual,
    subspace_angle,
)
from .matching import (
    MatchPair,
    MatchProblem,
    NeuronId,
    NotInMaximumMatch,
    SimpleMatchReport,
    all_min_match,
    is_match,
    match_union,
    max_match,
    min_match,
    sampled_simple_matches,
    similarity,
    similarity_sweep,
    simple_matches,
)
from .instances import Instance

__all__ = [name for name in dir() if not name.startswith("_")]
