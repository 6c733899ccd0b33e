"""relaq: retrieve tuples of time-series fragments satisfying a graph of
heterogeneous relation constraints, and recommend query extensions.
"""

from .datamodel import (
    Dataset,
    MetaLabels,
    PreprocessParams,
    parse_config,
    parse_dataset,
    serialize_dataset,
    validate,
)
from .matcher import (
    FragmentNode,
    QueryOutcome,
    ResultGraph,
    execute_query,
    outcome_to_dict,
)
from .preprocess import ArtifactSet
from .querymodel import QueryGraph, Relalink, Timebox, parse_query, serialize_query
from .recommender import GuidanceMatrix, recommend
from .relations import ArithmeticSpec, RelationKind, strength
from .storage import load_artifacts, save_artifacts

__version__ = "0.1.0"

__all__ = [
    "ArithmeticSpec",
    "ArtifactSet",
    "Dataset",
    "FragmentNode",
    "GuidanceMatrix",
    "MetaLabels",
    "PreprocessParams",
    "QueryGraph",
    "QueryOutcome",
    "Relalink",
    "RelationKind",
    "ResultGraph",
    "Timebox",
    "execute_query",
    "load_artifacts",
    "outcome_to_dict",
    "parse_config",
    "parse_dataset",
    "parse_query",
    "recommend",
    "save_artifacts",
    "serialize_dataset",
    "serialize_query",
    "strength",
    "validate",
]
