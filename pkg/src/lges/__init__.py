"""Less greedy equivalence search for causal structure learning."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    InsufficientDataError,
    InternalConsistencyError,
    InvalidDataError,
    InvalidGraphError,
    InvalidOperatorError,
    LgesError,
    NoExtensionError,
)
from .graph import (
    Pdag,
    complete,
    cpdag_from_dag,
    d_separated,
    is_cpdag,
    mec_equal,
    meek_close,
    pdag_to_dag,
)
from .interventional import InterventionFamily, i_orient
from .kernels import BACKEND
from .knowledge import PriorKnowledge, parse_knowledge
from .score import GaussianBIC, OracleScore, stats_from_data
from .search import SearchAborted, SearchConfig, SearchTrace, ges, lges, lges0, lges_plus, run
from .synth import er_dag, random_sem, sample_sem, shd

__all__ = [
    "BACKEND", "ConfigurationError", "GaussianBIC", "InsufficientDataError",
    "InternalConsistencyError", "InterventionFamily", "InvalidDataError", "InvalidGraphError",
    "InvalidOperatorError", "LgesError", "NoExtensionError", "OracleScore", "Pdag",
    "PriorKnowledge", "SearchAborted", "SearchConfig", "SearchTrace", "complete",
    "cpdag_from_dag", "d_separated", "er_dag", "ges", "i_orient", "is_cpdag", "lges", "lges0",
    "lges_plus", "mec_equal", "meek_close", "parse_knowledge", "pdag_to_dag", "random_sem",
    "run", "sample_sem", "shd", "stats_from_data",
]
