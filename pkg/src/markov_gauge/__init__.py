"""Markov condition checks for causal graph models and cross-algorithm
frugality search (CAFS) over candidate graphs."""

__version__ = "0.1.0"

from .cafs import Candidate, CafsResult, cafs, load_candidates
from .checker import CheckConfig, CheckReport, augment_pvalues, markov_check
from .citest import CiResult, DSepOracle, FisherZ, fisher_z_test
from .data import Dataset, load_csv, subsample
from .dsep import (
    GlobalSampled,
    IndependenceFact,
    Local,
    OrderedLocal,
    d_separated,
    implied_facts,
    parse_variant,
)
from .errors import (
    ConfigError,
    CycleError,
    DataError,
    DegenerateTestError,
    GraphError,
    GraphParseError,
    IllegalCpdagError,
)
from .graph import (
    Cpdag,
    Dag,
    consistent_extension,
    cpdag_of,
    is_legal_cpdag,
    parse_graph,
    read_graph,
    serialize_graph,
    valid_order,
    write_graph,
)
from .learners import LearnerSpec, candidate_grid, hill_climb, pc_lite, sp_oracle
from .metrics import adjacency_f1, bic, cfi, fit_sem, metrics_row, nfi, penalized_bic, shd
from .simulate import LinearSem, SimConfig, overlap_experiment, random_dag, simulate_gaussian
from .ustats import anderson_darling, kl_divergence_20bin, kolmogorov_smirnov, uniformity_report

__all__ = [name for name in dir() if not name.startswith("_")]
