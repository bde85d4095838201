"""The Markov check: p-values of implied facts tested for uniformity."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .citest import CiResult, fisher_z_columns
from .data import Dataset, subsample_rows
from .dsep import IndependenceFact, MarkovVariant, OrderedLocal, implied_facts
from .errors import DataError, DegenerateTestError, IllegalCpdagError
from .graph import Cpdag, Dag, Graph, consistent_extension, cpdag_of, is_legal_cpdag
from .runtime import resolve_workers, task_seed
from .ustats import MIN_VALUES, UniformityReport, uniformity_report

PASS, FAIL, NO_FACTS = "pass", "fail", "no_facts"


@dataclass(frozen=True)
class CheckConfig:
    variant: MarkovVariant = field(default_factory=OrderedLocal)
    subsample_fraction: float = 0.5
    min_pvalues: int = 200
    alpha: float = 0.05
    base_seed: int = 0
    test: str = "fisher-z"
    workers: int | None = None

    def __post_init__(self):
        if not 0 < self.subsample_fraction <= 1:
            raise ValueError("subsample_fraction must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.min_pvalues < 0:
            raise ValueError("min_pvalues must be nonnegative")
        if self.test != "fisher-z":
            raise ValueError(f"unsupported independence test {self.test!r}")


@dataclass
class CheckReport:
    graph_id: str
    outcome: str
    uniformity: UniformityReport | None
    n_facts: int
    facts_tested: int
    excluded_degenerate: int
    edge_count: int
    augmentation_rounds: int
    per_fact: list[CiResult]
    node_names: tuple[str, ...]
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool | None:
        """True/False for pass/fail, None when no facts could be tested."""
        if self.outcome == NO_FACTS:
            return None
        return self.outcome == PASS

    @property
    def passed(self) -> bool:
        return self.outcome == PASS

    @property
    def p_values(self) -> list[float]:
        return [r.p_value for r in self.per_fact]

    def to_dict(self, include_facts: bool = True) -> dict:
        out = {
            "graph_id": self.graph_id,
            "outcome": self.outcome,
            "verdict": self.verdict,
            "edge_count": self.edge_count,
            "n_facts": self.n_facts,
            "facts_tested": self.facts_tested,
            "excluded_degenerate": self.excluded_degenerate,
            "augmentation_rounds": self.augmentation_rounds,
            "uniformity": self.uniformity.to_dict() if self.uniformity else None,
            "notes": list(self.notes),
        }
        if include_facts:
            names = self.node_names
            out["per_fact"] = [
                {
                    "x": names[r.fact.x],
                    "y": names[r.fact.y],
                    "Z": [names[z] for z in r.fact.cond],
                    "fact": r.fact.format(names),
                    "p": r.p_value,
                    "stat": r.statistic,
                    "n_eff": r.effective_n,
                    "seed": r.seed,
                    "round": r.round,
                }
                for r in self.per_fact
            ]
        return out


def canonical_dag(g: Graph) -> Dag:
    """The consistent extension of ``g``'s CPDAG.

    Every member of a Markov equivalence class maps to the same DAG, so
    equivalent inputs are checked against the same fact list.
    """
    if isinstance(g, Dag):
        return consistent_extension(cpdag_of(g))
    if not is_legal_cpdag(g):
        raise IllegalCpdagError("graph is not a legal CPDAG")
    return consistent_extension(g)


def _run_chunk(values, col_of, tasks, fraction, base_seed):
    out = []
    n_rows = values.shape[0]
    for round_, idx, fact in tasks:
        seed = None
        rows = None
        if fraction < 1.0:
            seed = task_seed(base_seed, round_, idx)
            rows = subsample_rows(n_rows, fraction, np.random.default_rng(seed))
        try:
            p, z, n = fisher_z_columns(values, col_of[fact.x], col_of[fact.y],
                                       [col_of[c] for c in fact.cond], rows)
        except DegenerateTestError:
            out.append(None)
            continue
        out.append(CiResult(fact, p, z, n, seed, round_))
    return out


def _test_facts(
    d: Dataset,
    col_of: Sequence[int],
    facts: Sequence[IndependenceFact],
    rounds: int,
    cfg: CheckConfig,
) -> list[CiResult | None]:
    tasks = [(r, i, f) for r in range(rounds) for i, f in enumerate(facts)]
    workers = resolve_workers(cfg.workers)
    if workers <= 1 or len(tasks) < 2 * workers:
        return _run_chunk(d.values, col_of, tasks, cfg.subsample_fraction, cfg.base_seed)
    size = math.ceil(len(tasks) / workers)
    chunks = [tasks[k:k + size] for k in range(0, len(tasks), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [d.values] * len(chunks), [list(col_of)] * len(chunks), chunks,
                         [cfg.subsample_fraction] * len(chunks), [cfg.base_seed] * len(chunks))
        return [r for part in parts for r in part]


def _prepare(g: Graph, d: Dataset, cfg: CheckConfig):
    ext = canonical_dag(g)
    col_of = d.column_indices(list(g.nodes))
    facts = implied_facts(ext, cfg.variant)
    return ext, col_of, facts


def rounds_needed(n_facts: int, min_pvalues: int) -> int:
    if n_facts == 0:
        return 0
    return max(1, math.ceil(max(min_pvalues, MIN_VALUES) / n_facts))


def augment_pvalues(g: Graph, d: Dataset, cfg: CheckConfig, rounds: int) -> list[float]:
    """p-values for ``rounds`` passes over the fact list, round-major.

    Each test uses its own subsample seeded by (base seed, round, fact
    index), so a longer run extends a shorter one.  Degenerate tests are
    dropped.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _, col_of, facts = _prepare(g, d, cfg)
    results = _test_facts(d, col_of, facts, rounds, cfg)
    return [r.p_value for r in results if r is not None]


def markov_check(g: Graph, d: Dataset, cfg: CheckConfig | None = None, graph_id: str = "") -> CheckReport:
    """Test whether ``g`` is Markov to the distribution behind ``d``.

    Facts come from the canonical DAG of ``g``.  When they are fewer than
    ``cfg.min_pvalues`` the whole list is re-tested on fresh subsamples until
    enough p-values are pooled.  The verdict is ``p_ad > alpha``.
    """
    cfg = cfg or CheckConfig()
    if isinstance(g, Cpdag) and not is_legal_cpdag(g):
        raise IllegalCpdagError(f"{graph_id or 'graph'} is not a legal CPDAG")
    if cfg.subsample_fraction * d.n_rows < 4:
        raise DataError(f"{d.n_rows} rows are too few for subsample fraction {cfg.subsample_fraction}")
    ext, col_of, facts = _prepare(g, d, cfg)
    notes = []
    if not isinstance(cfg.variant, OrderedLocal):
        notes.append(f"variant {cfg.variant.label}")
    if isinstance(g, Cpdag) and g.undirected:
        notes.append("facts computed on the deterministic consistent extension")
    rounds = rounds_needed(len(facts), cfg.min_pvalues)
    results = _test_facts(d, col_of, facts, rounds, cfg) if facts else []
    ok = [r for r in results if r is not None]
    excluded = len(results) - len(ok)
    if excluded:
        notes.append(f"{excluded} degenerate tests excluded")
    if len(ok) < MIN_VALUES:
        if not facts:
            notes.append("graph implies no independence facts")
        return CheckReport(graph_id, NO_FACTS, None, len(facts), len(ok), excluded, g.edge_count,
                           rounds, ok, g.nodes, notes)
    uni = uniformity_report([r.p_value for r in ok])
    outcome = PASS if uni.p_ad > cfg.alpha else FAIL
    return CheckReport(graph_id, outcome, uni, len(facts), len(ok), excluded, g.edge_count,
                       rounds, ok, g.nodes, notes + uni.warnings)
