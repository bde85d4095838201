"""Cross-algorithm frugality search over candidate graphs."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .checker import CheckConfig, CheckReport, markov_check
from .data import Dataset
from .errors import GraphError
from .graph import Cpdag, Graph, is_legal_cpdag, read_graph, serialize_graph
from .metrics import MetricsRow, baseline_fit, metrics_row
from .runtime import derive_seed

log = logging.getLogger(__name__)

GRAPH_SUFFIXES = (".txt", ".graph", ".g")


class CandidateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Candidate:
    id: str
    graph: Graph
    source: str = ""


@dataclass
class CandidateOutcome:
    id: str
    graph: Graph
    report: CheckReport | None
    metrics: MetricsRow | None = None
    skipped: str | None = None

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed

    def table_row(self) -> dict:
        uni = self.report.uniformity if self.report else None
        row = {
            "id": self.id,
            "edges": self.graph.edge_count,
            "p_ad": uni.p_ad if uni else None,
            "ks": uni.ks_stat if uni else None,
            "p_ks": uni.p_ks if uni else None,
            "kl_div": uni.kl_div if uni else None,
            "outcome": self.report.outcome if self.report else "skipped",
            "passed": int(self.passed),
        }
        if self.metrics is not None:
            m = self.metrics
            row.update(bic=m.bic, cfi=m.cfi, nfi=m.nfi, f1=m.f1, shd=m.shd)
        return row


@dataclass
class CafsResult:
    per_candidate: list[CandidateOutcome]
    selected: str | None
    min_kldiv: str | None
    alpha: float
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def none_passed(self) -> bool:
        return self.selected is None

    def outcome(self, cid: str) -> CandidateOutcome:
        for o in self.per_candidate:
            if o.id == cid:
                return o
        raise KeyError(cid)

    def table(self) -> list[dict]:
        rows = []
        for o in self.per_candidate:
            row = o.table_row()
            row["is_cafs_selected"] = int(o.id == self.selected)
            row["is_min_kldiv"] = int(o.id == self.min_kldiv)
            rows.append(row)
        return rows

    def to_dict(self, include_facts: bool = False) -> dict:
        return {
            "alpha": self.alpha,
            "selected": self.selected,
            "min_kldiv": self.min_kldiv,
            "none_passed": self.none_passed,
            "skipped": [{"id": i, "reason": r} for i, r in self.skipped],
            "candidates": [
                {
                    "id": o.id,
                    "graph": serialize_graph(o.graph),
                    "report": o.report.to_dict(include_facts) if o.report else None,
                    "metrics": o.metrics.to_dict() if o.metrics else None,
                    "skipped": o.skipped,
                }
                for o in self.per_candidate
            ],
        }


def candidate_seed(base_seed: int, g: Graph) -> int:
    """Check seed tied to graph content, so equal graphs get equal reports."""
    return derive_seed(base_seed, "candidate", serialize_graph(g))


def check_candidate(c: Candidate, d: Dataset, cfg: CheckConfig) -> CheckReport:
    return markov_check(c.graph, d, replace(cfg, base_seed=candidate_seed(cfg.base_seed, c.graph)), c.id)


def cafs(
    candidates: Sequence[Candidate],
    d: Dataset,
    cfg: CheckConfig | None = None,
    truth: Graph | None = None,
    with_metrics: bool = True,
) -> CafsResult:
    """Check every legal candidate; select the passing one with fewest edges.

    Ties on edge count go to the lexicographically smallest id, so the
    selection does not depend on candidate order.  ``min_kldiv`` is the
    passing candidate whose p-value histogram is closest to uniform.
    """
    cfg = cfg or CheckConfig()
    if not candidates:
        raise ValueError("no candidates given")
    ids = [c.id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate ids must be unique")
    baseline = None
    if with_metrics:
        baseline = baseline_fit(d, candidates[0].graph.nodes)
    outcomes: list[CandidateOutcome] = []
    skipped: list[tuple[str, str]] = []
    for c in candidates:
        if isinstance(c.graph, Cpdag) and not is_legal_cpdag(c.graph):
            reason = "not a legal CPDAG"
            log.info("skipping candidate %s: %s", c.id, reason)
            skipped.append((c.id, reason))
            outcomes.append(CandidateOutcome(c.id, c.graph, None, None, reason))
            continue
        report = check_candidate(c, d, cfg)
        metrics = metrics_row(c.graph, d, truth, baseline) if with_metrics else None
        outcomes.append(CandidateOutcome(c.id, c.graph, report, metrics))
    if len(skipped) == len(candidates):
        raise GraphError("no legal candidates to check")
    passers = [o for o in outcomes if o.passed]
    selected = min(passers, key=lambda o: (o.graph.edge_count, o.id)).id if passers else None
    min_kl = min(passers, key=lambda o: (o.report.uniformity.kl_div, o.id)).id if passers else None
    return CafsResult(outcomes, selected, min_kl, cfg.alpha, skipped)


def _expand(paths: Iterable[str | Path]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(f for f in p.iterdir() if f.suffix in GRAPH_SUFFIXES))
        else:
            files.append(p)
    return files


def load_candidates(paths: Iterable[str | Path]) -> list[Candidate]:
    """One candidate per parseable graph file (directories are expanded).

    Unparseable files are skipped with a :class:`CandidateWarning`.
    """
    files = _expand(paths)
    if not files:
        raise ValueError("no candidate files given")
    out = []
    seen = set()
    for f in files:
        try:
            g = read_graph(f)
        except (OSError, GraphError) as exc:
            warnings.warn(f"skipping candidate {f}: {exc}", CandidateWarning, stacklevel=2)
            continue
        cid = f.stem
        if cid in seen:
            raise ValueError(f"duplicate candidate id {cid!r}")
        seen.add(cid)
        out.append(Candidate(cid, g, str(f)))
    return out
