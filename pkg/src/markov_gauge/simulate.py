"""Random DAGs, linear-Gaussian SEM data, and the data-overlap experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .citest import fisher_z_columns
from .data import Dataset, subsample_rows
from .dsep import implied_facts
from .errors import DegenerateTestError
from .graph import Dag
from .runtime import rng_for, task_seed
from .ustats import anderson_darling

CONDITIONS = ("sub", "orig", "new")


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 25
    avg_degree: float = 5.0
    n_train: int = 500
    n_test: int = 500
    coef_range: tuple[float, float] = (0.3, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        if self.avg_degree < 0:
            raise ValueError("avg_degree must be nonnegative")
        max_edges = self.n_nodes * (self.n_nodes - 1) / 2
        if self.avg_degree * self.n_nodes / 2 > max_edges:
            raise ValueError(
                f"average degree {self.avg_degree} infeasible for {self.n_nodes} nodes "
                f"(at most {self.n_nodes - 1})"
            )
        low, high = self.coef_range
        if not 0 < low < high:
            raise ValueError("coef_range must satisfy 0 < low < high")


def node_names(n: int) -> list[str]:
    return [f"X{i + 1}" for i in range(n)]


def target_edge_count(n_nodes: int, avg_degree: float) -> int:
    """``round(avg_degree * n_nodes / 2)``, ties to even."""
    return round(avg_degree * n_nodes / 2)


def random_dag(n_nodes: int, avg_degree: float, seed, names: Sequence[str] | None = None) -> Dag:
    """Uniformly chosen edge set of the target size, oriented by node index."""
    m = target_edge_count(n_nodes, avg_degree)
    max_edges = n_nodes * (n_nodes - 1) // 2
    if m > max_edges:
        raise ValueError(f"{m} edges requested but {n_nodes} nodes allow at most {max_edges}")
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pairs), size=m, replace=False) if m else []
    return Dag(names or node_names(n_nodes), [pairs[k] for k in sorted(chosen)])


@dataclass(frozen=True, eq=False)
class LinearSem:
    """Linear SEM with standard normal noise; ``weights[i, j]`` is the i -> j coefficient."""

    dag: Dag
    weights: np.ndarray

    def sample(self, n: int, rng: np.random.Generator, standardize: bool = True) -> Dataset:
        p = self.dag.n_nodes
        noise = rng.standard_normal((n, p))
        x = np.zeros((n, p))
        for j in self.dag.topological_order:
            pa = sorted(self.dag.parents_of(j))
            x[:, j] = noise[:, j]
            if pa:
                x[:, j] += x[:, pa] @ self.weights[pa, j]
        if standardize:
            x = (x - x.mean(axis=0)) / x.std(axis=0)
        return Dataset(self.dag.nodes, x)

    def covariance(self) -> np.ndarray:
        """Population covariance before standardization."""
        p = self.dag.n_nodes
        inv = np.linalg.inv(np.eye(p) - self.weights.T)
        return inv @ inv.T

    def correlation(self) -> np.ndarray:
        cov = self.covariance()
        sd = np.sqrt(np.diag(cov))
        return cov / np.outer(sd, sd)


def random_sem(dag: Dag, coef_range: tuple[float, float], rng: np.random.Generator) -> LinearSem:
    low, high = coef_range
    w = np.zeros((dag.n_nodes, dag.n_nodes))
    for i, j in sorted(dag.edges):
        w[i, j] = rng.uniform(low, high) * rng.choice((-1.0, 1.0))
    return LinearSem(dag, w)


def sem_for(dag: Dag, cfg: SimConfig) -> LinearSem:
    return random_sem(dag, cfg.coef_range, rng_for(cfg.seed, "weights"))


def simulate_gaussian(dag: Dag, cfg: SimConfig) -> tuple[Dataset, Dataset]:
    """Independent (train, test) draws from one randomly parameterized SEM."""
    sem = sem_for(dag, cfg)
    train = sem.sample(cfg.n_train, rng_for(cfg.seed, "train"))
    test = sem.sample(cfg.n_test, rng_for(cfg.seed, "test"))
    return train, test


# --- data overlap -----------------------------------------------------------


@dataclass
class OverlapReport:
    n_nodes: int
    avg_degree: float
    sample_sizes: list[int]
    reps: int
    fraction: float
    # keyed by (N, condition)
    pooled: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    ad_pvalues: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)

    def ks_table(self, kind: str = "pooled") -> dict[int, dict[str, float]]:
        """Two-sample KS p-values between conditions, per sample size."""
        source = self.pooled if kind == "pooled" else self.ad_pvalues
        table = {}
        for n in self.sample_sizes:
            row = {}
            for a, b in (("sub", "orig"), ("sub", "new"), ("orig", "new")):
                row[f"{a}-{b}"] = float(stats.ks_2samp(source[n, a], source[n, b]).pvalue)
            table[n] = row
        return table

    def diagonal_distance(self, kind: str = "pooled") -> dict[int, dict[str, float]]:
        """Sup distance between each condition's ECDF and the diagonal."""
        source = self.pooled if kind == "pooled" else self.ad_pvalues
        out = {}
        for n in self.sample_sizes:
            out[n] = {c: _sup_to_diagonal(source[n, c]) for c in CONDITIONS}
        return out

    def ecdf_rows(self, grid_points: int = 101) -> list[dict]:
        grid = np.linspace(0.0, 1.0, grid_points)
        rows = []
        for kind, source in (("ad", self.ad_pvalues), ("pooled", self.pooled)):
            for n in self.sample_sizes:
                for c in CONDITIONS:
                    u = np.sort(source[n, c])
                    ecdf = np.searchsorted(u, grid, side="right") / max(u.size, 1)
                    for t, f in zip(grid, ecdf):
                        rows.append({"kind": kind, "N": n, "condition": c, "t": round(float(t), 6),
                                     "ecdf": round(float(f), 6)})
        return rows

    def to_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "avg_degree": self.avg_degree,
            "sample_sizes": self.sample_sizes,
            "reps": self.reps,
            "fraction": self.fraction,
            "ks_pooled": {str(k): v for k, v in self.ks_table("pooled").items()},
            "ks_ad": {str(k): v for k, v in self.ks_table("ad").items()} if self.reps > 1 else {},
            "diagonal_distance_pooled": {str(k): v for k, v in self.diagonal_distance("pooled").items()},
            "diagonal_distance_ad": {str(k): v for k, v in self.diagonal_distance("ad").items()},
            "n_pvalues": {f"{n}/{c}": int(v.size) for (n, c), v in self.pooled.items()},
        }


def _sup_to_diagonal(u: np.ndarray) -> float:
    u = np.sort(np.asarray(u, dtype=float))
    n = u.size
    if n == 0:
        return 1.0
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def overlap_experiment(
    n_nodes: int = 25,
    avg_degree: float = 5.0,
    sample_sizes: Sequence[int] = (100, 1000),
    reps: int = 100,
    seed: int = 0,
    fraction: float = 0.5,
    coef_range: tuple[float, float] = (0.3, 1.0),
) -> OverlapReport:
    """Ordered-local p-values on the true graph under three data regimes.

    ``sub`` draws a fresh subsample per test, ``orig`` reuses the whole
    dataset for every test, ``new`` simulates a fresh dataset per test.
    """
    report = OverlapReport(n_nodes, avg_degree, list(sample_sizes), reps, fraction)
    for n in sample_sizes:
        pooled = {c: [] for c in CONDITIONS}
        ad = {c: [] for c in CONDITIONS}
        for rep in range(reps):
            dag = random_dag(n_nodes, avg_degree, rng_for(seed, "overlap-graph", n, rep))
            sem = random_sem(dag, coef_range, rng_for(seed, "overlap-weights", n, rep))
            data = sem.sample(n, rng_for(seed, "overlap-data", n, rep))
            facts = implied_facts(dag)
            per_rep = {c: [] for c in CONDITIONS}
            base = int(rng_for(seed, "overlap-sub", n, rep).integers(2**62))
            for idx, f in enumerate(facts):
                rows = subsample_rows(n, fraction, np.random.default_rng(task_seed(base, 0, idx)))
                fresh = sem.sample(n, rng_for(seed, "overlap-new", n, rep, idx))
                for cond, values, r in (("sub", data.values, rows), ("orig", data.values, None),
                                        ("new", fresh.values, None)):
                    try:
                        p, _, _ = fisher_z_columns(values, f.x, f.y, f.cond, r)
                    except DegenerateTestError:
                        continue
                    per_rep[cond].append(p)
            for c in CONDITIONS:
                pooled[c].extend(per_rep[c])
                if len(per_rep[c]) >= 5:
                    ad[c].append(anderson_darling(per_rep[c])[1])
        for c in CONDITIONS:
            report.pooled[n, c] = np.asarray(pooled[c])
            report.ad_pvalues[n, c] = np.asarray(ad[c])
    return report
