"""Model evaluation: Gaussian SEM fit, BIC, fit indices, F1 and SHD."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .citest import ml_covariance
from .data import Dataset
from .errors import DataError, GraphError
from .graph import Cpdag, Dag, Graph, as_cpdag, consistent_extension, skeleton_pairs

GOOD_FIT = 0.9
EXCELLENT_FIT = 0.95


@dataclass(frozen=True, eq=False)
class SemFit:
    coefficients: dict[tuple[str, str], float]
    residual_variances: np.ndarray
    implied_cov: np.ndarray
    log_likelihood: float
    chi_square: float
    df: int
    n: int
    n_params: int


def fit_sem(d: Dataset, g: Graph) -> SemFit:
    """Maximum-likelihood linear-Gaussian fit of ``g`` by per-node regression.

    A CPDAG is fit through its consistent extension; every DAG in the class
    has the same maximized likelihood.
    """
    dag = consistent_extension(g) if isinstance(g, Cpdag) else g
    cols = d.column_indices(list(dag.nodes))
    s = ml_covariance(d.values[:, cols])
    p = dag.n_nodes
    n = d.n_rows
    sign, logdet_s = np.linalg.slogdet(s)
    if sign <= 0 or not np.isfinite(logdet_s):
        raise DataError("sample covariance is singular")
    b = np.zeros((p, p))  # b[child, parent]
    omega = np.empty(p)
    coefs = {}
    for j in range(p):
        pa = sorted(dag.parents_of(j))
        if pa:
            beta = np.linalg.solve(s[np.ix_(pa, pa)], s[pa, j])
            b[j, pa] = beta
            omega[j] = s[j, j] - s[j, pa] @ beta
            for i, w in zip(pa, beta):
                coefs[dag.name_of(i), dag.name_of(j)] = float(w)
        else:
            omega[j] = s[j, j]
    if omega.min() <= 0:
        raise DataError("non-positive residual variance")
    inv = np.linalg.inv(np.eye(p) - b)
    sigma = inv @ np.diag(omega) @ inv.T
    _, logdet_sigma = np.linalg.slogdet(sigma)
    trace = float(np.trace(np.linalg.solve(sigma, s)))
    loglik = -0.5 * n * (p * math.log(2 * math.pi) + logdet_sigma + trace)
    k = dag.edge_count + p
    df = p * (p + 1) // 2 - k
    chi2 = 0.0 if df == 0 else max((n - 1) * (logdet_sigma + trace - logdet_s - p), 0.0)
    return SemFit(coefs, omega, sigma, float(loglik), float(chi2), df, n, k)


def bic_value(log_likelihood: float, k: int, n: int, penalty_discount: float = 1.0) -> float:
    """``2 L - lambda * k * ln(n)``; higher is better."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return 2.0 * log_likelihood - penalty_discount * k * math.log(n)


def bic(fit: SemFit, n: int | None = None) -> float:
    return bic_value(fit.log_likelihood, fit.n_params, fit.n if n is None else n)


def penalized_bic(fit: SemFit, n: int | None, penalty_discount: float) -> float:
    return bic_value(fit.log_likelihood, fit.n_params, fit.n if n is None else n, penalty_discount)


def nfi(fit: SemFit, baseline: SemFit) -> float:
    """Normed fit index against the independence model."""
    if baseline.chi_square <= 0:
        raise ValueError("baseline chi-square is zero; fit indices undefined")
    value = (baseline.chi_square - fit.chi_square) / baseline.chi_square
    return min(max(value, 0.0), 1.0)


def cfi(fit: SemFit, baseline: SemFit) -> float:
    """Comparative fit index against the independence model."""
    if baseline.chi_square <= 0:
        raise ValueError("baseline chi-square is zero; fit indices undefined")
    model_nc = max(fit.chi_square - fit.df, 0.0)
    denom = max(baseline.chi_square - baseline.df, fit.chi_square - fit.df, 0.0)
    if denom == 0:
        return 1.0
    return min(max(1.0 - model_nc / denom, 0.0), 1.0)


def fit_label(index: float) -> str:
    if index > EXCELLENT_FIT:
        return "excellent"
    if index > GOOD_FIT:
        return "good"
    return "poor"


def baseline_fit(d: Dataset, nodes) -> SemFit:
    return fit_sem(d, Dag(list(nodes)))


# --- comparisons against a true CPDAG -------------------------------------


def _check_nodes(est: Graph, truth: Graph) -> None:
    if set(est.nodes) != set(truth.nodes):
        raise GraphError("graphs are over different node sets")


def _named_pairs(g: Graph) -> set[frozenset[str]]:
    return {frozenset((g.name_of(i), g.name_of(j))) for i, j in skeleton_pairs(g)}


def adjacency_f1(est: Graph, truth: Graph) -> tuple[float, float, float]:
    """(precision, recall, F1) over unordered adjacencies."""
    _check_nodes(est, truth)
    e, t = _named_pairs(est), _named_pairs(truth)
    tp = len(e & t)
    fp = len(e - t)
    fn = len(t - e)
    if tp + fp == 0:
        precision = 1.0 if not t else 0.0
    else:
        precision = tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def _marks(g: Graph) -> dict[frozenset[str], tuple[str, str] | str]:
    arcs = g.edges if isinstance(g, Dag) else g.directed
    out: dict[frozenset[str], tuple[str, str] | str] = {}
    for i, j in arcs:
        out[frozenset((g.name_of(i), g.name_of(j)))] = (g.name_of(i), g.name_of(j))
    if isinstance(g, Cpdag):
        for i, j in g.undirected:
            out[frozenset((g.name_of(i), g.name_of(j)))] = "--"
    return out


def shd(est: Graph, truth: Graph) -> int:
    """Structural Hamming distance: one per node pair whose marks differ."""
    _check_nodes(est, truth)
    a, b = _marks(est), _marks(truth)
    return sum(1 for pair in a.keys() | b.keys() if a.get(pair) != b.get(pair))


@dataclass(frozen=True)
class MetricsRow:
    edges: int
    bic: float | None = None
    cfi: float | None = None
    nfi: float | None = None
    f1: float | None = None
    shd: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def metrics_row(g: Graph, d: Dataset | None = None, truth: Graph | None = None,
                baseline: SemFit | None = None) -> MetricsRow:
    """Every metric computable from what is supplied; the rest stay None."""
    bic_v = cfi_v = nfi_v = f1_v = shd_v = None
    if d is not None:
        fit = fit_sem(d, g)
        bic_v = bic(fit)
        base = baseline if baseline is not None else baseline_fit(d, g.nodes)
        if base.chi_square > 0:
            cfi_v, nfi_v = cfi(fit, base), nfi(fit, base)
    if truth is not None:
        # compare equivalence classes, not the particular DAG members
        est_c, truth_c = as_cpdag(g), as_cpdag(truth)
        f1_v = adjacency_f1(est_c, truth_c)[2]
        shd_v = shd(est_c, truth_c)
    return MetricsRow(g.edge_count, bic_v, cfi_v, nfi_v, f1_v, shd_v)
