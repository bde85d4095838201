"""Linear-Gaussian conditional independence testing (Fisher z).

Partial correlations are computed from the covariance of ``[x, y, *cond]``
via the Schur complement of the conditioning block, which equals the
precision-matrix formula whenever the full block is invertible and stays
defined when ``x`` and ``y`` are perfectly collinear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .dsep import IndependenceFact, d_separated
from .errors import DegenerateTestError
from .graph import Dag

R_CLAMP = 1.0 - 1e-12
_SINGULAR = 1e-12
_RIDGE_BELOW = 1e-8
_RIDGE = 1e-10
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CiResult:
    fact: IndependenceFact
    p_value: float
    statistic: float
    effective_n: int
    seed: int | None = None
    round: int = 0


def partial_correlation(cov: np.ndarray) -> float:
    """Partial correlation of variables 0 and 1 given variables 2.. of ``cov``.

    Raises :class:`DegenerateTestError` when the conditioning block is
    singular or when ``x`` or ``y`` is a deterministic function of it.
    """
    sd = np.sqrt(np.diag(cov))
    if sd.min() <= 1e-12 * max(sd.max(), 1.0):
        raise DegenerateTestError("constant column")
    corr = cov / np.outer(sd, sd)
    if corr.shape[0] == 2:
        return float(corr[0, 1])
    szz = corr[2:, 2:]
    sza = corr[2:, :2]
    w, v = np.linalg.eigh(szz)
    if w[0] < _SINGULAR:
        raise DegenerateTestError("singular conditioning set")
    if w[0] < _RIDGE_BELOW:
        w = w + _RIDGE
    proj = v.T @ sza
    resid = corr[:2, :2] - proj.T @ (proj / w[:, None])
    if resid[0, 0] <= _SINGULAR or resid[1, 1] <= _SINGULAR:
        raise DegenerateTestError("variable determined by conditioning set")
    return float(resid[0, 1] / math.sqrt(resid[0, 0] * resid[1, 1]))


def fisher_z(r: float, n: int, k: int) -> tuple[float, float]:
    """(z statistic, two-sided p-value) for partial correlation ``r``."""
    dof = n - k - 3
    if dof < 1:
        raise DegenerateTestError(f"n - |Z| - 3 = {dof} < 1")
    r = min(max(r, -R_CLAMP), R_CLAMP)
    z = math.atanh(r) * math.sqrt(dof)
    p = math.erfc(abs(z) / _SQRT2)
    return z, min(max(p, 0.0), 1.0)


def ml_covariance(block: np.ndarray) -> np.ndarray:
    centered = block - block.mean(axis=0)
    return centered.T @ centered / block.shape[0]


def fisher_z_columns(
    values: np.ndarray,
    x: int,
    y: int,
    cond: Sequence[int],
    rows: np.ndarray | None = None,
) -> tuple[float, float, int]:
    """(p, z, n) for columns ``x``, ``y`` given ``cond`` over the selected rows."""
    cols = [x, y, *cond]
    block = values[:, cols] if rows is None else values[np.ix_(rows, cols)]
    n = block.shape[0]
    if n - len(cond) - 3 < 1:
        raise DegenerateTestError(f"n - |Z| - 3 = {n - len(cond) - 3} < 1")
    r = partial_correlation(ml_covariance(block))
    z, p = fisher_z(r, n, len(cond))
    return p, z, n


def fisher_z_test(d: Dataset, fact: IndependenceFact, rows: np.ndarray | None = None) -> CiResult:
    """Fisher z test of ``fact``, reading fact indices as dataset columns."""
    p, z, n = fisher_z_columns(d.values, fact.x, fact.y, fact.cond, rows)
    return CiResult(fact, p, z, n)


class FisherZ:
    """Fisher z p-values over a fixed dataset, covariance computed once.

    Used by the structure learners; degenerate queries are treated as
    independent (``p = 1``), since a variable fixed by the conditioning set
    carries no further information.
    """

    def __init__(self, data: Dataset):
        self.names = data.column_names
        self.n = data.n_rows
        self.cov = ml_covariance(data.values)
        self.pvalue = lru_cache(maxsize=None)(self._pvalue)

    def _pvalue(self, x: int, y: int, cond: tuple[int, ...]) -> float:
        idx = [x, y, *cond]
        try:
            r = partial_correlation(self.cov[np.ix_(idx, idx)])
            return fisher_z(r, self.n, len(cond))[1]
        except DegenerateTestError:
            return 1.0

    def __call__(self, x: int, y: int, cond: Iterable[int] = ()) -> float:
        return self.pvalue(x, y, tuple(sorted(cond)))


class DSepOracle:
    """Independence oracle reading d-separation off a known DAG.

    Returns ``p = 1`` for d-separated queries and ``p = 0`` otherwise, so any
    alpha in (0, 1) reproduces the oracle's verdicts exactly.
    """

    def __init__(self, dag: Dag):
        self.dag = dag
        self.names = dag.nodes
        self.pvalue = lru_cache(maxsize=None)(self._pvalue)

    def _pvalue(self, x: int, y: int, cond: tuple[int, ...]) -> float:
        return 1.0 if d_separated(self.dag, x, y, cond) else 0.0

    def __call__(self, x: int, y: int, cond: Iterable[int] = ()) -> float:
        return self.pvalue(x, y, tuple(sorted(cond)))
