"""Built-in candidate generators for CAFS.

Three deliberately simple learners:

* ``pc_lite`` - PC-stable skeleton search, unshielded-triple orientation and
  Meek closure.  Like PC it may return a graph that is not a legal CPDAG.
* ``hill_climb`` - greedy add/delete/reverse search over DAGs under the
  penalized Gaussian BIC, with random-perturbation restarts.
* ``sp_oracle`` - exhaustive sparsest-permutation search for small graphs.

Constraint-based learners take either a :class:`Dataset` (Fisher z) or any
CI object with ``names`` and ``__call__(x, y, cond) -> p``, such as
:class:`~markov_gauge.citest.DSepOracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Sequence

import numpy as np

from .cafs import Candidate
from .citest import FisherZ, ml_covariance
from .data import Dataset
from .graph import Cpdag, Dag, cpdag_of, meek_closure, serialize_graph

PC_ALPHAS = (0.001, 0.01, 0.05, 0.1, 0.2)
HC_LAMBDAS = (10.0, 5.0, 4.0, 3.5, 3.0, 2.5, 2.0, 1.75, 1.5, 1.25, 1.0)
SP_MAX_NODES = 8


def _as_ci(source):
    if isinstance(source, Dataset):
        return FisherZ(source)
    return source


# --- PC ------------------------------------------------------------------------


def pc_lite(source, alpha: float, max_cond: int | None = None) -> Cpdag:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    ci = _as_ci(source)
    names = list(ci.names)
    n = len(names)
    adj = [set(range(n)) - {i} for i in range(n)]
    sepset: dict[frozenset[int], tuple[int, ...]] = {}
    level = 0
    while any(len(a) - 1 >= level for a in adj):
        if max_cond is not None and level > max_cond:
            break
        frozen = [set(a) for a in adj]
        for i in range(n):
            for j in sorted(frozen[i]):
                if j < i or j not in adj[i]:
                    continue
                for x, y in ((i, j), (j, i)):
                    others = sorted(frozen[x] - {y})
                    if len(others) < level:
                        continue
                    for s in combinations(others, level):
                        if ci(x, y, s) > alpha:
                            adj[i].discard(j)
                            adj[j].discard(i)
                            sepset[frozenset((i, j))] = s
                            break
                    if j not in adj[i]:
                        break
        level += 1

    arcs: set[tuple[int, int]] = set()
    for z in range(n):
        for x, y in combinations(sorted(adj[z]), 2):
            if y in adj[x]:
                continue
            if z in sepset.get(frozenset((x, y)), ()):
                continue
            for a in (x, y):
                if (z, a) not in arcs:
                    arcs.add((a, z))
    undirected = {(min(i, j), max(i, j)) for i in range(n) for j in adj[i]
                  if (i, j) not in arcs and (j, i) not in arcs}
    directed, undirected = meek_closure(n, arcs, undirected)
    return Cpdag(names, directed, undirected)


# --- score-based hill climbing ---------------------------------------------


class GaussianBic:
    """Decomposable penalized BIC from a covariance matrix.

    ``local(j, parents) = 2 * L_j - lambda * (|parents| + 1) * ln n`` with
    ``L_j`` the maximized Gaussian log-likelihood of node ``j``'s regression.
    """

    def __init__(self, cov: np.ndarray, n: int, names: Sequence[str], penalty_discount: float = 1.0):
        self.cov = np.asarray(cov, dtype=float)
        self.n = n
        self.names = tuple(names)
        self.penalty_discount = penalty_discount
        self._cache: dict[tuple[int, frozenset[int]], float] = {}

    @classmethod
    def from_data(cls, d: Dataset, penalty_discount: float = 1.0) -> "GaussianBic":
        return cls(ml_covariance(d.values), d.n_rows, d.column_names, penalty_discount)

    def local(self, j: int, parents: frozenset[int]) -> float:
        key = (j, parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        s = self.cov
        if parents:
            pa = sorted(parents)
            beta = np.linalg.solve(s[np.ix_(pa, pa)], s[pa, j])
            var = s[j, j] - s[j, pa] @ beta
        else:
            var = s[j, j]
        var = max(var, 1e-300)
        loglik = -0.5 * self.n * (math.log(2 * math.pi * var) + 1.0)
        score = 2.0 * loglik - self.penalty_discount * (len(parents) + 1) * math.log(self.n)
        self._cache[key] = score
        return score

    def total(self, parents: Sequence[frozenset[int]]) -> float:
        return sum(self.local(j, p) for j, p in enumerate(parents))


def _ancestor_masks(parents: list[set[int]]) -> list[int]:
    n = len(parents)
    masks = [0] * n
    done = [False] * n

    def visit(v: int) -> int:
        if done[v]:
            return masks[v]
        stack = [(v, iter(sorted(parents[v])))]
        masks[v] = 1 << v
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                done[node] = True
                if stack:
                    masks[stack[-1][0]] |= masks[node]
                continue
            if done[nxt]:
                masks[node] |= masks[nxt]
            else:
                masks[nxt] = 1 << nxt
                stack.append((nxt, iter(sorted(parents[nxt]))))
        return masks[v]

    for v in range(n):
        visit(v)
    return masks


def _reaches(parents: list[set[int]], src: int, dst: int, skip: tuple[int, int]) -> bool:
    """Directed path src ~> dst avoiding the edge ``skip``."""
    children: dict[int, list[int]] = {}
    for c, pa in enumerate(parents):
        for p in pa:
            if (p, c) != skip:
                children.setdefault(p, []).append(c)
    stack, seen = [src], {src}
    while stack:
        v = stack.pop()
        for c in children.get(v, ()):
            if c == dst:
                return True
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


@dataclass
class ClimbResult:
    dag: Dag
    score: float
    traces: list[list[float]]


def _best_move(score: GaussianBic, parents: list[set[int]]):
    """Highest-gain add, delete or reverse move, or None when none improves."""
    n = len(parents)
    anc = _ancestor_masks(parents)
    best_delta, best_move = 1e-9, None
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pj = frozenset(parents[j])
            if i in pj:
                delta = score.local(j, pj - {i}) - score.local(j, pj)
                if delta > best_delta:
                    best_delta, best_move = delta, ("del", i, j)
                pi = frozenset(parents[i])
                delta = (score.local(j, pj - {i}) - score.local(j, pj)
                         + score.local(i, pi | {j}) - score.local(i, pi))
                if delta > best_delta and not _reaches(parents, i, j, (i, j)):
                    best_delta, best_move = delta, ("rev", i, j)
            elif j not in parents[i] and not (anc[i] >> j) & 1:
                delta = score.local(j, pj | {i}) - score.local(j, pj)
                if delta > best_delta:
                    best_delta, best_move = delta, ("add", i, j)
    return best_move


def _apply(parents: list[set[int]], move) -> None:
    kind, i, j = move
    if kind == "add":
        parents[j].add(i)
    elif kind == "del":
        parents[j].discard(i)
    else:
        parents[j].discard(i)
        parents[i].add(j)


def _covered_edges(parents: list[set[int]]) -> list[tuple[int, int]]:
    """Edges i -> j with pa(j) = pa(i) + {i}; reversing one stays in the class."""
    return sorted((i, j) for j, pa in enumerate(parents) for i in pa if pa == parents[i] | {i})


def _plateau_walk(score: GaussianBic, parents: list[set[int]], rng: np.random.Generator,
                  steps: int, walks: int):
    """Improving move found after covered reversals; ``parents`` is moved to
    the DAG where it applies.  None if no walk finds one."""
    for _ in range(walks):
        walk = [set(p) for p in parents]
        for _ in range(steps):
            covered = _covered_edges(walk)
            if not covered:
                return None
            _apply(walk, ("rev", *covered[int(rng.integers(len(covered)))]))
            move = _best_move(score, walk)
            if move is not None:
                parents[:] = walk
                return move
    return None


def _climb(score: GaussianBic, parents: list[set[int]], trace: list[float],
           rng: np.random.Generator | None = None, plateau_steps: int = 0, walks: int = 1) -> float:
    """Steepest ascent; when stuck, take up to ``walks`` random walks of
    ``plateau_steps`` covered-edge reversals looking for a DAG in the same
    class that has an improving move.  Scores along ``trace`` never decrease."""
    current = score.total([frozenset(p) for p in parents])
    trace.append(current)
    while True:
        move = _best_move(score, parents)
        if move is None and rng is not None and plateau_steps > 0:
            move = _plateau_walk(score, parents, rng, plateau_steps, walks)
        if move is None:
            return current
        _apply(parents, move)
        current = score.total([frozenset(p) for p in parents])
        trace.append(current)


def _perturb(parents: list[set[int]], rng: np.random.Generator, moves: int) -> list[set[int]]:
    out = [set(p) for p in parents]
    n = len(out)
    for _ in range(moves):
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        if i in out[j]:
            out[j].discard(i)
        elif j in out[i]:
            out[i].discard(j)
        elif not (_ancestor_masks(out)[i] >> j) & 1:
            out[j].add(i)
    return out


def hill_climb_search(source, penalty_discount: float, restarts: int = 5, seed: int = 0) -> ClimbResult:
    """Best DAG over ``restarts`` climbs: one from the empty graph, the rest
    from random perturbations of the incumbent.  ``traces`` holds the score
    after each accepted move, one list per climb."""
    if penalty_discount <= 0:
        raise ValueError("penalty discount must be positive")
    if isinstance(source, GaussianBic):
        score = GaussianBic(source.cov, source.n, source.names, penalty_discount)
    else:
        score = GaussianBic.from_data(source, penalty_discount)
    n = len(score.names)
    rng = np.random.default_rng(seed)
    plateau, walks = 2 * n, max(1, n // 2)
    traces: list[list[float]] = [[]]
    best = [set() for _ in range(n)]
    best_score = _climb(score, best, traces[0], rng, plateau, walks)
    for _ in range(max(restarts, 1) - 1):
        start = _perturb(best, rng, max(1, n // 2))
        traces.append([])
        s = _climb(score, start, traces[-1], rng, plateau, walks)
        if s > best_score + 1e-9:
            best, best_score = start, s
    dag = Dag(score.names, [(p, c) for c, pa in enumerate(best) for p in pa])
    return ClimbResult(dag, best_score, traces)


def hill_climb(source, penalty_discount: float, restarts: int = 5, seed: int = 0) -> Cpdag:
    return cpdag_of(hill_climb_search(source, penalty_discount, restarts, seed).dag)


# --- sparsest permutations -------------------------------------------------


class _Projector:
    """Minimal I-map parents of ``x`` among a predecessor set, by backward
    elimination (highest p-value dropped first)."""

    def __init__(self, ci, alpha: float):
        self.ci = ci
        self.alpha = alpha
        self._cache: dict[tuple[int, frozenset[int]], frozenset[int]] = {}

    def parents(self, x: int, preds: frozenset[int]) -> frozenset[int]:
        key = (x, preds)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        current = set(preds)
        while current:
            scored = []
            for y in sorted(current):
                p = self.ci(x, y, tuple(sorted(current - {y})))
                scored.append((p, -y, y))
            p, _, y = max(scored)
            if p <= self.alpha:
                break
            current.discard(y)
        out = frozenset(current)
        self._cache[key] = out
        return out


def sp_minimal_dags(source, alpha: float) -> tuple[int, list[Dag]]:
    """(minimum edge count, distinct minimum-edge DAGs) over all permutations."""
    ci = _as_ci(source)
    names = list(ci.names)
    n = len(names)
    if n > SP_MAX_NODES:
        raise ValueError(f"sp_oracle supports at most {SP_MAX_NODES} nodes, got {n}")
    proj = _Projector(ci, alpha)
    best = math.inf
    found: dict[frozenset[tuple[int, int]], None] = {}
    for perm in permutations(range(n)):
        edges: list[tuple[int, int]] = []
        preds: frozenset[int] = frozenset()
        pruned = False
        for x in perm:
            edges.extend((p, x) for p in proj.parents(x, preds))
            if len(edges) > best:
                pruned = True
                break
            preds = preds | {x}
        if pruned:
            continue
        if len(edges) < best:
            best = len(edges)
            found = {}
        found.setdefault(frozenset(edges))
    dags = [Dag(names, sorted(e)) for e in found]
    return int(best), dags


def sp_oracle(source, alpha: float = 0.01) -> list[Cpdag]:
    """CPDAGs of every minimum-edge DAG projected from a variable permutation."""
    _, dags = sp_minimal_dags(source, alpha)
    cpdags = {cpdag_of(d) for d in dags}
    return sorted(cpdags, key=serialize_graph)


# --- candidate grids ------------------------------------------------------------

KINDS = ("pc_lite", "hill_climb", "sp_oracle")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner {self.kind!r}")
        if not self.params:
            raise ValueError(f"{self.kind}: empty parameter grid")
        for p in self.params:
            if self.kind == "hill_climb" and p <= 0:
                raise ValueError("penalty discounts must be positive")
            if self.kind != "hill_climb" and not 0 < p < 1:
                raise ValueError("alphas must lie in (0, 1)")


def default_specs() -> list[LearnerSpec]:
    return [LearnerSpec("pc_lite", PC_ALPHAS), LearnerSpec("hill_climb", HC_LAMBDAS)]


def candidate_id(kind: str, param: float) -> str:
    return f"{kind}({param:g})"


def candidate_grid(d: Dataset, specs: Sequence[LearnerSpec], seed: int = 0,
                   restarts: int = 5) -> list[Candidate]:
    """One candidate per (learner, parameter); sp_oracle contributes its whole
    frugal set, numbered ``sp_oracle(alpha)#k``."""
    if not specs:
        raise ValueError("no learner specs given")
    out: list[Candidate] = []
    ci = None
    for spec in specs:
        for param in spec.params:
            cid = candidate_id(spec.kind, param)
            if spec.kind == "pc_lite":
                ci = ci or FisherZ(d)
                out.append(Candidate(cid, pc_lite(ci, param), cid))
            elif spec.kind == "hill_climb":
                out.append(Candidate(cid, hill_climb(d, param, restarts, seed), cid))
            else:
                ci = ci or FisherZ(d)
                for k, g in enumerate(sp_oracle(ci, param), start=1):
                    out.append(Candidate(f"{cid}#{k}", g, cid))
    return out
