"""Shared strategies and brute-force oracles for the test suite."""

from __future__ import annotations

from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import strategies as st

from markov_gauge.dsep import d_separated_oracle
from markov_gauge.graph import Dag


def names(n: int) -> list[str]:
    return [chr(ord("a") + i) for i in range(n)]


def dag_from_bits(n: int, bits: int, perm: tuple[int, ...] | None = None) -> Dag:
    """DAG whose edge set is encoded in ``bits`` over pairs (i<j), relabelled by ``perm``."""
    perm = perm or tuple(range(n))
    pairs = list(combinations(range(n), 2))
    edges = [(perm[i], perm[j]) for k, (i, j) in enumerate(pairs) if bits >> k & 1]
    return Dag(names(n), edges)


@st.composite
def dags(draw, min_nodes: int = 1, max_nodes: int = 6):
    n = draw(st.integers(min_nodes, max_nodes))
    m = n * (n - 1) // 2
    bits = draw(st.integers(0, 2**m - 1)) if m else 0
    perm = tuple(draw(st.permutations(range(n))))
    return dag_from_bits(n, bits, perm)


def random_small_dag(rng: np.random.Generator, n: int, avg_degree: float) -> Dag:
    pairs = list(combinations(range(n), 2))
    p = min(avg_degree / max(n - 1, 1), 1.0)
    perm = rng.permutation(n)
    edges = [(int(perm[i]), int(perm[j])) for i, j in pairs if rng.random() < p]
    return Dag(names(n), edges)


def all_triples(n: int):
    """Every (x, y, Z) with x < y and Z a subset of the other nodes."""
    for x, y in combinations(range(n), 2):
        rest = [v for v in range(n) if v not in (x, y)]
        for r in range(len(rest) + 1):
            for z in combinations(rest, r):
                yield x, y, z


def dsep_signature(d: Dag) -> frozenset:
    """All d-separation statements of ``d`` via the path-enumeration oracle."""
    return frozenset(t for t in all_triples(d.n_nodes) if d_separated_oracle(d, *t))


def all_dags(n: int):
    """Every labelled DAG on ``n`` nodes (n <= 5)."""
    pairs = list(combinations(range(n), 2))
    for marks in product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (i, j), m in zip(pairs, marks):
            if m == 1:
                edges.append((i, j))
            elif m == 2:
                edges.append((j, i))
        try:
            yield Dag(names(n), edges)
        except Exception:
            continue


_DAG_CACHE: dict[int, list[tuple[Dag, frozenset]]] = {}


def dags_with_signatures(n: int) -> list[tuple[Dag, frozenset]]:
    if n not in _DAG_CACHE:
        _DAG_CACHE[n] = [(d, dsep_signature(d)) for d in all_dags(n)]
    return _DAG_CACHE[n]


def markov_equivalent(d: Dag, pool: list[tuple[Dag, frozenset]]) -> list[Dag]:
    sig = dsep_signature(d)
    return [h for h, s in pool if s == sig]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
