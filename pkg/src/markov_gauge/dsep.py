"""d-separation queries and the independence facts a graph implies."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import GraphError, IllegalCpdagError
from .graph import Cpdag, Dag, Graph, NodeRef, consistent_extension, is_legal_cpdag


@dataclass(frozen=True, order=True)
class IndependenceFact:
    """``x _||_ y | cond`` over graph node indices, normalized so ``x < y``."""

    x: int
    y: int
    cond: tuple[int, ...] = ()

    def __post_init__(self):
        if self.x == self.y:
            raise GraphError("fact needs two distinct nodes")
        if self.x in self.cond or self.y in self.cond:
            raise GraphError("conditioning set may not contain x or y")

    @classmethod
    def make(cls, x: int, y: int, cond: Iterable[int] = ()) -> "IndependenceFact":
        a, b = (x, y) if x < y else (y, x)
        return cls(a, b, tuple(sorted(set(cond))))

    def format(self, names: Sequence[str]) -> str:
        z = ", ".join(names[i] for i in self.cond)
        return f"{names[self.x]} _||_ {names[self.y]} | {z}".rstrip()


# --- Markov variants -------------------------------------------------------


@dataclass(frozen=True)
class OrderedLocal:
    label = "ordered-local"


@dataclass(frozen=True)
class Local:
    label = "local"


@dataclass(frozen=True)
class GlobalSampled:
    k: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("GlobalSampled needs k >= 1")

    @property
    def label(self) -> str:
        return f"global:{self.k}"


MarkovVariant = Union[OrderedLocal, Local, GlobalSampled]


def parse_variant(text: str, seed: int = 0) -> MarkovVariant:
    """``ordered-local``, ``local`` or ``global:K``."""
    text = text.strip().lower()
    if text == "ordered-local":
        return OrderedLocal()
    if text == "local":
        return Local()
    if text.startswith("global:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad variant {text!r}") from None
        return GlobalSampled(k, seed)
    raise ValueError(f"unknown Markov variant {text!r}")


# --- d-separation ----------------------------------------------------------


def _mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def _dsep(d: Dag, x: int, y: int, cond: Iterable[int]) -> bool:
    # Reachability over (node, direction) states; "up" means the trail
    # arrived from a child, "down" from a parent.
    cond_mask = _mask(cond)
    anc = d.ancestor_masks
    opened = 0
    for z in cond:
        opened |= anc[z]
    up, down = 0, 1
    seen = set()
    queue = deque([(x, up)])
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in seen:
            continue
        seen.add((v, direction))
        in_cond = (cond_mask >> v) & 1
        if v == y and not in_cond:
            return False
        if direction == up:
            if in_cond:
                continue
            for p in d.parents_of(v):
                queue.append((p, up))
            for c in d.children_of(v):
                queue.append((c, down))
        else:
            if not in_cond:
                for c in d.children_of(v):
                    queue.append((c, down))
            if (opened >> v) & 1:
                for p in d.parents_of(v):
                    queue.append((p, up))
    return True


def _check_query(d: Dag, x: NodeRef, y: NodeRef, cond: Iterable[NodeRef]):
    i, j = d.index_of(x), d.index_of(y)
    zs = {d.index_of(z) for z in cond}
    if i == j:
        raise GraphError("x and y must differ")
    if i in zs or j in zs:
        raise GraphError("x and y may not be in the conditioning set")
    return i, j, zs


def d_separated(d: Dag, x: NodeRef, y: NodeRef, cond: Iterable[NodeRef] = ()) -> bool:
    """True iff every path between ``x`` and ``y`` is blocked by ``cond``."""
    i, j, zs = _check_query(d, x, y, cond)
    return _dsep(d, i, j, zs)


def d_separated_oracle(d: Dag, x: NodeRef, y: NodeRef, cond: Iterable[NodeRef] = ()) -> bool:
    """Path-enumeration d-separation, exponential; for testing only."""
    if d.n_nodes > 12:
        raise GraphError("path enumeration oracle is limited to 12 nodes")
    i, j, zs = _check_query(d, x, y, cond)
    desc = d.descendant_masks
    cond_mask = _mask(zs)

    def blocked(path: list[int]) -> bool:
        for k in range(1, len(path) - 1):
            a, v, b = path[k - 1], path[k], path[k + 1]
            collider = (a, v) in d.edges and (b, v) in d.edges
            if collider:
                if not desc[v] & cond_mask:
                    return True
            elif v in zs:
                return True
        return False

    path = [i]
    on_path = {i}

    def search(v: int) -> bool:
        for w in sorted(d.adjacency[v]):
            if w in on_path:
                continue
            path.append(w)
            if w == j:
                open_path = not blocked(path)
            else:
                on_path.add(w)
                open_path = search(w)
                on_path.discard(w)
            path.pop()
            if open_path:
                return True
        return False

    return not search(i)


# --- implied facts -----------------------------------------------------------


def fact_dag(g: Graph) -> Dag:
    """The DAG whose d-separations stand for ``g``'s."""
    if isinstance(g, Dag):
        return g
    if not is_legal_cpdag(g):
        raise IllegalCpdagError("cannot derive independence facts from an illegal CPDAG")
    return consistent_extension(g)


def implied_facts(g: Graph, variant: MarkovVariant | None = None) -> list[IndependenceFact]:
    """Independence facts implied by ``g`` under a Markov variant.

    A CPDAG is replaced by its deterministic consistent extension; all DAGs in
    the class share d-separations, so any member would do.
    """
    variant = OrderedLocal() if variant is None else variant
    d = fact_dag(g)
    if isinstance(variant, OrderedLocal):
        return _ordered_local(d)
    if isinstance(variant, Local):
        return _local(d)
    if isinstance(variant, GlobalSampled):
        return _global_sampled(d, variant.k, variant.seed)
    raise TypeError(f"unsupported variant {variant!r}")


def _ordered_local(d: Dag) -> list[IndependenceFact]:
    facts = []
    order = d.topological_order
    for pos, x in enumerate(order):
        pa = d.parents_of(x)
        cond = tuple(sorted(pa))
        for y in order[:pos]:
            if y not in pa:
                facts.append(IndependenceFact.make(x, y, cond))
    return facts


def _local(d: Dag) -> list[IndependenceFact]:
    facts: dict[IndependenceFact, None] = {}
    desc = d.descendant_masks
    for x in range(d.n_nodes):
        pa = d.parents_of(x)
        cond = tuple(sorted(pa))
        for y in range(d.n_nodes):
            if y == x or y in pa or (desc[x] >> y) & 1:
                continue
            facts.setdefault(IndependenceFact.make(x, y, cond))
    return list(facts)


def _global_sampled(d: Dag, k: int, seed: int) -> list[IndependenceFact]:
    n = d.n_nodes
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if not d.adjacent(i, j)]
    if not pairs:
        return []
    rng = np.random.default_rng(seed)
    found: dict[IndependenceFact, None] = {}
    for _ in range(100 * k):
        i, j = pairs[rng.integers(len(pairs))]
        others = [v for v in range(n) if v != i and v != j]
        keep = rng.random(len(others)) < 0.5
        cond = [v for v, kept in zip(others, keep) if kept]
        if _dsep(d, i, j, cond):
            found.setdefault(IndependenceFact.make(i, j, cond))
            if len(found) == k:
                break
    return list(found)
