"""DAG and CPDAG data model.

Nodes carry string names, but every graph works internally with dense
integer indices ``0..n-1`` in node order.  That order is also the tie-break
for every deterministic choice made here (valid orders, consistent
extensions), so two graphs with the same edges but different node orders are
different objects.
"""

from __future__ import annotations

import heapq
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import CycleError, GraphError, GraphParseError, IllegalCpdagError

NodeRef = Union[int, str]


class _Graph:
    def __init__(self, nodes: Sequence[str]):
        names = tuple(str(n) for n in nodes)
        if len(set(names)) != len(names):
            raise GraphError("node names must be unique")
        self._nodes = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    def index_of(self, x: NodeRef) -> int:
        if isinstance(x, str):
            try:
                return self._index[x]
            except KeyError:
                raise GraphError(f"unknown node {x!r}") from None
        i = int(x)
        if not 0 <= i < len(self._nodes):
            raise GraphError(f"node index {i} out of range")
        return i

    def name_of(self, i: int) -> str:
        return self._nodes[i]

    def names(self, indices: Iterable[int]) -> frozenset[str]:
        return frozenset(self._nodes[i] for i in indices)

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    @property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        raise NotImplementedError

    @property
    def edge_count(self) -> int:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({serialize_graph(self)!r})"


class Dag(_Graph):
    """Directed acyclic graph.

    ``edges`` may reference nodes by name or by index.  Construction fails on
    self-loops, on two edges over one pair, and on directed cycles.
    """

    def __init__(self, nodes: Sequence[str], edges: Iterable[tuple[NodeRef, NodeRef]] = ()):
        super().__init__(nodes)
        arcs: set[tuple[int, int]] = set()
        for a, b in edges:
            i, j = self.index_of(a), self.index_of(b)
            if i == j:
                raise GraphError(f"self-loop at {self._nodes[i]!r}")
            if (j, i) in arcs:
                raise GraphError(f"two edges between {self._nodes[i]!r} and {self._nodes[j]!r}")
            arcs.add((i, j))
        self._edges = frozenset(arcs)
        n = len(self._nodes)
        pa: list[set[int]] = [set() for _ in range(n)]
        ch: list[set[int]] = [set() for _ in range(n)]
        for i, j in arcs:
            pa[j].add(i)
            ch[i].add(j)
        self._parents = tuple(frozenset(p) for p in pa)
        self._children = tuple(frozenset(c) for c in ch)
        self._order = self._kahn_order()

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], nodes: Sequence[str] | None = None) -> "Dag":
        edges = list(edges)
        return cls(_collect_nodes(edges, nodes), edges)

    def _kahn_order(self) -> tuple[int, ...]:
        indeg = [len(p) for p in self._parents]
        heap = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) != len(self._nodes):
            stuck = sorted(self._nodes[i] for i, d in enumerate(indeg) if d > 0)
            raise CycleError(f"directed cycle among {stuck}")
        return tuple(order)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def topological_order(self) -> tuple[int, ...]:
        return self._order

    def parents_of(self, i: int) -> frozenset[int]:
        return self._parents[i]

    def children_of(self, i: int) -> frozenset[int]:
        return self._children[i]

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        return tuple(p | c for p, c in zip(self._parents, self._children))

    @cached_property
    def ancestor_masks(self) -> tuple[int, ...]:
        """Bitset per node of its ancestors, the node itself included."""
        masks = [0] * len(self._nodes)
        for v in self._order:
            m = 1 << v
            for p in self._parents[v]:
                m |= masks[p]
            masks[v] = m
        return tuple(masks)

    @cached_property
    def descendant_masks(self) -> tuple[int, ...]:
        masks = [0] * len(self._nodes)
        for v in reversed(self._order):
            m = 1 << v
            for c in self._children[v]:
                m |= masks[c]
            masks[v] = m
        return tuple(masks)

    def v_structures(self) -> set[tuple[int, int, int]]:
        """Unshielded colliders as ``(x, z, y)`` with ``x < y``."""
        out = set()
        for z, pa in enumerate(self._parents):
            for x, y in combinations(sorted(pa), 2):
                if not self.adjacent(x, y):
                    out.add((x, z, y))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._nodes, self._edges))


class Cpdag(_Graph):
    """Partially directed graph meant to represent a Markov equivalence class.

    The constructor only enforces structural sanity.  Whether the graph is a
    genuine CPDAG is a separate question answered by :func:`is_legal_cpdag`,
    because learners are allowed to emit graphs that fail it.
    """

    def __init__(
        self,
        nodes: Sequence[str],
        directed: Iterable[tuple[NodeRef, NodeRef]] = (),
        undirected: Iterable[tuple[NodeRef, NodeRef]] = (),
    ):
        super().__init__(nodes)
        pairs: set[frozenset[int]] = set()
        arcs: set[tuple[int, int]] = set()
        lines: set[tuple[int, int]] = set()
        for a, b in directed:
            i, j = self._checked_pair(a, b, pairs)
            arcs.add((i, j))
        for a, b in undirected:
            i, j = self._checked_pair(a, b, pairs)
            lines.add((min(i, j), max(i, j)))
        self._directed = frozenset(arcs)
        self._undirected = frozenset(lines)

    def _checked_pair(self, a, b, pairs):
        i, j = self.index_of(a), self.index_of(b)
        if i == j:
            raise GraphError(f"self-loop at {self._nodes[i]!r}")
        key = frozenset((i, j))
        if key in pairs:
            raise GraphError(f"two edges between {self._nodes[i]!r} and {self._nodes[j]!r}")
        pairs.add(key)
        return i, j

    @classmethod
    def from_edges(
        cls,
        directed: Iterable[tuple[str, str]] = (),
        undirected: Iterable[tuple[str, str]] = (),
        nodes: Sequence[str] | None = None,
    ) -> "Cpdag":
        directed, undirected = list(directed), list(undirected)
        return cls(_collect_nodes(directed + undirected, nodes), directed, undirected)

    @property
    def directed(self) -> frozenset[tuple[int, int]]:
        return self._directed

    @property
    def undirected(self) -> frozenset[tuple[int, int]]:
        return self._undirected

    @property
    def edge_count(self) -> int:
        return len(self._directed) + len(self._undirected)

    @cached_property
    def _parent_sets(self) -> tuple[frozenset[int], ...]:
        pa: list[set[int]] = [set() for _ in self._nodes]
        for i, j in self._directed:
            pa[j].add(i)
        return tuple(frozenset(p) for p in pa)

    @cached_property
    def _child_sets(self) -> tuple[frozenset[int], ...]:
        ch: list[set[int]] = [set() for _ in self._nodes]
        for i, j in self._directed:
            ch[i].add(j)
        return tuple(frozenset(c) for c in ch)

    @cached_property
    def _neighbor_sets(self) -> tuple[frozenset[int], ...]:
        nb: list[set[int]] = [set() for _ in self._nodes]
        for i, j in self._undirected:
            nb[i].add(j)
            nb[j].add(i)
        return tuple(frozenset(s) for s in nb)

    def parents_of(self, i: int) -> frozenset[int]:
        return self._parent_sets[i]

    def children_of(self, i: int) -> frozenset[int]:
        return self._child_sets[i]

    def neighbors_of(self, i: int) -> frozenset[int]:
        """Endpoints of undirected edges at ``i``."""
        return self._neighbor_sets[i]

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        return tuple(
            p | c | u for p, c, u in zip(self._parent_sets, self._child_sets, self._neighbor_sets)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cpdag):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._directed == other._directed
            and self._undirected == other._undirected
        )

    def __hash__(self) -> int:
        return hash((self._nodes, self._directed, self._undirected))


Graph = Union[Dag, Cpdag]


def _collect_nodes(edges, nodes):
    if nodes is not None:
        return list(nodes)
    seen: dict[str, None] = {}
    for a, b in edges:
        seen.setdefault(a)
        seen.setdefault(b)
    return list(seen)


# --- Markov equivalence --------------------------------------------------


def meek_closure(
    n: int,
    directed: Iterable[tuple[int, int]],
    undirected: Iterable[tuple[int, int]],
) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """Apply Meek's orientation rules R1-R4 until nothing changes.

    Returns new ``(directed, undirected)`` sets; undirected pairs are
    ``(min, max)``.  Candidate edges are visited in sorted order so the
    result does not depend on set iteration order.
    """
    pa: list[set[int]] = [set() for _ in range(n)]
    ch: list[set[int]] = [set() for _ in range(n)]
    und: list[set[int]] = [set() for _ in range(n)]
    for i, j in directed:
        pa[j].add(i)
        ch[i].add(j)
    for i, j in undirected:
        und[i].add(j)
        und[j].add(i)

    def adj(a: int, b: int) -> bool:
        return b in pa[a] or b in ch[a] or b in und[a]

    def should_orient(a: int, b: int) -> bool:
        # R1: c -> a -- b, c and b nonadjacent
        for c in pa[a]:
            if not adj(c, b):
                return True
        # R2: a -> c -> b
        if ch[a] & pa[b]:
            return True
        # R3: a -- c -> b, a -- d -> b, c and d nonadjacent
        kites = sorted(und[a] & pa[b])
        for c, d in combinations(kites, 2):
            if not adj(c, d):
                return True
        # R4: d -> c -> b, a -- d, a adjacent to c, d and b nonadjacent
        for c in pa[b]:
            if c == a or not adj(a, c):
                continue
            for d in pa[c]:
                if d in und[a] and not adj(d, b):
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in sorted(und[i]):
                if j < i or j not in und[i]:
                    continue
                for a, b in ((i, j), (j, i)):
                    if should_orient(a, b):
                        und[a].discard(b)
                        und[b].discard(a)
                        pa[b].add(a)
                        ch[a].add(b)
                        changed = True
                        break
    out_dir = {(i, j) for j in range(n) for i in pa[j]}
    out_und = {(i, j) for i in range(n) for j in und[i] if i < j}
    return out_dir, out_und


def cpdag_of(d: Dag) -> Cpdag:
    """Completed PDAG of the Markov equivalence class of ``d``.

    Edges in v-structures are directed, every other adjacency starts
    undirected, and Meek closure then directs exactly the compelled edges.
    """
    compelled: set[tuple[int, int]] = set()
    for x, z, y in d.v_structures():
        compelled.add((x, z))
        compelled.add((y, z))
    rest = {(min(i, j), max(i, j)) for i, j in d.edges if (i, j) not in compelled}
    directed, undirected = meek_closure(d.n_nodes, compelled, rest)
    return Cpdag(d.nodes, directed, undirected)


def consistent_extension(g: Graph) -> Dag:
    """A DAG in the class represented by ``g`` (Dor-Tarsi sink elimination).

    The highest-index admissible sink is removed first, so undirected edges
    point from lower to higher index whenever the class allows it.  Raises :class:`IllegalCpdagError` when
    no extension exists.
    """
    if isinstance(g, Dag):
        return g
    n = g.n_nodes
    adj = [set(s) for s in g.adjacency]
    und = [set(g.neighbors_of(i)) for i in range(n)]
    ch = [set(g.children_of(i)) for i in range(n)]
    arcs = set(g.directed)
    remaining = list(range(n))
    while remaining:
        for pos in range(len(remaining) - 1, -1, -1):
            x = remaining[pos]
            if ch[x]:
                continue
            if all(adj[x] - {y} <= adj[y] for y in und[x]):
                break
        else:
            raise IllegalCpdagError("graph admits no consistent DAG extension")
        for y in und[x]:
            arcs.add((y, x))
        for y in adj[x]:
            adj[y].discard(x)
            und[y].discard(x)
            ch[y].discard(x)
        del remaining[pos]
    return Dag(g.nodes, arcs)


def is_legal_cpdag(g: Graph) -> bool:
    """True iff ``g`` is the CPDAG of some DAG.

    A :class:`Dag` is read as a fully directed CPDAG.
    """
    if isinstance(g, Dag):
        g = Cpdag(g.nodes, g.edges)
    try:
        ext = consistent_extension(g)
    except (IllegalCpdagError, CycleError):
        return False
    return cpdag_of(ext) == g


def as_cpdag(g: Graph) -> Cpdag:
    return cpdag_of(g) if isinstance(g, Dag) else g


# --- queries ---------------------------------------------------------------


def valid_order(d: Dag) -> tuple[str, ...]:
    """Topological order; among available sources the lowest index goes first."""
    return tuple(d.name_of(i) for i in d.topological_order)


def parents(g: Graph, x: NodeRef) -> frozenset[str]:
    return g.names(g.parents_of(g.index_of(x)))


def ancestors(g: Graph, x: NodeRef) -> frozenset[str]:
    """Ancestors along directed edges, including ``x`` itself."""
    i = g.index_of(x)
    seen = {i}
    stack = [i]
    while stack:
        v = stack.pop()
        for p in g.parents_of(v):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return g.names(seen)


def edge_count(g: Graph) -> int:
    """Number of adjacencies, regardless of edge marks."""
    return g.edge_count


def skeleton_pairs(g: Graph) -> set[tuple[int, int]]:
    return {(i, j) for i, nbrs in enumerate(g.adjacency) for j in nbrs if i < j}


# --- text format -----------------------------------------------------------


def parse_graph(text: str) -> Graph:
    """Parse the edge-list format.

    ::

        # comment
        nodes: a, b, c, isolated
        a -> b
        b -- c

    Returns a :class:`Dag` when there are no undirected edges, else a
    :class:`Cpdag`.  Node order is order of first appearance, header first.
    """
    order: dict[str, None] = {}
    directed: list[tuple[str, str]] = []
    undirected: list[tuple[str, str]] = []
    seen_pairs: set[frozenset[str]] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("nodes:"):
            for name in line[len("nodes:"):].split(","):
                name = name.strip()
                if name:
                    order.setdefault(name)
            continue
        parts = line.split()
        if len(parts) != 3 or parts[1] not in ("->", "--"):
            raise GraphParseError(f"unrecognized line {raw.strip()!r}", line_no)
        a, op, b = parts
        if a == b:
            raise GraphParseError(f"self-loop at {a!r}", line_no)
        pair = frozenset((a, b))
        if op == "->" and (b, a) in directed:
            raise GraphParseError(f"cycle among directed edges: {a!r} <-> {b!r}", line_no)
        if pair in seen_pairs:
            raise GraphParseError(f"duplicate edge between {a!r} and {b!r}", line_no)
        seen_pairs.add(pair)
        order.setdefault(a)
        order.setdefault(b)
        (directed if op == "->" else undirected).append((a, b))
    nodes = list(order)
    try:
        dag = Dag(nodes, directed)
    except CycleError as exc:
        raise GraphParseError(f"cycle among directed edges: {exc}") from None
    if not undirected:
        return dag
    return Cpdag(nodes, directed, undirected)


def serialize_graph(g: Graph) -> str:
    lines = ["nodes: " + ",".join(g.nodes)]
    arcs = g.edges if isinstance(g, Dag) else g.directed
    lines += sorted(f"{g.name_of(i)} -> {g.name_of(j)}" for i, j in arcs)
    if isinstance(g, Cpdag):
        pairs = (sorted((g.name_of(i), g.name_of(j))) for i, j in g.undirected)
        lines += sorted(f"{a} -- {b}" for a, b in pairs)
    return "\n".join(lines) + "\n"


def read_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(serialize_graph(g), encoding="utf-8")
