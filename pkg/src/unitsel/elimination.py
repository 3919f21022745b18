"""Elimination orders, widths and the structural analysis toolbox.

Eliminating a variable from an undirected graph connects all its neighbors
and removes it; the *cluster* of the variable is itself plus its neighbors at
removal time, and the *width* of an order is the largest cluster size minus
one. A U-constrained order places the variables U last; the minimum width
over such orders is the U-constrained treewidth.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import ModelError, Scm


class UGraph:
    """A simple undirected graph over integer node ids."""

    def __init__(self, nodes: Iterable[int] = (), edges: Iterable[tuple[int, int]] = ()):
        self.adj: dict[int, set[int]] = {int(n): set() for n in nodes}
        for a, b in edges:
            self.add_edge(a, b)

    @property
    def nodes(self) -> set[int]:
        return set(self.adj)

    def add_node(self, v: int) -> None:
        self.adj.setdefault(v, set())

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            return
        self.adj.setdefault(a, set()).add(b)
        self.adj.setdefault(b, set()).add(a)

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj.get(a, ())

    def neighbors(self, v: int) -> set[int]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def copy(self) -> "UGraph":
        g = UGraph()
        g.adj = {v: set(ns) for v, ns in self.adj.items()}
        return g

    def eliminate(self, v: int) -> frozenset[int]:
        """Connect all neighbors of ``v``, remove ``v``, return its cluster."""
        ns = self.adj.pop(v)
        cluster = frozenset(ns | {v})
        ns = list(ns)
        for i, a in enumerate(ns):
            self.adj[a].discard(v)
            for b in ns[i + 1:]:
                self.adj[a].add(b)
                self.adj[b].add(a)
        return cluster

    def fill_count(self, v: int) -> int:
        """Number of fill edges eliminating ``v`` would add."""
        ns = self.adj[v]
        missing = 0
        for a in ns:
            missing += len(ns - self.adj[a]) - 1  # a is never adjacent to itself
        return missing // 2

    def connected(self) -> bool:
        if not self.adj:
            return True
        seen = set()
        stack = [next(iter(self.adj))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.adj[v] - seen)
        return len(seen) == len(self.adj)

    def without(self, removed: Iterable[int]) -> "UGraph":
        removed = set(removed)
        g = UGraph()
        for v, ns in self.adj.items():
            if v in removed:
                continue
            g.adj[v] = ns - removed
        return g


@dataclass(frozen=True)
class EliminationOrder:
    """A total order over variable ids, optionally U-constrained.

    When ``constrained_suffix`` is set, exactly its members occupy the last
    positions of the sequence.
    """

    sequence: tuple[int, ...]
    constrained_suffix: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if len(set(self.sequence)) != len(self.sequence):
            raise ModelError("elimination order repeats a variable")
        if self.constrained_suffix is not None:
            k = len(self.constrained_suffix)
            tail = set(self.sequence[len(self.sequence) - k:]) if k else set()
            if tail != set(self.constrained_suffix):
                raise ModelError(
                    "constrained variables must occupy the tail of the order"
                )

    @property
    def prefix(self) -> tuple[int, ...]:
        """The part of the order before the constrained suffix."""
        if not self.constrained_suffix:
            return self.sequence
        return self.sequence[: len(self.sequence) - len(self.constrained_suffix)]

    @property
    def suffix(self) -> tuple[int, ...]:
        if not self.constrained_suffix:
            return ()
        return self.sequence[len(self.sequence) - len(self.constrained_suffix):]


@dataclass(frozen=True)
class ClusterReport:
    """Clusters induced by simulating an order, and the resulting width."""

    clusters: tuple[frozenset[int], ...]
    width: int


def moral_graph(scm: Scm) -> UGraph:
    """Undirect all edges and marry every pair of common parents."""
    g = UGraph(nodes=(v.id for v in scm.variables))
    for v in scm.variables:
        family = list(scm.parents[v.id]) + [v.id]
        for i, a in enumerate(family):
            for b in family[i + 1:]:
                g.add_edge(a, b)
    return g


def simulate_elimination(g: UGraph, order: EliminationOrder | Sequence[int]) -> ClusterReport:
    """Eliminate per the order, collecting clusters and the width."""
    seq = order.sequence if isinstance(order, EliminationOrder) else tuple(order)
    if set(seq) != g.nodes:
        raise ModelError("order must cover exactly the graph nodes")
    work = g.copy()
    clusters = tuple(work.eliminate(v) for v in seq)
    width = max((len(c) for c in clusters), default=0) - 1
    return ClusterReport(clusters, width)


def minfill_order(
    g: UGraph, constrained_suffix: Iterable[int] | None = None
) -> EliminationOrder:
    """Greedy minfill: repeatedly eliminate the eligible node adding the
    fewest fill edges (ties: smallest id). With a constrained suffix, non-U
    nodes are eligible while any remain, then the U nodes."""
    suffix = frozenset(constrained_suffix) if constrained_suffix is not None else None
    work = g.copy()
    seq: list[int] = []
    while work.nodes:
        pool = work.nodes - suffix if suffix else work.nodes
        if not pool:
            pool = work.nodes
        best = min(pool, key=lambda v: (work.fill_count(v), v))
        seq.append(best)
        work.eliminate(best)
    return EliminationOrder(tuple(seq), suffix)


def random_constrained_order(
    g: UGraph, constrained_suffix: Iterable[int], rng: np.random.Generator
) -> EliminationOrder:
    suffix = sorted(constrained_suffix)
    rest = sorted(g.nodes - set(suffix))
    rng.shuffle(rest)
    rng.shuffle(suffix)
    return EliminationOrder(tuple(rest) + tuple(suffix), frozenset(suffix))


# -- order lifting -------------------------------------------------------------


def lift_order_unconstrained(
    order: EliminationOrder | Sequence[int],
    duplicates: Mapping[int, tuple[int, ...]],
    h_id: int | None = None,
) -> EliminationOrder:
    """Replace each variable by its duplicate sequence, then append H.

    ``duplicates`` maps every base variable id to the ids of its copies in
    the lifted model (all first-world copies, then all second-world copies,
    then all third-world copies; shared variables map to their single copy).
    """
    seq = order.sequence if isinstance(order, EliminationOrder) else tuple(order)
    lifted: list[int] = []
    for vid in seq:
        lifted.extend(duplicates[vid])
    if h_id is not None:
        lifted.append(h_id)
    return EliminationOrder(tuple(lifted), None)


def lift_order_constrained(
    order: EliminationOrder,
    duplicates: Mapping[int, tuple[int, ...]],
    h_id: int | None,
    units: Iterable[int],
) -> EliminationOrder:
    """Same replacement, with H inserted just before the unit block."""
    units = set(units)
    if order.constrained_suffix is None or set(order.constrained_suffix) != units:
        raise ModelError("order is not constrained on the given unit variables")
    lifted: list[int] = []
    for vid in order.prefix:
        lifted.extend(duplicates[vid])
    if h_id is not None:
        lifted.append(h_id)
    suffix: list[int] = []
    for vid in order.suffix:
        copies = duplicates[vid]
        if len(set(copies)) != 1:
            raise ModelError("unit variables must be shared in the lifted model")
        suffix.append(copies[0])
    return EliminationOrder(tuple(lifted) + tuple(suffix), frozenset(suffix))


def append_root_order(order: EliminationOrder | Sequence[int], h_id: int) -> EliminationOrder:
    """The order <pi, H> for a model extended by a fresh root H."""
    seq = order.sequence if isinstance(order, EliminationOrder) else tuple(order)
    return EliminationOrder(seq + (h_id,), None)


# -- structural predicates -----------------------------------------------------


def skeleton(scm: Scm) -> UGraph:
    g = UGraph(nodes=(v.id for v in scm.variables))
    for v in scm.variables:
        for p in scm.parents[v.id]:
            g.add_edge(p, v.id)
    return g


def is_external(scm: Scm, units: Iterable[int]) -> bool:
    """True iff the DAG stays connected after removing the unit roots.

    Requires the base DAG (undirected skeleton) to be connected.
    """
    units = set(units)
    for vid in units:
        if not scm.is_root(vid):
            raise ModelError(f"unit variable {scm.var(vid).name!r} must be a root")
    g = skeleton(scm)
    if not g.connected():
        raise ModelError("base DAG is disconnected")
    return g.without(units).connected()


def eliminate_all(g: UGraph, vids: Iterable[int]) -> UGraph:
    """The filled graph left after eliminating ``vids`` (any order; the
    result is order-independent)."""
    work = g.copy()
    for v in vids:
        work.eliminate(v)
    return work


# -- exact width oracles -------------------------------------------------------


def treewidth_exact_enum(
    g: UGraph, constrained_suffix: Iterable[int] | None = None, max_orders: int = 50000
) -> tuple[int, EliminationOrder]:
    """Minimum width by enumerating all (constrained) orders.

    Small graphs only: an unconstrained graph is feasible up to 8 nodes; a
    constrained one up to roughly 5 + 5. The order count is checked first.
    """
    nodes = sorted(g.nodes)
    suffix = sorted(constrained_suffix) if constrained_suffix is not None else []
    rest = [v for v in nodes if v not in set(suffix)]
    count = math.factorial(len(rest)) * math.factorial(len(suffix))
    if count > max_orders:
        raise ModelError(
            f"enumeration oracle would visit {count} orders (limit {max_orders})"
        )
    best: tuple[int, tuple[int, ...]] | None = None
    for head in itertools.permutations(rest):
        for tail in itertools.permutations(suffix) if suffix else [()]:
            seq = head + tail
            width = simulate_elimination(g, seq).width
            if best is None or width < best[0]:
                best = (width, seq)
    assert best is not None
    return best[0], EliminationOrder(
        best[1], frozenset(suffix) if constrained_suffix is not None else None
    )


def _phase_min_width(g: UGraph, phase_nodes: list[int]) -> int:
    """Min over orders of the max cluster size while eliminating
    ``phase_nodes`` from ``g`` (other nodes stay). Subset dynamic program."""
    if not phase_nodes:
        return 0
    index = {v: i for i, v in enumerate(phase_nodes)}
    n = len(phase_nodes)

    def cluster_size(v: int, mask: int) -> int:
        # Neighbors of v in the graph with `mask` already eliminated =
        # surviving nodes reachable from v through eliminated nodes.
        seen = {v}
        stack = [v]
        size = 1
        while stack:
            a = stack.pop()
            for b in g.adj[a]:
                if b in seen:
                    continue
                seen.add(b)
                i = index.get(b)
                if i is not None and (mask >> i) & 1:
                    stack.append(b)  # eliminated: pass through
                else:
                    size += 1
        return size

    best = [0] * (1 << n)
    for mask in range(1, 1 << n):
        q = None
        for i in range(n):
            if not (mask >> i) & 1:
                continue
            prev = mask & ~(1 << i)
            c = max(best[prev], cluster_size(phase_nodes[i], prev))
            if q is None or c < q:
                q = c
        best[mask] = q
    return best[(1 << n) - 1]


def treewidth_exact(
    g: UGraph, constrained_suffix: Iterable[int] | None = None, max_free: int = 22
) -> int:
    """Exact (constrained) treewidth via dynamic programming over subsets.

    The constrained problem splits into two independent phases: the filled
    graph over the suffix after eliminating everything else does not depend
    on the elimination order used for the first phase.
    """
    suffix = set(constrained_suffix) if constrained_suffix is not None else set()
    first = sorted(g.nodes - suffix)
    if len(first) > max_free or len(suffix) > max_free:
        raise ModelError(f"exact oracle limited to {max_free} nodes per phase")
    size1 = _phase_min_width(g, first)
    if suffix:
        reduced = eliminate_all(g, first)
        size2 = _phase_min_width(reduced, sorted(suffix))
    else:
        size2 = 0
    return max(size1, size2) - 1


# -- order files ---------------------------------------------------------------


def format_order_file(order: EliminationOrder, scm: Scm) -> str:
    """Plain text: one variable name per line, with an optional
    ``#constrained:`` header naming the unit variables."""
    lines = []
    if order.constrained_suffix:
        names = ",".join(
            scm.var(v).name for v in sorted(order.constrained_suffix)
        )
        lines.append(f"#constrained: {names}")
    lines.extend(scm.var(v).name for v in order.sequence)
    return "\n".join(lines) + "\n"


def parse_order_file(text: str, scm: Scm) -> EliminationOrder:
    suffix: frozenset[int] | None = None
    seq: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#constrained:"):
            names = [s.strip() for s in line.split(":", 1)[1].split(",") if s.strip()]
            suffix = frozenset(scm.by_name(n).id for n in names)
            continue
        if line.startswith("#"):
            continue
        seq.append(scm.by_name(line).id)
    return EliminationOrder(tuple(seq), suffix)
