"""Maximum spanning tree partitioning of the segment graph.

Kruskal builds the MaxST (infinite seed edges always enter first), then the
minimum-weight edge on the unique path between the two terminals is removed;
the component holding the foreground terminal becomes the object. That edge
is the bottleneck of the widest S-T path, so the produced cut maximizes the
minimum crossing weight over all seed-respecting cuts.

A brute-force enumerator over labelings doubles as the test oracle for both
the bottleneck property and the boundary-energy objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, TooLarge
from .graph import SeedAssignment, SegmentGraph
from .imgio import Mask
from .lowlevel import SegmentMap

INFINITE = float("inf")


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass
class SpanningTree:
    """MaxST over the graph's active vertices, edges in selection order."""

    graph: SegmentGraph
    edges: list[tuple[int, int, float]]
    total_finite_weight: float

    @property
    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {}
        for u, v, w in self.edges:
            adj.setdefault(u, {})[v] = w
            adj.setdefault(v, {})[u] = w
        return adj


@dataclass
class CutResult:
    fg_segments: frozenset[int]
    bg_segments: frozenset[int]
    removed_edge: tuple[int, int, float]
    boundary_edges: list[tuple[int, int, float]]
    energy: float


def max_spanning_tree(graph: SegmentGraph) -> SpanningTree:
    """Kruskal with deterministic ordering: weight desc, then (u, v) asc."""
    vertices = graph.vertex_ids()
    index = {v: i for i, v in enumerate(vertices)}
    uf = UnionFind(len(vertices))
    picked: list[tuple[int, int, float]] = []
    for u, v, w in sorted(graph.edges, key=lambda e: (-e[2], e[0], e[1])):
        if uf.union(index[u], index[v]):
            picked.append((u, v, w))
            if len(picked) == len(vertices) - 1:
                break
    if len(picked) != len(vertices) - 1:
        raise DisconnectedGraph(
            f"graph does not span its {len(vertices)} vertices; got {len(picked)} tree edges"
        )
    total = sum(w for _, _, w in picked if np.isfinite(w))
    return SpanningTree(graph=graph, edges=picked, total_finite_weight=total)


def _tree_path(tree: SpanningTree, start: int, goal: int) -> list[tuple[int, int, float]]:
    """Edges along the unique start->goal path (DFS, neighbors in id order)."""
    adj = tree.adjacency
    stack = [start]
    prev: dict[int, int] = {start: start}
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nb in sorted(adj.get(node, {}), reverse=True):
            if nb not in prev:
                prev[nb] = node
                stack.append(nb)
    if goal not in prev:
        raise DisconnectedGraph(f"no path between {start} and {goal} in tree")
    path_nodes = [goal]
    while path_nodes[-1] != start:
        path_nodes.append(prev[path_nodes[-1]])
    path_nodes.reverse()
    return [
        (path_nodes[i], path_nodes[i + 1], adj[path_nodes[i]][path_nodes[i + 1]])
        for i in range(len(path_nodes) - 1)
    ]


def terminal_cut(tree: SpanningTree) -> CutResult:
    """Split the tree at the minimum-weight edge on the terminal-terminal path.

    On ties the edge closest to the foreground terminal wins. The component
    containing the foreground terminal is labeled foreground. The energy of
    the resulting labeling is evaluated against the full source graph.
    """
    graph = tree.graph
    s, t = graph.source, graph.sink
    path = _tree_path(tree, s, t)
    removed = None
    for u, v, w in path:
        if np.isfinite(w) and (removed is None or w < removed[2]):
            removed = (u, v, w)
    assert removed is not None, "terminal path contains no finite edge"

    adj = tree.adjacency
    ru, rv = removed[0], removed[1]
    reach = {s}
    stack = [s]
    while stack:
        node = stack.pop()
        for nb in sorted(adj.get(node, {}), reverse=True):
            if nb in reach:
                continue
            if (node == ru and nb == rv) or (node == rv and nb == ru):
                continue
            reach.add(nb)
            stack.append(nb)

    fg = frozenset(x for x in reach if x < graph.n_segments)
    bg = frozenset(x for x in range(graph.n_segments) if x not in fg)
    boundary = [
        (u, v, w)
        for u, v, w in graph.finite_edges()
        if (u in fg) != (v in fg)
    ]
    seeds = _seeds_from_terminal_edges(graph)
    labels = np.zeros(graph.n_segments, dtype=np.int8)
    labels[list(fg)] = 1
    energy = boundary_energy(graph, labels, seeds)
    return CutResult(
        fg_segments=fg,
        bg_segments=bg,
        removed_edge=removed,
        boundary_edges=boundary,
        energy=energy,
    )


def _seeds_from_terminal_edges(graph: SegmentGraph) -> SeedAssignment:
    fg = {v if u == graph.source else u for u, v, w in graph.edges if graph.source in (u, v)}
    bg = {v if u == graph.sink else u for u, v, w in graph.edges if graph.sink in (u, v)}
    return SeedAssignment(fg_segments=frozenset(fg), bg_segments=frozenset(bg))


def boundary_energy(graph: SegmentGraph, labeling: np.ndarray, seeds: SeedAssignment) -> float:
    """Cut cost: sum of (1 - w/w_max) over finite edges with differing labels.

    Any seed violation short-circuits to infinity. A degenerate graph whose
    finite weights are all zero scores each crossing edge as a full unit.
    """
    labels = np.asarray(labeling)
    if labels.shape[0] != graph.n_segments:
        raise ValueError(f"labeling covers {labels.shape[0]} segments, graph has {graph.n_segments}")
    for p in seeds.fg_segments:
        if labels[p] != 1:
            return INFINITE
    for q in seeds.bg_segments:
        if labels[q] != 0:
            return INFINITE
    w_max = graph.max_finite_weight()
    total = 0.0
    for u, v, w in graph.finite_edges():
        if labels[u] != labels[v]:
            total += 1.0 - (w / w_max if w_max > 0 else 0.0)
    return total


@dataclass
class BruteForceResult:
    """Exhaustive optima over all seed-respecting binary labelings.

    ``bottleneck_value`` is the minimum, over every cut, of that cut's
    maximum crossing similarity; equivalently (through the per-edge cut
    cost 1 - w/w_max, which reverses order) the maximum over cuts of the
    minimum crossing cost. The terminal cut attains it exactly.
    """

    best_labeling: np.ndarray
    best_energy: float
    bottleneck_labeling: np.ndarray
    bottleneck_value: float
    connected_labeling: np.ndarray | None
    connected_energy: float


def _sides_connected(graph: SegmentGraph, labels: np.ndarray) -> bool:
    adj = graph.adjacency
    for side in (0, 1):
        members = [i for i in range(graph.n_segments) if labels[i] == side]
        if not members:
            return False
        seen = {members[0]}
        stack = [members[0]]
        while stack:
            node = stack.pop()
            for nb, w in adj.get(node, {}).items():
                if nb < graph.n_segments and labels[nb] == side and nb not in seen and np.isfinite(w):
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != len(members):
            return False
    return True


def brute_force_cut(graph: SegmentGraph, seeds: SeedAssignment, limit: int = 20) -> BruteForceResult:
    """Enumerate every seed-respecting labeling; track the optima.

    Returns the energy minimizer, the bottleneck cut (see BruteForceResult),
    and the energy minimizer among labelings whose two sides are each
    connected in the finite-edge graph. Enumeration order is fixed, so ties
    resolve deterministically.
    """
    n = graph.n_segments
    if n > limit:
        raise TooLarge(f"{n} segments exceeds the brute-force limit of {limit}")
    free = [i for i in range(n) if i not in seeds.fg_segments and i not in seeds.bg_segments]
    base = np.zeros(n, dtype=np.int8)
    for p in seeds.fg_segments:
        base[p] = 1

    finite = graph.finite_edges()
    w_max = graph.max_finite_weight()

    best: tuple[float, np.ndarray] | None = None
    best_bottleneck: tuple[float, np.ndarray] | None = None
    best_connected: tuple[float, np.ndarray] | None = None

    for bits in range(1 << len(free)):
        labels = base.copy()
        for j, seg in enumerate(free):
            labels[seg] = (bits >> j) & 1
        if not labels.any() or labels.all():
            continue  # not a cut: one side empty
        crossing = [w for u, v, w in finite if labels[u] != labels[v]]
        energy = sum(1.0 - (w / w_max if w_max > 0 else 0.0) for w in crossing)
        max_crossing = max(crossing) if crossing else INFINITE
        if best is None or energy < best[0]:
            best = (energy, labels)
        if best_bottleneck is None or max_crossing < best_bottleneck[0]:
            best_bottleneck = (max_crossing, labels)
        if _sides_connected(graph, labels):
            if best_connected is None or energy < best_connected[0]:
                best_connected = (energy, labels)

    if best is None:
        raise ValueError("no seed-respecting cut exists (seeds must be non-empty on both sides)")
    return BruteForceResult(
        best_labeling=best[1],
        best_energy=best[0],
        bottleneck_labeling=best_bottleneck[1],
        bottleneck_value=best_bottleneck[0],
        connected_labeling=None if best_connected is None else best_connected[1],
        connected_energy=INFINITE if best_connected is None else best_connected[0],
    )


def segments_to_mask(segmap: SegmentMap, cut: CutResult) -> Mask:
    """Pixel mask from the cut: a pixel is foreground iff its segment is."""
    lookup = np.zeros(segmap.n_segments, dtype=bool)
    lookup[list(cut.fg_segments)] = True
    return Mask(lookup[segmap.labels])
