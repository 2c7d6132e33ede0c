"""Segment graph: one vertex per pixel-segment plus two terminal vertices.

Neighboring segments get a finite edge weighted by the configured
similarity measure; non-neighbors simply get no edge (identical partition
semantics, smaller graph). Seeded segments are wired to the terminals with
infinite-weight edges, which float('inf') models exactly: it orders above
every finite weight and no arithmetic is ever done on edge weights here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySeeds, SeedConflict
from .imgio import Image, Scribbles
from .lowlevel import SegmentMap
from .similarity import SegmentFeatures, SimilarityConfig, segment_features, similarity_weight

INFINITE = float("inf")


@dataclass
class SeedAssignment:
    """Segment ids marked foreground/background by the user's scribbles."""

    fg_segments: frozenset[int] = field(default_factory=frozenset)
    bg_segments: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "fg_segments", frozenset(self.fg_segments))
        object.__setattr__(self, "bg_segments", frozenset(self.bg_segments))
        overlap = self.fg_segments & self.bg_segments
        if overlap:
            raise SeedConflict(set(overlap))


@dataclass
class SegmentGraph:
    """Weighted undirected graph over segments 0..N-1 plus terminals S, T.

    Edges are stored once per unordered pair with u < v. The terminals
    (ids N and N+1) only participate once seeds attach them; before that
    they are reserved but not spanned.
    """

    n_segments: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        self._adj: dict[int, dict[int, float]] | None = None

    @property
    def source(self) -> int:
        """Foreground terminal id."""
        return self.n_segments

    @property
    def sink(self) -> int:
        """Background terminal id."""
        return self.n_segments + 1

    @property
    def adjacency(self) -> dict[int, dict[int, float]]:
        if self._adj is None:
            adj: dict[int, dict[int, float]] = {}
            for u, v, w in self.edges:
                adj.setdefault(u, {})[v] = w
                adj.setdefault(v, {})[u] = w
            self._adj = adj
        return self._adj

    def weight(self, u: int, v: int) -> float | None:
        return self.adjacency.get(u, {}).get(v)

    def vertex_ids(self) -> list[int]:
        ids = list(range(self.n_segments))
        present = {u for u, _, _ in self.edges} | {v for _, v, _ in self.edges}
        if self.source in present:
            ids.append(self.source)
        if self.sink in present:
            ids.append(self.sink)
        return ids

    def finite_edges(self) -> list[tuple[int, int, float]]:
        return [(u, v, w) for u, v, w in self.edges if np.isfinite(w)]

    def max_finite_weight(self) -> float:
        finite = [w for _, _, w in self.edges if np.isfinite(w)]
        if not finite:
            raise ValueError("graph has no finite edges")
        return max(finite)


def build_adjacency(segmap: SegmentMap, connectivity: int = 8) -> set[tuple[int, int]]:
    """Unordered pairs of segment ids that touch under 4- or 8-connectivity."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    lab = segmap.labels
    shifts = [(lab[:, :-1], lab[:, 1:]), (lab[:-1, :], lab[1:, :])]
    if connectivity == 8:
        shifts += [(lab[:-1, :-1], lab[1:, 1:]), (lab[:-1, 1:], lab[1:, :-1])]
    pairs: set[tuple[int, int]] = set()
    for a, b in shifts:
        diff = a != b
        if not diff.any():
            continue
        stacked = np.stack([a[diff], b[diff]], axis=1)
        lo = stacked.min(axis=1)
        hi = stacked.max(axis=1)
        for p, q in np.unique(np.stack([lo, hi], axis=1), axis=0):
            pairs.add((int(p), int(q)))
    return pairs


def build_graph(
    image: Image,
    segmap: SegmentMap,
    config: SimilarityConfig,
    connectivity: int = 8,
    features: list[SegmentFeatures] | None = None,
) -> SegmentGraph:
    """Finite similarity edges between touching segments; terminals unwired."""
    if features is None:
        features = segment_features(image, segmap, config)
    edges = [
        (u, v, similarity_weight(features[u], features[v], config))
        for u, v in sorted(build_adjacency(segmap, connectivity))
    ]
    return SegmentGraph(n_segments=segmap.n_segments, edges=edges)


def scribbles_to_seeds(segmap: SegmentMap, scribbles: Scribbles) -> SeedAssignment:
    """Map scribbled pixels (and any bbox exterior) to seed segment sets.

    A segment is foreground-seeded iff it contains a foreground-scribbled
    pixel, likewise for background; segments lying entirely outside the
    bbox are background too (a straddling segment may still hold object
    pixels, so it is left unseeded). A segment pulled both ways is an error
    the caller must surface, not resolve.
    """
    scribbles.check_bounds(segmap.height, segmap.width)
    lab = segmap.labels
    fg = {int(lab[r, c]) for r, c in scribbles.fg_pixels}
    bg = {int(lab[r, c]) for r, c in scribbles.bg_pixels}
    if scribbles.bbox is not None:
        r0, c0, r1, c1 = scribbles.bbox
        inside = set(np.unique(lab[r0:r1 + 1, c0:c1 + 1]).tolist())
        bg |= {int(s) for s in range(segmap.n_segments) if s not in inside}
    conflict = fg & bg
    if conflict:
        raise SeedConflict(conflict)
    return SeedAssignment(fg_segments=frozenset(fg), bg_segments=frozenset(bg))


def attach_terminals(graph: SegmentGraph, seeds: SeedAssignment) -> SegmentGraph:
    """New graph with infinite terminal edges for the given seeds.

    Any previously attached terminal edges are dropped first, so the
    operation is idempotent per seed set.
    """
    if not seeds.fg_segments and not seeds.bg_segments:
        raise EmptySeeds("both")
    if not seeds.fg_segments:
        raise EmptySeeds("foreground")
    if not seeds.bg_segments:
        raise EmptySeeds("background")
    s, t = graph.source, graph.sink
    edges = [(u, v, w) for u, v, w in graph.edges if u < graph.n_segments and v < graph.n_segments]
    edges += [(min(p, s), max(p, s), INFINITE) for p in sorted(seeds.fg_segments)]
    edges += [(min(q, t), max(q, t), INFINITE) for q in sorted(seeds.bg_segments)]
    return SegmentGraph(n_segments=graph.n_segments, edges=edges)
