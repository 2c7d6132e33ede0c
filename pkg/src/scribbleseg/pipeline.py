"""Session orchestration: segment once, then iterate scribble -> cut -> overlay.

The expensive artifacts (segment map, features, finite-edge graph) are
computed eagerly at session creation and never rebuilt while the user
refines scribbles; each cut only re-attaches terminal edges to a copy of
the cached graph. Scribbles accumulate across iterations, so replaying a
stroke log always reproduces the same mask.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DatasetLayoutError, SingleSegment
from .graph import SegmentGraph, attach_terminals, build_graph, scribbles_to_seeds
from .imgio import Image, Mask, Scribbles, load_image, load_scribbles, load_mask, render_overlay
from .lowlevel import MeanShiftParams, SegmentMap, meanshift_segment, slic_segment
from .metrics import MetricsReport, aggregate_reports, confusion, report
from .partition import CutResult, max_spanning_tree, segments_to_mask, terminal_cut
from .similarity import SegmentFeatures, SimilarityConfig, segment_features


@dataclass
class EngineConfig:
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    lowlevel: str = "meanshift"              # or "slic"
    meanshift: MeanShiftParams = field(default_factory=MeanShiftParams)
    slic_k: int = 400
    slic_compactness: float = 10.0
    connectivity: int = 8
    beta_sq: float = 0.3
    overlay_alpha: float = 0.6

    def __post_init__(self):
        if self.lowlevel not in ("meanshift", "slic"):
            raise ValueError(f"lowlevel must be 'meanshift' or 'slic', got {self.lowlevel!r}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if not (0.0 <= self.overlay_alpha <= 1.0):
            raise ValueError(f"overlay_alpha must be in [0, 1], got {self.overlay_alpha}")


@dataclass
class SessionState:
    image: Image
    config: EngineConfig
    segmap: SegmentMap
    features: list[SegmentFeatures]
    base_graph: SegmentGraph
    scribbles: Scribbles = field(default_factory=Scribbles)
    last_cut: CutResult | None = None
    revision: int = 0
    graph_builds: int = 0    # instrumentation: must stay at 1 per session


def create_session(image: Image, config: EngineConfig | None = None) -> SessionState:
    """Segment the image and cache features plus the terminal-free graph."""
    config = config or EngineConfig()
    if config.lowlevel == "slic":
        segmap = slic_segment(image, config.slic_k, config.slic_compactness)
    else:
        segmap = meanshift_segment(image, config.meanshift)
    features = segment_features(image, segmap, config.similarity)
    base_graph = build_graph(
        image, segmap, config.similarity,
        connectivity=config.connectivity, features=features,
    )
    return SessionState(
        image=image,
        config=config,
        segmap=segmap,
        features=features,
        base_graph=base_graph,
        graph_builds=1,
    )


def add_scribbles(session: SessionState, delta: Scribbles) -> SessionState:
    """Accumulate new strokes; the union must stay conflict-free.

    Raises ConflictError without mutating the session if the union marks
    some pixel as both classes.
    """
    delta.check_bounds(session.image.height, session.image.width)
    merged = session.scribbles.union(delta)   # raises ConflictError on overlap
    session.scribbles = merged
    session.revision += 1
    return session


def reset_scribbles(session: SessionState) -> SessionState:
    """Clear accumulated scribbles (segmentation cache untouched)."""
    session.scribbles = Scribbles()
    session.last_cut = None
    session.revision += 1
    return session


def run_cut(session: SessionState) -> tuple[Mask, Image, CutResult]:
    """Partition with the current scribbles and render the overlay.

    Needs at least one foreground- and one background-seeded segment; the
    cached graph is copied, terminals attached, and the tree cut.
    """
    if session.segmap.n_segments < 2:
        raise SingleSegment("image collapsed to a single segment; nothing to partition")
    seeds = scribbles_to_seeds(session.segmap, session.scribbles)
    seeded = attach_terminals(session.base_graph, seeds)
    tree = max_spanning_tree(seeded)
    cut = terminal_cut(tree)
    mask = segments_to_mask(session.segmap, cut)
    overlay = render_overlay(session.image, mask, session.config.overlay_alpha)
    session.last_cut = cut
    return mask, overlay, cut


# ---------------------------------------------------------------------------
# Batch evaluation over a dataset directory. Layout, per item <name>:
#   <name>.png                      image
#   <name>-scribbles.png            RGBA scribble overlay (red fg / blue bg)
#     or <name>-fg.png + <name>-bg.png binary scribble masks
#   <name>-gt.png                   binary ground-truth mask
# ---------------------------------------------------------------------------

_SUFFIXES = ("-scribbles", "-fg", "-bg", "-gt")


@dataclass
class ItemResult:
    name: str
    report: MetricsReport
    seconds: float
    n_segments: int


@dataclass
class BatchResult:
    items: list[ItemResult]
    skipped: list[tuple[str, str]]
    aggregate: dict[str, dict[str, float]]

    def mean_seconds(self) -> float:
        if not self.items:
            return 0.0
        return sum(it.seconds for it in self.items) / len(self.items)


def _dataset_items(root: Path) -> list[str]:
    names = []
    for p in sorted(root.glob("*.png")):
        stem = p.stem
        if any(stem.endswith(sfx) for sfx in _SUFFIXES):
            continue
        names.append(stem)
    return names


def evaluate_item(root: Path, name: str, config: EngineConfig) -> ItemResult:
    image = load_image(root / f"{name}.png")
    overlay_path = root / f"{name}-scribbles.png"
    fg_path = root / f"{name}-fg.png"
    bg_path = root / f"{name}-bg.png"
    if overlay_path.exists():
        scribbles = load_scribbles(overlay_path)
    elif fg_path.exists() and bg_path.exists():
        scribbles = load_scribbles((fg_path, bg_path))
    else:
        raise DatasetLayoutError(f"{name}: no scribble files found")
    gt_path = root / f"{name}-gt.png"
    if not gt_path.exists():
        raise DatasetLayoutError(f"{name}: missing ground truth {gt_path.name}")
    truth = load_mask(gt_path)

    start = time.perf_counter()
    session = create_session(image, config)
    add_scribbles(session, scribbles)
    mask, _, _ = run_cut(session)
    elapsed = time.perf_counter() - start
    scores = report(confusion(mask, truth), beta_sq=config.beta_sq)
    return ItemResult(name=name, report=scores, seconds=elapsed, n_segments=session.segmap.n_segments)


def batch_evaluate(dataset_dir: str | Path, config: EngineConfig | None = None) -> BatchResult:
    """Segment and score every item in the directory; skip broken ones."""
    config = config or EngineConfig()
    root = Path(dataset_dir)
    if not root.is_dir():
        raise DatasetLayoutError(f"not a directory: {root}")
    names = _dataset_items(root)
    if not names:
        raise DatasetLayoutError(f"no dataset images found under {root}")
    items: list[ItemResult] = []
    skipped: list[tuple[str, str]] = []
    for name in names:
        try:
            items.append(evaluate_item(root, name, config))
        except Exception as exc:  # noqa: BLE001 - one bad item must not sink the batch
            skipped.append((name, str(exc)))
    return BatchResult(
        items=items,
        skipped=skipped,
        aggregate=aggregate_reports([it.report for it in items]),
    )


def write_report_jsonl(result: BatchResult, path: str | Path) -> None:
    """One record per image, then one aggregate record."""
    with open(path, "w", encoding="utf-8") as fh:
        for it in result.items:
            rec = {"name": it.name, "seconds": it.seconds, "n_segments": it.n_segments}
            rec.update(it.report.as_record())
            fh.write(json.dumps(rec) + "\n")
        fh.write(json.dumps({"aggregate": result.aggregate, "skipped": result.skipped}) + "\n")


def format_aggregate_table(result: BatchResult) -> str:
    """Human-readable aggregate block: metric rows, mean/std/min/max columns."""
    lines = [f"{'metric':<10} {'mean':>8} {'std':>8} {'min':>8} {'max':>8}"]
    for key, stats in result.aggregate.items():
        lines.append(
            f"{key:<10} {stats['mean']:>8.4f} {stats['std']:>8.4f} "
            f"{stats['min']:>8.4f} {stats['max']:>8.4f}"
        )
    lines.append(f"images: {len(result.items)}  skipped: {len(result.skipped)}  "
                 f"mean seconds/image: {result.mean_seconds():.2f}")
    return "\n".join(lines)
