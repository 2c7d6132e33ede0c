"""Interactive scribble-guided image segmentation.

Pipeline: mean-shift (or SLIC) pixel-segments -> similarity-weighted
segment graph -> maximum spanning tree -> terminal-path bottleneck cut,
iterated under user scribbles.
"""

from .errors import (
    BinMismatch,
    ConflictError,
    DatasetLayoutError,
    DecodeError,
    DimensionMismatch,
    DisconnectedGraph,
    EmptySeeds,
    EmptySegment,
    InvalidK,
    MissingJointHistogram,
    ScribblesegError,
    SeedConflict,
    SingleSegment,
    TooLarge,
)
from .imgio import Image, Mask, Scribbles, load_image, load_mask, load_scribbles, render_overlay, save_mask
from .lowlevel import MeanShiftParams, SegmentMap, meanshift_filter, meanshift_segment, slic_segment
from .similarity import SegmentFeatures, SimilarityConfig, bha, channel_histogram, ihsi, pssi, segment_features
from .graph import SeedAssignment, SegmentGraph, attach_terminals, build_adjacency, build_graph, scribbles_to_seeds
from .partition import (
    CutResult,
    SpanningTree,
    boundary_energy,
    brute_force_cut,
    max_spanning_tree,
    segments_to_mask,
    terminal_cut,
)
from .metrics import ConfusionCounts, MetricsReport, confusion, report, scribble_amount
from .pipeline import EngineConfig, SessionState, add_scribbles, batch_evaluate, create_session, reset_scribbles, run_cut

__version__ = "0.1.0"
