"""Segmentation quality metrics and scribble-effort statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .imgio import Image, Mask, Scribbles


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    jaccard: float
    precision: float
    recall: float
    f1: float
    fbeta: float
    me: float
    beta_sq: float

    def as_record(self) -> dict[str, float]:
        return {
            "jaccard": self.jaccard,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fbeta": self.fbeta,
            "me": self.me,
        }


def confusion(pred: Mask, truth: Mask) -> ConfusionCounts:
    """Pixelwise confusion counts with foreground as the positive class."""
    if pred.bits.shape != truth.bits.shape:
        raise DimensionMismatch(f"prediction {pred.bits.shape} vs truth {truth.bits.shape}")
    p = pred.bits
    t = truth.bits
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & t)),
        fp=int(np.count_nonzero(p & ~t)),
        fn=int(np.count_nonzero(~p & t)),
        tn=int(np.count_nonzero(~p & ~t)),
    )


def _ratio(num: float, den: float) -> float:
    # degenerate denominators (possible only with tp == 0) score zero
    return num / den if den > 0 else 0.0


def report(counts: ConfusionCounts, beta_sq: float = 0.3) -> MetricsReport:
    """All six scores from the counts; beta_sq < 1 weights precision up."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    return MetricsReport(
        jaccard=_ratio(tp, tp + fp + fn),
        precision=precision,
        recall=recall,
        f1=_ratio(2.0 * precision * recall, precision + recall),
        fbeta=_ratio((1.0 + beta_sq) * precision * recall, beta_sq * precision + recall),
        me=_ratio(fp + fn, counts.total),
        beta_sq=beta_sq,
    )


def scribble_amount(scribbles: Scribbles, image: Image) -> tuple[float, float, float]:
    """Scribbled pixels as percentages of the image: (bg%, fg%, total%)."""
    pixels = image.width * image.height
    bg = 100.0 * len(scribbles.bg_pixels) / pixels
    fg = 100.0 * len(scribbles.fg_pixels) / pixels
    return (bg, fg, bg + fg)


_METRIC_KEYS = ("jaccard", "precision", "recall", "f1", "fbeta", "me")


def aggregate_reports(reports: list[MetricsReport]) -> dict[str, dict[str, float]]:
    """Per-metric mean / population std-dev / min / max over a batch."""
    out: dict[str, dict[str, float]] = {}
    for key in _METRIC_KEYS:
        values = [getattr(r, key) for r in reports]
        if not values:
            out[key] = {"mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan}
            continue
        arr = np.asarray(values, dtype=float)
        out[key] = {
            "mean": float(arr.mean()),
            "std": float(arr.std()),
            "min": float(arr.min()),
            "max": float(arr.max()),
        }
    return out
