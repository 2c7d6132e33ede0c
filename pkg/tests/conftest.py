"""Shared synthetic fixtures. Everything is seeded and deterministic."""

from __future__ import annotations

import numpy as np
import pytest

from scribbleseg.imgio import Image, Mask, Scribbles

LEFT_COLOR = (40, 60, 190)
RIGHT_COLOR = (210, 70, 50)


def half_plane_pixels(height=40, width=40, left=(0, 0, 0), right=(255, 255, 255)) -> np.ndarray:
    px = np.zeros((height, width, 3), np.uint8)
    px[:, : width // 2] = left
    px[:, width // 2:] = right
    return px


def noisy_two_region_pixels(height=64, width=64, sigma=8.0, seed=7) -> tuple[np.ndarray, np.ndarray]:
    """Two vertical color regions plus Gaussian noise; returns (pixels, truth).

    Truth marks the right region as foreground.
    """
    rng = np.random.default_rng(seed)
    base = half_plane_pixels(height, width, LEFT_COLOR, RIGHT_COLOR).astype(np.float64)
    noisy = base + rng.normal(0.0, sigma, base.shape)
    px = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    truth = np.zeros((height, width), bool)
    truth[:, width // 2:] = True
    return px, truth


@pytest.fixture
def half_plane_image() -> Image:
    return Image(half_plane_pixels())


@pytest.fixture
def noisy_fixture() -> tuple[Image, Mask]:
    px, truth = noisy_two_region_pixels()
    return Image(px), Mask(truth)


@pytest.fixture
def half_plane_scribbles() -> Scribbles:
    # one short stroke per region (right half = foreground)
    fg = {(20, c) for c in range(28, 34)}
    bg = {(20, c) for c in range(6, 12)}
    return Scribbles(fg_pixels=fg, bg_pixels=bg)
