"""Image, mask and scribble I/O plus translucent overlay rendering.

Formats kept deliberately narrow: lossless PNG (8-bit RGB/RGBA/grayscale)
and binary PPM (P6). Lossy codecs would perturb the color histograms the
rest of the pipeline depends on, so they are rejected at decode time.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError

from .errors import ConflictError, DecodeError, DimensionMismatch

PathLike = str | os.PathLike


@dataclass
class Image:
    """8-bit RGB raster, row-major, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class Mask:
    """Per-pixel boolean raster; True = foreground."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"expected (H, W) mask array, got shape {bits.shape}")
        self.bits = bits.astype(bool)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class Scribbles:
    """User-marked pixels: disjoint foreground/background sets of (row, col).

    ``bbox`` is an optional inclusive rectangle (row0, col0, row1, col1);
    everything fully outside it is treated as background downstream.
    """

    fg_pixels: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    bg_pixels: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    bbox: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "fg_pixels", frozenset(self.fg_pixels))
        object.__setattr__(self, "bg_pixels", frozenset(self.bg_pixels))
        overlap = self.fg_pixels & self.bg_pixels
        if overlap:
            raise ConflictError(min(overlap))
        if self.bbox is not None:
            r0, c0, r1, c1 = self.bbox
            if r0 > r1 or c0 > c1:
                raise ValueError(f"malformed bbox {self.bbox}: need row0 <= row1 and col0 <= col1")

    def union(self, other: "Scribbles") -> "Scribbles":
        """Merge two scribble sets; raises ConflictError on fg/bg overlap."""
        return Scribbles(
            fg_pixels=self.fg_pixels | other.fg_pixels,
            bg_pixels=self.bg_pixels | other.bg_pixels,
            bbox=other.bbox if other.bbox is not None else self.bbox,
        )

    def check_bounds(self, height: int, width: int) -> None:
        for (r, c) in self.fg_pixels | self.bg_pixels:
            if not (0 <= r < height and 0 <= c < width):
                raise ValueError(f"scribble pixel {(r, c)} outside {height}x{width} image")
        if self.bbox is not None:
            r0, c0, r1, c1 = self.bbox
            if not (0 <= r0 and r1 < height and 0 <= c0 and c1 < width):
                raise ValueError(f"bbox {self.bbox} outside {height}x{width} image")


def _load_ppm(raw: bytes, path: PathLike) -> Image:
    """Decode binary PPM (P6, maxval <= 255)."""
    pos = 2  # past magic
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(raw):
            raise DecodeError(f"{path}: truncated PPM header")
        ch = raw[pos:pos + 1]
        if ch == b"#":
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        elif ch.isdigit():
            start = pos
            while pos < len(raw) and raw[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(raw[start:pos]))
        else:
            raise DecodeError(f"{path}: malformed PPM header")
    width, height, maxval = fields
    if maxval > 255 or maxval < 1 or width < 1 or height < 1:
        raise DecodeError(f"{path}: unsupported PPM parameters w={width} h={height} maxval={maxval}")
    pos += 1  # single whitespace after maxval
    data = raw[pos:pos + width * height * 3]
    if len(data) != width * height * 3:
        raise DecodeError(f"{path}: PPM pixel payload truncated")
    return Image(np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy())


def load_image(path: PathLike) -> Image:
    """Load a PNG or binary PPM (P6) as exact 8-bit RGB; no color management."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P6":
        return _load_ppm(raw, path)
    try:
        pil = _PILImage.open(io.BytesIO(raw))
        pil.load()
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: not a decodable PNG/PPM image") from exc
    except OSError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    if pil.format != "PNG":
        raise DecodeError(f"{path}: unsupported format {pil.format!r}; only PNG and binary PPM are accepted")
    if pil.mode == "P":
        pil = pil.convert("RGBA" if "transparency" in pil.info else "RGB")
    if pil.mode == "RGBA":
        arr = np.asarray(pil)[:, :, :3]
    elif pil.mode == "RGB":
        arr = np.asarray(pil)
    elif pil.mode in ("L", "1"):
        arr = np.asarray(pil.convert("L"))
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif pil.mode == "LA":
        arr = np.asarray(pil)[:, :, 0]
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    else:
        raise DecodeError(f"{path}: unsupported PNG mode {pil.mode!r}")
    return Image(np.ascontiguousarray(arr, dtype=np.uint8))


def save_image(image: Image, path: PathLike) -> None:
    """Write an RGB PNG."""
    _PILImage.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


def save_mask(mask: Mask, path: PathLike) -> None:
    """Write an 8-bit grayscale PNG: foreground 255, background 0."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    _PILImage.fromarray(arr, mode="L").save(path, format="PNG")


def mask_png_bytes(mask: Mask) -> bytes:
    """Encode a mask as PNG bytes (same encoding as save_mask)."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    _PILImage.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def image_png_bytes(image: Image) -> bytes:
    """Encode an RGB image as PNG bytes."""
    buf = io.BytesIO()
    _PILImage.fromarray(image.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_mask(path: PathLike) -> Mask:
    """Load a grayscale PNG mask; any nonzero sample counts as foreground."""
    try:
        pil = _PILImage.open(path)
        pil.load()
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: not a decodable mask PNG") from exc
    arr = np.asarray(pil.convert("L"))
    return Mask(arr > 0)


_FG_RGBA = (255, 0, 0, 255)   # pure red
_BG_RGBA = (0, 0, 255, 255)   # pure blue


def _pixel_set(mask: np.ndarray) -> frozenset[tuple[int, int]]:
    rows, cols = np.nonzero(mask)
    return frozenset(zip(rows.tolist(), cols.tolist()))


def load_scribbles(source: PathLike | tuple[PathLike, PathLike]) -> Scribbles:
    """Load scribbles from either form:

    * a single RGBA overlay PNG where pure red marks foreground and pure
      blue marks background (everything else ignored), or
    * a (foreground, background) pair of binary mask PNGs.
    """
    if isinstance(source, tuple):
        fg_path, bg_path = source
        fg = load_mask(fg_path).bits
        bg = load_mask(bg_path).bits
        if fg.shape != bg.shape:
            raise DimensionMismatch(f"scribble masks disagree: {fg.shape} vs {bg.shape}")
        both = fg & bg
        if both.any():
            rows, cols = np.nonzero(both)
            raise ConflictError((int(rows[0]), int(cols[0])))
        return Scribbles(fg_pixels=_pixel_set(fg), bg_pixels=_pixel_set(bg))

    try:
        pil = _PILImage.open(source)
        pil.load()
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{source}: not a decodable scribble PNG") from exc
    if pil.mode == "P":
        pil = pil.convert("RGBA")
    if pil.mode == "RGB":
        arr = np.asarray(pil)
        alpha = np.full(arr.shape[:2], 255, dtype=np.uint8)
        arr = np.dstack([arr, alpha])
    elif pil.mode == "RGBA":
        arr = np.asarray(pil)
    else:
        raise DecodeError(f"{source}: scribble overlay must be RGB or RGBA, got {pil.mode!r}")
    fg = np.all(arr == np.array(_FG_RGBA, dtype=np.uint8), axis=2)
    bg = np.all(arr == np.array(_BG_RGBA, dtype=np.uint8), axis=2)
    return Scribbles(fg_pixels=_pixel_set(fg), bg_pixels=_pixel_set(bg))


def save_scribbles(scribbles: Scribbles, height: int, width: int, path: PathLike) -> None:
    """Write scribbles as the canonical RGBA overlay (red fg, blue bg)."""
    arr = np.zeros((height, width, 4), dtype=np.uint8)
    for (r, c) in scribbles.fg_pixels:
        arr[r, c] = _FG_RGBA
    for (r, c) in scribbles.bg_pixels:
        arr[r, c] = _BG_RGBA
    _PILImage.fromarray(arr, mode="RGBA").save(path, format="PNG")


def render_overlay(image: Image, mask: Mask, alpha: float) -> Image:
    """Foreground verbatim; background blended toward white.

    Per channel: out = alpha*255 + (1-alpha)*in, rounded half-up, so the
    result is byte-deterministic.
    """
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image {image.height}x{image.width} vs mask {mask.height}x{mask.width}"
        )
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    out = image.pixels.copy()
    bg = ~mask.bits
    blended = np.floor(alpha * 255.0 + (1.0 - alpha) * image.pixels[bg].astype(np.float64) + 0.5)
    out[bg] = blended.astype(np.uint8)
    return Image(out)
