"""Image/mask/scribble codecs and overlay rendering."""

from __future__ import annotations

import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scribbleseg.errors import ConflictError, DecodeError, DimensionMismatch
from scribbleseg.imgio import (
    Image,
    Mask,
    Scribbles,
    load_image,
    load_mask,
    load_scribbles,
    render_overlay,
    save_mask,
    save_scribbles,
)


def reference_png_rgb(pixels: np.ndarray) -> bytes:
    """Minimal hand-rolled PNG encoder (8-bit RGB, no filtering).

    Written from the container format directly so decode tests do not lean
    on the same codec library the loader uses.
    """
    h, w, _ = pixels.shape

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)  # 8-bit truecolor
    raw = b"".join(b"\x00" + pixels[r].tobytes() for r in range(h))
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def write_ppm(path, pixels: np.ndarray) -> None:
    h, w, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(pixels.tobytes())


class TestLoadImage:
    def test_ppm_identity_decode(self, tmp_path):
        px = np.zeros((2, 2, 3), np.uint8)
        write_ppm(tmp_path / "z.ppm", px)
        img = load_image(tmp_path / "z.ppm")
        assert img.width == 2 and img.height == 2
        assert (img.pixels == 0).all()

    def test_ppm_with_comment_and_values(self, tmp_path):
        px = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
        with open(tmp_path / "c.ppm", "wb") as fh:
            fh.write(b"P6\n# comment line\n3 2\n255\n" + px.tobytes())
        assert (load_image(tmp_path / "c.ppm").pixels == px).all()

    def test_png_fixture_byte_identical(self, tmp_path):
        rng = np.random.default_rng(42)
        raw = rng.integers(0, 256, (4, 4, 3), dtype=np.uint8)
        path = tmp_path / "fix.png"
        path.write_bytes(reference_png_rgb(raw))
        img = load_image(path)
        assert img.pixels.tobytes() == raw.tobytes()

    def test_text_file_decode_error(self, tmp_path):
        path = tmp_path / "not_an_image.txt"
        path.write_text("hello world")
        with pytest.raises(DecodeError):
            load_image(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_grayscale_png_replicated(self, tmp_path):
        from PIL import Image as PILImage

        arr = np.array([[0, 128], [255, 7]], np.uint8)
        PILImage.fromarray(arr, mode="L").save(tmp_path / "g.png")
        img = load_image(tmp_path / "g.png")
        assert (img.pixels[:, :, 0] == arr).all()
        assert (img.pixels[:, :, 1] == arr).all()


class TestMaskRoundTrip:
    def test_all_foreground(self, tmp_path):
        save_mask(Mask(np.ones((3, 3), bool)), tmp_path / "m.png")
        from PIL import Image as PILImage

        arr = np.asarray(PILImage.open(tmp_path / "m.png"))
        assert (arr == 255).all()

    def test_all_background(self, tmp_path):
        save_mask(Mask(np.zeros((3, 3), bool)), tmp_path / "m.png")
        from PIL import Image as PILImage

        arr = np.asarray(PILImage.open(tmp_path / "m.png"))
        assert (arr == 0).all()

    def test_checkerboard_round_trip(self, tmp_path):
        bits = np.indices((2, 2)).sum(axis=0) % 2 == 0
        save_mask(Mask(bits), tmp_path / "m.png")
        assert (load_mask(tmp_path / "m.png").bits == bits).all()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31 - 1))
    def test_round_trip_random(self, h, w, seed):
        import tempfile
        from pathlib import Path

        bits = np.random.default_rng(seed).random((h, w)) < 0.5
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "m.png"
            save_mask(Mask(bits), path)
            assert (load_mask(path).bits == bits).all()


class TestScribbles:
    def test_rgba_overlay_counts(self, tmp_path):
        sc = Scribbles(
            fg_pixels={(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)},
            bg_pixels={(0, 5), (1, 5), (2, 5), (3, 5), (4, 5), (5, 5), (6, 5)},
        )
        save_scribbles(sc, 8, 8, tmp_path / "s.png")
        loaded = load_scribbles(tmp_path / "s.png")
        assert len(loaded.fg_pixels) == 5
        assert len(loaded.bg_pixels) == 7
        assert loaded.fg_pixels == sc.fg_pixels

    def test_two_masks_conflict(self, tmp_path):
        fg = np.zeros((5, 5), bool)
        bg = np.zeros((5, 5), bool)
        fg[3, 3] = True
        bg[3, 3] = True
        save_mask(Mask(fg), tmp_path / "fg.png")
        save_mask(Mask(bg), tmp_path / "bg.png")
        with pytest.raises(ConflictError) as err:
            load_scribbles((tmp_path / "fg.png", tmp_path / "bg.png"))
        assert err.value.pixel == (3, 3)

    def test_two_masks_disjoint(self, tmp_path):
        fg = np.zeros((5, 5), bool)
        bg = np.zeros((5, 5), bool)
        fg[0, 0] = True
        bg[4, 4] = True
        save_mask(Mask(fg), tmp_path / "fg.png")
        save_mask(Mask(bg), tmp_path / "bg.png")
        sc = load_scribbles((tmp_path / "fg.png", tmp_path / "bg.png"))
        assert sc.fg_pixels == {(0, 0)}
        assert sc.bg_pixels == {(4, 4)}

    def test_empty_overlay_accepted(self, tmp_path):
        save_scribbles(Scribbles(), 4, 4, tmp_path / "s.png")
        sc = load_scribbles(tmp_path / "s.png")
        assert not sc.fg_pixels and not sc.bg_pixels

    def test_constructor_rejects_overlap(self):
        with pytest.raises(ConflictError):
            Scribbles(fg_pixels={(1, 1)}, bg_pixels={(1, 1)})

    def test_union_conflict(self):
        a = Scribbles(fg_pixels={(1, 1)})
        b = Scribbles(bg_pixels={(1, 1)})
        with pytest.raises(ConflictError):
            a.union(b)


class TestRenderOverlay:
    def _img(self, value=100):
        return Image(np.full((4, 4, 3), value, np.uint8))

    def test_alpha_zero_identity(self):
        img = self._img()
        out = render_overlay(img, Mask(np.zeros((4, 4), bool)), alpha=0.0)
        assert (out.pixels == img.pixels).all()

    def test_alpha_one_all_background_white(self):
        out = render_overlay(self._img(), Mask(np.zeros((4, 4), bool)), alpha=1.0)
        assert (out.pixels == 255).all()

    def test_half_alpha_rounding(self):
        # 0.5*255 + 0.5*100 = 177.5, half-up -> 178
        out = render_overlay(self._img(100), Mask(np.zeros((4, 4), bool)), alpha=0.5)
        assert (out.pixels == 178).all()

    def test_foreground_untouched_any_alpha(self):
        rng = np.random.default_rng(3)
        img = Image(rng.integers(0, 256, (6, 5, 3), dtype=np.uint8))
        bits = rng.random((6, 5)) < 0.5
        for alpha in (0.0, 0.3, 0.77, 1.0):
            out = render_overlay(img, Mask(bits), alpha)
            assert (out.pixels[bits] == img.pixels[bits]).all()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            render_overlay(self._img(), Mask(np.zeros((3, 3), bool)), alpha=0.5)
