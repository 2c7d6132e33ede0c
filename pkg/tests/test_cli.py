"""Command-line interface."""

from __future__ import annotations

import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import noisy_two_region_pixels
from scribbleseg.cli import main
from scribbleseg.imgio import Image, Mask, Scribbles, load_mask, save_image, save_mask, save_scribbles
from test_pipeline import make_dataset


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def fixture_files(tmp_path):
    px, truth = noisy_two_region_pixels(40, 40, seed=5)
    save_image(Image(px), tmp_path / "img.png")
    sc = Scribbles(
        fg_pixels={(20, c) for c in range(28, 36)},
        bg_pixels={(20, c) for c in range(4, 12)},
    )
    save_scribbles(sc, 40, 40, tmp_path / "scribbles.png")
    save_mask(Mask(truth), tmp_path / "truth.png")
    return tmp_path


SEG_ARGS = ["--hs", "5", "--hr", "10", "--min-size", "30"]


class TestSegment:
    def test_mask_matches_expected(self, runner, fixture_files):
        out = fixture_files / "mask.png"
        result = runner.invoke(main, [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "scribbles.png"),
            "--out", str(out), *SEG_ARGS,
        ])
        assert result.exit_code == 0, result.output
        assert "segments:" in result.output and "removed edge:" in result.output
        produced = load_mask(out)
        truth = load_mask(fixture_files / "truth.png")
        assert (produced.bits == truth.bits).all()

    def test_overlay_written(self, runner, fixture_files):
        result = runner.invoke(main, [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "scribbles.png"),
            "--out", str(fixture_files / "m.png"),
            "--overlay", str(fixture_files / "ov.png"), *SEG_ARGS,
        ])
        assert result.exit_code == 0
        assert (fixture_files / "ov.png").exists()

    def test_missing_scribbles_nonzero_exit(self, runner, fixture_files):
        result = runner.invoke(main, [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "missing.png"),
            "--out", str(fixture_files / "m.png"),
        ])
        assert result.exit_code != 0
        assert "missing.png" in result.output

    def test_bha_measure_runs(self, runner, fixture_files):
        out = fixture_files / "mask_bha.png"
        result = runner.invoke(main, [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "scribbles.png"),
            "--out", str(out), "--measure", "bha", *SEG_ARGS,
        ])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_byte_identical_across_runs(self, runner, fixture_files):
        args = [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "scribbles.png"),
            *SEG_ARGS,
        ]
        r1 = runner.invoke(main, args + ["--out", str(fixture_files / "m1.png")])
        r2 = runner.invoke(main, args + ["--out", str(fixture_files / "m2.png")])
        assert r1.exit_code == r2.exit_code == 0
        assert (fixture_files / "m1.png").read_bytes() == (fixture_files / "m2.png").read_bytes()

    def test_bbox_replaces_bg_scribbles(self, runner, tmp_path):
        px = np.zeros((40, 40, 3), np.uint8)
        px[:, 20:] = 255
        save_image(Image(px), tmp_path / "img.png")
        save_scribbles(Scribbles(fg_pixels={(20, 30)}), 40, 40, tmp_path / "sc.png")
        out = tmp_path / "mask.png"
        result = runner.invoke(main, [
            "segment", str(tmp_path / "img.png"), str(tmp_path / "sc.png"),
            "--bbox", "0", "20", "39", "39", "--out", str(out),
            "--hs", "4", "--hr", "8", "--min-size", "20",
        ])
        assert result.exit_code == 0, result.output
        produced = load_mask(out)
        assert produced.bits[:, 20:].all() and not produced.bits[:, :20].any()

    def test_slic_lowlevel_runs(self, runner, fixture_files):
        out = fixture_files / "mask_slic.png"
        result = runner.invoke(main, [
            "segment", str(fixture_files / "img.png"), str(fixture_files / "scribbles.png"),
            "--out", str(out), "--lowlevel", "slic", "--slic-k", "24",
        ])
        assert result.exit_code == 0, result.output
        assert out.exists()


class TestEval:
    def test_three_fixtures(self, runner, tmp_path):
        make_dataset(tmp_path, ["a", "b", "c"])
        report = tmp_path / "report.jsonl"
        result = runner.invoke(main, [
            "eval", str(tmp_path), "--report", str(report), *SEG_ARGS,
        ])
        assert result.exit_code == 0, result.output
        assert "jaccard" in result.output
        lines = report.read_text().strip().splitlines()
        records = [json.loads(ln) for ln in lines]
        per_image = [r for r in records if "name" in r]
        assert len(per_image) == 3
        assert all(r["jaccard"] == 1.0 for r in per_image)

    def test_bins_sweep_blocks(self, runner, tmp_path):
        make_dataset(tmp_path, ["a"])
        result = runner.invoke(main, [
            "eval", str(tmp_path), "--bins", "4,8", *SEG_ARGS,
        ])
        assert result.exit_code == 0, result.output
        assert "bins=4" in result.output and "bins=8" in result.output

    def test_bad_dir_nonzero(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["eval", str(empty)])
        assert result.exit_code != 0


class TestBench:
    def test_single_bin_count_reports_undefined(self, runner):
        result = runner.invoke(main, ["bench-similarity", "--bins", "8", "--iterations", "50"])
        assert result.exit_code == 0, result.output
        assert "undefined" in result.output

    def test_two_bin_counts_report_slopes(self, runner):
        result = runner.invoke(main, ["bench-similarity", "--bins", "8,16", "--iterations", "200"])
        assert result.exit_code == 0, result.output
        assert "slope" in result.output
