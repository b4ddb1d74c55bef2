import json

import pytest

from src.imaging import load_image
from src.pipeline.cli import EXIT_FAILED, EXIT_OK, EXIT_PARTIAL, build_parser, main

FAST = [
    "--matching-rotation-angles", "0,90,180,270",
    "--bspline-max-iterations", "10",
    "--workers", "1"
]

SYNTH = [
    "--synth-num-slices", "3",
    "--synth-width", "96",
    "--synth-height", "96",
    "--synth-seed", "7",
    "--synth-texture-scale", "4",
    "--synth-max-rotation-deg", "3",
    "--synth-max-translation", "4",
    "--synth-deform-amplitude", "3",
    "--synth-deform-spacing", "32",
    "--synth-landmark-grid", "4"
]


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert main(["synth", str(out)] + SYNTH) == EXIT_OK
    return out


def test_parser_accepts_both_key_spellings():
    parser = build_parser()
    args = parser.parse_args(["synth", "out", "--ransac-seed", "3"])
    assert args.ransac_seed == "3"
    args = parser.parse_args(["synth", "out", "--ransac_seed", "4", "--reference", "middle"])
    assert args.ransac_seed == "4"
    assert args.pipeline_reference == "middle"


def test_synth_writes_sequence(synth_dir):
    assert sorted(p.name for p in synth_dir.glob("*.png")) == ["slice_000.png", "slice_001.png", "slice_002.png"]
    assert load_image(synth_dir / "slice_000.png").dims == (96, 96)
    manifest = json.loads((synth_dir / "synth_manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["num_slices"] == 3


def test_unknown_config_key_fails(tmp_path):
    config = tmp_path / "bad.conf"
    config.write_text("ransac_colour=blue\n", encoding="utf-8")
    assert main(["synth", str(tmp_path / "out"), "--config", str(config)]) == EXIT_FAILED


def test_invalid_settings_fail(tmp_path):
    assert main(["synth", str(tmp_path / "out"), "--matching-rotation-angles", "90,180"]) == EXIT_FAILED


def test_missing_input_dir_fails(tmp_path):
    assert main(["register-sequence", str(tmp_path / "absent"), "--out", str(tmp_path / "run")] + FAST) == EXIT_FAILED


def test_register_pair_and_warp(tmp_path, synth_dir):
    out = tmp_path / "pair"
    code = main(["register-pair", str(synth_dir / "slice_000.png"), str(synth_dir / "slice_001.png"),
                 "--out", str(out)] + FAST)
    assert code == EXIT_OK
    transform = out / "transforms" / "slice_000__slice_001.json"
    assert transform.is_file()
    assert (out / "registered.png").is_file()

    warped = tmp_path / "warped.png"
    assert main(["warp", str(synth_dir / "slice_001.png"), str(transform), "--out", str(warped)]) == EXIT_OK
    assert load_image(warped).dims == (96, 96)


@pytest.mark.slow
def test_register_then_evaluate(tmp_path, synth_dir):
    run = tmp_path / "run"
    code = main(["register-sequence", str(synth_dir), "--out", str(run)] + FAST)
    assert code in (EXIT_OK, EXIT_PARTIAL)
    assert (run / "manifest.json").is_file()
    assert (run / "volume.mhd").is_file()

    code = main(["evaluate", str(run), str(synth_dir / "landmarks"), "--plot"])
    assert code in (EXIT_OK, EXIT_PARTIAL)
    report = json.loads((run / "metrics.json").read_text(encoding="utf-8"))
    assert report["aggregates"]["AMrTRE"] >= 0.0
    assert (run / "metrics.png").is_file()
    assert (run / "landmarks" / "slice_000__slice_001.png").is_file()
