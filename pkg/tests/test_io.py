import json

import numpy as np
import pytest

from irtarget.config import ConfigError, PipelineConfig, dump_config, load_config, parse_config
from irtarget.manifest import (
    ManifestError,
    parse_manifest,
    sample_counts,
    sample_table,
    write_manifest,
)
from irtarget.netpbm import ImageFormatError, decode, encode, read_image, write_image
from irtarget.pseudocolor import Palette


# ---- netpbm --------------------------------------------------------------

@pytest.mark.parametrize("shape", [(3, 5), (4, 2, 3)])
def test_netpbm_round_trip(rng, tmp_path, shape):
    img = rng.integers(0, 256, shape).astype(np.uint8)
    path = tmp_path / "x.pnm"
    write_image(path, img)
    back = read_image(path)
    assert back.dtype == np.uint8
    np.testing.assert_array_equal(back, img)


def test_header_layout():
    assert encode(np.zeros((2, 3), np.uint8)).startswith(b"P5\n3 2\n255\n")
    assert encode(np.zeros((2, 3, 3), np.uint8)).startswith(b"P6\n3 2\n255\n")


def test_header_comments_allowed():
    data = b"P5\n# made by hand\n2 1 # width height\n255\n\x07\x09"
    assert decode(data).tolist() == [[7, 9]]


@pytest.mark.parametrize("data, message", [
    (b"P2\n1 1\n255\n0", "not a binary"),
    (b"P5\n1 1\n65535\n\x00\x00", "maxval"),
    (b"P6\n2 2\n255\n\x00\x00", "truncated"),
    (b"P5\n2", "header"),
])
def test_bad_files_rejected(data, message):
    with pytest.raises(ImageFormatError, match=message):
        decode(data)


# ---- config --------------------------------------------------------------

def test_empty_config_is_default():
    assert parse_config("") == PipelineConfig()
    assert load_config(None) == PipelineConfig()


def test_config_values_parsed():
    cfg = parse_config("""
# transfer
e = 1
neighbors = 4
gamut_fit = no
palette = #000000, #ffffff
threshold_mode = fixed
threshold = 180.5
svm_c = 10
""")
    assert (cfg.e, cfg.neighbors, cfg.gamut_fit) == (1, 4, False)
    assert cfg.palette == Palette(((0, 0, 0), (255, 255, 255)))
    assert (cfg.threshold_mode, cfg.threshold, cfg.svm_c) == ("fixed", 180.5, 10.0)
    assert cfg.transfer_params.n_neighbors == 4


def test_config_dump_round_trip():
    cfg = parse_config("e = 3\npalette = #102030,#405060,#708090\nseed = 9\n")
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text", [
    "colour = red", "e = -1", "neighbors = zero", "threshold_mode = otsu",
    "iou_threshold = 0", "gamut_fit = maybe", "palette = #fff",
])
def test_bad_config_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("seed = 4\n")
    assert load_config(path).seed == 4
    assert load_config(path, seed=11, workers=None).seed == 11


# ---- manifest ------------------------------------------------------------

def write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def touch_images(root, names):
    for n in names:
        write_image(root / n, np.zeros((4, 4), np.uint8))


def test_empty_manifest(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("")
    assert len(parse_manifest(path)) == 0


def test_unknown_environment_names_line_and_set(tmp_path):
    touch_images(tmp_path, ["a.pgm", "b.pgm"])
    path = tmp_path / "m.jsonl"
    write_lines(path, [
        {"id": "a", "image": "a.pgm", "environment": "night", "split": "test", "targets": []},
        {"id": "b", "image": "b.pgm", "environment": "foggy", "split": "test", "targets": []},
    ])
    with pytest.raises(ManifestError) as exc:
        parse_manifest(path)
    msg = str(exc.value)
    assert "line 2" in msg and "foggy" in msg
    assert all(env in msg for env in ("night", "snowy", "shelter", "rainy"))


@pytest.mark.parametrize("record, message", [
    ({"id": "a", "image": "a.pgm", "environment": "night", "split": "dev"}, "split"),
    ({"id": "a", "image": "a.pgm", "environment": "night", "split": "test",
      "targets": [{"class": "p", "bbox": [3, 3, 1, 1]}]}, "bbox"),
    ({"id": "a", "image": "missing.pgm", "environment": "night", "split": "test"}, "not found"),
    ({"image": "a.pgm", "environment": "night", "split": "test"}, "id"),
])
def test_invalid_records(tmp_path, record, message):
    touch_images(tmp_path, ["a.pgm"])
    path = tmp_path / "m.jsonl"
    write_lines(path, [record])
    with pytest.raises(ManifestError, match=message):
        parse_manifest(path)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("\n{oops\n")
    with pytest.raises(ManifestError, match="line 2"):
        parse_manifest(path)


def test_duplicate_ids_rejected(tmp_path):
    touch_images(tmp_path, ["a.pgm"])
    path = tmp_path / "m.jsonl"
    rec = {"id": "a", "image": "a.pgm", "environment": "night", "split": "test"}
    write_lines(path, [rec, rec])
    with pytest.raises(ManifestError, match="duplicate"):
        parse_manifest(path)


def rainy_personnel_manifest(tmp_path):
    records = []
    for split, n in (("training", 20), ("test", 18)):
        for k in range(n):
            name = f"{split}{k}.pgm"
            records.append({"id": f"{split}{k}", "image": name, "environment": "rainy",
                            "split": split,
                            "targets": [{"class": "personnel", "bbox": [0, 0, 1, 2]}]})
    touch_images(tmp_path, [r["image"] for r in records])
    path = tmp_path / "m.jsonl"
    write_lines(path, records)
    return path


def test_sample_counts_follow_table_layout(tmp_path):
    manifest = parse_manifest(rainy_personnel_manifest(tmp_path))
    counts = sample_counts(manifest)
    assert counts["personnel", "rainy", "training"] == 20
    assert counts["personnel", "rainy", "test"] == 18
    table = sample_table(manifest)
    assert "rainy/training" in table and "20" in table and "18" in table


def test_canonical_round_trip(tmp_path):
    path = rainy_personnel_manifest(tmp_path)
    manifest = parse_manifest(path)
    first = tmp_path / "first.jsonl"
    write_manifest(manifest, first)
    again = tmp_path / "again.jsonl"
    write_manifest(parse_manifest(first), again)
    assert first.read_bytes() == again.read_bytes()
