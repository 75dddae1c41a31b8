import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irtarget.evaluation import (
    ENVIRONMENTS,
    evaluate_dataset,
    iou,
    match_detections,
    misrecognition_rate,
    miss_rate,
)
from irtarget.manifest import ManifestEntry, Target


def entry(image_id, env, targets):
    return ManifestEntry(image_id, f"{image_id}.pgm", env, "test",
                         tuple(Target(b, c) for b, c in targets))


def test_identical_boxes_match():
    assert match_detections([((2, 2, 5, 5), "a")], [((2, 2, 5, 5), "a")]) == [(0, 0, 1.0)]


def test_disjoint_boxes_do_not_match():
    assert match_detections([((0, 0, 3, 3), "a")], [((10, 10, 12, 12), "a")]) == []


def test_greedy_prefers_higher_iou():
    truth = [((0, 0, 9, 9), "a")]
    preds = [((0, 6, 9, 9), "a"), ((0, 0, 9, 5), "a")]  # IoU 0.4 and 0.6
    assert iou(truth[0][0], preds[0][0]) == pytest.approx(0.4)
    assert iou(truth[0][0], preds[1][0]) == pytest.approx(0.6)
    matches = match_detections(preds, truth, 0.3)
    assert [(t, p) for t, p, _ in matches] == [(0, 1)]


def test_iou_threshold_validated():
    with pytest.raises(ValueError):
        match_detections([], [], 0.0)


@pytest.mark.parametrize("fn, count, actual, expected", [
    (miss_rate, 2, 100, 2.0),
    (miss_rate, 0, 7, 0.0),
    (miss_rate, 7, 7, 100.0),
    (misrecognition_rate, 3, 100, 3.0),
    (misrecognition_rate, 0, 9, 0.0),
    (misrecognition_rate, 1, 4, 25.0),
])
def test_rates(fn, count, actual, expected):
    assert fn(count, actual) == expected


@pytest.mark.parametrize("count, actual", [(0, 0), (5, 4), (-1, 3)])
def test_rates_reject_bad_counts(count, actual):
    with pytest.raises(ValueError):
        miss_rate(count, actual)


def corpus():
    boxes = [(10 * k, 0, 10 * k + 5, 5) for k in range(10)]
    return [entry(f"i{k}", ENVIRONMENTS[k % 4], [(b, "p" if k % 2 else "e")])
            for k, b in enumerate(boxes)], boxes


def test_perfect_predictions():
    entries, _ = corpus()
    preds = {e.image_id: [(t.bbox, t.label) for t in e.targets] for e in entries}
    report = evaluate_dataset(entries, preds)
    for cell in list(report.environments.values()) + [report.overall]:
        assert cell.miss == 0 and cell.misrecognition == 0


def test_empty_predictions():
    entries, _ = corpus()
    report = evaluate_dataset(entries, {})
    assert report.overall.miss == 100.0 and report.overall.misrecognition == 0.0


def test_one_miss_one_wrong_class():
    entries, _ = corpus()
    preds = {e.image_id: [(t.bbox, t.label) for t in e.targets] for e in entries[1:]}
    first = entries[1]
    preds[first.image_id] = [(first.targets[0].bbox, "wrong")]
    report = evaluate_dataset(entries, preds)
    assert report.overall.actual == 10
    assert report.overall.miss == 10.0
    assert report.overall.misrecognition == 10.0


def test_unknown_image_rejected():
    entries, _ = corpus()
    with pytest.raises(ValueError, match="unknown image"):
        evaluate_dataset(entries, {"nope": []})


def test_unknown_environment_rejected():
    bad = [ManifestEntry("a", "a.pgm", "foggy", "test", ())]
    with pytest.raises(ValueError, match="environment"):
        evaluate_dataset(bad, {})


def test_table_layout():
    entries, _ = corpus()
    table = evaluate_dataset(entries, {}).table()
    header = table.splitlines()[0].split()
    assert header == ["Rate", "(%)", "Night", "Snowy", "Shelter", "Rainy", "Overall"]
    assert "100.00" in table


boxes_st = st.tuples(st.integers(0, 20), st.integers(0, 20), st.integers(1, 8), st.integers(1, 8)) \
    .map(lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))
labelled = st.lists(st.tuples(boxes_st, st.sampled_from("ab")), max_size=6)


@settings(max_examples=100, deadline=None)
@given(labelled, labelled)
def test_matching_is_one_to_one(preds, truth):
    matches = match_detections(preds, truth, 0.2)
    assert len({t for t, _, _ in matches}) == len(matches)
    assert len({p for _, p, _ in matches}) == len(matches)
    assert all(v >= 0.2 for _, _, v in matches)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(ENVIRONMENTS), labelled, labelled), min_size=1,
                max_size=6), st.randoms())
def test_report_laws(images, shuffler):
    entries = [entry(f"i{k}", env, truth) for k, (env, truth, _) in enumerate(images)]
    preds = {f"i{k}": p for k, (_, _, p) in enumerate(images)}
    report = evaluate_dataset(entries, preds)

    for name in ("actual", "missed", "misrecognized"):
        assert sum(getattr(c, name) for c in report.environments.values()) == \
            getattr(report.overall, name)
    o = report.overall
    if o.actual:
        assert f"{o.miss:.2f}" == f"{100 * o.missed / o.actual:.2f}"
        assert 0 <= o.miss <= 100 and 0 <= o.misrecognition <= 100
        assert o.misrecognized <= o.matched

    shuffled = list(entries)
    shuffler.shuffle(shuffled)
    again = evaluate_dataset(shuffled, preds)
    assert again.overall == report.overall
    assert again.environments == report.environments
