"""Miss (leakage) and misrecognition rates over a ground-truth set."""
from dataclasses import dataclass, field

ENVIRONMENTS = ("night", "snowy", "shelter", "rainy")
DEFAULT_IOU = 0.3


def box_area(box):
    x0, y0, x1, y1 = box
    return max(0, x1 - x0 + 1) * max(0, y1 - y0 + 1)


def iou(a, b):
    """Intersection over union of two inclusive pixel boxes."""
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = box_area((ix0, iy0, ix1, iy1)) if ix1 >= ix0 and iy1 >= iy0 else 0
    if inter == 0:
        return 0.0
    return inter / (box_area(a) + box_area(b) - inter)


def _bbox_of(item):
    region = item[0]
    return tuple(region.bbox) if hasattr(region, "bbox") else tuple(region)


def match_detections(predicted, truth, iou_threshold=DEFAULT_IOU):
    """Greedy one-to-one matching by descending IoU.

    ``predicted`` holds ``(region or bbox, class)`` pairs and ``truth`` holds
    ``(bbox, class)`` pairs. Returns ``(truth index, predicted index, iou)``
    triples; equal IoUs are resolved by truth index, then predicted index.
    """
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must be in (0, 1]")
    pairs = []
    for ti, t in enumerate(truth):
        tb = _bbox_of(t)
        for pi, p in enumerate(predicted):
            v = iou(tb, _bbox_of(p))
            if v >= iou_threshold:
                pairs.append((-v, ti, pi))
    pairs.sort()
    used_t, used_p, matches = set(), set(), []
    for neg, ti, pi in pairs:
        if ti in used_t or pi in used_p:
            continue
        used_t.add(ti)
        used_p.add(pi)
        matches.append((ti, pi, -neg))
    return matches


def _rate(count, actual):
    if actual < 1:
        raise ValueError("actual target count must be >= 1")
    if not 0 <= count <= actual:
        raise ValueError(f"count {count} outside [0, {actual}]")
    return 100.0 * count / actual


def miss_rate(missed, actual):
    """Percentage of actual targets that were not recognized."""
    return _rate(missed, actual)


def misrecognition_rate(misrecognized, actual):
    """Percentage of actual targets that were assigned the wrong class."""
    return _rate(misrecognized, actual)


@dataclass
class RateCell:
    actual: int = 0
    missed: int = 0
    misrecognized: int = 0

    @property
    def matched(self):
        return self.actual - self.missed

    @property
    def miss(self):
        return miss_rate(self.missed, self.actual) if self.actual else None

    @property
    def misrecognition(self):
        return misrecognition_rate(self.misrecognized, self.actual) if self.actual else None

    def as_dict(self):
        return {
            "actual": self.actual,
            "missed": self.missed,
            "misrecognized": self.misrecognized,
            "miss_rate": self.miss,
            "misrecognition_rate": self.misrecognition,
        }


@dataclass
class EvalReport:
    environments: dict
    overall: RateCell
    pairs: list = field(default_factory=list)

    def as_dict(self):
        return {
            "environments": {k: v.as_dict() for k, v in self.environments.items()},
            "overall": self.overall.as_dict(),
            "pairs": self.pairs,
        }

    def table(self):
        """Aligned text table, one column per environment plus overall."""
        cols = list(ENVIRONMENTS) + ["overall"]
        cells = [self.environments[e] for e in ENVIRONMENTS] + [self.overall]

        def fmt(v):
            return "-" if v is None else f"{v:.2f}"

        rows = [
            ["Rate (%)"] + [c.capitalize() for c in cols],
            ["Missed recognition"] + [fmt(c.miss) for c in cells],
            ["Misrecognition"] + [fmt(c.misrecognition) for c in cells],
            ["Actual targets"] + [str(c.actual) for c in cells],
        ]
        widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
        lines = ["  ".join(v.ljust(w) if k == 0 else v.rjust(w)
                           for k, (v, w) in enumerate(zip(r, widths))) for r in rows]
        return "\n".join(lines)


def evaluate_dataset(manifest, predictions, iou_threshold=DEFAULT_IOU):
    """Score per-image detections against a manifest.

    Parameters
    ----------
    manifest : iterable of entries with ``image_id``, ``environment`` and
        ``targets`` (each target has ``bbox`` and ``label``).
    predictions : mapping image id -> list of ``(bbox, class)``.
    """
    entries = list(manifest)
    known = {e.image_id for e in entries}
    unknown = sorted(set(predictions) - known)
    if unknown:
        raise ValueError(f"predictions for unknown image ids: {unknown}")

    envs = {e: RateCell() for e in ENVIRONMENTS}
    overall = RateCell()
    listing = []
    for entry in entries:
        if entry.environment not in envs:
            raise ValueError(f"unknown environment {entry.environment!r}")
        truth = [(t.bbox, t.label) for t in entry.targets]
        preds = list(predictions.get(entry.image_id, []))
        matches = match_detections(preds, truth, iou_threshold)
        wrong = sum(1 for ti, pi, _ in matches if preds[pi][1] != truth[ti][1])
        for cell in (envs[entry.environment], overall):
            cell.actual += len(truth)
            cell.missed += len(truth) - len(matches)
            cell.misrecognized += wrong
        for ti, pi, v in matches:
            listing.append({
                "image": entry.image_id,
                "truth": ti,
                "prediction": pi,
                "iou": v,
                "truth_class": truth[ti][1],
                "predicted_class": preds[pi][1],
            })
    return EvalReport(envs, overall, listing)
