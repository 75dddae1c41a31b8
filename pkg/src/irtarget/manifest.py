"""JSON-lines dataset manifests.

One record per line::

    {"id": "s0001", "image": "img/s0001.pgm", "template": "template.ppm",
     "environment": "night", "split": "training",
     "targets": [{"class": "personnel", "bbox": [x0, y0, x1, y1]}]}

``template`` is optional. Paths are relative to the manifest's directory.
"""
import json
import os
from collections import Counter
from dataclasses import dataclass, field

from .evaluation import ENVIRONMENTS

SPLITS = ("training", "test")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Target:
    bbox: tuple
    label: str


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image: str
    environment: str
    split: str
    targets: tuple = ()
    template: str = None

    def to_record(self):
        rec = {"id": self.image_id, "image": self.image}
        if self.template is not None:
            rec["template"] = self.template
        rec["environment"] = self.environment
        rec["split"] = self.split
        rec["targets"] = [{"class": t.label, "bbox": list(t.bbox)} for t in self.targets]
        return rec


@dataclass
class Manifest:
    entries: list = field(default_factory=list)
    root: str = "."

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def path(self, relative):
        return relative if os.path.isabs(relative) else os.path.join(self.root, relative)

    def split(self, name):
        return [e for e in self.entries if e.split == name]

    def dumps(self):
        return "".join(json.dumps(e.to_record()) + "\n" for e in self.entries)


def _entry_from_record(rec):
    if not isinstance(rec, dict):
        raise ValueError("record must be a JSON object")
    extra = set(rec) - {"id", "image", "template", "environment", "split", "targets"}
    if extra:
        raise ValueError(f"unknown fields {sorted(extra)}")
    for key in ("id", "image", "environment", "split"):
        if not isinstance(rec.get(key), str) or not rec[key]:
            raise ValueError(f"missing or non-string field {key!r}")
    if rec["environment"] not in ENVIRONMENTS:
        raise ValueError(
            f"unknown environment {rec['environment']!r}; expected one of {', '.join(ENVIRONMENTS)}")
    if rec["split"] not in SPLITS:
        raise ValueError(f"unknown split {rec['split']!r}; expected one of {', '.join(SPLITS)}")
    template = rec.get("template")
    if template is not None and not isinstance(template, str):
        raise ValueError("template must be a string path")
    targets = []
    for t in rec.get("targets", []):
        if not isinstance(t, dict) or set(t) != {"class", "bbox"}:
            raise ValueError("each target needs exactly 'class' and 'bbox'")
        box = t["bbox"]
        if (not isinstance(box, list) or len(box) != 4
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in box)):
            raise ValueError("bbox must be four integers")
        x0, y0, x1, y1 = box
        if x0 < 0 or y0 < 0 or x1 < x0 or y1 < y0:
            raise ValueError(f"invalid bbox {box}")
        if not isinstance(t["class"], str) or not t["class"]:
            raise ValueError("target class must be a non-empty string")
        targets.append(Target(tuple(box), t["class"]))
    return ManifestEntry(rec["id"], rec["image"], rec["environment"], rec["split"],
                         tuple(targets), template)


def parse_manifest_text(text, root=".", check_files=True):
    manifest = Manifest([], root)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            entry = _entry_from_record(json.loads(line))
        except (json.JSONDecodeError, ValueError) as exc:
            raise ManifestError(f"line {lineno}: {exc}") from exc
        if entry.image_id in seen:
            raise ManifestError(f"line {lineno}: duplicate image id {entry.image_id!r}")
        seen.add(entry.image_id)
        if check_files:
            for rel in (entry.image, entry.template):
                if rel is not None and not os.path.isfile(manifest.path(rel)):
                    raise ManifestError(f"line {lineno}: file not found: {rel}")
        manifest.entries.append(entry)
    return manifest


def parse_manifest(path, check_files=True):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_manifest_text(text, os.path.dirname(os.path.abspath(path)), check_files)


def write_manifest(manifest, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.dumps())


def sample_counts(manifest):
    """Images per (class, environment, split); an image counts once per class it shows."""
    counts = Counter()
    for e in manifest:
        for label in {t.label for t in e.targets}:
            counts[label, e.environment, e.split] += 1
    return counts


def sample_table(manifest):
    """Text table of image counts laid out like the training/test sample table."""
    counts = sample_counts(manifest)
    classes = sorted({k[0] for k in counts})
    header = ["Sample type"] + [f"{env}/{s}" for env in ENVIRONMENTS for s in SPLITS]
    rows = [header]
    for c in classes:
        rows.append([c] + [str(counts[c, env, s]) for env in ENVIRONMENTS for s in SPLITS])
    rows.append(["Total"] + [str(sum(counts[c, env, s] for c in classes))
                             for env in ENVIRONMENTS for s in SPLITS])
    widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
    return "\n".join("  ".join(v.ljust(w) if k == 0 else v.rjust(w)
                               for k, (v, w) in enumerate(zip(r, widths))) for r in rows)
