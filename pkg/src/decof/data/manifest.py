"""Dataset manifests: (real video, prompt, generated videos) groups with
prompt-disjoint train/val/test splits.

On-disk form is UTF-8 JSON::

    {"generators": ["modelscope", ...],
     "entries": [{"video_id": "...", "frames_dir": "...", "label": "real",
                  "generator": null, "prompt_id": "p1", "split": "train"}, ...]}

``frames_dir`` may be relative to the manifest's directory.
"""
import hashlib
import json
import logging
import os
from collections import defaultdict
from dataclasses import asdict, dataclass, field

from ..errors import ValidationError

log = logging.getLogger(__name__)

LABELS = {"real": 0, "generated": 1}
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    frames_dir: str
    label: str
    generator: str = None
    prompt_id: str = ""
    split: str = "train"

    @property
    def target(self):
        return LABELS[self.label]


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    generators: list = field(default_factory=list)
    digest: str = ""

    def split(self, name):
        return [e for e in self.entries if e.split == name]

    def by_id(self):
        return {e.video_id: e for e in self.entries}

    def to_json(self):
        return {"generators": list(self.generators), "entries": [asdict(e) for e in self.entries]}


def prompt_leaks(entries):
    """Map of prompt_id -> sorted splits, for prompts seen in more than one split."""
    seen = defaultdict(set)
    for e in entries:
        seen[e.prompt_id].add(e.split)
    return {p: sorted(s) for p, s in seen.items() if len(s) > 1}


def validate_entries(entries, generators=(), check_frames=True):
    problems = []
    offenders = []

    counts = defaultdict(int)
    for e in entries:
        counts[e.video_id] += 1
    dups = sorted(v for v, n in counts.items() if n > 1)
    if dups:
        problems.append(f"duplicate video_id: {', '.join(dups)}")
        offenders += dups

    bad = sorted(e.video_id for e in entries if e.label not in LABELS)
    if bad:
        problems.append(f"label must be real|generated: {', '.join(bad)}")
        offenders += bad
    bad = sorted(e.video_id for e in entries if e.split not in SPLITS)
    if bad:
        problems.append(f"split must be train|val|test: {', '.join(bad)}")
        offenders += bad
    bad = sorted(e.video_id for e in entries if e.label == "generated" and not e.generator)
    if bad:
        problems.append(f"generated entries need a generator: {', '.join(bad)}")
        offenders += bad
    if generators:
        bad = sorted(e.video_id for e in entries if e.generator and e.generator not in generators)
        if bad:
            problems.append(f"generator not listed in manifest: {', '.join(bad)}")
            offenders += bad

    leaks = prompt_leaks(entries)
    if leaks:
        desc = ", ".join(f"{p} ({'/'.join(s)})" for p, s in sorted(leaks.items()))
        problems.append(f"prompt_id in more than one split: {desc}")
        offenders += sorted(leaks)

    if check_frames:
        missing = sorted(e.video_id for e in entries if not os.path.isdir(e.frames_dir))
        if missing:
            problems.append(f"frames_dir missing for: {', '.join(missing)}")
            offenders += missing

    if problems:
        raise ValidationError("invalid manifest: " + "; ".join(problems), offenders)


def manifest_from_json(raw, base_dir=".", check_frames=True, digest=""):
    try:
        generators = list(raw.get("generators", []))
        entries = []
        for item in raw["entries"]:
            item = dict(item)
            frames_dir = item.get("frames_dir", "")
            if frames_dir and not os.path.isabs(frames_dir):
                item["frames_dir"] = os.path.normpath(os.path.join(base_dir, frames_dir))
            entries.append(ManifestEntry(**item))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"manifest does not match schema: {exc}") from None
    if not generators:
        generators = sorted({e.generator for e in entries if e.generator})
    validate_entries(entries, generators, check_frames)
    if not entries:
        log.warning("manifest has no entries; dataset is empty")
    return DatasetManifest(entries, generators, digest)


def load_manifest(path, check_frames=True):
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        raw = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: not UTF-8 JSON ({exc})") from None
    digest = hashlib.sha256(blob).hexdigest()
    return manifest_from_json(raw, os.path.dirname(os.path.abspath(path)), check_frames, digest)


def write_manifest(manifest, path, relative_to=None):
    """Write JSON; frames dirs are made relative to ``relative_to`` if given."""
    data = manifest.to_json()
    if relative_to:
        for e in data["entries"]:
            if e["frames_dir"]:
                e["frames_dir"] = os.path.relpath(e["frames_dir"], relative_to)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
