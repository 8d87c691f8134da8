"""Experiment drivers: cross-generator evaluation, perturbation sweeps and
the temporal/spatial probes.

Every driver collects results in manifest order, so reports do not depend
on how many worker threads were used.
"""
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .checkpoint import file_digest, load_checkpoint
from .data.frames import load_clip
from .data.perturb import DEFAULT_SPECS, IDENTITY, perturb_clip
from .data.preprocess import preprocess_eval
from .data.probes import replicate_index, scramble_permutation
from .encoders.backend import encode_clip
from .errors import BackendError, ConfigError, ContractError, DecofError, ProbeError
from .metrics import ScoredItem, accuracy, aggregate_frames, average_precision
from .reports import EvalReport, ReportRow
from .verifier import predict_batch

log = logging.getLogger(__name__)


class Detector:
    """A trained verifier bound to the encoder its features came from."""

    def __init__(self, params, encoder_id, checkpoint_id=""):
        self.params = params
        self.encoder_id = encoder_id
        self.checkpoint_id = checkpoint_id

    @classmethod
    def from_checkpoint(cls, path):
        params, header = load_checkpoint(path)
        return cls(params, header.get("encoder_id", ""), file_digest(path)[:16])

    def score_batch(self, sequences):
        if not sequences:
            return []
        return [float(s) for s in predict_batch(np.stack([fs.features for fs in sequences]), self.params)]


class FrameLevelDetector:
    """Wraps a per-frame scorer; the video score is the mean frame score."""

    def __init__(self, frame_scorer, encoder_id, checkpoint_id="frame-level"):
        self.frame_scorer = frame_scorer
        self.encoder_id = encoder_id
        self.checkpoint_id = checkpoint_id

    def score_batch(self, sequences):
        return [aggregate_frames(self.frame_scorer(row) for row in fs.features) for fs in sequences]


def check_encoder(model, backend_or_id):
    enc = getattr(backend_or_id, "encoder_id", backend_or_id)
    if model.encoder_id and enc and model.encoder_id != enc:
        raise ContractError(f"model was trained on encoder {model.encoder_id!r}, backend is {enc!r}")


def entry_seed(seed, video_id):
    return int(np.random.SeedSequence([seed, zlib.crc32(video_id.encode("utf-8"))]).generate_state(1)[0])


# ---------------------------------------------------------------- features

def encode_entry(entry, backend, length=8, perturbation=IDENTITY):
    """Frames folder -> sample -> perturb -> preprocess -> encode."""
    if not backend.computes:
        if perturbation.kind != "none":
            raise BackendError(
                f"perturbation {perturbation.tag} needs a computing backend, not a feature cache"
            )
        return backend.load(entry.video_id)
    clip = load_clip(entry.frames_dir, entry.video_id, length)
    clip = perturb_clip(clip, perturbation)
    return encode_clip(preprocess_eval(clip), backend)


def _ordered_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def collect_features(entries, backend, jobs=1, length=8, perturbation=IDENTITY):
    def one(entry):
        try:
            return encode_entry(entry, backend, length, perturbation)
        except DecofError as exc:
            exc.args = (f"{entry.video_id} [{perturbation.tag}]: {exc}",)
            raise

    return _ordered_map(one, list(entries), jobs)


# ----------------------------------------------------------------- scoring

def score_items(model, labelled, jobs=1, chunk=64):
    """``labelled`` is a list of ``(FeatureSequence, label, generator)``."""
    chunks = [labelled[i:i + chunk] for i in range(0, len(labelled), chunk)]
    scored = _ordered_map(lambda c: model.score_batch([fs for fs, _, _ in c]), chunks, jobs)
    flat = [s for c in scored for s in c]
    return [ScoredItem(s, int(lbl), fs.video_id, gen) for s, (fs, lbl, gen) in zip(flat, labelled)]


def metric_row(name, items):
    ap = average_precision(items) if any(it.label == 1 for it in items) else float("nan")
    return ReportRow(name, accuracy(items), ap, len(items))


def per_generator_report(items, generators, provenance):
    """One row per generator over {real items} + {that generator's fakes}."""
    reals = [it for it in items if it.label == 0]
    rows = []
    for g in generators:
        fakes = [it for it in items if it.label == 1 and it.generator == g]
        if not fakes and not reals:
            continue
        rows.append(metric_row(g, reals + fakes))
    return EvalReport(rows, provenance)


def _provenance(model, manifest, **extra):
    prov = {
        "checkpoint": getattr(model, "checkpoint_id", ""),
        "encoder_id": model.encoder_id,
        "manifest": getattr(manifest, "digest", ""),
    }
    prov.update(extra)
    return prov


def _labelled(entries, sequences):
    return [(fs, e.target, e.generator) for e, fs in zip(entries, sequences)]


def eval_sequences(model, entries, sequences, generators, provenance, jobs=1):
    items = score_items(model, _labelled(entries, sequences), jobs)
    return per_generator_report(items, generators, provenance)


def eval_cross_generator(model, manifest, backend, jobs=1, split="test", length=8):
    """Per-generator ACC/AP on ``split``; each generator is scored against
    all real videos of the split."""
    check_encoder(model, backend)
    entries = manifest.split(split)
    seqs = collect_features(entries, backend, jobs, length)
    prov = _provenance(model, manifest, split=split, perturbation=IDENTITY.to_dict(), probe=None)
    return eval_sequences(model, entries, seqs, manifest.generators, prov, jobs)


def robustness_sweep(model, manifest, backend, specs=DEFAULT_SPECS, jobs=1, split="test", length=8):
    """Unperturbed baseline followed by one report per perturbation spec."""
    check_encoder(model, backend)
    if not backend.computes and any(s.kind != "none" for s in specs):
        raise ConfigError("perturbation sweeps re-encode frames and need an external or native backend")
    entries = manifest.split(split)
    reports = []
    for spec in [IDENTITY] + [s for s in specs if s.kind != "none"]:
        spec.validate()
        seqs = collect_features(entries, backend, jobs, length, spec)
        prov = _provenance(model, manifest, split=split, perturbation=spec.to_dict(), probe=None)
        reports.append(eval_sequences(model, entries, seqs, manifest.generators, prov, jobs))
    return reports


# ------------------------------------------------------------------ probes

@dataclass
class ProbeResult:
    temporal: EvalReport
    temporal_relabeled: EvalReport
    spatial: EvalReport

    def difference(self, relabeled=False):
        t = self.temporal_relabeled if relabeled else self.temporal
        return {"acc": self.spatial.total_acc - t.total_acc, "ap": self.spatial.total_ap - t.total_ap}

    def to_dict(self):
        return {
            "temporal": self.temporal.to_dict(),
            "temporal_relabeled": self.temporal_relabeled.to_dict(),
            "spatial": self.spatial.to_dict(),
            "difference": self.difference(False),
            "difference_relabeled": self.difference(True),
        }


def scrambled(fs, seed):
    """Feature-level frame scramble. Encoders map frames independently, so
    permuting rows equals encoding the permuted clip."""
    return fs.with_features(fs.features[scramble_permutation(fs.length, entry_seed(seed, fs.video_id))])


def replicated(fs, seed):
    i = replicate_index(fs.length, entry_seed(seed, fs.video_id))
    return fs.with_features(np.repeat(fs.features[i:i + 1], fs.length, axis=0))


def probe_sequences(model, entries, sequences, generators, seed=0, provenance=None, jobs=1):
    """Score the temporal and spatial probe sets.

    temporal: scrambled reals (label real) against untouched fakes.
    temporal_relabeled: original reals (real) against their scrambled
        copies labelled generated.
    spatial: every video reduced to one replicated frame, original labels.
    """
    provenance = dict(provenance or {})
    pairs = list(zip(entries, sequences))
    temporal = [(scrambled(fs, seed) if e.target == 0 else fs, e.target, e.generator) for e, fs in pairs]
    spatial = [(replicated(fs, seed), e.target, e.generator) for e, fs in pairs]
    reals = [(e, fs) for e, fs in pairs if e.target == 0]
    relabel = [(fs, 0, None) for _, fs in reals] + [(scrambled(fs, seed), 1, "scrambled-real") for _, fs in reals]

    t_items = score_items(model, temporal, jobs)
    s_items = score_items(model, spatial, jobs)
    r_items = score_items(model, relabel, jobs)
    return ProbeResult(
        temporal=per_generator_report(t_items, generators, dict(provenance, probe="temporal")),
        temporal_relabeled=EvalReport(
            [metric_row("scrambled-real", r_items)] if r_items else [],
            dict(provenance, probe="temporal_relabeled"),
        ),
        spatial=per_generator_report(s_items, generators, dict(provenance, probe="spatial")),
    )


def probe_eval(model, manifest, backend, seed=0, jobs=1, split="test", length=8):
    check_encoder(model, backend)
    entries = manifest.split(split)
    if not entries:
        raise ProbeError(f"probe evaluation needs a non-empty {split} split")
    seqs = collect_features(entries, backend, jobs, length)
    prov = _provenance(model, manifest, split=split, perturbation=IDENTITY.to_dict(), seed=seed)
    return probe_sequences(model, entries, seqs, manifest.generators, seed, prov, jobs)
