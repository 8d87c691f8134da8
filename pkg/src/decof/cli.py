"""Command-line entry point: ``decof <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime or
numeric error. Set ``DECOF_LOG=INFO`` (or ``DEBUG``) for progress logs.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .checkpoint import save_checkpoint
from .data.frames import list_frames, load_clip
from .data.manifest import DatasetManifest, ManifestEntry, load_manifest, write_manifest
from .data.perturb import DEFAULT_SPECS, PerturbationSpec
from .data.preprocess import preprocess_eval, preprocess_train
from .data.synth import synth_sequences
from .encoders.backend import EncoderBackendConfig, encode_clip, make_backend
from .encoders.cache import cache_path, load_feature_cache, write_feature_cache
from .errors import ConfigError, DataError, DecofError
from .export import export_features_csv
from .harness import (
    Detector,
    collect_features,
    entry_seed,
    eval_cross_generator,
    probe_eval,
    robustness_sweep,
)
from .reports import write_report
from .spectrum import avg_spectrum
from .training import TrainConfig, train_verifier, write_curves_csv
from .verifier import VerifierConfig

log = logging.getLogger("decof")

SUBCOMMANDS = ("encode", "train", "eval", "probe", "perturb", "spectrum", "predict", "synth", "export")


@dataclass
class RunConfig:
    subcommand: str
    manifest: str = None
    backend: str = None
    checkpoint: str = None
    out: str = "."
    seed: int = 0
    jobs: int = 1
    overrides: dict = field(default_factory=dict)

    def require(self, *names):
        for name in names:
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"{self.subcommand}: --{name} is required")
            if name in ("manifest", "backend", "checkpoint") and not os.path.exists(value):
                raise ConfigError(f"{self.subcommand}: --{name} path does not exist: {value}")

    def get(self, key, default=None):
        return self.overrides.get(key, default)


def parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="decof", description="Generated-video detection by frame consistency.")
    ap.add_argument("--version", action="version", version=f"decof {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    helps = {
        "encode": "encode every manifest entry into feature cache files",
        "train": "train a verifier on the train split, select on val",
        "eval": "per-generator ACC/AP on the test split",
        "probe": "temporal (scrambled) and spatial (replicated) probe evaluation",
        "perturb": "robustness sweep over blur and JPEG levels",
        "spectrum": "average frame spectrum per source",
        "predict": "score videos; one line per video",
        "synth": "write a synthetic feature corpus with manifest and cache",
        "export": "export per-frame features to CSV",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON run config; flags override it")
        p.add_argument("--manifest")
        p.add_argument("--backend", help="encoder backend config (JSON)")
        p.add_argument("--checkpoint")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE", default=[])
    return ap


def run_config_from_args(args):
    base = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {args.config}: {exc}") from None
    known = {f.name for f in fields(RunConfig)} - {"subcommand", "overrides"}
    unknown = set(base) - known - {"set"}
    if unknown:
        raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
    cfg = RunConfig(args.subcommand, **{k: v for k, v in base.items() if k in known})
    cfg.overrides = dict(base.get("set", {}))
    for name in known:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    cfg.overrides.update(parse_overrides(args.overrides))
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def _backend(cfg):
    cfg.require("backend")
    return make_backend(EncoderBackendConfig.from_file(cfg.backend))


def _manifest(cfg, backend=None):
    cfg.require("manifest")
    computes = backend is not None and backend.computes
    return load_manifest(cfg.manifest, check_frames=computes)


def _split_config(cls, overrides, **defaults):
    names = {f.name for f in fields(cls)}
    values = dict(defaults)
    values.update({k: v for k, v in overrides.items() if k in names})
    return cls(**values)


def _out(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


# -------------------------------------------------------------- commands

def cmd_encode(cfg):
    cfg.require("manifest", "backend")
    backend = _backend(cfg)
    if not backend.computes:
        raise ConfigError("encode needs an external or native backend, not a cache")
    manifest = load_manifest(cfg.manifest, check_frames=True)
    out = _out(cfg)
    length = int(cfg.get("seq_len", 8))
    augment = bool(cfg.get("augment", False))
    if not manifest.entries:
        log.warning("empty manifest: nothing to encode")
    written = skipped = 0
    failures = []
    try:
        for entry in manifest.entries:
            path = cache_path(out, entry.video_id)
            if _up_to_date(path, entry, backend.encoder_id):
                skipped += 1
                continue
            try:
                clip = load_clip(entry.frames_dir, entry.video_id, length)
                if augment and entry.split == "train":
                    clip = preprocess_train(clip, entry_seed(cfg.seed, entry.video_id))
                else:
                    clip = preprocess_eval(clip)
                write_feature_cache(encode_clip(clip, backend), out)
                written += 1
            except DecofError as exc:
                failures.append((entry.video_id, exc))
    finally:
        backend.close()
    with open(os.path.join(out, "backend.json"), "w", encoding="utf-8") as fh:
        json.dump({"kind": "cache", "cache_dir": ".", "encoder_id": backend.encoder_id}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"encoded {written}, up to date {skipped}, failed {len(failures)}")
    if failures:
        for vid, exc in failures:
            print(f"FAILED {vid}: {exc}", file=sys.stderr)
        return max(getattr(exc, "exit_code", 4) for _, exc in failures)
    return 0


def _up_to_date(path, entry, encoder_id):
    if not os.path.exists(path):
        return False
    try:
        fs = load_feature_cache(path)
    except DecofError:
        return False
    if fs.encoder_id != encoder_id:
        return False
    frames = list_frames(entry.frames_dir)
    newest = max((os.path.getmtime(f) for f in frames), default=0.0)
    return os.path.getmtime(path) >= newest


def _labelled(manifest, split, backend, cfg):
    entries = manifest.split(split)
    seqs = collect_features(entries, backend, cfg.jobs, int(cfg.get("seq_len", 8)))
    return [(fs, e.target) for e, fs in zip(entries, seqs)]


def cmd_train(cfg):
    cfg.require("manifest", "backend")
    backend = _backend(cfg)
    try:
        manifest = _manifest(cfg, backend)
        train = _labelled(manifest, "train", backend, cfg)
        val = _labelled(manifest, "val", backend, cfg)
    finally:
        backend.close()
    if not train:
        raise DataError("train split is empty")
    length, width = train[0][0].features.shape
    vcfg = _split_config(VerifierConfig, cfg.overrides, seq_len=length, width=width).validate()
    tcfg = _split_config(TrainConfig, cfg.overrides, seed=cfg.seed).validate()
    params, curves = train_verifier(train, val, vcfg, tcfg)
    out = _out(cfg)
    ckpt = cfg.checkpoint or os.path.join(out, "checkpoint.dcof")
    save_checkpoint(ckpt, params, backend.encoder_id, {"train": tcfg.to_dict()})
    write_curves_csv(curves, os.path.join(out, "curves.csv"))
    if curves:
        best = max(curves, key=lambda r: (r.val_acc, -r.epoch))
        print(f"best epoch {best.epoch}: val ACC {best.val_acc:.4f} AP {best.val_ap:.4f}")
    else:
        print("max_epochs=0: wrote initial parameters")
    print(f"checkpoint: {ckpt}")
    return 0


def _detector(cfg):
    cfg.require("checkpoint")
    return Detector.from_checkpoint(cfg.checkpoint)


def cmd_eval(cfg):
    model = _detector(cfg)
    backend = _backend(cfg)
    try:
        manifest = _manifest(cfg, backend)
        report = eval_cross_generator(model, manifest, backend, cfg.jobs, cfg.get("split", "test"),
                                      int(cfg.get("seq_len", model.params.config.seq_len)))
    finally:
        backend.close()
    write_report(report, _out(cfg), "eval")
    print(report.to_text(), end="")
    return 0


def cmd_probe(cfg):
    model = _detector(cfg)
    backend = _backend(cfg)
    try:
        manifest = _manifest(cfg, backend)
        result = probe_eval(model, manifest, backend, cfg.seed, cfg.jobs, cfg.get("split", "test"),
                            model.params.config.seq_len)
    finally:
        backend.close()
    out = _out(cfg)
    with open(os.path.join(out, "probe.json"), "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    for name in ("temporal", "temporal_relabeled", "spatial"):
        write_report(getattr(result, name), out, f"probe_{name}")
    for relabeled in (False, True):
        d = result.difference(relabeled)
        tag = "relabeled" if relabeled else "original labels"
        print(f"Difference (spatial - temporal, {tag}): ACC {100 * d['acc']:.2f}  AP {100 * d['ap']:.2f}")
    return 0


def _specs(cfg):
    raw = cfg.get("specs")
    if raw is None:
        return list(DEFAULT_SPECS)
    items = raw if isinstance(raw, list) else str(raw).split(",")
    return [PerturbationSpec.parse(str(s).strip()) for s in items if str(s).strip()]


def cmd_perturb(cfg):
    model = _detector(cfg)
    backend = _backend(cfg)
    try:
        manifest = _manifest(cfg, backend)
        reports = robustness_sweep(model, manifest, backend, _specs(cfg), cfg.jobs,
                                   cfg.get("split", "test"), model.params.config.seq_len)
    finally:
        backend.close()
    out = _out(cfg)
    for rep in reports:
        spec = PerturbationSpec(**rep.provenance["perturbation"])
        write_report(rep, out, f"perturb_{spec.tag}")
        print(f"{spec.tag:>14}  ACC {100 * rep.total_acc:6.2f}  AP {100 * rep.total_ap:6.2f}")
    return 0


def cmd_spectrum(cfg):
    cfg.require("manifest")
    manifest = load_manifest(cfg.manifest, check_frames=True)
    split = cfg.get("split", "test")
    entries = manifest.entries if split == "all" else manifest.split(split)
    length = int(cfg.get("seq_len", 8))
    groups = {"real": [e for e in entries if e.label == "real"]}
    for g in manifest.generators:
        groups[g] = [e for e in entries if e.generator == g]
    out = _out(cfg)
    for name, members in groups.items():
        if not members:
            continue
        frames = (preprocess_eval(load_clip(e.frames_dir, e.video_id, length)).frames for e in members)
        spec = avg_spectrum(frames, name)
        stem = os.path.join(out, f"spectrum_{name}")
        spec.write_pgm(stem + ".pgm")
        spec.write_raw(stem + ".f32")
        print(f"{name}: {spec.count} frames -> {stem}.pgm")
    return 0


def cmd_predict(cfg):
    model = _detector(cfg)
    backend = _backend(cfg)
    threshold = float(cfg.get("threshold", 0.5))
    try:
        manifest = _manifest(cfg, backend)
        split = cfg.get("split", "all")
        entries = manifest.entries if split == "all" else manifest.split(split)
        seqs = collect_features(entries, backend, cfg.jobs, model.params.config.seq_len)
    finally:
        backend.close()
    for e, score in zip(entries, model.score_batch(seqs)):
        verdict = "generated" if score >= threshold else "real"
        print(f"{e.video_id}\t{score:.6f}\t{verdict}")
    return 0


def cmd_synth(cfg):
    out = _out(cfg)
    n = int(cfg.get("n_per_class", 2000))
    n_val = int(cfg.get("val_per_class", max(1, n // 8)))
    n_test = int(cfg.get("test_per_class", max(1, n // 4)))
    length = int(cfg.get("seq_len", 8))
    width = int(cfg.get("width", 64))
    jump = float(cfg.get("jump_scale", 1.0))
    encoder_id = str(cfg.get("encoder_id", "synthetic"))
    feat_dir = os.path.join(out, "features")
    entries = []
    for split, count, offset in (("train", n, 0), ("val", n_val, 1), ("test", n_test, 2)):
        corpus = synth_sequences(count, length, width, jump, seed=cfg.seed * 3 + offset,
                                 encoder_id=encoder_id, prefix=split)
        for fs, label in corpus:
            write_feature_cache(fs, feat_dir)
            pair = fs.video_id.rsplit("-", 1)[0]
            entries.append(ManifestEntry(
                video_id=fs.video_id,
                frames_dir=os.path.join(out, "frames", fs.video_id),
                label="generated" if label else "real",
                generator="synth" if label else None,
                prompt_id=pair,
                split=split,
            ))
    write_manifest(DatasetManifest(entries, ["synth"]), os.path.join(out, "manifest.json"), relative_to=out)
    with open(os.path.join(out, "backend.json"), "w", encoding="utf-8") as fh:
        json.dump({"kind": "cache", "cache_dir": "features", "encoder_id": encoder_id}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(entries)} sequences to {out}")
    return 0


def cmd_export(cfg):
    backend = _backend(cfg)
    try:
        manifest = _manifest(cfg, backend)
        split = cfg.get("split", "test")
        entries = manifest.entries if split == "all" else manifest.split(split)
        seqs = collect_features(entries, backend, cfg.jobs, int(cfg.get("seq_len", 8)))
    finally:
        backend.close()
    path = os.path.join(_out(cfg), "features.csv")
    n = export_features_csv([(fs, e.label, e.generator) for e, fs in zip(entries, seqs)], path)
    print(f"wrote {n} rows to {path}")
    return 0


COMMANDS = {
    "encode": cmd_encode,
    "train": cmd_train,
    "eval": cmd_eval,
    "probe": cmd_probe,
    "perturb": cmd_perturb,
    "spectrum": cmd_spectrum,
    "predict": cmd_predict,
    "synth": cmd_synth,
    "export": cmd_export,
}


def main(argv=None):
    level = os.environ.get("DECOF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = run_config_from_args(args)
        return COMMANDS[cfg.subcommand](cfg)
    except DecofError as exc:
        print(f"decof {args.subcommand}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"decof {args.subcommand}: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"decof {args.subcommand}: numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
