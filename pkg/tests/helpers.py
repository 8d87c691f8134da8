import json
import os
import sys

import numpy as np

from decof.data.frames import write_frames
from decof.data.manifest import DatasetManifest, ManifestEntry, write_manifest
from decof.verifier import VerifierConfig, init_params

SMALL = VerifierConfig(seq_len=4, width=16, layers=2, heads=4, mlp_hidden=32, dropout=0.0)


def randomized_params(cfg, seed, scale=0.3, dtype=np.float64):
    """Init params then perturb every tensor so no gradient is trivially zero."""
    p = init_params(cfg, seed).astype(dtype)
    rng = np.random.default_rng(seed + 1000)
    for k in p.names():
        p[k] = (p[k] + rng.normal(0.0, scale, p[k].shape)).astype(dtype)
    return p


def stub_backend_file(directory, dim=32, seed=0, encoder_id="stub-v1", per_worker=False, name="backend.json"):
    path = os.path.join(directory, name)
    with open(path, "w") as fh:
        json.dump({
            "kind": "external",
            "encoder_id": encoder_id,
            "external_cmd": [sys.executable, "-m", "decof.encoders.stub", "--dim", str(dim), "--seed", str(seed)],
            "per_worker": per_worker,
        }, fh)
    return path


def synthetic_video(rng, n_frames, h, w, generated):
    """Smoothly panning texture; generated videos get one abrupt frame."""
    yy, xx = np.mgrid[0:h, 0:w]
    phase = rng.uniform(0, 2 * np.pi, 3)
    freq = rng.uniform(0.05, 0.2, 2)
    frames = []
    for t in range(n_frames):
        chans = [127 + 100 * np.sin(freq[0] * (xx + 2 * t) + freq[1] * yy + phase[c]) for c in range(3)]
        frames.append(np.stack(chans, axis=-1))
    frames = np.asarray(frames)
    if generated:
        j = int(rng.integers(0, n_frames))
        frames[j] = rng.uniform(0, 255, frames[j].shape)
    return np.clip(np.rint(frames), 0, 255).astype(np.uint8)


def build_frame_dataset(root, generators=("gen_a", "gen_b"), prompts=None, n_frames=6, h=40, w=48, seed=0):
    """Write a tiny frame-folder dataset plus manifest; returns the manifest path."""
    prompts = prompts or {"train": 4, "val": 2, "test": 3}
    rng = np.random.default_rng(seed)
    entries = []
    k = 0
    for split, count in prompts.items():
        for _ in range(count):
            pid = f"p{k}"
            k += 1
            vids = [(f"{pid}-real", "real", None)] + [(f"{pid}-{g}", "generated", g) for g in generators]
            for vid, label, gen in vids:
                d = os.path.join(root, "frames", vid)
                write_frames(synthetic_video(rng, n_frames, h, w, label == "generated"), d)
                entries.append(ManifestEntry(vid, d, label, gen, pid, split))
    path = os.path.join(root, "manifest.json")
    write_manifest(DatasetManifest(entries, list(generators)), path, relative_to=root)
    return path
