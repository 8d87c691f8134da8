"""Deterministic stand-in encoder: average-pool each frame to an 8x8 grid,
project with a seeded random matrix, L2-normalize.

Runs as an external encoder process::

    python -m decof.encoders.stub --dim 64 --seed 0
"""
import argparse
import sys

import numpy as np

from .protocol import encode_response, read_request

GRID = 8


def projection(dim, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((GRID * GRID * 3, dim)) / np.sqrt(GRID * GRID * 3)


def pool(frame):
    h, w, _ = frame.shape
    ys = np.linspace(0, h, GRID + 1).astype(int)
    xs = np.linspace(0, w, GRID + 1).astype(int)
    f = np.asarray(frame, dtype=np.float64)
    cells = [
        f[ys[i]:max(ys[i + 1], ys[i] + 1), xs[j]:max(xs[j + 1], xs[j] + 1)].mean(axis=(0, 1))
        for i in range(GRID)
        for j in range(GRID)
    ]
    return np.concatenate(cells)


def stub_features(frames, dim=64, seed=0, proj=None):
    """Encode ``(L, H, W, 3)`` frames one at a time, so row i depends on frame i only."""
    if proj is None:
        proj = projection(dim, seed)
    rows = []
    for frame in frames:
        v = (pool(frame) - 0.5) @ proj
        rows.append(v / max(np.linalg.norm(v), 1e-12))
    return np.asarray(rows, dtype=np.float32)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    proj = projection(args.dim, args.seed)
    stdin, stdout = sys.stdin.buffer, sys.stdout.buffer
    while True:
        frames = read_request(stdin)
        if frames is None:
            return 0
        stdout.write(encode_response(stub_features(frames, proj=proj)))
        stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
