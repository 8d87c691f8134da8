"""Time the compiled and numpy kernel backends on frame-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from decof import kernels
from decof.data.perturb import DCT_BASIS, LUMA_QTABLE, gaussian_kernel, scaled_qtable


def cases():
    rng = np.random.default_rng(0)
    w = gaussian_kernel(2.0)
    r = (len(w) - 1) // 2
    frame = rng.random((224, 224, 3)) * 255
    padded = np.ascontiguousarray(np.pad(frame, [(r, r), (0, 0), (0, 0)], mode="reflect").reshape(224 + 2 * r, -1))

    src = rng.random((256, 320, 3)) * 255

    def axis(n_in, n_out):
        s = np.clip((np.arange(n_out) + 0.5) * n_in / n_out - 0.5, 0, n_in - 1)
        i0 = np.floor(s).astype(np.intp)
        return i0, np.minimum(i0 + 1, n_in - 1), s - i0

    y0, y1, fy = axis(256, 224)
    x0, x1, fx = axis(320, 224)
    plane = rng.integers(0, 256, (224, 224)).astype(np.float64) - 128.0
    return {
        "blur pass (224x224x3, sigma 2)": ("convolve_axis0", (padded, w)),
        "bilinear resize (256x320 -> 224)": ("resize_bilinear", (src, y0, y1, fy, x0, x1, fx)),
        "JPEG plane (224x224, q75)": ("jpeg_plane_roundtrip", (plane, scaled_qtable(LUMA_QTABLE, 75), DCT_BASIS)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (active: {kernels.BACKEND})")
    print(f"{'kernel':<36}" + "".join(f"{b + ' ms':>12}" for b in backends) + f"{'speedup':>10}")
    for label, (name, argv) in cases().items():
        times = {}
        for b in backends:
            fn = getattr(kernels.get_impl(b), name)
            fn(*argv)
            times[b] = min(timeit.repeat(lambda: fn(*argv), number=1, repeat=args.repeat)) * 1e3
        speed = f"{times['python'] / times['cython']:.1f}x" if "cython" in times else "-"
        print(f"{label:<36}" + "".join(f"{times[b]:>12.3f}" for b in backends) + f"{speed:>10}")


if __name__ == "__main__":
    main()
