"""Per-frame feature export for external visualization (t-SNE, UMAP)."""
import csv

import numpy as np

from .errors import DataError, DimensionError


def feature_header(width):
    return ["video_id", "frame_index", "label", "generator"] + [f"f{i}" for i in range(width)]


def _fmt(x):
    # numpy prints the shortest text that parses back to the same float32
    return str(np.float32(x))


def export_features_csv(rows, path):
    """``rows``: iterable of ``(FeatureSequence, label, generator)``.

    Writes one CSV row per frame. Returns the number of rows written.
    """
    rows = list(rows)
    widths = {fs.width for fs, _, _ in rows}
    if len(widths) > 1:
        raise DimensionError(f"feature widths differ across sequences: {sorted(widths)}")
    width = widths.pop() if widths else 0
    n = 0
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(feature_header(width))
            for fs, label, generator in rows:
                for t, feat in enumerate(fs.features):
                    w.writerow([fs.video_id, t, label, generator or ""] + [_fmt(x) for x in feat])
                    n += 1
    except OSError as exc:
        raise DataError(f"cannot write features to {path}: {exc}") from None
    return n


def read_features_csv(path):
    """Inverse of :func:`export_features_csv`: list of row dicts with a
    float32 ``features`` array."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        width = len(header) - 4
        for row in r:
            out.append({
                "video_id": row[0],
                "frame_index": int(row[1]),
                "label": row[2],
                "generator": row[3] or None,
                "features": np.array([np.float32(x) for x in row[4:4 + width]], dtype=np.float32),
            })
    return out
