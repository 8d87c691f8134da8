import sys

import numpy as np
import pytest

from decof.data.clip import ClipTensor
from decof.data.frames import list_frames, load_clip, read_frame, run_decoder, sample_frames, write_frames
from decof.data.preprocess import (
    AugmentConfig,
    center_crop,
    center_crop_box,
    preprocess_eval,
    preprocess_train,
    resize_bilinear,
)
from decof.errors import BackendError, DataError


def test_sample_frames_examples():
    assert sample_frames(3) == [0, 0, 0, 1, 1, 1, 2, 2]
    assert sample_frames(16) == [0, 2, 4, 6, 8, 10, 12, 14]
    assert sample_frames(8) == list(range(8))
    assert sample_frames(1) == [0] * 8
    with pytest.raises(DataError):
        sample_frames(0)


@pytest.mark.parametrize("n", range(1, 50))
def test_sample_frames_sorted_and_in_range(n):
    idx = sample_frames(n)
    assert idx == sorted(idx) and 0 <= idx[0] and idx[-1] < n and len(idx) == 8


def test_frame_folder_roundtrip(tmp_path):
    frames = np.random.default_rng(0).integers(0, 256, (12, 9, 11, 3), dtype=np.uint8)
    write_frames(frames, tmp_path / "v")
    (tmp_path / "v" / "notes.txt").write_text("ignored")
    paths = list_frames(tmp_path / "v")
    assert [p.rsplit("/", 1)[1] for p in paths[:2]] == ["000001.png", "000002.png"]
    np.testing.assert_array_equal(read_frame(paths[5]), frames[5])
    clip = load_clip(tmp_path / "v", "v")
    np.testing.assert_array_equal(clip.frames, frames[sample_frames(12)])
    assert clip.video_id == "v"


def test_load_clip_errors(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError):
        load_clip(tmp_path / "empty")
    with pytest.raises(DataError):
        load_clip(tmp_path / "missing")
    write_frames([np.zeros((4, 4, 3)), np.zeros((5, 4, 3))], tmp_path / "mixed")
    with pytest.raises(DataError, match="differing"):
        load_clip(tmp_path / "mixed")


def test_decoder_hook(tmp_path):
    script = tmp_path / "dec.py"
    script.write_text(
        "import sys, numpy as np\n"
        "from decof.data.frames import write_frames\n"
        "write_frames(np.full((3, 4, 4, 3), int(open(sys.argv[1]).read())), sys.argv[2])\n"
    )
    (tmp_path / "in.txt").write_text("77")
    paths = run_decoder([sys.executable, str(script), "{input}", "{outdir}"], tmp_path / "in.txt", tmp_path / "out")
    assert len(paths) == 3 and read_frame(paths[0])[0, 0, 0] == 77
    with pytest.raises(BackendError):
        run_decoder([sys.executable, "-c", "raise SystemExit(3)"], "x", tmp_path / "o2")
    with pytest.raises(BackendError):
        run_decoder(["/no/such/decoder"], "x", tmp_path / "o3")


def test_center_crop_geometry():
    assert center_crop_box(256, 320) == (0, 32, 256)
    frame = np.arange(256 * 320).reshape(256, 320, 1)
    crop = center_crop(frame)
    assert crop.shape == (256, 256, 1)
    assert crop[0, 0, 0] == 32 and crop[0, -1, 0] == 287


def test_resize_identity_and_constant():
    img = np.random.default_rng(0).random((10, 13, 3))
    np.testing.assert_array_equal(resize_bilinear(img, 10, 13), img)
    const = np.full((7, 9, 3), 0.3)
    np.testing.assert_array_equal(resize_bilinear(const, 20, 5), np.full((20, 5, 3), 0.3))


def test_resize_linear_ramp_is_exact_in_interior():
    x = np.tile(np.arange(8, dtype=np.float64)[None, :, None], (2, 1, 1))
    out = resize_bilinear(x, 2, 16)[0, :, 0]
    src = (np.arange(16) + 0.5) / 2 - 0.5
    np.testing.assert_allclose(out, np.clip(src, 0, 7), atol=1e-12)


def test_preprocess_eval_shapes_and_range():
    clip = ClipTensor(np.random.default_rng(0).integers(0, 256, (8, 30, 40, 3), dtype=np.uint8), "v")
    out = preprocess_eval(clip, size=16)
    assert out.frames.shape == (8, 16, 16, 3) and out.frames.dtype == np.float32
    assert 0 <= out.frames.min() and out.frames.max() <= 1
    flat = ClipTensor(np.full((2, 30, 40, 3), 255, np.uint8))
    np.testing.assert_array_equal(preprocess_eval(flat, 8).frames, 1.0)


def test_preprocess_train_is_seeded_and_clipwise():
    rng = np.random.default_rng(1)
    frame = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
    clip = ClipTensor(np.stack([frame] * 3), "v")
    aug = AugmentConfig(flip_p=0.5, blur_p=0.5, jpeg_p=0.5)
    a = preprocess_train(clip, 7, aug)
    b = preprocess_train(clip, 7, aug)
    assert a.frames.shape == (3, 224, 224, 3)
    assert a.frames.tobytes() == b.frames.tobytes()
    # one set of choices per clip: identical input frames stay identical
    assert np.array_equal(a.frames[0], a.frames[2])
    outs = {preprocess_train(clip, s, aug).frames.tobytes() for s in range(6)}
    assert len(outs) > 1
