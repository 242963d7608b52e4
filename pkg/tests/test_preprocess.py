import math

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage

from padpipe.errors import DataError
from padpipe.preprocess import (
    DecoderConfig,
    EyeLandmarks,
    Frame,
    FrameSequence,
    align_and_crop,
    align_sequence,
    alignment_transform,
    extract_frames,
    read_landmarks,
)
from conftest import make_frame, smooth_face, textured_face


def test_single_image_is_one_frame_sequence(tmp_path):
    img = tmp_path / "still.png"
    Image.fromarray(textured_face(32), "RGB").save(img)
    seq = extract_frames(img, rate_hz=10)
    assert seq.n == 1
    assert seq.frames[0].timestamp_s == 0.0


def test_directory_of_frames(tmp_path):
    d = tmp_path / "clip"
    d.mkdir()
    for i in range(5):
        Image.fromarray(np.full((8, 8, 3), i, np.uint8), "RGB").save(d / f"{i:06d}.png")
    seq = extract_frames(d, rate_hz=10)
    assert seq.n == 5
    assert [f.timestamp_s for f in seq.frames] == [i / 10 for i in range(5)]
    assert seq.frames[3].pixels[0, 0, 0] == 3


def test_decoder_produces_expected_frame_count(tmp_path, fake_decoder, fake_video):
    video = fake_video(duration=3.0, fps=30)
    seq = extract_frames(video, rate_hz=10, decoder=DecoderConfig(command=fake_decoder))
    assert seq.n == 30
    for k, frame in enumerate(seq.frames):
        assert frame.timestamp_s == pytest.approx(k / 10.0, abs=1e-12)


def test_decode_twice_is_byte_identical(tmp_path, fake_decoder, fake_video):
    video = fake_video(duration=1.0, fps=30)
    cfg = DecoderConfig(command=fake_decoder)
    a = extract_frames(video, rate_hz=10, decoder=cfg)
    b = extract_frames(video, rate_hz=10, decoder=cfg)
    assert a.n == b.n == 10
    for fa, fb in zip(a.frames, b.frames):
        assert np.array_equal(fa.pixels, fb.pixels)


def test_undecodable_media_errors(tmp_path, fake_decoder):
    bogus = tmp_path / "broken.fakevid"
    bogus.write_text("not json")
    with pytest.raises(DataError, match="decoder"):
        extract_frames(bogus, rate_hz=10, decoder=DecoderConfig(command=fake_decoder))
    with pytest.raises(DataError, match="no decoder"):
        extract_frames(bogus, rate_hz=10)


def test_timestamps_strictly_increasing_enforced():
    frames = [make_frame(np.zeros((4, 4, 3)), index=0, t=0.0),
              make_frame(np.zeros((4, 4, 3)), index=1, t=0.0)]
    with pytest.raises(DataError, match="increasing"):
        FrameSequence(sample_id="x", frames=frames)


def _expected_similarity(landmarks, size, row_frac, dist_frac):
    """Independent construction: rotate, scale, then translate midpoints."""
    left = np.array(landmarks.left_eye, dtype=float)
    right = np.array(landmarks.right_eye, dtype=float)
    delta = right - left
    scale = (dist_frac * size) / np.hypot(*delta)
    theta = math.atan2(delta[1], delta[0])
    rot = np.array(
        [[math.cos(-theta), -math.sin(-theta)], [math.sin(-theta), math.cos(-theta)]]
    )
    lin = scale * rot
    mid = (left + right) / 2
    target = np.array([size / 2, row_frac * size])
    offset = target - lin @ mid
    return lin, offset


def test_alignment_maps_eyes_to_canonical_positions():
    lm = EyeLandmarks(left_eye=(60, 100), right_eye=(160, 100))
    mat = alignment_transform(lm, 224, 0.40, 0.42)
    lin, offset = _expected_similarity(lm, 224, 0.40, 0.42)
    assert np.allclose(mat[:, :2], lin, atol=1e-12)
    assert np.allclose(mat[:, 2], offset, atol=1e-12)
    out_left = mat[:, :2] @ np.array([60.0, 100.0]) + mat[:, 2]
    out_right = mat[:, :2] @ np.array([160.0, 100.0]) + mat[:, 2]
    assert np.allclose(out_left, [65.0, 89.6], atol=0.5)
    assert np.allclose(out_right, [159.1, 89.6], atol=0.5)


def test_rotated_landmarks_map_to_same_canonical_positions():
    lm = EyeLandmarks(left_eye=(40, 120), right_eye=(130, 80))
    size, row_frac, dist_frac = 128, 0.4, 0.42
    mat = alignment_transform(lm, size, row_frac, dist_frac)
    left = mat[:, :2] @ np.array(lm.left_eye) + mat[:, 2]
    right = mat[:, :2] @ np.array(lm.right_eye) + mat[:, 2]
    assert np.allclose(left, [size / 2 - dist_frac * size / 2, row_frac * size], atol=1e-9)
    assert np.allclose(right, [size / 2 + dist_frac * size / 2, row_frac * size], atol=1e-9)
    assert left[1] == pytest.approx(right[1], abs=1e-9)  # eyes horizontal


def test_canonical_pose_frame_is_unchanged():
    size = 96
    lm = EyeLandmarks(
        left_eye=(size / 2 - 0.21 * size, 0.40 * size),
        right_eye=(size / 2 + 0.21 * size, 0.40 * size),
    )
    frame = make_frame(textured_face(size))
    out = align_and_crop(frame, lm, canonical_size=size, eye_row_frac=0.40, eye_dist_frac=0.42)
    assert np.abs(out.pixels.astype(int) - frame.pixels.astype(int)).max() <= 1


def test_double_alignment_is_idempotent():
    frame = make_frame(textured_face(120, seed=3))
    lm = EyeLandmarks(left_eye=(35, 55), right_eye=(85, 60))
    size = 96
    once = align_and_crop(frame, lm, canonical_size=size)
    canonical = EyeLandmarks(
        left_eye=(size / 2 - 0.21 * size, 0.40 * size),
        right_eye=(size / 2 + 0.21 * size, 0.40 * size),
    )
    twice = align_and_crop(once, canonical, canonical_size=size)
    mean_abs = np.abs(twice.pixels.astype(float) - once.pixels.astype(float)).mean()
    assert mean_abs <= 1.0


def test_rotation_equivariance():
    # source large enough that the crop never reads rotated-in border fill
    size = 160
    pixels = smooth_face(size)
    mid = np.array([size / 2.0, size / 2.0])
    half = 20.0
    lm = EyeLandmarks(left_eye=tuple(mid - [half, 0]), right_eye=tuple(mid + [half, 0]))

    angle = 30.0
    rad = math.radians(angle)
    rot = np.array([[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]])
    # independent resampler: rotate the raster about the eye midpoint
    inv = np.linalg.inv(rot)
    offset_yx = np.array([mid[1], mid[0]]) - inv[::-1, ::-1] @ np.array([mid[1], mid[0]])
    rotated = np.stack(
        [
            ndimage.affine_transform(
                pixels[..., c].astype(float), inv[::-1, ::-1], offset=offset_yx, order=1
            )
            for c in range(3)
        ],
        axis=2,
    )
    rotated = np.clip(np.rint(rotated), 0, 255).astype(np.uint8)
    eye_l = rot @ (np.array(lm.left_eye) - mid) + mid
    eye_r = rot @ (np.array(lm.right_eye) - mid) + mid
    lm_rot = EyeLandmarks(left_eye=tuple(eye_l), right_eye=tuple(eye_r))

    a = align_and_crop(make_frame(pixels), lm, canonical_size=64)
    b = align_and_crop(make_frame(rotated), lm_rot, canonical_size=64)
    diff = np.abs(a.pixels.astype(float) - b.pixels.astype(float)).mean()
    assert diff <= 2.0


def test_degenerate_landmarks_rejected():
    with pytest.raises(DataError, match="coincident"):
        EyeLandmarks(left_eye=(10, 10), right_eye=(10, 10))
    with pytest.raises(DataError, match="left_eye.x"):
        EyeLandmarks(left_eye=(20, 10), right_eye=(10, 10))


def test_landmark_sidecar_round_trip(tmp_path):
    path = tmp_path / "lm.txt"
    path.write_text("10 20 30 20\n11.5 21.5 31.5 21.5\n")
    lms = read_landmarks(path)
    assert len(lms) == 2
    assert lms[1].left_eye == (11.5, 21.5)
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    with pytest.raises(DataError, match="4 values"):
        read_landmarks(bad)


def test_align_sequence_drops_frames_without_landmarks():
    frames = [make_frame(textured_face(64), index=i, t=i / 10) for i in range(3)]
    seq = FrameSequence(sample_id="x", frames=frames)
    lm = EyeLandmarks(left_eye=(20, 25), right_eye=(44, 25))
    with pytest.warns(UserWarning, match="dropping frame"):
        aligned = align_sequence(seq, [lm, None, lm], canonical_size=32)
    assert aligned.n == 2
    assert [f.index for f in aligned.frames] == [0, 2]
    with pytest.raises(DataError, match="all frames dropped"):
        with pytest.warns(UserWarning):
            align_sequence(seq, [None, None, None], canonical_size=32)
