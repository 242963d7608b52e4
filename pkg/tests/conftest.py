import json
import stat
import sys
from pathlib import Path

import numpy as np
import pytest

from padpipe.preprocess import Frame

FAKE_DECODER = """#!{python}
import json, math, pathlib, sys
video, rate, outdir = sys.argv[1], float(sys.argv[2]), pathlib.Path(sys.argv[3])
meta = json.loads(pathlib.Path(video).read_text())
n = max(1, math.floor(meta["duration"] * rate))
size = meta.get("size", 32)
from PIL import Image
import numpy as np
for i in range(n):
    arr = np.full((size, size, 3), (i * 7) % 256, dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(outdir / f"{{i:06d}}.png")
"""


@pytest.fixture
def fake_decoder(tmp_path):
    """A stand-in video decoder honoring the external decoder contract.

    "Videos" are JSON files {duration, fps, size}; the script writes
    floor(duration * rate) numbered PNG frames.
    """
    script = tmp_path / "fake_decoder.py"
    script.write_text(FAKE_DECODER.format(python=sys.executable))
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    return f"{sys.executable} {script} {{video}} {{rate}} {{outdir}}"


@pytest.fixture
def fake_video(tmp_path):
    def make(duration=3.0, fps=30, size=32, name="clip.fakevid"):
        path = tmp_path / name
        path.write_text(json.dumps({"duration": duration, "fps": fps, "size": size}))
        return path

    return make


def make_frame(pixels, index=0, t=None):
    return Frame(
        pixels=np.asarray(pixels, dtype=np.uint8),
        timestamp_s=index / 10.0 if t is None else t,
        index=index,
    )


def textured_face(size=96, seed=0):
    """Synthetic high-texture face-like pattern for warp tests."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    base = 0.4 + 0.2 * np.sin(xs / 5.0) * np.cos(ys / 7.0)
    base += 0.15 * rng.standard_normal((size, size))
    img = np.clip(base, 0, 1)
    rgb = np.stack([img, img * 0.9, img * 0.8], axis=2)
    return (np.rint(rgb * 255)).astype(np.uint8)


def smooth_face(size=96):
    """Band-limited face-like pattern; safe to resample in equivariance
    checks where per-pixel noise would dominate the comparison."""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    cx = cy = (size - 1) / 2.0
    r2 = ((xs - cx) ** 2 + (ys - cy) ** 2) / (0.45 * size) ** 2
    blob = np.exp(-r2)
    waves = 0.25 * np.sin(2 * np.pi * xs / (size / 3.0)) * np.cos(
        2 * np.pi * ys / (size / 4.0)
    )
    img = np.clip(0.35 + 0.45 * blob + waves * blob, 0, 1)
    rgb = np.stack([img, img * 0.85, img * 0.7], axis=2)
    return (np.rint(rgb * 255)).astype(np.uint8)
