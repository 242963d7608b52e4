"""Walk one frame through the property-map estimators.

Renders a synthetic face-like frame, oversegments it, and estimates the
saliency, illuminant, and (constant test) depth maps. Saves a side-by-side
panel to demos/out/property_maps.png.

Run from the repository root:  python demos/01_property_maps.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from padpipe import (
    DepthProviderConfig,
    Frame,
    boundary_connectivity,
    estimate_illuminant_map,
    estimate_saliency_map,
    provide_depth_map,
    segment_superpixels,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def synthetic_frame(size=128):
    ys, xs = np.mgrid[0:size, 0:size].astype(float)
    cx, cy = size / 2, size * 0.55
    r2 = ((xs - cx) / (0.30 * size)) ** 2 + ((ys - cy) / (0.40 * size)) ** 2
    face = np.exp(-r2)
    rng = np.random.default_rng(0)
    texture = rng.normal(0, 0.05, (size, size))
    img = np.stack(
        [
            0.25 + 0.55 * face + texture,
            0.22 + 0.45 * face + texture,
            0.20 + 0.38 * face + texture,
        ],
        axis=2,
    )
    return Frame(
        pixels=(np.clip(img, 0, 1) * 255).astype(np.uint8), timestamp_s=0.0, index=0
    )


def main():
    frame = synthetic_frame()
    print(f"frame: {frame.shape_hw[0]}x{frame.shape_hw[1]}")

    graph = segment_superpixels(frame, target_count=120)
    print(f"superpixels: {graph.n_regions} regions, {len(graph.edges)} edges")
    weights = boundary_connectivity(graph)
    print(
        "boundary connectivity: min {:.3f} max {:.3f}".format(
            weights.bndcon.min(), weights.bndcon.max()
        )
    )

    saliency = estimate_saliency_map(frame, graph, weights=weights)
    illuminant = estimate_illuminant_map(frame, graph)
    depth = provide_depth_map("demo", 0, frame.shape_hw, DepthProviderConfig(mode="constant"))

    fig, axes = plt.subplots(1, 5, figsize=(16, 3.6))
    axes[0].imshow(frame.pixels)
    axes[0].set_title("input frame")
    axes[1].imshow(graph.labels, cmap="tab20")
    axes[1].set_title(f"{graph.n_regions} superpixels")
    axes[2].imshow(saliency.data, cmap="magma", vmin=0, vmax=1)
    axes[2].set_title("saliency")
    axes[3].imshow(illuminant.data)
    axes[3].set_title("illuminant chromaticity")
    axes[4].imshow(depth.data, cmap="viridis", vmin=0, vmax=1)
    axes[4].set_title("depth (constant provider)")
    for ax in axes:
        ax.axis("off")
    fig.tight_layout()
    out = OUT / "property_maps.png"
    fig.savefig(out, dpi=110)
    print(f"wrote {out}")

    center = saliency.data[40:90, 44:84].mean()
    border = np.concatenate([saliency.data[:6].ravel(), saliency.data[-6:].ravel()]).mean()
    print(f"mean saliency: face {center:.3f} vs border {border:.3f}")


if __name__ == "__main__":
    main()
