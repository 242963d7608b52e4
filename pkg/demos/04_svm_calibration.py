"""Train the built-in SVM on toy data and calibrate probabilities.

Fits linear and RBF models on 2-D clusters, prints support-vector counts
and KKT residuals, then fits the probability sigmoid on held-out scores and
saves a calibration curve to demos/out/calibration.png.

Run:  python demos/04_svm_calibration.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from padpipe.svm import (
    decision_values,
    platt_calibrate,
    predict_probabilities,
    svm_train,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def toy_data(rng, n=60):
    attacks = rng.normal([1.2, 1.0], 0.45, (n // 2, 2))
    bona = rng.normal([-1.0, -1.2], 0.45, (n // 2, 2))
    x = np.vstack([attacks, bona])
    y = np.array([1.0] * (n // 2) + [-1.0] * (n // 2))
    return x, y


def main():
    rng = np.random.default_rng(3)
    x, y = toy_data(rng)
    dev_x, dev_y = toy_data(rng)

    for kernel in ("linear", "rbf"):
        model = svm_train(x, y, kernel=kernel, c_param=1.0)
        acc = float(np.mean(np.sign(decision_values(model, x)) == y))
        print(
            f"{kernel:6s}: {model.support_vectors.shape[0]:2d} support vectors, "
            f"KKT residual {model.kkt_residual:.2e}, train accuracy {acc:.2f}"
        )

    model = svm_train(x, y, kernel="rbf", c_param=1.0)
    model = platt_calibrate(model, decision_values(model, dev_x), dev_y)
    print(f"sigmoid: A={model.platt_a:.3f} B={model.platt_b:.3f}")

    grid = np.linspace(-4, 4, 200)
    probe = np.stack([grid, grid], axis=1)
    probs = predict_probabilities(model, probe)
    scores = decision_values(model, probe)

    fig, ax = plt.subplots(figsize=(5, 3.4))
    order = np.argsort(scores)
    ax.plot(scores[order], probs[order])
    ax.set_xlabel("decision value")
    ax.set_ylabel("P(attack)")
    ax.set_title("probability calibration")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = OUT / "calibration.png"
    fig.savefig(out, dpi=110)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
