"""Binary soft-margin SVM trained by sequential minimal optimization.

Training solves the dual problem

    min  1/2 a' Q a - sum(a)   s.t.  0 <= a_i <= C_i,  sum(y_i a_i) = 0

with Q_ij = y_i y_j K(x_i, x_j), by repeatedly picking the maximal violating
pair and solving the two-variable subproblem analytically. Convergence is
declared when the KKT violation drops to 1e-3; an iteration cap of 1e6
produces a warning but still returns the model. Probabilities come from a
sigmoid 1 / (1 + exp(A s + B)) fitted to held-out decision values by
Newton iterations on the regularized log-loss.

Attack is the positive class (+1) everywhere.

Model files (PADM, little-endian): magic "PADM", uint16 version, uint8
kernel tag, uint32 dim, uint32 n_sv, float64 gamma/C/bias/plattA/plattB/
kkt_residual, uint64 seed, uint8 standardize flag, length-prefixed
extractor_id and property strings, then dual coefficients, support vectors,
and optional standardize mean/scale, all float64.
"""

from __future__ import annotations

import dataclasses
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DataError

KKT_TOL = 1e-3
MAX_ITER = 10**6

KERNELS = ("linear", "rbf")
_KERNEL_TAGS = {"linear": 0, "rbf": 1}
_TAG_KERNELS = {v: k for k, v in _KERNEL_TAGS.items()}


@dataclass
class SvmModel:
    """A trained (optionally Platt-calibrated) binary SVM.

    dual_coefs are the signed alpha_i * y_i, so |dual_coef| <= C. class map:
    +1 = attack, -1 = bonafide.
    """

    kernel: str
    gamma: float
    support_vectors: np.ndarray  # (n_sv, dim) float64
    dual_coefs: np.ndarray  # (n_sv,) float64
    bias: float
    c_param: float
    extractor_id: str
    property_name: str
    seed: int = 0
    kkt_residual: float = 0.0
    platt_a: float | None = None
    platt_b: float | None = None
    standardize_mean: np.ndarray | None = None
    standardize_scale: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def is_calibrated(self) -> bool:
        return self.platt_a is not None


def _kernel_matrix(kernel, gamma, a, b):
    if kernel == "linear":
        return a @ b.T
    sq = (a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def resolve_gamma(x: np.ndarray, gamma=None) -> float:
    """Default RBF width 1 / (dim * variance of all feature entries)."""
    if gamma is not None:
        return float(gamma)
    var = float(x.var())
    if var <= 0:
        var = 1.0
    return 1.0 / (x.shape[1] * var)


def svm_train(
    x: np.ndarray,
    y: np.ndarray,
    kernel: str = "linear",
    c_param: float = 1.0,
    gamma: float | None = None,
    seed: int = 0,
    tol: float = KKT_TOL,
    max_iter: int = MAX_ITER,
    class_weight: dict | None = None,
    standardize: bool = False,
    extractor_id: str = "",
    property_name: str = "",
) -> SvmModel:
    """Train a binary SVM; labels must be +-1 with both classes present."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DataError(f"bad training shapes x={x.shape} y={y.shape}")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise DataError("labels must be +1 (attack) or -1 (bonafide)")
    if len(np.unique(y)) < 2:
        raise DataError("training set must contain both classes")
    if kernel not in KERNELS:
        raise DataError(f"unknown kernel {kernel!r}")

    mean = scale = None
    if standardize:
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        x = (x - mean) / scale

    gamma_val = resolve_gamma(x, gamma) if kernel == "rbf" else 0.0
    n = x.shape[0]
    box = np.full(n, float(c_param))
    if class_weight:
        for cls, mult in class_weight.items():
            box[y == float(cls)] *= float(mult)

    kmat = _kernel_matrix(kernel, gamma_val, x, x)
    qmat = kmat * np.outer(y, y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0

    residual = np.inf
    for _ in range(max_iter):
        neg_yg = -y * grad
        in_up = ((y > 0) & (alpha < box)) | ((y < 0) & (alpha > 0))
        in_low = ((y < 0) & (alpha < box)) | ((y > 0) & (alpha > 0))
        up_vals = np.where(in_up, neg_yg, -np.inf)
        low_vals = np.where(in_low, neg_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_up = up_vals[i]
        m_low = low_vals[j]
        residual = m_up - m_low
        if residual <= tol:
            break
        curvature = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        step = residual / max(curvature, 1e-12)
        if y[i] > 0:
            step = min(step, box[i] - alpha[i])
        else:
            step = min(step, alpha[i])
        if y[j] > 0:
            step = min(step, alpha[j])
        else:
            step = min(step, box[j] - alpha[j])
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += step * (y[i] * qmat[:, i] - y[j] * qmat[:, j])
    else:
        warnings.warn(
            f"SMO hit the {max_iter}-iteration cap with KKT violation {residual:.3g}"
        )

    bias = float((m_up + m_low) / 2.0)
    sv = alpha > 1e-12
    if not np.any(sv):
        sv = np.zeros(n, dtype=bool)
        sv[0] = True
    return SvmModel(
        kernel=kernel,
        gamma=gamma_val,
        support_vectors=x[sv].copy(),
        dual_coefs=(alpha * y)[sv].copy(),
        bias=bias,
        c_param=float(c_param),
        extractor_id=extractor_id,
        property_name=property_name,
        seed=int(seed),
        kkt_residual=float(max(residual, 0.0)),
        standardize_mean=mean,
        standardize_scale=scale,
    )


def decision_values(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Signed distance-like score; positive means attack."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise DataError(
            f"feature dimension {x.shape[1]} does not match model dimension {model.dim}"
        )
    if model.standardize_mean is not None:
        x = (x - model.standardize_mean) / model.standardize_scale
    kmat = _kernel_matrix(model.kernel, model.gamma, x, model.support_vectors)
    return kmat @ model.dual_coefs + model.bias


def fit_sigmoid(
    scores: np.ndarray,
    labels: np.ndarray,
    max_iter: int = 100,
    grad_tol: float = 1e-10,
) -> tuple[float, float]:
    """Fit p(s) = 1 / (1 + exp(A s + B)) by Newton steps on the regularized
    log-loss with Platt's smoothed targets."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("calibration set must contain both classes")
    target = np.where(pos, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    a = 0.0
    b = np.log((n_neg + 1.0) / (n_pos + 1.0))
    min_step = 1e-10
    sigma = 1e-12

    def loss(av, bv):
        z = av * scores + bv
        # stable log(1 + exp(z)) and the two loss branches
        softplus = np.where(z >= 0, z + np.log1p(np.exp(-z)), np.log1p(np.exp(z)))
        return float(np.sum(target * z + (softplus - z)))  # = sum t*z + log(1+e^-z)

    current = loss(a, b)
    for _ in range(max_iter):
        z = a * scores + b
        p = np.where(
            z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z))
        )
        d1 = target - p
        grad_a = float(np.dot(scores, d1))
        grad_b = float(d1.sum())
        if abs(grad_a) < grad_tol and abs(grad_b) < grad_tol:
            return a, b
        w = p * (1.0 - p)
        h11 = float(np.dot(scores * scores, w)) + sigma
        h22 = float(w.sum()) + sigma
        h12 = float(np.dot(scores, w))
        det = h11 * h22 - h12 * h12
        da = -(h22 * grad_a - h12 * grad_b) / det
        db = -(h11 * grad_b - h12 * grad_a) / det
        # backtracking line search on the convex loss
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            new = loss(na, nb)
            if new < current + 1e-4 * step * (grad_a * da + grad_b * db):
                a, b, current = na, nb, new
                break
            step /= 2.0
        else:
            break
    z = a * scores + b
    p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))
    d1 = target - p
    if max(abs(float(np.dot(scores, d1))), abs(float(d1.sum()))) > 1e-6:
        raise ConvergenceError(
            "probability calibration did not converge; provide a larger dev set"
        )
    return a, b


def platt_calibrate(model: SvmModel, dev_scores, dev_labels) -> SvmModel:
    """Return a copy of the model with fitted sigmoid parameters."""
    a, b = fit_sigmoid(dev_scores, dev_labels)
    return dataclasses.replace(model, platt_a=a, platt_b=b)


def predict_probabilities(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Calibrated probability of attack for each row of x."""
    if not model.is_calibrated:
        raise DataError("model is not calibrated; run platt_calibrate first")
    z = model.platt_a * decision_values(model, x) + model.platt_b
    return np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))


PADM_MAGIC = b"PADM"
PADM_VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _unpack_str(fh) -> str:
    (n,) = struct.unpack("<H", fh.read(2))
    return fh.read(n).decode("utf-8")


def save_model(path, model: SvmModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_sv, dim = model.support_vectors.shape
    has_std = model.standardize_mean is not None
    has_platt = model.is_calibrated
    with open(path, "wb") as fh:
        fh.write(PADM_MAGIC)
        fh.write(struct.pack("<H", PADM_VERSION))
        fh.write(struct.pack("<B", _KERNEL_TAGS[model.kernel]))
        fh.write(struct.pack("<II", dim, n_sv))
        fh.write(
            struct.pack(
                "<dddd",
                model.gamma,
                model.c_param,
                model.bias,
                model.kkt_residual,
            )
        )
        fh.write(struct.pack("<B", 1 if has_platt else 0))
        if has_platt:
            fh.write(struct.pack("<dd", model.platt_a, model.platt_b))
        fh.write(struct.pack("<Q", model.seed))
        fh.write(struct.pack("<B", 1 if has_std else 0))
        fh.write(_pack_str(model.extractor_id))
        fh.write(_pack_str(model.property_name))
        fh.write(model.dual_coefs.astype("<f8").tobytes())
        fh.write(model.support_vectors.astype("<f8").tobytes())
        if has_std:
            fh.write(model.standardize_mean.astype("<f8").tobytes())
            fh.write(model.standardize_scale.astype("<f8").tobytes())


def load_model(path) -> SvmModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file missing: {path}")
    with open(path, "rb") as fh:
        if fh.read(4) != PADM_MAGIC:
            raise DataError(f"{path}: not a PADM model file")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != PADM_VERSION:
            raise DataError(f"{path}: unsupported model version {version}")
        (tag,) = struct.unpack("<B", fh.read(1))
        if tag not in _TAG_KERNELS:
            raise DataError(f"{path}: unknown kernel tag {tag}")
        dim, n_sv = struct.unpack("<II", fh.read(8))
        gamma, c_param, bias, kkt = struct.unpack("<dddd", fh.read(32))
        (has_platt,) = struct.unpack("<B", fh.read(1))
        platt_a = platt_b = None
        if has_platt:
            platt_a, platt_b = struct.unpack("<dd", fh.read(16))
        (seed,) = struct.unpack("<Q", fh.read(8))
        (has_std,) = struct.unpack("<B", fh.read(1))
        extractor_id = _unpack_str(fh)
        property_name = _unpack_str(fh)
        coefs = np.frombuffer(fh.read(8 * n_sv), dtype="<f8").copy()
        svs = np.frombuffer(fh.read(8 * n_sv * dim), dtype="<f8").reshape(n_sv, dim).copy()
        mean = scale = None
        if has_std:
            mean = np.frombuffer(fh.read(8 * dim), dtype="<f8").copy()
            scale = np.frombuffer(fh.read(8 * dim), dtype="<f8").copy()
    return SvmModel(
        kernel=_TAG_KERNELS[tag],
        gamma=gamma,
        support_vectors=svs,
        dual_coefs=coefs,
        bias=bias,
        c_param=c_param,
        extractor_id=extractor_id,
        property_name=property_name,
        seed=seed,
        kkt_residual=kkt,
        platt_a=platt_a,
        platt_b=platt_b,
        standardize_mean=mean,
        standardize_scale=scale,
    )
