"""Linear readout training and the two benchmark metrics.

The readout is a ridge regression with an unpenalized intercept: the fit
minimizes ||X w + b - y||^2 + lambda ||w||^2 via column centering, matching
the convention of standard library implementations so that results are
directly comparable.  Features are not standardized by default; an optional
flag exists for sensitivity studies.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass
class RidgeModel:
    weights: np.ndarray
    bias: float
    ridge_lambda: float
    feature_names: tuple[str, ...] = field(default_factory=tuple)
    standardize: bool = False
    x_scale: np.ndarray | None = None


def ridge_fit(
    x: np.ndarray,
    y: np.ndarray,
    ridge_lambda: float = 0.05,
    solver: str = "cholesky",
    standardize: bool = False,
    feature_names: tuple[str, ...] = (),
) -> RidgeModel:
    """Fit the linear readout.

    ``solver`` is 'cholesky' (normal equations) or 'svd' (orthogonal
    decomposition); both give the same model to numerical precision and the
    tests cross-check them.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError(f"need 2-D X and matching 1-D y, got {x.shape} and {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in training data")
    if ridge_lambda < 0:
        raise ValueError(f"ridge_lambda must be >= 0, got {ridge_lambda}")

    x_mean = x.mean(axis=0)
    x_scale = None
    xc = x - x_mean
    if standardize:
        x_scale = xc.std(axis=0)
        x_scale = np.where(x_scale > 0, x_scale, 1.0)
        xc = xc / x_scale
    y_mean = y.mean()
    yc = y - y_mean

    if solver == "cholesky":
        gram = xc.T @ xc + ridge_lambda * np.eye(x.shape[1])
        try:
            w = scipy.linalg.solve(gram, xc.T @ yc, assume_a="pos")
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "singular normal matrix; use ridge_lambda > 0 for collinear features"
            ) from exc
    elif solver == "svd":
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        if ridge_lambda == 0 and s[-1] <= s[0] * np.finfo(float).eps * max(x.shape):
            raise ValueError("singular normal matrix; use ridge_lambda > 0 for collinear features")
        shrink = s / (s**2 + ridge_lambda)
        w = vt.T @ (shrink * (u.T @ yc))
    else:
        raise ValueError(f"unknown solver {solver!r}; expected 'cholesky' or 'svd'")

    if not np.all(np.isfinite(w)):
        raise ValueError("ridge solution is non-finite; check feature conditioning")
    if standardize:
        bias = float(y_mean - (x_mean / x_scale) @ w)
    else:
        bias = float(y_mean - x_mean @ w)
    return RidgeModel(
        weights=w,
        bias=bias,
        ridge_lambda=ridge_lambda,
        feature_names=tuple(feature_names),
        standardize=standardize,
        x_scale=x_scale if standardize else None,
    )


def ridge_predict(model: RidgeModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[0]:
        raise ValueError(f"X shape {x.shape} does not match {model.weights.shape[0]} weights")
    if model.standardize and model.x_scale is not None:
        return (x / model.x_scale) @ model.weights + model.bias
    return x @ model.weights + model.bias


def capacity(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Memory capacity: squared Pearson correlation, in [0, 1].

    Zero variance in either argument yields 0 with a warning (a constant
    prediction carries no correlation).
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) < 2:
        raise ValueError(f"need equal-length 1-D arrays of length >= 2, got {y.shape}, {y_hat.shape}")
    dy = y - y.mean()
    dh = y_hat - y_hat.mean()
    vy = float(dy @ dy)
    vh = float(dh @ dh)
    if vy == 0.0 or vh == 0.0:
        warnings.warn("zero variance in capacity argument; returning 0", stacklevel=2)
        return 0.0
    cov = float(dy @ dh)
    return min(cov * cov / (vy * vh), 1.0)


def scaled_rmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Root mean square error normalized by the target range max(y) - min(y)."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) < 1:
        raise ValueError(f"need equal-length 1-D arrays, got {y.shape}, {y_hat.shape}")
    span = float(y.max() - y.min())
    if span <= 0:
        raise ValueError("constant target: scaled RMSE is undefined")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)) / span)


def model_to_json(model: RidgeModel) -> str:
    payload = {
        "schema_version": 1,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "ridge_lambda": model.ridge_lambda,
        "feature_names": list(model.feature_names),
        "standardize": model.standardize,
        "x_scale": None if model.x_scale is None else model.x_scale.tolist(),
    }
    return json.dumps(payload, indent=2)


def model_from_json(text: str) -> RidgeModel:
    payload = json.loads(text)
    return RidgeModel(
        weights=np.asarray(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        ridge_lambda=float(payload["ridge_lambda"]),
        feature_names=tuple(payload.get("feature_names", ())),
        standardize=bool(payload.get("standardize", False)),
        x_scale=None if payload.get("x_scale") is None else np.asarray(payload["x_scale"]),
    )
