"""Sparse-aware feature scaling and ridge classification with LOOCV.

The ridge classifier regresses one-vs-rest ``±1`` targets, selects the
penalty by closed-form leave-one-out error and predicts the class with the
largest score. Binary problems regress a single ``±1`` target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    FeatureDimensionMismatch,
    InsufficientData,
    InvalidFeatures,
)
from .params import DEFAULT_ALPHAS

SCALERS = ("sparse", "standard", "none")


@dataclass(eq=False)
class ScalerStats:
    """Per-feature statistics of a fitted scaler.

    For the ``sparse`` scaler the statistics describe square-rooted
    features, ``zero_fraction`` is the share of zeros per feature and
    ``epsilon = zero_fraction**4 + 1e-8`` is added to the std. Zeros stay
    zero after scaling.
    """

    mode: str
    mean: np.ndarray
    std: np.ndarray
    zero_fraction: np.ndarray | None = None
    epsilon: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return self.mean.size

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise FeatureDimensionMismatch(
                f"expected {self.n_features} features, got {X.shape[-1]}"
            )
        if self.mode == "none":
            return X.copy()
        if self.mode == "standard":
            return (X - self.mean) / self.std
        root = np.sqrt(np.clip(X, 0.0, None))
        return (root != 0) * (root - self.mean) / (self.std + self.epsilon)


def fit_scaler(X, mode: str = "sparse") -> ScalerStats:
    """Fit feature scaling statistics on a training matrix.

    Parameters
    ----------
    X : array-like of shape (n, F)
        Nonnegative features for ``sparse``.
    mode : {"sparse", "standard", "none"}
    """
    X = np.asarray(X, dtype=np.float64)
    if mode not in SCALERS:
        raise ConfigError(f"scaler must be one of {SCALERS}, got {mode!r}")
    if not np.all(np.isfinite(X)):
        raise InvalidFeatures("feature matrix contains non-finite values")
    F = X.shape[1]
    if mode == "none":
        return ScalerStats(mode, np.zeros(F), np.ones(F))
    if mode == "standard":
        sd = X.std(axis=0)
        return ScalerStats(mode, X.mean(axis=0), np.where(sd > 0, sd, 1.0))
    root = np.sqrt(np.clip(X, 0.0, None))
    zero_fraction = np.mean(root == 0, axis=0)
    return ScalerStats(
        mode,
        root.mean(axis=0),
        root.std(axis=0),
        zero_fraction,
        zero_fraction**4 + 1e-8,
    )


def encode_targets(labels, classes) -> np.ndarray:
    """``±1`` targets: one column per class, or a single column if binary."""
    labels = np.asarray(labels)
    Y = np.where(labels[:, None] == np.asarray(classes)[None, :], 1.0, -1.0)
    if len(classes) == 2:
        return Y[:, 1:]
    return Y


def _centering_basis(n: int) -> np.ndarray:
    """Orthonormal basis (n, n-1) of the vectors that sum to zero."""
    # Householder reflection taking the unit constant vector to e_1
    v = np.full(n, 1.0 / np.sqrt(n))
    v[0] -= 1.0
    H = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
    return H[:, 1:]


@dataclass
class _Spectrum:
    """Eigen-structure of a centered design ``Xc``.

    Columns of ``U`` are orthonormal, orthogonal to the constant vector,
    with ``Xc @ Xc.T = U diag(lam) U.T``. ``rest[i]`` is the squared norm
    of row ``i`` of the projector onto the centered directions ``U`` does
    not span.
    """

    xm: np.ndarray
    Xc: np.ndarray
    U: np.ndarray
    lam: np.ndarray
    Vt: np.ndarray | None
    rest: np.ndarray

    def coef(self, Yc, alpha) -> np.ndarray:
        """Ridge weights of shape (F, targets)."""
        UtY = self.U.T @ Yc
        if self.Vt is None:
            # dual form: Xc.T (Xc Xc.T + alpha I)^-1 Yc
            return self.Xc.T @ (self.U @ (UtY / (self.lam + alpha)[:, None]))
        s = np.sqrt(self.lam)
        return self.Vt.T @ ((s / (self.lam + alpha))[:, None] * UtY)

    def loocv(self, Yc, alphas) -> np.ndarray:
        # 1 - h and the residual are sums of the nonnegative weights
        # alpha / (lam + alpha), which avoids cancellation when h is near 1
        UtY = self.U.T @ Yc
        base = Yc - self.U @ UtY
        U2 = self.U**2
        out = np.empty(len(alphas))
        for a, alpha in enumerate(alphas):
            keep = alpha / (self.lam + alpha)
            resid = base + self.U @ (keep[:, None] * UtY)
            slack = self.rest + U2 @ keep
            out[a] = np.sum((resid / slack[:, None]) ** 2)
        return out


def _spectrum(X) -> _Spectrum:
    xm = X.mean(axis=0)
    Xc = X - xm
    n, F = Xc.shape
    if F >= n - 1:
        # wide designs: eigendecompose the Gram matrix restricted to the
        # centered subspace, which is far cheaper than a thin SVD
        P = _centering_basis(n)
        Z = P.T @ X
        lam, V = np.linalg.eigh(Z @ Z.T)
        return _Spectrum(xm, Xc, P @ V, np.clip(lam, 0.0, None), None, np.zeros(n))
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    rest = np.clip(1.0 - 1.0 / n - np.sum(U**2, axis=1), 0.0, None)
    return _Spectrum(xm, Xc, U, s**2, Vt, rest)


def loocv_errors(X, Y, alphas) -> np.ndarray:
    """Total squared leave-one-out error of ridge regression per alpha.

    Uses the hat-matrix identity ``e_loo = e / (1 - h)`` on the spectrum of
    the centered design; the intercept is unpenalized.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    spec = _spectrum(X)
    return spec.loocv(Y - Y.mean(axis=0), alphas)


def loocv_errors_refit(X, Y, alpha) -> float:
    """Leave-one-out error by refitting ``n`` times; slow reference."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, F = X.shape
    total = 0.0
    for i in range(n):
        keep = np.arange(n) != i
        Xt, Yt = X[keep], Y[keep]
        xm, ym = Xt.mean(axis=0), Yt.mean(axis=0)
        Xc = Xt - xm
        W = np.linalg.solve(Xc.T @ Xc + alpha * np.eye(F), Xc.T @ (Yt - ym))
        pred = ym + (X[i] - xm) @ W
        total += float(np.sum((Y[i] - pred) ** 2))
    return total


@dataclass(eq=False)
class RidgeModel:
    """Linear class scores on scaled features.

    ``coef`` has one row per class, or a single row for binary problems
    whose score is the evidence for ``classes[1]``.
    """

    coef: np.ndarray
    intercept: np.ndarray
    alpha: float
    classes: np.ndarray
    vocabulary: list[str]
    scaler: ScalerStats | None = None
    alphas: tuple = DEFAULT_ALPHAS
    loo_errors: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_features(self) -> int:
        return self.coef.shape[1]

    def decision_function(self, X_raw) -> np.ndarray:
        """Per-class scores of shape (n, C)."""
        X = np.asarray(X_raw, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise FeatureDimensionMismatch(
                f"expected {self.n_features} features, got {X.shape[-1]}"
            )
        if self.scaler is not None:
            X = self.scaler.transform(X)
        scores = X @ self.coef.T + self.intercept
        if len(self.classes) == 2:
            scores = np.hstack([-scores, scores])
        return scores

    def predict_index(self, X_raw) -> np.ndarray:
        """Vocabulary indices of the predicted classes."""
        # argmax returns the first maximum, so ties go to the lowest class
        return self.classes[np.argmax(self.decision_function(X_raw), axis=1)]

    def predict(self, X_raw) -> list[str]:
        return [self.vocabulary[i] for i in self.predict_index(X_raw)]


def fit_ridge_loocv(
    X_scaled, labels, alphas=DEFAULT_ALPHAS, vocabulary=None
) -> RidgeModel:
    """Fit the ridge classifier, choosing alpha by leave-one-out error.

    Parameters
    ----------
    X_scaled : array-like of shape (n, F)
        Already scaled features.
    labels : array-like of shape (n,)
        Class indices.
    alphas : sequence of float
        Candidate penalties; the first one with the smallest error wins.
    vocabulary : list of str, optional
        Tokens for the class indices.
    """
    X = np.asarray(X_scaled, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientData("ridge needs at least 2 samples")
    if labels.shape != (X.shape[0],):
        raise FeatureDimensionMismatch("one label per sample is required")
    if not np.all(np.isfinite(X)):
        raise InvalidFeatures("feature matrix contains non-finite values")
    classes = np.unique(labels)
    if classes.size < 2:
        raise InsufficientData("ridge needs at least 2 classes")
    alphas = tuple(float(a) for a in alphas)
    if not alphas or min(alphas) <= 0:
        raise ConfigError("alphas must be positive")
    if vocabulary is None:
        vocabulary = [str(c) for c in range(int(classes.max()) + 1)]

    Y = encode_targets(labels, classes)
    spec = _spectrum(X)
    ym = Y.mean(axis=0)
    errors = spec.loocv(Y - ym, alphas)
    alpha = alphas[int(np.argmin(errors))]
    W = spec.coef(Y - ym, alpha)
    coef = np.ascontiguousarray(W.T)
    intercept = ym - spec.xm @ W
    if not (np.all(np.isfinite(coef)) and np.all(np.isfinite(intercept))):
        raise InvalidFeatures("ridge solution is not finite")
    return RidgeModel(
        coef, intercept, alpha, classes, list(vocabulary), None, alphas, errors
    )


def fit_classifier(
    X_raw, labels, alphas=DEFAULT_ALPHAS, scaler: str = "sparse", vocabulary=None
) -> RidgeModel:
    """Fit the scaler on ``X_raw``, then the ridge model on scaled features."""
    stats = fit_scaler(X_raw, scaler)
    model = fit_ridge_loocv(stats.transform(X_raw), labels, alphas, vocabulary)
    model.scaler = stats
    return model


def predict(model: RidgeModel, X_raw):
    """Predicted tokens and per-class scores."""
    scores = model.decision_function(X_raw)
    idx = model.classes[np.argmax(scores, axis=1)]
    return [model.vocabulary[i] for i in idx], scores
