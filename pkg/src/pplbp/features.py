"""Karhunen-Loeve reduction and linear discriminant classification."""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MODEL_FORMAT_VERSION = 1
EIG_REL_TOL = 1e-10
VARIANCE_KEPT = 0.99
RIDGE = 1e-6


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class KlTransform:
    mean: np.ndarray  # (d,)
    basis: np.ndarray  # (k, d), orthonormal rows
    eigenvalues: np.ndarray  # (k,), descending

    @property
    def n_components(self) -> int:
        return self.basis.shape[0]

    def components_for_variance(self, fraction: float = VARIANCE_KEPT) -> int:
        """Smallest k whose leading eigenvalues explain ``fraction`` of the variance."""
        if self.n_components == 0:
            return 0
        cum = np.cumsum(self.eigenvalues)
        return int(np.searchsorted(cum, fraction * cum[-1] * (1 - 1e-12)) + 1)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each row positive."""
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vecs * signs[:, None]


def kl_fit(X) -> KlTransform:
    """Principal axes of the sample covariance of the rows of ``X``.

    Uses the n x n Gram matrix when there are fewer samples than features.
    Components with eigenvalue below ``1e-10 * largest`` are discarded, and
    at most ``min(n - 1, d)`` are kept.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise FitError("kl_fit needs a 2-D matrix with at least two rows")
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    if n < d:
        gram = Xc @ Xc.T / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
    else:
        evals, evecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[0] if evals.size else 0.0
    keep = evals > EIG_REL_TOL * top if top > 0 else np.zeros(evals.shape, dtype=bool)
    keep[min(n - 1, d) :] = False
    evals, evecs = evals[keep], evecs[:, keep]
    if n < d:
        basis = (Xc.T @ evecs) / np.sqrt((n - 1) * evals)
        # re-orthonormalize against round-off in the Gram route
        q, r = np.linalg.qr(basis)
        basis = q * np.sign(np.diag(r))
        basis = basis.T
    else:
        basis = evecs.T
    return KlTransform(mean, _fix_signs(np.ascontiguousarray(basis)), evals.copy())


def kl_project(t: KlTransform, x, k: int | None = None) -> np.ndarray:
    """Coordinates of ``x`` (vector or row matrix) on the first ``k`` axes."""
    if k is None:
        k = t.n_components
    if k < 1 or k > t.n_components:
        raise ValueError(f"k must be in [1, {t.n_components}] (got {k})")
    x = np.asarray(x, dtype=np.float64)
    return (x - t.mean) @ t.basis[:k].T


def kl_reconstruct(t: KlTransform, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    k = y.shape[-1]
    return y @ t.basis[:k] + t.mean


def choose_components(t: KlTransform, n_train: int, n_classes: int) -> int:
    """99% explained variance, capped so the pooled covariance stays estimable."""
    k = min(t.components_for_variance(), n_train - n_classes)
    if k < 1:
        raise FitError(f"no usable KL components (n_train={n_train}, n_classes={n_classes})")
    return k


@dataclass(frozen=True)
class LdaModel:
    classes: np.ndarray  # (C,)
    means: np.ndarray  # (C, k)
    chol: np.ndarray  # (k, k) lower Cholesky factor of the regularized pooled covariance
    priors: np.ndarray  # (C,)

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def _weights(self):
        # S^-1 mu_c via two triangular solves
        w = np.linalg.solve(self.chol.T, np.linalg.solve(self.chol, self.means.T))
        bias = -0.5 * np.einsum("ck,kc->c", self.means, w) + np.log(self.priors)
        return w, bias

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[-1]}")
        w, bias = self._weights()
        return X @ w + bias


def lda_fit(X, y, ridge: float = RIDGE) -> LdaModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise FitError("X must be (n, k) with one label per row")
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    if classes.size < 2:
        raise FitError("LDA needs at least two classes")
    if counts.min() < 2:
        raise FitError(f"class {classes[np.argmin(counts)]!r} has fewer than two samples")
    n, k = X.shape
    means = np.zeros((classes.size, k))
    np.add.at(means, inverse, X)
    means /= counts[:, None]
    R = X - means[inverse]
    S = R.T @ R / (n - classes.size)
    S += ridge * (np.trace(S) / k) * np.eye(k)
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise FitError("pooled covariance is not positive definite after regularization") from exc
    if not np.all(np.diag(chol) > 0) or not np.all(np.isfinite(chol)):
        raise FitError("pooled covariance is not positive definite after regularization")
    return LdaModel(classes, means, chol, counts / n)


def lda_predict(model: LdaModel, x):
    """Class label(s) maximizing the discriminant; ties go to the lowest class index."""
    s = model.scores(x)
    return model.classes[np.argmax(s, axis=-1)]


@dataclass(frozen=True)
class Classifier:
    """KL reduction followed by LDA, fitted together on one training set."""

    kl: KlTransform
    k: int
    lda: LdaModel

    @classmethod
    def fit(cls, X, y, k: int | None = None) -> Classifier:
        X = np.asarray(X, dtype=np.float64)
        kl = kl_fit(X)
        if k is None:
            k = choose_components(kl, X.shape[0], np.unique(y).size)
        return cls(kl, k, lda_fit(kl_project(kl, X, k), y))

    def predict(self, X):
        return lda_predict(self.lda, kl_project(self.kl, X, self.k))


def save_model(path: str | os.PathLike, clf: Classifier, config: dict | None = None) -> None:
    """Write a versioned ``.npz`` bundle with arrays and a JSON config snapshot."""
    meta = {"format": "pplbp-model", "version": MODEL_FORMAT_VERSION, "k": clf.k, "config": config or {}}
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
        kl_mean=clf.kl.mean,
        kl_basis=clf.kl.basis,
        kl_eigenvalues=clf.kl.eigenvalues,
        classes=clf.lda.classes.astype(str) if clf.lda.classes.dtype == object else clf.lda.classes,
        class_means=clf.lda.means,
        cov_chol=clf.lda.chol,
        priors=clf.lda.priors,
    )
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path: str | os.PathLike) -> tuple[Classifier, dict]:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(z["meta"].tobytes().decode())
        if meta.get("format") != "pplbp-model":
            raise ValueError(f"{path} is not a pplbp model file")
        if meta.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model version {meta.get('version')}")
        kl = KlTransform(z["kl_mean"], z["kl_basis"], z["kl_eigenvalues"])
        lda = LdaModel(z["classes"], z["class_means"], z["cov_chol"], z["priors"])
    return Classifier(kl, int(meta["k"]), lda), meta["config"]


def accuracy(y_true: Sequence, y_pred: Sequence) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))
