"""Binary soft-margin SVM trained by sequential minimal optimization.

The solver works on the dual

    min_a  1/2 a'Qa - sum(a)   s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K(x_i, x_j)

and picks each working pair by the maximal-violation / second-order rule, so
the stopping gap directly bounds the KKT residual of every sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

KERNELS = ("linear", "gaussian", "quadratic")
_TAU = 1e-12


class SingleClassError(ValueError):
    """Training labels contain only one class."""


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float | None = None  # gaussian; None = derive from training data
    coef0: float = 1.0  # quadratic

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if self.gamma is not None and not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        if not math.isfinite(self.coef0):
            raise ValueError("coef0 must be finite")

    def resolve(self, xs: np.ndarray) -> "KernelSpec":
        """Fill in gamma = 1 / (n_features * var(X)) for an unset gaussian."""
        if self.kind != "gaussian" or self.gamma is not None:
            return self
        xs = np.asarray(xs, dtype=float)
        var = float(xs.var())
        n_features = xs.shape[1]
        gamma = 1.0 / (n_features * var) if var > 0 else 1.0 / n_features
        return KernelSpec("gaussian", gamma, self.coef0)


def gram(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == "linear":
        return a @ b.T
    if spec.kind == "quadratic":
        return (a @ b.T + spec.coef0) ** 2
    if spec.gamma is None:
        raise ValueError("gaussian kernel needs gamma; call KernelSpec.resolve first")
    sq = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-spec.gamma * sq)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(gram(spec, x[None, :], y[None, :])[0, 0])


@dataclass(frozen=True, eq=False)
class SvmModel:
    kernel: KernelSpec
    support_vectors: np.ndarray
    alphas_signed: np.ndarray
    bias: float
    c: float
    n_features: int
    converged: bool = True
    iterations: int = 0

    def __eq__(self, other):
        if not isinstance(other, SvmModel):
            return NotImplemented
        return (self.kernel == other.kernel and self.bias == other.bias and self.c == other.c
                and self.n_features == other.n_features and self.converged == other.converged
                and self.iterations == other.iterations
                and np.array_equal(self.support_vectors, other.support_vectors)
                and np.array_equal(self.alphas_signed, other.alphas_signed))

    def dual_objective(self) -> float:
        """sum(a) - 1/2 a'Qa, evaluated from the support set alone."""
        if len(self.alphas_signed) == 0:
            return 0.0
        k = gram(self.kernel, self.support_vectors, self.support_vectors)
        a = self.alphas_signed
        return float(np.abs(a).sum() - 0.5 * a @ k @ a)

    def decision_function(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[1] != self.n_features:
            raise ValueError(f"dimension mismatch: model has {self.n_features} features, got {xs.shape[1]}")
        if len(self.alphas_signed) == 0:
            return np.full(len(xs), self.bias)
        return gram(self.kernel, xs, self.support_vectors) @ self.alphas_signed + self.bias

    def predict(self, xs) -> np.ndarray:
        return np.where(self.decision_function(xs) >= 0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "kernel": {"kind": self.kernel.kind, "gamma": self.kernel.gamma, "coef0": self.kernel.coef0},
            "c": self.c,
            "bias": self.bias,
            "n_features": self.n_features,
            "converged": self.converged,
            "iterations": self.iterations,
            "support_vectors": self.support_vectors.tolist(),
            "alphas_signed": self.alphas_signed.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        k = d["kernel"]
        sv = np.asarray(d["support_vectors"], dtype=float).reshape(-1, d["n_features"])
        return cls(KernelSpec(k["kind"], k["gamma"], k["coef0"]), sv,
                   np.asarray(d["alphas_signed"], dtype=float), d["bias"], d["c"],
                   d["n_features"], d["converged"], d["iterations"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def predict_svm(model: SvmModel, x) -> tuple[int, float]:
    """Label in {-1, +1} and raw score for one sample; a zero score maps to +1."""
    score = float(model.decision_function(np.asarray(x, dtype=float)[None, :])[0])
    return (1 if score >= 0 else -1), score


def train_svm(xs, ys, kernel: KernelSpec = KernelSpec(), c: float = 1.0, tol: float = 1e-3,
              max_passes: int = 100, seed: int = 0) -> SvmModel:
    """Fit an SVM; ``ys`` must be in {-1, +1}.

    The iteration budget is ``max_passes * n`` pair updates. Exhausting it
    returns a usable model with ``converged=False``.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 2:
        raise ValueError("xs must be a 2-D array of equal-length vectors")
    n = len(x)
    if n < 2 or len(y) != n:
        raise ValueError(f"need >= 2 samples with one label each, got {n} samples / {len(y)} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise SingleClassError(f"all {n} training labels are {int(y[0])}")
    if not (c > 0 and math.isfinite(c)):
        raise ValueError(f"c must be finite and > 0, got {c}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature value")
    kernel = kernel.resolve(x)

    # the seed fixes the visiting order, which decides ties in pair selection
    perm = np.random.default_rng(seed).permutation(n)
    xp, yp = x[perm], y[perm]
    k = gram(kernel, xp, xp)
    q = (yp[:, None] * yp[None, :]) * k
    diag = np.diag(k).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)

    max_iter = max_passes * n
    it = 0
    converged = False
    while it < max_iter:
        up = ((yp > 0) & (alpha < c)) | ((yp < 0) & (alpha > 0))
        low = ((yp < 0) & (alpha < c)) | ((yp > 0) & (alpha > 0))
        viol = -yp * grad
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        gmax = viol[i]
        gmin = np.min(np.where(low, viol, np.inf))
        if gmax - gmin < tol:
            converged = True
            break
        # second-order choice of j among violating partners
        cand = low & (viol < gmax)
        b = gmax - viol
        a = diag[i] + diag - 2.0 * k[i]
        a = np.where(a > 0, a, _TAU)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))

        old_i, old_j = alpha[i], alpha[j]
        if yp[i] != yp[j]:
            quad = max(diag[i] + diag[j] + 2 * q[i, j], _TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > c:
                    alpha[i], alpha[j] = c, c - diff
            elif alpha[j] > c:
                alpha[j], alpha[i] = c, c + diff
        else:
            quad = max(diag[i] + diag[j] - 2 * q[i, j], _TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > c:
                if alpha[i] > c:
                    alpha[i], alpha[j] = c, total - c
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > c:
                if alpha[j] > c:
                    alpha[j], alpha[i] = c, total - c
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        grad += q[:, i] * (alpha[i] - old_i) + q[:, j] * (alpha[j] - old_j)
        it += 1

    viol = -yp * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        bias = float(viol[free].mean())
    else:
        up = ((yp > 0) & (alpha < c)) | ((yp < 0) & (alpha > 0))
        low = ((yp < 0) & (alpha < c)) | ((yp > 0) & (alpha > 0))
        hi = viol[up].max() if up.any() else viol[low].min()
        lo = viol[low].min() if low.any() else hi
        bias = float((hi + lo) / 2)

    # report in the caller's sample order
    alpha_orig = np.empty(n)
    alpha_orig[perm] = alpha
    sv = alpha_orig > 0
    return SvmModel(kernel, x[sv].copy(), (alpha_orig * y)[sv], bias, float(c), x.shape[1],
                    converged, it)
