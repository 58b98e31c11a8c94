"""Soft-margin kernel SVM trained by SMO, with a one-vs-all multi-class wrapper."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KERNELS = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "polynomial"
    degree: int = 2
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"kernel kind must be one of {KERNELS}, got {self.kind!r}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("polynomial degree must be an integer >= 1")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``linear``, ``poly:D`` or ``rbf:G``."""
        name, _, arg = text.partition(":")
        if name == "linear" and not arg:
            return cls("linear")
        if name in ("poly", "polynomial") and arg:
            return cls("polynomial", degree=int(arg))
        if name == "rbf" and arg:
            return cls("rbf", gamma=float(arg))
        raise ValueError(f"cannot parse kernel {text!r}; expected linear, poly:D or rbf:G")

    def __str__(self) -> str:
        if self.kind == "linear":
            return "linear"
        return f"poly:{self.degree}" if self.kind == "polynomial" else f"rbf:{self.gamma:g}"

    def gram(self, A, B) -> np.ndarray:
        """Kernel matrix between the rows of A and the rows of B."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        if self.kind == "rbf":
            sq = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2.0 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        G = A @ B.T
        return G if self.kind == "linear" else (G + 1.0) ** self.degree


def kernel_eval(k: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(k.gram(u[None], v[None])[0, 0])


@dataclass
class BinarySvm:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    C: float
    iterations: int = 0

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got {X.shape[1]}")
        if self.dual_coeffs.size == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel.gram(X, self.support_vectors) @ self.dual_coeffs + self.bias

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def negated(self) -> "BinarySvm":
        return BinarySvm(self.support_vectors, -self.dual_coeffs, -self.bias, self.kernel, self.C,
                         self.iterations)


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    gap: float


def dual_objective(alpha, Q) -> float:
    """W(alpha) = sum(alpha) - alpha' Q alpha / 2 with Q_ij = y_i y_j K_ij."""
    return float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 100_000) -> SmoResult:
    """Solve max W(alpha) s.t. 0 <= alpha <= C, y'alpha = 0 on a precomputed Gram matrix.

    Working pairs are the maximal KKT violators; stops when m(alpha) - M(alpha) < tol.
    """
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the minimization objective alpha'Q alpha/2 - sum(alpha)
    tau = 1e-12
    it = 0
    gap = np.inf
    while it < max_iter:
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = score[i] - score[j]
        if gap < tol:
            break
        it += 1
        curv = max(K[i, i] + K[j, j] - 2.0 * K[i, j], tau)
        # step along d = y_i e_i - y_j e_j, clipped to the box
        step = gap / curv
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, lim_i, lim_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        grad += step * (y[i] * Q[:, i] - y[j] * Q[:, j])
    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(score[free].mean())
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = score[up].max() if up.any() else score[low].min()
        lo = score[low].min() if low.any() else hi
        bias = float((hi + lo) / 2.0)
    return SmoResult(alpha, bias, it, float(gap))


def train_binary_svm(X, y, C: float = 0.95, kernel: KernelSpec = KernelSpec(), tol: float = 1e-3) -> BinarySvm:
    """Train a soft-margin SVM on labels in {-1, +1}."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size:
        raise ValueError("X and y must have the same number of rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("binary labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise ValueError("binary SVM needs both classes present")
    if not C > 0:
        raise ValueError("C must be positive")
    res = smo(kernel.gram(X, X), y, C, tol)
    sv = res.alpha > 0
    return BinarySvm(X[sv].copy(), res.alpha[sv] * y[sv], res.bias, kernel, float(C), res.iterations)


@dataclass
class MulticlassSvm:
    binaries: list[BinarySvm]
    class_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.class_ids is None:
            self.class_ids = np.arange(1, len(self.binaries) + 1)
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64)
        if len(self.binaries) != self.class_ids.size:
            raise ValueError("need exactly one binary SVM per class")

    @property
    def dim(self) -> int:
        return self.binaries[0].dim

    def decision_values(self, X) -> np.ndarray:
        return np.column_stack([b.decision_function(X) for b in self.binaries])

    def predict(self, X) -> np.ndarray:
        """Class with the largest one-vs-all decision value (lowest id on ties)."""
        return self.class_ids[np.argmax(self.decision_values(X), axis=1)]


def train_multiclass(X, labels, C: float = 0.95, kernel: KernelSpec = KernelSpec(), tol: float = 1e-3) -> MulticlassSvm:
    """One-vs-all over the classes present in ``labels``.

    With two classes the second machine is the exact negation of the first,
    which is the solution of the mirrored dual.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("multi-class training needs at least two classes")
    first = train_binary_svm(X, np.where(labels == classes[0], 1.0, -1.0), C, kernel, tol)
    if classes.size == 2:
        return MulticlassSvm([first, first.negated()], classes)
    rest = [train_binary_svm(X, np.where(labels == c, 1.0, -1.0), C, kernel, tol) for c in classes[1:]]
    return MulticlassSvm([first, *rest], classes)


def predict(model: MulticlassSvm, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector; use model.predict for batches")
    return int(model.predict(x[None])[0])
