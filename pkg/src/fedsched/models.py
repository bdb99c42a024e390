"""Loss functions with analytic gradients over flat parameter vectors.

Every model works on a 1-D parameter vector ``w`` so that aggregation and the
online estimators can treat all of them alike. Losses are sample means.
"""
from __future__ import annotations

import math

import numpy as np


def _softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    n = len(labels)
    loss = float(np.mean(logsum - z[np.arange(n), labels]))
    p = np.exp(z - logsum[:, None])
    p[np.arange(n), labels] -= 1.0
    return loss, p / n


class Model:
    kind = "base"
    classification = True

    def __init__(self, dims: int, classes: int = 1):
        self.dims = dims
        self.classes = classes

    @property
    def parameter_count(self) -> int:
        raise NotImplementedError

    def init(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.parameter_count)

    def loss_and_grad(self, w, X, y) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def loss(self, w, X, y) -> float:
        return self.loss_and_grad(w, X, y)[0]

    def grad(self, w, X, y) -> np.ndarray:
        return self.loss_and_grad(w, X, y)[1]

    def predict(self, w, X) -> np.ndarray:
        raise NotImplementedError

    def accuracy(self, w, X, y) -> float:
        if not self.classification:
            return math.nan
        return float(np.mean(self.predict(w, X) == y))

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims}, classes={self.classes})"


class LinearRegression(Model):
    """``0.5 * (y - w.x)^2``; no intercept."""

    kind = "linear"
    classification = False

    @property
    def parameter_count(self):
        return self.dims

    def loss_and_grad(self, w, X, y):
        r = X @ w - y
        return 0.5 * float(np.mean(r * r)), X.T @ r / len(y)

    def predict(self, w, X):
        return X @ w


class _LinearClassifier(Model):
    # weights (dims, classes) followed by a bias per class

    @property
    def parameter_count(self):
        return (self.dims + 1) * self.classes

    def _unpack(self, w):
        k = self.dims * self.classes
        return w[:k].reshape(self.dims, self.classes), w[k:]

    def predict(self, w, X):
        W, b = self._unpack(w)
        return np.argmax(X @ W + b, axis=1)


class LogisticRegression(_LinearClassifier):
    """Multinomial logistic regression (softmax cross-entropy)."""

    kind = "logistic"

    def loss_and_grad(self, w, X, y):
        W, b = self._unpack(w)
        loss, dz = _softmax_xent(X @ W + b, y)
        return loss, np.concatenate([(X.T @ dz).ravel(), dz.sum(axis=0)])


class SquaredSVM(_LinearClassifier):
    """One-vs-rest squared-hinge SVM with L2 penalty on the weights.

    Per sample and class: ``0.5 * max(0, 1 - t * (w_c.x + b_c))^2`` with
    ``t = +1`` for the true class and ``-1`` otherwise, plus
    ``lam / 2 * ||W||^2``.
    """

    kind = "svm"

    def __init__(self, dims: int, classes: int = 2, lam: float = 1e-3):
        super().__init__(dims, classes)
        self.lam = lam

    def loss_and_grad(self, w, X, y):
        W, b = self._unpack(w)
        t = -np.ones((len(y), self.classes))
        t[np.arange(len(y)), y] = 1.0
        slack = np.maximum(0.0, 1.0 - t * (X @ W + b))
        n = len(y)
        loss = 0.5 * float(np.sum(slack * slack)) / n + 0.5 * self.lam * float(np.sum(W * W))
        dz = -t * slack / n
        gW = X.T @ dz + self.lam * W
        return loss, np.concatenate([gW.ravel(), dz.sum(axis=0)])


class MLP(Model):
    """One hidden ReLU layer, softmax output, cross-entropy loss."""

    kind = "mlp"

    def __init__(self, dims: int, classes: int, hidden: int = 64):
        super().__init__(dims, classes)
        self.hidden = hidden

    @property
    def parameter_count(self):
        return self.dims * self.hidden + self.hidden + self.hidden * self.classes + self.classes

    def _unpack(self, w):
        d, hdim, c = self.dims, self.hidden, self.classes
        i = 0
        W1 = w[i:i + d * hdim].reshape(d, hdim); i += d * hdim
        b1 = w[i:i + hdim]; i += hdim
        W2 = w[i:i + hdim * c].reshape(hdim, c); i += hdim * c
        b2 = w[i:i + c]
        return W1, b1, W2, b2

    def init(self, rng):
        d, hdim, c = self.dims, self.hidden, self.classes
        l1 = math.sqrt(6.0 / (d + hdim))
        l2 = math.sqrt(6.0 / (hdim + c))
        return np.concatenate([rng.uniform(-l1, l1, d * hdim), np.zeros(hdim),
                               rng.uniform(-l2, l2, hdim * c), np.zeros(c)])

    def loss_and_grad(self, w, X, y):
        W1, b1, W2, b2 = self._unpack(w)
        pre = X @ W1 + b1
        act = np.maximum(pre, 0.0)
        loss, dz = _softmax_xent(act @ W2 + b2, y)
        gW2 = act.T @ dz
        dact = (dz @ W2.T) * (pre > 0)
        gW1 = X.T @ dact
        return loss, np.concatenate([gW1.ravel(), dact.sum(axis=0), gW2.ravel(), dz.sum(axis=0)])

    def predict(self, w, X):
        W1, b1, W2, b2 = self._unpack(w)
        return np.argmax(np.maximum(X @ W1 + b1, 0.0) @ W2 + b2, axis=1)


MODEL_KINDS = ("linear", "svm", "logistic", "mlp")


def make_model(kind: str, dims: int, classes: int = 1, *, hidden: int = 64,
               svm_lambda: float = 1e-3) -> Model:
    kind = kind.lower()
    if kind == "linear":
        return LinearRegression(dims)
    if kind == "svm":
        return SquaredSVM(dims, classes, svm_lambda)
    if kind == "logistic":
        return LogisticRegression(dims, classes)
    if kind == "mlp":
        return MLP(dims, classes, hidden)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
