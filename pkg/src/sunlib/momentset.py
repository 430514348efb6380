"""Container for moments up to the fourth order in the ``vec`` layout."""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .errors import ShapeMismatch


@dataclass(frozen=True)
class MomentSet:
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    kind: str = "raw"

    def __post_init__(self):
        m1 = np.atleast_1d(np.asarray(self.m1, dtype=float))
        p = m1.shape[0]
        shapes = {"m2": (p, p), "m3": (p * p, p), "m4": (p * p, p * p)}
        for name, shape in shapes.items():
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != shape:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "m1", m1)
        if self.kind not in ("raw", "central"):
            raise ValueError(f"kind must be 'raw' or 'central', not {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.m1.shape[0]

    @property
    def variance(self):
        return self.m2 - np.outer(self.m1, self.m1)

    def as_dict(self):
        return {"m1": self.m1.tolist(), "m2": self.m2.tolist(), "m3": self.m3.tolist(), "m4": self.m4.tolist()}

    def with_kind(self, kind):
        return replace(self, kind=kind)

    def max_abs_diff(self, other: "MomentSet") -> float:
        return max(float(np.max(np.abs(getattr(self, k) - getattr(other, k)))) for k in ("m1", "m2", "m3", "m4"))


def from_product_moments(p: int, moment) -> tuple:
    """Assemble ``(m1, m2, m3, m4)`` from a function returning E[prod X_idx]
    for a sorted index tuple."""
    m1 = np.array([moment((i,)) for i in range(p)])
    m2 = np.empty((p, p))
    m3 = np.empty((p * p, p))
    m4 = np.empty((p * p, p * p))
    for i, j in product(range(p), repeat=2):
        m2[i, j] = moment(tuple(sorted((i, j))))
    for i, j, k in product(range(p), repeat=3):
        m3[i + j * p, k] = moment(tuple(sorted((i, j, k))))
    for i, j, k, l in product(range(p), repeat=4):
        m4[i + j * p, k + l * p] = moment(tuple(sorted((i, j, k, l))))
    return m1, m2, m3, m4


def empirical_moments(X, weights=None) -> MomentSet:
    """Plug-in raw moments of the rows of ``X`` (optionally weighted)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, float) / np.sum(weights)
    XX = (X[:, :, None] * X[:, None, :]).reshape(n, p * p, order="F")
    m1 = w @ X
    m2 = (X * w[:, None]).T @ X
    m3 = (XX * w[:, None]).T @ X
    m4 = (XX * w[:, None]).T @ XX
    return MomentSet(m1, m2, m3, m4)


def _products(X):
    n, p = X.shape
    XX = (X[:, :, None] * X[:, None, :]).reshape(n, p * p, order="F")
    XXX = (XX[:, :, None] * X[:, None, :]).reshape(n, p**3, order="F")
    XXXX = (XX[:, :, None] * XX[:, None, :]).reshape(n, p**4, order="F")
    return X, XX, XXX, XXXX


class MomentAccumulator:
    """Streaming raw moments with entrywise standard errors.

    With weights the estimate is self-normalised and its standard error is the
    usual delta-method approximation.
    """

    def __init__(self, p: int):
        self.p = p
        self.n = 0
        self.sw = 0.0
        self.sw2 = 0.0
        self.swf = [np.zeros(p**k) for k in range(1, 5)]
        self.sw2f = [np.zeros(p**k) for k in range(1, 5)]
        self.sw2f2 = [np.zeros(p**k) for k in range(1, 5)]

    def add(self, X, weights=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=float)
        self.n += len(X)
        self.sw += w.sum()
        self.sw2 += (w * w).sum()
        for k, f in enumerate(_products(X)):
            self.swf[k] += w @ f
            self.sw2f[k] += (w * w) @ f
            self.sw2f2[k] += (w * w) @ (f * f)
        return self

    def result(self):
        p = self.p
        shapes = [(p,), (p, p), (p * p, p), (p * p, p * p)]
        est, se = [], []
        for k, shape in enumerate(shapes):
            mean = self.swf[k] / self.sw
            var_sum = self.sw2f2[k] - 2 * mean * self.sw2f[k] + mean**2 * self.sw2
            est.append(mean.reshape(shape, order="F"))
            se.append((np.sqrt(np.maximum(var_sum, 0.0)) / self.sw).reshape(shape, order="F"))
        return MomentSet(*est), MomentSet(*se)
