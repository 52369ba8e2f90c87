"""Delay distributions for random clocks and their product density."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _out(x, v):
    return float(v) if np.ndim(x) == 0 else v


@dataclass(frozen=True)
class FoldedNormal:
    """|Z| for Z ~ Normal(mu, sigma); sigma is the standard deviation."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"folded normal needs sigma > 0, got {self.sigma}")
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ValueError(f"folded normal needs mu >= 0, got {self.mu}")

    kind = "folded_normal"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a = (x - self.mu) / self.sigma
        b = (x + self.mu) / self.sigma
        v = (np.exp(-0.5 * a * a) + np.exp(-0.5 * b * b)) * (_INV_SQRT2PI / self.sigma)
        return _out(x, np.where(x >= 0, v, 0.0))

    def cdf(self, x):
        # erf is odd, so this form has no cancellation near 0
        x = np.asarray(x, dtype=float)
        s = self.sigma * _SQRT2
        v = 0.5 * (special.erf((x + self.mu) / s) + special.erf((x - self.mu) / s))
        return _out(x, np.where(x > 0, v, 0.0))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma * _SQRT2
        v = 0.5 * (special.erfc((x - self.mu) / s) + special.erfc((x + self.mu) / s))
        return _out(x, np.where(x > 0, v, 1.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Exponential:
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"exponential needs lambda > 0, got {self.lam}")

    kind = "exponential"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(x, np.where(x >= 0, self.lam * np.exp(-self.lam * np.maximum(x, 0)), 0.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(x, np.where(x > 0, -np.expm1(-self.lam * np.maximum(x, 0)), 0.0))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(x, np.where(x > 0, np.exp(-self.lam * np.maximum(x, 0)), 1.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam}


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (0 <= self.a < self.b and math.isfinite(self.b)):
            raise ValueError(f"uniform needs 0 <= a < b, got [{self.a}, {self.b}]")

    kind = "uniform"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        return _out(x, np.where(inside, 1.0 / (self.b - self.a), 0.0))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(x, np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(x, np.clip((self.b - x) / (self.b - self.a), 0.0, 1.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


ContinuousDistribution = Union[FoldedNormal, Exponential, Uniform]


def distribution_from_dict(d: dict) -> ContinuousDistribution:
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError(f"distribution literal needs a 'kind': {d!r}")
    kind = d["kind"]
    try:
        if kind == "folded_normal":
            return FoldedNormal(float(d["mu"]), float(d["sigma"]))
        if kind == "exponential":
            return Exponential(float(d["lambda"]))
        if kind == "uniform":
            return Uniform(float(d["a"]), float(d["b"]))
    except KeyError as exc:
        raise ValueError(f"distribution {kind!r} misses parameter {exc}") from None
    raise ValueError(f"unknown distribution kind {kind!r}")


@dataclass(frozen=True)
class JointDensity:
    """Product of independent factors, one per enrolled delay."""

    factors: tuple

    def __init__(self, factors: Sequence[ContinuousDistribution]):
        object.__setattr__(self, "factors", tuple(factors))

    @property
    def dim(self) -> int:
        return len(self.factors)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        out = np.ones(pts.shape[0])
        for i, f in enumerate(self.factors):
            out = out * f.pdf(pts[:, i])
        return float(out[0]) if single else out

    def box_mass(self, lo: Sequence[float], hi: Sequence[float]) -> float:
        """Probability of an axis box, by factor independence."""
        m = 1.0
        for f, a, b in zip(self.factors, lo, hi):
            m *= max(0.0, f.cdf(b) - f.cdf(a))
        return m
