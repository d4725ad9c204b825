"""Analytic synthetic densities with exact pdf, cdf, and sampling.

All benchmark targets are products of independent 1-D marginals, each
marginal a finite mixture of closed-form primitives.  Exact pdfs give
the MAE oracle; exact cdfs back the KS agreement tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigError


class Uniform:
    """Uniform(a, b) on the interval [a, b]."""

    def __init__(self, a: float, b: float):
        if not b > a:
            raise ConfigError(f"uniform needs a < b, got ({a}, {b})")
        self.a = float(a)
        self.b = float(b)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def sample(self, n, rng):
        return rng.uniform(self.a, self.b, size=n)

    def mean(self):
        return 0.5 * (self.a + self.b)

    params = property(lambda self: {"a": self.a, "b": self.b})


class Beta:
    """Beta(alpha, beta) on [0, 1]."""

    def __init__(self, alpha: float, beta: float):
        if alpha <= 0 or beta <= 0:
            raise ConfigError("beta shape parameters must be positive")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self._log_norm = (
            math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)
        )

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < 1.0)
        safe = np.where(inside, x, 0.5)
        log_pdf = (
            (self.alpha - 1.0) * np.log(safe)
            + (self.beta - 1.0) * np.log1p(-safe)
            - self._log_norm
        )
        return np.where(inside, np.exp(log_pdf), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return special.betainc(self.alpha, self.beta, np.clip(x, 0.0, 1.0))

    def sample(self, n, rng):
        return rng.beta(self.alpha, self.beta, size=n)

    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    params = property(lambda self: {"alpha": self.alpha, "beta": self.beta})


class Laplace:
    """Laplace(loc, scale) with density exp(-|x - loc|/scale) / (2 scale)."""

    def __init__(self, loc: float, scale: float):
        if scale <= 0:
            raise ConfigError("laplace scale must be positive")
        self.loc = float(loc)
        self.scale = float(scale)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.abs(x - self.loc) / self.scale) / (2.0 * self.scale)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.loc) / self.scale
        return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))

    def sample(self, n, rng):
        return rng.laplace(self.loc, self.scale, size=n)

    def mean(self):
        return self.loc

    params = property(lambda self: {"loc": self.loc, "scale": self.scale})


class Exponential:
    """Exponential with rate lambda (mean 1/lambda), supported on [0, inf)."""

    def __init__(self, rate: float):
        if rate <= 0:
            raise ConfigError("exponential rate must be positive")
        self.rate = float(rate)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def sample(self, n, rng):
        return rng.exponential(scale=1.0 / self.rate, size=n)

    def mean(self):
        return 1.0 / self.rate

    params = property(lambda self: {"rate": self.rate})


_PRIMITIVES = {"uniform": Uniform, "beta": Beta, "laplace": Laplace, "exponential": Exponential}


def _primitive_name(prim) -> str:
    return {Uniform: "uniform", Beta: "beta", Laplace: "laplace", Exponential: "exponential"}[
        type(prim)
    ]


class Mixture1D:
    """Finite mixture of 1-D primitives with positive weights summing to 1."""

    def __init__(self, components: list[tuple[float, object]]):
        weights = np.array([w for w, _ in components], dtype=float)
        if np.any(weights <= 0):
            raise ConfigError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights must sum to 1, got {weights.sum()}")
        self.weights = weights
        self.primitives = [p for _, p in components]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, prim in zip(self.weights, self.primitives):
            out += w * prim.pdf(x)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, prim in zip(self.weights, self.primitives):
            out += w * prim.cdf(x)
        return out

    def sample(self, n, rng):
        choice = rng.choice(len(self.primitives), size=n, p=self.weights)
        out = np.empty(n, dtype=float)
        for k, prim in enumerate(self.primitives):
            mask = choice == k
            count = int(mask.sum())
            if count:
                out[mask] = prim.sample(count, rng)
        return out

    def mean(self):
        return float(sum(w * p.mean() for w, p in zip(self.weights, self.primitives)))


@dataclass(frozen=True)
class DensitySpec:
    """Product density over independent per-dimension mixtures."""

    name: str
    marginals: tuple[Mixture1D, ...]

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Exact density at one point (d,) or a batch (n, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[1] != self.dim:
            raise ConfigError(f"points have dimension {pts.shape[1]}, spec has {self.dim}")
        out = np.ones(pts.shape[0])
        for i, marginal in enumerate(self.marginals):
            out *= marginal.pdf(pts[:, i])
        return float(out[0]) if single else out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n iid points, dimension by dimension."""
        out = np.empty((n, self.dim), dtype=float)
        for i, marginal in enumerate(self.marginals):
            out[:, i] = marginal.sample(n, rng)
        return out

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "d": self.dim,
            "marginals": [
                [
                    {"weight": float(w), "type": _primitive_name(p), **p.params}
                    for w, p in zip(m.weights, m.primitives)
                ]
                for m in self.marginals
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DensitySpec":
        marginals = []
        for comps in obj["marginals"]:
            parts = []
            for comp in comps:
                comp = dict(comp)
                weight = comp.pop("weight")
                kind = comp.pop("type")
                parts.append((weight, _PRIMITIVES[kind](**comp)))
            marginals.append(Mixture1D(parts))
        return cls(name=obj["name"], marginals=tuple(marginals))


# Exp(0.5) read as scale 0.5 (rate 2, mean 0.5): the reported Type IV error
# magnitudes and entropy levels only make sense on that density scale.
# Laplace(0, 1/2) is location 0, scale 1/2.
_TYPE_MIXTURES = {
    "type-i": lambda: Mixture1D([(0.3, Uniform(0.7, 1.0)), (0.7, Uniform(0.0, 0.4))]),
    "type-ii": lambda: Mixture1D([(0.5, Beta(2, 10)), (0.5, Uniform(0.5, 1.0))]),
    "type-iii": lambda: Mixture1D([(0.5, Laplace(0.0, 0.5)), (0.5, Uniform(2.0, 4.0))]),
    "beta-toy": lambda: Mixture1D([(1.0, Beta(3, 10))]),
}

KINDS = ("type-i", "type-ii", "type-iii", "type-iv", "beta-toy")


def make_type(kind: str, d: int) -> DensitySpec:
    """Build one of the benchmark densities in dimension d.

    Types I-III and the Beta toy use iid marginals.  Type IV puts an
    Exponential(rate 0.5) on the first d-1 dimensions and Uniform(0, 5)
    on the last, so it needs d >= 2.
    """
    kind = kind.lower()
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    if kind == "type-iv":
        if d < 2:
            raise ConfigError("type-iv needs d >= 2 (d-1 exponential dims plus one uniform)")
        marginals = tuple(
            Mixture1D([(1.0, Exponential(2.0))]) for _ in range(d - 1)
        ) + (Mixture1D([(1.0, Uniform(0.0, 5.0))]),)
        return DensitySpec(name=f"type-iv-d{d}", marginals=marginals)
    if kind not in _TYPE_MIXTURES:
        raise ConfigError(f"unknown density kind {kind!r}; choose from {KINDS}")
    marginals = tuple(_TYPE_MIXTURES[kind]() for _ in range(d))
    return DensitySpec(name=f"{kind}-d{d}", marginals=marginals)
