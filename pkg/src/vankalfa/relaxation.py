"""Chebyshev and Richardson outer iterations around an additive Vanka preconditioner.

Both act on the preconditioned operator ``T = M^{-1} K``.  A relaxation is
described by its error polynomial, a product of factors ``1 - w t``:
Chebyshev of degree k over ``[alpha, beta]`` has ``w = 1/r`` for the k
Chebyshev roots ``r`` of the interval; Richardson has ``nu`` factors of
weight ``omega``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .patches import WeightScheme

__all__ = [
    "SMOOTHERS",
    "RelaxConfig",
    "chebyshev_residual_poly",
    "chebyshev_roots",
    "chebyshev_recurrence_value",
    "relaxation_symbol",
    "matrix_polynomial",
    "apply_relaxation",
]

SMOOTHERS = ("chebyshev", "richardson")


def _check_interval(alpha, beta):
    if not (alpha > 0 and beta > alpha):
        raise ValueError(f"Chebyshev interval needs 0 < alpha < beta, got [{alpha}, {beta}]")


def chebyshev_residual_poly(k: int, alpha: float, beta: float) -> Polynomial:
    """``p_k(t) = T_k((beta+alpha-2t)/(beta-alpha)) / T_k((beta+alpha)/(beta-alpha))``."""
    _check_interval(alpha, beta)
    if k < 1:
        raise ValueError("Chebyshev degree must be at least 1")
    Tk = Chebyshev.basis(k).convert(kind=Polynomial)
    s = Polynomial([(beta + alpha) / (beta - alpha), -2.0 / (beta - alpha)])
    return Tk(s) / Tk((beta + alpha) / (beta - alpha))


def chebyshev_roots(k: int, alpha: float, beta: float) -> np.ndarray:
    _check_interval(alpha, beta)
    j = np.arange(1, k + 1)
    return (beta + alpha) / 2 - (beta - alpha) / 2 * np.cos((2 * j - 1) * np.pi / (2 * k))


def chebyshev_recurrence_value(k: int, alpha: float, beta: float, t):
    """``p_k(t)`` through the three-term recurrence used by :func:`apply_relaxation`."""
    t = np.asarray(t, dtype=float)
    e = np.ones_like(t)
    x = np.zeros_like(t)  # scalar model: K = t, M = 1, b = t * 1, exact solution 1
    _chebyshev(k, alpha, beta, lambda v: t * v, lambda v: v, x, t * e)
    return e - x


@dataclass(frozen=True)
class RelaxConfig:
    """Relaxation parameters.

    Chebyshev uses ``k`` and ``interval``; ``nu1``/``nu2`` (0 or 1) switch the
    pre- and post-smoothing polynomial on.  Richardson applies ``nu1`` sweeps
    of weight ``omega1`` before and ``nu2`` sweeps of ``omega2`` after the
    coarse-grid correction.
    """

    smoother: str = "chebyshev"
    k: int = 1
    interval: tuple = (0.1, 8.3)
    nu1: int = 1
    nu2: int = 1
    omega1: float = 1.0
    omega2: float = 1.0
    weights: WeightScheme = field(default_factory=WeightScheme)

    def __post_init__(self):
        if self.smoother not in SMOOTHERS:
            raise ValueError(f"unknown smoother {self.smoother!r}; expected one of {SMOOTHERS}")
        if self.nu1 < 0 or self.nu2 < 0 or self.nu1 + self.nu2 < 1:
            raise ValueError("need nu1, nu2 >= 0 and nu1 + nu2 >= 1")
        if self.smoother == "chebyshev":
            if self.k < 1:
                raise ValueError("Chebyshev degree must be at least 1")
            if len(self.interval) != 2:
                raise ValueError("interval must be a pair [alpha, beta]")
            _check_interval(*self.interval)
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        object.__setattr__(self, "weights", WeightScheme.parse(self.weights))

    @property
    def sweeps(self):
        """Preconditioner applications per cycle."""
        if self.smoother == "chebyshev":
            return self.k * (self.nu1 + self.nu2)
        return self.nu1 + self.nu2

    def factors(self):
        """Weights ``w`` of the factors ``1 - w t`` for the pre and post smoother."""
        if self.smoother == "chebyshev":
            w = list(1.0 / chebyshev_roots(self.k, *self.interval))
            return w * self.nu1, w * self.nu2
        return [self.omega1] * self.nu1, [self.omega2] * self.nu2

    def with_(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return RelaxConfig.from_dict(d)

    def to_dict(self):
        return {"smoother": self.smoother, "k": self.k, "interval": list(self.interval),
                "nu1": self.nu1, "nu2": self.nu2, "omega1": self.omega1,
                "omega2": self.omega2, "weights": self.weights.to_dict()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "omega" in d:
            d.setdefault("omega1", d["omega"])
            d.setdefault("omega2", d.pop("omega"))
        keys = {"smoother", "k", "interval", "nu1", "nu2", "omega1", "omega2", "weights"}
        unknown = set(d) - keys
        if unknown:
            raise ValueError(f"unknown relaxation keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def matrix_polynomial(T, weights) -> np.ndarray:
    """``prod_j (I - w_j T)`` for a batch of square matrices."""
    T = np.asarray(T)
    out = np.broadcast_to(np.eye(T.shape[-1], dtype=T.dtype), T.shape).copy()
    for w in weights:
        out = out - w * (T @ out)
    return out


def relaxation_symbol(config: RelaxConfig, minv, K):
    """Pre- and post-smoother symbols ``(S_pre, S_post)`` from ``T = M^{-1} K``."""
    T = np.asarray(minv) @ np.asarray(K)
    pre, post = config.factors()
    return matrix_polynomial(T, pre), matrix_polynomial(T, post)


def _chebyshev(k, alpha, beta, apply_k, apply_minv, x, b):
    theta, delta = (beta + alpha) / 2, (beta - alpha) / 2
    sigma = theta / delta
    rho = 1.0 / sigma
    r = b - apply_k(x)
    d = apply_minv(r) / theta
    for i in range(k):
        x += d
        if i == k - 1:
            break
        r = r - apply_k(d)
        rho_new = 1.0 / (2 * sigma - rho)
        d = rho_new * rho * d + (2 * rho_new / delta) * apply_minv(r)
        rho = rho_new
    return x


def apply_relaxation(config: RelaxConfig, apply_k: Callable, apply_minv: Callable, x, b,
                     stage="pre"):
    """One smoothing stage on the operator level; returns the updated ``x``.

    ``apply_k`` and ``apply_minv`` apply the system matrix and the (weighted)
    additive Vanka preconditioner.
    """
    x = np.array(x, dtype=float, copy=True)
    b = np.asarray(b, dtype=float)
    if x.shape != b.shape:
        raise ValueError(f"state {x.shape} and right-hand side {b.shape} differ in shape")
    n = config.nu1 if stage == "pre" else config.nu2
    if config.smoother == "chebyshev":
        for _ in range(n):
            x = _chebyshev(config.k, *config.interval, apply_k, apply_minv, x, b)
        return x
    w = config.omega1 if stage == "pre" else config.omega2
    for _ in range(n):
        x += w * apply_minv(b - apply_k(x))
    return x
