"""Fractional-variation coefficients of functions and their pairing with charges."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charge import FaberCoeffs
from .field import SampledField
from .young import fit_rate, haar_pairings

# lhs <= C * coefficient norm holds with C = 1 by the triangle inequality over
# Haar terms, since each term's L^{1/gamma} norm equals its rescaled coefficient.
GAGLIARDO_CONSTANT = 1.0


@dataclass(frozen=True, eq=False)
class HaarCoeffsF:
    """Mean of f and rescaled Haar coefficients b[n] of shape (2^{nd}, 2^d - 1)."""

    d: int
    depth: int
    mean: float
    b: list = field(repr=False)
    gamma: float = 1.0

    def per_generation_l1(self) -> np.ndarray:
        return np.array([float(np.abs(bn).sum()) for bn in self.b])

    def __add__(self, other: "HaarCoeffsF") -> "HaarCoeffsF":
        _check_match(self, other.d, other.depth, other.gamma)
        return HaarCoeffsF(self.d, self.depth, self.mean + other.mean,
                           [x + y for x, y in zip(self.b, other.b)], self.gamma)

    def scale(self, c: float) -> "HaarCoeffsF":
        return HaarCoeffsF(self.d, self.depth, c * self.mean, [c * x for x in self.b], self.gamma)


def _check_match(c: HaarCoeffsF, d: int, depth: int, gamma: float | None = None):
    if (c.d, c.depth) != (d, depth):
        raise ValueError(f"mismatched shapes: (d={c.d}, N={c.depth}) vs (d={d}, N={depth})")
    if gamma is not None and gamma != c.gamma:
        raise ValueError(f"mismatched exponents {c.gamma} and {gamma}")


def analyze_f(f: SampledField, gamma: float, N: int) -> HaarCoeffsF:
    """b_{n,k,r} = 2^{-nd(gamma - 1/2)} times the integral of f against g_{n,k,r}."""
    d = f.d
    if not (d - 1) / d < gamma < 1.0:
        raise ValueError(f"exponent {gamma} outside ({(d - 1) / d:g}, 1) for d={d}")
    if f.M < N:
        raise ValueError(f"field resolution {f.M} is coarser than depth {N}")
    pairs = haar_pairings(f, N)
    b = [2.0 ** (-n * d * (gamma - 0.5)) * p for n, p in enumerate(pairs)]
    return HaarCoeffsF(d, N, f.mean, b, gamma)


def bv_alpha_norm(c: HaarCoeffsF) -> float:
    """|mean| plus the l1 norm of all rescaled coefficients."""
    return abs(c.mean) + float(c.per_generation_l1().sum())


@dataclass(frozen=True)
class BracketResult:
    value: float
    bound: float


def duality_bracket(c: HaarCoeffsF, omega: FaberCoeffs) -> BracketResult:
    """Pairing of f with a charge through their coefficient sequences.

    ``bound`` is bv_alpha_norm(f) times the decay constant of omega, which
    dominates |value| term by term.
    """
    _check_match(c, omega.d, omega.depth)
    terms = [omega.mass * c.mean]
    for n, (bn, an) in enumerate(zip(c.b, omega.a)):
        terms.append(2.0 ** (n * c.d * (c.gamma - 0.5)) * float(np.sum(bn * an)))
    value = float(np.sum(terms))
    return BracketResult(value, bv_alpha_norm(c) * omega.decay_constant(c.gamma))


def report(c: HaarCoeffsF) -> dict:
    """JSON-ready summary with the per-generation l1 mass and its decay rate."""
    l1 = c.per_generation_l1()
    tail = None
    if l1.size >= 3 and np.count_nonzero(l1[1:]) >= 2:
        n = np.arange(l1.size)
        tail = fit_rate(n[1:], l1[1:])
    return {
        "mean": c.mean,
        "perGenerationL1": l1.tolist(),
        "total": bv_alpha_norm(c),
        "tailSlope": tail,
    }


def lp_norm(f: SampledField, p: float) -> float:
    """Discrete L^p norm of the cell averages."""
    return float(np.mean(np.abs(f.averages) ** p) ** (1.0 / p))


def gagliardo_check(f: SampledField, gamma: float, N: int | None = None) -> tuple[float, float]:
    """(L^{1/gamma} norm of f, coefficient norm of f at depth N)."""
    if N is None:
        N = f.M
    return lp_norm(f, 1.0 / gamma), bv_alpha_norm(analyze_f(f, gamma, N))
