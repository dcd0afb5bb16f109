"""Fractional Brownian sheets on dyadic corner grids and their increment charges."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .charge import GridCharge, holder_profile
from .dyadic import CubeId
from .field import SampledField
from .young import YoungResult, young_integral

JITTER = 1e-12


@dataclass(frozen=True)
class HurstVector:
    H: tuple

    def __post_init__(self):
        H = tuple(float(h) for h in self.H)
        if not H:
            raise ValueError("need at least one Hurst parameter")
        if any(not 0.0 < h < 1.0 for h in H):
            raise ValueError(f"Hurst parameters must lie in (0, 1), got {H}")
        object.__setattr__(self, "H", H)

    @property
    def d(self) -> int:
        return len(self.H)

    @property
    def mean(self) -> float:
        return sum(self.H) / len(self.H)

    @property
    def chargeable(self) -> bool:
        """True in the regime where increments extend to a Hölder charge."""
        return self.mean > (self.d - 1) / self.d


def _as_hurst(H) -> HurstVector:
    return H if isinstance(H, HurstVector) else HurstVector(tuple(H))


def fbm_covariance(H: float, N: int) -> np.ndarray:
    """Covariance of 1-d fBm at the grid times j 2^-N, j = 1 .. 2^N."""
    t = np.arange(1, (1 << N) + 1) / (1 << N)
    s, u = np.meshgrid(t, t, indexing="ij")
    return 0.5 * (s ** (2 * H) + u ** (2 * H) - np.abs(s - u) ** (2 * H))


@lru_cache(maxsize=32)
def cholesky_factor(H: float, N: int) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of the fBm covariance and the jitter that was needed."""
    cov = fbm_covariance(H, N)
    try:
        L = np.linalg.cholesky(cov)
        jitter = 0.0
    except np.linalg.LinAlgError:
        jitter = JITTER
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"fBm covariance (H={H}, N={N}) not positive definite even with jitter {jitter:g}"
            ) from exc
    L.setflags(write=False)
    return L, jitter


def rng_for(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass(frozen=True, eq=False)
class SheetSample:
    """Sheet values on the (2^N + 1)^d corner grid."""

    hurst: HurstVector
    depth: int
    W: np.ndarray = field(repr=False)
    seed: int = 0
    trial: int = 0
    jitter: float = 0.0

    @property
    def d(self) -> int:
        return self.hurst.d


def sample_sheet(H, N: int, seed: int, trial: int = 0) -> SheetSample:
    """Exact Gaussian sample with covariance prod_i R_{H_i}(s_i, t_i).

    A standard normal array is multiplied along each axis by the Cholesky
    factor of that axis, which realises the product covariance.
    """
    H = _as_hurst(H)
    if N < 0 or N * H.d > 24:
        raise ValueError(f"depth {N} too large for d={H.d}")
    size = 1 << N
    rng = rng_for(seed, trial)
    Z = rng.standard_normal((size,) * H.d)
    jitter = 0.0
    for axis, h in enumerate(H.H):
        L, jit = cholesky_factor(h, N)
        jitter = max(jitter, jit)
        Z = np.moveaxis(np.tensordot(L, Z, axes=(1, axis)), 0, axis)
    W = np.pad(Z, [(1, 0)] * H.d)
    W.setflags(write=False)
    return SheetSample(H, N, W, int(seed), int(trial), jitter)


def increment_charge(S: SheetSample) -> GridCharge:
    """Rectangular increments of the sheet over every leaf cube."""
    inc = S.W
    for axis in range(S.d):
        inc = np.diff(inc, axis=axis)
    return GridCharge.from_grid(inc).with_meta(seed=S.seed, trial=S.trial, jitter=S.jitter)


def pathwise_integral(X: SampledField, S: SheetSample, gamma: float) -> YoungResult:
    """Integral of X against the sheet increments, for a chosen exponent gamma < mean H."""
    if gamma >= S.hurst.mean:
        raise ValueError(f"charge exponent {gamma} must be below the mean Hurst index {S.hurst.mean:g}")
    return young_integral(X, increment_charge(S), gamma)


def _box(K, d: int) -> list[tuple[Fraction, Fraction]]:
    if isinstance(K, CubeId):
        return K.bounds()
    box = [(Fraction(a).limit_denominator(1 << 30), Fraction(b).limit_denominator(1 << 30)) for a, b in K]
    if len(box) != d:
        raise ValueError("probe box dimension differs from the Hurst vector")
    for a, b in box:
        if not 0 <= a < b <= 1:
            raise ValueError(f"invalid probe interval [{a}, {b}]")
        for v in (a, b):
            if v.denominator & (v.denominator - 1):
                raise ValueError(f"probe endpoint {v} is not dyadic")
    return box


def box_increment(S: SheetSample, box) -> float:
    """Alternating corner sum of the sheet over a dyadic box on its grid."""
    box = _box(box, S.d)
    size = 1 << S.depth
    idx = []
    for a, b in box:
        ia, ib = a * size, b * size
        if ia.denominator != 1 or ib.denominator != 1:
            raise ValueError("probe box is not on the sample grid")
        idx.append((int(ia), int(ib)))
    total = 0.0
    for corner in np.ndindex(*(2,) * S.d):
        sign = (-1) ** (S.d - sum(corner))
        total += sign * S.W[tuple(idx[i][c] for i, c in enumerate(corner))]
    return float(total)


def increment_variance(H, box) -> float:
    H = _as_hurst(H)
    return math.prod(float(b - a) ** (2 * h) for (a, b), h in zip(_box(box, H.d), H.H))


@dataclass(frozen=True)
class VarianceReport:
    empirical: float
    target: float
    z: float
    trials: int


def probe_depth(box) -> int:
    den = max(max(Fraction(a).limit_denominator(1 << 30).denominator,
                  Fraction(b).limit_denominator(1 << 30).denominator) for a, b in box)
    return max(den.bit_length() - 1, 1)


def variance_check(H, K, trials: int, seed: int, N: int | None = None) -> VarianceReport:
    """Empirical second moment of the increment over K against its exact value.

    The increment has mean zero, so the mean square is an unbiased variance
    estimate with standard error target * sqrt(2 / trials).
    """
    H = _as_hurst(H)
    if trials < 100:
        raise ValueError("need at least 100 trials")
    box = _box(K, H.d)
    if N is None:
        N = probe_depth(box)
    values = np.array([box_increment(sample_sheet(H, N, seed, t), box) for t in range(trials)])
    return variance_report(values, increment_variance(H, box))


def variance_report(values: np.ndarray, target: float) -> VarianceReport:
    n = len(values)
    emp = float(np.mean(values**2))
    z = (emp - target) / (target * math.sqrt(2.0 / n))
    return VarianceReport(emp, target, z, n)


def scaled_increment_profile(S: SheetSample, gamma: float) -> np.ndarray:
    """Per generation n, 2^{nd gamma} max_k |increment over K_{n,k}|."""
    return holder_profile(increment_charge(S), gamma)


def trial_rows(H, N: int, seed: int, trials: int, gamma: float) -> list[dict]:
    """Per-trial, per-generation statistics of the increment charge."""
    H = _as_hurst(H)
    rows = []
    for t in range(trials):
        omega = increment_charge(sample_sheet(H, N, seed, t))
        prof = holder_profile(omega, gamma)
        for n in range(N + 1):
            target = 2.0 ** (-2 * n * sum(H.H))
            ms = float(np.mean(omega.level(n) ** 2))
            rows.append({
                "seed": seed,
                "trial": t,
                "generation": n,
                "max_scaled_increment": float(prof[n]),
                "mean_square_ratio": ms / target,
            })
    return rows
