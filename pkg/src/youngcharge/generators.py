"""Random test data: Hölder charges, Hölder fields and dyadic figures."""
from __future__ import annotations

import numpy as np

from .charge import FaberCoeffs, GridCharge, synthesize
from .dyadic import CubeId, DyadicFigure
from .field import SampledField
from .young import haar_pairings


def random_holder_charge(d: int, N: int, gamma: float, rng: np.random.Generator,
                         amplitude: float = 1.0) -> GridCharge:
    """Charge with coefficients uniform in +-2^{nd(1/2 - gamma)} and mass in [-1, 1].

    Coefficients at the critical decay rate make the charge gamma-Hölder with
    a norm of order one, but no better.
    """
    a = [rng.uniform(-1, 1, (1 << (n * d), (1 << d) - 1)) * 2.0 ** (n * d * (0.5 - gamma))
         for n in range(N)]
    c = FaberCoeffs(d, N, rng.uniform(-1, 1), a)
    return synthesize(c.scale(amplitude), gamma)


def aligned_charge(f: SampledField, N: int, gamma: float, mass: float = 1.0) -> GridCharge:
    """Charge whose coefficients have the critical size and the sign of f's pairings.

    Every term of the Haar series then has the same sign, so truncation
    errors do not cancel; this is the slowest-converging case.
    """
    pairs = haar_pairings(f, N)
    a = [np.sign(p) * 2.0 ** (n * f.d * (0.5 - gamma)) for n, p in enumerate(pairs)]
    return synthesize(FaberCoeffs(f.d, N, mass, a), gamma)


def weierstrass_field(d: int, M: int, beta: float, rng: np.random.Generator,
                      terms: int | None = None) -> SampledField:
    """Random lacunary cosine series with Hölder exponent beta on every axis."""
    if terms is None:
        terms = M + 2
    phases = rng.uniform(0, 1, (terms, d))
    weights = rng.uniform(0.5, 1.0, terms)

    def fn(*xs):
        out = 0.0
        for j in range(terms):
            freq = 2.0**j
            amp = weights[j] * 2.0 ** (-j * beta)
            for i in range(d):
                out = out + amp * np.cos(2 * np.pi * freq * (xs[i] + phases[j, i]))
        return out

    return SampledField.from_function(fn, d, M, beta)


def random_piecewise_constant(d: int, M: int, pieces: int, rng: np.random.Generator,
                              low: float = -1.0, high: float = 1.0) -> SampledField:
    """Field constant on each generation-``pieces`` cube, sampled at resolution M."""
    coarse = rng.uniform(low, high, (1 << pieces,) * d)
    grid = coarse
    for axis in range(d):
        grid = np.repeat(grid, 1 << (M - pieces), axis=axis)
    return SampledField(grid, 1.0, None, None)


def random_figure(d: int, N: int, rng: np.random.Generator, max_cubes: int = 6,
                  min_generation: int = 1) -> DyadicFigure:
    """Union of a few random dyadic cubes of generations min_generation..N."""
    count = int(rng.integers(1, max_cubes + 1))
    cubes = []
    for _ in range(count):
        n = int(rng.integers(min_generation, N + 1))
        cubes.append(CubeId(d, n, int(rng.integers(0, 1 << (n * d)))))
    return DyadicFigure.from_cubes(cubes, N, d)
