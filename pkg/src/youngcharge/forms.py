"""Charges dg_1 ^ ... ^ dg_d built from tuples of Hölder functions.

In dimension one the charge of an interval is the increment of g_1. In higher
dimension the value on a cube is the signed sum over its faces of the Young
integral of g_1 against the lower-dimensional charge of (g_2, ..., g_d),
all restricted to that face. Face integrals are evaluated hyperplane by
hyperplane: each grid hyperplane is shared by all cubes that touch it, so
every trace is built exactly once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charge import GridCharge, density_charge
from .dyadic import from_morton, to_morton
from .field import SampledField, face_slice
from .young import check_exponents, indefinite

__all__ = ["FunctionTuple", "wedge_charge", "jacobian_density_charge", "face_slice"]

MAX_WEDGE_DIM = 3


@dataclass(frozen=True)
class FunctionTuple:
    """Components g_1 ... g_d on [0, 1]^d sampled on a common grid."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("need at least one component")
        d = len(comps)
        for g in comps:
            if not isinstance(g, SampledField):
                raise TypeError("components must be SampledField instances")
            if g.d != d:
                raise ValueError(f"a {d}-tuple needs {d}-dimensional components, got {g.d}")
            if g.M != comps[0].M:
                raise ValueError("components must share one resolution")
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def M(self) -> int:
        return self.components[0].M

    @property
    def gammas(self) -> tuple[float, ...]:
        return tuple(g.beta for g in self.components)

    @property
    def gamma(self) -> float:
        return sum(self.gammas) / self.d

    def swap(self, i: int, j: int) -> "FunctionTuple":
        comps = list(self.components)
        comps[i], comps[j] = comps[j], comps[i]
        return FunctionTuple(tuple(comps))

    def __getitem__(self, i):
        return self.components[i]


def _as_tuple(g) -> FunctionTuple:
    return g if isinstance(g, FunctionTuple) else FunctionTuple(tuple(g))


def wedge_charge(g, N: int) -> GridCharge:
    """The charge dg_1 ^ ... ^ dg_d at depth N.

    Face integrals use the trapezoid value of g_1 on each fine cell of the
    face, which makes the construction exactly multilinear and, for d = 2,
    exactly antisymmetric (discrete summation by parts).
    """
    g = _as_tuple(g)
    d, M = g.d, g.M
    if d > MAX_WEDGE_DIM:
        raise ValueError(f"wedge charges are capped at d <= {MAX_WEDGE_DIM}")
    if sum(g.gammas) <= d - 1:
        raise ValueError(f"exponent condition fails: sum of exponents {sum(g.gammas):g} <= {d - 1}")
    if not 0 <= N <= M:
        raise ValueError(f"depth {N} needs component resolution >= {N}, got {M}")
    step = 1 << (M - N)
    if d == 1:
        v = g[0].vertex_values
        leaves = v[step::step] - v[:-step:step]
        return GridCharge(1, N, leaves, g.gamma, {"face_tail_bound": 0.0})

    size = 1 << N
    grid = np.zeros((size,) * d)
    gamma_inner = sum(g.gammas[1:]) / (d - 1)
    check_exponents(g.gammas[0], gamma_inner, d - 1)
    tail = 0.0
    for axis in range(d):
        faces = np.empty((size + 1,) + (size,) * (d - 1))
        for c in range(size + 1):
            traces = [comp.trace(axis, c * step) for comp in g.components]
            inner = wedge_charge(traces[1:], M)
            theta = indefinite(traces[0], inner, gamma_inner, tag="average")
            tail = max(tail, theta.meta["tail_bound"])
            faces[c] = from_morton(theta.level(N), d - 1)
        # 1-based axis number i: the lower face carries (-1)^i, the upper (-1)^(i+1)
        sign = -1.0 if axis % 2 == 0 else 1.0
        contrib = sign * (faces[:-1] - faces[1:])
        grid += np.moveaxis(contrib, 0, axis)
    return GridCharge(d, N, to_morton(grid), g.gamma, {"face_tail_bound": tail})


def jacobian_density_charge(g, N: int) -> GridCharge:
    """Density charge of det Dg, with Dg from central differences at cell centres.

    Each partial derivative is the average over the cell's parallel edges of
    the vertex increment divided by the cell width.
    """
    g = _as_tuple(g)
    d, M = g.d, g.M
    if M < max(N, 1):
        raise ValueError(f"resolution {M} too coarse for depth {N}")
    h = 2.0**-M
    jac = np.empty((d, d) + (1 << M,) * d)
    for j, comp in enumerate(g.components):
        v = comp.vertex_values
        for i in range(d):
            diff = np.diff(v, axis=i) / h
            for other in range(d):
                if other != i:
                    a = np.moveaxis(diff, other, 0)
                    diff = np.moveaxis(0.5 * (a[1:] + a[:-1]), 0, other)
            jac[j, i] = diff
    det = np.linalg.det(np.moveaxis(jac, (0, 1), (-2, -1)))
    return density_charge(SampledField(det, 1.0, 0.0), N)
