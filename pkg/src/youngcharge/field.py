"""Scalar fields on [0, 1]^d sampled by cell averages on a dyadic grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .dyadic import CubeId, morton_coords, to_morton

TAG_RULES = ("corner", "center", "average")


def _aggregate(values: np.ndarray, d: int, steps: int) -> np.ndarray:
    """Sum Morton-ordered values over ``steps`` coarsening steps."""
    for _ in range(steps):
        values = values.reshape(-1, 1 << d).sum(axis=1)
    return values


def _vertices_from_averages(avg: np.ndarray) -> np.ndarray:
    """Estimate vertex values from cell averages, one axis at a time.

    Interior vertices take the mean of the two neighbouring cells, boundary
    vertices use linear extrapolation. Exact for affine functions.
    """
    out = np.asarray(avg, dtype=float)
    for axis in range(out.ndim):
        a = np.moveaxis(out, axis, 0)
        if a.shape[0] == 1:
            v = np.concatenate([a, a])
        else:
            inner = 0.5 * (a[1:] + a[:-1])
            lo = 1.5 * a[:1] - 0.5 * a[1:2]
            hi = 1.5 * a[-1:] - 0.5 * a[-2:-1]
            v = np.concatenate([lo, inner, hi])
        out = np.moveaxis(v, 0, axis)
    return out


def _corner_mean(vertices: np.ndarray) -> np.ndarray:
    """Mean of the 2^d corner values of every cell (tensor trapezoid rule)."""
    out = np.asarray(vertices, dtype=float)
    for axis in range(out.ndim):
        a = np.moveaxis(out, axis, 0)
        out = np.moveaxis(0.5 * (a[1:] + a[:-1]), 0, axis)
    return out


def estimate_lip(grid: np.ndarray, beta: float) -> float:
    """Largest |f(x) - f(y)| / |x - y|^beta over cell pairs at dyadic offsets.

    Offsets are powers of two along each axis and along every diagonal
    direction. The result is a lower estimate of the true Hölder constant.
    """
    grid = np.asarray(grid, dtype=float)
    d = grid.ndim
    if d == 0 or grid.size < 2:
        return 0.0
    size = grid.shape[0]
    h = 1.0 / size
    directions = [tuple(int(i == a) for i in range(d)) for a in range(d)]
    if d > 1:
        directions += [(1,) + signs for signs in product((1, -1), repeat=d - 1)]
    best = 0.0
    s = 1
    while s < size:
        for direc in directions:
            lo = [slice(None)] * d
            hi = [slice(None)] * d
            for i, e in enumerate(direc):
                if e > 0:
                    lo[i], hi[i] = slice(0, size - s), slice(s, size)
                elif e < 0:
                    lo[i], hi[i] = slice(s, size), slice(0, size - s)
            diff = np.abs(grid[tuple(hi)] - grid[tuple(lo)])
            if diff.size:
                dist = s * h * math.sqrt(sum(abs(e) for e in direc))
                best = max(best, float(diff.max()) / dist**beta)
        s *= 2
    return best


@dataclass(frozen=True, eq=False)
class SampledField:
    """A function on [0, 1]^d known through its cell averages at resolution M.

    ``averages`` is a C-ordered grid of shape ``(2^M,) * d``. ``vertices``,
    when given, holds point values on the ``(2^M + 1,) * d`` corner grid;
    otherwise they are reconstructed from the averages on demand.
    """

    averages: np.ndarray = field(repr=False)
    beta: float = 1.0
    lip: float | None = None
    vertices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        avg = np.array(self.averages, dtype=float)
        if avg.ndim:
            size = avg.shape[0]
            if any(s != size for s in avg.shape) or size & (size - 1):
                raise ValueError(f"averages of shape {avg.shape} are not a dyadic grid")
        if not np.all(np.isfinite(avg)):
            raise ValueError("cell averages must be finite")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"Hölder exponent must be in (0, 1], got {self.beta}")
        avg.setflags(write=False)
        object.__setattr__(self, "averages", avg)
        if self.vertices is not None:
            vert = np.array(self.vertices, dtype=float)
            if vert.shape != tuple(s + 1 for s in avg.shape):
                raise ValueError("vertex grid does not match the averages")
            vert.setflags(write=False)
            object.__setattr__(self, "vertices", vert)
        if self.lip is None:
            object.__setattr__(self, "lip", estimate_lip(avg, self.beta))
        elif self.lip < 0:
            raise ValueError("Hölder constant must be non-negative")

    # construction -------------------------------------------------------

    @classmethod
    def from_function(cls, fn, d: int, M: int, beta: float = 1.0, lip: float | None = None,
                      order: int = 3) -> "SampledField":
        """Sample ``fn(x_1, ..., x_d)`` (vectorised over arrays) on a grid.

        Cell averages use tensor Gauss-Legendre quadrature of the given order
        in every cell; vertex values are exact point evaluations.
        """
        if d < 1:
            raise ValueError("dimension must be >= 1")
        nodes, weights = np.polynomial.legendre.leggauss(order)
        nodes = 0.5 * (nodes + 1.0)
        weights = 0.5 * weights
        size = 1 << M
        h = 1.0 / size
        base = np.arange(size) * h
        avg = np.zeros((size,) * d)
        for combo in product(range(order), repeat=d):
            axes = [base + h * nodes[c] for c in combo]
            pts = np.meshgrid(*axes, indexing="ij", sparse=True)
            w = float(np.prod([weights[c] for c in combo]))
            avg += w * np.broadcast_to(np.asarray(fn(*pts), dtype=float), avg.shape)
        vaxes = np.meshgrid(*[np.arange(size + 1) * h] * d, indexing="ij", sparse=True)
        vert = np.broadcast_to(np.asarray(fn(*vaxes), dtype=float), (size + 1,) * d)
        return cls(avg, beta, lip, vert)

    @classmethod
    def constant(cls, value: float, d: int, M: int = 0) -> "SampledField":
        size = 1 << M
        return cls(np.full((size,) * d, float(value)), 1.0, 0.0,
                   np.full((size + 1,) * d, float(value)))

    @classmethod
    def from_vertices(cls, vertices: np.ndarray, beta: float = 1.0,
                      lip: float | None = None) -> "SampledField":
        """Field whose cell averages are the corner means of a vertex grid."""
        vertices = np.asarray(vertices, dtype=float)
        return cls(_corner_mean(vertices), beta, lip, vertices)

    # geometry -------------------------------------------------------------

    @property
    def d(self) -> int:
        return self.averages.ndim

    @property
    def M(self) -> int:
        return self.averages.shape[0].bit_length() - 1 if self.d else 0

    @cached_property
    def vertex_values(self) -> np.ndarray:
        if self.vertices is not None:
            return self.vertices
        vert = _vertices_from_averages(self.averages)
        vert.setflags(write=False)
        return vert

    @cached_property
    def sup_norm(self) -> float:
        m = float(np.abs(self.averages).max()) if self.averages.size else 0.0
        return max(m, float(np.abs(self.vertex_values).max()))

    @cached_property
    def _morton_integrals(self) -> np.ndarray:
        vals = to_morton(self.averages) if self.d else self.averages.reshape(1)
        out = vals * 2.0 ** (-self.M * self.d)
        out.setflags(write=False)
        return out

    def integrals(self, n: int) -> np.ndarray:
        """Integrals of f over all generation-n cubes, in cube-index order."""
        if not 0 <= n <= self.M:
            raise ValueError(f"generation {n} exceeds field resolution {self.M}")
        return _aggregate(self._morton_integrals, self.d, self.M - n)

    @property
    def mean(self) -> float:
        return float(self.integrals(0)[0])

    def tag_values(self, m: int, rule: str = "corner") -> np.ndarray:
        """Value of f at the tag of every generation-m cube (cube-index order)."""
        if rule not in TAG_RULES:
            raise ValueError(f"unknown tag rule {rule!r}; expected one of {TAG_RULES}")
        if not 0 <= m <= self.M:
            raise ValueError(f"generation {m} exceeds field resolution {self.M}")
        if rule == "average":
            return self.integrals(m) * 2.0 ** (m * self.d)
        coords = morton_coords(self.d, m) << (self.M - m)
        if rule == "center":
            if m == self.M:
                return to_morton(self.averages)
            coords = coords + (1 << (self.M - m - 1))
        return self.vertex_values[tuple(coords.T)]

    def __call__(self, x) -> float:
        """Value of the piecewise-constant discretisation at the point x."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.d:
            raise ValueError("point dimension does not match the field")
        size = 1 << self.M
        idx = tuple(min(int(xi * size), size - 1) for xi in x)
        return float(self.averages[idx])

    # algebra ----------------------------------------------------------------

    def _binary(self, other, op) -> "SampledField":
        if isinstance(other, SampledField):
            if other.averages.shape != self.averages.shape:
                raise ValueError("fields live on different grids")
            avg = op(self.averages, other.averages)
            vert = None
            if self.vertices is not None and other.vertices is not None:
                vert = op(self.vertices, other.vertices)
            return SampledField(avg, min(self.beta, other.beta), None, vert)
        vert = None if self.vertices is None else op(self.vertices, other)
        return SampledField(op(self.averages, other), self.beta, None, vert)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def scale(self, c: float) -> "SampledField":
        vert = None if self.vertices is None else c * self.vertices
        return SampledField(c * self.averages, self.beta, abs(c) * self.lip, vert)

    def coarsen(self, M: int) -> "SampledField":
        """The same function sampled at a coarser resolution."""
        if not 0 <= M <= self.M:
            raise ValueError("can only coarsen to a lower resolution")
        f = 1 << (self.M - M)
        shape = []
        for _ in range(self.d):
            shape += [1 << M, f]
        avg = self.averages.reshape(shape).mean(axis=tuple(range(1, 2 * self.d, 2)))
        vert = self.vertex_values[(slice(None, None, f),) * self.d]
        return SampledField(avg, self.beta, self.lip, vert)

    # traces -----------------------------------------------------------------

    def trace(self, axis: int, index: int) -> "SampledField":
        """Restriction to the hyperplane x_axis = index * 2^-M on the full face.

        The trace keeps the vertex values on the hyperplane; its cell averages
        are corner means, so the trace is a (d-1)-dimensional field at the
        same resolution.
        """
        if self.d == 0:
            raise ValueError("a 0-dimensional field has no faces")
        if not 0 <= axis < self.d:
            raise ValueError(f"axis {axis} out of range")
        if not 0 <= index <= 1 << self.M:
            raise ValueError(f"hyperplane index {index} out of range")
        vert = np.take(self.vertex_values, index, axis=axis)
        return SampledField(_corner_mean(vert), self.beta, self.lip, vert)


def face_slice(g: SampledField, axis: int, side: int, cube: CubeId) -> SampledField:
    """Restriction of g to one face of a dyadic cube, rescaled to [0, 1]^{d-1}.

    ``axis`` is 0-based and ``side`` is 0 for the lower face, 1 for the upper.
    The Hölder exponent is kept and the constant is rescaled by the face size.
    """
    if cube.d != g.d:
        raise ValueError("cube and field dimensions differ")
    if side not in (0, 1):
        raise ValueError("side must be 0 or 1")
    if cube.n > g.M:
        raise ValueError(f"face of a generation-{cube.n} cube is off the resolution-{g.M} grid")
    step = 1 << (g.M - cube.n)
    coords = cube.coords()
    index = (coords[axis] + side) * step
    tr = g.trace(axis, index)
    window = tuple(slice(c * step, (c + 1) * step + 1)
                   for i, c in enumerate(coords) if i != axis)
    vert = tr.vertex_values[window]
    lip = g.lip * 2.0 ** (-cube.n * g.beta)
    return SampledField(_corner_mean(vert), g.beta, lip, vert)
