"""Dyadic cubes of [0, 1]^d, Haar matrices and dyadic figures.

Cube indices use base-2^d digits, most significant digit first. The digit
chosen at refinement step j has d bits; bit i selects the upper half along
axis i. The children of cube ``(n, k)`` are therefore ``(n + 1, 2^d k + l)``
for ``l = 0 .. 2^d - 1``, and the leaves of any cube form a contiguous block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import NamedTuple

import numpy as np

MAX_HAAR_DIM = 6


@dataclass(frozen=True, order=True)
class CubeId:
    """Address of the dyadic cube K_{n,k} in [0, 1]^d."""

    d: int
    n: int
    k: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.n < 0:
            raise ValueError(f"generation must be >= 0, got {self.n}")
        if not 0 <= self.k < 1 << (self.n * self.d):
            raise ValueError(
                f"cube index {self.k} out of range for generation {self.n} in dimension {self.d}"
            )

    @classmethod
    def from_coords(cls, d: int, n: int, coords) -> "CubeId":
        """Cube of generation n whose lower corner is ``coords * 2^-n``."""
        coords = [int(c) for c in coords]
        if len(coords) != d:
            raise ValueError("need one integer coordinate per axis")
        k = 0
        for j in range(n - 1, -1, -1):
            digit = 0
            for i, c in enumerate(coords):
                if not 0 <= c < 1 << n:
                    raise ValueError(f"coordinate {c} out of range for generation {n}")
                digit |= ((c >> j) & 1) << i
            k = (k << d) | digit
        return cls(d, n, k)

    @classmethod
    def from_bounds(cls, bounds) -> "CubeId":
        """Encode a dyadic box given as ``[(a_1, b_1), ..., (a_d, b_d)]``."""
        bounds = [(Fraction(a), Fraction(b)) for a, b in bounds]
        sides = {b - a for a, b in bounds}
        if len(sides) != 1:
            raise ValueError("box is not a cube")
        side = sides.pop()
        if side <= 0 or side.numerator != 1 or side.denominator & (side.denominator - 1):
            raise ValueError(f"side length {side} is not a power of 1/2")
        n = side.denominator.bit_length() - 1
        coords = []
        for a, _ in bounds:
            c = a / side
            if c.denominator != 1:
                raise ValueError("box is not aligned on the dyadic grid")
            coords.append(int(c))
        return cls.from_coords(len(bounds), n, coords)

    def coords(self) -> tuple[int, ...]:
        """Per-axis integer coordinates of the lower corner, in units of 2^-n."""
        coords = [0] * self.d
        mask = (1 << self.d) - 1
        for j in range(self.n):
            digit = (self.k >> (self.d * (self.n - 1 - j))) & mask
            for i in range(self.d):
                coords[i] = (coords[i] << 1) | ((digit >> i) & 1)
        return tuple(coords)

    def children(self) -> list["CubeId"]:
        base = self.k << self.d
        return [CubeId(self.d, self.n + 1, base + l) for l in range(1 << self.d)]

    def parent(self) -> "CubeId":
        if self.n == 0:
            raise ValueError("the unit cube has no parent")
        return CubeId(self.d, self.n - 1, self.k >> self.d)

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        side = Fraction(1, 1 << self.n)
        return [(c * side, (c + 1) * side) for c in self.coords()]

    def contains(self, other: "CubeId") -> bool:
        """True when ``other`` is this cube or one of its descendants."""
        if other.d != self.d or other.n < self.n:
            return False
        return other.k >> (self.d * (other.n - self.n)) == self.k

    def leaf_range(self, depth: int) -> tuple[int, int]:
        """Half-open range of generation-``depth`` indices inside this cube."""
        if depth < self.n:
            raise ValueError("depth is coarser than the cube")
        shift = self.d * (depth - self.n)
        return self.k << shift, (self.k + 1) << shift

    @property
    def side(self) -> float:
        return 2.0 ** -self.n

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.n * self.d)

    @property
    def diameter(self) -> float:
        return math.sqrt(self.d) * 2.0 ** -self.n


def children(c: CubeId) -> list[CubeId]:
    return c.children()


def cube_bounds(c: CubeId) -> list[tuple[Fraction, Fraction]]:
    return c.bounds()


def haar_matrix(d: int) -> np.ndarray:
    """Haar matrix A_d of order 2^d, built by the block recursion."""
    if not 1 <= d <= MAX_HAAR_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_HAAR_DIM}, got {d}")
    return _haar_matrix(d).copy()


@lru_cache(maxsize=None)
def _haar_matrix(d: int) -> np.ndarray:
    a = np.array([[1, 1], [1, -1]], dtype=np.int64)
    for _ in range(d - 1):
        a = np.block([[a, a], [a, -a]])
    a.setflags(write=False)
    return a


def haar_value(c: CubeId, r: int, x) -> float:
    """Value of the L^2-normalised Haar function g_{n,k,r} at the point x.

    Cells are half-open (lower-closed); the upper face of the unit cube is
    treated as closed so that every point of [0, 1]^d belongs to some cell.
    """
    if not 1 <= r < 1 << c.d:
        raise ValueError(f"type index must be in 1..{(1 << c.d) - 1}, got {r}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != c.d:
        raise ValueError("point dimension does not match the cube")
    scale = 1 << c.n
    ell = 0
    for i, (ci, xi) in enumerate(zip(c.coords(), x)):
        if not 0.0 <= xi <= 1.0:
            return 0.0
        # position in units of half the cube side
        u = xi * scale * 2
        cell = min(int(math.floor(u)), 2 * scale - 1)
        if cell // 2 != ci:
            return 0.0
        ell |= (cell & 1) << i
    return 2.0 ** (c.n * c.d / 2) * float(_haar_matrix(c.d)[r, ell])


@lru_cache(maxsize=64)
def _morton_coords(d: int, n: int) -> np.ndarray:
    """Array of shape (2^{nd}, d): grid coordinates of each cube index."""
    k = np.arange(1 << (n * d), dtype=np.int64)
    coords = np.zeros((k.size, d), dtype=np.int64)
    for j in range(n):
        digit = (k >> (d * (n - 1 - j))) & ((1 << d) - 1)
        for i in range(d):
            coords[:, i] = (coords[:, i] << 1) | ((digit >> i) & 1)
    coords.setflags(write=False)
    return coords


def morton_coords(d: int, n: int) -> np.ndarray:
    """Grid coordinates (one row per cube index) of all generation-n cubes."""
    return _morton_coords(d, n)


@lru_cache(maxsize=64)
def _grid_to_morton(d: int, n: int) -> np.ndarray:
    coords = _morton_coords(d, n)
    flat = np.ravel_multi_index(tuple(coords.T), (1 << n,) * d) if d > 0 else coords[:, 0]
    flat.setflags(write=False)
    return flat


def to_morton(grid: np.ndarray) -> np.ndarray:
    """Flatten a (2^n, ..., 2^n) grid array into cube-index order."""
    grid = np.asarray(grid)
    d = grid.ndim
    n = grid.shape[0].bit_length() - 1
    if any(s != 1 << n for s in grid.shape):
        raise ValueError(f"grid shape {grid.shape} is not a power-of-two cube")
    return grid.reshape(-1)[_grid_to_morton(d, n)]


def from_morton(values: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`to_morton`."""
    values = np.asarray(values)
    n = _depth_from_size(values.size, d)
    grid = np.empty(values.size, dtype=values.dtype)
    grid[_grid_to_morton(d, n)] = values
    return grid.reshape((1 << n,) * d)


def _depth_from_size(size: int, d: int) -> int:
    n, rem = divmod(int(size).bit_length() - 1, d)
    if rem or 1 << (n * d) != size:
        raise ValueError(f"{size} values do not fill a dyadic grid in dimension {d}")
    return n


class FigureMeasures(NamedTuple):
    volume: Fraction
    perimeter: Fraction
    isop: float | None
    reg: float | None
    diameter: float


@dataclass(frozen=True)
class DyadicFigure:
    """Finite union of generation-N dyadic cubes, stored as sorted indices."""

    d: int
    N: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        cells = np.unique(np.asarray(self.cells, dtype=np.int64).reshape(-1))
        if cells.size and (cells[0] < 0 or cells[-1] >= 1 << (self.N * self.d)):
            raise ValueError("cell index out of range")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_cubes(cls, cubes, N: int, d: int | None = None) -> "DyadicFigure":
        cubes = list(cubes)
        if d is None:
            if not cubes:
                raise ValueError("dimension needed for an empty figure")
            d = cubes[0].d
        parts = []
        for c in cubes:
            if c.d != d:
                raise ValueError("mixed dimensions")
            lo, hi = c.leaf_range(N)
            parts.append(np.arange(lo, hi, dtype=np.int64))
        cells = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
        return cls(d, N, cells)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "DyadicFigure":
        """Figure from a boolean occupancy grid of shape (2^N,)*d."""
        mask = np.asarray(mask, dtype=bool)
        d = mask.ndim
        N = mask.shape[0].bit_length() - 1
        return cls(d, N, np.flatnonzero(to_morton(mask)))

    @classmethod
    def full(cls, d: int, N: int = 0) -> "DyadicFigure":
        return cls(d, N, np.arange(1 << (N * d)))

    def mask(self) -> np.ndarray:
        flat = np.zeros(1 << (self.N * self.d), dtype=bool)
        flat[self.cells] = True
        return from_morton(flat, self.d)

    def refine(self, N: int) -> "DyadicFigure":
        if N < self.N:
            raise ValueError("cannot coarsen a figure")
        shift = self.d * (N - self.N)
        offsets = np.arange(1 << shift, dtype=np.int64)
        cells = ((self.cells[:, None] << shift) + offsets[None, :]).reshape(-1)
        return DyadicFigure(self.d, N, cells)

    def union(self, other: "DyadicFigure") -> "DyadicFigure":
        N = max(self.N, other.N)
        a, b = self.refine(N), other.refine(N)
        return DyadicFigure(self.d, N, np.union1d(a.cells, b.cells))

    def intersection(self, other: "DyadicFigure") -> "DyadicFigure":
        N = max(self.N, other.N)
        a, b = self.refine(N), other.refine(N)
        return DyadicFigure(self.d, N, np.intersect1d(a.cells, b.cells))

    def __len__(self):
        return int(self.cells.size)

    @cached_property
    def measures(self) -> "FigureMeasures":
        return _figure_measures(self)

    @property
    def is_empty(self) -> bool:
        return self.cells.size == 0


def exposed_faces(mask: np.ndarray) -> int:
    """Number of cell faces separating an occupied cell from an empty one
    (the outside of the unit cube counts as empty)."""
    mask = np.asarray(mask, dtype=np.int8)
    total = 0
    for axis in range(mask.ndim):
        padded = np.pad(mask, [(1, 1) if a == axis else (0, 0) for a in range(mask.ndim)])
        total += int(np.abs(np.diff(padded, axis=axis)).sum())
    return total


def _figure_diameter(fig: DyadicFigure) -> float:
    """Largest distance between cell corners of the figure."""
    if fig.is_empty:
        return 0.0
    h = 2.0 ** -fig.N
    mask = fig.mask()
    if fig.d == 1:
        cells = np.flatnonzero(mask)
        return float(cells[-1] + 1 - cells[0]) * h
    # mark every vertex touched by an occupied cell
    touched = np.zeros(tuple(s + 1 for s in mask.shape), dtype=bool)
    for corner in product((0, 1), repeat=fig.d):
        touched[tuple(slice(c, c + s) for c, s in zip(corner, mask.shape))] |= mask
    pts = np.argwhere(touched)
    if len(pts) > 64:
        from scipy.spatial import ConvexHull

        pts = pts[ConvexHull(pts).vertices]
    best = 0
    for i in range(len(pts) - 1):
        dist = ((pts[i + 1:] - pts[i]) ** 2).sum(axis=1)
        best = max(best, int(dist.max()))
    return math.sqrt(best) * h


def figure_measures(fig: DyadicFigure) -> FigureMeasures:
    """Exact volume and perimeter by face counting, plus isop and reg.

    isop and reg are ``None`` for the empty figure.
    """
    return fig.measures


def _figure_measures(fig: DyadicFigure) -> FigureMeasures:
    volume = Fraction(len(fig), 1 << (fig.N * fig.d))
    faces = exposed_faces(fig.mask()) if not fig.is_empty else 0
    perimeter = Fraction(faces, 1 << (fig.N * (fig.d - 1)))
    diam = _figure_diameter(fig)
    if fig.is_empty:
        return FigureMeasures(volume, perimeter, None, None, 0.0)
    v, p = float(volume), float(perimeter)
    isop = v ** ((fig.d - 1) / fig.d) / p
    reg = v / (p * diam)
    return FigureMeasures(volume, perimeter, isop, reg, diam)


def dyadic_division(d: int, n: int) -> list[DyadicFigure]:
    """The generation-n cubes, each as a one-cell figure."""
    return [DyadicFigure(d, n, [k]) for k in range(1 << (n * d))]


def pairwise_disjoint(cubes) -> bool:
    """True if the given cubes are pairwise almost disjoint (no nesting)."""
    return not any(a.contains(b) or b.contains(a) for a, b in combinations(cubes, 2))
