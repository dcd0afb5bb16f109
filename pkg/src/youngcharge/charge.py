"""Charges on dyadic cubes: storage, Haar analysis and synthesis, norms."""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .dyadic import CubeId, DyadicFigure, _depth_from_size, _haar_matrix, figure_measures, from_morton, to_morton
from .field import SampledField, _aggregate

MAGIC = b"HCHG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHH2xd")


class ChargeFormatError(ValueError):
    """Raised for malformed charge or coefficient files."""


def _check_gamma(gamma: float, d: int, allow_one: bool = True):
    lo = (d - 1) / d
    ok = lo < gamma <= 1.0 if allow_one else lo < gamma < 1.0
    if not ok:
        hi = "1]" if allow_one else "1)"
        raise ValueError(f"exponent {gamma} outside ({lo:g}, {hi} for d={d}")


@dataclass(frozen=True, eq=False)
class GridCharge:
    """Charge given by its values on all generation-N cubes (cube-index order)."""

    d: int
    depth: int
    leaves: np.ndarray = field(repr=False)
    gamma: float | None = None
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        leaves = np.array(self.leaves, dtype=float).reshape(-1)
        if leaves.size != 1 << (self.depth * self.d):
            raise ValueError(
                f"expected {1 << (self.depth * self.d)} leaves for d={self.d}, N={self.depth}, got {leaves.size}"
            )
        leaves.setflags(write=False)
        object.__setattr__(self, "leaves", leaves)

    @classmethod
    def lebesgue(cls, d: int, N: int) -> "GridCharge":
        return cls(d, N, np.full(1 << (N * d), 2.0 ** (-N * d)), 1.0)

    @classmethod
    def from_grid(cls, grid: np.ndarray, gamma: float | None = None) -> "GridCharge":
        grid = np.asarray(grid, dtype=float)
        d = grid.ndim
        return cls(d, grid.shape[0].bit_length() - 1, to_morton(grid), gamma)

    def to_grid(self) -> np.ndarray:
        return from_morton(self.leaves, self.d)

    @cached_property
    def _levels(self) -> list[np.ndarray]:
        levels = [self.leaves]
        for _ in range(self.depth):
            levels.append(_aggregate(levels[-1], self.d, 1))
        return levels[::-1]

    def level(self, n: int) -> np.ndarray:
        """Values on all generation-n cubes, n <= depth."""
        if not 0 <= n <= self.depth:
            raise ValueError(f"generation {n} outside 0..{self.depth}")
        return self._levels[n]

    @property
    def mass(self) -> float:
        return float(self._levels[0][0])

    def value(self, cube: CubeId) -> float:
        if cube.d != self.d:
            raise ValueError("cube dimension differs from the charge")
        if cube.n <= self.depth:
            return float(self._levels[cube.n][cube.k])
        raise ValueError(f"cube generation {cube.n} is finer than the charge depth {self.depth}")

    def evaluate(self, fig: DyadicFigure) -> float:
        """Value on a dyadic figure: sum of the leaves it covers."""
        if fig.d != self.d:
            raise ValueError("figure dimension differs from the charge")
        if fig.N > self.depth:
            raise ValueError("figure resolution is finer than the charge depth")
        return float(self.leaves[fig.refine(self.depth).cells].sum())

    def with_meta(self, **kw) -> "GridCharge":
        return GridCharge(self.d, self.depth, self.leaves, self.gamma, {**self.meta, **kw})

    def __add__(self, other: "GridCharge") -> "GridCharge":
        _check_compatible(self, other)
        return GridCharge(self.d, self.depth, self.leaves + other.leaves, self.gamma)

    def __sub__(self, other: "GridCharge") -> "GridCharge":
        _check_compatible(self, other)
        return GridCharge(self.d, self.depth, self.leaves - other.leaves, self.gamma)

    def __neg__(self) -> "GridCharge":
        return self.scale(-1.0)

    def scale(self, c: float) -> "GridCharge":
        return GridCharge(self.d, self.depth, c * self.leaves, self.gamma)

    def truncate(self, N: int) -> "GridCharge":
        """The same charge stored at a coarser depth."""
        return GridCharge(self.d, N, self.level(N), self.gamma)


def _check_compatible(a: GridCharge, b: GridCharge):
    if (a.d, a.depth) != (b.d, b.depth):
        raise ValueError(f"charges differ in shape: (d={a.d}, N={a.depth}) vs (d={b.d}, N={b.depth})")


@dataclass(frozen=True, eq=False)
class FaberCoeffs:
    """Total mass and Haar coefficients ``a[n]`` of shape (2^{nd}, 2^d - 1)."""

    d: int
    depth: int
    mass: float
    a: list = field(repr=False)

    def __post_init__(self):
        if len(self.a) != self.depth:
            raise ValueError(f"need {self.depth} coefficient generations, got {len(self.a)}")
        arrs = []
        for n, an in enumerate(self.a):
            an = np.array(an, dtype=float)
            want = (1 << (n * self.d), (1 << self.d) - 1)
            if an.shape != want:
                raise ValueError(f"generation {n} coefficients have shape {an.shape}, expected {want}")
            an.setflags(write=False)
            arrs.append(an)
        object.__setattr__(self, "a", arrs)
        object.__setattr__(self, "mass", float(self.mass))

    @classmethod
    def zeros(cls, d: int, N: int, mass: float = 0.0) -> "FaberCoeffs":
        return cls(d, N, mass, [np.zeros((1 << (n * d), (1 << d) - 1)) for n in range(N)])

    def __add__(self, other: "FaberCoeffs") -> "FaberCoeffs":
        if (self.d, self.depth) != (other.d, other.depth):
            raise ValueError("coefficient sets differ in shape")
        return FaberCoeffs(self.d, self.depth, self.mass + other.mass,
                           [x + y for x, y in zip(self.a, other.a)])

    def scale(self, c: float) -> "FaberCoeffs":
        return FaberCoeffs(self.d, self.depth, c * self.mass, [c * x for x in self.a])

    def profile(self, gamma: float) -> np.ndarray:
        """Per generation, max |a_{n,k,r}| * 2^{nd(gamma - 1/2)}."""
        return np.array([
            float(np.abs(an).max()) * 2.0 ** (n * self.d * (gamma - 0.5)) if an.size else 0.0
            for n, an in enumerate(self.a)
        ])

    def decay_constant(self, gamma: float) -> float:
        """max(|mass|, sup_n 2^{nd(gamma - 1/2)} max|a_n|)."""
        prof = self.profile(gamma)
        return max(abs(self.mass), float(prof.max()) if prof.size else 0.0)


def analyze(omega: GridCharge) -> FaberCoeffs:
    """Haar coefficients of a charge: a = 2^{nd/2} * A_d applied to child values."""
    d = omega.d
    A = _haar_matrix(d).astype(float)
    a = []
    for n in range(omega.depth):
        kids = omega.level(n + 1).reshape(-1, 1 << d)
        a.append(2.0 ** (n * d / 2) * (kids @ A[1:].T))
    return FaberCoeffs(d, omega.depth, omega.mass, a)


def synthesize(c: FaberCoeffs, gamma: float | None = None) -> GridCharge:
    """Leaf values from mass and coefficients, inverting the analysis top-down."""
    d = c.d
    A = _haar_matrix(d).astype(float)
    vals = np.array([c.mass])
    for n in range(c.depth):
        block = np.empty((vals.size, 1 << d))
        block[:, 0] = vals * 2.0 ** (n * d / 2)
        block[:, 1:] = c.a[n]
        vals = ((block @ A) * 2.0 ** (-d - n * d / 2)).reshape(-1)
    return GridCharge(d, c.depth, vals, gamma)


def holder_profile(omega: GridCharge, gamma: float) -> np.ndarray:
    """Per generation n, max_k |omega(K_{n,k})| / |K_{n,k}|^gamma."""
    _check_gamma(gamma, omega.d)
    return np.array([
        float(np.abs(omega.level(n)).max()) * 2.0 ** (n * omega.d * gamma)
        for n in range(omega.depth + 1)
    ])


def holder_norm(omega: GridCharge, gamma: float) -> float:
    """Largest |omega(K)| / |K|^gamma over dyadic cubes up to the charge depth."""
    return float(holder_profile(omega, gamma).max())


def density_charge(g: SampledField, N: int) -> GridCharge:
    """The charge K -> integral of g over K, at depth N."""
    if g.M < N:
        raise ValueError(f"field resolution {g.M} is coarser than the requested depth {N}")
    return GridCharge(g.d, N, g.integrals(N))


def restrict(omega: GridCharge, cube: CubeId) -> GridCharge:
    """Charge that agrees with omega inside the cube and vanishes outside."""
    if cube.d != omega.d:
        raise ValueError("cube dimension differs from the charge")
    if cube.n > omega.depth:
        raise ValueError("cube is finer than the charge depth")
    lo, hi = cube.leaf_range(omega.depth)
    leaves = np.zeros_like(omega.leaves)
    leaves[lo:hi] = omega.leaves[lo:hi]
    return GridCharge(omega.d, omega.depth, leaves, omega.gamma)


def pullback_affine(omega: GridCharge, cube: CubeId) -> GridCharge:
    """Pull omega back along the affine map of [0, 1]^d onto the cube.

    The result has depth ``N - generation(cube)``. Since the map scales
    volumes by |cube|, the Hölder norm is at most |cube|^gamma times that of
    omega; |cube| is stored as ``meta["volume_scale"]``.
    """
    if cube.d != omega.d:
        raise ValueError("cube dimension differs from the charge")
    if cube.n > omega.depth:
        raise ValueError(f"depth exhausted: cube generation {cube.n} > charge depth {omega.depth}")
    lo, hi = cube.leaf_range(omega.depth)
    return GridCharge(omega.d, omega.depth - cube.n, omega.leaves[lo:hi], omega.gamma,
                      {"volume_scale": cube.volume})


@dataclass(frozen=True)
class IsoperimetricReport:
    ratios: np.ndarray
    max_ratio: float
    norm: float
    excluded: int


def isoperimetric_check(omega: GridCharge, gamma: float, figures) -> IsoperimetricReport:
    """Ratios |omega(B)| (isop B)^{d(1-gamma)} / (norm * |B|^gamma) over figures.

    Empty figures are skipped and counted in ``excluded``.
    """
    figures = list(figures)
    if not figures:
        raise ValueError("need at least one figure")
    norm = holder_norm(omega, gamma)
    d = omega.d
    ratios = []
    excluded = 0
    for fig in figures:
        if fig.is_empty:
            excluded += 1
            continue
        meas = figure_measures(fig)
        vol = float(meas.volume)
        r = abs(omega.evaluate(fig)) * meas.isop ** (d * (1 - gamma)) / (norm * vol**gamma) if norm else 0.0
        ratios.append(r)
    ratios = np.array(ratios)
    return IsoperimetricReport(ratios, float(ratios.max()) if ratios.size else 0.0, norm, excluded)


# file formats -----------------------------------------------------------------


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_charge(path, omega: GridCharge, provenance: dict | None = None) -> None:
    """Write the binary charge file and its JSON sidecar."""
    path = Path(path)
    gamma = math.nan if omega.gamma is None else float(omega.gamma)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, omega.d, omega.depth, gamma)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(omega.leaves.astype("<f8").tobytes())
    side = {
        "format": MAGIC.decode(),
        "version": FORMAT_VERSION,
        "d": omega.d,
        "depth": omega.depth,
        "gammaHint": omega.gamma,
        "leafCount": int(omega.leaves.size),
        "provenance": provenance or {},
    }
    sidecar_path(path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def read_charge(path) -> GridCharge:
    """Read a binary charge file; the sidecar is loaded into ``meta`` if present."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ChargeFormatError(f"{path}: file too short for a charge header")
    magic, version, d, N, gamma = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ChargeFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ChargeFormatError(f"{path}: unsupported version {version}")
    if d < 1:
        raise ChargeFormatError(f"{path}: invalid dimension {d}")
    count = 1 << (d * N)
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise ChargeFormatError(f"{path}: expected {count} leaf values, found {len(body) / 8:g}")
    leaves = np.frombuffer(body, dtype="<f8").astype(float)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    return GridCharge(d, N, leaves, None if math.isnan(gamma) else gamma, meta)


def coeffs_to_dict(c: FaberCoeffs) -> dict:
    return {
        "format": "faber-coefficients",
        "version": FORMAT_VERSION,
        "d": c.d,
        "depth": c.depth,
        "mass": c.mass,
        "a": [an.tolist() for an in c.a],
    }


def coeffs_from_dict(obj: dict) -> FaberCoeffs:
    try:
        if obj.get("format") != "faber-coefficients":
            raise ChargeFormatError("not a coefficient file")
        return FaberCoeffs(int(obj["d"]), int(obj["depth"]), float(obj["mass"]),
                           [np.asarray(x, dtype=float).reshape(-1, (1 << int(obj["d"])) - 1)
                            for x in obj["a"]])
    except (KeyError, TypeError) as exc:
        raise ChargeFormatError(f"malformed coefficient file: {exc}") from exc


def leaves_depth(count: int, d: int) -> int:
    return _depth_from_size(count, d)
