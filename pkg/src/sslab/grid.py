"""Rasterized open sets on a uniform grid.

A domain is a set of occupied cells on an integer lattice with cell size
``h``; cell ``i`` along an axis covers the interval
``[(origin + i) h, (origin + i + 1) h)``.  Cut levels are restricted to
cell boundaries, which makes slab slices exact set partitions and all
section measures exact integer multiples of ``h**(N-1)``.

Axes are 1-based in the public API (axis 1 is the first coordinate).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "GridDomain",
    "SliceSelector",
    "Section",
    "measure",
    "slice_domain",
    "tau",
    "width",
    "projection_diameter",
    "reflect",
    "translate",
]


@dataclass(frozen=True)
class GridSpec:
    """Lattice geometry: dimension, cell size, integer origin and extent."""

    dimension: int
    cell_size: float
    origin: tuple[int, ...]
    extent: tuple[int, ...]

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        if not (self.cell_size > 0 and np.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "origin", tuple(int(v) for v in self.origin))
        object.__setattr__(self, "extent", tuple(int(v) for v in self.extent))
        if len(self.origin) != self.dimension or len(self.extent) != self.dimension:
            raise ValueError("origin/extent length must equal dimension")
        if any(e < 1 for e in self.extent):
            raise ValueError(f"extent must be >= 1 per axis, got {self.extent}")

    def boundary_coord(self, axis: int, index: int) -> float:
        """Physical coordinate of cell boundary ``index`` along ``axis`` (1-based)."""
        a = _axis_index(axis, self.dimension)
        return (self.origin[a] + index) * self.cell_size

    def boundary_index(self, axis: int, t: float) -> int:
        """Nearest cell-boundary index to coordinate ``t`` (cut levels snap here)."""
        a = _axis_index(axis, self.dimension)
        return int(round(t / self.cell_size - self.origin[a]))

    def slab_index(self, axis: int, t: float) -> int:
        """Index of the slab whose half-open interval [c h, (c+1) h) contains ``t``."""
        a = _axis_index(axis, self.dimension)
        return int(np.floor(t / self.cell_size - self.origin[a] + 1e-12))


def _axis_index(axis: int, dimension: int) -> int:
    if not 1 <= axis <= dimension:
        raise ValueError(f"axis must be in [1, {dimension}], got {axis}")
    return axis - 1


@dataclass(frozen=True)
class SliceSelector:
    """Selects a part of a domain relative to cut level(s) along one axis.

    ``side`` is one of ``left`` (x < t), ``right`` (x > t), ``section``
    (the slab whose interval contains t), or ``interior_band``
    (t0 - t < x < t0 + t, with ``level`` the band half-width t and
    ``center`` the band center t0).
    """

    axis: int
    side: str
    level: float
    center: float = 0.0

    def __post_init__(self):
        if self.side not in ("left", "right", "section", "interior_band"):
            raise ValueError(f"unknown side {self.side!r}")
        if not np.isfinite(self.level) or not np.isfinite(self.center):
            raise ValueError("slice levels must be finite")
        if self.side == "interior_band" and self.level < 0:
            raise ValueError("interior_band half-width must be >= 0")


@dataclass(frozen=True)
class Section:
    """The (N-1)-dimensional cell pattern of one slab of a domain."""

    axis: int
    index: int  # slab index along `axis`
    pattern: np.ndarray  # bool, shape = extents of the other axes
    cell_size: float

    @property
    def cell_count(self) -> int:
        return int(self.pattern.sum())

    @property
    def measure(self) -> float:
        """(N-1)-dimensional measure of the section."""
        return self.cell_count * self.cell_size ** self.pattern.ndim


class GridDomain:
    """Immutable rasterized open set: a GridSpec plus an occupancy mask.

    The occupancy array has shape ``spec.extent`` with axis order matching
    the coordinate axes.  All operations are pure; instances are safe to
    share across threads.
    """

    __slots__ = ("spec", "occupancy", "_prefix_cache", "_cells_cache")

    def __init__(self, spec: GridSpec, occupancy):
        occ = np.asarray(occupancy, dtype=bool)
        if occ.shape != tuple(spec.extent):
            raise ValueError(f"occupancy shape {occ.shape} != extent {spec.extent}")
        occ = occ.copy()
        occ.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "_prefix_cache", {})
        object.__setattr__(self, "_cells_cache", None)

    def __setattr__(self, name, value):
        raise AttributeError("GridDomain is immutable")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_cells(cls, spec: GridSpec, cells: Iterable[Sequence[int]]) -> "GridDomain":
        occ = np.zeros(spec.extent, dtype=bool)
        for c in cells:
            occ[tuple(int(v) for v in c)] = True
        return cls(spec, occ)

    @classmethod
    def from_mask(cls, mask, cell_size: float, origin: Sequence[int] | None = None) -> "GridDomain":
        mask = np.asarray(mask, dtype=bool)
        origin = tuple(origin) if origin is not None else (0,) * mask.ndim
        return cls(GridSpec(mask.ndim, float(cell_size), origin, mask.shape), mask)

    def with_cell_size(self, cell_size: float) -> "GridDomain":
        """Same occupancy at a different physical scale (pure dilation)."""
        s = self.spec
        return GridDomain(GridSpec(s.dimension, float(cell_size), s.origin, s.extent), self.occupancy)

    def normalized(self) -> "GridDomain":
        """Dilated copy with unit measure (cell size h / |Omega|^(1/N))."""
        m = self.measure
        if m <= 0:
            raise ValueError("cannot normalize an empty domain")
        if abs(m - 1.0) < 1e-12:
            return self
        return self.with_cell_size(self.spec.cell_size / m ** (1.0 / self.spec.dimension))

    def trimmed(self) -> "GridDomain":
        """Copy restricted to the tight bounding box (origin adjusted)."""
        if self.cell_count == 0:
            raise ValueError("cannot trim an empty domain")
        lo, hi = self.bounding_box()
        sl = tuple(np.s_[a:b + 1] for a, b in zip(lo, hi))
        occ = self.occupancy[sl]
        origin = tuple(o + int(a) for o, a in zip(self.spec.origin, lo))
        return GridDomain(GridSpec(self.spec.dimension, self.spec.cell_size, origin, occ.shape), occ)

    # -- basic queries ---------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def cell_size(self) -> float:
        return self.spec.cell_size

    @property
    def cell_count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def measure(self) -> float:
        return self.cell_count * self.cell_size ** self.dimension

    @property
    def is_empty(self) -> bool:
        return not self.occupancy.any()

    def cells(self) -> np.ndarray:
        """Occupied multi-indices, C-order, shape (count, N). Cached."""
        if self._cells_cache is None:
            object.__setattr__(self, "_cells_cache", np.argwhere(self.occupancy))
        return self._cells_cache

    def contains_cell(self, cell: Sequence[int]) -> bool:
        idx = tuple(int(v) for v in cell)
        if any(not 0 <= i < e for i, e in zip(idx, self.spec.extent)):
            return False
        return bool(self.occupancy[idx])

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) inclusive occupied index range per axis."""
        if self.is_empty:
            raise ValueError("empty domain has no bounding box")
        cells = self.cells()
        return cells.min(axis=0), cells.max(axis=0)

    def bounding_box_lengths(self) -> np.ndarray:
        lo, hi = self.bounding_box()
        return (hi - lo + 1) * self.cell_size

    def __eq__(self, other):
        if not isinstance(other, GridDomain):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.occupancy, other.occupancy)

    __hash__ = None

    def __repr__(self):
        return (f"GridDomain(N={self.dimension}, h={self.cell_size:g}, "
                f"extent={self.spec.extent}, cells={self.cell_count})")

    # -- per-axis prefix counts -------------------------------------------------

    def slab_counts(self, axis: int) -> np.ndarray:
        """Occupied-cell count of each slab along ``axis``."""
        a = _axis_index(axis, self.dimension)
        key = ("counts", a)
        if key not in self._prefix_cache:
            other = tuple(i for i in range(self.dimension) if i != a)
            self._prefix_cache[key] = self.occupancy.sum(axis=other, dtype=np.int64)
        return self._prefix_cache[key]

    def slab_prefix(self, axis: int) -> np.ndarray:
        """prefix[c] = number of occupied cells in slabs < c (length extent+1)."""
        a = _axis_index(axis, self.dimension)
        key = ("prefix", a)
        if key not in self._prefix_cache:
            counts = self.slab_counts(axis)
            prefix = np.zeros(len(counts) + 1, dtype=np.int64)
            np.cumsum(counts, out=prefix[1:])
            self._prefix_cache[key] = prefix
        return self._prefix_cache[key]

    def slab_pattern(self, axis: int, index: int) -> np.ndarray:
        """Occupancy pattern of slab ``index`` (empty pattern if out of range)."""
        a = _axis_index(axis, self.dimension)
        if not 0 <= index < self.spec.extent[a]:
            shape = tuple(e for i, e in enumerate(self.spec.extent) if i != a)
            return np.zeros(shape, dtype=bool)
        return np.take(self.occupancy, index, axis=a)


# -- module-level operations ------------------------------------------------


def measure(domain: GridDomain) -> float:
    """N-dimensional measure |Omega| = (occupied cells) * h^N."""
    return domain.measure


def _slab_range_domain(domain: GridDomain, axis: int, lo: int, hi: int) -> GridDomain:
    """Subdomain of slabs with lo <= index < hi (same spec; may be empty)."""
    a = _axis_index(axis, domain.dimension)
    occ = np.zeros_like(domain.occupancy)
    lo = max(lo, 0)
    hi = min(hi, domain.spec.extent[a])
    if lo < hi:
        sl = [np.s_[:]] * domain.dimension
        sl[a] = np.s_[lo:hi]
        occ[tuple(sl)] = domain.occupancy[tuple(sl)]
    return GridDomain(domain.spec, occ)


def slice_domain(domain: GridDomain, sel: SliceSelector):
    """Left/right/band slices (GridDomain) or the section at a level (Section).

    Cut levels snap to the nearest cell boundary c.  At a boundary-aligned
    level, left (slabs < c), the section (slab c, the one whose half-open
    interval contains t), and right (slabs > c) partition the domain.
    """
    a = _axis_index(sel.axis, domain.dimension)
    extent = domain.spec.extent[a]
    if sel.side == "section":
        c = domain.spec.slab_index(sel.axis, sel.level)
        return Section(sel.axis, c, domain.slab_pattern(sel.axis, c), domain.cell_size)
    if sel.side == "left":
        c = domain.spec.boundary_index(sel.axis, sel.level)
        return _slab_range_domain(domain, sel.axis, 0, c)
    if sel.side == "right":
        c = domain.spec.boundary_index(sel.axis, sel.level)
        return _slab_range_domain(domain, sel.axis, c + 1, extent)
    # interior band: t0 - t < x < t0 + t
    lo = domain.spec.boundary_index(sel.axis, sel.center - sel.level)
    hi = domain.spec.boundary_index(sel.axis, sel.center + sel.level)
    return _slab_range_domain(domain, sel.axis, lo, hi)


def tau(domain: GridDomain, axis: int, m: float) -> float:
    """Smallest cell-boundary level t with |Omega^l_t| >= m.

    For m = 0 returns the left face of the occupied bounding box.  Raises
    for m outside [0, |Omega|].
    """
    total = domain.measure
    tol = 1e-9 * max(1.0, abs(m))
    if m < -tol or m > total + tol:
        raise ValueError(f"mass m={m} outside [0, {total}]")
    if domain.is_empty:
        raise ValueError("tau of an empty domain")
    lo, _hi = domain.bounding_box()
    a = _axis_index(axis, domain.dimension)
    if m <= tol:
        return domain.spec.boundary_coord(axis, int(lo[a]))
    hN = domain.cell_size ** domain.dimension
    target = m / hN
    prefix = domain.slab_prefix(axis)
    c = int(np.searchsorted(prefix, target - 1e-9 * max(1.0, target), side="left"))
    return domain.spec.boundary_coord(axis, c)


def width(domain: GridDomain, axis: int, m1: float, m2: float) -> float:
    """W(Omega, m1, m2) = tau(m2) - tau(m1) for 0 <= m1 <= m2 <= |Omega|."""
    if m1 > m2 + 1e-12 * max(1.0, abs(m2)):
        raise ValueError(f"need m1 <= m2, got {m1} > {m2}")
    return tau(domain, axis, m2) - tau(domain, axis, m1)


def projection_diameter(domain: GridDomain, axis: int) -> float:
    """Diameter of the 1-dimensional projection onto ``axis``."""
    if domain.is_empty:
        raise ValueError("projection of an empty domain")
    counts = domain.slab_counts(axis)
    nz = np.flatnonzero(counts)
    return float(nz[-1] - nz[0] + 1) * domain.cell_size


def reflect(domain: GridDomain, axis: int) -> GridDomain:
    """Mirror image across the bounding box midplane of ``axis`` (congruent)."""
    a = _axis_index(axis, domain.dimension)
    return GridDomain(domain.spec, np.flip(domain.occupancy, axis=a))


def translate(domain: GridDomain, axis: int, cells: int) -> GridDomain:
    """Shift the lattice origin by an integer number of cells along ``axis``."""
    a = _axis_index(axis, domain.dimension)
    origin = list(domain.spec.origin)
    origin[a] += int(cells)
    s = domain.spec
    return GridDomain(GridSpec(s.dimension, s.cell_size, tuple(origin), s.extent), domain.occupancy)
