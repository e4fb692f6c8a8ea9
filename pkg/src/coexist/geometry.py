"""Axis-aligned boxes, points and grid hyperplanes.

Everything downstream (regions, measures, decompositions, derivative
estimators) is built from these values.  Generated grids stick to
dyadic-rational coordinates so that cell volumes add up exactly in binary
floating point; arbitrary user coordinates are still legal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Sequence


@dataclass(frozen=True, slots=True)
class Point:
    coords: tuple[float, ...]

    def __post_init__(self):
        if not self.coords:
            raise ValueError("a point needs at least one coordinate")
        for c in self.coords:
            if not math.isfinite(c):
                raise ValueError(f"non-finite coordinate {c!r}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> float:
        return self.coords[i]

    def dist(self, other: "Point") -> float:
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(self.coords, other.coords)))


@dataclass(frozen=True, slots=True)
class Box:
    lo: Point
    hi: Point

    def __post_init__(self):
        if self.lo.dim != self.hi.dim:
            raise ValueError("lo and hi must have the same dimension")
        for a, b in zip(self.lo.coords, self.hi.coords):
            if a > b:
                raise ValueError(f"inverted box side [{a}, {b}]")

    @property
    def dim(self) -> int:
        return self.lo.dim

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo.coords, self.hi.coords))

    def center(self) -> Point:
        return Point(tuple(a + (b - a) / 2 for a, b in zip(self.lo.coords, self.hi.coords)))

    def contains_point(self, p: Point) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo.coords, p.coords, self.hi.coords))

    def contains_box(self, other: "Box") -> bool:
        return all(
            a <= oa and ob <= b
            for a, b, oa, ob in zip(self.lo.coords, self.hi.coords, other.lo.coords, other.hi.coords)
        )

    def intersect(self, other: "Box") -> Optional["Box"]:
        """Closed intersection, or None when the boxes do not meet."""
        lo = tuple(max(a, b) for a, b in zip(self.lo.coords, other.lo.coords))
        hi = tuple(min(a, b) for a, b in zip(self.hi.coords, other.hi.coords))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Box(Point(lo), Point(hi))

    def interior_intersects(self, other: "Box") -> bool:
        """True when the intersection has positive volume."""
        common = self.intersect(other)
        return common is not None and all(s > 0 for s in common.sides)


@dataclass(frozen=True, slots=True)
class Hyperplane:
    """Coordinate hyperplane {x : x[axis] = offset}."""

    axis: int
    offset: float

    def __post_init__(self):
        if self.axis < 0:
            raise ValueError("axis must be non-negative")
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")


def point(*coords: float) -> Point:
    return Point(tuple(float(c) for c in coords))


def box(lo: Sequence[float], hi: Sequence[float]) -> Box:
    return Box(Point(tuple(float(c) for c in lo)), Point(tuple(float(c) for c in hi)))


def box1d(a: float, b: float) -> Box:
    return box([a], [b])


def cube(center: Sequence[float], half_side: float) -> Box:
    c = [float(x) for x in center]
    return box([x - half_side for x in c], [x + half_side for x in c])


def box_volume(b: Box) -> float:
    v = 1.0
    for s in b.sides:
        v *= s
    return v


def box_diameter(b: Box) -> float:
    return math.sqrt(sum(s * s for s in b.sides))


def cut_box(b: Box, h: Hyperplane) -> tuple[Optional[Box], Optional[Box]]:
    """Split ``b`` by the hyperplane into (minus side, plus side).

    A side is absent when the cut leaves it without extent along the cut
    axis; the two present sides share only the cutting face.
    """
    if not 0 <= h.axis < b.dim:
        raise ValueError(f"axis {h.axis} invalid for a {b.dim}-dimensional box")
    lo_a = b.lo.coords[h.axis]
    hi_a = b.hi.coords[h.axis]
    if h.offset <= lo_a:
        return None, b
    if h.offset >= hi_a:
        return b, None
    minus_hi = list(b.hi.coords)
    minus_hi[h.axis] = h.offset
    plus_lo = list(b.lo.coords)
    plus_lo[h.axis] = h.offset
    return (
        Box(b.lo, Point(tuple(minus_hi))),
        Box(Point(tuple(plus_lo)), b.hi),
    )


def dyadic_children(b: Box) -> list[Box]:
    """Bisect every axis at its midpoint: 2**n congruent children tiling b."""
    mids = [a + (c - a) / 2 for a, c in zip(b.lo.coords, b.hi.coords)]
    children = []
    for choice in product((0, 1), repeat=b.dim):
        lo = tuple(
            b.lo.coords[i] if side == 0 else mids[i] for i, side in enumerate(choice)
        )
        hi = tuple(
            mids[i] if side == 0 else b.hi.coords[i] for i, side in enumerate(choice)
        )
        children.append(Box(Point(lo), Point(hi)))
    return children


def grid_edges(lo: float, hi: float, cells: int) -> list[float]:
    """Edges of a uniform partition of [lo, hi] into ``cells`` pieces.

    Exact for dyadic-rational endpoints and power-of-two cell counts.
    """
    step = (hi - lo) / cells
    edges = [lo + i * step for i in range(cells)]
    edges.append(hi)
    return edges


def dyadic_cells(b: Box, depth: int) -> Iterator[Box]:
    """Depth-``depth`` dyadic grid cells of ``b`` in lexicographic index order."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    m = 1 << depth
    axis_edges = [grid_edges(a, c, m) for a, c in zip(b.lo.coords, b.hi.coords)]
    for idx in product(range(m), repeat=b.dim):
        lo = tuple(axis_edges[i][j] for i, j in enumerate(idx))
        hi = tuple(axis_edges[i][j + 1] for i, j in enumerate(idx))
        yield Box(Point(lo), Point(hi))


def nearest_dist2(b: Box, p: Point) -> float:
    """Squared distance from p to the closest point of the box."""
    total = 0.0
    for a, c, x in zip(b.lo.coords, b.hi.coords, p.coords):
        d = max(a - x, x - c, 0.0)
        total += d * d
    return total


def farthest_dist2(b: Box, p: Point) -> float:
    """Squared distance from p to the farthest corner of the box."""
    total = 0.0
    for a, c, x in zip(b.lo.coords, b.hi.coords, p.coords):
        d = max(abs(x - a), abs(c - x))
        total += d * d
    return total
