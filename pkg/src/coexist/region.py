"""Figures as three-valued box oracles.

A region answers, for any axis-aligned box, one of Inside / Outside /
Indeterminate.  Inside and Outside are certificates (every point of the box
is in the figure / no point is); Indeterminate is always a safe answer.
Inner and outer measure are built on these certificates, so oracles must be
sound and monotone under box inclusion.

The curved primitives (hypograph, polar star) bound function ranges by
sampling plus a Lipschitz-style margin estimated from the samples.  A bad
margin can only enlarge the Indeterminate zone, never break soundness of
Inside/Outside answers on smooth inputs; the margin choice is recorded in
``Region.notes``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import Expression, as_expression, eval_array, eval_expression, free_variables
from .geometry import Box, Point, box, farthest_dist2, nearest_dist2

__all__ = [
    "Classification",
    "Region",
    "primitive_ball",
    "primitive_box",
    "primitive_hypograph",
    "primitive_polar_star",
    "region_union",
    "region_intersect",
    "region_complement_within",
    "pathological_dense",
]

_SAMPLES = 64  # sampling resolution for range bounds of curve expressions


class Classification(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    INDETERMINATE = "indeterminate"


INSIDE = Classification.INSIDE
OUTSIDE = Classification.OUTSIDE
INDETERMINATE = Classification.INDETERMINATE


@dataclass(frozen=True)
class Region:
    """Three-valued membership oracle plus a bounding box.

    ``contains_point`` is the ground-truth pointwise predicate used by
    soundness tests; it is None for regions without one (the dense
    counterexample).
    """

    dimension: int
    bounds: Box
    _classify: Callable[[Box], Classification]
    contains_point: Optional[Callable[[Point], bool]] = None
    label: str = ""
    notes: tuple[str, ...] = ()

    def classify(self, b: Box) -> Classification:
        if b.dim != self.dimension:
            raise ValueError(
                f"box dimension {b.dim} does not match region dimension {self.dimension}"
            )
        if not b.interior_intersects(self.bounds):
            return OUTSIDE
        return self._classify(b)


def _dyadic_ceil(x: float, granularity: float = 1 / 16) -> float:
    """Smallest multiple of granularity >= x; keeps generated bounds dyadic."""
    return math.ceil(x / granularity) * granularity


def primitive_ball(center: Point | Sequence[float], radius: float) -> Region:
    """Closed Euclidean ball, classified by exact corner distance tests."""
    if not isinstance(center, Point):
        center = Point(tuple(float(c) for c in center))
    if not radius > 0:
        raise ValueError("radius must be positive")
    r2 = radius * radius
    bounds = box(
        [c - radius for c in center.coords], [c + radius for c in center.coords]
    )

    def classify(b: Box) -> Classification:
        if farthest_dist2(b, center) <= r2:
            return INSIDE
        if nearest_dist2(b, center) > r2:
            return OUTSIDE
        return INDETERMINATE

    def contains(p: Point) -> bool:
        return sum((a - c) ** 2 for a, c in zip(p.coords, center.coords)) <= r2

    return Region(center.dim, bounds, classify, contains, label=f"ball(r={radius})")


def primitive_box(k: Box) -> Region:
    """The box itself as a region."""

    def classify(b: Box) -> Classification:
        if k.contains_box(b):
            return INSIDE
        if not b.interior_intersects(k):
            return OUTSIDE
        return INDETERMINATE

    return Region(k.dim, k, classify, k.contains_point, label="box")


def _sampled_range(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                   margin: Optional[float]) -> tuple[float, float]:
    """Sampled min/max of f on [lo, hi], padded by a slope-based margin.

    The margin covers excursions between samples: largest consecutive slope
    times the sample gap (twice the linear-interpolation error bound).
    """
    if hi <= lo:
        v = float(f(np.array([lo]))[0])
        return v, v
    xs = np.linspace(lo, hi, _SAMPLES + 1)
    vals = f(xs)
    vmin = float(vals.min())
    vmax = float(vals.max())
    if margin is None:
        h = (hi - lo) / _SAMPLES
        slope = float(np.abs(np.diff(vals)).max()) / h if h > 0 else 0.0
        margin = slope * h
    return vmin - margin, vmax + margin


def primitive_hypograph(f: "Expression | str", a: float, b: float,
                        margin: Optional[float] = None) -> Region:
    """Planar figure under the graph of f >= 0 on [a, b]: 0 <= y <= f(x)."""
    f = as_expression(f)
    extra = free_variables(f) - {"x", "x1"}
    if extra:
        raise ValueError(f"hypograph expression may only use x, found {sorted(extra)}")
    if not a < b:
        raise ValueError("need a < b")

    def fvec(xs: np.ndarray) -> np.ndarray:
        return eval_array(f, {"x": xs, "x1": xs})

    top = _sampled_range(fvec, a, b, margin)[1]
    bounds = box([a, 0.0], [b, _dyadic_ceil(max(top, 0.0) + 1 / 16)])

    def classify(bx: Box) -> Classification:
        (x0, y0), (x1, y1) = bx.lo.coords, bx.hi.coords
        if y1 < 0 or x1 < a or x0 > b:
            return OUTSIDE
        cx0, cx1 = max(x0, a), min(x1, b)
        if cx1 < cx0:
            return OUTSIDE
        flo, fhi = _sampled_range(fvec, cx0, cx1, margin)
        if y0 > fhi:
            return OUTSIDE
        if a <= x0 and x1 <= b and y0 >= 0 and y1 <= flo:
            return INSIDE
        return INDETERMINATE

    def contains(p: Point) -> bool:
        x, y = p.coords
        if not (a <= x <= b and y >= 0):
            return False
        return y <= eval_expression(f, {"x": x, "x1": x})

    return Region(
        2,
        bounds,
        classify,
        contains,
        label="hypograph",
        notes=(
            "curve range bounds use 64-point sampling with an estimated slope margin; "
            "boundary cells may be over-reported as indeterminate",
        ),
    )


def _box_angular_interval(bx: Box) -> tuple[float, float]:
    """Angular extent [t0, t1] of a planar box not containing the origin.

    The extent of a convex set avoiding the origin is an arc shorter than pi
    and is attained at corners.
    """
    corners = [
        (x, y)
        for x in (bx.lo.coords[0], bx.hi.coords[0])
        for y in (bx.lo.coords[1], bx.hi.coords[1])
    ]
    base = math.atan2(corners[0][1], corners[0][0])
    deltas = []
    for x, y in corners:
        d = math.atan2(y, x) - base
        while d <= -math.pi:
            d += 2 * math.pi
        while d > math.pi:
            d -= 2 * math.pi
        deltas.append(d)
    return base + min(deltas), base + max(deltas)


def primitive_polar_star(rho: "Expression | str",
                         margin: Optional[float] = None) -> Region:
    """Planar star-shaped figure {r <= rho(theta)} for continuous rho >= 0."""
    rho = as_expression(rho)
    extra = free_variables(rho) - {"theta", "t", "x1"}
    if extra:
        raise ValueError(f"polar expression may only use theta, found {sorted(extra)}")

    def rvec(ts: np.ndarray) -> np.ndarray:
        ts = np.mod(ts, 2 * math.pi)
        vals = eval_array(rho, {"theta": ts, "t": ts, "x1": ts})
        if np.any(vals < 0):
            raise ValueError("polar radius expression produced a negative sample")
        return vals

    dense = rvec(np.linspace(0.0, 2 * math.pi, 1024))
    r_top = float(dense.max())
    r_all_min = float(dense.min())
    h = 2 * math.pi / 1023
    global_margin = float(np.abs(np.diff(dense)).max()) / h * h if margin is None else margin
    half = _dyadic_ceil(r_top + global_margin + 1 / 16)
    bounds = box([-half, -half], [half, half])

    def classify(bx: Box) -> Classification:
        rmax = math.sqrt(farthest_dist2(bx, Point((0.0, 0.0))))
        rmin = math.sqrt(nearest_dist2(bx, Point((0.0, 0.0))))
        if rmin == 0.0:
            # box touches the origin: inside iff within the global minimum radius
            if rmax <= r_all_min - global_margin:
                return INSIDE
            return INDETERMINATE
        t0, t1 = _box_angular_interval(bx)
        flo, fhi = _sampled_range(rvec, t0, t1, margin)
        if rmax <= flo:
            return INSIDE
        if rmin > fhi:
            return OUTSIDE
        return INDETERMINATE

    def contains(p: Point) -> bool:
        x, y = p.coords
        r = math.hypot(x, y)
        t = math.atan2(y, x) % (2 * math.pi)
        return r <= eval_expression(rho, {"theta": t, "t": t, "x1": t})

    return Region(
        2,
        bounds,
        classify,
        contains,
        label="polar_star",
        notes=(
            "radius range bounds use 64-point sampling with an estimated slope margin; "
            "boundary cells may be over-reported as indeterminate",
        ),
    )


def _bounding_union(boxes: Sequence[Box]) -> Box:
    lo = tuple(min(b.lo.coords[i] for b in boxes) for i in range(boxes[0].dim))
    hi = tuple(max(b.hi.coords[i] for b in boxes) for i in range(boxes[0].dim))
    return Box(Point(lo), Point(hi))


def _check_dims(regions: Sequence[Region]):
    if not regions:
        raise ValueError("need at least one region")
    if len({r.dimension for r in regions}) != 1:
        raise ValueError("regions have mismatched dimensions")


def region_union(*regions: Region) -> Region:
    _check_dims(regions)

    def classify(b: Box) -> Classification:
        got = [r.classify(b) for r in regions]
        if any(c is INSIDE for c in got):
            return INSIDE
        if all(c is OUTSIDE for c in got):
            return OUTSIDE
        return INDETERMINATE

    contains = None
    if all(r.contains_point for r in regions):
        contains = lambda p: any(r.contains_point(p) for r in regions)  # noqa: E731
    notes = tuple(dict.fromkeys(n for r in regions for n in r.notes))
    return Region(regions[0].dimension, _bounding_union([r.bounds for r in regions]),
                  classify, contains, label="union", notes=notes)


def region_intersect(*regions: Region) -> Region:
    _check_dims(regions)
    common = regions[0].bounds
    for r in regions[1:]:
        got = common.intersect(r.bounds)
        if got is None:
            # disjoint bounds: keep a degenerate box at the first corner
            got = Box(common.lo, common.lo)
        common = got

    def classify(b: Box) -> Classification:
        got = [r.classify(b) for r in regions]
        if any(c is OUTSIDE for c in got):
            return OUTSIDE
        if all(c is INSIDE for c in got):
            return INSIDE
        return INDETERMINATE

    contains = None
    if all(r.contains_point for r in regions):
        contains = lambda p: all(r.contains_point(p) for r in regions)  # noqa: E731
    notes = tuple(dict.fromkeys(n for r in regions for n in r.notes))
    return Region(regions[0].dimension, common, classify, contains,
                  label="intersect", notes=notes)


def region_complement_within(r: Region, bounds: Box) -> Region:
    """Points of ``bounds`` not in ``r`` (three-valued complement)."""
    if bounds.dim != r.dimension:
        raise ValueError("bounds dimension mismatch")
    frame = primitive_box(bounds)

    def classify(b: Box) -> Classification:
        inner = r.classify(b)
        if inner is INSIDE:
            return OUTSIDE
        framed = frame.classify(b)
        if framed is OUTSIDE:
            return OUTSIDE
        if framed is INSIDE and inner is OUTSIDE:
            return INSIDE
        return INDETERMINATE

    contains = None
    if r.contains_point is not None:
        contains = lambda p: bounds.contains_point(p) and not r.contains_point(p)  # noqa: E731
    return Region(r.dimension, bounds, classify, contains,
                  label="complement", notes=r.notes)


def pathological_dense(bounds: Box) -> Region:
    """A dense set with empty interior: indeterminate on every probe.

    Models e.g. the rational points of the box: outer measure sees the whole
    box, inner measure sees nothing, at every refinement depth.
    """

    def classify(b: Box) -> Classification:
        return INDETERMINATE

    return Region(bounds.dim, bounds, classify, None, label="dense")
