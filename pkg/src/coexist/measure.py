"""Peano-Jordan inner and outer measure on finite dyadic grids.

A region's bounding box is refined into the depth-``d`` dyadic grid; cells
certified Inside count toward the inner measure, cells not certified Outside
count toward the outer measure.  The scan prunes certified subtrees (sound
because oracles are monotone under box inclusion), which gives exactly the
same cell sums as the full grid.  All sums go through ``math.fsum`` so the
result is independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import Box, Hyperplane, box_volume, cut_box, dyadic_children, grid_edges
from .parallel import pmap
from .region import INDETERMINATE, INSIDE, OUTSIDE, Region

__all__ = [
    "MeasureReport",
    "MeasurabilityVerdict",
    "CutResidual",
    "measure_report",
    "outer_measure",
    "inner_measure",
    "is_measurable",
    "cut_additivity_check",
    "iter_leaves",
]


@dataclass(frozen=True)
class MeasureReport:
    inner: float
    outer: float
    depth: int
    cells_inside: int
    cells_indeterminate: int

    @property
    def gap(self) -> float:
        return self.outer - self.inner

    def as_dict(self) -> dict:
        return {
            "inner": self.inner,
            "outer": self.outer,
            "gap": self.gap,
            "depth": self.depth,
            "cells_inside": self.cells_inside,
            "cells_indeterminate": self.cells_indeterminate,
        }


@dataclass(frozen=True)
class MeasurabilityVerdict:
    measurable: bool
    tol: float
    depth: Optional[int]  # first depth achieving gap < tol, None when exhausted
    report: MeasureReport  # report at the decision depth (or the deepest tried)
    history: tuple[tuple[int, float], ...]  # (depth, gap)


@dataclass(frozen=True)
class CutResidual:
    hyperplane: Hyperplane
    depth: int
    outer_residual: float
    inner_residual: float
    outer_whole: float
    inner_whole: float
    outer_parts: tuple[float, float]
    inner_parts: tuple[float, float]


def _scan(region: Region, b: Box, level: int, depth: int, clip: Optional[Box],
          inner_parts: list, outer_parts: list, counts: list):
    """Collect leaf volume contributions of the depth-grid under ``b``.

    ``counts`` accumulates [inside_cells, indeterminate_cells] at depth
    granularity.  ``clip`` restricts contributions to a sub-box; straddling
    cells contribute the volume of their clipped part (cells are counted for
    classification on the unclipped grid).
    """
    if clip is not None:
        common = b.intersect(clip)
        if common is None or any(s <= 0 for s in common.sides):
            return
        clipped_here = common
        fully_inside_clip = common == b
    else:
        clipped_here = b
        fully_inside_clip = True

    cls = region.classify(b)
    if cls is OUTSIDE:
        return
    scale = 1 << (region.dimension * (depth - level))
    if cls is INSIDE:
        v = box_volume(clipped_here)
        inner_parts.append(v)
        outer_parts.append(v)
        if fully_inside_clip:
            counts[0] += scale
        return
    if level == depth:
        outer_parts.append(box_volume(clipped_here))
        if fully_inside_clip:
            counts[1] += 1
        return
    for child in dyadic_children(b):
        _scan(region, child, level + 1, depth, clip, inner_parts, outer_parts, counts)


def measure_report(region: Region, depth: int, clip: Optional[Box] = None) -> MeasureReport:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    root = region.bounds
    counts = [0, 0]
    inner_parts: list[float] = []
    outer_parts: list[float] = []
    start_level = 0
    roots = [root]
    # fan out two levels for the worker pool; fsum keeps results identical
    if depth >= 2:
        roots = [g for c in dyadic_children(root) for g in dyadic_children(c)]
        start_level = 2

    def work(sub: Box):
        ip: list[float] = []
        op: list[float] = []
        ct = [0, 0]
        _scan(region, sub, start_level, depth, clip, ip, op, ct)
        return ip, op, ct

    if start_level:
        for ip, op, ct in pmap(work, roots):
            inner_parts.extend(ip)
            outer_parts.extend(op)
            counts[0] += ct[0]
            counts[1] += ct[1]
    else:
        _scan(region, root, 0, depth, clip, inner_parts, outer_parts, counts)
    return MeasureReport(
        inner=math.fsum(inner_parts),
        outer=math.fsum(outer_parts),
        depth=depth,
        cells_inside=counts[0],
        cells_indeterminate=counts[1],
    )


def iter_leaves(region: Region, depth: int):
    """Yield (box, level, classification) for the pruned depth-grid scan.

    Inside boxes surface at the shallowest certified level; Indeterminate
    cells surface at full depth; Outside subtrees are skipped.
    """

    def walk(b: Box, level: int):
        cls = region.classify(b)
        if cls is OUTSIDE:
            return
        if cls is INSIDE:
            yield b, level, cls
            return
        if level == depth:
            yield b, level, cls
            return
        for child in dyadic_children(b):
            yield from walk(child, level + 1)

    yield from walk(region.bounds, 0)


def outer_measure(region: Region, depth: int) -> float:
    return measure_report(region, depth).outer


def inner_measure(region: Region, depth: int) -> float:
    return measure_report(region, depth).inner


def is_measurable(region: Region, tol: float, max_depth: int) -> tuple[bool, MeasurabilityVerdict]:
    """Search the first depth at which outer - inner < tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    history = []
    last = None
    for d in range(max_depth + 1):
        rep = measure_report(region, d)
        history.append((d, rep.gap))
        last = rep
        if rep.gap < tol:
            verdict = MeasurabilityVerdict(True, tol, d, rep, tuple(history))
            return True, verdict
    verdict = MeasurabilityVerdict(False, tol, None, last, tuple(history))
    return False, verdict


def _aligned_offset(region: Region, h: Hyperplane, depth: int) -> None:
    lo = region.bounds.lo.coords[h.axis]
    hi = region.bounds.hi.coords[h.axis]
    edges = grid_edges(lo, hi, 1 << depth)
    if h.offset not in edges:
        raise ValueError(
            f"hyperplane offset {h.offset} does not lie on the depth-{depth} grid of axis {h.axis}"
        )


def cut_additivity_check(region: Region, h: Hyperplane, depth: int) -> CutResidual:
    """Residual of outer/inner measure across a grid-aligned hyperplane cut.

    Zero (exactly, for dyadic bounds) because the depth-grid cells partition
    into the two closed sides.  This expresses the cut form of additivity,
    which even the dense counterexample satisfies while failing set
    complement additivity.
    """
    if not 0 <= h.axis < region.dimension:
        raise ValueError("invalid axis")
    _aligned_offset(region, h, depth)
    minus, plus = cut_box(region.bounds, h)
    whole = measure_report(region, depth)

    def side(b: Optional[Box]) -> MeasureReport:
        if b is None:
            return MeasureReport(0.0, 0.0, depth, 0, 0)
        return measure_report(region, depth, clip=b)

    rep_minus = side(minus)
    rep_plus = side(plus)
    return CutResidual(
        hyperplane=h,
        depth=depth,
        outer_residual=abs(rep_minus.outer + rep_plus.outer - whole.outer),
        inner_residual=abs(rep_minus.inner + rep_plus.inner - whole.inner),
        outer_whole=whole.outer,
        inner_whole=whole.inner,
        outer_parts=(rep_minus.outer, rep_plus.outer),
        inner_parts=(rep_minus.inner, rep_plus.inner),
    )
