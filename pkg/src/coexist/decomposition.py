"""Finite decompositions of boxes and the bisection search they power.

A decomposition is a finite tiling of a parent box.  Families of
decompositions are closed under the trivial decomposition, common
refinement, restriction and composition; these four closure properties are
verified on sampled instances rather than proved.  The family of
interval-decompositions (recursive hyperplane cuts) is the workhorse.

``cantor_point`` runs the compactness bisection: a predicate that is
semi-distributive under hyperplane cuts is followed down a chain of boxes of
halving diameter, producing an accumulation point with a checkable
certificate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

from .geometry import (
    Box,
    Hyperplane,
    Point,
    box_diameter,
    box_volume,
    cut_box,
    dyadic_cells,
    grid_edges,
)

__all__ = [
    "Decomposition",
    "DecompositionFamily",
    "SemiDistributivePredicate",
    "FamilyAxiomReport",
    "CantorResult",
    "SemiDistributivityError",
    "interval_decompose",
    "mesh_decompose",
    "common_refinement",
    "verify_family_axioms",
    "cantor_point",
    "dint_family",
    "tiles_parent",
    "random_dyadic_subbox",
]


@dataclass(frozen=True)
class Decomposition:
    parent: Box
    cells: tuple[Box, ...]
    family_tag: str = ""

    def __post_init__(self):
        if not self.cells:
            raise ValueError("a decomposition needs at least one cell")


def tiles_parent(dec: Decomposition, rel_tol: float = 1e-9) -> bool:
    """Containment + pairwise interior-disjointness + volume budget.

    For box cells this certifies a tiling up to a measure-zero overlap/gap
    margin of ``rel_tol`` relative to the parent volume.
    """
    parent = dec.parent
    for c in dec.cells:
        if not parent.contains_box(c):
            return False
    cells = dec.cells
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if cells[i].interior_intersects(cells[j]):
                return False
    total = math.fsum(box_volume(c) for c in cells)
    target = box_volume(parent)
    return abs(total - target) <= rel_tol * max(target, 1.0)


def interval_decompose(b: Box, cuts: list[Hyperplane] | tuple[Hyperplane, ...]) -> Decomposition:
    """Iterated hyperplane cutting.

    Each cut splits the first current cell whose interior it crosses; a cut
    crossing no cell is an error.  No cuts returns the trivial decomposition.
    """
    cells: list[Box] = [b]
    for h in cuts:
        if not 0 <= h.axis < b.dim:
            raise ValueError(f"axis {h.axis} invalid for dimension {b.dim}")
        for i, cell in enumerate(cells):
            lo_a = cell.lo.coords[h.axis]
            hi_a = cell.hi.coords[h.axis]
            if lo_a < h.offset < hi_a:
                minus, plus = cut_box(cell, h)
                cells[i : i + 1] = [minus, plus]
                break
        else:
            raise ValueError(
                f"cut at axis {h.axis}, offset {h.offset} misses every current cell"
            )
    return Decomposition(b, tuple(cells), family_tag="interval")


def mesh_decompose(b: Box, eps: float) -> Decomposition:
    """Uniform dyadic refinement until every cell diameter is below eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    diam = box_diameter(b)
    depth = 0
    while diam / (1 << depth) >= eps:
        depth += 1
        if depth > 60:
            raise ValueError("eps too small: refinement depth exceeds 60")
    return Decomposition(b, tuple(dyadic_cells(b, depth)), family_tag="mesh")


def common_refinement(h: Decomposition, g: Decomposition) -> Decomposition:
    """Pairwise intersections with degenerate slivers dropped."""
    if h.parent != g.parent:
        raise ValueError("decompositions have different parents")
    cells = []
    for a in h.cells:
        for b in g.cells:
            common = a.intersect(b)
            if common is not None and all(s > 0 for s in common.sides):
                cells.append(common)
    return Decomposition(h.parent, tuple(cells), family_tag=f"{h.family_tag}&{g.family_tag}")


@dataclass(frozen=True)
class DecompositionFamily:
    """A generator of decompositions plus its refinement rule.

    ``sample`` draws a random decomposition of the given box; ``refine``
    produces the common refinement of two decompositions of the same box
    (the default is the honest pairwise intersection).
    """

    name: str
    sample: Callable[[Box, random.Random], Decomposition]
    refine: Callable[[Decomposition, Decomposition], Decomposition] = common_refinement


def _random_dyadic_cut(cell: Box, rng: random.Random, grid: int = 1 << 10) -> Hyperplane:
    axis = rng.randrange(cell.dim)
    lo = cell.lo.coords[axis]
    hi = cell.hi.coords[axis]
    i = rng.randrange(1, grid)
    return Hyperplane(axis, lo + (hi - lo) * (i / grid))


def dint_family(max_cuts: int = 6) -> DecompositionFamily:
    """Interval-decompositions with random dyadic cut offsets."""

    def sample(b: Box, rng: random.Random) -> Decomposition:
        n_cuts = rng.randrange(max_cuts + 1)
        cells: list[Box] = [b]
        for _ in range(n_cuts):
            i = rng.randrange(len(cells))
            cell = cells[i]
            if all(s == 0 for s in cell.sides):
                continue
            while True:
                h = _random_dyadic_cut(cell, rng)
                if cell.lo.coords[h.axis] < h.offset < cell.hi.coords[h.axis]:
                    break
            minus, plus = cut_box(cell, h)
            cells[i : i + 1] = [minus, plus]
        return Decomposition(b, tuple(cells), family_tag="interval")

    return DecompositionFamily("interval-decompositions", sample)


@dataclass(frozen=True)
class FamilyAxiomReport:
    family: str
    samples: int
    passed: dict
    violations: tuple[tuple[str, str], ...]  # (axiom, witness description)

    @property
    def all_passed(self) -> bool:
        return not self.violations


def random_dyadic_subbox(domain: Box, rng: random.Random, grid: int = 1 << 6) -> Box:
    lo = []
    hi = []
    for a, b in zip(domain.lo.coords, domain.hi.coords):
        i = rng.randrange(0, grid - 1)
        j = rng.randrange(i + 1, grid)
        side = b - a
        lo.append(a + side * (i / grid))
        hi.append(a + side * (j / grid))
    return Box(Point(tuple(lo)), Point(tuple(hi)))


def verify_family_axioms(fam: DecompositionFamily, domain: Box, samples: int = 100,
                         seed: int = 0) -> FamilyAxiomReport:
    """Check the four closure properties on sampled instances.

    1. the trivial decomposition tiles;
    2. the family's refinement of two decompositions tiles the parent;
    3. restricting one decomposition to each cell of the other tiles that cell;
    4. composing a decomposition with decompositions of its cells tiles the parent.
    """
    rng = random.Random(seed)
    violations: list[tuple[str, str]] = []
    passed = {1: 0, 2: 0, 3: 0, 4: 0}

    for k in range(samples):
        a = random_dyadic_subbox(domain, rng)
        h = fam.sample(a, rng)
        g = fam.sample(a, rng)

        trivial = Decomposition(a, (a,), fam.name)
        if tiles_parent(trivial):
            passed[1] += 1
        else:
            violations.append(("1-trivial", f"sample {k}: {{A}} does not tile A={a}"))

        try:
            refined = fam.refine(h, g)
            ok = refined.parent == a and tiles_parent(refined)
        except Exception as exc:  # a broken refinement rule is a violation, not a crash
            ok = False
            refined = None
        if ok:
            passed[2] += 1
        else:
            violations.append(
                ("2-refinement", f"sample {k}: refinement of {len(h.cells)}x{len(g.cells)} cells fails on A={a}")
            )

        ok3 = True
        for gcell in g.cells:
            pieces = [
                common
                for hcell in h.cells
                if (common := hcell.intersect(gcell)) is not None
                and all(s > 0 for s in common.sides)
            ]
            if not pieces or not tiles_parent(Decomposition(gcell, tuple(pieces))):
                ok3 = False
                violations.append(("3-restriction", f"sample {k}: restriction to {gcell} fails"))
                break
        if ok3:
            passed[3] += 1

        composed: list[Box] = []
        for hcell in h.cells:
            composed.extend(fam.sample(hcell, rng).cells)
        if tiles_parent(Decomposition(a, tuple(composed))):
            passed[4] += 1
        else:
            violations.append(("4-composition", f"sample {k}: composed cells do not tile A={a}"))

    return FamilyAxiomReport(fam.name, samples, passed, tuple(violations))


# --------------------------------------------------------------------------
# Cantor compactness bisection


@dataclass(frozen=True)
class SemiDistributivePredicate:
    """Box predicate expected to survive on one side of every cut."""

    member: Callable[[Box], bool]
    score: Optional[Callable[[Box], float]] = None
    label: str = ""


class SemiDistributivityError(RuntimeError):
    """Raised when neither side of a bisection satisfies the predicate."""

    def __init__(self, parent: Box, minus: Box, plus: Box, step: int):
        self.parent = parent
        self.minus = minus
        self.plus = plus
        self.step = step
        super().__init__(
            f"predicate holds on a box but on neither half (bisection step {step})"
        )


@dataclass(frozen=True)
class CantorResult:
    point: Point
    chain: tuple[Box, ...]  # nested, diameters halving, all satisfying the predicate
    eps: float


def cantor_point(pred: SemiDistributivePredicate, s: Box, eps: float) -> CantorResult:
    """Bisection chain toward an accumulation point of the predicate.

    Each chain step bisects every axis once (longest side first, midpoint
    cuts), keeping a side on which the predicate holds -- when both survive,
    the higher score wins, defaulting to the lexicographically first.  The
    chain element diameters halve exactly; the final box has diameter < eps
    and its center is returned.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not pred.member(s):
        raise ValueError("predicate must hold on the starting box")
    chain = [s]
    current = s
    step = 0
    while box_diameter(current) >= eps:
        order = sorted(range(current.dim), key=lambda i: (-current.sides[i], i))
        for axis in order:
            step += 1
            lo = current.lo.coords[axis]
            hi = current.hi.coords[axis]
            h = Hyperplane(axis, lo + (hi - lo) / 2)
            minus, plus = cut_box(current, h)
            ok_minus = pred.member(minus)
            ok_plus = pred.member(plus)
            if not ok_minus and not ok_plus:
                raise SemiDistributivityError(current, minus, plus, step)
            if ok_minus and ok_plus:
                if pred.score is not None:
                    current = minus if pred.score(minus) >= pred.score(plus) else plus
                else:
                    current = minus
            else:
                current = minus if ok_minus else plus
        chain.append(current)
    return CantorResult(current.center(), tuple(chain), eps)
