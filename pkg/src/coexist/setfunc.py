"""Distributive set functions over boxes.

A set function assigns a real number to admissible boxes; the built-ins
cover every classical pairing exercised by the verification catalog: volume,
synthetic masses from a density (tensor Gauss quadrature as near-exact
ground truth), restricted Peano-Jordan measures, circular-sector pairs, arc
length against projection length, and one-dimensional increments F(b)-F(a).

Distributivity (the value on a whole equals the sum over the parts of a
decomposition) is a declared contract checked by sampling, never assumed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .decomposition import DecompositionFamily, SemiDistributivePredicate
from .expr import Expression, as_expression, eval_array, free_variables
from .geometry import Box, box_volume

__all__ = [
    "SetFunction",
    "DistributivityReport",
    "ProportionalityReport",
    "sf_volume",
    "sf_from_density",
    "sf_pj_restricted",
    "sf_polar_sector",
    "sf_unit_sector",
    "sf_arclength",
    "sf_projection_length",
    "sf_interval_increment",
    "sf_scale",
    "sf_sum",
    "check_distributive",
    "check_proportionality",
    "excess_predicate",
    "setfunc_from_spec",
    "axis_variable_names",
]

DEFAULT_QUAD_ORDER = 8


@dataclass(frozen=True)
class SetFunction:
    """Evaluator over boxes with a declared distributivity contract.

    ``lattice`` (optional) evaluates a whole grid of cells given per-axis
    edge arrays, returning an array of one value per cell; used by the
    derivative estimators to scan many cells cheaply.
    """

    label: str
    dimension: int
    positive: bool
    eval_box: Callable[[Box], float]
    lattice: Optional[Callable[[list[np.ndarray]], np.ndarray]] = None
    note: str = ""

    def eval(self, b: Box) -> float:
        if b.dim != self.dimension:
            raise ValueError(
                f"box dimension {b.dim} does not match set function dimension {self.dimension}"
            )
        v = self.eval_box(b)
        if not math.isfinite(v):
            raise ValueError(f"set function {self.label!r} produced non-finite value {v}")
        return v

    def eval_lattice(self, edges: list[np.ndarray]) -> np.ndarray:
        if len(edges) != self.dimension:
            raise ValueError("edge arrays must match the dimension")
        if self.lattice is not None:
            return self.lattice(edges)
        shape = tuple(len(e) - 1 for e in edges)
        out = np.empty(shape)
        from .geometry import Box as _B, Point as _P  # local alias for the slow path

        for idx in np.ndindex(shape):
            lo = tuple(edges[i][j] for i, j in enumerate(idx))
            hi = tuple(edges[i][j + 1] for i, j in enumerate(idx))
            out[idx] = self.eval(_B(_P(lo), _P(hi)))
        return out


def axis_variable_names(n: int) -> list[list[str]]:
    """Accepted variable spellings per axis: x1..xn always, x/y/z/t for the first four."""
    letters = ["x", "y", "z", "t"]
    names = []
    for i in range(n):
        row = [f"x{i + 1}"]
        if i < len(letters):
            row.append(letters[i])
        names.append(row)
    return names


def _check_vars(e: Expression, allowed: set[str], what: str):
    extra = free_variables(e) - allowed
    if extra:
        raise ValueError(f"{what} uses unknown variables {sorted(extra)}; allowed: {sorted(allowed)}")


@lru_cache(maxsize=None)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _tensor_quadrature(n: int, order: int, fvec: Callable[[list[np.ndarray]], np.ndarray]):
    """Build a lattice evaluator integrating ``fvec`` on every grid cell.

    ``fvec`` receives one flat coordinate array per axis (a full tensor mesh)
    and returns the integrand values on that mesh.
    """
    xs, ws = _gauss(order)

    def lattice(edges: list[np.ndarray]) -> np.ndarray:
        centers = [(np.asarray(e)[:-1] + np.asarray(e)[1:]) / 2 for e in edges]
        halves = [(np.asarray(e)[1:] - np.asarray(e)[:-1]) / 2 for e in edges]
        per_axis = [
            (c[:, None] + h[:, None] * xs[None, :]).reshape(-1)
            for c, h in zip(centers, halves)
        ]
        mesh = np.meshgrid(*per_axis, indexing="ij") if n > 1 else [per_axis[0]]
        vals = fvec([m.reshape(-1) for m in mesh])
        shape: list[int] = []
        for c in centers:
            shape.extend([len(c), order])
        vals = np.asarray(vals).reshape(shape)
        for axis in range(n - 1, -1, -1):
            vals = np.tensordot(vals, ws, axes=([2 * axis + 1], [0]))
        for axis in range(n):
            sh = [1] * vals.ndim
            sh[axis] = -1
            vals = vals * halves[axis].reshape(sh)
        return vals

    return lattice


def _eval_from_lattice(lattice, n: int) -> Callable[[Box], float]:
    def eval_box(b: Box) -> float:
        edges = [np.array([b.lo.coords[i], b.hi.coords[i]]) for i in range(n)]
        return float(lattice(edges).reshape(-1)[0])

    return eval_box


def sf_volume(n: int) -> SetFunction:
    """Elementary n-dimensional volume."""
    if n < 1:
        raise ValueError("dimension must be >= 1")

    def lattice(edges: list[np.ndarray]) -> np.ndarray:
        out = np.diff(np.asarray(edges[0]))
        for e in edges[1:]:
            out = np.multiply.outer(out, np.diff(np.asarray(e)))
        return out

    return SetFunction("volume", n, True, box_volume, lattice)


def sf_from_density(g: "Expression | str", n: int,
                    order: int = DEFAULT_QUAD_ORDER) -> SetFunction:
    """Synthetic mass with density g: tensor Gauss-Legendre quadrature per box.

    Order-``order`` Gauss rules are exact for per-axis polynomial degree
    2*order-1, so for the smooth densities used in tests the quadrature error
    (< 1e-12 on unit-scale boxes) plays the role of an exact magnitude.
    """
    g = as_expression(g)
    names = axis_variable_names(n)
    _check_vars(g, {nm for row in names for nm in row}, "density")

    def fvec(axes: list[np.ndarray]) -> np.ndarray:
        env = {}
        for i, arr in enumerate(axes):
            for nm in names[i]:
                env[nm] = arr
        return eval_array(g, env)

    lattice = _tensor_quadrature(n, order, fvec)
    return SetFunction(
        "density-mass",
        n,
        False,
        _eval_from_lattice(lattice, n),
        lattice,
        note=f"tensor Gauss-Legendre quadrature, order {order} per axis",
    )


def sf_pj_restricted(region, mode: str = "outer", depth: int = 10) -> SetFunction:
    """Peano-Jordan measure of a region restricted to slabs over axis 0.

    The value on a 1-D interval A is the depth-grid inner/outer measure of
    the region intersected with the slab A x (full extent of the remaining
    axes); straddled grid columns contribute proportionally to the overlap.
    Distributive over interval cuts exactly, by construction.
    """
    if mode not in ("inner", "outer"):
        raise ValueError("mode must be 'inner' or 'outer'")
    from .measure import iter_leaves  # deferred: measure builds on region only
    from .region import INSIDE

    bounds = region.bounds
    x_lo = bounds.lo.coords[0]
    x_hi = bounds.hi.coords[0]
    ncols = 1 << depth
    colw = (x_hi - x_lo) / ncols
    inner_cols = np.zeros(ncols)
    outer_cols = np.zeros(ncols)
    for leaf, level, cls in iter_leaves(region, depth):
        j0 = int(round((leaf.lo.coords[0] - x_lo) / colw))
        j1 = int(round((leaf.hi.coords[0] - x_lo) / colw))
        share = box_volume(leaf) / (j1 - j0)
        outer_cols[j0:j1] += share
        if cls is INSIDE:
            inner_cols[j0:j1] += share
    cols = inner_cols if mode == "inner" else outer_cols
    knots = np.array([x_lo + i * colw for i in range(ncols)] + [x_hi])
    cum = np.concatenate([[0.0], np.cumsum(cols)])

    def mass(t: np.ndarray) -> np.ndarray:
        return np.interp(np.clip(t, x_lo, x_hi), knots, cum)

    def eval_box(b: Box) -> float:
        a, c = b.lo.coords[0], b.hi.coords[0]
        return float(mass(np.array([c]))[0] - mass(np.array([a]))[0])

    def lattice(edges: list[np.ndarray]) -> np.ndarray:
        return np.diff(mass(np.asarray(edges[0])))

    return SetFunction(
        f"pj-{mode}[{region.label}]",
        1,
        True,
        eval_box,
        lattice,
        note=f"grid depth {depth}, slab overlap weighting along axis 0",
    )


def sf_polar_sector(rho: "Expression | str",
                    order: int = DEFAULT_QUAD_ORDER) -> SetFunction:
    """Area swept by a polar curve over an angle interval: quadrature of rho^2 / 2."""
    rho = as_expression(rho)
    _check_vars(rho, {"theta", "t", "x1"}, "polar radius")

    def fvec(axes: list[np.ndarray]) -> np.ndarray:
        ts = np.mod(axes[0], 2 * math.pi)
        vals = eval_array(rho, {"theta": ts, "t": ts, "x1": ts})
        if np.any(vals < 0):
            raise ValueError("polar radius expression produced a negative sample")
        return 0.5 * vals * vals

    fvec([np.linspace(0.0, 2 * math.pi, 257)])  # negativity check at construction
    lattice = _tensor_quadrature(1, order, fvec)
    return SetFunction(
        "polar-sector-area",
        1,
        True,
        _eval_from_lattice(lattice, 1),
        lattice,
        note=f"Gauss-Legendre quadrature of rho(theta)^2/2, order {order}",
    )


def sf_unit_sector() -> SetFunction:
    """Area of the unit-circle sector over an angle interval: |A| / 2."""

    def eval_box(b: Box) -> float:
        return 0.5 * (b.hi.coords[0] - b.lo.coords[0])

    def lattice(edges: list[np.ndarray]) -> np.ndarray:
        return 0.5 * np.diff(np.asarray(edges[0]))

    return SetFunction("unit-sector-area", 1, True, eval_box, lattice)


def sf_arclength(f: "Expression | str", a: float, b: float,
                 order: int = DEFAULT_QUAD_ORDER, fd_step: float = 1e-6) -> SetFunction:
    """Length of the graph of f above an interval: quadrature of sqrt(1 + f'^2).

    f' comes from central differences with the given step; with the default
    1e-6 the slope error is ~1e-11 for unit-scale curves.
    """
    f = as_expression(f)
    _check_vars(f, {"x", "x1"}, "arc function")
    if not a < b:
        raise ValueError("need a < b")

    def fvec(axes: list[np.ndarray]) -> np.ndarray:
        x = axes[0]
        up = eval_array(f, {"x": x + fd_step, "x1": x + fd_step})
        dn = eval_array(f, {"x": x - fd_step, "x1": x - fd_step})
        slope = (up - dn) / (2 * fd_step)
        return np.sqrt(1.0 + slope * slope)

    lattice = _tensor_quadrature(1, order, fvec)
    return SetFunction(
        "arc-length",
        1,
        True,
        _eval_from_lattice(lattice, 1),
        lattice,
        note=f"central differences (step {fd_step}), Gauss order {order}",
    )


def sf_projection_length() -> SetFunction:
    """Length of the projection interval itself; companion to sf_arclength."""
    sf = sf_volume(1)
    return SetFunction("projection-length", 1, True, sf.eval_box, sf.lattice)


def sf_interval_increment(f_expr: "Expression | str") -> SetFunction:
    """One-dimensional increment mass: value on [a, b] is F(b) - F(a)."""
    F = as_expression(f_expr)
    _check_vars(F, {"x", "x1"}, "increment function")

    def at(x: np.ndarray) -> np.ndarray:
        return eval_array(F, {"x": x, "x1": x})

    def eval_box(b: Box) -> float:
        vals = at(np.array([b.lo.coords[0], b.hi.coords[0]]))
        return float(vals[1] - vals[0])

    def lattice(edges: list[np.ndarray]) -> np.ndarray:
        return np.diff(at(np.asarray(edges[0])))

    return SetFunction("interval-increment", 1, False, eval_box, lattice,
                       note="telescopes exactly over interval decompositions")


def sf_scale(sf: SetFunction, c: float) -> SetFunction:
    def lattice(edges):
        return c * sf.eval_lattice(edges)

    return SetFunction(f"{c}*{sf.label}", sf.dimension, sf.positive and c >= 0,
                       lambda b: c * sf.eval(b), lattice, note=sf.note)


def sf_sum(a: SetFunction, b: SetFunction) -> SetFunction:
    if a.dimension != b.dimension:
        raise ValueError("dimension mismatch")

    def lattice(edges):
        return a.eval_lattice(edges) + b.eval_lattice(edges)

    return SetFunction(f"{a.label}+{b.label}", a.dimension, a.positive and b.positive,
                       lambda bx: a.eval(bx) + b.eval(bx), lattice)


# --------------------------------------------------------------------------
# contract checks


@dataclass(frozen=True)
class DistributivityReport:
    label: str
    family: str
    samples: int
    max_residual: float
    worst_parent: Optional[Box]
    worst_cells: int

    def within(self, bound: float) -> bool:
        return self.max_residual <= bound


def check_distributive(sf: SetFunction, fam: DecompositionFamily, domain: Box,
                       samples: int = 100, seed: int = 0) -> DistributivityReport:
    """Max |sf(parent) - sum over cells| over sampled decompositions."""
    from .decomposition import random_dyadic_subbox  # shared sampler

    rng = random.Random(seed)
    worst = 0.0
    worst_parent = None
    worst_cells = 0
    for _ in range(samples):
        parent = random_dyadic_subbox(domain, rng)
        dec = fam.sample(parent, rng)
        total = sf.eval(parent)
        parts = math.fsum(sf.eval(c) for c in dec.cells)
        residual = abs(total - parts)
        if residual > worst:
            worst = residual
            worst_parent = parent
            worst_cells = len(dec.cells)
    return DistributivityReport(sf.label, fam.name, samples, worst, worst_parent, worst_cells)


@dataclass(frozen=True)
class ProportionalityReport:
    label: str
    samples: int
    translation_deviation: float
    translation_witness: Optional[tuple[Box, Box]]
    ratio: float
    fit_deviation: float
    fit_witness: Optional[Box]

    def proportional(self, tol: float = 1e-9) -> bool:
        return self.translation_deviation <= tol and self.fit_deviation <= tol


def check_proportionality(sf: SetFunction, domain: Box, samples: int = 200,
                          seed: int = 0) -> ProportionalityReport:
    """Test 'equal parts get equal values' and fit a length-proportional model.

    Congruent interval pairs probe translation invariance; the constant of the
    fit sf([a,b]) ~= c (b-a) is taken from the whole domain and the maximal
    absolute deviation is reported with a witness.
    """
    if sf.dimension != 1:
        raise ValueError("proportionality check applies to 1-D interval functions")
    rng = random.Random(seed)
    lo = domain.lo.coords[0]
    hi = domain.hi.coords[0]
    span = hi - lo
    grid = 1 << 10

    def dyadic_interval(width_cells: int) -> Box:
        start = rng.randrange(grid - width_cells + 1)
        from .geometry import box1d

        return box1d(lo + span * (start / grid), lo + span * ((start + width_cells) / grid))

    t_dev = 0.0
    t_wit = None
    for _ in range(samples):
        w = rng.randrange(1, grid // 2)
        b1 = dyadic_interval(w)
        b2 = dyadic_interval(w)
        d = abs(sf.eval(b1) - sf.eval(b2))
        if d > t_dev:
            t_dev = d
            t_wit = (b1, b2)
    c = sf.eval(domain) / span
    f_dev = 0.0
    f_wit = None
    for _ in range(samples):
        w = rng.randrange(1, grid)
        bx = dyadic_interval(w)
        d = abs(sf.eval(bx) - c * (bx.hi.coords[0] - bx.lo.coords[0]))
        if d > f_dev:
            f_dev = d
            f_wit = bx
    return ProportionalityReport(sf.label, samples, t_dev, t_wit, c, f_dev, f_wit)


def excess_predicate(mu: SetFunction, nu: SetFunction, level: float) -> SemiDistributivePredicate:
    """Boxes where mu exceeds level * nu; semi-distributive whenever mu, nu are distributive."""

    def member(b: Box) -> bool:
        return mu.eval(b) > level * nu.eval(b)

    def score(b: Box) -> float:
        return mu.eval(b) - level * nu.eval(b)

    return SemiDistributivePredicate(member, score, label=f"{mu.label} > {level} * {nu.label}")


# --------------------------------------------------------------------------
# CLI spec strings


def setfunc_from_spec(spec: str, dimension: int, depth: int = 10) -> SetFunction:
    """Build a set function from its command-line spec string.

    Formats: ``volume``, ``density:EXPR``, ``increment:EXPR``,
    ``pj:inner|outer:REGIONFILE``, ``arclength:EXPR:a:b``, ``polar:EXPR``.
    """
    if spec == "volume":
        return sf_volume(dimension)
    head, _, rest = spec.partition(":")
    if head == "density":
        if not rest:
            raise ValueError("density spec needs an expression: density:EXPR")
        return sf_from_density(rest, dimension)
    if head == "increment":
        if not rest:
            raise ValueError("increment spec needs an expression: increment:EXPR")
        return sf_interval_increment(rest)
    if head == "polar":
        if not rest:
            raise ValueError("polar spec needs an expression: polar:EXPR")
        return sf_polar_sector(rest)
    if head == "arclength":
        parts = rest.rsplit(":", 2)
        if len(parts) != 3:
            raise ValueError("arclength spec is arclength:EXPR:a:b")
        return sf_arclength(parts[0], float(parts[1]), float(parts[2]))
    if head == "pj":
        mode, _, path = rest.partition(":")
        if mode not in ("inner", "outer") or not path:
            raise ValueError("pj spec is pj:inner|outer:REGIONFILE")
        from .regionspec import parse_region

        with open(path, "r", encoding="utf-8") as fh:
            region = parse_region(fh.read())
        return sf_pj_restricted(region, mode, depth)
    raise ValueError(f"unknown set function spec {spec!r}")
