"""Ratio-bound estimators for set-function derivatives.

Three admissibility modes mirror the three classical derivative notions:

* strict ("peano"): the ratio mu(A)/nu(A) over admissible sets A contained
  in a shrinking Euclidean ball around the point, the point itself not
  required to belong to A;
* point-anchored ("cauchy"): the same with the point required to lie in A;
* uniform: the point-anchored bounds with one shared radius over a whole
  grid of sample points.

Admissible sets are dyadic grid cells plus rectangular unions of up to
``cluster`` adjacent cells per axis.  The reported width (hi - lo) is
therefore a lower bound on the true oscillation over all admissible sets;
non-convergence is a first-class result, never an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import Expression, as_expression, eval_array, free_variables
from .geometry import Box, Point, box_volume, cube, grid_edges
from .parallel import pmap
from .setfunc import SetFunction

__all__ = [
    "RatioBounds",
    "DerivativeEstimate",
    "UniformDerivativeReport",
    "MeanValueReport",
    "RNLevelReport",
    "RNReport",
    "ContinuityReport",
    "NoAdmissibleCellsError",
    "ratio_bounds",
    "estimate_strict_derivative",
    "estimate_cauchy_derivative_1d",
    "estimate_uniform_derivative",
    "mean_value_check",
    "rn_inequality_check",
    "continuity_probe",
    "default_schedule",
    "smooth_schedule",
]

NU_FLOOR = 1e-300  # excludes exact zeros of nu only

SCAN_NOTE = (
    "admissible sets are dyadic cells and rectangular clusters; the reported "
    "width is a lower bound on the oscillation over all admissible sets"
)


class NoAdmissibleCellsError(RuntimeError):
    """No grid cell fits in the ball: delta too small for the grid depth."""


@dataclass(frozen=True)
class RatioBounds:
    lo: float
    hi: float
    delta: float
    depth: int
    cells_examined: int
    mode: str

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return self.lo + (self.hi - self.lo) / 2


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    converged: bool
    tol: float
    mode: str
    width_history: tuple[tuple[float, float], ...]  # (delta, width)
    final: Optional[RatioBounds]
    note: str = SCAN_NOTE

    @property
    def terminal_width(self) -> float:
        return self.width_history[-1][1]


def default_schedule(dim: int, k_lo: int = 3, k_hi: int = 16) -> list[tuple[float, int]]:
    """Shrinking balls delta_k = 2^-k with grid depth tied to the stage.

    In one dimension the grid refines twice as fast as the ball so that
    sub-scale oscillations (the classical non-differentiability witnesses)
    stay resolvable at every stage; in higher dimensions that is
    unaffordable and the depth tracks the stage.
    """
    depths = (lambda k: 2 * k + 4) if dim == 1 else (lambda k: k + 4)
    return [(2.0 ** -k, depths(k)) for k in range(k_lo, k_hi + 1)]


def smooth_schedule(dim: int, k_lo: int = 3, k_hi: int = 16) -> list[tuple[float, int]]:
    """Cheaper schedule for slow-to-evaluate masses with smooth densities."""
    return [(2.0 ** -k, k + 4) for k in range(k_lo, k_hi + 1)]


def _axis_window(lo: float, hi: float, m: int, x: float, delta: float) -> tuple[int, int, float]:
    """Index range [j0, j1) of cells of the m-grid on [lo, hi] inside [x-d, x+d]."""
    step = (hi - lo) / m
    j0 = max(0, min(m, int(math.floor((x - delta - lo) / step))))
    while j0 < m and lo + j0 * step < x - delta:
        j0 += 1
    while j0 > 0 and lo + (j0 - 1) * step >= x - delta:
        j0 -= 1
    j1 = min(m, max(0, int(math.ceil((x + delta - lo) / step))))
    while j1 > 0 and lo + j1 * step > x + delta:
        j1 -= 1
    while j1 < m and lo + (j1 + 1) * step <= x + delta:
        j1 += 1
    return j0, j1, step


def _sliding_sum(a: np.ndarray, s: int, axis: int) -> np.ndarray:
    if s == 1:
        return a
    c = np.cumsum(a, axis=axis)
    pad_shape = list(a.shape)
    pad_shape[axis] = 1
    cz = np.concatenate([np.zeros(pad_shape), c], axis=axis)
    n = a.shape[axis]
    upper = cz.take(range(s, n + 1), axis=axis)
    lower = cz.take(range(0, n + 1 - s), axis=axis)
    return upper - lower


def ratio_bounds(mu: SetFunction, nu: SetFunction, x: Point, delta: float, depth: int,
                 mode: str = "peano", domain: Optional[Box] = None,
                 cluster: int = 3) -> RatioBounds:
    """Extremes of mu(A)/nu(A) over admissible grid sets near x.

    A is any depth-grid cell of ``domain`` contained in the Euclidean ball of
    radius delta around x (and containing x, in cauchy mode), together with
    every rectangular union of up to ``cluster`` adjacent cells per axis.
    mu on a union is the sum over its cells (that is what distributivity
    means), evaluated with windowed prefix sums.
    """
    if mode not in ("peano", "cauchy"):
        raise ValueError("mode must be 'peano' or 'cauchy'")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not nu.positive:
        raise ValueError("nu must be a positive set function")
    n = mu.dimension
    if nu.dimension != n or x.dim != n:
        raise ValueError("dimension mismatch between mu, nu and the point")
    if domain is None:
        domain = cube(x.coords, 1.0)
    m = 1 << depth

    windows = []
    for i in range(n):
        j0, j1, step = _axis_window(domain.lo.coords[i], domain.hi.coords[i], m,
                                    x.coords[i], delta)
        if j1 <= j0:
            raise NoAdmissibleCellsError(
                f"no depth-{depth} cell of axis {i} fits inside the delta={delta} ball"
            )
        lo_i = domain.lo.coords[i]
        hi_i = domain.hi.coords[i]
        edges = np.array(
            [hi_i if j == m else lo_i + j * step for j in range(j0, j1 + 1)]
        )
        windows.append(edges)

    mu_cells = np.asarray(mu.eval_lattice(windows), dtype=float)
    nu_cells = np.asarray(nu.eval_lattice(windows), dtype=float)

    d2 = delta * delta
    best_lo = math.inf
    best_hi = -math.inf
    examined = 0
    for shape in product(range(1, cluster + 1), repeat=n):
        if any(s > mu_cells.shape[i] for i, s in enumerate(shape)):
            continue
        s_mu = mu_cells
        s_nu = nu_cells
        for axis, s in enumerate(shape):
            s_mu = _sliding_sum(s_mu, s, axis)
            s_nu = _sliding_sum(s_nu, s, axis)
        # farthest corner of the block from x, per axis, then Euclidean mask
        total = np.zeros(s_mu.shape)
        contains = np.ones(s_mu.shape, dtype=bool)
        for axis, s in enumerate(shape):
            e = windows[axis]
            xi = x.coords[axis]
            far = np.maximum(np.abs(xi - e[: e.size - s]), np.abs(e[s:] - xi))
            sh = [1] * n
            sh[axis] = -1
            total = total + (far * far).reshape(sh)
            if mode == "cauchy":
                inside = (e[: e.size - s] <= xi) & (xi <= e[s:])
                contains = contains & inside.reshape(sh)
        mask = total <= d2
        if mode == "cauchy":
            mask &= contains
        mask &= np.abs(s_nu) > NU_FLOOR
        k = int(mask.sum())
        if k == 0:
            continue
        examined += k
        ratios = s_mu[mask] / s_nu[mask]
        lo = float(ratios.min())
        hi = float(ratios.max())
        best_lo = min(best_lo, lo)
        best_hi = max(best_hi, hi)
    if examined == 0:
        raise NoAdmissibleCellsError(
            f"no admissible set at delta={delta}, depth={depth}, mode={mode}"
        )
    return RatioBounds(best_lo, best_hi, delta, depth, examined, mode)


def estimate_strict_derivative(mu: SetFunction, nu: SetFunction, x: Point,
                               tol: float = 1e-3,
                               schedule: Optional[Sequence[tuple[float, int]]] = None,
                               mode: str = "peano",
                               domain: Optional[Box] = None,
                               cluster: int = 3) -> DerivativeEstimate:
    """Run the shrinking-ball schedule until the ratio bounds are tol-narrow.

    Non-convergence (the full schedule runs without the width dropping below
    tol) is reported through ``converged=False`` with the width history; the
    strict derivative simply may not exist.
    """
    if schedule is None:
        schedule = default_schedule(mu.dimension)
    history: list[tuple[float, float]] = []
    final: Optional[RatioBounds] = None
    for delta, depth in schedule:
        try:
            rb = ratio_bounds(mu, nu, x, delta, depth, mode, domain, cluster)
        except NoAdmissibleCellsError:
            continue
        final = rb
        history.append((delta, rb.width))
        if rb.width < tol:
            return DerivativeEstimate(rb.midpoint, True, tol, mode, tuple(history), rb)
    if final is None:
        raise NoAdmissibleCellsError("every schedule stage was too coarse for its ball")
    return DerivativeEstimate(final.midpoint, False, tol, mode, tuple(history), final)


def estimate_cauchy_derivative_1d(f: "Expression | str", x: float, tol: float = 1e-3,
                                  deltas: Optional[Sequence[float]] = None,
                                  grid: int = 64) -> DerivativeEstimate:
    """Two-sided difference-quotient bounds (f(x+h) - f(x-k)) / (h+k).

    h and k range over a uniform grid on [0, delta] with h + k > 0; the
    quotient converges exactly when f'(x) exists, continuity of f' is not
    needed.
    """
    f = as_expression(f)
    extra = free_variables(f) - {"x", "x1"}
    if extra:
        raise ValueError(f"function of one variable expected, found {sorted(extra)}")
    if deltas is None:
        deltas = [2.0 ** -k for k in range(3, 17)]
    history: list[tuple[float, float]] = []
    final = None
    for delta in deltas:
        hs = np.linspace(0.0, delta, grid + 1)
        up = eval_array(f, {"x": x + hs, "x1": x + hs})
        dn = eval_array(f, {"x": x - hs, "x1": x - hs})
        denom = hs[:, None] + hs[None, :]
        numer = up[:, None] - dn[None, :]
        mask = denom > 0
        ratios = numer[mask] / denom[mask]
        lo = float(ratios.min())
        hi = float(ratios.max())
        rb = RatioBounds(lo, hi, delta, 0, int(mask.sum()), "cauchy-1d")
        final = rb
        history.append((delta, rb.width))
        if rb.width < tol:
            return DerivativeEstimate(rb.midpoint, True, tol, "cauchy-1d", tuple(history), rb)
    return DerivativeEstimate(final.midpoint, False, tol, "cauchy-1d", tuple(history), final)


@dataclass(frozen=True)
class UniformDerivativeReport:
    points: tuple[Point, ...]
    estimates: tuple[DerivativeEstimate, ...]
    uniform: bool
    eta: Optional[float]  # shared radius achieving tol at every point
    stages_run: int
    bounded_ratio: float  # max |mu(cell)| / vol(cell) over a coarse grid
    tol: float


def _probe_points(k_box: Box, per_axis: int, geometric: int = 10) -> list[Point]:
    """Uniform grid over the box plus geometric ladders toward its center.

    The ladders land near the center at every dyadic scale, which is where a
    merely-pointwise derivative typically fails to be uniform.
    """
    n = k_box.dim
    axes = []
    for i in range(n):
        lo, hi = k_box.lo.coords[i], k_box.hi.coords[i]
        axes.append([lo + (hi - lo) * (j + 0.5) / per_axis for j in range(per_axis)])
    points = [Point(tuple(c)) for c in product(*axes)]
    center = k_box.center()
    for i in range(n):
        half = (k_box.hi.coords[i] - k_box.lo.coords[i]) / 2
        for j in range(1, geometric + 1):
            for sign in (-1.0, 1.0):
                c = list(center.coords)
                c[i] = center.coords[i] + sign * half * 2.0 ** -j
                p = Point(tuple(c))
                if k_box.contains_point(p):
                    points.append(p)
    seen = {}
    for p in points:
        seen.setdefault(p.coords, p)
    return list(seen.values())


def estimate_uniform_derivative(mu: SetFunction, nu: SetFunction, k_box: Box,
                                tol: float = 1e-3,
                                schedule: Optional[Sequence[tuple[float, int]]] = None,
                                points: Optional[Sequence[Point]] = None,
                                cluster: int = 3) -> UniformDerivativeReport:
    """Point-anchored bounds with one shared radius per stage across the box.

    The uniform flag is set when a single stage radius brings the width below
    tol at every sample point simultaneously.  Also reports the
    bounded-derivative ratio max |mu(cell)| / vol(cell) on a coarse grid.
    """
    if schedule is None:
        schedule = default_schedule(mu.dimension)
    if points is None:
        points = _probe_points(k_box, 9 if mu.dimension == 1 else 5)
    n = mu.dimension

    coarse_edges = [np.array(grid_edges(k_box.lo.coords[i], k_box.hi.coords[i], 64))
                    for i in range(n)]
    mu_coarse = np.asarray(mu.eval_lattice(coarse_edges))
    vol_coarse = np.asarray(sf_volume_lattice(coarse_edges))
    bounded_ratio = float(np.max(np.abs(mu_coarse) / vol_coarse))

    histories: list[list[tuple[float, float]]] = [[] for _ in points]
    finals: list[Optional[RatioBounds]] = [None] * len(points)
    uniform = False
    eta = None
    stages = 0
    for delta, depth in schedule:
        stages += 1

        def stage_point(p: Point) -> Optional[RatioBounds]:
            try:
                return ratio_bounds(mu, nu, p, delta, depth, "cauchy", k_box, cluster)
            except NoAdmissibleCellsError:
                return None

        results = pmap(stage_point, points)
        all_ok = True
        for i, rb in enumerate(results):
            if rb is None:
                all_ok = False
                continue
            finals[i] = rb
            histories[i].append((delta, rb.width))
            if not rb.width < tol:
                all_ok = False
        if all_ok:
            uniform = True
            eta = delta
            break
    estimates = tuple(
        DerivativeEstimate(
            fb.midpoint,
            bool(hist and hist[-1][1] < tol),
            tol,
            "cauchy",
            tuple(hist),
            fb,
        )
        for fb, hist in zip(finals, histories)
        if fb is not None
    )
    kept_points = tuple(p for p, fb in zip(points, finals) if fb is not None)
    return UniformDerivativeReport(kept_points, estimates, uniform, eta, stages,
                                   bounded_ratio, tol)


def sf_volume_lattice(edges: list[np.ndarray]) -> np.ndarray:
    out = np.diff(np.asarray(edges[0]))
    for e in edges[1:]:
        out = np.multiply.outer(out, np.diff(np.asarray(e)))
    return out


@dataclass(frozen=True)
class MeanValueReport:
    checked: int
    lo: float
    hi: float
    tol: float
    violations: tuple[tuple[Box, float], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def mean_value_check(mu: SetFunction, nu: SetFunction, s_box: Box,
                     g_bounds: tuple[float, float], samples: int = 500,
                     seed: int = 0, tol: float = 1e-6) -> MeanValueReport:
    """Check inf g - tol <= mu(A)/nu(A) <= sup g + tol on random sub-boxes.

    ``g_bounds`` is the caller's enclosure of the derivative range on the box
    (from sampled estimates, or certified interval bounds of a known
    density).
    """
    import random

    rng = random.Random(seed)
    g_lo, g_hi = g_bounds
    violations = []
    checked = 0
    n = s_box.dim
    for _ in range(samples):
        lo = []
        hi = []
        for i in range(n):
            a, b = s_box.lo.coords[i], s_box.hi.coords[i]
            start = a + (b - a) * rng.random()
            width = (b - start) * rng.random()
            lo.append(start)
            hi.append(start + width)
        bx = Box(Point(tuple(lo)), Point(tuple(hi)))
        v = nu.eval(bx)
        if not v > NU_FLOOR:
            continue
        checked += 1
        ratio = mu.eval(bx) / v
        if not (g_lo - tol <= ratio <= g_hi + tol):
            violations.append((bx, ratio))
    return MeanValueReport(checked, g_lo, g_hi, tol, tuple(violations))


@dataclass(frozen=True)
class RNLevelReport:
    level: float
    cells_above: int
    cells_below: int
    violations: tuple[tuple[Box, str], ...]


@dataclass(frozen=True)
class RNReport:
    depth: int
    tol: float
    levels: tuple[RNLevelReport, ...]

    @property
    def ok(self) -> bool:
        return all(not lv.violations for lv in self.levels)


def rn_inequality_check(mu: SetFunction, nu: SetFunction, g: "Expression | str",
                        levels: Sequence[float], depth: int, domain: Box,
                        tol: float = 1e-9) -> RNReport:
    """Density characterization by level sets.

    For each level a: every depth-grid cell certified inside {g >= a} (via
    interval bounds of g) must satisfy mu(A) >= a nu(A) - tol, and dually on
    {g <= a}.  Cell unions follow by additivity, so cells are checked
    individually plus as aggregates.
    """
    from .expr import interval_eval
    from .geometry import dyadic_cells
    from .setfunc import axis_variable_names

    g = as_expression(g)
    names = axis_variable_names(domain.dim)
    out_levels = []
    cells = list(dyadic_cells(domain, depth))
    enclosures = []
    for c in cells:
        env = {}
        for i in range(domain.dim):
            iv = (c.lo.coords[i], c.hi.coords[i])
            for nm in names[i]:
                env[nm] = iv
        enclosures.append(interval_eval(g, env))
    for a in levels:
        above = [c for c, (glo, ghi) in zip(cells, enclosures) if glo >= a]
        below = [c for c, (glo, ghi) in zip(cells, enclosures) if ghi <= a]
        violations = []
        agg_mu_above = 0.0
        agg_nu_above = 0.0
        for c in above:
            m, v = mu.eval(c), nu.eval(c)
            agg_mu_above += m
            agg_nu_above += v
            if not m >= a * v - tol:
                violations.append((c, f"mu={m} < {a}*nu={a * v} on a cell of {{g >= {a}}}"))
        if above and not agg_mu_above >= a * agg_nu_above - tol * len(above):
            violations.append((above[0], f"aggregate over {{g >= {a}}} fails"))
        agg_mu_below = 0.0
        agg_nu_below = 0.0
        for c in below:
            m, v = mu.eval(c), nu.eval(c)
            agg_mu_below += m
            agg_nu_below += v
            if not m <= a * v + tol:
                violations.append((c, f"mu={m} > {a}*nu={a * v} on a cell of {{g <= {a}}}"))
        if below and not agg_mu_below <= a * agg_nu_below + tol * len(below):
            violations.append((below[0], f"aggregate over {{g <= {a}}} fails"))
        out_levels.append(RNLevelReport(a, len(above), len(below), tuple(violations)))
    return RNReport(depth, tol, tuple(out_levels))


@dataclass(frozen=True)
class ContinuityReport:
    ladder: tuple[tuple[float, float], ...]  # (h, omega(h)), h increasing

    @property
    def max_omega(self) -> float:
        return self.ladder[-1][1] if self.ladder else 0.0

    def lipschitz_ok(self, lip: float, slack: float = 0.1) -> bool:
        return all(omega <= (lip + slack) * h for h, omega in self.ladder)


def continuity_probe(samples: Sequence[tuple[Point, float]], rungs: int = 8) -> ContinuityReport:
    """Empirical modulus of continuity of estimated derivative values.

    omega(h) = max |g(x) - g(y)| over sample pairs with |x - y| <= h, for a
    ladder of h up to the sample diameter.  omega is nondecreasing in h by
    construction; a derivative that exists strictly must show omega -> 0.
    """
    pts = [p for p, _ in samples]
    vals = [v for _, v in samples]
    dists = []
    diffs = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            dists.append(pts[i].dist(pts[j]))
            diffs.append(abs(vals[i] - vals[j]))
    if not dists:
        return ContinuityReport(())
    dmax = max(dists)
    ladder = []
    for r in range(1, rungs + 1):
        h = dmax * r / rungs
        omega = max((df for d, df in zip(dists, diffs) if d <= h), default=0.0)
        ladder.append((h, omega))
    return ContinuityReport(tuple(ladder))
