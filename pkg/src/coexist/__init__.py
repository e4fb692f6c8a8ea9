"""coexist: rigorous computation with distributive set functions.

Peano-Jordan inner/outer measure over three-valued box oracles, families of
finite decompositions, strict / point-anchored / uniform derivatives of set
functions, Darboux integration against positive distributive set functions,
and a verification catalog of classical worked examples.
"""

from .geometry import (
    Box,
    Hyperplane,
    Point,
    box,
    box1d,
    box_diameter,
    box_volume,
    cube,
    cut_box,
    dyadic_cells,
    dyadic_children,
    point,
)
from .expr import (
    EvalError,
    Expression,
    ParseError,
    eval_array,
    eval_expression,
    interval_eval,
    parse_expression,
    pretty,
)
from .region import (
    Classification,
    Region,
    pathological_dense,
    primitive_ball,
    primitive_box,
    primitive_hypograph,
    primitive_polar_star,
    region_complement_within,
    region_intersect,
    region_union,
)
from .regionspec import RegionSpecError, build_region, parse_region, parse_region_spec
from .measure import (
    CutResidual,
    MeasureReport,
    cut_additivity_check,
    inner_measure,
    is_measurable,
    measure_report,
    outer_measure,
)
from .decomposition import (
    CantorResult,
    Decomposition,
    DecompositionFamily,
    SemiDistributivePredicate,
    SemiDistributivityError,
    cantor_point,
    common_refinement,
    dint_family,
    interval_decompose,
    mesh_decompose,
    tiles_parent,
    verify_family_axioms,
)
from .setfunc import (
    SetFunction,
    check_distributive,
    check_proportionality,
    excess_predicate,
    setfunc_from_spec,
    sf_arclength,
    sf_from_density,
    sf_interval_increment,
    sf_pj_restricted,
    sf_polar_sector,
    sf_projection_length,
    sf_scale,
    sf_sum,
    sf_unit_sector,
    sf_volume,
)
from .derivative import (
    DerivativeEstimate,
    NoAdmissibleCellsError,
    RatioBounds,
    continuity_probe,
    default_schedule,
    estimate_cauchy_derivative_1d,
    estimate_strict_derivative,
    estimate_uniform_derivative,
    mean_value_check,
    ratio_bounds,
    rn_inequality_check,
    smooth_schedule,
)
from .integral import (
    DarbouxSums,
    ExprFunction,
    GridInterpolant,
    IntegralResult,
    darboux_sums,
    integral_as_setfunction,
    integrate,
    peanodev_check,
)

__version__ = "0.1.0"
