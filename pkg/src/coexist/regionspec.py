"""JSON documents describing regions: the artifact's configuration surface.

A document is a UTF-8 JSON object with a ``kind`` field and kind-specific
parameters; expressions appear as strings in the expression language.

kinds::

    {"kind": "ball", "center": [0, 0], "radius": 1}
    {"kind": "box", "lo": [0, 0], "hi": [1, 1]}
    {"kind": "hypograph", "f": "x^2", "a": 0, "b": 1}
    {"kind": "polar_star", "rho": "1 + cos(theta)"}
    {"kind": "union",     "parts": [DOC, DOC, ...]}
    {"kind": "intersect", "parts": [DOC, DOC, ...]}
    {"kind": "complement", "of": DOC, "bounds": [[-2, -2], [2, 2]]}
    {"kind": "dense", "bounds": [[0], [1]]}

``bounds`` is a [lo, hi] coordinate pair; primitives derive their own
bounding box when it is omitted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from . import region as _region
from .expr import ParseError, parse_expression
from .geometry import Box, box

__all__ = ["RegionSpec", "RegionSpecError", "parse_region_spec", "build_region", "parse_region"]

KINDS = ("ball", "box", "hypograph", "polar_star", "union", "intersect", "complement", "dense")


class RegionSpecError(ValueError):
    """Schema violation, tagged with the JSON field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class RegionSpec:
    kind: str
    params: dict
    bounds: Optional[Box]


def _want(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise RegionSpecError(_join(path, key), "missing required field")
    return doc[key]


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _coords(value: Any, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise RegionSpecError(path, "must be a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise RegionSpecError(f"{path}[{i}]", "must be a number")
        out.append(float(v))
    return tuple(out)


def _number(value: Any, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise RegionSpecError(path, "must be a number")
    return float(value)


def _bounds(value: Any, path: str) -> Box:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise RegionSpecError(path, "must be a [lo, hi] coordinate pair")
    lo = _coords(value[0], _join(path, "lo"))
    hi = _coords(value[1], _join(path, "hi"))
    try:
        return box(lo, hi)
    except ValueError as exc:
        raise RegionSpecError(path, str(exc)) from None


def _expression(value: Any, path: str):
    if not isinstance(value, str):
        raise RegionSpecError(path, "must be an expression string")
    try:
        return parse_expression(value)
    except ParseError as exc:
        raise RegionSpecError(path, f"bad expression: {exc}") from None


def parse_region_spec(doc: "str | dict", path: str = "") -> RegionSpec:
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise RegionSpecError("", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise RegionSpecError(path, "a region document must be a JSON object")
    kind = _want(doc, "kind", path)
    if kind not in KINDS:
        raise RegionSpecError(_join(path, "kind"), f"unknown kind {kind!r}; one of {KINDS}")
    params: dict = {}
    bounds = _bounds(doc["bounds"], _join(path, "bounds")) if "bounds" in doc else None

    if kind == "ball":
        params["center"] = _coords(_want(doc, "center", path), _join(path, "center"))
        params["radius"] = _number(_want(doc, "radius", path), _join(path, "radius"))
        if params["radius"] <= 0:
            raise RegionSpecError(_join(path, "radius"), "radius must be positive")
    elif kind == "box":
        lo = _coords(_want(doc, "lo", path), _join(path, "lo"))
        hi = _coords(_want(doc, "hi", path), _join(path, "hi"))
        try:
            params["box"] = box(lo, hi)
        except ValueError as exc:
            raise RegionSpecError(path, str(exc)) from None
    elif kind == "hypograph":
        params["f"] = _expression(_want(doc, "f", path), _join(path, "f"))
        params["a"] = _number(_want(doc, "a", path), _join(path, "a"))
        params["b"] = _number(_want(doc, "b", path), _join(path, "b"))
        if not params["a"] < params["b"]:
            raise RegionSpecError(_join(path, "a"), "need a < b")
        if "margin" in doc:
            params["margin"] = _number(doc["margin"], _join(path, "margin"))
    elif kind == "polar_star":
        params["rho"] = _expression(_want(doc, "rho", path), _join(path, "rho"))
        if "margin" in doc:
            params["margin"] = _number(doc["margin"], _join(path, "margin"))
    elif kind in ("union", "intersect"):
        parts = _want(doc, "parts", path)
        if not isinstance(parts, list) or len(parts) < 1:
            raise RegionSpecError(_join(path, "parts"), "must be a non-empty list of region documents")
        params["parts"] = tuple(
            parse_region_spec(p, f"{_join(path, 'parts')}[{i}]") for i, p in enumerate(parts)
        )
    elif kind == "complement":
        params["of"] = parse_region_spec(_want(doc, "of", path), _join(path, "of"))
        if bounds is None:
            raise RegionSpecError(_join(path, "bounds"), "complement requires bounds")
    elif kind == "dense":
        if bounds is None:
            raise RegionSpecError(_join(path, "bounds"), "dense requires bounds")
    return RegionSpec(kind, params, bounds)


def build_region(spec: RegionSpec) -> _region.Region:
    if spec.kind == "ball":
        return _region.primitive_ball(spec.params["center"], spec.params["radius"])
    if spec.kind == "box":
        return _region.primitive_box(spec.params["box"])
    if spec.kind == "hypograph":
        return _region.primitive_hypograph(
            spec.params["f"], spec.params["a"], spec.params["b"],
            margin=spec.params.get("margin"),
        )
    if spec.kind == "polar_star":
        return _region.primitive_polar_star(spec.params["rho"], margin=spec.params.get("margin"))
    if spec.kind == "union":
        return _region.region_union(*(build_region(p) for p in spec.params["parts"]))
    if spec.kind == "intersect":
        return _region.region_intersect(*(build_region(p) for p in spec.params["parts"]))
    if spec.kind == "complement":
        return _region.region_complement_within(build_region(spec.params["of"]), spec.bounds)
    return _region.pathological_dense(spec.bounds)


def parse_region(doc: "str | dict") -> _region.Region:
    """Parse and lower a region document in one step."""
    return build_region(parse_region_spec(doc))
