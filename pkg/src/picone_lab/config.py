"""Run configuration: a nested key/value document plus builders that turn
specs into grids, masks, frames, fields, exponents, and nonlinearities.

Every spec is a small dict with a ``kind`` tag so configs serialize to JSON
and runs reproduce bit for bit from the echoed document.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .fieldio import read_field
from .frames import ExponentField, Frame, frame_by_name, frame_from_tables
from .grid import DomainMask, Grid, ScalarField, build_grid, full_mask, rect_mask
from .picone import (Nonlinearity, canonical_nonlinearity, power_sum_nonlinearity,
                     tabulated_nonlinearity)

SUBCOMMANDS = ("norm", "picone", "eigen", "monotonicity", "simplicity",
               "hardy", "caccioppoli", "logcaccioppoli", "convergence")


@dataclass
class RunConfig:
    subcommand: str
    frame: object = "euclidean2"
    grid: dict = field(default_factory=lambda: {
        "bounds": [[0.0, 1.0], [0.0, 1.0]], "resolution": [33, 33]})
    mask: dict = field(default_factory=lambda: {"kind": "full"})
    masks: list = field(default_factory=list)
    exponent: dict = field(default_factory=lambda: {"kind": "constant", "value": 2.0})
    weight: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    nonlinearity: dict = field(default_factory=lambda: {"kind": "canonical"})
    fields: dict = field(default_factory=dict)
    solver: dict = field(default_factory=lambda: {
        "seed": 0, "max_iter": 20000, "grad_tol": 1e-8, "init": "bump",
        "restarts": 5})
    mode: str = "algebraic"
    strict: bool = False
    params: dict = field(default_factory=dict)
    out: object = None
    figures: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = copy.deepcopy(doc)
        sub = doc.pop("subcommand", None)
        if sub not in SUBCOMMANDS:
            raise InvalidInputError(f"unknown subcommand {sub!r}")
        cfg = cls(subcommand=sub)
        for key, val in doc.items():
            if not hasattr(cfg, key):
                raise InvalidInputError(f"unknown config key {key!r}")
            default = getattr(cfg, key)
            if isinstance(default, dict) and isinstance(val, dict):
                merged = dict(default)
                merged.update(val)
                setattr(cfg, key, merged)
            else:
                setattr(cfg, key, val)
        return cfg


def load_config_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc


def set_by_path(doc: dict, dotted: str, raw: str) -> None:
    """Apply a ``--set a.b.c=value`` override; values parse as JSON when
    possible and fall back to strings."""
    keys = dotted.split(".")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise InvalidInputError(f"cannot set {dotted!r}: {key!r} is a leaf")
    node[keys[-1]] = value


# ------------------------------------------------------------------ builders


def make_grid(spec: dict) -> Grid:
    try:
        return build_grid(spec["bounds"], spec["resolution"])
    except KeyError as exc:
        raise InvalidInputError(f"grid spec needs {exc}") from None


def make_mask(spec: dict, grid: Grid) -> DomainMask:
    kind = spec.get("kind", "full")
    if kind == "full":
        return full_mask(grid)
    if kind == "rect":
        return rect_mask(grid, spec["bounds"])
    raise InvalidInputError(f"unknown mask kind {kind!r}")


def make_frame(spec, grid: Grid) -> Frame:
    if isinstance(spec, str):
        return frame_by_name(spec)
    if isinstance(spec, dict) and spec.get("kind") == "custom":
        tables = [[read_field(p) for p in row] for row in spec["tables"]]
        for row in tables:
            for f in row:
                if f.grid != grid:
                    raise InvalidInputError("custom frame table grid mismatch")
        return frame_from_tables(spec.get("name", "custom"), tables)
    raise InvalidInputError(f"bad frame spec {spec!r}")


def make_scalar_field(spec: dict, grid: Grid, mask: DomainMask,
                      rng: np.random.Generator) -> ScalarField:
    kind = spec.get("kind")
    if kind == "constant":
        return ScalarField.constant(grid, float(spec["value"]))
    if kind == "affine":
        const = float(spec.get("const", 0.0))
        coeffs = [float(c) for c in spec.get("coeffs", [0.0] * grid.dim)]
        if len(coeffs) != grid.dim:
            raise InvalidInputError("affine spec coefficient count mismatch")
        vals = np.full(grid.shape, const)
        for c, xs in zip(coeffs, grid.coords):
            vals = vals + c * xs
        return ScalarField(grid, vals)
    if kind == "bump":
        amp = float(spec.get("amplitude", 1.0))
        vals = np.ones(grid.shape)
        for axis in range(grid.dim):
            axes = tuple(a for a in range(grid.dim) if a != axis)
            present = mask.included.any(axis=axes) if axes else mask.included
            c = grid.axis_coords[axis][present]
            lo, hi = float(c.min()), float(c.max())
            vals = vals * np.sin(np.pi * (grid.coords[axis] - lo) / (hi - lo))
        return ScalarField(grid, np.where(mask.interior,
                                          amp * np.maximum(vals, 0.0), 0.0))
    if kind == "random":
        lo = float(spec.get("low", 0.0))
        hi = float(spec.get("high", 1.0))
        vals = rng.uniform(lo, hi, grid.shape)
        return ScalarField(grid, np.where(mask.interior, vals, 0.0))
    if kind == "table":
        f = read_field(spec["path"])
        if f.grid != grid:
            raise InvalidInputError(f"field table {spec['path']} grid mismatch")
        return f
    raise InvalidInputError(f"unknown field kind {kind!r}")


def make_exponent(spec: dict, grid: Grid, mask: DomainMask,
                  rng: np.random.Generator) -> ExponentField:
    return ExponentField.from_field(make_scalar_field(spec, grid, mask, rng), mask)


def make_nonlinearity(spec: dict) -> Nonlinearity:
    kind = spec.get("kind", "canonical")
    if kind == "canonical":
        return canonical_nonlinearity()
    if kind == "power+power":
        return power_sum_nonlinearity()
    if kind == "custom-table":
        table = np.loadtxt(spec["path"], delimiter=",", ndmin=2)
        if table.shape[1] != 3:
            raise InvalidInputError(
                "nonlinearity table needs three columns: y, f, fprime")
        return tabulated_nonlinearity(table[:, 0], table[:, 1], table[:, 2])
    raise InvalidInputError(f"unknown nonlinearity kind {kind!r}")
