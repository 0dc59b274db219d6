"""Field CSV format: a grid header line followed by one value per node.

Header: ``# grid dim=<d> n=<n1,...> bounds=<a1,b1;...>``; values are written
in row-major node order with 17 significant digits so fields round-trip.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .grid import Grid, ScalarField


def grid_header(grid: Grid) -> str:
    ns = ",".join(str(n) for n in grid.resolution)
    bounds = ";".join(f"{a:.17g},{b:.17g}" for a, b in grid.bounds)
    return f"# grid dim={grid.dim} n={ns} bounds={bounds}"


def parse_grid_header(line: str) -> Grid:
    tokens = line.strip().split()
    if len(tokens) < 5 or tokens[0] != "#" or tokens[1] != "grid":
        raise InvalidInputError(f"malformed field header: {line.strip()!r}")
    fields = {}
    for tok in tokens[2:]:
        key, _, val = tok.partition("=")
        fields[key] = val
    try:
        dim = int(fields["dim"])
        ns = tuple(int(v) for v in fields["n"].split(","))
        bounds = tuple(tuple(float(x) for x in pair.split(","))
                       for pair in fields["bounds"].split(";"))
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"malformed field header: {line.strip()!r}") from exc
    if len(ns) != dim or len(bounds) != dim:
        raise InvalidInputError("field header dimension mismatch")
    return Grid(bounds, ns)


def write_field(path, field: ScalarField) -> None:
    lines = [grid_header(field.grid)]
    lines.extend(f"{v:.17g}" for v in field.values.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> ScalarField:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise InvalidInputError(f"empty field file: {path}")
    grid = parse_grid_header(text[0])
    values = []
    for ln in text[1:]:
        ln = ln.strip()
        if not ln:
            continue
        try:
            values.append(float(ln))
        except ValueError as exc:
            raise InvalidInputError(f"bad value line in {path}: {ln!r}") from exc
    if len(values) != grid.num_nodes:
        raise InvalidInputError(
            f"{path}: expected {grid.num_nodes} values, found {len(values)}")
    return ScalarField(grid, np.array(values).reshape(grid.shape))
