"""Vector-field frames, horizontal gradients, and the weighted-duality adjoint.

A frame is a family of N first-order operators, each a coefficient row
contracted with the Euclidean partials.  Partials are discretized with
second-order central stencils at nodes that have both axis-neighbors and
second-order one-sided stencils toward the domain otherwise.  The adjoint is
not a discretized divergence: it is defined as the exact transpose of the
gradient map under the quadrature inner product, which makes summation by
parts an identity at machine precision rather than an O(h) approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .grid import (DomainMask, Grid, ScalarField, check_same_grid)

CoeffFn = Callable[[int, tuple[np.ndarray, ...]], Sequence]


@dataclass(frozen=True, eq=False)
class Frame:
    """Family of horizontal vector fields on an n-dimensional grid.

    ``coeff(k, coords)`` returns the n coefficient entries of field k,
    each a scalar or an array broadcastable against the grid shape.
    """

    name: str
    n: int
    num_fields: int
    coeff: CoeffFn

    def __post_init__(self):
        if self.num_fields > self.n or self.num_fields < 1:
            raise InvalidInputError("need 1 <= N <= n fields")


def euclidean_frame(n: int) -> Frame:
    def coeff(k, coords):
        return tuple(1.0 if j == k else 0.0 for j in range(n))
    return Frame(f"euclidean{n}", n, n, coeff)


def grushin_frame() -> Frame:
    """Plane frame X1 = d/dx, X2 = x d/dy; degenerates on the line x = 0."""
    def coeff(k, coords):
        x = coords[0]
        return (1.0, 0.0) if k == 0 else (0.0, x)
    return Frame("grushin", 2, 2, coeff)


def heisenberg_frame() -> Frame:
    """Group frame on (x, y, t): X1 = dx - (y/2) dt, X2 = dy + (x/2) dt."""
    def coeff(k, coords):
        x, y, _ = coords
        return (1.0, 0.0, -y / 2.0) if k == 0 else (0.0, 1.0, x / 2.0)
    return Frame("heisenberg", 3, 2, coeff)


def frame_from_tables(name: str, tables: Sequence[Sequence[ScalarField]]) -> Frame:
    """Custom frame whose coefficient functions are tabulated per node."""
    rows = [tuple(f.values for f in row) for row in tables]
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise InvalidInputError("all coefficient rows must have n entries")

    def coeff(k, coords):
        return rows[k]

    return Frame(name, n, len(rows), coeff)


_BUILTIN_FRAMES = {
    "euclidean1": lambda: euclidean_frame(1),
    "euclidean2": lambda: euclidean_frame(2),
    "euclidean3": lambda: euclidean_frame(3),
    "grushin": grushin_frame,
    "heisenberg": heisenberg_frame,
}


def frame_by_name(name: str) -> Frame:
    try:
        return _BUILTIN_FRAMES[name]()
    except KeyError:
        raise InvalidInputError(
            f"unknown frame {name!r}; builtin frames: {sorted(_BUILTIN_FRAMES)}") from None


@dataclass(frozen=True, eq=False)
class HorizontalField:
    """N component values per node: the image of a scalar field under the frame."""

    grid: Grid
    frame: Frame
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (self.frame.num_fields,) + self.grid.shape:
            raise InvalidInputError("horizontal field shape must be (N,) + grid shape")
        if not np.isfinite(arr).all():
            raise InvalidInputError("horizontal field values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=0))


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Variable exponent with certified bounds 1 < pminus <= p(x) <= pplus."""

    values: ScalarField
    pminus: float
    pplus: float

    def __post_init__(self):
        if not (np.isfinite(self.pminus) and np.isfinite(self.pplus)):
            raise InvalidInputError("exponent bounds must be finite")
        if not 1.0 < self.pminus <= self.pplus:
            raise InvalidInputError(
                f"exponent bounds must satisfy 1 < pminus <= pplus, got "
                f"({self.pminus}, {self.pplus})")

    @property
    def array(self) -> np.ndarray:
        return self.values.values

    @property
    def grid(self) -> Grid:
        return self.values.grid

    @property
    def is_constant(self) -> bool:
        return self.pminus == self.pplus

    @classmethod
    def from_field(cls, field: ScalarField, mask: DomainMask) -> "ExponentField":
        check_same_grid(field, mask)
        inc = field.values[mask.included]
        return cls(field, float(inc.min()), float(inc.max()))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ExponentField":
        return cls(ScalarField.constant(grid, value), float(value), float(value))


@lru_cache(maxsize=None)
def _partial_stencils(mask: DomainMask):
    """Per-axis sparse partial-derivative operators and their transposes.

    Rows of non-exterior nodes hold central differences when both axis
    neighbors are available, else a one-sided second-order stencil toward
    the available side; exterior rows are zero.
    """
    grid = mask.grid
    shape = grid.shape
    m = grid.num_nodes
    ids = np.arange(m).reshape(shape)
    ok = mask.included
    ops = []
    for axis in range(grid.dim):
        h = grid.spacing[axis]
        n = shape[axis]
        idx = np.indices(shape)[axis]

        def shifted_ok(delta):
            out = np.zeros(shape, dtype=bool)
            if delta > 0:
                src = tuple(slice(None) if a != axis else slice(delta, n)
                            for a in range(grid.dim))
                dst = tuple(slice(None) if a != axis else slice(0, n - delta)
                            for a in range(grid.dim))
            else:
                src = tuple(slice(None) if a != axis else slice(0, n + delta)
                            for a in range(grid.dim))
                dst = tuple(slice(None) if a != axis else slice(-delta, n)
                            for a in range(grid.dim))
            out[dst] = ok[src]
            return out

        has_m1 = shifted_ok(-1)
        has_p1 = shifted_ok(+1)
        has_m2 = shifted_ok(-2)
        has_p2 = shifted_ok(+2)
        central = ok & has_m1 & has_p1
        fwd = ok & ~central & has_p1 & has_p2
        bwd = ok & ~central & ~fwd & has_m1 & has_m2
        if not (central | fwd | bwd)[ok].all():
            raise InvalidInputError(
                "mask too thin for second-order stencils along axis "
                f"{axis}; need 3 consecutive included nodes")

        stride = int(np.prod(shape[axis + 1:], dtype=np.int64))
        rows, cols, vals = [], [], []

        r = ids[central]
        rows += [r, r]
        cols += [r + stride, r - stride]
        vals += [np.full(r.size, 0.5 / h), np.full(r.size, -0.5 / h)]

        r = ids[fwd]
        rows += [r, r, r]
        cols += [r, r + stride, r + 2 * stride]
        vals += [np.full(r.size, -1.5 / h), np.full(r.size, 2.0 / h),
                 np.full(r.size, -0.5 / h)]

        r = ids[bwd]
        rows += [r, r, r]
        cols += [r, r - stride, r - 2 * stride]
        vals += [np.full(r.size, 1.5 / h), np.full(r.size, -2.0 / h),
                 np.full(r.size, 0.5 / h)]

        d = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, m))
        ops.append((d, d.T.tocsr()))
    return tuple(ops)


@lru_cache(maxsize=None)
def _coeff_arrays(frame: Frame, grid: Grid):
    """Coefficient entries a_kj evaluated on the grid (scalars stay scalar)."""
    out = []
    for k in range(frame.num_fields):
        row = frame.coeff(k, grid.coords)
        if len(row) != frame.n:
            raise InvalidInputError("coefficient row length must equal ambient dimension")
        entries = []
        for a in row:
            arr = np.asarray(a, dtype=np.float64)
            if arr.ndim == 0:
                entries.append(float(arr))
            else:
                entries.append(np.ascontiguousarray(np.broadcast_to(arr, grid.shape)))
        if not all(np.all(np.isfinite(e)) for e in entries):
            raise InvalidInputError("frame coefficients must be finite at all nodes")
        out.append(tuple(entries))
    return tuple(out)


def _check_frame(frame: Frame, grid: Grid):
    if frame.n != grid.dim:
        raise InvalidInputError(
            f"frame {frame.name!r} lives in dimension {frame.n}, grid has {grid.dim}")


def gradient_components(frame: Frame, values: np.ndarray, mask: DomainMask) -> np.ndarray:
    """Raw (N,) + shape array of horizontal derivatives of nodal values."""
    grid = mask.grid
    _check_frame(frame, grid)
    stencils = _partial_stencils(mask)
    flat = values.ravel()
    partials = [ (d @ flat).reshape(grid.shape) for d, _ in stencils ]
    coeffs = _coeff_arrays(frame, grid)
    comps = np.zeros((frame.num_fields,) + grid.shape)
    for k in range(frame.num_fields):
        acc = comps[k]
        for j in range(grid.dim):
            a = coeffs[k][j]
            if isinstance(a, float):
                if a != 0.0:
                    acc += a * partials[j]
            else:
                acc += a * partials[j]
    return comps


def horizontal_gradient(frame: Frame, u: ScalarField, mask: DomainMask) -> HorizontalField:
    """Horizontal derivatives (X_1 u, ..., X_N u); zero at exterior nodes."""
    check_same_grid(u, mask)
    return HorizontalField(mask.grid, frame, gradient_components(frame, u.values, mask))


def adjoint_values(frame: Frame, comps: np.ndarray, mask: DomainMask) -> np.ndarray:
    """Raw adjoint of component arrays; see ``discrete_adjoint``."""
    grid = mask.grid
    _check_frame(frame, grid)
    stencils = _partial_stencils(mask)
    coeffs = _coeff_arrays(frame, grid)
    w = mask.weights
    acc = np.zeros(grid.num_nodes)
    for k in range(frame.num_fields):
        wk = w * comps[k]
        for j in range(grid.dim):
            a = coeffs[k][j]
            if isinstance(a, float):
                if a == 0.0:
                    continue
                t = a * wk
            else:
                t = a * wk
            acc += stencils[j][1] @ t.ravel()
    out = acc.reshape(grid.shape)
    safe_w = np.where(mask.interior, w, 1.0)
    return np.where(mask.interior, out / safe_w, 0.0)


def discrete_adjoint(frame: Frame, field: HorizontalField, mask: DomainMask) -> ScalarField:
    """Adjoint of the horizontal gradient under the quadrature inner product.

    Defined so that sum_x w(x) (grad u . F)(x) == sum_x w(x) u(x) (adj F)(x)
    holds exactly for every u vanishing on boundary and exterior nodes.
    The result is supported on interior nodes.
    """
    check_same_grid(field, mask)
    if field.frame is not frame:
        raise InvalidInputError("horizontal field was built with a different frame")
    return ScalarField(mask.grid, adjoint_values(frame, field.values, mask))


def magnitude_power(comps: np.ndarray, expo: np.ndarray) -> np.ndarray:
    """|F|^expo with the removable-singularity convention 0^negative := 0."""
    mag = np.sqrt(np.sum(comps ** 2, axis=0))
    out = np.zeros_like(mag)
    pos = mag > 0.0
    e = np.broadcast_to(expo, mag.shape)
    out[pos] = mag[pos] ** e[pos]
    return out


def p_sub_laplacian(frame: Frame, u: ScalarField, p: ExponentField,
                    mask: DomainMask) -> ScalarField:
    """Adjoint applied to |grad u|^(p-2) grad u; positive as a quadratic form.

    With the duality adjoint, (Lu, u)_w = sum_x w |grad u|^p for u vanishing
    on the boundary, and for p = 2 the operator is consistent with the
    negative Laplacian at interior nodes.
    """
    check_same_grid(u, mask, p.values)
    comps = gradient_components(frame, u.values, mask)
    psi = magnitude_power(comps, p.array - 2.0)
    return ScalarField(mask.grid, adjoint_values(frame, psi * comps, mask))


def gradient_orthogonality_defect(frame: Frame, v_values: np.ndarray,
                                  s_values: np.ndarray, mask: DomainMask) -> float:
    """Scale-normalized max over interior nodes of |grad v . grad s|."""
    gv = gradient_components(frame, v_values, mask)
    gs = gradient_components(frame, s_values, mask)
    dot = np.abs(np.sum(gv * gs, axis=0))
    den = 1.0 + np.sqrt(np.sum(gv ** 2, axis=0)) * np.sqrt(np.sum(gs ** 2, axis=0))
    ratio = dot / den
    return float(ratio[mask.interior].max())


def orthogonality_defect(frame: Frame, v: ScalarField, p: ExponentField,
                         mask: DomainMask) -> float:
    """Scale-normalized max of |grad v . grad p| over interior nodes.

    Zero certifies, discretely, the gradient-orthogonality hypothesis that
    the nonnegativity half of the Picone theorem requires.
    """
    check_same_grid(v, mask, p.values)
    return gradient_orthogonality_defect(frame, v.values, p.array, mask)
