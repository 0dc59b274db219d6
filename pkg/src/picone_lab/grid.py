"""Rectangular grids, node classification masks, scalar fields, and quadrature.

Nodes live on a uniform tensor-product lattice and are indexed row-major.
A mask classifies every node as interior, boundary, or exterior; quadrature
weights are assembled cell by cell so that the composite trapezoid rule is
recovered exactly on any axis-aligned rectangle of included nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError

INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2

# Sub-rectangle corners must sit this close to a lattice node (relative to h).
_ALIGN_RTOL = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on a box; node k along axis i sits at a_i + k*h_i."""

    bounds: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.bounds) <= 3:
            raise InvalidInputError(f"grid dimension must be 1, 2 or 3, got {len(self.bounds)}")
        if len(self.resolution) != len(self.bounds):
            raise InvalidInputError("bounds and resolution must have equal length")
        for (a, b), n in zip(self.bounds, self.resolution):
            if not (np.isfinite(a) and np.isfinite(b) and b > a):
                raise InvalidInputError(f"degenerate interval ({a}, {b})")
            if n < 3:
                raise InvalidInputError(f"resolution must be >= 3 per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.resolution))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.resolution))

    @cached_property
    def axis_coords(self) -> tuple[np.ndarray, ...]:
        out = []
        for (a, _), n, h in zip(self.bounds, self.resolution, self.spacing):
            c = a + h * np.arange(n)
            c.flags.writeable = False
            out.append(c)
        return tuple(out)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Dense coordinate arrays of shape ``self.shape``, one per axis."""
        mesh = np.meshgrid(*self.axis_coords, indexing="ij")
        for m in mesh:
            m.flags.writeable = False
        return tuple(mesh)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


def build_grid(bounds: Sequence[Sequence[float]], resolution: Sequence[int]) -> Grid:
    """Construct a grid from per-axis intervals and node counts (>= 3 each)."""
    return Grid(tuple((float(a), float(b)) for a, b in bounds),
                tuple(int(n) for n in resolution))


def _as_readonly(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite real value per grid node (exterior nodes store 0 by convention)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.values)
        if arr.shape != self.grid.shape:
            raise InvalidInputError(f"field shape {arr.shape} != grid shape {self.grid.shape}")
        if not np.isfinite(arr).all():
            raise InvalidInputError("field values must be finite at every node")
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        """Evaluate ``fn(x1, ..., xd)`` on the dense coordinate arrays."""
        return cls(grid, np.broadcast_to(np.asarray(fn(*grid.coords), dtype=np.float64),
                                         grid.shape))


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Per-node classification into interior / boundary / exterior.

    Invariants checked at construction: at least one interior node; no
    interior node touches the grid edge or an exterior axis-neighbor; every
    interior node carries positive quadrature weight.
    """

    grid: Grid
    classification: np.ndarray

    def __post_init__(self):
        cls = np.array(self.classification, dtype=np.int8, copy=True)
        if cls.shape != self.grid.shape:
            raise InvalidInputError("classification shape mismatch")
        if not np.isin(cls, (INTERIOR, BOUNDARY, EXTERIOR)).all():
            raise InvalidInputError("classification codes must be 0, 1 or 2")
        cls.flags.writeable = False
        object.__setattr__(self, "classification", cls)
        if not (cls == INTERIOR).any():
            raise InvalidInputError("mask has no interior nodes")
        self._check_neighbors()
        if not (self.weights[self.interior] > 0).all():
            raise InvalidInputError("mask has an interior node with zero quadrature weight")

    def _check_neighbors(self):
        cls = self.classification
        interior = cls == INTERIOR
        for axis in range(self.grid.dim):
            edge_lo = np.take(interior, [0], axis=axis)
            edge_hi = np.take(interior, [-1], axis=axis)
            if edge_lo.any() or edge_hi.any():
                raise InvalidInputError("interior node on the grid edge")
            ext = cls == EXTERIOR
            lo = np.take(interior, range(1, cls.shape[axis]), axis=axis)
            lo_nbr = np.take(ext, range(0, cls.shape[axis] - 1), axis=axis)
            hi = np.take(interior, range(0, cls.shape[axis] - 1), axis=axis)
            hi_nbr = np.take(ext, range(1, cls.shape[axis]), axis=axis)
            if (lo & lo_nbr).any() or (hi & hi_nbr).any():
                raise InvalidInputError("interior node adjacent to an exterior node")

    @cached_property
    def interior(self) -> np.ndarray:
        arr = self.classification == INTERIOR
        arr.flags.writeable = False
        return arr

    @cached_property
    def included(self) -> np.ndarray:
        """Interior union boundary: the nodes that carry data."""
        arr = self.classification != EXTERIOR
        arr.flags.writeable = False
        return arr

    @cached_property
    def cell_included(self) -> np.ndarray:
        """Cells (low-corner indexed) whose 2^d corner nodes are all included."""
        shape = self.grid.shape
        ok = self.included
        cell_ok = np.ones(tuple(n - 1 for n in shape), dtype=bool)
        for off in itertools.product((0, 1), repeat=self.grid.dim):
            sl = tuple(slice(o, n - 1 + o) for o, n in zip(off, shape))
            cell_ok &= ok[sl]
        cell_ok.flags.writeable = False
        return cell_ok

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights; each fully-included cell spreads its
        volume equally over its 2^d corner nodes, so exterior nodes get 0."""
        shape = self.grid.shape
        w = np.zeros(shape)
        frac = self.grid.cell_volume / (2 ** self.grid.dim)
        contrib = self.cell_included * frac
        for off in itertools.product((0, 1), repeat=self.grid.dim):
            sl = tuple(slice(o, n - 1 + o) for o, n in zip(off, shape))
            w[sl] += contrib
        w.flags.writeable = False
        return w

    @property
    def interior_count(self) -> int:
        return int(self.interior.sum())

    @cached_property
    def measure(self) -> float:
        """Total quadrature weight (the discrete volume of the domain)."""
        return float(self.weights.sum())


def _snap_index(x: float, a: float, h: float, n: int, axis: int) -> int:
    t = (x - a) / h
    k = int(round(t))
    if k < 0 or k > n - 1 or abs(t - k) > _ALIGN_RTOL:
        raise InvalidInputError(
            f"sub-bound {x} along axis {axis} is not aligned to a grid node")
    return k


def rect_mask(grid: Grid, sub_bounds: Sequence[Sequence[float]]) -> DomainMask:
    """Classify nodes against an axis-aligned rectangle with node-aligned faces.

    Nodes strictly inside the rectangle are interior, nodes on its faces are
    boundary, everything else is exterior.
    """
    if len(sub_bounds) != grid.dim:
        raise InvalidInputError("sub_bounds dimension mismatch")
    los, his = [], []
    for axis, ((a, _), h, n, (lo, hi)) in enumerate(
            zip(grid.bounds, grid.spacing, grid.resolution, sub_bounds)):
        k_lo = _snap_index(float(lo), a, h, n, axis)
        k_hi = _snap_index(float(hi), a, h, n, axis)
        if k_hi - k_lo < 2:
            raise InvalidInputError("sub-rectangle has an empty interior")
        los.append(k_lo)
        his.append(k_hi)
    cls = np.full(grid.shape, EXTERIOR, dtype=np.int8)
    idx = np.indices(grid.shape)
    closed = np.ones(grid.shape, dtype=bool)
    strict = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        closed &= (idx[axis] >= los[axis]) & (idx[axis] <= his[axis])
        strict &= (idx[axis] > los[axis]) & (idx[axis] < his[axis])
    cls[closed] = BOUNDARY
    cls[strict] = INTERIOR
    return DomainMask(grid, cls)


def full_mask(grid: Grid) -> DomainMask:
    """Mask covering the whole grid; the grid edge is the boundary."""
    return rect_mask(grid, grid.bounds)


def check_same_grid(*objs) -> Grid:
    grids = [o.grid for o in objs]
    for g in grids[1:]:
        if g != grids[0]:
            raise InvalidInputError("operands live on different grids")
    return grids[0]


def integrate(f: ScalarField, mask: DomainMask) -> float:
    """Composite trapezoid quadrature over the included nodes of the mask.

    Exterior nodes contribute nothing; the rule is exact for fields that are
    affine per axis over fully included rectangles.
    """
    check_same_grid(f, mask)
    return float(np.sum(mask.weights * f.values))


def integrate_values(values: np.ndarray, mask: DomainMask) -> float:
    """``integrate`` for a raw array already shaped like the grid."""
    return float(np.sum(mask.weights * values))


def is_strictly_nested(inner: DomainMask, outer: DomainMask) -> bool:
    """True when every interior node of ``inner`` is interior in ``outer``
    and ``outer`` has strictly more interior nodes."""
    if inner.grid != outer.grid:
        return False
    contained = bool(np.all(~inner.interior | outer.interior))
    return contained and outer.interior_count > inner.interior_count
