"""The variable-exponent Picone identity for horizontal gradients.

``picone_evaluate`` computes both sides of the identity per node: the
expanded form (lhs) and the form that differentiates the composite quotient
u^p / f(v) (rhs).  In algebraic mode the rhs expands the composite gradient
through the chain rule on the same discrete gradients, so lhs == rhs is an
exact pointwise identity; in discrete mode the composite field is
differentiated by the grid stencils and the residual measures the
discretization error instead.

The expanded form splits into four individually nonnegative parts: a Young
gap, an admissibility gap for the nonlinearity, a Cauchy-Schwarz alignment
gap, and a coupling term with the exponent gradient that vanishes whenever
the gradients of v and of the exponent are orthogonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import InvalidInputError
from .frames import DomainMask, ExponentField, Frame, gradient_components
from .grid import ScalarField, check_same_grid

DEFAULT_V_FLOOR = 1e-10

NonlinFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Nonlinearity:
    """Positive C^1 nonlinearity y -> f(y); both callables take (y, p) arrays
    so exponent-dependent choices evaluate pointwise in x."""

    name: str
    value: NonlinFn
    slope: NonlinFn
    canonical: bool = False


def canonical_nonlinearity() -> Nonlinearity:
    """f(y) = y^(p-1); saturates the admissibility bound with equality."""
    return Nonlinearity(
        "canonical",
        value=lambda y, p: y ** (p - 1.0),
        slope=lambda y, p: (p - 1.0) * y ** (p - 2.0),
        canonical=True,
    )


def power_sum_nonlinearity() -> Nonlinearity:
    """f(y) = y^(p-1) + y^p; strictly admissible for y > 0."""
    return Nonlinearity(
        "power+power",
        value=lambda y, p: y ** (p - 1.0) + y ** p,
        slope=lambda y, p: (p - 1.0) * y ** (p - 2.0) + p * y ** (p - 1.0),
    )


def tabulated_nonlinearity(y_table: np.ndarray, f_table: np.ndarray,
                           fprime_table: np.ndarray,
                           name: str = "custom-table") -> Nonlinearity:
    """Piecewise-linear interpolation of tabulated (y, f, f') samples."""
    y_t = np.asarray(y_table, dtype=float)
    f_t = np.asarray(f_table, dtype=float)
    fp_t = np.asarray(fprime_table, dtype=float)
    if not (y_t.ndim == 1 and y_t.shape == f_t.shape == fp_t.shape):
        raise InvalidInputError("nonlinearity tables must be equal-length 1D arrays")
    if np.any(np.diff(y_t) <= 0):
        raise InvalidInputError("nonlinearity table ordinates must be increasing")
    if np.any(f_t <= 0):
        raise InvalidInputError("nonlinearity table values must be positive")
    return Nonlinearity(
        name,
        value=lambda y, p: np.interp(y, y_t, f_t),
        slope=lambda y, p: np.interp(y, y_t, fp_t),
    )


@dataclass(frozen=True)
class YoungCheck:
    """Both sides of a Young-type inequality plus strictness diagnostics.

    Fields are scalars for scalar inputs and arrays for array inputs.
    """

    lhs: np.ndarray
    rhs: np.ndarray
    holds: np.ndarray
    equality: np.ndarray


def young_classical(s, t, p) -> YoungCheck:
    """s t <= s^p / p + t^p' / p' with p' = p/(p-1); equality iff s^p = t^p'."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1.0):
        raise InvalidInputError("young_classical needs p > 1")
    if np.any(s < 0) or np.any(t < 0):
        raise InvalidInputError("young_classical needs s, t >= 0")
    pc = p / (p - 1.0)
    lhs = s * t
    with np.errstate(over="ignore"):  # huge conjugate exponents saturate to inf
        sp = s ** p
        tpc = t ** pc
    rhs = sp / p + tpc / pc
    holds = lhs <= rhs + 1e-12 * rhs
    equality = np.abs(sp - tpc) <= 1e-9 * np.maximum(1.0, sp)
    return YoungCheck(lhs, rhs, holds, equality)


def young_modified(phi, psi, eps, p) -> YoungCheck:
    """phi psi^(p-1) <= phi^p / (p eps^(p-1)) + ((p-1)/p) eps psi^p;
    equality iff phi = eps psi."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    eps = np.asarray(eps, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1.0):
        raise InvalidInputError("young_modified needs p > 1")
    if np.any(eps <= 0.0):
        raise InvalidInputError("young_modified needs eps > 0")
    if np.any(phi < 0) or np.any(psi < 0):
        raise InvalidInputError("young_modified needs phi, psi >= 0")
    with np.errstate(over="ignore"):
        lhs = phi * psi ** (p - 1.0)
        rhs = phi ** p / (p * eps ** (p - 1.0)) + (p - 1.0) / p * eps * psi ** p
    holds = lhs <= rhs + 1e-12 * rhs
    equality = np.abs(phi - eps * psi) <= 1e-9 * np.maximum(1.0, np.abs(phi))
    return YoungCheck(lhs, rhs, holds, equality)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Margins f'(y) - (p-1) f(y)^((p-2)/(p-1)) per (sample, node)."""

    y_samples: tuple[float, ...]
    margins: np.ndarray
    min_margin: float
    admissible: bool
    equality_identically: bool


def admissibility_check(f: Nonlinearity, p: ExponentField, y_samples: Sequence[float],
                        mask: DomainMask, tol: float = 1e-10) -> AdmissibilityReport:
    """Check the slope lower bound that makes the admissibility gap nonnegative."""
    ys = tuple(float(y) for y in y_samples)
    if any(y <= 0 for y in ys):
        raise InvalidInputError("admissibility samples must be positive")
    inc = mask.included
    pa = p.array[inc]
    rows = []
    for y in ys:
        ya = np.full(pa.shape, y)
        bound = (pa - 1.0) * f.value(ya, pa) ** ((pa - 2.0) / (pa - 1.0))
        rows.append(f.slope(ya, pa) - bound)
    margins = np.stack(rows)
    scale = 1.0 + float(np.abs(margins).max(initial=0.0))
    min_margin = float(margins.min())
    return AdmissibilityReport(
        ys, margins, min_margin,
        admissible=min_margin >= -tol * scale,
        equality_identically=bool(np.abs(margins).max() <= tol * scale),
    )


@dataclass(frozen=True, eq=False)
class PiconeBreakdown:
    """Pointwise evaluation of the identity and its four-part split."""

    lhs: ScalarField
    rhs: ScalarField
    young_term: ScalarField
    admissibility_term: ScalarField
    alignment_term: ScalarField
    exponent_term: ScalarField
    identity_residual: float
    min_lhs: float
    equality_locus_fraction: float
    mode: str
    frame: Frame
    mask: DomainMask

    def parts_sum(self) -> np.ndarray:
        return (self.young_term.values + self.admissibility_term.values
                + self.alignment_term.values + self.exponent_term.values)


def _guarded_log(u: np.ndarray) -> np.ndarray:
    """ln u where u > 0, else 0; callers multiply by u^p so the u = 0 limit
    of u^p ln u is honored."""
    out = np.zeros_like(u)
    pos = u > 0.0
    out[pos] = np.log(u[pos])
    return out


def picone_evaluate(u: ScalarField, v: ScalarField, p: ExponentField,
                    f: Nonlinearity, frame: Frame, mask: DomainMask,
                    mode: Literal["algebraic", "discrete"] = "algebraic",
                    v_floor: float = DEFAULT_V_FLOOR) -> PiconeBreakdown:
    """Evaluate both sides of the identity and the nonnegativity split.

    Requires u >= 0 and v >= v_floor > 0 on the included nodes.  All
    horizontal gradients are discrete; ``mode`` only selects how the
    composite quotient u^p / f(v) is differentiated for the rhs.
    """
    check_same_grid(u, v, mask, p.values)
    if mode not in ("algebraic", "discrete"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    inc = mask.included
    if np.any(u.values[inc] < 0):
        raise InvalidInputError("picone_evaluate needs u >= 0 on the domain")
    if np.any(v.values[inc] < v_floor):
        raise InvalidInputError(f"picone_evaluate needs v >= {v_floor} on the domain")
    # exterior entries never matter but must not poison the arithmetic
    uv = np.where(inc, u.values, 0.0)
    vv = np.where(inc, v.values, 1.0)

    pa = p.array
    grad_u = gradient_components(frame, uv, mask)
    grad_v = gradient_components(frame, vv, mask)
    grad_p = gradient_components(frame, pa, mask)

    gu = np.sqrt(np.sum(grad_u ** 2, axis=0))
    gv = np.sqrt(np.sum(grad_v ** 2, axis=0))
    dot_vu = np.sum(grad_v * grad_u, axis=0)
    dot_vp = np.sum(grad_v * grad_p, axis=0)

    fv = np.asarray(f.value(vv, pa), dtype=float)
    fpv = np.asarray(f.slope(vv, pa), dtype=float)
    if np.any(fv[inc] <= 0.0):
        raise InvalidInputError("nonlinearity must be positive on the range of v")

    with np.errstate(divide="ignore"):
        psi = np.where(gv > 0.0, gv ** (pa - 2.0), 0.0)
    gu_p = gu ** pa
    gv_p = gv ** pa
    up = uv ** pa
    upm1 = uv ** (pa - 1.0)
    uln = up * _guarded_log(uv)

    lhs = (gu_p
           - (uln / fv) * psi * dot_vp
           - pa * (upm1 / fv) * psi * dot_vu
           + (up * fpv / fv ** 2) * gv_p)

    # four-part split; the alignment part carries the |grad v|^(p-2) factor
    # so that the four parts sum to the expanded form exactly
    tt = (uv * gv) ** (pa - 1.0) / fv
    tt_pow = tt ** (pa / (pa - 1.0))
    young_term = gu_p + (pa - 1.0) * tt_pow - pa * tt * gu
    admissibility_term = (up * fpv / fv ** 2) * gv_p - (pa - 1.0) * tt_pow
    alignment_term = pa * (upm1 / fv) * psi * (gv * gu - dot_vu)
    exponent_term = -(uln / fv) * psi * dot_vp

    if mode == "algebraic":
        coef_u = pa * upm1 / fv
        coef_v = -up * fpv / fv ** 2
        coef_p = uln / fv
        grad_q = coef_u * grad_u + coef_v * grad_v + coef_p * grad_p
    else:
        quotient = up / fv
        grad_q = gradient_components(frame, quotient, mask)
    rhs = gu_p - np.sum(grad_q * (psi * grad_v), axis=0)

    fields = []
    for arr in (lhs, rhs, young_term, admissibility_term, alignment_term,
                exponent_term):
        clean = np.where(inc, arr, 0.0)
        if not np.isfinite(clean[inc]).all():
            raise InvalidInputError("identity evaluation produced non-finite values")
        fields.append(ScalarField(mask.grid, clean))
    lhs_f, rhs_f, young_f, admis_f, align_f, expo_f = fields

    interior = mask.interior
    lhs_int = lhs_f.values[interior]
    max_lhs = float(np.abs(lhs_f.values[inc]).max())
    residual = float(np.abs(lhs_f.values - rhs_f.values)[inc].max()) / (1.0 + max_lhs)
    scale = 1.0 + float(np.abs(lhs_int).max())
    locus = float(np.mean(np.abs(lhs_int) <= 1e-9 * scale))

    return PiconeBreakdown(
        lhs=lhs_f, rhs=rhs_f, young_term=young_f, admissibility_term=admis_f,
        alignment_term=align_f, exponent_term=expo_f,
        identity_residual=residual, min_lhs=float(lhs_int.min()),
        equality_locus_fraction=locus, mode=mode, frame=frame, mask=mask)


@dataclass(frozen=True)
class EqualityCaseReport:
    """Consistency of the zero locus of the identity with grad(u/v) = 0."""

    max_ratio_gradient: float
    equality_locus_fraction: float
    equality_everywhere: bool
    ratio_gradient_vanishes: bool
    consistent: bool


def equality_case_detect(breakdown: PiconeBreakdown, u: ScalarField, v: ScalarField,
                         tol: float = 1e-10) -> EqualityCaseReport:
    """Check that the identity vanishes everywhere iff u/v has zero gradient."""
    mask = breakdown.mask
    check_same_grid(u, v, mask)
    ratio = np.where(mask.included, u.values / np.where(mask.included, v.values, 1.0), 0.0)
    grad_r = gradient_components(breakdown.frame, ratio, mask)
    mag = np.sqrt(np.sum(grad_r ** 2, axis=0))
    max_grad = float(mag[mask.interior].max())
    everywhere = breakdown.equality_locus_fraction == 1.0
    vanishes = max_grad <= tol
    return EqualityCaseReport(max_grad, breakdown.equality_locus_fraction,
                              everywhere, vanishes, everywhere == vanishes)
