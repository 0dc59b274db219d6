"""Variable-exponent Lebesgue machinery: modular, Luxemburg norm, and the
norm-modular relation suite, plus the generalized Holder inequality check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError
from .frames import ExponentField
from .grid import DomainMask, ScalarField, check_same_grid

DEFAULT_NORM_TOL = 1e-12


def modular(u: ScalarField, p: ExponentField, mask: DomainMask) -> float:
    """Quadrature of |u|^p(x) over the included nodes."""
    check_same_grid(u, mask, p.values)
    inc = mask.included
    integrand = np.zeros(mask.grid.shape)
    integrand[inc] = np.abs(u.values[inc]) ** p.array[inc]
    return float(np.sum(mask.weights * integrand))


def _modular_of_scaled(abs_vals, p_vals, w_vals, t: float) -> float:
    return float(np.sum(w_vals * (abs_vals / t) ** p_vals))


def luxemburg_norm(u: ScalarField, p: ExponentField, mask: DomainMask,
                   tol: float = DEFAULT_NORM_TOL) -> float:
    """Smallest t > 0 with modular(u/t) <= 1, by bisection on the strictly
    decreasing map t -> modular(u/t); returns 0 for the zero field.

    The returned t satisfies |modular(u/t) - 1| <= 1e-10.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    check_same_grid(u, mask, p.values)
    inc = mask.included
    abs_vals = np.abs(u.values[inc])
    if not np.isfinite(abs_vals).all():
        raise InvalidInputError("field has non-finite values on the domain")
    umax = float(abs_vals.max(initial=0.0))
    if umax == 0.0:
        return 0.0
    p_vals = p.array[inc]
    w_vals = mask.weights[inc]

    t_hi = umax * mask.measure ** (1.0 / p.pminus) + 1.0
    for _ in range(2000):
        if _modular_of_scaled(abs_vals, p_vals, w_vals, t_hi) < 1.0:
            break
        t_hi *= 2.0
        if not np.isfinite(t_hi):
            raise NumericError("bracket expansion overflowed while growing t")
    else:
        raise NumericError("could not bracket the Luxemburg norm from above")
    t_lo = t_hi / 2.0
    for _ in range(4000):
        if _modular_of_scaled(abs_vals, p_vals, w_vals, t_lo) > 1.0:
            break
        t_lo /= 2.0
        if t_lo < 1e-300:
            raise NumericError("bracket expansion underflowed while shrinking t")
    else:
        raise NumericError("could not bracket the Luxemburg norm from below")

    while t_hi - t_lo > tol * t_hi:
        mid = 0.5 * (t_lo + t_hi)
        if mid == t_lo or mid == t_hi:
            break
        if _modular_of_scaled(abs_vals, p_vals, w_vals, mid) >= 1.0:
            t_lo = mid
        else:
            t_hi = mid
    t = 0.5 * (t_lo + t_hi)
    if abs(_modular_of_scaled(abs_vals, p_vals, w_vals, t) - 1.0) > 1e-10:
        raise NumericError("bisection finished away from the unit modular level")
    return t


def conjugate_exponent(p: ExponentField, mask: DomainMask) -> ExponentField:
    """Pointwise conjugate p/(p-1); bounds are recomputed over the mask."""
    vals = ScalarField(p.grid, p.array / (p.array - 1.0))
    return ExponentField.from_field(vals, mask)


@dataclass(frozen=True)
class HolderReport:
    lhs: float
    rhs: float
    constant: float
    norm_u: float
    norm_v_conjugate: float
    holds: bool


def holder_check(u: ScalarField, v: ScalarField, p: ExponentField,
                 mask: DomainMask) -> HolderReport:
    """Check integral of |u v| against (1 + 1/pminus - 1/pplus) ||u||_p ||v||_p'."""
    check_same_grid(u, v, mask, p.values)
    inc = mask.included
    prod = np.zeros(mask.grid.shape)
    prod[inc] = np.abs(u.values[inc] * v.values[inc])
    lhs = float(np.sum(mask.weights * prod))
    pprime = conjugate_exponent(p, mask)
    cst = 1.0 + 1.0 / p.pminus - 1.0 / p.pplus
    nu = luxemburg_norm(u, p, mask)
    nv = luxemburg_norm(v, pprime, mask)
    rhs = cst * nu * nv
    return HolderReport(lhs, rhs, cst, nu, nv, lhs <= rhs * (1.0 + 1e-9))


@dataclass(frozen=True)
class ModularReport:
    """Norm, modular, and the per-item flags of the norm-modular relations."""

    modular: float
    norm: float
    relation_flags: dict[str, bool] = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(self.relation_flags.values())


def _sign_band(x: float, band: float) -> int:
    if x > band:
        return 1
    if x < -band:
        return -1
    return 0


def norm_modular_relations(u: ScalarField, p: ExponentField, mask: DomainMask,
                           slack: float = 1e-9) -> ModularReport:
    """Evaluate the unit-ball sign agreement, the two power sandwiches, and
    the min/max sandwich between the Luxemburg norm and the modular."""
    rho = modular(u, p, mask)
    nrm = luxemburg_norm(u, p, mask)
    pm, pp = p.pminus, p.pplus

    s_norm = _sign_band(nrm - 1.0, slack)
    s_rho = _sign_band(rho - 1.0, slack)
    sign_agree = (s_norm == s_rho
                  or (s_norm == 0 and abs(rho - 1.0) <= 10 * slack)
                  or (s_rho == 0 and abs(nrm - 1.0) <= 10 * slack))

    def sandwiched(lo, mid, hi):
        pad = slack * (1.0 + abs(mid))
        return lo <= mid + pad and mid <= hi + pad

    if nrm <= 1.0:
        below_unit = sandwiched(nrm ** pp, rho, nrm ** pm)
        above_unit = True
    else:
        below_unit = True
        above_unit = sandwiched(nrm ** pm, rho, nrm ** pp)
    min_max = sandwiched(min(nrm ** pm, nrm ** pp), rho, max(nrm ** pm, nrm ** pp))

    flags = {
        "unit_ball_sign_agreement": sign_agree,
        "norm_below_one_sandwich": below_unit,
        "norm_above_one_sandwich": above_unit,
        "min_max_sandwich": min_max,
    }
    return ModularReport(rho, nrm, flags)
