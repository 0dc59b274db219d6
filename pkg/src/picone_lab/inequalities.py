"""Verifiers for the Hardy-type inequality and the Caccioppoli family.

Every gradient-bearing integral uses the cell-corner quadrature shared with
the eigensolver, so an eigenvalue reported by ``minimize_principal`` is a
true lower bound for the quotients checked here.  Theorem hypotheses are
certified numerically rather than trusted: sub- and sup-solutions are
checked through the sign of the discrete weak-form residual against every
nodal test perturbation, and gradient-orthogonality of the base solution
against the exponent fields is measured before any constant is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, InvalidInputError
from .frames import (ExponentField, Frame, gradient_components,
                     gradient_orthogonality_defect)
from .grid import DomainMask, ScalarField, check_same_grid
from .varform import cell_quadrature

DEFAULT_HYPOTHESIS_TOL = 1e-5
DEFAULT_DEFECT_TOL = 1e-10
LOG_V_FLOOR = 1e-10


@dataclass(frozen=True)
class InequalityReport:
    """Two sides of one display, with ``holds`` following lhs <= rhs."""

    lhs: float
    rhs: float
    constant_used: float
    slack: float
    holds: bool
    case_label: str
    abs_tol: float
    values: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def _make_report(lhs: float, rhs: float, constant: float, label: str,
                 abs_tol: float | None, notes: tuple[str, ...] = (),
                 **values: float) -> InequalityReport:
    if abs_tol is None:
        abs_tol = 1e-9 * (1.0 + abs(rhs))
    slack = rhs - lhs
    holds = lhs <= rhs * (1.0 + 1e-6) + abs_tol
    return InequalityReport(lhs, rhs, constant, slack, holds, label, abs_tol,
                            dict(values), notes)


def _bounds_over(mask: DomainMask, values: np.ndarray) -> tuple[float, float]:
    inc = values[mask.included]
    return float(inc.min()), float(inc.max())


def _exponent_data(p: ExponentField, mask: DomainMask):
    pa = np.where(mask.included, p.array, 2.0)
    pm, pp = _bounds_over(mask, p.array)
    return pa, pm, pp


def _field_data(q, mask: DomainMask):
    """Accept a plain field for the second exponent: the sup-solution case
    is stated down to q = 0, below the variable-exponent range."""
    vals = q.array if isinstance(q, ExponentField) else q.values
    qa = np.where(mask.included, vals, 0.0)
    qm, qp = _bounds_over(mask, vals)
    return qa, qm, qp


def _power_zero_base(v: np.ndarray, e: np.ndarray) -> np.ndarray:
    """v^e extended to v = 0 by limits: 0 for e > 0, 1 for e = 0, inf below."""
    out = np.empty_like(v)
    pos = v > 0.0
    out[pos] = v[pos] ** e[pos]
    at_zero = ~pos
    ez = e[at_zero]
    out[at_zero] = np.where(ez > 0, 0.0, np.where(ez == 0, 1.0, np.inf))
    return out


def _require_test_function(phi: ScalarField, mask: DomainMask):
    inc = mask.included
    if np.any(phi.values[inc] < 0):
        raise InvalidInputError("test function must be nonnegative")
    outside = ~mask.interior
    scale = float(np.abs(phi.values).max(initial=0.0))
    if np.abs(phi.values[outside]).max(initial=0.0) > 1e-12 * max(1.0, scale):
        raise InvalidInputError("test function must vanish on boundary and exterior")
    return np.where(mask.interior, phi.values, 0.0)


def weak_form_residual(v: ScalarField, p: ExponentField, lam: float,
                       g: ScalarField | None, frame: Frame,
                       mask: DomainMask) -> ScalarField:
    """Per-interior-node residual of the weak eigenproblem paired with the
    nodal hat at that node; nonpositive for sub-solutions, nonnegative for
    sup-solutions."""
    check_same_grid(v, mask, p.values)
    quad = cell_quadrature(frame, mask)
    pa, _, _ = _exponent_data(p, mask)
    vv = np.where(mask.included, v.values, 0.0)
    pairing = quad.weak_pairing(vv, pa)
    if g is not None and lam != 0.0:
        check_same_grid(g, mask)
        ga = np.where(mask.included, g.values, 0.0)
        mass_term = lam * mask.weights * ga * np.abs(vv) ** (pa - 2.0) * vv
    else:
        mass_term = np.zeros_like(pairing)
    resid = np.where(mask.interior, pairing - mass_term, 0.0)
    return ScalarField(mask.grid, resid)


def _solution_scale(v, p, lam, g, frame, mask) -> float:
    """Magnitude of the residual's ingredients before cancellation, so an
    exact discrete solution is not rejected for having a tiny residual."""
    pa, _, _ = _exponent_data(p, mask)
    vv = np.where(mask.included, v.values, 0.0)
    comps = gradient_components(frame, vv, mask)
    mag = np.sqrt(np.sum(comps ** 2, axis=0))[mask.included]
    flux = float((mag ** (pa[mask.included] - 1.0)).max(initial=0.0))
    scale = flux * float(mask.weights.max()) / min(mask.grid.spacing)
    if g is not None:
        ga = np.where(mask.included, g.values, 0.0)
        mass = abs(lam) * mask.weights * ga * np.abs(vv) ** (pa - 1.0)
        scale += float(mass[mask.interior].max(initial=0.0))
    return scale + 1e-300


def _certify_solution(v, p, lam, g, frame, mask, case: str, tol: float):
    resid = weak_form_residual(v, p, lam, g, frame, mask).values
    scale = _solution_scale(v, p, lam, g, frame, mask)
    interior = mask.interior
    if case == "sub":
        worst = float(resid[interior].max())
        if worst > tol * scale:
            node = np.unravel_index(
                np.argmax(np.where(interior, resid, -np.inf)), resid.shape)
            raise HypothesisError(
                "sub-solution certification failed",
                f"weak residual {worst:.3e} > {tol:.1e} x scale {scale:.3e} "
                f"at node {tuple(int(i) for i in node)}")
    else:
        worst = float(resid[interior].min())
        if worst < -tol * scale:
            node = np.unravel_index(
                np.argmin(np.where(interior, resid, np.inf)), resid.shape)
            raise HypothesisError(
                "sup-solution certification failed",
                f"weak residual {worst:.3e} < -{tol:.1e} x scale {scale:.3e} "
                f"at node {tuple(int(i) for i in node)}")
    return worst, scale


def hardy_verify(u: ScalarField, p: ExponentField, a: ScalarField, mu: float,
                 frame: Frame, mask: DomainMask,
                 abs_tol: float | None = None) -> InequalityReport:
    """Check the gradient-energy lower bound: quadrature of |grad_X u|^p
    dominates mu times the weighted modular of u.

    The report follows the lhs <= rhs convention, so lhs is the weighted
    term and rhs the gradient energy; the named values carry both.
    """
    check_same_grid(u, a, mask, p.values)
    if mu < 0:
        raise InvalidInputError("mu must be nonnegative")
    inc = mask.included
    if np.any(a.values[inc] <= 0):
        raise InvalidInputError("weight a must be positive on the domain")
    if np.any(u.values[inc] < 0):
        raise InvalidInputError("hardy_verify needs u >= 0")
    outside = ~mask.interior
    scale = float(np.abs(u.values).max(initial=0.0))
    if np.abs(u.values[outside]).max(initial=0.0) > 1e-12 * max(1.0, scale):
        raise InvalidInputError("u must vanish on boundary and exterior nodes")

    quad = cell_quadrature(frame, mask)
    pa, _, _ = _exponent_data(p, mask)
    uu = np.where(mask.interior, u.values, 0.0)
    aa = np.where(inc, a.values, 0.0)
    gradient_integral = quad.gradient_power_integral(uu, pa)
    weighted_integral = float(np.sum(mask.weights * aa * np.abs(uu) ** pa))
    return _make_report(
        mu * weighted_integral, gradient_integral, mu, "hardy", abs_tol,
        notes=("display orientation: gradient integral dominates the weighted term",),
        gradient_integral=gradient_integral,
        weighted_integral=weighted_integral,
        mu=mu)


def caccioppoli_constants(pminus: float, pplus: float, qminus: float,
                          qplus: float, lam: float,
                          case: str) -> tuple[float, float]:
    """Explicit constants (gradient term, weight term) of the Caccioppoli
    displays; the sup case carries the negative-signed weight constant."""
    if not 1.0 < pminus <= pplus:
        raise InvalidInputError("need 1 < pminus <= pplus")
    if qminus > qplus:
        raise InvalidInputError("need qminus <= qplus")
    if case == "sub":
        denom = qminus - pplus + 1.0
        if denom <= 0.0:
            raise InvalidInputError(
                f"sub case needs qminus - pplus + 1 > 0, got {denom}")
        return (pplus / denom) ** pplus, lam * pplus / denom
    if case == "sup":
        denom = pminus - qplus - 1.0
        if denom <= 0.0:
            raise InvalidInputError(
                f"sup case needs pminus - qplus - 1 > 0, got {denom}")
        return (pplus / denom) ** pplus, -lam * pplus / denom
    raise InvalidInputError(f"case must be 'sub' or 'sup', got {case!r}")


SUP_CONSTANT_NOTE = ("weight constant implemented with the negative sign as "
                     "printed; the source display names it without the sign")


def caccioppoli_verify(v: ScalarField, phi: ScalarField, p: ExponentField,
                       q, lam: float, g: ScalarField, frame: Frame,
                       mask: DomainMask, case: str,
                       hypothesis_tol: float = DEFAULT_HYPOTHESIS_TOL,
                       defect_tol: float = DEFAULT_DEFECT_TOL,
                       abs_tol: float | None = None) -> InequalityReport:
    """Check the weighted gradient bound for certified sub-/sup-solutions.

    Quantities: quadrature of v^(q-p) phi^p |grad v|^p against the
    gradient-constant times quadrature of v^q |grad phi|^p plus the
    weight-constant times quadrature of g v^q phi^p.
    """
    check_same_grid(v, phi, g, mask, p.values)
    if case not in ("sub", "sup"):
        raise InvalidInputError(f"case must be 'sub' or 'sup', got {case!r}")
    inc = mask.included
    # Dirichlet solutions vanish on the boundary ring; positivity is a
    # hypothesis about the open domain, and the test-function support keeps
    # every negative power of v away from those zeros
    if np.any(v.values[mask.interior] <= 0):
        raise HypothesisError("positivity of the base solution",
                              "v must be strictly positive inside the domain")
    if np.any(v.values[inc] < 0):
        raise HypothesisError("positivity of the base solution",
                              "v must be nonnegative up to the boundary")
    phiv = _require_test_function(phi, mask)
    pa, pm, pp = _exponent_data(p, mask)
    qa, qm, qp = _field_data(q, mask)

    defect_p = gradient_orthogonality_defect(frame, v.values, pa, mask)
    if defect_p > defect_tol:
        raise HypothesisError("gradient orthogonality against the exponent p",
                              f"defect {defect_p:.3e} > {defect_tol:.1e}")
    defect_q = gradient_orthogonality_defect(frame, v.values, qa, mask)
    if defect_q > defect_tol:
        raise HypothesisError("gradient orthogonality against the exponent q",
                              f"defect {defect_q:.3e} > {defect_tol:.1e}")

    worst, scale = _certify_solution(v, p, lam, g, frame, mask, case,
                                     hypothesis_tol)
    c_grad, c_weight = caccioppoli_constants(pm, pp, qm, qp, lam, case)

    quad = cell_quadrature(frame, mask)
    vv = np.where(inc, v.values, 1.0)
    ga = np.where(inc, g.values, 0.0)
    support = phiv > 0.0  # interior by construction, so v > 0 there
    pref_lhs = np.zeros_like(vv)
    pref_lhs[support] = (vv[support] ** (qa - pa)[support]
                         * phiv[support] ** pa[support])
    lhs = quad.gradient_power_integral(vv, pa, prefactor=pref_lhs)
    gradient_term = quad.gradient_power_integral(phiv, pa,
                                                 prefactor=_power_zero_base(vv, qa))
    weight_integrand = np.zeros_like(vv)
    weight_integrand[support] = (ga[support] * vv[support] ** qa[support]
                                 * phiv[support] ** pa[support])
    weight_term = float(np.sum(mask.weights * weight_integrand))
    rhs = c_grad * gradient_term + c_weight * weight_term
    notes = (SUP_CONSTANT_NOTE,) if case == "sup" else ()
    return _make_report(
        lhs, rhs, c_grad, f"caccioppoli-{case}", abs_tol, notes=notes,
        gradient_term=gradient_term, weight_term=weight_term,
        weight_constant=c_weight, weak_residual_worst=worst,
        weak_residual_scale=scale, lam=lam)


def log_caccioppoli_verify(v: ScalarField, phi: ScalarField, p: ExponentField,
                           frame: Frame, mask: DomainMask, lam: float = 0.0,
                           g: ScalarField | None = None,
                           hypothesis_tol: float = DEFAULT_HYPOTHESIS_TOL,
                           v_floor: float = LOG_V_FLOOR,
                           abs_tol: float | None = None) -> InequalityReport:
    """Check the logarithmic gradient bound for certified superharmonic
    (or sup-solution) positive fields: quadrature of |phi grad log v|^p
    against the explicit constant times quadrature of |grad phi|^p, minus
    the weight term when a weight is supplied."""
    check_same_grid(v, phi, mask, p.values)
    inc = mask.included
    if np.any(v.values[inc] < v_floor):
        raise HypothesisError("positivity of the base solution",
                              f"v must be >= {v_floor} on the domain")
    phiv = _require_test_function(phi, mask)
    pa, pm, pp = _exponent_data(p, mask)
    worst, scale = _certify_solution(v, p, lam, g, frame, mask, "sup",
                                     hypothesis_tol)
    c_grad, c_weight = caccioppoli_constants(pm, pp, 0.0, 0.0, lam, "sup")

    quad = cell_quadrature(frame, mask)
    vv = np.where(inc, v.values, 1.0)
    lhs = quad.gradient_power_integral(vv, pa, prefactor=(phiv / vv) ** pa)
    gradient_term = quad.gradient_power_integral(phiv, pa)
    if g is not None:
        ga = np.where(inc, g.values, 0.0)
        weight_term = float(np.sum(mask.weights * ga * phiv ** pa))
    else:
        weight_term = 0.0
    rhs = c_grad * gradient_term + c_weight * weight_term
    return _make_report(
        lhs, rhs, c_grad, "log-caccioppoli", abs_tol, notes=(SUP_CONSTANT_NOTE,),
        gradient_term=gradient_term, weight_term=weight_term,
        weight_constant=c_weight, weak_residual_worst=worst,
        weak_residual_scale=scale, lam=lam)
