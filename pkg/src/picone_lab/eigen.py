"""Principal eigenvalue of the variable-exponent sub-Laplacian.

The solver minimizes the Rayleigh quotient

    Q(u) = energy(u) / mass(u),
    energy(u) = quadrature of |grad_X u|^p(x),
    mass(u)   = quadrature of g(x) |u|^p(x),

over nonnegative nodal fields vanishing on boundary and exterior nodes,
by projected gradient descent with Barzilai-Borwein initial steps and an
Armijo backtracking line search (factor 0.5, sufficient decrease 1e-4).
Iterates are kept on the surface mass(u) = 1; for a genuinely variable
exponent the normalizing scale is found by bisection since the quotient
is then not homogeneous.

Energies use the cell-corner quadrature of :mod:`picone_lab.varform`; the
inequality verifiers share the same functional so the minimizer is a true
lower bound for every quotient they evaluate.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, NumericError
from .frames import ExponentField, Frame
from .grid import DomainMask, ScalarField, check_same_grid, is_strictly_nested
from .lebesgue import luxemburg_norm
from .varform import cell_quadrature

LAMBDA_SMALL_FLAG = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    """Options for ``minimize_principal``; ``init`` is "bump", "random",
    or a ScalarField used as the starting iterate."""

    init: object = "bump"
    max_iter: int = 20000
    grad_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1 or self.grad_tol <= 0:
            raise InvalidInputError("max_iter >= 1 and grad_tol > 0 required")


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalue: float
    eigenfunction: ScalarField
    iterations: int
    residual: float
    quotient_history: tuple[float, ...]
    converged: bool
    message: str = ""

    @property
    def possibly_zero_infimum(self) -> bool:
        """Variable exponents admit domains where the infimum is zero; a
        tiny computed eigenvalue is flagged rather than decided."""
        return self.eigenvalue < LAMBDA_SMALL_FLAG


class _QuotientContext:
    """Sanitized arrays and cached quadrature for one eigenproblem."""

    def __init__(self, p: ExponentField, g: ScalarField, frame: Frame,
                 mask: DomainMask):
        check_same_grid(p.values, g, mask)
        self.mask = mask
        self.grid = mask.grid
        self.quad = cell_quadrature(frame, mask)
        inc = mask.included
        if np.any(g.values[inc] <= 0):
            raise InvalidInputError("weight g must be positive on the domain")
        self.pa = np.where(inc, p.array, 2.0)
        self.ga = np.where(inc, g.values, 0.0)
        p_inc = p.array[inc]
        self.pminus = float(p_inc.min())
        self.pplus = float(p_inc.max())
        if self.pminus <= 1.0:
            raise InvalidInputError("exponent must exceed 1 on the domain")
        self.constant_p = self.pminus == self.pplus
        self.w = mask.weights
        self.interior = mask.interior
        self.mass_coeff = self.w * self.ga

    def energy(self, u: np.ndarray) -> float:
        return self.quad.gradient_power_integral(u, self.pa)

    def energy_grad(self, u: np.ndarray) -> np.ndarray:
        return self.quad.energy_gradient(u, self.pa)

    def mass(self, u: np.ndarray) -> float:
        return float(np.sum(self.mass_coeff * np.abs(u) ** self.pa))

    def mass_grad(self, u: np.ndarray) -> np.ndarray:
        return (self.mass_coeff * self.pa * np.abs(u) ** (self.pa - 1.0)
                * np.sign(u))

    def quotient(self, u: np.ndarray) -> float:
        den = self.mass(u)
        if den <= 0.0:
            raise InvalidInputError("quotient undefined: zero weighted mass")
        return self.energy(u) / den

    def quotient_grad(self, u: np.ndarray, den: float | None = None) -> np.ndarray:
        den = self.mass(u) if den is None else den
        if den <= 0.0:
            raise InvalidInputError("quotient undefined: zero weighted mass")
        q = self.energy(u) / den
        grad = (self.energy_grad(u) - q * self.mass_grad(u)) / den
        return np.where(self.interior, grad, 0.0)

    def normalize(self, u: np.ndarray) -> np.ndarray:
        """Scale u so that mass(u) = 1; bisection when p varies."""
        den = self.mass(u)
        if den <= 0.0:
            raise InvalidInputError("cannot normalize a field with zero mass")
        if self.constant_p:
            return u * den ** (-1.0 / self.pminus)
        a = self.mass_coeff * np.abs(u) ** self.pa
        pa = self.pa

        def mass_of_scale(c):
            return float(np.sum(a * c ** pa))

        lo, hi = sorted(((1.0 / den) ** (1.0 / self.pminus),
                         (1.0 / den) ** (1.0 / self.pplus)))
        for _ in range(200):
            if mass_of_scale(lo) <= 1.0:
                break
            lo *= 0.5
        for _ in range(200):
            if mass_of_scale(hi) >= 1.0:
                break
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if mass_of_scale(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        return u * (0.5 * (lo + hi))


def _zero_outside_interior(values: np.ndarray, mask: DomainMask,
                           what: str) -> np.ndarray:
    outside = ~mask.interior
    scale = float(np.abs(values).max(initial=0.0))
    if np.abs(values[outside]).max(initial=0.0) > 1e-12 * max(1.0, scale):
        raise InvalidInputError(f"{what} must vanish on boundary and exterior nodes")
    return np.where(mask.interior, values, 0.0)


def rayleigh_quotient(u: ScalarField, p: ExponentField, g: ScalarField,
                      frame: Frame, mask: DomainMask) -> float:
    """energy(u) / mass(u) for an admissible field (zero outside interior)."""
    check_same_grid(u, mask)
    ctx = _QuotientContext(p, g, frame, mask)
    vals = _zero_outside_interior(u.values, mask, "test field")
    return ctx.quotient(vals)


def quotient_gradient(u: ScalarField, p: ExponentField, g: ScalarField,
                      frame: Frame, mask: DomainMask) -> ScalarField:
    """Exact nodal derivative of the discrete Rayleigh quotient; zero on
    boundary and exterior nodes."""
    check_same_grid(u, mask)
    ctx = _QuotientContext(p, g, frame, mask)
    vals = _zero_outside_interior(u.values, mask, "test field")
    return ScalarField(mask.grid, ctx.quotient_grad(vals))


def _bump_profile(mask: DomainMask) -> np.ndarray:
    grid = mask.grid
    vals = np.ones(grid.shape)
    for axis in range(grid.dim):
        coords = grid.coords[axis]
        axes = tuple(a for a in range(grid.dim) if a != axis)
        present = mask.included.any(axis=axes) if axes else mask.included
        c = grid.axis_coords[axis][present]
        lo, hi = float(c.min()), float(c.max())
        vals = vals * np.sin(np.pi * (coords - lo) / (hi - lo))
    return np.where(mask.interior, np.maximum(vals, 0.0), 0.0)


def _initial_iterate(ctx: _QuotientContext, opts: SolverOptions) -> np.ndarray:
    mask = ctx.mask
    if isinstance(opts.init, ScalarField):
        check_same_grid(opts.init, mask)
        vals = np.where(mask.interior, np.maximum(opts.init.values, 0.0), 0.0)
    elif opts.init == "bump":
        vals = _bump_profile(mask)
    elif opts.init == "random":
        rng = np.random.default_rng(opts.seed)
        vals = np.where(mask.interior,
                        rng.uniform(0.1, 1.0, mask.grid.shape), 0.0)
    else:
        raise InvalidInputError(f"unknown init {opts.init!r}")
    if not (vals > 0).any():
        raise InvalidInputError("initial iterate vanishes on the interior")
    return ctx.normalize(vals)


def minimize_principal(p: ExponentField, g: ScalarField, frame: Frame,
                       mask: DomainMask,
                       opts: SolverOptions | None = None) -> EigenResult:
    """Minimize the Rayleigh quotient over nonnegative Dirichlet fields.

    Non-convergence within ``max_iter`` is reported on the result, not
    raised; the best iterate found is returned either way.
    """
    opts = opts or SolverOptions()
    ctx = _QuotientContext(p, g, frame, mask)
    interior = ctx.interior

    def tangent_gradient(u, grad):
        """Remove the component along the mass-surface normal (the scale
        the renormalization resets), then apply the nonnegativity
        projection; its max-norm is the first-order optimality measure."""
        normal = np.where(interior, ctx.mass_grad(u), 0.0)
        nn = float(np.sum(normal * normal))
        mu = float(np.sum(grad * normal)) / nn if nn > 0 else 0.0
        tangent = grad - mu * normal
        proj = np.where(u > 0.0, tangent, np.minimum(tangent, 0.0))
        return tangent, np.where(interior, proj, 0.0)

    u = _initial_iterate(ctx, opts)
    q = ctx.energy(u)  # mass(u) == 1 after normalization
    history = [q]
    grad = ctx.quotient_grad(u, den=1.0)
    tangent, proj_grad = tangent_gradient(u, grad)
    tau = 1.0
    prev_u = prev_tangent = None
    converged = False
    message = "reached max_iter"
    residual = np.inf
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        residual = float(np.abs(proj_grad).max()) / (1.0 + abs(q))
        if residual <= opts.grad_tol:
            converged = True
            message = "projected gradient below tolerance"
            break

        if prev_u is not None:
            s = u - prev_u
            y = tangent - prev_tangent
            sy = float(np.sum(s * y))
            ss = float(np.sum(s * s))
            if sy > 1e-300 and np.isfinite(sy):
                tau = min(max(ss / sy, 1e-12), 1e12)

        model = float(np.sum(proj_grad ** 2))
        accepted = False
        step = tau
        for _ in range(60):
            cand = np.maximum(u - step * tangent, 0.0)
            cand = np.where(interior, cand, 0.0)
            if not (cand > 0).any():
                step *= 0.5
                continue
            cand = ctx.normalize(cand)
            q_cand = ctx.energy(cand)
            if q_cand <= q - 1e-4 * step * model:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            message = "line search stagnated"
            break

        prev_u, prev_tangent = u, tangent
        u, q = cand, q_cand
        history.append(q)
        grad = ctx.quotient_grad(u, den=1.0)
        tangent, proj_grad = tangent_gradient(u, grad)

    eigenvalue = ctx.quotient(u)
    return EigenResult(
        eigenvalue=eigenvalue,
        eigenfunction=ScalarField(mask.grid, u),
        iterations=iterations,
        residual=residual,
        quotient_history=tuple(history),
        converged=converged,
        message=message,
    )


# ---------------------------------------------------------------- p = 2 oracle


@dataclass(frozen=True, eq=False)
class P2OracleResult:
    lambda1: float
    u1: ScalarField
    lambda2: float
    u2: ScalarField
    iterations: int


def linear_oracle_p2(g: ScalarField, frame: Frame, mask: DomainMask,
                     tol: float = 1e-12, max_iter: int = 50000,
                     seed: int = 0) -> P2OracleResult:
    """Two smallest eigenpairs of the p = 2 problem by inverse power
    iteration with deflation on the assembled quadratic form."""
    check_same_grid(g, mask)
    quad = cell_quadrature(frame, mask)
    a_full = quad.p2_stiffness()
    ii = mask.interior.ravel()
    a_int = a_full[ii][:, ii].tocsc()
    dg = (mask.weights * g.values).ravel()[ii]
    if np.any(dg <= 0):
        raise InvalidInputError("weight g must be positive on interior nodes")
    solver = spla.splu(a_int)
    rng = np.random.default_rng(seed)

    def dg_dot(a, b):
        return float(np.sum(a * dg * b))

    total_iters = 0

    def smallest_mode(deflate=None):
        nonlocal total_iters
        x = np.ones(a_int.shape[0]) if deflate is None else \
            rng.standard_normal(a_int.shape[0])
        lam_prev = np.inf
        for _ in range(max_iter):
            total_iters += 1
            if deflate is not None:
                x = x - deflate * (dg_dot(deflate, x) / dg_dot(deflate, deflate))
            y = solver.solve(dg * x)
            if deflate is not None:
                y = y - deflate * (dg_dot(deflate, y) / dg_dot(deflate, deflate))
            nrm = np.sqrt(dg_dot(y, y))
            if nrm == 0.0 or not np.isfinite(nrm):
                raise NumericError("inverse iteration collapsed")
            x = y / nrm
            lam = float(x @ (a_int @ x))
            if abs(lam - lam_prev) <= tol * max(1.0, abs(lam)):
                return lam, x
            lam_prev = lam
        raise NumericError("inverse power iteration stagnated")

    lam1, x1 = smallest_mode()
    if x1.sum() < 0:
        x1 = -x1
    lam2, x2 = smallest_mode(deflate=x1)

    def embed(x):
        out = np.zeros(mask.grid.num_nodes)
        out[ii] = x
        return ScalarField(mask.grid, out.reshape(mask.grid.shape))

    return P2OracleResult(lam1, embed(x1), lam2, embed(x2), total_iters)


def p2_dirichlet_solve(frame: Frame, mask: DomainMask, source: ScalarField,
                       boundary: ScalarField | None = None) -> ScalarField:
    """Solve the p = 2 weak problem: pairing(u, hat_i) = w_i source_i at
    interior nodes, with given boundary values (default zero)."""
    check_same_grid(source, mask)
    quad = cell_quadrature(frame, mask)
    a_full = quad.p2_stiffness().tocsr()
    ii = mask.interior.ravel()
    rhs = (mask.weights * source.values).ravel()[ii]
    full = np.zeros(mask.grid.num_nodes)
    if boundary is not None:
        check_same_grid(boundary, mask)
        bnd = (mask.classification == 1).ravel()
        full[bnd] = boundary.values.ravel()[bnd]
        rhs = rhs - a_full[ii] @ full
    sol = spla.spsolve(a_full[ii][:, ii].tocsc(), rhs)
    full[ii] = sol
    return ScalarField(mask.grid, full.reshape(mask.grid.shape))


# ------------------------------------------------------------- experiments


def _max_workers(n_tasks: int) -> int:
    raw = os.environ.get("PICONE_LAB_THREADS", "")
    try:
        cap = int(raw) if raw else 1
    except ValueError:
        cap = 1
    return max(1, min(cap, n_tasks))


def _run_all(tasks):
    workers = _max_workers(len(tasks))
    if workers == 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(t) for t in tasks]
        return [f.result() for f in futures]


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    lambdas: tuple[float, ...]
    margins: tuple[float, ...]
    strictly_decreasing: bool
    results: tuple[EigenResult, ...]


def domain_monotonicity_experiment(p: ExponentField, g: ScalarField, frame: Frame,
                                   outer_mask: DomainMask,
                                   inner_masks: list[DomainMask],
                                   opts: SolverOptions | None = None
                                   ) -> MonotonicityReport:
    """Eigenvalues along a strictly nested chain of domains, smallest first;
    the eigenvalue must strictly decrease as the domain grows."""
    chain = list(inner_masks) + [outer_mask]
    for inner, outer in zip(chain, chain[1:]):
        if not is_strictly_nested(inner, outer):
            raise InvalidInputError("masks must be strictly nested, smallest first")
    tasks = [lambda m=m: minimize_principal(p, g, frame, m, opts) for m in chain]
    results = _run_all(tasks)
    lambdas = tuple(r.eigenvalue for r in results)
    margins = tuple(a - b for a, b in zip(lambdas, lambdas[1:]))
    return MonotonicityReport(lambdas, margins, all(m > 0 for m in margins),
                              tuple(results))


@dataclass(frozen=True, eq=False)
class SimplicityReport:
    lambdas: tuple[float, ...]
    lambda_spread: float
    eigenfunction_spread: float
    lambda_pass: bool
    eigenfunction_pass: bool
    results: tuple[EigenResult, ...]

    @property
    def passed(self) -> bool:
        return self.lambda_pass and self.eigenfunction_pass


def simplicity_experiment(p: ExponentField, g: ScalarField, frame: Frame,
                          mask: DomainMask, restarts: int = 5, seed: int = 0,
                          opts: SolverOptions | None = None,
                          lambda_tol: float = 1e-3,
                          function_tol: float = 1e-3) -> SimplicityReport:
    """Restart the solver from random positive fields; simplicity of the
    principal eigenvalue predicts matching eigenpairs up to scale."""
    if restarts < 1:
        raise InvalidInputError("need at least one restart")
    base = opts or SolverOptions()
    tasks = [lambda s=seed + k: minimize_principal(
        p, g, frame, mask, replace(base, init="random", seed=s))
        for k in range(restarts)]
    results = _run_all(tasks)
    lambdas = tuple(r.eigenvalue for r in results)
    lam_ref = max(abs(v) for v in lambdas)
    lam_spread = (max(lambdas) - min(lambdas)) / max(lam_ref, 1e-300)
    normalized = []
    for r in results:
        nrm = luxemburg_norm(r.eigenfunction, p, mask)
        normalized.append(r.eigenfunction.values / nrm)
    spread = 0.0
    for i in range(len(normalized)):
        for j in range(i + 1, len(normalized)):
            spread = max(spread, float(np.abs(normalized[i] - normalized[j]).max()))
    return SimplicityReport(
        lambdas, lam_spread, spread,
        lambda_pass=lam_spread <= lambda_tol,
        eigenfunction_pass=spread <= function_tol,
        results=tuple(results))


def sign_change_check(u: ScalarField, mask: DomainMask) -> bool:
    """True iff the field takes values of both signs on interior nodes,
    beyond a relative tolerance of 1e-9."""
    check_same_grid(u, mask)
    vals = u.values[mask.interior]
    tol = 1e-9 * float(np.abs(vals).max(initial=0.0))
    return bool((vals > tol).any() and (vals < -tol).any())
