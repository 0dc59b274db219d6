"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s`` or in the
captured output of a failing run).
"""

import time

import numpy as np
import pytest

from picone_lab import (ExponentField, ScalarField, build_grid, euclidean_frame,
                        frame_by_name, full_mask, grushin_frame,
                        heisenberg_frame, orthogonality_defect, rect_mask)
from picone_lab.cli import run
from picone_lab.config import RunConfig
from picone_lab.eigen import (SolverOptions, domain_monotonicity_experiment,
                              linear_oracle_p2, minimize_principal,
                              p2_dirichlet_solve, simplicity_experiment)
from picone_lab.inequalities import (caccioppoli_constants, caccioppoli_verify,
                                     hardy_verify, log_caccioppoli_verify)
from picone_lab.lebesgue import luxemburg_norm, modular, norm_modular_relations
from picone_lab.picone import (Nonlinearity, canonical_nonlinearity,
                               equality_case_detect, picone_evaluate,
                               power_sum_nonlinearity, young_classical,
                               young_modified)

from oracles import p_laplacian_1d_first_eigenvalue

TWO_PI_SQ = 2 * np.pi ** 2


def _verdict(num: int, ok: bool, detail: str):
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)
    assert ok, f"criterion {num}: {detail}"


def _smooth(g, rng, nonneg=False, floor=0.0):
    ks = rng.uniform(0.5, 3.0, g.dim)
    phase = rng.uniform(0, 2 * np.pi)
    amp = rng.uniform(0.3, 1.0)
    vals = amp * np.sin(sum(k * c for k, c in zip(ks, g.coords)) + phase)
    if nonneg:
        vals = (vals + amp) ** 2 / (2 * amp)
    return ScalarField(g, vals + floor)


FRAME_GRIDS = {
    "euclidean2": ([(0, 1), (0, 1)], [33, 33]),
    "grushin": ([(-1, 1), (0, 1)], [33, 33]),
    "heisenberg": ([(0, 1), (0, 1), (0, 1)], [11, 11, 11]),
}


def test_criterion_01_algebraic_identity():
    rng = np.random.default_rng(100)
    nonlins = [canonical_nonlinearity(), power_sum_nonlinearity(),
               Nonlinearity("exp", lambda y, p: np.exp(y),
                            lambda y, p: np.exp(y))]
    start = time.perf_counter()
    cases = 0
    worst = 0.0
    for name, (bounds, res) in FRAME_GRIDS.items():
        g = build_grid(bounds, res)
        m = full_mask(g)
        fr = frame_by_name(name)
        for k in range(17):
            u = _smooth(g, rng, nonneg=True)
            v = _smooth(g, rng, nonneg=True, floor=0.5)
            p = ExponentField.from_field(
                ScalarField(g, 2.0 + 0.8 * _smooth(g, rng, nonneg=True).values),
                m)
            bd = picone_evaluate(u, v, p, nonlins[k % 3], fr, m,
                                 mode="algebraic")
            worst = max(worst, bd.identity_residual)
            cases += 1
    elapsed = time.perf_counter() - start
    ok = cases >= 50 and worst <= 1e-12 and elapsed < 5.0
    _verdict(1, ok, f"{cases} algebraic cases, worst residual {worst:.2e}, "
                    f"{elapsed:.2f}s")


def test_criterion_02_nonnegativity():
    rng = np.random.default_rng(200)
    worst_min = np.inf
    cases = 0

    def run_family(frame, g, m, v, p):
        nonlocal worst_min, cases
        assert orthogonality_defect(frame, v, p, m) <= 1e-12
        for _ in range(17):
            u = _smooth(g, rng, nonneg=True)
            bd = picone_evaluate(u, v, p, canonical_nonlinearity(), frame, m)
            worst_min = min(worst_min, bd.min_lhs)
            cases += 1

    g = build_grid([(-1, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    run_family(grushin_frame(), g, m,
               ScalarField.from_function(g, lambda x, y: 1 + x ** 2),
               ExponentField.from_field(
                   ScalarField.from_function(g, lambda x, y: 2 + y ** 2 / 2), m))

    g = build_grid([(0, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    run_family(euclidean_frame(2), g, m, _smooth(g, rng, nonneg=True, floor=0.5),
               ExponentField.constant(g, 2.6))

    g = build_grid([(0, 1), (0, 1), (0, 1)], [11, 11, 11])
    m = full_mask(g)
    run_family(heisenberg_frame(), g, m, _smooth(g, rng, nonneg=True, floor=0.5),
               ExponentField.constant(g, 2.2))

    ok = cases >= 50 and worst_min >= -1e-10
    _verdict(2, ok, f"{cases} orthogonal cases, min of expanded form "
                    f"{worst_min:.2e}")


def test_criterion_03_equality_characterization():
    rng = np.random.default_rng(300)
    g = build_grid([(0, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    fr = euclidean_frame(2)
    ok = True
    details = []
    for alpha in (0.5, 1.0, 3.0):
        v = _smooth(g, rng, nonneg=True, floor=0.5)
        p = ExponentField.constant(g, float(rng.uniform(1.8, 3.0)))
        u = ScalarField(g, alpha * v.values)
        bd = picone_evaluate(u, v, p, canonical_nonlinearity(), fr, m)
        rep = equality_case_detect(bd, u, v)
        ok &= (bd.equality_locus_fraction == 1.0
               and rep.max_ratio_gradient <= 1e-10 and rep.consistent)
        details.append(rep.max_ratio_gradient)
        pert = ScalarField(g, u.values * (1 + 0.1 * g.coords[0] ** 2))
        bd2 = picone_evaluate(pert, v, p, canonical_nonlinearity(), fr, m)
        rep2 = equality_case_detect(bd2, pert, v)
        ok &= (bd2.equality_locus_fraction < 1.0
               and rep2.max_ratio_gradient > 1e-10 and rep2.consistent)
    _verdict(3, ok, f"scalar multiples give locus 1 with ratio gradients "
                    f"{max(details):.1e}; perturbations break both sides")


def test_criterion_04_decomposition_and_young():
    rng = np.random.default_rng(400)
    g = build_grid([(-1, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    worst = 0.0
    for _ in range(10):
        u = _smooth(g, rng, nonneg=True)
        v = _smooth(g, rng, nonneg=True, floor=0.5)
        p = ExponentField.from_field(
            ScalarField(g, 2.0 + 0.6 * _smooth(g, rng, nonneg=True).values), m)
        bd = picone_evaluate(u, v, p, canonical_nonlinearity(),
                             grushin_frame(), m)
        scale = 1.0 + float(np.abs(bd.lhs.values).max())
        worst = max(worst, float(np.abs(bd.lhs.values - bd.parts_sum()).max())
                    / scale)
    n = 100_000
    s = rng.uniform(0, 10, n)
    t = rng.uniform(0, 10, n)
    p_arr = rng.uniform(1 + 1e-6, 10, n)
    yc = young_classical(s, t, p_arr)
    phi = rng.uniform(0, 10, n)
    psi = rng.uniform(0, 10, n)
    eps = rng.uniform(1e-2, 10, n)
    ym = young_modified(phi, psi, eps, p_arr)
    eq_c = young_classical(s[:1000], s[:1000] ** (p_arr[:1000] - 1),
                           p_arr[:1000])
    eq_m = young_modified(eps[:1000] * psi[:1000], psi[:1000], eps[:1000],
                          p_arr[:1000])
    ok = (worst <= 1e-12 and bool(np.all(yc.holds)) and bool(np.all(ym.holds))
          and bool(np.all(eq_c.equality)) and bool(np.all(eq_m.equality)))
    _verdict(4, ok, f"decomposition residual {worst:.2e}; 2x{n} Young samples "
                    f"clean; constructed equalities detected")


def test_criterion_05_norm_modular():
    rng = np.random.default_rng(500)
    g = build_grid([(0, 1), (0, 1)], [9, 9])
    m = full_mask(g)
    violations = 0
    worst_norm = 0.0
    worst_hom = 0.0
    for _ in range(1000):
        u = ScalarField(g, rng.uniform(-3, 3, g.shape) * rng.uniform(0.1, 3.0))
        mid = rng.uniform(1.7, 3.3)
        amp = rng.uniform(0.05, 0.45)
        p = ExponentField.from_field(
            ScalarField(g, mid + amp * np.sin(3 * g.coords[0] + g.coords[1])), m)
        rep = norm_modular_relations(u, p, m, slack=1e-9)
        if not rep.all_hold:
            violations += 1
        if rep.norm > 0:
            unit = modular(ScalarField(g, u.values / rep.norm), p, m)
            worst_norm = max(worst_norm, abs(unit - 1.0))
            c = float(rng.uniform(0.05, 20.0))
            hom = abs(luxemburg_norm(ScalarField(g, c * u.values), p, m)
                      - c * rep.norm) / (c * rep.norm)
            worst_hom = max(worst_hom, hom)
    ok = violations == 0 and worst_norm <= 1e-9 and worst_hom <= 1e-9
    _verdict(5, ok, f"1000 pairs, 0 relation violations allowed (got "
                    f"{violations}); normalization {worst_norm:.1e}; "
                    f"homogeneity {worst_hom:.1e}")


def test_criterion_06_eigen_targets():
    g = build_grid([(0, 1), (0, 1)], [65, 65])
    m = full_mask(g)
    start = time.perf_counter()
    res = minimize_principal(ExponentField.constant(g, 2.0),
                             ScalarField.constant(g, 1.0), euclidean_frame(2), m)
    elapsed = time.perf_counter() - start
    err_square = abs(res.eigenvalue - TWO_PI_SQ) / TWO_PI_SQ
    ok = res.converged and err_square <= 0.01 and elapsed < 30.0

    oracle_errs = {}
    for name in ("grushin", "heisenberg"):
        bounds, resn = FRAME_GRIDS[name]
        gg = build_grid(bounds, resn)
        mm = full_mask(gg)
        one = ScalarField.constant(gg, 1.0)
        fr = frame_by_name(name)
        got = minimize_principal(ExponentField.constant(gg, 2.0), one, fr, mm)
        orc = linear_oracle_p2(one, fr, mm)
        oracle_errs[name] = abs(got.eigenvalue - orc.lambda1) / orc.lambda1
        ok &= got.converged and oracle_errs[name] <= 5e-3

    g1 = build_grid([(0, 1)], [129])
    m1 = full_mask(g1)
    res3 = minimize_principal(ExponentField.constant(g1, 3.0),
                              ScalarField.constant(g1, 1.0),
                              euclidean_frame(1), m1)
    lam_shoot = p_laplacian_1d_first_eigenvalue(3.0)
    err_p3 = abs(res3.eigenvalue - lam_shoot) / lam_shoot
    ok &= res3.converged and err_p3 <= 0.01
    _verdict(6, ok, f"square {err_square:.2%} in {elapsed:.1f}s; oracle errs "
                    f"{oracle_errs['grushin']:.1e}/{oracle_errs['heisenberg']:.1e}; "
                    f"1D p=3 vs shooting {err_p3:.2%}")


def test_criterion_07_domain_monotonicity():
    grad_tol = 1e-8
    opts = SolverOptions(grad_tol=grad_tol)
    ok = True
    details = []

    g = build_grid([(0, 1), (0, 1)], [41, 41])
    inner = rect_mask(g, [(0.3, 0.7), (0.3, 0.7)])
    middle = rect_mask(g, [(0.15, 0.85), (0.15, 0.85)])
    rep = domain_monotonicity_experiment(
        ExponentField.constant(g, 2.0), ScalarField.constant(g, 1.0),
        euclidean_frame(2), full_mask(g), [inner, middle], opts)
    floor = 10 * grad_tol * (1 + max(rep.lambdas))
    ok &= rep.strictly_decreasing and all(mg > floor for mg in rep.margins)
    details.append("p2 lambdas " + "/".join(f"{v:.2f}" for v in rep.lambdas))

    gg = build_grid([(0, 1), (0, 1)], [33, 33])
    p_var = ExponentField.from_field(
        ScalarField.from_function(gg, lambda x, y: 2 + y ** 2 / 2),
        full_mask(gg))
    inner = rect_mask(gg, [(0.25, 0.75), (0.25, 0.75)])
    middle = rect_mask(gg, [(0.125, 0.875), (0.125, 0.875)])
    rep2 = domain_monotonicity_experiment(
        p_var, ScalarField.constant(gg, 1.0), grushin_frame(),
        full_mask(gg), [inner, middle], opts)
    floor2 = 10 * grad_tol * (1 + max(rep2.lambdas))
    ok &= rep2.strictly_decreasing and all(mg > floor2 for mg in rep2.margins)
    details.append("grushin var-p lambdas "
                   + "/".join(f"{v:.2f}" for v in rep2.lambdas))
    _verdict(7, ok, "; ".join(details))


def test_criterion_08_simplicity():
    g = build_grid([(0, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    rep = simplicity_experiment(ExponentField.constant(g, 2.0),
                                ScalarField.constant(g, 1.0),
                                euclidean_frame(2), m, restarts=5, seed=808,
                                lambda_tol=1e-3, function_tol=1e-3)
    ok = rep.passed and rep.lambda_spread <= 1e-3 \
        and rep.eigenfunction_spread <= 1e-3
    _verdict(8, ok, f"5 restarts: lambda spread {rep.lambda_spread:.1e}, "
                    f"eigenfunction spread {rep.eigenfunction_spread:.1e}")


def test_criterion_09_hardy():
    g = build_grid([(0, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    p2 = ExponentField.constant(g, 2.0)
    one = ScalarField.constant(g, 1.0)
    fr = euclidean_frame(2)
    res = minimize_principal(p2, one, fr, m)
    mu = 0.999 * res.eigenvalue
    rng = np.random.default_rng(900)
    all_hold = True
    for _ in range(100):
        u = ScalarField(g, np.where(m.interior, rng.uniform(0, 1, g.shape), 0.0))
        all_hold &= hardy_verify(u, p2, one, mu, fr, m).holds
    violation = hardy_verify(res.eigenfunction, p2, one,
                             1.05 * res.eigenvalue, fr, m)
    ok = all_hold and not violation.holds
    _verdict(9, ok, f"100 random fields hold at mu=0.999*lambda; "
                    f"violation flagged at mu=1.05*lambda "
                    f"(slack {violation.slack:.2e})")


def test_criterion_10_caccioppoli():
    c_grad, c_weight = caccioppoli_constants(2, 2, 2, 2, 1.0, "sub")
    constants_ok = c_grad == 4.0 and c_weight == 2.0
    for pp in (2.0, 2.5, 3.0):
        cg, cw = caccioppoli_constants(pp, pp, pp, pp, 0.0, "sub")
        constants_ok &= cg == pp ** pp and cw == 0.0
    cg_log, _ = caccioppoli_constants(2.0, 2.0, 0.0, 0.0, 0.0, "sup")
    constants_ok &= cg_log == 4.0

    g = build_grid([(0, 1), (0, 1)], [33, 33])
    m = full_mask(g)
    p2 = ExponentField.constant(g, 2.0)
    one = ScalarField.constant(g, 1.0)
    zero = ScalarField.constant(g, 0.0)
    fr = euclidean_frame(2)
    res = minimize_principal(p2, one, fr, m)
    rng = np.random.default_rng(1000)

    def cutoff():
        a, b = rng.uniform(0.5, 2.0, 2)
        phase = rng.uniform(0, np.pi, 2)
        base = np.sin(np.pi * g.coords[0]) * np.sin(np.pi * g.coords[1])
        mod = 1 + 0.5 * np.sin(a * g.coords[0] + phase[0]) \
            * np.sin(b * g.coords[1] + phase[1])
        return ScalarField(g, np.where(m.interior, base * mod, 0.0))

    pairs = 0
    suite_ok = True
    for scale in (1.0, 2.0):
        v = ScalarField(g, scale * res.eigenfunction.values)
        for _ in range(10):
            rep = caccioppoli_verify(v, cutoff(), p2, p2, res.eigenvalue, one,
                                     fr, m, case="sub")
            suite_ok &= rep.holds
            pairs += 1

    torsion = p2_dirichlet_solve(fr, m, one)
    v_pos = ScalarField(g, np.where(m.included, torsion.values + 0.02, 1.0))
    log_rep = log_caccioppoli_verify(v_pos, cutoff(), p2, fr, m)
    log_ok = log_rep.holds and log_rep.constant_used == 4.0

    ok = constants_ok and pairs >= 20 and suite_ok and log_ok
    _verdict(10, ok, f"constants pinned exactly; {pairs} (v, phi) pairs hold; "
                     f"log form with torsion base holds "
                     f"(slack {log_rep.slack:.3f})")


def test_criterion_11_convergence_orders():
    orders = {}
    for check in ("picone", "quadrature", "eigen"):
        cfg = RunConfig.from_dict({
            "subcommand": "convergence",
            "grid": {"bounds": [[0.0, 1.0], [0.0, 1.0]],
                     "resolution": [17, 17]},
            "params": {"check": check, "levels": 3},
        })
        report, _ = run(cfg)
        orders[check] = report.checks[0].values["order"]
    ok = all(1.8 <= v <= 2.2 for v in orders.values())
    _verdict(11, ok, "fitted orders " + ", ".join(
        f"{k}={v:.3f}" for k, v in orders.items()))


def test_criterion_12_determinism():
    ok = True
    for doc in (
        {"subcommand": "eigen",
         "grid": {"bounds": [[0, 1], [0, 1]], "resolution": [17, 17]},
         "solver": {"seed": 77, "init": "random"}},
        {"subcommand": "picone",
         "grid": {"bounds": [[0, 1], [0, 1]], "resolution": [17, 17]},
         "fields": {"u": {"kind": "random"}},
         "solver": {"seed": 13}},
        {"subcommand": "simplicity",
         "grid": {"bounds": [[0, 1], [0, 1]], "resolution": [17, 17]},
         "solver": {"seed": 5, "restarts": 2}},
    ):
        cfg = RunConfig.from_dict(doc)
        r1, _ = run(cfg)
        r2, _ = run(cfg)
        ok &= r1.payload_bytes() == r2.payload_bytes()
    _verdict(12, ok, "three subcommands rerun bit-identically")
