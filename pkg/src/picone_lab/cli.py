"""Command-line front end: config resolution, experiment orchestration,
report emission, optional figure rendering, deterministic reproduction.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 invalid
input or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (RunConfig, SUBCOMMANDS, load_config_file, make_exponent,
                     make_frame, make_grid, make_mask, make_nonlinearity,
                     make_scalar_field, set_by_path)
from .errors import InvalidInputError, NumericError
from .eigen import (LAMBDA_SMALL_FLAG, SolverOptions,
                    domain_monotonicity_experiment, linear_oracle_p2,
                    minimize_principal, p2_dirichlet_solve, rayleigh_quotient,
                    simplicity_experiment)
from .fieldio import write_field
from .frames import ExponentField, orthogonality_defect
from .grid import ScalarField, full_mask, integrate
from .inequalities import (caccioppoli_verify, hardy_verify,
                           log_caccioppoli_verify)
from .lebesgue import luxemburg_norm, modular, norm_modular_relations
from .picone import canonical_nonlinearity, equality_case_detect, picone_evaluate
from .report import CheckRecord, Report

ALGEBRAIC_TOL = 1e-12
NONNEG_TOL = 1e-10
DEFECT_TOL = 1e-12


def _rng(cfg: RunConfig) -> np.random.Generator:
    return np.random.default_rng(int(cfg.solver.get("seed", 0)))


def _base_objects(cfg: RunConfig):
    grid = make_grid(cfg.grid)
    mask = make_mask(cfg.mask, grid)
    frame = make_frame(cfg.frame, grid)
    return grid, mask, frame


def _solver_options(cfg: RunConfig, init=None, seed=None) -> SolverOptions:
    s = cfg.solver
    return SolverOptions(
        init=s.get("init", "bump") if init is None else init,
        max_iter=int(s.get("max_iter", 20000)),
        grad_tol=float(s.get("grad_tol", 1e-8)),
        seed=int(s.get("seed", 0) if seed is None else seed))


def _field_spec(cfg: RunConfig, name: str, default: dict) -> dict:
    return cfg.fields.get(name, default)


# ------------------------------------------------------------- subcommands


def run_norm(cfg: RunConfig):
    grid, mask, _ = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    u = make_scalar_field(_field_spec(cfg, "u", {"kind": "random", "high": 2.0}),
                          grid, mask, rng)
    rep = norm_modular_relations(u, p, mask)
    checks = [CheckRecord(f"norm-modular/{key}", ok,
                          values={"norm": rep.norm, "modular": rep.modular})
              for key, ok in rep.relation_flags.items()]
    if rep.norm > 0:
        scaled = ScalarField(grid, u.values / rep.norm)
        unit = modular(scaled, p, mask)
        checks.append(CheckRecord("luxemburg-normalization",
                                  abs(unit - 1.0) <= 1e-9,
                                  residual=abs(unit - 1.0)))
    return checks, {"fields": {"input_field": u}}


def run_picone(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    u = make_scalar_field(_field_spec(cfg, "u", {"kind": "bump"}), grid, mask, rng)
    v = make_scalar_field(_field_spec(cfg, "v", {"kind": "constant", "value": 2.0}),
                          grid, mask, rng)
    f = make_nonlinearity(cfg.nonlinearity)
    bd = picone_evaluate(u, v, p, f, frame, mask, mode=cfg.mode)

    tol = ALGEBRAIC_TOL if cfg.mode == "algebraic" else \
        float(cfg.params.get("residual_tol", 1e-2))
    checks = [CheckRecord("identity-residual", bd.identity_residual <= tol,
                          residual=bd.identity_residual, values={"tol": tol})]
    scale = 1.0 + float(np.abs(bd.lhs.values).max())
    decomp = float(np.abs(bd.lhs.values - bd.parts_sum()).max()) / scale
    checks.append(CheckRecord("four-part-decomposition", decomp <= ALGEBRAIC_TOL,
                              residual=decomp))
    defect = orthogonality_defect(frame, v, p, mask)
    if defect <= DEFECT_TOL:
        checks.append(CheckRecord("nonnegativity", bd.min_lhs >= -NONNEG_TOL,
                                  values={"min_lhs": bd.min_lhs,
                                          "orthogonality_defect": defect}))
    else:
        checks.append(CheckRecord("orthogonality-defect", True,
                                  values={"orthogonality_defect": defect,
                                          "note": "hypothesis not satisfied; "
                                                  "nonnegativity not asserted"}))
    eq = equality_case_detect(bd, u, v)
    checks.append(CheckRecord(
        "equality-characterization", eq.consistent,
        values={"equality_locus_fraction": eq.equality_locus_fraction,
                "max_ratio_gradient": eq.max_ratio_gradient}))
    residual_field = ScalarField(grid, np.abs(bd.lhs.values - bd.rhs.values))
    return checks, {"fields": {"identity_lhs": bd.lhs,
                               "identity_residual": residual_field}}


def run_eigen(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    g = make_scalar_field(cfg.weight, grid, mask, rng)
    res = minimize_principal(p, g, frame, mask, _solver_options(cfg))
    checks = [
        CheckRecord("solver-converged", res.converged, residual=res.residual,
                    values={"iterations": res.iterations,
                            "lambda": res.eigenvalue,
                            "message": res.message}),
        CheckRecord("lambda-scale", True,
                    values={"lambda": res.eigenvalue,
                            "possibly_zero_infimum": res.possibly_zero_infimum}),
    ]
    recomputed = rayleigh_quotient(res.eigenfunction, p, g, frame, mask)
    checks.append(CheckRecord(
        "eigenvalue-equals-quotient",
        abs(res.eigenvalue - recomputed) <= 1e-12 * abs(recomputed),
        residual=abs(res.eigenvalue - recomputed)))
    target = cfg.params.get("target")
    if target is not None:
        rel = float(cfg.params.get("target_rel", 0.01))
        err = abs(res.eigenvalue - float(target)) / abs(float(target))
        checks.append(CheckRecord("analytic-target", err <= rel,
                                  lhs=res.eigenvalue, rhs=float(target),
                                  residual=err, values={"rel_tol": rel}))
    if cfg.params.get("compare_oracle"):
        if p.pminus != 2.0 or p.pplus != 2.0:
            raise InvalidInputError("oracle comparison requires exponent 2")
        oracle = linear_oracle_p2(g, frame, mask)
        err = abs(res.eigenvalue - oracle.lambda1) / oracle.lambda1
        checks.append(CheckRecord("p2-oracle", err <= 5e-3,
                                  lhs=res.eigenvalue, rhs=oracle.lambda1,
                                  residual=err))
    artifacts = {"fields": {"eigenfunction": res.eigenfunction},
                 "quotient_history": list(res.quotient_history),
                 "eigen_result": res}
    return checks, artifacts


def run_monotonicity(cfg: RunConfig):
    grid, outer, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, outer, rng)
    g = make_scalar_field(cfg.weight, grid, outer, rng)
    if not cfg.masks:
        raise InvalidInputError("monotonicity needs a masks chain (smallest first)")
    inners = [make_mask(spec, grid) for spec in cfg.masks]
    rep = domain_monotonicity_experiment(p, g, frame, outer, inners,
                                         _solver_options(cfg))
    checks = []
    for i, margin in enumerate(rep.margins):
        checks.append(CheckRecord(
            f"strict-decrease-{i}", margin > 0,
            lhs=rep.lambdas[i + 1], rhs=rep.lambdas[i],
            values={"margin": margin}))
    return checks, {"lambdas": list(rep.lambdas)}


def run_simplicity(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    g = make_scalar_field(cfg.weight, grid, mask, rng)
    rep = simplicity_experiment(
        p, g, frame, mask, restarts=int(cfg.solver.get("restarts", 5)),
        seed=int(cfg.solver.get("seed", 0)), opts=_solver_options(cfg),
        lambda_tol=float(cfg.params.get("lambda_tol", 1e-3)),
        function_tol=float(cfg.params.get("function_tol", 1e-3)))
    checks = [
        CheckRecord("lambda-agreement", rep.lambda_pass,
                    residual=rep.lambda_spread,
                    values={"lambdas": list(rep.lambdas)}),
        CheckRecord("eigenfunction-agreement", rep.eigenfunction_pass,
                    residual=rep.eigenfunction_spread),
    ]
    return checks, {"fields": {"eigenfunction": rep.results[0].eigenfunction}}


def _resolve_lambda(cfg, p, g, frame, mask):
    lam = cfg.params.get("lam", "eigen")
    if lam == "eigen":
        res = minimize_principal(p, g, frame, mask, _solver_options(cfg))
        if not res.converged:
            raise NumericError("eigensolver did not converge while "
                               "resolving lambda")
        return res.eigenvalue, res
    return float(lam), None


def run_hardy(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    a = make_scalar_field(cfg.weight, grid, mask, rng)
    mu = cfg.params.get("mu")
    eigen_res = None
    if mu is None:
        lam, eigen_res = _resolve_lambda(cfg, p, a, frame, mask)
        mu = float(cfg.params.get("mu_factor", 0.999)) * lam
    mu = float(mu)

    trials = []
    if "u" in cfg.fields:
        trials.append(("given", make_scalar_field(cfg.fields["u"], grid, mask, rng)))
    elif eigen_res is not None:
        trials.append(("eigenfunction", eigen_res.eigenfunction))
    for k in range(int(cfg.params.get("random_trials", 0))):
        trials.append((f"random-{k}",
                       make_scalar_field({"kind": "random"}, grid, mask, rng)))
    if not trials:
        raise InvalidInputError("hardy needs a u field or random_trials > 0")

    abs_tol = None
    if cfg.strict:
        abs_tol = _strict_allowance_hardy(cfg, mu)
    checks = []
    for label, u in trials:
        rep = hardy_verify(u, p, a, mu, frame, mask, abs_tol=abs_tol)
        checks.append(CheckRecord(
            f"hardy/{label}", rep.holds, lhs=rep.lhs, rhs=rep.rhs,
            values={**rep.values, "abs_tol": rep.abs_tol}))
    artifacts = {}
    if eigen_res is not None:
        artifacts["fields"] = {"eigenfunction": eigen_res.eigenfunction}
    return checks, artifacts


def _refined(cfg: RunConfig) -> RunConfig:
    doc = cfg.to_dict()
    doc["grid"] = dict(doc["grid"])
    doc["grid"]["resolution"] = [2 * n - 1 for n in doc["grid"]["resolution"]]
    doc["strict"] = False
    return RunConfig.from_dict(doc)


def _strict_allowance_hardy(cfg: RunConfig, mu: float) -> float:
    """Discretization allowance from a refinement pair: how much the two
    sides move when every axis is refined once."""
    sides = []
    for c in (cfg, _refined(cfg)):
        grid, mask, frame = _base_objects(c)
        rng = _rng(c)
        p = make_exponent(c.exponent, grid, mask, rng)
        a = make_scalar_field(c.weight, grid, mask, rng)
        u = make_scalar_field(_field_spec(c, "u", {"kind": "bump"}), grid, mask, rng)
        rep = hardy_verify(u, p, a, mu, frame, mask)
        sides.append((rep.lhs, rep.rhs))
    (l0, r0), (l1, r1) = sides
    return 1e-9 * (1 + abs(r0)) + abs(l0 - l1) + abs(r0 - r1)


def _base_solution(cfg, kind_spec, grid, mask, frame, p, g, rng):
    kind = kind_spec.get("kind")
    if kind == "eigenfunction":
        res = minimize_principal(p, g, frame, mask, _solver_options(cfg))
        if not res.converged:
            raise NumericError("eigensolver did not converge for the base field")
        shift = float(kind_spec.get("shift", 0.0))
        vals = np.where(mask.included, res.eigenfunction.values + shift, 1.0)
        return ScalarField(grid, vals)
    if kind == "harmonic":
        boundary = make_scalar_field(
            kind_spec.get("boundary", {"kind": "constant", "value": 1.0}),
            grid, mask, rng)
        return p2_dirichlet_solve(frame, mask, ScalarField.constant(grid, 0.0),
                                  boundary)
    if kind == "torsion":
        v = p2_dirichlet_solve(frame, mask, ScalarField.constant(grid, 1.0))
        shift = float(kind_spec.get("shift", 0.0))
        return ScalarField(grid, np.where(mask.included, v.values + shift, 1.0))
    return make_scalar_field(kind_spec, grid, mask, rng)


def run_caccioppoli(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    g = make_scalar_field(cfg.weight, grid, mask, rng)
    case = cfg.params.get("case", "sub")
    q_spec = cfg.params.get("q", cfg.exponent)
    q = make_scalar_field(q_spec, grid, mask, rng)
    lam, eigen_res = _resolve_lambda(cfg, p, g, frame, mask)
    v_spec = _field_spec(cfg, "v", {"kind": "eigenfunction"})
    v = (_base_solution(cfg, v_spec, grid, mask, frame, p, g, rng)
         if v_spec.get("kind") in ("eigenfunction", "harmonic", "torsion")
         else make_scalar_field(v_spec, grid, mask, rng))
    if v_spec.get("kind") == "eigenfunction" and eigen_res is not None:
        v = eigen_res.eigenfunction
    phi = make_scalar_field(_field_spec(cfg, "phi", {"kind": "bump"}),
                            grid, mask, rng)
    rep = caccioppoli_verify(v, phi, p, q, lam, g, frame, mask, case=case)
    check = CheckRecord(
        f"caccioppoli-{case}", rep.holds, lhs=rep.lhs, rhs=rep.rhs,
        values={**rep.values, "constant": rep.constant_used,
                "notes": list(rep.notes)})
    return [check], {"fields": {"base_solution": v}}


def run_logcaccioppoli(cfg: RunConfig):
    grid, mask, frame = _base_objects(cfg)
    rng = _rng(cfg)
    p = make_exponent(cfg.exponent, grid, mask, rng)
    lam = float(cfg.params.get("lam", 0.0))
    g = (make_scalar_field(cfg.weight, grid, mask, rng) if lam != 0.0 else None)
    v_spec = _field_spec(cfg, "v", {"kind": "torsion", "shift": 0.02})
    gg = g if g is not None else ScalarField.constant(grid, 1.0)
    v = _base_solution(cfg, v_spec, grid, mask, frame, p, gg, rng)
    phi = make_scalar_field(_field_spec(cfg, "phi", {"kind": "bump"}),
                            grid, mask, rng)
    rep = log_caccioppoli_verify(v, phi, p, frame, mask, lam=lam, g=g)
    check = CheckRecord(
        "log-caccioppoli", rep.holds, lhs=rep.lhs, rhs=rep.rhs,
        values={**rep.values, "constant": rep.constant_used})
    return [check], {"fields": {"base_solution": v}}


def run_convergence(cfg: RunConfig):
    check_name = cfg.params.get("check", "quadrature")
    levels = int(cfg.params.get("levels", 3))
    if levels < 2:
        raise InvalidInputError("convergence needs at least 2 levels")
    base = [int(n) for n in cfg.grid["resolution"]]
    resolutions = [[(n - 1) * 2 ** k + 1 for n in base] for k in range(levels)]
    errors = []
    spacings = []
    for res_n in resolutions:
        err, h = _convergence_error(cfg, check_name, res_n)
        errors.append(err)
        spacings.append(h)
    order = float(np.polyfit(np.log(spacings), np.log(errors), 1)[0])
    record = CheckRecord(
        f"convergence-order/{check_name}", 1.8 <= order <= 2.2,
        residual=order,
        values={"errors": [float(e) for e in errors],
                "resolutions": [r[0] for r in resolutions],
                "order": order})
    artifacts = {"convergence": {"spacings": spacings, "errors": errors,
                                 "order": order}}
    return [record], artifacts


def _convergence_error(cfg: RunConfig, check_name: str, res_n):
    if check_name == "quadrature":
        grid = make_grid({"bounds": cfg.grid["bounds"], "resolution": res_n})
        mask = full_mask(grid)
        f = ScalarField(grid, grid.coords[0] ** 2)
        (a, b) = grid.bounds[0]
        exact = (b ** 3 - a ** 3) / 3.0
        for (lo, hi) in grid.bounds[1:]:
            exact *= hi - lo
        return abs(integrate(f, mask) - exact), max(grid.spacing)
    if check_name == "picone":
        grid = make_grid({"bounds": cfg.grid["bounds"], "resolution": res_n})
        mask = full_mask(grid)
        from .frames import euclidean_frame
        frame = euclidean_frame(grid.dim)
        u = ScalarField.from_function(
            grid, lambda *cs: 1 + 0.3 * np.sin(np.pi * cs[0]) * np.exp(cs[-1] / 2))
        v = ScalarField.from_function(grid, lambda *cs: 2 + 0.5 * np.cos(sum(cs)))
        p = ExponentField.constant(grid, 2.3)
        bd = picone_evaluate(u, v, p, canonical_nonlinearity(), frame, mask,
                             mode="discrete")
        return bd.identity_residual, max(grid.spacing)
    if check_name == "eigen":
        grid = make_grid({"bounds": [[0.0, 1.0], [0.0, 1.0]],
                          "resolution": res_n[:2] if len(res_n) >= 2
                          else res_n * 2})
        mask = full_mask(grid)
        from .frames import euclidean_frame
        res = minimize_principal(
            ExponentField.constant(grid, 2.0), ScalarField.constant(grid, 1.0),
            euclidean_frame(2), mask, _solver_options(cfg))
        return abs(res.eigenvalue - 2 * np.pi ** 2), max(grid.spacing)
    raise InvalidInputError(f"unknown convergence check {check_name!r}")


RUNNERS = {
    "norm": run_norm,
    "picone": run_picone,
    "eigen": run_eigen,
    "monotonicity": run_monotonicity,
    "simplicity": run_simplicity,
    "hardy": run_hardy,
    "caccioppoli": run_caccioppoli,
    "logcaccioppoli": run_logcaccioppoli,
    "convergence": run_convergence,
}


def run(cfg: RunConfig) -> tuple[Report, dict]:
    """Dispatch one configured run and collect its report and artifacts."""
    start = time.perf_counter()
    checks, artifacts = RUNNERS[cfg.subcommand](cfg)
    report = Report(config=cfg.to_dict(), checks=checks, version=__version__,
                    wall_time_s=time.perf_counter() - start)
    return report, artifacts


def convergence_suite(cfg: RunConfig) -> tuple[Report, dict]:
    """Refinement study entry point (the `convergence` subcommand)."""
    cfg2 = RunConfig.from_dict({**cfg.to_dict(), "subcommand": "convergence"})
    return run(cfg2)


# ------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="picone-lab",
                     description="variable-exponent identity and eigenvalue lab")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, add_help=True)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="report output path (JSON)")
        p.add_argument("--seed", type=int, help="solver / field RNG seed")
        p.add_argument("--frame", help="frame name (euclidean1/2/3, grushin, "
                                       "heisenberg)")
        p.add_argument("--mode", choices=["algebraic", "discrete"])
        p.add_argument("--strict", action="store_true",
                       help="add a refinement-pair discretization allowance")
        p.add_argument("--resolution", type=int,
                       help="nodes per axis (overrides config)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                       help="override a dotted config key with a JSON value")
        p.add_argument("--dump-config", action="store_true",
                       help="print the fully resolved config and exit")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering next to --out")
    return parser


def resolve_config(args) -> RunConfig:
    doc = {"subcommand": args.subcommand}
    if args.config:
        loaded = load_config_file(args.config)
        loaded.pop("subcommand", None)
        doc.update(loaded)
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise InvalidInputError(f"--set needs KEY=VALUE, got {item!r}")
        set_by_path(doc, key, val)
    cfg = RunConfig.from_dict(doc)
    if args.seed is not None:
        cfg.solver["seed"] = int(args.seed)
    if args.frame:
        cfg.frame = args.frame
    if args.mode:
        cfg.mode = args.mode
    if args.strict:
        cfg.strict = True
    if args.out:
        cfg.out = args.out
    if args.no_figures:
        cfg.figures = False
    if args.resolution:
        cfg.grid["resolution"] = [int(args.resolution)] * len(cfg.grid["bounds"])
    return cfg


def _write_outputs(cfg: RunConfig, report: Report, artifacts: dict) -> None:
    if not cfg.out:
        return
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    eigen_res = artifacts.get("eigen_result")
    if eigen_res is not None:
        csv_path = f"{stem}_eigenfunction.csv"
        write_field(csv_path, eigen_res.eigenfunction)
        report.outputs["eigenfunction_csv"] = csv_path
    if cfg.figures:
        from .figures import render_figures
        report.outputs["figures"] = render_figures(report, artifacts, out)
    out.write_text(report.to_json() + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
            return 0
        report, artifacts = run(cfg)
        _write_outputs(cfg, report, artifacts)
        print(report.table())
        return 0 if report.all_passed else 1
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
