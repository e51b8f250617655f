"""Command-line orchestration: config ingestion, sweeps, CSV/JSON artifacts.

Every run is deterministic given (config, seed): multi-start sequences are
fixed low-discrepancy sets, floats are serialized via repr (shortest
round-trip), JSON keys are sorted, and no timestamps are emitted.

Exit codes: 0 ok, 2 config/schema violation, 3 hypotheses not applicable,
4 numeric failure (diagnostic JSON on stderr).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import importlib.resources
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import bubbles, ray, threshold
from .constants import ConstantsTable, talenti_constant
from .errors import NotApplicable, NumericError
from .fields import CoefficientField, PowerNonlinearity, PowerTerm
from .params import ProblemParams, classify_existence_case, validate_structure
from .pohozaev import (
    PohozaevReport,
    evaluate_identity,
    nonexistence_threshold,
    nonexistence_verdict,
    small_norm_radius,
)
from .radial_solver import RadialSolution, residual_check, solve_radial_bvp

FORMAT_VERSION = 1
_COMMANDS = (
    "classify",
    "beta-star",
    "bubble-scan",
    "ray-max",
    "solve-radial",
    "pohozaev-check",
    "nonexistence",
    "report",
)


def _schema() -> dict:
    text = importlib.resources.files("doublephase").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ValueError(f"config schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    return cfg


def _params_from_config(cfg: dict) -> ProblemParams:
    P = ProblemParams.from_json_dict(cfg["params"])
    violations = validate_structure(P)
    if violations:
        listing = "; ".join(f"{v.condition} (margin {v.margin:.3e})" for v in violations)
        raise ValueError(f"structurally invalid params: {listing}")
    return P


def _constants(P: ProblemParams, out_dir: Path) -> ConstantsTable:
    return ConstantsTable.compute(
        P.p, P.q, P.N, P.domain_radius, cache_dir=out_dir / "constants_cache"
    )


def _field_from(cfg: dict | None) -> CoefficientField:
    return CoefficientField.from_json_dict(cfg or {"c0": 0.0})


def _nonlinearity_from(section: dict) -> PowerNonlinearity:
    source = _field_from(section.get("f_source"))
    terms = tuple(
        PowerTerm(_field_from(t["coefficient"]), float(t["exponent"]))
        for t in section.get("f_terms", ())
    )
    return PowerNonlinearity(source=source, terms=terms)


# --- subcommand bodies ------------------------------------------------------


def _run_classify(cfg, P, out_dir, opts):
    tag = classify_existence_case(P)
    payload = {"format_version": FORMAT_VERSION, "seed": opts["seed"], **tag.to_json_dict()}
    _write_json(out_dir / "classify.json", payload)
    print(f"classify: {tag.theorem.value}")
    return 0


def _beta_cell(args):
    params_dict, constants_dict, mu, b_inf, tol = args
    P = ProblemParams.from_json_dict(params_dict)
    P = dataclasses.replace(P, mu=mu, b_inf=b_inf)
    C = ConstantsTable.from_json_dict(constants_dict)
    opts = threshold.OptimizerOptions(
        scan_points=int(tol.get("beta_scan_points", 2048)),
        agree_tol=tol.get("beta_agree_tol", 1e-5),
    )
    rep = threshold.compute_beta_star(P, C, opts)
    return (
        mu,
        b_inf,
        rep.beta_star,
        rep.argmin.X,
        rep.argmin.Y,
        rep.argmin.Z,
        rep.argmin.W,
        rep.bounds["bound_15"] if rep.bounds["bound_15"] is not None else math.nan,
        rep.bounds["bound_16"] if rep.bounds["bound_16"] is not None else math.nan,
        rep.method,
    )


def _run_beta_star(cfg, P, out_dir, opts):
    section = cfg.get("beta_star", {})
    mu_grid = section.get("mu_grid", [P.mu])
    b_grid = section.get("b_inf_grid", [P.b_inf])
    C = _constants(P, out_dir)
    cells = [
        (P.to_json_dict(), C.to_json_dict(), float(mu), float(b), opts["tolerances"])
        for mu in mu_grid
        for b in b_grid
    ]
    if opts["workers"] > 1:
        with ProcessPoolExecutor(max_workers=opts["workers"]) as pool:
            rows = list(pool.map(_beta_cell, cells))
    else:
        rows = [_beta_cell(c) for c in cells]
    header = ["mu", "b_inf", "beta_star", "X", "Y", "Z", "W", "bound_15", "bound_16", "method"]
    _write_csv(out_dir / "beta_star.csv", header, rows)
    if section.get("plot_data", False):
        lines = ["# b_inf beta_star (per mu block)"]
        for mu in mu_grid:
            lines.append(f'# mu = {_fmt(float(mu))}')
            for row in rows:
                if row[0] == mu:
                    lines.append(f"{_fmt(row[1])} {_fmt(row[2])}")
            lines.append("")
        (out_dir / "beta_star_vs_b_inf.dat").write_text("\n".join(lines) + "\n")
        (out_dir / "beta_star.gp").write_text(
            'set logscale x\nset xlabel "b_inf"\nset ylabel "beta_star"\n'
            'plot "beta_star_vs_b_inf.dat" using 1:2 with linespoints\n'
        )
    print(f"beta-star: {len(rows)} cells -> {out_dir / 'beta_star.csv'}")
    return 0


def _run_bubble_scan(cfg, P, out_dir, opts):
    section = cfg.get("bubble_scan", {})
    kind = section.get("kind", "p")
    eps_list = sorted((float(e) for e in section.get("epsilons", np.logspace(-3, -1, 8))), reverse=True)
    rho = float(section.get("rho", 1.0))
    delta_rule = section.get("delta_rule", "one")
    norm_specs = section.get("norms")
    if norm_specs is None:
        m = P.p if kind == "p" else P.q
        norm_specs = [["grad_m", "grad", m], ["mass_r", "power", P.r if kind == "p" else P.s]]
    requests = {name: (what, float(gamma)) for name, what, gamma in norm_specs}

    if kind == "q" and delta_rule == "auto":
        k_lo, k_hi, nonempty = bubbles.kappa_window(P)
        if not nonempty:
            raise NotApplicable("empty kappa window for delta = eps^kappa")
        kappa = 0.5 * (max(0.0, k_lo) + min(1.0, k_hi))
    elif kind == "q" and isinstance(delta_rule, (int, float)):
        kappa = float(delta_rule)
    else:
        kappa = 0.0

    C = _constants(P, out_dir)
    values = {name: [] for name in requests}
    deltas = []
    for e in eps_list:
        delta = e**kappa if (kind == "q" and kappa > 0.0) else 1.0
        deltas.append(delta)
        b = bubbles.make_bubble(kind, e, delta, rho, P)
        norms = bubbles.bubble_norms(b, requests)
        for name in requests:
            values[name].append(norms[name])

    m = P.p if kind == "p" else P.q
    s_m = C.S_p if kind == "p" else C.S_q
    rows = []
    plots = {}
    for name, (what, gamma) in requests.items():
        vals = np.asarray(values[name])
        if what == "grad" and abs(gamma - m) < 1e-12:
            # rate applies to the deficit against the best constant
            series = vals - s_m
            theo = (1.0 - kappa) * bubbles.gradient_deficit_exponent(P.N, m)
        elif what == "grad":
            e_exp, d_exp, _ = bubbles.cross_gradient_rate(P.N, gamma, P.q)
            theo = e_exp + kappa * d_exp
            series = vals
        else:
            e_exp, d_exp, _ = bubbles.mass_rate(P.N, m, gamma)
            theo = e_exp + kappa * d_exp
            series = vals
        fitted = math.nan
        if np.all(series > 0.0) and len(eps_list) >= 4:
            fitted = bubbles.fit_rate(list(zip(eps_list, series)), theoretical_slope=theo).fitted_slope
        for e, d, v in zip(eps_list, deltas, vals):
            rows.append((e, d, name, v, theo, fitted))
        plots[name] = list(zip(eps_list, series))
    header = ["epsilon", "delta", "norm_name", "value", "theoretical_rate", "fitted_rate"]
    _write_csv(out_dir / "bubble_scan.csv", header, rows)
    for name, series in plots.items():
        lines = [f"# epsilon {name}"] + [f"{_fmt(e)} {_fmt(float(v))}" for e, v in series]
        (out_dir / f"bubble_scan_{name}.dat").write_text("\n".join(lines) + "\n")
    (out_dir / "bubble_scan.gp").write_text(
        "set logscale xy\nset xlabel \"epsilon\"\n"
        + "plot "
        + ", ".join(f'"bubble_scan_{name}.dat" using 1:2 with linespoints' for name in plots)
        + "\n"
    )
    print(f"bubble-scan: {len(rows)} rows -> {out_dir / 'bubble_scan.csv'}")
    return 0


def _run_ray_max(cfg, P, out_dir, opts):
    section = cfg.get("ray_max", {})
    which = section.get("which", "lemma3")
    eps_list = [float(e) for e in section.get("epsilons", [0.02, 0.05, 0.1, 0.2])]
    rho = section.get("rho")
    C = _constants(P, out_dir)
    results = ray.verify_below_threshold(P, C, eps_list, which, rho=rho)
    rows = [
        (res.epsilon, res.t_max, res.phi_max, res.threshold, res.margin) for res in results
    ]
    _write_csv(out_dir / "ray_max.csv", ["epsilon", "t_max", "phi_max", "threshold", "margin"], rows)
    best = min((res.epsilon for res in results if res.below_threshold), default=None)
    summary = "no strict margin on this grid" if best is None else f"strict below threshold from eps={best}"
    print(f"ray-max ({which}): {summary}")
    return 0


def _run_solve_radial(cfg, P, out_dir, opts):
    section = cfg.get("solve_radial", {})
    a_field = _field_from(section.get("a_field"))
    f_spec = _nonlinearity_from(section)
    sol = solve_radial_bvp(
        P,
        a_field,
        f_spec,
        grid_size=int(section.get("grid_size", 1024)),
        adaptive=bool(section.get("adaptive", True)),
    )
    sol.write_csv(out_dir / "solution.csv")
    lines = ["# r u"] + [f"{_fmt(float(r))} {_fmt(float(u))}" for r, u in zip(sol.grid, sol.u)]
    (out_dir / "solution.dat").write_text("\n".join(lines) + "\n")
    (out_dir / "solution.gp").write_text(
        'set xlabel "r"\nset ylabel "u"\nplot "solution.dat" using 1:2 with lines\n'
    )
    _write_json(
        out_dir / "solve_summary.json",
        {
            "format_version": FORMAT_VERSION,
            "shooting_value": sol.shooting_value,
            "residual": sol.residual,
            "grid_size": len(sol.grid) - 1,
            "seed": opts["seed"],
        },
    )
    print(f"solve-radial: u(0)={sol.shooting_value!r}, residual={sol.residual:.3e}")
    return 0


def _run_pohozaev_check(cfg, P, out_dir, opts):
    section = cfg["pohozaev_check"]
    r, u, du, flux = RadialSolution.columns_from_csv(Path(section["solution_csv"]).read_text())
    a_field = _field_from(section.get("a_field"))
    f_spec = _nonlinearity_from(section)
    sol = RadialSolution(
        grid=r,
        u=u,
        du=du,
        flux=flux,
        shooting_value=float(u[0]),
        residual=math.nan,
        params=P,
        a_field=a_field,
        nonlinearity=f_spec,
    )
    gate = opts["tolerances"].get("residual_gate", section.get("residual_gate", 1e-5))
    report = evaluate_identity(sol, P, a_field, f_spec, residual_gate=gate)
    _write_json(out_dir / "pohozaev.json", {"seed": opts["seed"], **report.to_json_dict()})
    print(f"pohozaev-check: residual_rel={report.residual_rel:.3e}")
    return 0


def _run_nonexistence(cfg, P, out_dir, opts):
    section = cfg.get("nonexistence", {})
    C = _constants(P, out_dir)
    verdict = nonexistence_verdict(
        P,
        C,
        strictly_starshaped=bool(section.get("strictly_starshaped", False)),
        c_nonpositive=bool(section.get("c_nonpositive", False)),
    )
    payload = {"seed": opts["seed"], **verdict.to_json_dict()}
    if section.get("small_norm", False):
        cert = small_norm_radius(
            P,
            C,
            gamma=float(section.get("gamma", 2.0 * P.q_star)),
            embedding_constants=section.get("embedding_constants"),
        )
        payload["small_norm"] = cert.to_json_dict()
    _write_json(out_dir / "nonexistence.json", payload)
    print(f"nonexistence: applicable={verdict.applicable} case={verdict.case.value}")
    return 0 if verdict.applicable else 3


def _run_report(cfg, P, out_dir, opts):
    C = _constants(P, out_dir)
    rows = []

    def add(check, value, reference, tol):
        rel = abs(value - reference) / max(abs(reference), 1e-300)
        rows.append((check, value, reference, rel, "pass" if rel <= tol else "FAIL"))

    add("S_p quadrature vs closed form", C.S_p, talenti_constant(P.p, P.N), 1e-8)
    add("S_q quadrature vs closed form", C.S_q, talenti_constant(P.q, P.N), 1e-8)
    if P.mu > 0.0:
        rep = threshold.compute_beta_star(
            dataclasses.replace(P, b_inf=0.0), C, threshold.OptimizerOptions()
        )
        add(
            "beta_star(mu, 0) vs single-phase reduction",
            rep.beta_star,
            threshold.beta_lower_bound_mu(P.mu, C, P),
            1e-5,
        )
    if P.b_inf > 0.0 and P.a0 > 0.0:
        rep = threshold.compute_beta_star(
            dataclasses.replace(P, mu=0.0), C, threshold.OptimizerOptions()
        )
        add(
            "beta_star(0, b_inf) vs single-phase reduction",
            rep.beta_star,
            threshold.beta_lower_bound_b(P.b_inf, P.a0, C, P),
            1e-5,
        )
    thr = nonexistence_threshold(P, C)
    rows.append(("nonexistence smallness threshold", thr, thr, 0.0, "info"))
    try:
        k_lo, k_hi, nonempty = bubbles.kappa_window(P)
        rows.append(("kappa window low", k_lo, k_lo, 0.0, "info"))
        rows.append(("kappa window high", k_hi, k_hi, 0.0, "info"))
        rows.append(("kappa window nonempty", float(nonempty), float(nonempty), 0.0, "info"))
    except Exception:
        pass
    _write_csv(out_dir / "report.csv", ["check", "value", "reference", "rel_error", "status"], rows)
    _write_json(
        out_dir / "report.json",
        {
            "format_version": FORMAT_VERSION,
            "seed": opts["seed"],
            "checks": [
                {"check": c, "value": v, "reference": ref, "rel_error": rel, "status": st}
                for c, v, ref, rel, st in rows
            ],
        },
    )
    failures = [r for r in rows if r[4] == "FAIL"]
    print(f"report: {len(rows)} checks, {len(failures)} failures")
    return 0 if not failures else 4


_RUNNERS = {
    "classify": _run_classify,
    "beta-star": _run_beta_star,
    "bubble-scan": _run_bubble_scan,
    "ray-max": _run_ray_max,
    "solve-radial": _run_solve_radial,
    "pohozaev-check": _run_pohozaev_check,
    "nonexistence": _run_nonexistence,
    "report": _run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublephase",
        description="Numerical laboratory for critical double phase problems on balls",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="run configuration JSON")
        sp.add_argument("--out", default=None, help="output directory (default: config output_dir or .)")
        sp.add_argument("--seed", type=int, default=None, help="seed recorded in artifacts")
        sp.add_argument("--workers", type=int, default=1, help="worker pool size for sweeps")
        sp.add_argument(
            "--tol",
            action="append",
            default=[],
            metavar="NAME=VALUE",
            help="tolerance override (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        P = _params_from_config(cfg)
        tolerances = dict(cfg.get("tolerances", {}))
        for item in args.tol:
            name, _, value = item.partition("=")
            if not value:
                raise ValueError(f"malformed --tol override {item!r}")
            tolerances[name] = float(value)
        out_dir = Path(args.out or cfg.get("output_dir", "."))
        out_dir.mkdir(parents=True, exist_ok=True)
        opts = {
            "seed": args.seed if args.seed is not None else int(cfg.get("seed", 0)),
            "workers": max(1, args.workers),
            "tolerances": tolerances,
        }
        return _RUNNERS[args.command](cfg, P, out_dir, opts)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        diagnostic = {"error": str(exc), "info": {k: repr(v) for k, v in exc.info.items()}}
        print(json.dumps(diagnostic, sort_keys=True), file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
