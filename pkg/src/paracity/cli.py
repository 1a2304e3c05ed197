"""Command-line driver: single solves, (alpha, gamma) grid sweeps, bound
reports, gap tables and the symmetric approximation algorithm.

Sweeps emit one CSV row per grid point in a fixed order (alpha outer,
gamma inner, both ascending) so that two runs over the same grid are
byte-identical except for the timing columns.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .bounds import gap_bounds, lambda_value, shortest_path_oracle_for, umcfp_optimum
from .city import CityParams, ValidationError, build_city, read_config_mapping
from .lines import LpaStatus, lpa
from .model import build_alpp, build_alpp_sym
from .solver import SolveStatus, solve_milp
from .symmetry import Classification, symmetry_gap

CSV_HEADER = [
    "alpha",
    "beta",
    "gamma",
    "opt_alpp",
    "opt_alpps",
    "gamma_abs",
    "gamma_rel",
    "classification",
    "bound_cn_ag",
    "ms_alpp",
    "ms_alpps",
]

#: When the two optima differ by less than this relative amount at the
#: working gap tolerance, both models are re-solved to (numerically)
#: proven optimality before classifying.
RESOLVE_THRESHOLD = 2e-4
EXACT_GAP_TOL = 1e-9


def fielbaum_mu(c0: float = 10.65, pv: float = 1.48) -> float:
    """Objective weight matching the operator/user cost rates of the
    value-of-resources-consumed comparison: mu = c0/(c0+pv)."""
    if c0 <= 0 or pv <= 0:
        raise ValidationError(f"cost rates must be > 0, got c0={c0}, pv={pv}")
    return c0 / (c0 + pv)


def _fmt(value: float) -> str:
    return f"{value:.10g}"


@dataclass
class SweepRow:
    alpha: float
    beta: float
    gamma: float
    opt_alpp: float = float("nan")
    opt_alpps: float = float("nan")
    gamma_abs: float = float("nan")
    gamma_rel: float = float("nan")
    classification: str = ""
    bound_cn_ag: float = float("nan")
    ms_alpp: float = 0.0
    ms_alpps: float = 0.0

    def as_csv(self) -> list[str]:
        return [
            _fmt(self.alpha),
            _fmt(self.beta),
            _fmt(self.gamma),
            _fmt(self.opt_alpp),
            _fmt(self.opt_alpps),
            _fmt(self.gamma_abs),
            _fmt(self.gamma_rel),
            self.classification,
            _fmt(self.bound_cn_ag),
            f"{self.ms_alpp:.3f}",
            f"{self.ms_alpps:.3f}",
        ]


def solve_instance_pair(params: CityParams, gap_tol: float = 1e-4):
    """Solve the general and the symmetric model on one instance, with
    the near-tie re-solve rule applied before classification."""
    city = build_city(params)
    sol_s = solve_milp(build_alpp_sym(city), gap_tol=gap_tol)
    sol_a = solve_milp(build_alpp(city), gap_tol=gap_tol)
    if (
        sol_a.status is SolveStatus.OPTIMAL
        and sol_s.status is SolveStatus.OPTIMAL
        and abs(sol_s.objective - sol_a.objective)
        < RESOLVE_THRESHOLD * max(abs(sol_a.objective), 1e-12)
        and gap_tol > EXACT_GAP_TOL
    ):
        sol_s = solve_milp(build_alpp_sym(city), gap_tol=EXACT_GAP_TOL)
        sol_a = solve_milp(build_alpp(city), gap_tol=EXACT_GAP_TOL)
    return sol_a, sol_s


def _sweep_point(args) -> SweepRow:
    base, alpha, gamma, gap_tol = args
    beta = round(1.0 - alpha - gamma, 12)
    row = SweepRow(alpha=alpha, beta=beta, gamma=gamma)
    try:
        params = CityParams(**{**base, "alpha": alpha, "beta": beta, "gamma": gamma})
        row.bound_cn_ag = gap_bounds(params).C_n_ag
        sol_a, sol_s = solve_instance_pair(params, gap_tol)
        report = symmetry_gap(sol_a, sol_s)
        row.opt_alpp = report.opt_alpp
        row.opt_alpps = report.opt_alpps
        row.gamma_abs = report.gamma_abs
        row.gamma_rel = report.gamma_rel
        row.classification = report.classification.value
        row.ms_alpp = sol_a.wall_ms
        row.ms_alpps = sol_s.wall_ms
    except Exception as exc:  # error recorded in-row, sweep continues
        row.classification = f"Error: {exc}"
    return row


def grid_points(step: float, min_beta: float, lo: float = 0.025, hi: float = 0.95):
    """Deterministic (alpha, gamma) grid: alpha outer, gamma inner, both
    ascending; points whose implied beta leaves (min_beta, 1) are skipped."""
    values = []
    k = 0
    while (v := round(lo + k * step, 12)) <= hi + 1e-12:
        values.append(v)
        k += 1
    points = []
    for alpha in values:
        for gamma in values:
            beta = round(1.0 - alpha - gamma, 12)
            if beta > max(min_beta, 0.0) and beta < 1.0:
                points.append((alpha, gamma))
    return points


def run_sweep(
    base: dict,
    step: float = 0.025,
    min_beta: float = 0.0,
    gap_tol: float = 1e-4,
    jobs: int = 1,
) -> tuple[list[SweepRow], dict]:
    points = grid_points(step, min_beta)
    tasks = [(base, alpha, gamma, gap_tol) for alpha, gamma in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(task) for task in tasks]
    solved = [r for r in rows if r.classification in ("Symmetric", "Asymmetric")]
    asym = [r for r in solved if r.classification == "Asymmetric"]
    summary = {
        "rows": len(rows),
        "solved": len(solved),
        "errors": sum(1 for r in rows if r.classification.startswith("Error")),
        "infeasible": sum(1 for r in rows if r.classification == "Infeasible"),
        "asymmetric_share": len(asym) / len(solved) if solved else 0.0,
        "max_gamma_rel": max((r.gamma_rel for r in solved), default=0.0),
    }
    return rows, summary


def write_sweep_csv(rows: list[SweepRow], summary: dict, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
    stream.write(
        f"# rows={summary['rows']} infeasible={summary['infeasible']} "
        f"errors={summary['errors']} "
        f"asymmetric_share={100 * summary['asymmetric_share']:.4g}% "
        f"max_gap={100 * summary['max_gamma_rel']:.4g}%\n"
    )


def _load_params(path: str) -> CityParams:
    with open(path) as fh:
        return CityParams.from_mapping(read_config_mapping(fh.read()))


def _load_raw(path: str) -> dict:
    with open(path) as fh:
        data = read_config_mapping(fh.read())
    out: dict = {k: float(v) for k, v in data.items()}
    out["n"] = int(data["n"])
    return out


def _emit(payload, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    params = _load_params(args.config)
    city = build_city(params)
    if args.model == "umcfp":
        _emit(
            {
                "status": "Optimal",
                "model": "umcfp",
                "objective": umcfp_optimum(params),
                "oracle": shortest_path_oracle_for(params, city),
                "lambda": lambda_value(params),
            },
            args.out,
        )
        return 0
    model = build_alpp(city) if args.model == "alpp" else build_alpp_sym(city)
    sol = solve_milp(model, gap_tol=args.gap_tol)
    report = {
        "status": sol.status.value,
        "model": args.model,
        "objective": sol.objective,
        "bound": sol.bound,
        "rel_gap": sol.rel_gap,
        "nodes": sol.nodes,
        "wall_ms": sol.wall_ms,
    }
    if sol.values is not None:
        freqs = sol.frequencies
        report["frequencies"] = {
            arc.name: round(float(freqs[a_id]), 6) for a_id, arc in enumerate(city.arcs)
        }
        if args.lines:
            from .lines import decompose_circulation
            from .solver import extract_frequency_plan

            plan = extract_frequency_plan(sol, city)
            report["line_plan"] = decompose_circulation(plan).as_json(city)
    _emit(report, args.out)
    if sol.status is SolveStatus.OPTIMAL:
        return 0
    if sol.status is SolveStatus.INFEASIBLE:
        return 2
    return 1


def cmd_sweep(args) -> int:
    base = _load_raw(args.config)
    for key in ("alpha", "beta", "gamma"):
        base.pop(key, None)
    rows, summary = run_sweep(
        base, step=args.step, min_beta=args.min_beta, gap_tol=args.gap_tol, jobs=args.jobs
    )
    if args.format == "json":
        payload = {"rows": [dict(zip(CSV_HEADER, r.as_csv())) for r in rows], "summary": summary}
        _emit(payload, args.out)
    else:
        buffer = io.StringIO()
        write_sweep_csv(rows, summary, buffer)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(buffer.getvalue())
        else:
            sys.stdout.write(buffer.getvalue())
    return 0


def cmd_bounds(args) -> int:
    params = _load_params(args.config)
    bounds = gap_bounds(params)
    if not bounds.lambda_lo <= bounds.lambda_val <= bounds.lambda_hi:
        raise AssertionError(
            f"lambda sandwich violated: {bounds.lambda_lo} <= {bounds.lambda_val} "
            f"<= {bounds.lambda_hi}"
        )
    if args.format == "json":
        _emit(bounds.as_dict(), args.out)
    else:
        lines = [f"{key}: {_fmt(value)}" for key, value in bounds.as_dict().items()]
        text = "\n".join(lines) + "\n" + json.dumps(bounds.as_dict(), sort_keys=True) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return 0


def cmd_gap(args) -> int:
    params = _load_params(args.config)
    sol_a, sol_s = solve_instance_pair(params, args.gap_tol)
    report = symmetry_gap(sol_a, sol_s)
    _emit(report.as_dict(), args.out)
    return 2 if report.classification is Classification.INFEASIBLE else 0


def cmd_lpa(args) -> int:
    params = _load_params(args.config)
    result = lpa(params, gap_tol=args.gap_tol)
    if result.status is LpaStatus.INFEASIBLE:
        _emit({"status": "Infeasible"}, args.out)
        return 2
    city = build_city(params)
    _emit(
        {
            "status": "Optimal",
            "objective": result.objective,
            "line_plan": result.line_plan.as_json(city),
        },
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paracity", description="Line planning in the Parametric City"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="flat key-value parameter file")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--gap-tol", type=float, default=1e-4, dest="gap_tol")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized drivers")

    p = sub.add_parser("solve", help="solve one model on one instance")
    common(p)
    p.add_argument("--model", choices=("alpp", "alpps", "umcfp"), default="alpp")
    p.add_argument("--lines", action="store_true", help="include a decomposed line plan")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="(alpha, gamma) grid sweep with gap classification")
    common(p)
    p.add_argument("--step", type=float, default=0.025)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--min-beta", type=float, default=0.0, dest="min_beta")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="closed-form bound report")
    common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gap", help="symmetry gap of one instance")
    common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("lpa", help="symmetric approximation algorithm")
    common(p)
    p.set_defaults(func=cmd_lpa)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
