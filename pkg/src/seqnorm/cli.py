"""Command-line surface: design, oc, asn, simulate, run.

All output is deterministic given the flags (plus the seed where one
applies): reals print with 17 significant digits, newlines are "\n", and
no timestamps or environment details leak into files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

from .calibrate import calibrate_known, calibrate_unknown
from .errors import (
    CalibrationError,
    DomainError,
    IntegrityError,
    PlanCertificationError,
    SeqnormError,
    SessionFormatError,
    StateError,
)
from .plan_known import (
    build_known_plan,
    mirror_known_plan,
    oc_bounds_known,
    oc_upper_phi,
    sample_tail_known,
)
from .plan_unknown import (
    build_unknown_plan,
    mirror_unknown_plan,
    oc_bounds_unknown,
    oc_upper_P,
    sample_tail_unknown,
)
from .runner import (
    feed,
    format_real,
    dump_json,
    load_plan,
    load_session,
    new_session,
    save_plan,
    save_session,
)
from .simulate import simulate_plan

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_REJECTED = 3
EXIT_NEED_MORE = 4

DEFAULT_RHO = 0.5
DEFAULT_TAU = 4
DEFAULT_TAIL_MASS = 1e-4
DEFAULT_CELL_BUDGET = 256
DEFAULT_ZETA_TOL = 1e-4


@dataclass(frozen=True)
class CurveRow:
    """One OC table row; bounds are None inside the indifference zone."""

    theta: float
    oc_lower: float | None
    oc_upper: float | None

    def __post_init__(self):
        if self.oc_lower is not None and self.oc_upper is not None:
            if self.oc_lower > self.oc_upper:
                raise DomainError("curve row bounds inverted")


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fp:
            fp.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqnorm",
        description="Multistage hypothesis tests for the mean of a normal distribution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="construct (and optionally calibrate) a plan")
    p_design.add_argument("--kind", choices=("known", "unknown"), required=True)
    p_design.add_argument("--alpha", type=float, required=True)
    p_design.add_argument("--beta", type=float, required=True)
    p_design.add_argument("--epsilon", type=float, required=True)
    p_design.add_argument("--gamma", type=float, required=True)
    p_design.add_argument("--sigma", type=float)
    p_design.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p_design.add_argument("--tau", type=int, default=DEFAULT_TAU)
    p_design.add_argument("--zeta", type=float)
    p_design.add_argument("--calibrate", action="store_true")
    p_design.add_argument("--zeta-tol", type=float, default=DEFAULT_ZETA_TOL)
    p_design.add_argument("--tail-mass", type=float, default=DEFAULT_TAIL_MASS)
    p_design.add_argument("--cell-budget", type=int, default=DEFAULT_CELL_BUDGET)
    p_design.add_argument("--out", required=True, help="plan JSON output path")
    p_design.set_defaults(func=cmd_design)

    p_oc = sub.add_parser("oc", help="tabulate certified OC bounds over a grid")
    p_oc.add_argument("plan", help="plan JSON path")
    p_oc.add_argument("--theta-min", type=float, required=True)
    p_oc.add_argument("--theta-max", type=float, required=True)
    p_oc.add_argument("--points", type=int, required=True)
    p_oc.add_argument("--mu-units", action="store_true")
    p_oc.add_argument("--tail-mass", type=float, default=DEFAULT_TAIL_MASS)
    p_oc.add_argument("--cell-budget", type=int, default=DEFAULT_CELL_BUDGET)
    p_oc.add_argument("--out")
    p_oc.set_defaults(func=cmd_oc)

    p_asn = sub.add_parser("asn", help="tabulate per-stage continuation bounds")
    p_asn.add_argument("plan", help="plan JSON path")
    p_asn.add_argument("--theta", type=float, action="append", required=True)
    p_asn.add_argument("--out")
    p_asn.set_defaults(func=cmd_asn)

    p_sim = sub.add_parser("simulate", help="Monte Carlo execution of a plan")
    p_sim.add_argument("plan", help="plan JSON path")
    p_sim.add_argument("--mu", type=float, required=True)
    p_sim.add_argument("--sigma", type=float)
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out")
    p_sim.set_defaults(func=cmd_simulate)

    p_run = sub.add_parser("run", help="feed a data file into a persistent session")
    p_run.add_argument("plan", help="plan JSON path")
    p_run.add_argument("--session", required=True, help="session JSON path")
    p_run.add_argument("--data", required=True, help="CSV with one real per line")
    p_run.add_argument("--allow-uncertified", action="store_true")
    p_run.set_defaults(func=cmd_run)

    return parser


def _certify_plan(plan, tail_mass: float, cell_budget: int):
    """Direct evaluation of both error bounds; returns (plan', bound_a, bound_b)."""
    eps = plan.epsilon
    if plan.kind == "known":
        bound_a = oc_upper_phi(-eps, plan)
        bound_b = oc_upper_phi(-eps, mirror_known_plan(plan))
    else:
        _, bound_a = oc_upper_P(-eps, plan, tail_mass, cell_budget)
        _, bound_b = oc_upper_P(-eps, mirror_unknown_plan(plan), tail_mass, cell_budget)
    certified = bound_a <= plan.alpha and bound_b <= plan.beta
    return plan.with_certified(certified), bound_a, bound_b


def cmd_design(args) -> int:
    if (args.zeta is None) == (not args.calibrate):
        print("design: exactly one of --zeta or --calibrate is required", file=sys.stderr)
        return EXIT_USAGE
    if args.kind == "known" and args.sigma is None:
        print("design: --sigma is required for --kind known", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.calibrate:
            if args.kind == "known":
                result = calibrate_known(
                    args.alpha, args.beta, args.epsilon, args.rho, args.tau,
                    zeta_tol=args.zeta_tol,
                )
            else:
                result = calibrate_unknown(
                    args.alpha, args.beta, args.epsilon, args.rho, args.tau,
                    zeta_tol=args.zeta_tol,
                    tail_mass=args.tail_mass,
                    cell_budget=args.cell_budget,
                )
            zeta = result.zeta
        else:
            zeta = args.zeta
        if args.kind == "known":
            plan = build_known_plan(
                args.alpha, args.beta, args.epsilon, args.gamma, args.sigma,
                zeta, args.rho, args.tau,
            )
        else:
            plan = build_unknown_plan(
                args.alpha, args.beta, args.epsilon, args.gamma,
                zeta, args.rho, args.tau,
            )
        plan, bound_a, bound_b = _certify_plan(plan, args.tail_mass, args.cell_budget)
    except CalibrationError as exc:
        print(f"design: calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except DomainError as exc:
        print(f"design: {exc}", file=sys.stderr)
        return EXIT_USAGE

    save_plan(plan, args.out)

    lines = [
        f"kind        {plan.kind}",
        f"alpha       {format_real(plan.alpha)}",
        f"beta        {format_real(plan.beta)}",
        f"epsilon     {format_real(plan.epsilon)}",
        f"gamma       {format_real(plan.gamma)}",
    ]
    if plan.kind == "known":
        lines.append(f"sigma       {format_real(plan.sigma)}")
    lines += [
        f"zeta        {format_real(plan.zeta)}",
        f"rho         {format_real(plan.rho)}",
        f"tau         {plan.tau}",
        f"tail_mass   {format_real(args.tail_mass)}",
        f"cell_budget {args.cell_budget}",
        f"zeta_tol    {format_real(args.zeta_tol)}",
        f"bound[a]    {format_real(bound_a)}",
        f"bound[b]    {format_real(bound_b)}",
        f"certified   {str(plan.certified).lower()}",
        "stage        n            a            b",
    ]
    for i, st in enumerate(plan.stages, start=1):
        lines.append(f"{i:5d} {st.n:10d} {st.a:+.6f}    {st.b:+.6f}")
    print("\n".join(lines))
    return EXIT_OK


def _grid(lo: float, hi: float, points: int) -> list[float]:
    if points < 2:
        raise DomainError("points must be >= 2")
    if not (hi > lo):
        raise DomainError("grid needs max > min")
    step = (hi - lo) / (points - 1)
    return [lo + i * step for i in range(points)]


def cmd_oc(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (OSError, SessionFormatError) as exc:
        print(f"oc: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.mu_units and plan.kind == "unknown":
        print("oc: --mu-units needs a plan with a known sigma", file=sys.stderr)
        return EXIT_USAGE
    try:
        grid = _grid(args.theta_min, args.theta_max, args.points)
    except DomainError as exc:
        print(f"oc: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rows = []
    for value in grid:
        theta = (value - plan.gamma) / plan.sigma if args.mu_units else value
        if abs(theta) < plan.epsilon:
            rows.append(CurveRow(theta=value, oc_lower=None, oc_upper=None))
            continue
        if plan.kind == "known":
            mu = plan.gamma + theta * plan.sigma
            lo, hi = oc_bounds_known(mu, plan)
        else:
            lo, hi = oc_bounds_unknown(theta, plan, args.tail_mass, args.cell_budget)
        rows.append(CurveRow(theta=value, oc_lower=lo, oc_upper=hi))

    lines = ["theta,oc_lower,oc_upper"]
    for row in rows:
        lo = "" if row.oc_lower is None else format_real(row.oc_lower)
        hi = "" if row.oc_upper is None else format_real(row.oc_upper)
        lines.append(f"{format_real(row.theta)},{lo},{hi}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_asn(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (OSError, SessionFormatError) as exc:
        print(f"asn: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    s = plan.num_stages
    header = "theta," + ",".join(f"tail_{ell}" for ell in range(1, s))
    lines = [header]
    for theta in args.theta:
        cells = [format_real(theta)]
        for ell in range(1, s):
            if plan.kind == "known":
                bound = sample_tail_known(ell, theta, plan)
            else:
                bound = sample_tail_unknown(ell, theta, plan)
            cells.append(format_real(bound))
        lines.append(",".join(cells))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (OSError, SessionFormatError) as exc:
        print(f"simulate: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    sigma = args.sigma
    if sigma is None:
        if plan.kind == "known":
            sigma = plan.sigma
        else:
            print("simulate: --sigma is required for unknown-variance plans", file=sys.stderr)
            return EXIT_USAGE
    try:
        report = simulate_plan(plan, args.mu, sigma, args.reps, args.seed)
    except DomainError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write_text(args.out, dump_json(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def _read_data_file(path: str) -> list[float]:
    values = []
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                raise DomainError(f"line {lineno}: not a real number: {text!r}")
            if not math.isfinite(value):
                raise DomainError(f"line {lineno}: non-finite value {text!r}")
            values.append(value)
    return values


def cmd_run(args) -> int:
    try:
        plan = load_plan(args.plan)
    except (OSError, SessionFormatError) as exc:
        print(f"run: cannot read plan: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    try:
        batch = _read_data_file(args.data)
    except OSError as exc:
        print(f"run: cannot read data: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except DomainError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if os.path.exists(args.session):
            session = load_session(args.session)
            if plan_differs(session.plan, plan):
                print("run: session was created from a different plan", file=sys.stderr)
                return EXIT_FAILURE
        else:
            session = new_session(plan, allow_uncertified=args.allow_uncertified)
        feed(session, batch)
        save_session(session, args.session)
    except (IntegrityError, SessionFormatError) as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (PlanCertificationError, StateError) as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except SeqnormError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    status = session.status
    if status.state == "accepted":
        print(
            f"Accepted at stage {status.stage} "
            f"(statistic={format_real(status.statistic)})"
        )
        return EXIT_OK
    if status.state == "rejected":
        print(
            f"Rejected at stage {status.stage} "
            f"(statistic={format_real(status.statistic)})"
        )
        return EXIT_REJECTED
    print(f"NeedMore {status.next_n}")
    return EXIT_NEED_MORE


def plan_differs(a, b) -> bool:
    from .runner import plan_to_dict

    return plan_to_dict(a) != plan_to_dict(b)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
