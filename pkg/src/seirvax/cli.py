"""Command-line front end: scenario runs, equilibria reports, zero dynamics.

Subcommands:
    simulate <scenario>     integrate the scenario, emit CSV/SVG/report,
                            run the requested checks
    equilibria [flags]      equilibrium points, spectra and the frequency
                            sweep for given parameters
    zerodyn [flags]         integrate the zero dynamics, emit CSV and the
                            conservation/boundedness verdicts
    verify <csv> <scenario> replay the checks against a stored trajectory

Exit codes: 0 all checks pass, 1 input/usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import (
    VerificationReport,
    check_asymptotics,
    check_identity_suite,
    check_integral_limit,
    monitor_conservation,
    monitor_positivity,
)
from .equilibria import analyze, endemic_equilibrium
from .exceptions import (
    GainConstraintError,
    HorizonError,
    NonFiniteStateError,
    PredictionError,
    ScenarioError,
    VaccinationChannelError,
)
from .integrate import IntegratorConfig, Trajectory, integrate
from .laws import (
    ConstrainedImmuneFeedback,
    ControlLaw,
    ImmuneFeedback,
    Linearizing,
    law_name,
    predicted_limits,
    validate_gains,
)
from .model import ModelParams
from .normal_form import integrate_zero_dynamics
from .scenario import Scenario, load_scenario
from .svgplot import write_line_chart

CSV_HEADER = "t,S,E,I,R,V,u"
ZERODYN_HEADER = "t,z2,z3,z4,sum"

_USAGE_ERROR = 1
_CHECK_FAILURE = 2


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    """Write samples with shortest round-trip decimal formatting."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        cols = (traj.t, traj.S, traj.E, traj.I, traj.R, traj.V, traj.u)
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(repr(v) for v in row) + "\n")


def read_trajectory_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read a trajectory CSV; the header must match exactly."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ScenarioError(
                f"CSV header mismatch: expected {CSV_HEADER!r}, got {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ScenarioError(f"CSV line {lineno}: expected 7 fields")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ScenarioError(f"CSV line {lineno}: {exc}") from exc
    if not rows:
        raise ScenarioError("CSV contains no samples")
    data = np.asarray(rows, dtype=float)
    names = CSV_HEADER.split(",")
    return {name: data[:, k] for k, name in enumerate(names)}


def _integral_gains(law: ControlLaw, params: ModelParams) -> tuple[float, float]:
    """(g, g1) of the immune-feedback family, for the integral-limit check."""
    if isinstance(law, ImmuneFeedback):
        return law.g, law.g1
    if isinstance(law, ConstrainedImmuneFeedback):
        return law.g, params.mu + params.omega + law.g
    if isinstance(law, Linearizing):
        return law.g_prime - (params.mu + params.omega), law.g1
    raise ScenarioError(
        "integral_limit check needs an immune-feedback family law "
        f"(got {law_name(law)})")


def run_checks(traj: Trajectory, scenario: Scenario) -> VerificationReport:
    """Run the scenario's requested checks against a trajectory."""
    params = scenario.params
    checks = []
    for name, opts in scenario.checks.items():
        if name == "conservation":
            checks.append(monitor_conservation(traj))
        elif name == "positivity":
            if opts.get("bounds") == "corollary1":
                checks.append(monitor_positivity(
                    traj, v_bounds="corollary1", alpha=opts.get("alpha")))
            else:
                lo = opts.get("v_lo", 0.0)
                hi = opts.get("v_hi", 1.0)
                checks.append(monitor_positivity(traj, v_bounds=(lo, hi)))
        elif name == "identities":
            checks.append(check_identity_suite(traj, params))
        elif name == "asymptotics":
            prediction = predicted_limits(scenario.law, params)
            checks.append(check_asymptotics(
                traj, prediction,
                tail_fraction=opts.get("tail_fraction", 0.1),
                rel_tol=opts.get("rel_tol", 1e-3)))
        elif name == "integral_limit":
            g, g1 = _integral_gains(scenario.law, params)
            checks.append(check_integral_limit(
                traj, params, g, g1, rel_tol=opts.get("rel_tol", 0.01)))
    return VerificationReport(checks=tuple(checks))


def _report_text(scenario: Scenario, traj: Trajectory,
                 report: VerificationReport,
                 advisories: list[str]) -> str:
    p = scenario.params
    lines = [
        f"seirvax {__version__} simulation report",
        f"law: {traj.law_label}",
        f"params: N={p.N:g} mu={p.mu:g} omega={p.omega:g} beta={p.beta:g} "
        f"sigma={p.sigma:g} gamma={p.gamma:g}",
        f"window: t0={traj.config.t0:g} t_end={traj.config.t_end:g} "
        f"dt={traj.config.dt:g} samples={len(traj)}",
        f"final state: S={float(traj.S[-1])!r} E={float(traj.E[-1])!r} "
        f"I={float(traj.I[-1])!r} R={float(traj.R[-1])!r}",
    ]
    for msg in advisories:
        lines.append(f"warning: {msg}")
    lines.extend(report.lines())
    lines.append("overall: " + ("PASS" if report.all_passed else "FAIL"))
    return "\n".join(lines)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    config = scenario.config
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if overrides:
        config = dataclasses.replace(config, **overrides)
        scenario = dataclasses.replace(scenario, config=config)

    gain_checks = validate_gains(scenario.law, scenario.params)
    failed_required = [c.name for c in gain_checks if c.required and not c.holds]
    if failed_required:
        print("error: law gains fail required constraint(s): "
              + ", ".join(failed_required), file=sys.stderr)
        return _USAGE_ERROR
    advisories = [f"gain condition not met: {c.name}"
                  for c in gain_checks if not c.required and not c.holds]

    traj = integrate(scenario.initial, scenario.params, scenario.law, config)
    report = run_checks(traj, scenario)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "csv" in scenario.outputs:
        write_trajectory_csv(out_dir / scenario.outputs["csv"], traj)
    if "svg" in scenario.outputs:
        write_line_chart(
            out_dir / scenario.outputs["svg"], traj.t,
            {"S": traj.S, "E": traj.E, "I": traj.I, "R": traj.R},
            secondary={"V": traj.V},
            title=f"SEIR under {traj.law_label}")
    text = _report_text(scenario, traj, report, advisories)
    if "report" in scenario.outputs:
        (out_dir / scenario.outputs["report"]).write_text(text + "\n")
    print(text)
    return 0 if report.all_passed else _CHECK_FAILURE


def _params_from_args(args: argparse.Namespace) -> ModelParams:
    return ModelParams(N=args.N, mu=args.mu, omega=args.omega,
                       beta=args.beta, sigma=args.sigma, gamma=args.gamma)


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.9g}{z.imag:+.9g}j"


def cmd_equilibria(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    if params.sigma != params.gamma:
        print("error: endemic analysis requires sigma == gamma", file=sys.stderr)
        return _USAGE_ERROR

    reports = analyze(params, sweep=not args.no_sweep)
    payload: dict = {"params": dataclasses.asdict(params), "equilibria": []}
    lines = [f"seirvax {__version__} equilibrium report",
             f"params: N={params.N:g} mu={params.mu:g} omega={params.omega:g} "
             f"beta={params.beta:g} sigma={params.sigma:g} gamma={params.gamma:g}"]
    for rep in reports:
        st = rep.point.state
        lines.append(f"{rep.point.kind}: S={st.S:.6f} E={st.E:.6f} "
                     f"I={st.I:.6f} R={st.R:.6f} (residual {rep.point.residual:.3e})")
        if rep.closed_form_zeros is not None:
            lines.append("  closed-form zeros: "
                         + ", ".join(f"{z:.9g}" for z in rep.closed_form_zeros))
        lines.append("  numeric spectrum:  "
                     + ", ".join(_fmt_complex(z) for z in rep.spectrum))
        lines.append(f"  locally stable: {'yes' if rep.locally_stable else 'no'}")
        if rep.point.feasibility_a11 is not None:
            lines.append("  feasibility condition: "
                         + ("holds" if rep.point.feasibility_a11 else "violated"))
        if rep.hinf_ratio is not None:
            lines.append(f"  frequency sweep: max ratio {rep.hinf_ratio:.6g}, "
                         f"threshold 1/beta = {1.0 / params.beta:.6g}, "
                         "condition "
                         + ("holds" if rep.hinf_condition_holds else "fails"))
        payload["equilibria"].append({
            "kind": rep.point.kind,
            "state": dataclasses.asdict(st),
            "residual": rep.point.residual,
            "closed_form_zeros": rep.closed_form_zeros,
            "spectrum": [[z.real, z.imag] for z in rep.spectrum],
            "locally_stable": rep.locally_stable,
            "feasibility_a11": rep.point.feasibility_a11,
            "hinf_ratio": rep.hinf_ratio,
            "hinf_condition_holds": rep.hinf_condition_holds,
        })
    if endemic_equilibrium(params) is None:
        lines.append("no endemic equilibrium for these parameters")
        payload["endemic_exists"] = False
    else:
        payload["endemic_exists"] = True

    print("\n".join(lines))
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_zerodyn(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    z0 = (args.z2, args.z3, args.z4)
    if min(z0) < 0.0:
        print("error: initial zero-dynamics state must be nonnegative",
              file=sys.stderr)
        return _USAGE_ERROR
    config = IntegratorConfig(t_end=args.t_end, dt=args.dt,
                              sampling_stride=args.stride)
    traj = integrate_zero_dynamics(z0, params, config)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / args.csv
    total = traj.total
    with open(csv_path, "w") as fh:
        fh.write(ZERODYN_HEADER + "\n")
        for row in zip(traj.t.tolist(), traj.z2.tolist(), traj.z3.tolist(),
                       traj.z4.tolist(), total.tolist()):
            fh.write(",".join(repr(v) for v in row) + "\n")

    c0 = float(total[0])
    eps = 1e-9 * c0 if c0 > 0.0 else 1e-9
    drift = float(np.max(np.abs(total - c0)))
    conserved = drift <= eps
    lo = float(min(traj.z2.min(), traj.z3.min(), traj.z4.min()))
    hi = float(max(traj.z2.max(), traj.z3.max(), traj.z4.max()))
    bounded = lo >= -eps and hi <= c0 + eps
    print(f"zero dynamics from (z2, z3, z4) = {z0}, sum C = {c0:g}")
    print(f"{'PASS' if conserved else 'FAIL'}  sum conservation: "
          f"max drift {drift:.3e} (tol {eps:.3e})")
    print(f"{'PASS' if bounded else 'FAIL'}  boundedness in [0, C]: "
          f"min {lo:.6g}, max {hi:.6g}")
    print(f"wrote {csv_path}")
    return 0 if (conserved and bounded) else _CHECK_FAILURE


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    data = read_trajectory_csv(args.csv)
    t = data["t"]
    if not np.all(np.diff(t) > 0.0):
        print("error: CSV time column must be strictly increasing",
              file=sys.stderr)
        return _USAGE_ERROR
    traj = Trajectory(
        t=t, S=data["S"], E=data["E"], I=data["I"], R=data["R"],
        V=data["V"], u=data["u"], params=scenario.params, law=scenario.law,
        law_label=law_name(scenario.law), config=scenario.config)
    report = run_checks(traj, scenario)
    for line in report.lines():
        print(line)
    print("overall: " + ("PASS" if report.all_passed else "FAIL"))
    return 0 if report.all_passed else _CHECK_FAILURE


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--N", type=float, default=1000.0, help="total population")
    sub.add_argument("--mu", type=float, default=0.01, help="death/birth rate")
    sub.add_argument("--omega", type=float, default=0.02,
                     help="immunity loss rate")
    sub.add_argument("--beta", type=float, default=0.9,
                     help="transmission constant")
    sub.add_argument("--sigma", type=float, default=0.2,
                     help="inverse latent period")
    sub.add_argument("--gamma", type=float, default=0.2,
                     help="inverse infective period")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seirvax",
        description="SEIR epidemic simulation under feedback vaccination control")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run a scenario file")
    sim.add_argument("scenario", help="path to the scenario file")
    sim.add_argument("--out-dir", default=".", help="directory for artifacts")
    sim.add_argument("--dt", type=float, default=None,
                     help="override the scenario step size")
    sim.add_argument("--t-end", type=float, default=None,
                     help="override the scenario end time")
    sim.set_defaults(fn=cmd_simulate)

    eq = subs.add_parser("equilibria", help="equilibrium and stability report")
    _add_param_flags(eq)
    eq.add_argument("--no-sweep", action="store_true",
                    help="skip the frequency sweep")
    eq.add_argument("--json", default=None,
                    help="also write a machine-readable report")
    eq.set_defaults(fn=cmd_equilibria)

    zd = subs.add_parser("zerodyn", help="integrate the zero dynamics")
    _add_param_flags(zd)
    zd.add_argument("--z2", type=float, required=True)
    zd.add_argument("--z3", type=float, required=True)
    zd.add_argument("--z4", type=float, required=True)
    zd.add_argument("--t-end", type=float, default=1000.0)
    zd.add_argument("--dt", type=float, default=1e-2)
    zd.add_argument("--stride", type=int, default=100)
    zd.add_argument("--out-dir", default=".")
    zd.add_argument("--csv", default="zerodyn.csv")
    zd.set_defaults(fn=cmd_zerodyn)

    ver = subs.add_parser("verify", help="replay checks on a stored trajectory")
    ver.add_argument("csv", help="trajectory CSV path")
    ver.add_argument("scenario", help="scenario file describing the run")
    ver.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, GainConstraintError, PredictionError, HorizonError,
            VaccinationChannelError, NonFiniteStateError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
