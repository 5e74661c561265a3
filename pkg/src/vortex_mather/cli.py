#!/usr/bin/env python3
"""
Command-line entry point for the vortex Poincare map toolkit.

Usage:
  vortex-mather simulate --r0 3.14159 --theta0 0 --t1 1 --dense
  vortex-mather twist-scan --r-min 10 --r-max 1000 --n-r 3
  vortex-mather exactness --richardson
  vortex-mather window
  vortex-mather orbit --s 3 --q 2
  vortex-mather mather --alpha 1.6180339887 --depth 6
  vortex-mather rl-check
  vortex-mather verify
  vortex-mather report

Every command accepts --config PATH (JSON run configuration), --jobs N and
--verbose. Output goes to the configured output_dir, or to
$VORTEX_MATHER_OUTPUT_DIR when set.

Exit codes: 0 success, 1 usage or configuration error, 2 domain or
convergence error, 3 verification failure.
"""

import argparse
import logging
import sys

import numpy as np
import pandas as pd

from vortex_mather.config import load_config, resolve_output_dir
from vortex_mather.diagnostics import (
    OscillatoryIntegral,
    oscillatory_decay,
    polynomial_q,
    rl_constant_bound,
    trajectory_integral,
)
from vortex_mather.errors import (
    BracketError,
    ConfigError,
    DepthError,
    DomainError,
    DomainExit,
    HypothesisError,
    MonotonicityViolation,
    NoConvergence,
    QuadratureError,
    SingularityError,
    StepFailure,
    WindowError,
)
from vortex_mather.flow import AugmentedState
from vortex_mather.generating import samples_frame
from vortex_mather.poincare import exactness_residual, twist_scan
from vortex_mather.reports import (
    GENERATING_CSV,
    HULL_CSV,
    ORBIT_CSV,
    TWIST_SUMMARY_CSV,
    write_csv,
    write_json,
    write_plot_scripts,
    write_summary,
)
from vortex_mather.schemas import MonomialTerm
from vortex_mather.session import AnalysisSession
from vortex_mather.verification import run_suite, suite_passed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_VERIFY = 3

DOMAIN_ERRORS = (
    DomainError,
    DomainExit,
    SingularityError,
    StepFailure,
    BracketError,
    NoConvergence,
    WindowError,
    DepthError,
    HypothesisError,
    QuadratureError,
    MonotonicityViolation,
)


class ToolkitArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this toolkit reserves 2 for domain errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _banner(title: str, rows: dict | None = None) -> None:
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}")
    for key, value in (rows or {}).items():
        print(f"{key + ':':<22}{value}")
    if rows:
        print(f"{'='*60}\n")


def _radial_grid(args) -> np.ndarray:
    return np.geomspace(args.r_min, args.r_max, args.n_r)


def _angle_grid(args) -> np.ndarray:
    return np.linspace(0.0, 2.0 * np.pi, args.n_theta, endpoint=False)


# ── commands ─────────────────────────────────────────────────────────


def cmd_simulate(session: AnalysisSession, out_dir, args) -> int:
    state0 = AugmentedState.initial(args.r0, args.theta0)
    trajectory = session.flow.integrate(state0, 0.0, args.t1, dense=args.dense)
    frame = trajectory.to_frame()
    write_csv(frame, out_dir / "trajectory.csv")
    final = trajectory.final
    results = {"r0": args.r0, "theta0": args.theta0, "t1": args.t1, "rows": len(frame),
               "r": final.r, "theta": final.theta, "action": final.action, "Y": final.Y}
    write_summary(out_dir, "simulate", session.config, results)
    _banner("Trajectory", {"rows": len(frame), "final r": f"{final.r:.12g}", "final theta": f"{final.theta:.12g}",
                           "action": f"{final.action:.12g}"})
    return EXIT_OK


def cmd_twist_scan(session: AnalysisSession, out_dir, args) -> int:
    scan = twist_scan(session.flow, _radial_grid(args), _angle_grid(args), jobs=session.jobs)
    write_csv(scan.to_frame(), out_dir / "twist_scan.csv", index=True)
    write_csv(pd.DataFrame({"r0": scan.r_grid, "sup_dev": scan.sup_dev_by_r}), out_dir / TWIST_SUMMARY_CSV)
    results = {"sup_dev": scan.sup_dev, "sup_dev_by_r": scan.sup_dev_by_r, "min_twist": scan.min_twist,
               "fd_agreement": scan.fd_agreement, "decay_exponent": scan.decay_exponent, "missing": scan.missing}
    write_summary(out_dir, "twist-scan", session.config, results)
    _banner("Twist scan", {"grid": f"{scan.r_grid.size} x {scan.theta_grid.size}",
                           "sup |dG/dr0 - 2|": f"{scan.sup_dev:.4e}", "min dG/dr0": f"{scan.min_twist:.6g}",
                           "missing": scan.missing})
    return EXIT_OK


def cmd_exactness(session: AnalysisSession, out_dir, args) -> int:
    r_grid, theta_grid = _radial_grid(args), _angle_grid(args)
    report = exactness_residual(session.flow, r_grid, theta_grid, fd_step=args.fd_step,
                                richardson=args.richardson, jobs=session.jobs)
    frame = pd.DataFrame(report.residuals, index=r_grid, columns=theta_grid)
    frame.index.name = "r0"
    write_csv(frame, out_dir / "exactness.csv", index=True)
    results = {"max_residual": report.max_residual, "location": report.location, "fd_step": args.fd_step,
               "richardson": args.richardson}
    write_summary(out_dir, "exactness", session.config, results)
    _banner("Exactness", {"max residual": f"{report.max_residual:.4e}", "at (r0, theta0)": report.location})
    return EXIT_OK


def cmd_window(session: AnalysisSession, out_dir, args) -> int:
    strip, window = session.strip, session.window
    write_csv(pd.DataFrame({"x": window.theta_grid, "alpha_minus": window.alpha_minus_samples}),
              out_dir / "window.csv")
    results = dict(window.summary())
    results.update({"a_star": strip.a_star, "a1": strip.a1, "a2": strip.a2, "K": strip.K,
                    "sample_r": strip.sample_r})
    write_summary(out_dir, "window", session.config, results)
    _banner("Frequency window", {"r_bar": f"{window.r_bar:.6g}", "W-": f"{window.W_minus:.6g}",
                                 "alpha threshold": f"{window.alpha_threshold:.6g}"})
    return EXIT_OK


def cmd_orbit(session: AnalysisSession, out_dir, args) -> int:
    solver = session.solver
    orbit = solver.periodic_orbit(args.s, args.q)
    report = solver.orbit_residuals(orbit)
    archive = orbit.to_archive()
    write_json(archive, out_dir / f"orbit_{args.s}_{args.q}.json")
    write_csv(pd.DataFrame({"n": np.arange(orbit.q + 1), "x": orbit.x,
                            "r": np.append(orbit.r, orbit.r[0])}), out_dir / ORBIT_CSV)
    write_csv(samples_frame(solver.pair_samples(orbit)), out_dir / GENERATING_CSV)
    results = {"s": orbit.s, "q": orbit.q, "action": orbit.action, "el_residual": report.el,
               "map_residual": report.map, "max_deviation": report.max_deviation,
               "comparability": report.comparability, "iterations": orbit.iterations, "clamped": orbit.clamped,
               "gradient_steps": orbit.gradient_steps}
    write_summary(out_dir, "orbit", session.config, results)
    _banner(f"Orbit ({orbit.s},{orbit.q})", {"action": f"{orbit.action:.12g}", "EL residual": f"{report.el:.3e}",
                                             "map residual": f"{report.map:.3e}",
                                             "comparable": report.comparability})
    return EXIT_OK


def cmd_mather(session: AnalysisSession, out_dir, args) -> int:
    solver = session.solver
    ms = solver.mather_set(args.alpha, args.depth)
    residual = solver.hull_relation_residual(ms.hull)
    write_json(ms.to_archive(), out_dir / "mather.json")
    write_csv(pd.DataFrame({"xi": ms.hull.xi, "phi": ms.hull.phi, "eta": ms.hull.eta}), out_dir / HULL_CSV)
    deepest = ms.orbits[-1]
    write_csv(pd.DataFrame({"n": np.arange(deepest.q + 1), "x": deepest.x,
                            "r": np.append(deepest.r, deepest.r[0])}), out_dir / ORBIT_CSV)
    results = {"alpha": ms.alpha, "convergents": ms.convergents, "gaps": ms.gaps, "largest_gap": ms.largest_gap,
               "classification": ms.classification, "hull_relation_residual": residual,
               "violations": ms.hull.violations, "max_jump": ms.hull.max_jump}
    write_summary(out_dir, "mather", session.config, results)
    _banner(f"Mather set alpha={args.alpha}", {"convergents": len(ms.convergents),
                                               "largest gap": f"{ms.largest_gap:.4g}",
                                               "classification": ms.classification,
                                               "hull residual": f"{residual:.3e}"})
    return EXIT_OK


def cmd_rl_check(session: AnalysisSession, out_dir, args) -> int:
    lambdas = np.geomspace(args.lambda_min, args.lambda_max, args.n_lambda)
    if args.trajectory_r0 is not None:
        integral = trajectory_integral(session.flow, args.trajectory_r0, args.theta0, lambdas)
    else:
        integral = OscillatoryIntegral(
            poly=polynomial_q([MonomialTerm(i=1, j=0, a0=1.0)]),
            degree=1,
            lambdas=lambdas,
            beta=lambda s: args.beta_amplitude * np.sin(2.0 * np.pi * np.asarray(s)),
            beta_dot=lambda s: args.beta_amplitude * 2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(s)),
        )
    oscillatory_decay(integral)
    bound = rl_constant_bound(integral)
    write_csv(pd.DataFrame({"lambda": lambdas, "integral": integral.integrals, "sup_integral": integral.sup_integrals}),
              out_dir / "rl_check.csv")
    results = {"fitted_exponent": integral.fitted_exponent, "c_rl_hat": integral.c_rl_hat, "c_rl_bound": bound,
               "lambdas": lambdas}
    write_summary(out_dir, "rl-check", session.config, results)
    _banner("Oscillatory decay", {"fitted exponent": f"{integral.fitted_exponent:.4f}",
                                  "max lambda |I|": f"{integral.c_rl_hat:.4g}", "a priori bound": f"{bound:.4g}"})
    return EXIT_OK


def cmd_verify(session: AnalysisSession, out_dir, args) -> int:
    checks = run_suite(session)
    passed = suite_passed(checks)
    write_summary(out_dir, "verify", session.config, {"checks": [c.to_dict() for c in checks], "pass": passed})
    _banner("Verification")
    for check in checks:
        print(f"  {'PASS' if check.passed else 'FAIL'}  {check.name}")
    failed = sum(not c.passed for c in checks)
    print(f"\n{len(checks) - failed}/{len(checks)} checks passed")
    print(f"{'='*60}\n")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_report(session: AnalysisSession, out_dir, args) -> int:
    paths = write_plot_scripts(out_dir)
    _banner("Plot scripts", {path.name: str(path) for path in paths})
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "twist-scan": cmd_twist_scan,
    "exactness": cmd_exactness,
    "window": cmd_window,
    "orbit": cmd_orbit,
    "mather": cmd_mather,
    "rl-check": cmd_rl_check,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = ToolkitArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON run configuration (default: built-in, p = 0)")
    common.add_argument("--jobs", type=int, default=1, help="Worker processes for grid scans (default: 1)")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = ToolkitArgumentParser(
        prog="vortex-mather",
        description="Poincare map, generating function and Aubry-Mather orbits of a perturbed point vortex",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ToolkitArgumentParser)

    p = sub.add_parser("simulate", parents=[common], help="Integrate one trajectory")
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--dense", action="store_true", help="Keep every accepted step")

    for name, help_text, r_min, r_max, n_r in (
        ("twist-scan", "dG/dr0 over an (r0, theta0) grid", 10.0, 1000.0, 3),
        ("exactness", "Finite-difference check of dS = f(r1) dtheta1 - f(r0) dtheta0", 5.0, 100.0, 3),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--r-min", type=float, default=r_min)
        p.add_argument("--r-max", type=float, default=r_max)
        p.add_argument("--n-r", type=int, default=n_r)
        p.add_argument("--n-theta", type=int, default=8)
        if name == "exactness":
            p.add_argument("--fd-step", type=float, default=1e-3)
            p.add_argument("--richardson", action="store_true")

    sub.add_parser("window", parents=[common], help="Working strip and admissible rotation threshold")

    p = sub.add_parser("orbit", parents=[common], help="(s, q)-periodic minimal orbit")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--q", type=int, required=True)

    p = sub.add_parser("mather", parents=[common], help="Mather set from continued-fraction convergents")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--depth", type=int, default=6)

    p = sub.add_parser("rl-check", parents=[common], help="Oscillatory integral decay")
    p.add_argument("--lambda-min", type=float, default=1e2)
    p.add_argument("--lambda-max", type=float, default=1e4)
    p.add_argument("--n-lambda", type=int, default=9)
    p.add_argument("--beta-amplitude", type=float, default=0.1)
    p.add_argument("--trajectory-r0", type=float, default=None, help="Take q and beta from a trajectory")
    p.add_argument("--theta0", type=float, default=0.0)

    sub.add_parser("verify", parents=[common], help="Run the full invariant suite")
    sub.add_parser("report", parents=[common], help="Write gnuplot scripts for the CSV outputs")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config)
        out_dir = resolve_output_dir(config)
        session = AnalysisSession(config, jobs=args.jobs)
        return COMMANDS[args.command](session, out_dir, args)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DOMAIN_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
