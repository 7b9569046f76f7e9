"""Command-line interface.

Subcommands
-----------
analyze    closed-form lead distribution, revenue rates, and verdict
simulate   seeded Monte Carlo run of the lead state machine
threshold  smallest profitable attacker share for a fixed intensity
sweep      threshold table over a tenure x difficulty grid
verify     self-check suites (closed form vs truncated-chain oracle,
           simulation vs closed form)
fix        before/after comparison of the multi-header mitigation

Mining parameters are given either directly (``--alpha``, ``--lambda``,
``--gamma``) or through the protocol triple ``--tenure --difficulty
--hashrate`` from which the round intensity is derived; giving both forms
is refused as ambiguous.  Every subcommand accepts ``--format
human|json|csv`` (default human) and ``--output PATH`` (default stdout).
JSON output is a single envelope object ``{command, version, inputs,
results}`` whose echoed inputs are sufficient to reproduce the run.

CSV column orders (fixed per subcommand):

analyze    alpha,lambda,gamma,q0,q1,rho,r_a,r_b,ratio,profitable
simulate   alpha,lambda,gamma,rounds,seed,accounting,variant,rounds_run,
           revenue_a,revenue_b,ratio,ratio_stderr,occ_0,...,occ_N
threshold  lambda,gamma,tol,alpha_star,bracket_low,bracket_high,evaluations
sweep      tenure,difficulty,lambda,alpha_star
           (plus mc_alpha_low,mc_ratio_low,mc_alpha_high,mc_ratio_high,
           mc_consistent when --mc-check is given)
verify     suite,cases,failures,worst
fix        alpha,multiplier,lambda_before,gamma_before,ratio_before,
           profitable_before,lambda_after,gamma_after,ratio_after,
           profitable_after,sim_ratio_before,sim_ratio_after

Exit codes: 0 success, 2 invalid arguments or parameters, 3 model error
(divergent lead / no convergence), 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import DivergentLead, InvalidConfig, InvalidParam, NoConvergence
from .markov import (
    q_at,
    revenue_rates,
    revenue_ratio,
    stationary,
    stationary_truncated_oracle,
)
from .probmodel import (
    MiningParams,
    ProtocolParams,
    TransitionProbs,
    apply_fix,
    derive_transition_probs,
    lambda_from_protocol,
)
from .simulator import ACCOUNTING_MODES, VARIANTS, SimConfig, compare_to_analytic, simulate
from .sweep import SweepGrid, profit_threshold, resistance_sweep

__all__ = ["run", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_VERIFY = 4

VERIFY_DEFAULT_CASES = 1000
VERIFY_DEFAULT_SEED = 1234
VERIFY_ORACLE_TOL = 1e-10
VERIFY_MC_ROUNDS = 1_000_000
VERIFY_MAX_ABS_Z = 4.0
VERIFY_MAX_OCC_LINF = 0.008

MC_CHECK_ALPHA_OFFSET = 0.02


# ---------------------------------------------------------------------------
# parameter resolution

def _resolve_params(args: argparse.Namespace) -> tuple[MiningParams, dict[str, Any]]:
    """Build MiningParams from direct or protocol-triple flags."""
    triple = (args.tenure, args.difficulty, args.hashrate)
    names = ("--tenure", "--difficulty", "--hashrate")
    given = [value is not None for value in triple]
    if args.lam is not None and any(given):
        raise InvalidParam("give either --lambda or the protocol triple "
                           "(--tenure --difficulty --hashrate), not both")
    inputs: dict[str, Any] = {"alpha": args.alpha}
    if args.lam is not None:
        lam = args.lam
    else:
        if not all(given):
            missing = [n for n, g in zip(names, given) if not g]
            raise InvalidParam("lambda unspecified: give --lambda or the full "
                               f"protocol triple (missing {', '.join(missing)})")
        proto = ProtocolParams(tenure=args.tenure, difficulty=args.difficulty,
                               hashrate=args.hashrate)
        lam = lambda_from_protocol(proto)
        inputs["protocol"] = {"tenure": proto.tenure, "difficulty": proto.difficulty,
                              "hashrate": proto.hashrate}
    inputs["lambda"] = lam
    inputs["gamma"] = args.gamma
    return MiningParams(alpha=args.alpha, lam=lam, gamma=args.gamma), inputs


# ---------------------------------------------------------------------------
# subcommand handlers: return (inputs, results, exit_code)

def _cmd_analyze(args: argparse.Namespace) -> tuple[dict, dict, int]:
    params, inputs = _resolve_params(args)
    probs = derive_transition_probs(params)
    dist = stationary(probs)
    r_a, r_b = revenue_rates(dist, probs, params.gamma)
    ratio = revenue_ratio(dist, params.gamma)
    results = {
        "q0": dist.q0,
        "q1": dist.q1,
        "rho": dist.rho,
        "r_a": r_a,
        "r_b": r_b,
        "ratio": ratio,
        "profitable": ratio > params.alpha,
    }
    return inputs, results, EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> tuple[dict, dict, int]:
    params, inputs = _resolve_params(args)
    inputs.update(rounds=args.rounds, seed=args.seed,
                  accounting=args.accounting, variant=args.variant)
    config = SimConfig(params=params, rounds=args.rounds, seed=args.seed,
                       accounting=args.accounting, variant=args.variant)
    result = simulate(config)
    results = {
        "rounds_run": result.rounds_run,
        "revenue_a": result.revenue_a,
        "revenue_b": result.revenue_b,
        "ratio": result.ratio,
        "ratio_stderr": result.ratio_stderr,
        "occupancy": list(result.occupancy),
    }
    return inputs, results, EXIT_OK


def _cmd_threshold(args: argparse.Namespace) -> tuple[dict, dict, int]:
    inputs = {"lambda": args.lam, "gamma": args.gamma, "tol": args.tol}
    found = profit_threshold(args.lam, args.gamma, args.tol)
    results = {
        "alpha_star": found.alpha_star,
        "bracket": list(found.bracket),
        "evaluations": found.evaluations,
    }
    return inputs, results, EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> tuple[dict, dict, int]:
    grid = SweepGrid(tenures=tuple(args.tenures), difficulties=tuple(args.difficulties),
                     hashrate=args.hashrate, gamma=args.gamma)
    inputs: dict[str, Any] = {
        "tenures": list(grid.tenures),
        "difficulties": list(grid.difficulties),
        "hashrate": grid.hashrate,
        "gamma": grid.gamma,
    }
    if args.mc_check is not None:
        inputs.update(mc_check=args.mc_check, mc_seed=args.mc_seed)
    rows = []
    for cell in resistance_sweep(grid):
        row: dict[str, Any] = {
            "tenure": cell.tenure,
            "difficulty": cell.difficulty,
            "lambda": cell.lam,
            "alpha_star": cell.alpha_star,
        }
        if args.mc_check is not None:
            row.update(_mc_check_cell(cell.lam, cell.alpha_star, grid.gamma,
                                      args.mc_check, args.mc_seed))
        rows.append(row)
    return inputs, {"cells": rows}, EXIT_OK


def _mc_check_cell(lam: float, alpha_star: float, gamma: float,
                   rounds: int, seed: int) -> dict[str, Any]:
    """Simulate just below and above the analytic threshold of one cell.

    Consistency means the share sits at or below the power share at the
    lower probe and at or above it at the upper probe, within three
    standard errors each.
    """
    if not (0.0 < alpha_star < 0.5):
        return {"mc_alpha_low": None, "mc_ratio_low": None,
                "mc_alpha_high": None, "mc_ratio_high": None, "mc_consistent": None}
    alpha_low = max(alpha_star - MC_CHECK_ALPHA_OFFSET, 1e-3)
    alpha_high = min(alpha_star + MC_CHECK_ALPHA_OFFSET, 0.499)
    probes = {}
    consistent = True
    for label, alpha, sign in (("low", alpha_low, -1.0), ("high", alpha_high, 1.0)):
        config = SimConfig(params=MiningParams(alpha=alpha, lam=lam, gamma=gamma),
                           rounds=rounds, seed=seed)
        result = simulate(config)
        probes[f"mc_alpha_{label}"] = alpha
        probes[f"mc_ratio_{label}"] = result.ratio
        consistent &= sign * (result.ratio - alpha) >= -3.0 * result.ratio_stderr
    probes["mc_consistent"] = bool(consistent)
    return probes


def _cmd_fix(args: argparse.Namespace) -> tuple[dict, dict, int]:
    base = MiningParams(alpha=args.alpha, lam=args.lam, gamma=0.5)
    fixed = apply_fix(base, args.multiplier)
    inputs: dict[str, Any] = {"alpha": args.alpha, "lambda": args.lam,
                              "multiplier": args.multiplier}

    def describe(params: MiningParams) -> dict[str, Any]:
        dist = stationary(derive_transition_probs(params))
        ratio = revenue_ratio(dist, params.gamma)
        return {"lambda": params.lam, "gamma": params.gamma,
                "ratio": ratio, "profitable": ratio > params.alpha}

    before = describe(base)
    after = describe(fixed)
    if args.rounds is not None:
        inputs.update(rounds=args.rounds, seed=args.seed)
        for block, params in ((before, base), (after, fixed)):
            config = SimConfig(params=params, rounds=args.rounds, seed=args.seed)
            block["sim_ratio"] = simulate(config).ratio
    results = {"multiplier": args.multiplier, "before": before, "after": after}
    return inputs, results, EXIT_OK


# ---------------------------------------------------------------------------
# verify suites

def _random_transition_probs(rng: np.random.Generator,
                             rho_max: float = 0.9) -> TransitionProbs:
    rho = rng.uniform(0.0, rho_max)
    # p2 + p3 = p3 * (1 + rho) must leave room for p1
    p3 = rng.uniform(0.05, min(0.95, 1.0 / (1.0 + rho)))
    p2 = rho * p3
    p1 = rng.uniform(0.0, 1.0 - p2 - p3)
    return TransitionProbs(p0=rng.uniform(0.0, 1.0), p1=p1, p2=p2, p3=p3)


def _oracle_suite(cases: int, seed: int) -> dict[str, Any]:
    """Closed-form stationary masses vs the truncated power-iteration oracle."""
    rng = np.random.default_rng(seed)
    failures = 0
    worst = 0.0
    for _ in range(cases):
        probs = _random_transition_probs(rng)
        dist = stationary(probs)
        if dist.rho > 1e-6:
            K = min(400, max(8, math.ceil(math.log(1e-13) / math.log(dist.rho))))
        else:
            K = 8
        vector = stationary_truncated_oracle(probs, K)
        linf = float(max(abs(vector[k] - q_at(dist, k)) for k in range(K + 1)))
        worst = max(worst, linf)
        if linf > VERIFY_ORACLE_TOL:
            failures += 1
    return {"suite": "stationary-oracle", "cases": cases, "failures": failures,
            "worst": worst, "tolerance": VERIFY_ORACLE_TOL}


def _mc_suite(seed: int) -> dict[str, Any]:
    """Paper-accounting simulation vs the closed-form revenue share."""
    configs = [(alpha, lam, gamma)
               for alpha in (0.1, 0.3) for lam in (0.5, 2.0) for gamma in (0.0, 0.5)]
    failures = 0
    worst_z = 0.0
    worst_occ = 0.0
    for index, (alpha, lam, gamma) in enumerate(configs):
        config = SimConfig(params=MiningParams(alpha=alpha, lam=lam, gamma=gamma),
                           rounds=VERIFY_MC_ROUNDS, seed=seed + index)
        report = compare_to_analytic(config)
        worst_z = max(worst_z, abs(report.z_score))
        worst_occ = max(worst_occ, float(report.occupancy_linf))
        if (abs(report.z_score) > VERIFY_MAX_ABS_Z
                or report.occupancy_linf > VERIFY_MAX_OCC_LINF):
            failures += 1
    return {"suite": "simulation-analytic", "cases": len(configs), "failures": failures,
            "worst": worst_z, "worst_occupancy_linf": worst_occ,
            "max_abs_z": VERIFY_MAX_ABS_Z, "max_occupancy_linf": VERIFY_MAX_OCC_LINF}


def _cmd_verify(args: argparse.Namespace) -> tuple[dict, dict, int]:
    if args.cases < 1:
        raise InvalidParam(f"--cases must be at least 1, got {args.cases}")
    suites = [_oracle_suite(args.cases, args.seed), _mc_suite(args.seed)]
    failures = sum(suite["failures"] for suite in suites)
    results = {"suites": suites, "passed": failures == 0}
    return ({"cases": args.cases, "seed": args.seed}, results,
            EXIT_OK if failures == 0 else EXIT_VERIFY)


# ---------------------------------------------------------------------------
# rendering

def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _kv_lines(mapping: dict[str, Any], indent: str = "  ") -> list[str]:
    lines = []
    for key, value in mapping.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.extend(_kv_lines(value, indent + "  "))
        elif isinstance(value, list) and value and not isinstance(value[0], dict):
            lines.append(f"{indent}{key} = {', '.join(_fmt(v) for v in value)}")
        else:
            lines.append(f"{indent}{key} = {_fmt(value)}")
    return lines


def _table_lines(header: list[str], rows: list[list[Any]]) -> list[str]:
    cells = [header] + [[_fmt(v) if v is not None else "-" for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
            for row in cells]


def _human(command: str, inputs: dict, results: dict) -> str:
    lines = [f"command: {command}", "inputs:"]
    lines.extend(_kv_lines(inputs))
    if command == "sweep":
        lines.append("results:")
        rows = results["cells"]
        header = list(rows[0].keys())
        lines.extend("  " + line
                     for line in _table_lines(header, [[r[k] for k in header] for r in rows]))
    elif command == "verify":
        lines.append("results:")
        for suite in results["suites"]:
            detail = ", ".join(f"{k}={_fmt(v)}" for k, v in suite.items() if k != "suite")
            lines.append(f"  {suite['suite']}: {detail}")
        lines.append(f"  verdict = {'PASS' if results['passed'] else 'FAIL'}")
    else:
        lines.append("results:")
        lines.extend(_kv_lines(results))
    return "\n".join(lines) + "\n"


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def _csv_payload(command: str, inputs: dict, results: dict) -> tuple[list[str], list[list]]:
    if command == "analyze":
        header = ["alpha", "lambda", "gamma",
                  "q0", "q1", "rho", "r_a", "r_b", "ratio", "profitable"]
        row = [inputs["alpha"], inputs["lambda"], inputs["gamma"]] + \
              [results[k] for k in header[3:]]
        return header, [row]
    if command == "simulate":
        occupancy = results["occupancy"]
        header = (["alpha", "lambda", "gamma", "rounds", "seed", "accounting", "variant",
                   "rounds_run", "revenue_a", "revenue_b", "ratio", "ratio_stderr"]
                  + [f"occ_{k}" for k in range(len(occupancy))])
        row = [inputs[k] for k in ("alpha", "lambda", "gamma", "rounds", "seed",
                                   "accounting", "variant")]
        row += [results[k] for k in ("rounds_run", "revenue_a", "revenue_b",
                                     "ratio", "ratio_stderr")]
        row += occupancy
        return header, [row]
    if command == "threshold":
        header = ["lambda", "gamma", "tol", "alpha_star",
                  "bracket_low", "bracket_high", "evaluations"]
        row = [inputs["lambda"], inputs["gamma"], inputs["tol"], results["alpha_star"],
               results["bracket"][0], results["bracket"][1], results["evaluations"]]
        return header, [row]
    if command == "sweep":
        rows = results["cells"]
        header = list(rows[0].keys())
        return header, [[row[k] for k in header] for row in rows]
    if command == "verify":
        header = ["suite", "cases", "failures", "worst"]
        return header, [[suite[k] for k in header] for suite in results["suites"]]
    if command == "fix":
        header = ["alpha", "multiplier",
                  "lambda_before", "gamma_before", "ratio_before", "profitable_before",
                  "lambda_after", "gamma_after", "ratio_after", "profitable_after",
                  "sim_ratio_before", "sim_ratio_after"]
        before, after = results["before"], results["after"]
        row = [inputs["alpha"], results["multiplier"],
               before["lambda"], before["gamma"], before["ratio"], before["profitable"],
               after["lambda"], after["gamma"], after["ratio"], after["profitable"],
               before.get("sim_ratio"), after.get("sim_ratio")]
        return header, [row]
    raise ValueError(f"no CSV layout for command {command!r}")


def _render(command: str, inputs: dict, results: dict, fmt: str) -> str:
    if fmt == "json":
        envelope = {"command": command, "version": __version__,
                    "inputs": inputs, "results": results}
        return json.dumps(envelope, indent=2) + "\n"
    if fmt == "csv":
        header, rows = _csv_payload(command, inputs, results)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([[_csv_cell(v) for v in row] for row in rows])
        return buffer.getvalue()
    return _human(command, inputs, results)


# ---------------------------------------------------------------------------
# parser

def _float_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_output_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=("human", "json", "csv"), default="human",
                     help="output format (default: human)")
    sub.add_argument("--output", default=None, metavar="PATH",
                     help="write output to PATH instead of stdout")


def _add_model_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha", type=float, required=True,
                     help="attacker's share of total mining power, in (0, 1)")
    sub.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="expected headers per round (exclusive with the protocol triple)")
    sub.add_argument("--gamma", type=float, default=0.5,
                     help="tie-break probability for the withheld branch (default: 0.5)")
    sub.add_argument("--tenure", type=float, default=None, help="leader tenure, seconds")
    sub.add_argument("--difficulty", type=float, default=None,
                     help="expected hashes per header solution")
    sub.add_argument("--hashrate", type=float, default=None,
                     help="network hashrate, hashes per second")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfishlab",
        description="Block-withholding attack analysis for a tenure-based "
                    "bilayer Nakamoto consensus protocol.")
    parser.add_argument("--version", action="version", version=f"selfishlab {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", help="closed-form analysis")
    _add_model_args(analyze)
    _add_output_args(analyze)
    analyze.set_defaults(handler=_cmd_analyze)

    sim = commands.add_parser("simulate", help="seeded Monte Carlo run")
    _add_model_args(sim)
    sim.add_argument("--rounds", type=int, required=True, help="number of rounds")
    sim.add_argument("--seed", type=int, required=True, help="64-bit root seed")
    sim.add_argument("--accounting", choices=ACCOUNTING_MODES, default="paper",
                     help="award rules (default: paper)")
    sim.add_argument("--variant", choices=VARIANTS, default="decrement",
                     help="lead-2 resolution semantics (default: decrement)")
    _add_output_args(sim)
    sim.set_defaults(handler=_cmd_simulate)

    threshold = commands.add_parser("threshold", help="smallest profitable attacker share")
    threshold.add_argument("--lambda", dest="lam", type=float, required=True,
                           help="expected headers per round")
    threshold.add_argument("--gamma", type=float, default=0.5,
                           help="tie-break probability (default: 0.5)")
    threshold.add_argument("--tol", type=float, default=1e-6,
                           help="bisection bracket width (default: 1e-6)")
    _add_output_args(threshold)
    threshold.set_defaults(handler=_cmd_threshold)

    sweep = commands.add_parser("sweep", help="threshold table over a protocol grid")
    sweep.add_argument("--tenures", type=_float_list, required=True,
                       help="comma-separated tenure lengths, seconds")
    sweep.add_argument("--difficulties", type=_float_list, required=True,
                       help="comma-separated header difficulties, hashes")
    sweep.add_argument("--hashrate", type=float, required=True,
                       help="network hashrate, hashes per second")
    sweep.add_argument("--gamma", type=float, default=0.5,
                       help="tie-break probability (default: 0.5)")
    sweep.add_argument("--mc-check", type=int, default=None, metavar="ROUNDS",
                       help="cross-check each nondegenerate cell by simulating "
                            "ROUNDS rounds just below and above its threshold")
    sweep.add_argument("--mc-seed", type=int, default=42,
                       help="seed for --mc-check simulations (default: 42)")
    _add_output_args(sweep)
    sweep.set_defaults(handler=_cmd_sweep)

    verify = commands.add_parser("verify", help="run the self-check suites")
    verify.add_argument("--cases", type=int, default=VERIFY_DEFAULT_CASES,
                        help=f"random cases for the oracle suite "
                             f"(default: {VERIFY_DEFAULT_CASES})")
    verify.add_argument("--seed", type=int, default=VERIFY_DEFAULT_SEED,
                        help=f"seed for both suites (default: {VERIFY_DEFAULT_SEED})")
    _add_output_args(verify)
    verify.set_defaults(handler=_cmd_verify)

    fix = commands.add_parser("fix", help="evaluate the multi-header mitigation")
    fix.add_argument("--alpha", type=float, required=True,
                     help="attacker's share of total mining power")
    fix.add_argument("--lambda", dest="lam", type=float, required=True,
                     help="expected headers per round before the fix")
    fix.add_argument("--multiplier", type=float, required=True,
                     help="header multiplier applied by the fix, >= 1")
    fix.add_argument("--rounds", type=int, default=None,
                     help="also simulate both settings for this many rounds")
    fix.add_argument("--seed", type=int, default=42,
                     help="seed for the optional simulations (default: 42)")
    _add_output_args(fix)
    fix.set_defaults(handler=_cmd_fix)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, execute one subcommand, and return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        inputs, results, code = args.handler(args)
    except (InvalidParam, InvalidConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergentLead, NoConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL

    text = _render(args.command, inputs, results, args.format)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as handle:
                handle.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())
