"""``viakern`` command line.

Exit codes: 0 clean or sustainable, 1 a substantive negative finding
(threshold exceedance, empty kernel, state outside the kernel), 2 usage or
input errors.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ageclass as ac
from .io import (
    ParseError,
    fmt,
    load_species,
    parse_series,
    svg_grid,
    svg_series,
    write_grid,
    write_report,
    write_text,
    write_trajectory,
    write_tsv,
)
from .order import Classification, IndicatorSet, MonotoneDynamics, check_indicator_directions, check_monotonicity
from .toy import ToyError, parse_toy
from .viability import (
    DEFAULT_HORIZON,
    Conclusion,
    Emptiness,
    KernelQueryConfig,
    emptiness_test_preservation,
    emptiness_test_production,
    estimate_membership,
    kernel_slice_grid,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2
SPOT_CHECK_SAMPLES = 200


class UsageError(ValueError):
    pass


def seed() -> int:
    raw = os.environ.get("VIAKERN_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"VIAKERN_SEED must be an integer, got {raw!r}") from None


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _out(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- problem setup -----------------------------------------------------------

@dataclass
class Problem:
    g: MonotoneDynamics
    d: IndicatorSet
    cfg: KernelQueryConfig
    sharp_cfg: KernelQueryConfig | None
    steady_flat: np.ndarray | None
    L: float | None
    params: object = None


def _species(args):
    if not args.species_scalars or not args.species_ages:
        raise UsageError("--species-scalars and --species-ages are required")
    return load_species(args.species_scalars, args.species_ages)


def _lambda_token(params, token: str) -> float:
    named = {"lambda_min": params.lambda_min, "min": params.lambda_min,
             "lambda_max": params.lambda_max, "max": params.lambda_max}
    if token in named:
        return named[token]
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"cannot read effort {token!r}") from None


def _species_state(params, text: str | None) -> np.ndarray:
    if text is None:
        return ac.species_equilibrium(params, params.lambda_min)
    if text.startswith("equilibrium@"):
        return ac.species_equilibrium(params, _lambda_token(params, text.split("@", 1)[1]))
    x = np.array(_floats(text, "state"))
    if x.size != ac.state_dim(params):
        raise UsageError(f"state needs {ac.state_dim(params)} values, got {x.size}")
    if np.any(x < 0):
        raise UsageError("state values must be nonnegative")
    return x


def _is_toy(args) -> bool:
    return bool(getattr(args, "toy_dynamics", None))


def _species_problem(args) -> Problem:
    p = _species(args)
    if args.set == "yield":
        d = ac.make_yield_set(p, ac.to_grams(args.ymin), ac.to_grams(args.blim))
    else:
        flim = args.flim if args.flim is not None else ac.fishing_mortality(p, p.lambda_max)
        d = ac.make_protect_set(p, ac.to_grams(args.blim), flim)
    cfg = ac.kernel_config(p, "flat", args.horizon)
    sharp = ac.kernel_config(p, "sharp", args.horizon)
    rep = ac.thresholds(p)
    return Problem(ac.species_dynamics(p), d, cfg, sharp, cfg.steady_state, rep.phi_g, p)


def _toy_cfg(horizon: int, steady: str | None, L: float | None) -> tuple[KernelQueryConfig, np.ndarray | None]:
    xbar = np.array(_floats(steady, "steady state")) if steady else None
    if L is not None and not 0 <= L < 1:
        raise UsageError("toy contraction constant must lie in [0, 1)")
    return KernelQueryConfig(horizon=horizon, steady_state=xbar, contraction_constant=L), xbar


def _toy_problem(args) -> Problem:
    if not args.toy_control:
        raise UsageError("--toy-control LO,HI is required for toy systems")
    bounds = _floats(args.toy_control, "--toy-control")
    if len(bounds) != 2:
        raise UsageError("--toy-control takes exactly LO,HI")
    toy = parse_toy(args.toy_dynamics, (bounds[0], bounds[1]), args.toy_constraint or [])
    cfg, xbar = _toy_cfg(args.horizon, args.toy_steady, args.toy_contraction)
    sharp, _ = _toy_cfg(args.horizon, args.toy_steady_sharp, args.toy_contraction_sharp)
    for given in (xbar,):
        if given is not None and given.size != toy.dim:
            raise UsageError("steady state dimension does not match the dynamics")
    return Problem(toy.dynamics, toy.constraints, cfg, sharp, xbar, args.toy_contraction)


def _problem(args) -> Problem:
    prob = _toy_problem(args) if _is_toy(args) else _species_problem(args)
    if prob.d.classification is Classification.MIXED:
        raise UsageError("constraint set mixes production and preservation indicators")
    return prob


def _spot_check(prob: Problem, box: tuple[np.ndarray, np.ndarray]) -> None:
    """Seeded falsification of the monotonicity hypotheses on toy systems."""
    s = seed()
    report = check_monotonicity(prob.g, SPOT_CHECK_SAMPLES, s, box)
    bad = check_indicator_directions(prob.d, prob.g.bounds, SPOT_CHECK_SAMPLES, s, box)
    if not report.ok or bad:
        raise UsageError(
            f"monotonicity spot check failed ({report.total} dynamics, {len(bad)} constraint violations)"
        )


def _x0(args, prob: Problem) -> np.ndarray:
    if prob.params is not None:
        return _species_state(prob.params, args.x0)
    if not args.x0:
        raise UsageError("--x0 is required for toy systems")
    x = np.array(_floats(args.x0, "--x0"))
    if x.size != prob.g.state_dim:
        raise UsageError(f"--x0 needs {prob.g.state_dim} values")
    return x


# -- commands ----------------------------------------------------------------

def cmd_thresholds(args) -> int:
    p = _species(args)
    rep = ac.thresholds(p)
    out = _out(args)
    write_text(out / "thresholds.csv", write_report(rep))
    print(f"species: {rep.species or '(unnamed)'}")
    if rep.convention:
        print(f"two-sex convention: {rep.convention}")
    print(f"max sustainable yield: {round(rep.max_yield)} t ({fmt(rep.max_yield)})")
    print(f"max sustainable spawning biomass: {round(rep.max_ssb)} t ({fmt(rep.max_ssb)})")
    print(f"phi_G: {fmt(rep.phi_g)}" + ("" if rep.contraction_valid else " (not a contraction)"))
    if isinstance(p, ac.TwoSexParams):
        rows = [
            [r.convention, round(r.max_yield), round(r.max_ssb), r.max_yield, r.max_ssb, r.phi_g]
            for r in ac.convention_table(p)
        ]
        header = ["convention", "max_yield_tons", "max_ssb_tons", "max_yield_6g", "max_ssb_6g", "phi_g"]
        write_text(out / "conventions.tsv", write_tsv(header, rows))
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _species(args)
    if args.steps < 0:
        raise UsageError("--steps must be nonnegative")
    if args.schedule is not None:
        lambdas = _floats(args.schedule, "--schedule")
        if len(lambdas) < max(args.steps, 1):
            raise UsageError("--schedule needs at least --steps values")
    else:
        lambdas = [_lambda_token(p, args.effort)]
    for lam in sorted(set(lambdas)):
        if not p.lambda_min <= lam <= p.lambda_max:
            print(f"warning: effort {fmt(lam)} outside [{fmt(p.lambda_min)}, {fmt(p.lambda_max)}]; "
                  "simulating anyway", file=sys.stderr)
    N = _species_state(p, args.x0)
    effort = [lambdas[min(t, len(lambdas) - 1)] for t in range(args.steps + 1)]
    states = [N]
    for t in range(args.steps):
        states.append(ac.species_step(p, states[-1], effort[t]))
    ssb = [ac.to_tons(ac.species_ssb(p, n)) for n in states]
    yld = [ac.to_tons(ac.species_yield(p, n, lam)) for n, lam in zip(states, effort)]
    write_text(_out(args) / "trajectory.tsv", write_trajectory(effort, states, ssb, yld))
    print(f"step 0: ssb {round(ssb[0])} t, yield {round(yld[0])} t")
    if args.steps:
        print(f"step {args.steps}: ssb {round(ssb[-1])} t, yield {round(yld[-1])} t")
    return EXIT_OK


def cmd_check_series(args) -> int:
    p = _species(args)
    series = parse_series(Path(args.series).read_text(encoding="utf-8"), args.kind)
    rep = ac.thresholds(p)
    limit = rep.max_yield if args.kind == "landings" else rep.max_ssb
    flagged = [(y, v) for y, v in series if v > limit]
    rows = [[y, v, limit, v > limit] for y, v in series]
    out = _out(args)
    write_text(out / "audit.tsv", write_tsv(["year", "value_tons", "threshold_tons", "exceeds"], rows))
    if args.svg:
        write_text(out / "audit.svg", svg_series(series, limit, f"{rep.species} {args.kind}"))
    print(f"threshold ({args.kind}): {round(limit)} t")
    print(f"{len(flagged)} of {len(series)} years exceed the threshold")
    for y, v in flagged:
        print(f"  {y}: {fmt(v)} t")
    if flagged:
        print("exceeding years are not sustainable: the kernel at that level is empty")
        return EXIT_NEGATIVE
    print("note: cannot conclude non-viability; staying below the threshold is not proof of sustainability")
    return EXIT_OK


def _emptiness(prob: Problem) -> tuple[int, list[tuple[str, str]]]:
    if prob.steady_flat is None or prob.L is None:
        raise UsageError("emptiness mode needs a steady state and a contraction constant")
    if prob.d.classification is Classification.PRODUCTION:
        res = emptiness_test_production(prob.d, prob.steady_flat, prob.g.bounds.upper, prob.L)
    else:
        res = emptiness_test_preservation(prob.d, prob.steady_flat, prob.g.bounds.lower, prob.L)
    rows = [("mode", "emptiness"), ("classification", prob.d.classification.value),
            ("verdict", res.verdict.value), ("contraction_constant", fmt(prob.L))]
    for ind, v in zip(prob.d.indicators, res.indicator_values):
        rows.append((f"indicator_{ind.name}", fmt(v)))
        rows.append((f"threshold_{ind.name}", fmt(ind.threshold)))
    rows.append(("failing", ";".join(res.failing)))
    if res.witness is not None:
        rows.append(("witness_l1", fmt(float(np.sum(res.witness)))))
    print(f"emptiness: {res.verdict.value}")
    if res.failing:
        print("failing indicators: " + ", ".join(res.failing))
    if res.witness is not None:
        print("witness: steady state of the upper dynamics")
    return (EXIT_NEGATIVE if res.verdict is Emptiness.KERNEL_EMPTY else EXIT_OK), rows


def _membership(prob: Problem, x0: np.ndarray) -> tuple[int, list[tuple[str, str]]]:
    v = estimate_membership(prob.g, prob.d, x0, prob.cfg, prob.sharp_cfg)
    rows = [("mode", "membership"), ("classification", prob.d.classification.value),
            ("lower", str(v.lower_member).lower()),
            ("upper", "undetermined" if v.upper_member is None else str(v.upper_member).lower()),
            ("conclusion", v.conclusion.value)]
    for name, part in v.parts.items():
        rows.append((f"{name}_outcome", part.outcome.value))
        rows.append((f"{name}_step", str(part.step)))
        rows.append((f"{name}_certificate", part.certificate or ""))
    print(f"lower estimate member: {rows[2][1]}")
    print(f"upper estimate member: {rows[3][1]}")
    print(f"conclusion: {v.conclusion.value}")
    return (EXIT_NEGATIVE if v.conclusion is Conclusion.NOT_IN_KERNEL else EXIT_OK), rows


def _toy_box(prob: Problem, x0: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    ref = [1.0]
    for v in (x0, prob.steady_flat):
        if v is not None:
            ref.append(float(np.max(v)))
    hi = 2.0 * max(ref)
    return np.zeros(prob.g.state_dim), np.full(prob.g.state_dim, hi)


def cmd_kernel_test(args) -> int:
    prob = _problem(args)
    x0 = None if args.emptiness else _x0(args, prob)
    if prob.params is None:
        _spot_check(prob, _toy_box(prob, x0))
    code, rows = _emptiness(prob) if args.emptiness else _membership(prob, x0)
    write_text(_out(args) / "kernel_test.csv", "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows))
    return code


def cmd_kernel_slice(args) -> int:
    if args.resolution < 2:
        raise UsageError("--resolution must be at least 2")
    prob = _problem(args)
    box = _floats(args.box, "--box")
    if len(box) not in (2, 4):
        raise UsageError("--box takes LO,HI or LO,HI,LO,HI")
    ranges = [(box[i], box[i + 1]) for i in range(0, len(box), 2)]
    if any(lo > hi or lo < 0 for lo, hi in ranges):
        raise UsageError("--box ranges must satisfy 0 <= LO <= HI")
    if args.axes:
        axes = [int(a) - 1 for a in _floats(args.axes, "--axes")]
    else:
        axes = list(range(len(ranges)))
    if len(axes) != len(ranges) or any(not 0 <= a < prob.g.state_dim for a in axes):
        raise UsageError("--axes must name one state index (1-based) per --box range")
    if prob.params is not None:
        base = _species_state(prob.params, args.x0)
    elif args.x0:
        base = _x0(args, prob)
    else:
        base = np.zeros(prob.g.state_dim)
    if prob.params is None:
        hi = max([1.0] + [h for _, h in ranges] + [float(np.max(base))])
        _spot_check(prob, (np.zeros(prob.g.state_dim), np.full(prob.g.state_dim, hi)))
    grid = kernel_slice_grid(prob.g, prob.d, axes, base, ranges, args.resolution, prob.cfg, prob.sharp_cfg)
    out = _out(args)
    names = [f"x{a + 1}" for a in axes]
    write_text(out / "grid.tsv", write_grid(grid, names))
    if args.svg:
        write_text(out / "grid.svg", svg_grid(grid, "kernel slice"))
    counts = {c.value: int(np.sum(grid.conclusions == c.value)) for c in Conclusion}
    print(", ".join(f"{k}: {v}" for k, v in counts.items()))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--species-scalars", metavar="PATH")
    common.add_argument("--species-ages", metavar="PATH")
    common.add_argument("--out", metavar="DIR", default=".")

    toy = argparse.ArgumentParser(add_help=False)
    toy.add_argument("--toy-dynamics", action="append", metavar="EXPR",
                     help="one per state component, in x (1-D) or x1..xn and u")
    toy.add_argument("--toy-control", metavar="LO,HI")
    toy.add_argument("--toy-constraint", action="append", metavar="'EXPR>=THR'")
    toy.add_argument("--toy-steady", metavar="X[,X...]", help="steady state of the dynamics at the lower control")
    toy.add_argument("--toy-contraction", type=float, metavar="L")
    toy.add_argument("--toy-steady-sharp", metavar="X[,X...]", help="steady state at the upper control")
    toy.add_argument("--toy-contraction-sharp", type=float, metavar="L")

    kernel = argparse.ArgumentParser(add_help=False)
    kernel.add_argument("--set", choices=("yield", "protect"), default="yield")
    kernel.add_argument("--ymin", type=float, default=0.0, metavar="TONS")
    kernel.add_argument("--blim", type=float, default=0.0, metavar="TONS")
    kernel.add_argument("--flim", type=float, default=None, metavar="VALUE")
    kernel.add_argument("--horizon", type=int, default=DEFAULT_HORIZON, metavar="T")
    kernel.add_argument("--x0", metavar="STATE", help="comma list or equilibrium@LAMBDA")

    parser = argparse.ArgumentParser(prog="viakern", description="Viability kernels of monotone harvest models.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("thresholds", parents=[common], help="maximal sustainable thresholds")

    sim = sub.add_parser("simulate", parents=[common], help="simulate the age-class dynamics")
    sim.add_argument("--x0", metavar="STATE", help="comma list or equilibrium@LAMBDA")
    sim.add_argument("--lambda", dest="effort", default="lambda_min", metavar="VALUE")
    sim.add_argument("--schedule", metavar="L1,L2,...")
    sim.add_argument("--steps", type=int, default=10, metavar="N")

    chk = sub.add_parser("check-series", parents=[common], help="audit an observed series")
    chk.add_argument("--series", required=True, metavar="PATH")
    chk.add_argument("--kind", choices=("landings", "ssb"), default="landings")
    chk.add_argument("--svg", action="store_true")

    kt = sub.add_parser("kernel-test", parents=[common, toy, kernel], help="kernel membership or emptiness")
    kt.add_argument("--emptiness", action="store_true")

    ks = sub.add_parser("kernel-slice", parents=[common, toy, kernel], help="classify a grid of states")
    ks.add_argument("--box", required=True, metavar="LO,HI[,LO,HI]")
    ks.add_argument("--axes", metavar="I[,J]", help="1-based state indices of the slice")
    ks.add_argument("--resolution", type=int, default=32, metavar="R")
    ks.add_argument("--svg", action="store_true")
    return parser


COMMANDS = {
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "check-series": cmd_check_series,
    "kernel-test": cmd_kernel_test,
    "kernel-slice": cmd_kernel_slice,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ToyError, UsageError, ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
