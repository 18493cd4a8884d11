"""Command-line interface.

    gotlab solve       exact W2 between two measures, plan and uniqueness
    gotlab certify     monotonicity / potential certificates for the plan
    gotlab robustness  certified lower bounds and the searched radius
    gotlab sweep       Gaussian-smoothing gap curve written as CSV
    gotlab selfcheck   internal reduced-scale consistency suites

Exit codes: 0 success, 1 a checked property failed, 2 usage or input error,
3 request outside supported capabilities.  Instances come from --preset or
from --mu/--nu JSON files ({"dim": d, "points": [[...]], "weights": [...]}).
All floats are printed with repr, so identical runs emit identical bytes.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence, TextIO

import numpy as np

from . import lap
from .certify import (
    ResidualFunction,
    check_convex_smooth,
    check_cyclical_monotonicity,
    max_quadratic_lambda,
    solve_potentials,
)
from .errors import CapabilityError, UsageError
from .exact_ot import is_unique_optimal, solve_w2
from .measures import MeasureFormatError, load_measure
from .presets import get_preset, preset_names
from .robustness import (
    MAX_VERIFY_ATOMS,
    estimate_r,
    g_profile,
    robustness_lb_convex,
    robustness_lb_general,
    robustness_lb_simplified,
    verify_eps_robust,
)
from .smoothing import gap_curve
from . import selfcheck as selfcheck_mod

__all__ = ["main"]

_DEFAULT_GRID = "0.05:1.0:20:log"


def _fmt(x) -> str:
    return repr(float(x))


def _fmt_bool(b) -> str:
    return "true" if b else "false"


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help=f"named instance: {', '.join(preset_names())}")
    p.add_argument("--k", type=int, help="parameter k for the mu_k preset")
    p.add_argument("--mu", help="path to the source measure (JSON)")
    p.add_argument("--nu", help="path to the target measure (JSON)")


def _load_pair(args):
    if args.preset and (args.mu or args.nu):
        raise UsageError("give either --preset or --mu/--nu, not both")
    if args.preset:
        preset = get_preset(args.preset, k=args.k)
        return preset.mu, preset.nu, preset.name
    if not (args.mu and args.nu):
        raise UsageError("an instance is required: --preset NAME or --mu FILE --nu FILE")
    with open(args.mu, "rb") as fh:
        mu = load_measure(fh)
    with open(args.nu, "rb") as fh:
        nu = load_measure(fh)
    return mu, nu, f"{args.mu}|{args.nu}"


def _parse_grid(spec: str):
    """Grid spec: comma list '0.1,0.2,0.5' or 'start:stop:count[:log]'."""
    spec = spec.strip()
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) not in (3, 4):
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            log = len(parts) == 4 and parts[3] == "log"
            if len(parts) == 4 and not log:
                raise ValueError
            # log grids need start > 0; linear grids may start at 0 (G profiles)
            if count < 1 or not (0 <= start <= stop) or (log and start <= 0):
                raise ValueError
            if count == 1:
                return (start,)
            if log:
                vals = np.geomspace(start, stop, count)
            else:
                vals = np.linspace(start, stop, count)
            return tuple(float(v) for v in vals)
        return tuple(float(t) for t in spec.split(","))
    except ValueError:
        raise UsageError(
            f"bad grid spec {spec!r}; use 'start:stop:count[:log]' or a comma list"
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_solve(args, out: TextIO) -> int:
    mu, nu, label = _load_pair(args)
    sol = solve_w2(mu, nu)
    unique = is_unique_optimal(mu, nu)
    print(
        f"instance={label} m={mu.num_atoms} n={nu.num_atoms} d={mu.dim}", file=out
    )
    print(
        f"w2_squared={_fmt(sol.w2_squared)} w2={_fmt(sol.w2)} "
        f"perfect_matching={_fmt_bool(sol.is_perfect_matching)} "
        f"unique={_fmt_bool(unique)}",
        file=out,
    )
    if sol.matching is not None:
        print(f"matching={list(sol.matching.perm)}", file=out)
    for i, j, q in zip(sol.plan.rows, sol.plan.cols, sol.plan.masses):
        print(f"plan: {int(i)} -> {int(j)} mass={_fmt(q)}", file=out)
    return 0


def _require_matching(sol, allow_degenerate: bool, out: TextIO):
    if sol.matching is not None:
        return sol.matching
    if allow_degenerate:
        print(
            "plan is not a perfect matching; matched-pair certificates skipped",
            file=out,
        )
        return None
    raise CapabilityError(
        "optimal plan is not a perfect matching "
        "(pass --allow-degenerate to report anyway)"
    )


def _cmd_certify(args, out: TextIO) -> int:
    mu, nu, label = _load_pair(args)
    sol = solve_w2(mu, nu)
    print(f"instance={label} w2_squared={_fmt(sol.w2_squared)}", file=out)
    matching = _require_matching(sol, args.allow_degenerate, out)
    if matching is None:
        return 0

    mono = check_cyclical_monotonicity(mu.points, nu.points, matching)
    print(f"monotone={_fmt_bool(mono.monotone)}", file=out)
    if not mono.monotone:
        print(
            f"violating_cycle={list(mono.violating_cycle)} "
            f"cycle_weight={_fmt(mono.cycle_weight)}",
            file=out,
        )

    failed = not mono.monotone
    lam_max = max_quadratic_lambda(mu.points, nu.points, matching)
    print(f"max_lambda={_fmt(lam_max)}", file=out)

    if args.lam is not None:
        cert = solve_potentials(
            mu.points, nu.points, ResidualFunction.quadratic_y(args.lam), matching
        )
        print(
            f"certificate kind=quadratic_y lam={_fmt(args.lam)} "
            f"valid={_fmt_bool(cert.valid)}",
            file=out,
        )
        _print_cert_detail(cert, out)
        failed |= not cert.valid
    if args.alpha is not None or args.beta is not None:
        if args.alpha is None or args.beta is None:
            raise UsageError("--alpha and --beta must be given together")
        cert = check_convex_smooth(
            mu.points, nu.points, args.alpha, args.beta, matching
        )
        print(
            f"certificate kind=convex_smooth alpha={_fmt(args.alpha)} "
            f"beta={_fmt(args.beta)} valid={_fmt_bool(cert.valid)}",
            file=out,
        )
        _print_cert_detail(cert, out)
        failed |= not cert.valid

    return 1 if failed else 0


def _print_cert_detail(cert, out: TextIO) -> None:
    if cert.valid:
        print("phi=[" + ", ".join(_fmt(p) for p in cert.phi) + "]", file=out)
    else:
        print(f"violating_cycle={list(cert.violating_cycle)}", file=out)


def _cmd_robustness(args, out: TextIO) -> int:
    mu, nu, label = _load_pair(args)
    sol = solve_w2(mu, nu)
    print(f"instance={label} w2_squared={_fmt(sol.w2_squared)}", file=out)
    if sol.matching is None:
        raise CapabilityError(
            "robustness analysis needs a perfect-matching optimal plan"
        )
    matching = sol.matching
    X, Y = mu.points, nu.points

    lam = max_quadratic_lambda(X, Y, matching)
    if lam > 0:
        cert = solve_potentials(X, Y, ResidualFunction.quadratic_y(lam), matching)
        lb_general = robustness_lb_general(X, Y, cert, matching)
    else:
        lb_general = 0.0
    print(f"max_lambda={_fmt(lam)} lb_general={_fmt(lb_general)}", file=out)

    failed = False
    if args.alpha is not None or args.beta is not None:
        if args.alpha is None or args.beta is None:
            raise UsageError("--alpha and --beta must be given together")
        cert = check_convex_smooth(X, Y, args.alpha, args.beta, matching)
        if cert.valid:
            lb_c = robustness_lb_convex(X, Y, args.alpha, args.beta, matching, cert)
            lb_s = robustness_lb_simplified(
                X, Y, args.alpha, args.beta, matching, cert
            )
            print(
                f"lb_convex={_fmt(lb_c)} lb_simplified={_fmt(lb_s)}", file=out
            )
        else:
            print(
                f"convex_smooth certificate invalid for alpha={_fmt(args.alpha)} "
                f"beta={_fmt(args.beta)}",
                file=out,
            )
            failed = True

    if args.eps is not None:
        res = verify_eps_robust(X, Y, args.eps, matching, seed=args.seed)
        print(
            f"robust_at_eps={_fmt_bool(res.robust)} eps={_fmt(args.eps)} "
            f"best_decrease={_fmt(res.best_decrease)}",
            file=out,
        )
        if res.witness is not None:
            print(
                f"witness_cycle={list(res.witness.cycle)} "
                f"witness_decrease={_fmt(res.witness.decrease)}",
                file=out,
            )
        failed |= not res.robust

    if args.estimate_r:
        if mu.num_atoms > MAX_VERIFY_ATOMS:
            raise CapabilityError(
                f"--estimate-r supports k <= {MAX_VERIFY_ATOMS}, got {mu.num_atoms}"
            )
        r_hat = estimate_r(X, Y, matching, seed=args.seed)
        print(f"r_hat={_fmt(r_hat)}", file=out)

    if args.g_grid:
        grid = _parse_grid(args.g_grid)
        prof = g_profile(X, Y, grid, matching, seed=args.seed)
        for M, val, spread in zip(prof.grid, prof.values, prof.spreads):
            print(f"G[{_fmt(M)}]={_fmt(val)} spread={_fmt(spread)}", file=out)

    return 1 if failed else 0


def _sweep_one(mu, nu, label, grid_spec, n, trials, seed):
    grid = _parse_grid(grid_spec)
    sol = solve_w2(mu, nu)
    r_hat = float("nan")
    lb_general = float("nan")
    if sol.matching is not None and mu.num_atoms <= MAX_VERIFY_ATOMS:
        r_hat = estimate_r(mu.points, nu.points, sol.matching, seed=seed)
        lam = max_quadratic_lambda(mu.points, nu.points, sol.matching)
        if lam > 0:
            cert = solve_potentials(
                mu.points,
                nu.points,
                ResidualFunction.quadratic_y(lam),
                sol.matching,
            )
            lb_general = robustness_lb_general(
                mu.points, nu.points, cert, sol.matching
            )
        else:
            lb_general = 0.0
    sigma_star = r_hat if (math.isfinite(r_hat) and r_hat > 0) else None
    records = gap_curve(mu, nu, grid, n, trials, seed, sigma_star=sigma_star)

    lines = [
        f"# got-lab sweep v1 instance={label} n={n} trials={trials} seed={seed} "
        f"grid={grid_spec} backend={lap.backend_name()}"
    ]
    lines.append(
        "sigma,w2_exact,w2_got_mean,w2_got_stderr,gap,gap_sq,r_hat,lb_general,exp_bound"
    )
    for rec in records:
        row = (
            rec.sigma,
            rec.w2_exact,
            rec.got.mean,
            rec.got.stderr,
            rec.gap,
            rec.gap_sq,
            r_hat,
            lb_general,
            rec.exp_bound_value,
        )
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _cmd_sweep(args, out: TextIO) -> int:
    if args.paper_fig2:
        if args.preset or args.mu or args.nu:
            raise UsageError("--paper-fig2 chooses its own instances (mu_k, k=1..4)")
        if args.out == "-":
            raise UsageError("--paper-fig2 writes multiple files; --out must be a path")
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        for k in (1, 2, 3, 4):
            preset = get_preset("mu_k", k=k)
            text = _sweep_one(
                preset.mu, preset.nu, preset.name,
                args.sigma_grid, args.n, args.trials, args.seed,
            )
            path = f"{stem}_k{k}.csv"
            with open(path, "w") as fh:
                fh.write(text)
            print(f"wrote {path}", file=out)
        return 0

    mu, nu, label = _load_pair(args)
    text = _sweep_one(mu, nu, label, args.sigma_grid, args.n, args.trials, args.seed)
    if args.out == "-":
        out.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=out)
    return 0


def _cmd_selfcheck(args, out: TextIO) -> int:
    ok = selfcheck_mod.run_suites(names=args.suite or None, out=out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gotlab",
        description="exact optimal transport, matching certificates, and "
        "smoothed-OT gap experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="exact W2 and the optimal plan")
    _add_instance_args(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="certificates for the optimal matching")
    _add_instance_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="check the quadratic residual at this value")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--allow-degenerate", action="store_true",
                   help="do not fail when the plan is not a perfect matching")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("robustness", help="lower bounds and perturbation search")
    _add_instance_args(p)
    p.add_argument("--eps", type=float, default=None,
                   help="verify robustness at this perturbation size")
    p.add_argument("--estimate-r", action="store_true",
                   help="bisection estimate of the robustness radius (k <= 8)")
    p.add_argument("--g-grid", default=None,
                   help="estimate G over this grid of perturbation sizes")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("sweep", help="Gaussian-smoothing gap curve as CSV")
    _add_instance_args(p)
    p.add_argument("--out", required=True, help="output CSV path, or - for stdout")
    p.add_argument("--sigma-grid", default=_DEFAULT_GRID,
                   help=f"grid spec (default {_DEFAULT_GRID})")
    p.add_argument("--n", type=int, default=500, help="samples per cloud")
    p.add_argument("--trials", type=int, default=20, help="Monte Carlo trials")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-fig2", action="store_true",
                   help="write the four mu_k sweeps (k=1..4) to <out>_k{k}.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("selfcheck", help="run internal consistency suites")
    p.add_argument("--suite", action="append", default=None,
                   help=f"restrict to a suite ({', '.join(selfcheck_mod.SUITES)}); "
                        "repeatable")
    p.set_defaults(func=_cmd_selfcheck)

    return parser


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    out = stdout if stdout is not None else sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse signals usage problems with exit 2
        code = exc.code
        return int(code) if isinstance(code, int) else 2
    try:
        return args.func(args, out)
    except (UsageError, MeasureFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
