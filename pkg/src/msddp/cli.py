"""``msddp`` command line: generate instances, run solvers, query the oracle.

Exit codes: 0 success, 2 iteration budget exhausted, 3 infeasible instance,
4 bad input (1 is left for a failing acceptance suite).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import records
from .model import SolveConfig, ToleranceSchedule, dumps_instance, load_instance, validate_instance

EXIT_OK, EXIT_SUITE_FAILED, EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_BAD_INPUT = 0, 1, 2, 3, 4

log = logging.getLogger("msddp")


class BadInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = os.environ.get("MSDDP_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise BadInput(f"expected comma-separated numbers, got {text!r}") from exc


# --- shared solver plumbing -------------------------------------------------

def _instance(path):
    try:
        inst = load_instance(path)
    except FileNotFoundError as exc:
        raise BadInput(f"instance file not found: {path}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise BadInput(f"cannot read instance {path}: {exc}") from exc
    problems = validate_instance(inst)
    if problems:
        raise BadInput("invalid instance: " + "; ".join(v.message for v in problems[:5]))
    return inst


def _lipschitz(inst, args):
    if args.lipschitz is not None:
        return np.full(inst.T, float(args.lipschitz))
    from .generators import cost_lipschitz_bound
    from .model import estimate_lipschitz
    from .oracle import SizeGuardError
    try:
        M = estimate_lipschitz(inst, seed=args.seed)
        log.info("Lipschitz estimates from the oracle: %s", M.tolist())
    except SizeGuardError:
        M = cost_lipschitz_bound(inst)
        log.info("instance too large for the oracle; using cost-based bounds %s", M.tolist())
    return M


def _config(inst, args, **kw):
    if args.delta is None or args.delta < 0:
        raise BadInput("--delta must be given and nonnegative")
    M = _lipschitz(inst, args)
    sched = ToleranceSchedule.from_lipschitz(args.delta, M, M, inst.lam, inst.T)
    cfg = SolveConfig(sched, max_iterations=args.max_iter, lp_tolerance=args.lp_tol,
                      seed=args.seed, threads=args.threads, **kw)
    log.info("eps schedule %s, lp_tolerance %g (not folded into eps)", sched.eps.tolist(),
             cfg.lp_tolerance)
    return cfg


def _solver_output(result, csv_text, args):
    if args.format == "json":
        body = {"status": result.status, "iterations": result.iterations, "lb": result.lb,
                "ub": result.ub, "x1": result.x1,
                "records": [{"k": r.k, "lb": r.lb, "ub": r.ub, "gap": r.gap,
                             "ub_mean": r.ub_mean, "ub_std": r.ub_std, "g1": r.g1, "q": r.q,
                             "saturation": r.saturation, "indices": r.indices,
                             "states": r.states, "gbar": r.gbar,
                             **({"wall_time": r.wall_time} if args.timing else {})}
                            for r in result.history]}
        _emit(_json(body), args.out)
    else:
        _emit(csv_text, args.out)
    return EXIT_OK if result.converged else EXIT_BUDGET


def cmd_ddp(args):
    from .ddp import ddp_solve
    inst = _instance(args.instance)
    cfg = _config(inst, args, gap_threshold=args.gap)
    res = ddp_solve(inst, cfg)
    return _solver_output(res, records.ddp_csv(res.history, args.timing), args)


def cmd_eddp(args):
    from .eddp import eddp_solve
    inst = _instance(args.instance)
    res = eddp_solve(inst, _config(inst, args))
    return _solver_output(res, records.eddp_csv(res.history, args.timing), args)


def cmd_sddp(args):
    from .sddp import sddp_solve
    inst = _instance(args.instance)
    if args.replicas < 1:
        raise BadInput("--replicas must be >= 1")
    cfg = _config(inst, args, forward_replicas=args.replicas, gap_threshold=args.gap)
    audit = args.audit or args.stop == "distance"
    res = sddp_solve(inst, cfg, stop=args.stop, audit=audit, z=args.z)
    return _solver_output(res, records.sddp_csv(res.history, args.timing, audit), args)


def cmd_kelley(args):
    from .kelley import builtin_problem, kelley_solve
    prob = builtin_problem(args.function, args.n, args.side)
    x1 = np.full(args.n, prob.upper[0]) if args.x1 is None else np.array(_floats(args.x1))
    if x1.size != args.n:
        raise BadInput(f"--x1 needs {args.n} values")
    res = kelley_solve(prob, x1, args.eps, args.max_iter)
    if args.format == "json":
        _emit(_json({"function": args.function, "n": args.n, "eps": args.eps, "M": prob.M,
                     "converged": res.converged, "iterations": res.iterations,
                     "x_best": res.x_best, "ub": res.ub, "lb": res.lb,
                     "iterates": res.iterates}), args.out)
    else:
        _emit(records.kelley_csv(res), args.out)
    return EXIT_OK if res.converged else EXIT_BUDGET


def cmd_oracle(args):
    from .oracle import exact_value_grid, extensive_form_value
    if args.instance is None:
        raise BadInput("oracle needs --instance")
    inst = _instance(args.instance)
    if args.mode == "extensive":
        value, x1 = extensive_form_value(inst)
        body = {"F_star": value, "x1": x1}
    else:
        M = None if args.lipschitz is None else float(args.lipschitz)
        g = exact_value_grid(inst, args.stage, args.res, M)
        body = {"stage": g.stage, "resolution": g.resolution, "step": g.step,
                "error_bound": g.error_bound, "nodes": g.nodes, "values": g.values}
    _emit(_json(body), args.out)
    return EXIT_OK


def cmd_gen(args):
    from .generators import GeneratorSpec, generate_instance
    counts = [int(v) for v in _floats(args.counts)]
    params = json.loads(args.params) if args.params else {}
    spec = GeneratorSpec(args.family, args.T, tuple(counts), args.n, args.seed,
                         args.lam, params)
    _emit(dumps_instance(generate_instance(spec)), args.out)
    return EXIT_OK


def cmd_suite(args):
    from .acceptance import run_suite
    report = run_suite(args.level)
    _emit(_json(report), args.out)
    for c in report["criteria"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['id']:>2} {c['name']}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_SUITE_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msddp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    def solver(sp):
        sp.add_argument("--instance", required=True)
        sp.add_argument("--delta", type=float, default=None, help="uniform radius delta_t")
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--lipschitz", type=float, default=None,
                        help="uniform Lipschitz bound M (default: oracle estimate)")
        sp.add_argument("--lp-tol", type=float, default=1e-8)
        sp.add_argument("--timing", action="store_true", help="add wall_time column")
        common(sp)

    sp = sub.add_parser("kelley", help="cutting-plane method on a built-in function")
    sp.add_argument("--function", default="linf")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--side", type=float, default=2.0)
    sp.add_argument("--x1", default=None, help="comma-separated start point")
    sp.add_argument("--max-iter", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_kelley)

    sp = sub.add_parser("ddp", help="DDP on a single-scenario instance")
    solver(sp)
    sp.add_argument("--gap", type=float, default=None, help="absolute gap target override")
    sp.set_defaults(func=cmd_ddp)

    sp = sub.add_parser("eddp", help="explorative DDP on an SAA instance")
    solver(sp)
    sp.set_defaults(func=cmd_eddp)

    sp = sub.add_parser("sddp", help="sampled DDP on an SAA instance")
    solver(sp)
    sp.add_argument("--replicas", type=int, default=1)
    sp.add_argument("--audit", action="store_true")
    sp.add_argument("--stop", choices=("distance", "statistical", "budget"),
                    default="statistical")
    sp.add_argument("--z", type=float, default=1.96)
    sp.add_argument("--gap", type=float, default=None)
    sp.set_defaults(func=cmd_sddp)

    sp = sub.add_parser("oracle", help="extensive-form value or grid value function")
    sp.add_argument("--instance", default=None)
    sp.add_argument("--lipschitz", type=float, default=None)
    common(sp, fmt=False)
    osub = sp.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    e = osub.add_parser("extensive")
    g = osub.add_parser("grid")
    for mode in (e, g):
        # also accept --instance after the mode
        mode.add_argument("--instance", default=argparse.SUPPRESS)
    g.add_argument("--stage", type=int, required=True)
    g.add_argument("--res", type=int, default=16)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="generate an instance file")
    sp.add_argument("--family", choices=("inventory", "hydro-toy", "random-lp"),
                    default="inventory")
    sp.add_argument("--T", type=int, default=3)
    sp.add_argument("--counts", default=None, help="comma-separated N_t (default 1,2,...,2)")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--params", default=None, help="JSON object of family parameters")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("suite", help="run the acceptance battery")
    sp.add_argument("--level", choices=("smoke", "full"), default="smoke")
    sp.add_argument("--out", default=None, help="report file (default stdout)")
    sp.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "counts", "x") is None:
        args.counts = ",".join(["1"] + ["2"] * (args.T - 1))
    from .oracle import OracleError
    from .subproblem import RecourseViolation
    try:
        return args.func(args)
    except RecourseViolation as exc:
        print(f"msddp: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleError as exc:
        code = EXIT_INFEASIBLE if "infeasible" in str(exc) else EXIT_BAD_INPUT
        print(f"msddp: {exc}", file=sys.stderr)
        return code
    except (BadInput, ValueError, json.JSONDecodeError) as exc:
        print(f"msddp: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
