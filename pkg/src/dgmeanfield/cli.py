"""Command-line entry point: ``dgmeanfield <command> ...``.

Commands print JSON to stdout; logs go to stderr. Exit status is 0 on
success, 1 when a run or check fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bounds import exact_log_partition, log_partition_upper, pa_lower_bound
from .core import DomainError
from .experiment import SpecError, fmt, load_spec, run_experiment
from .io import ModelFileError, load_model, model_to_dict, save_model
from .multilinear import CLOSED_FORM_FAMILIES, MultilinearOracle
from .objectives import ElboObjective, PaElboObjective
from .set_functions import MAX_ENUM_N, check_submodular
from .solvers import SOLVERS, SolverConfig, get_solver
from .synth import SyntheticFlidSpec, synth_flid

log = logging.getLogger("dgmeanfield")


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1)
    sys.stdout.write("\n")


def _order(args, n: int):
    if args.order == "identity":
        return list(range(n))
    if args.order == "file":
        if not args.order_file:
            raise SpecError("--order file needs --order-file")
        order = json.loads(Path(args.order_file).read_text())
        if sorted(order) != list(range(n)):
            raise SpecError(f"{args.order_file}: not a permutation of 0..{n - 1}")
        return order
    return None


def _config(args, n: int, epochs_default: int = 1) -> SolverConfig:
    epochs = args.epochs if args.epochs is not None else epochs_default
    return SolverConfig(order=_order(args, n), seed=args.seed, epochs=epochs, assertions=args.check_invariants)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for per-epoch coordinate orders")
    p.add_argument("--epochs", type=int, default=None, help="number of epochs T")
    p.add_argument("--order", choices=("random", "identity", "file"), default="random")
    p.add_argument("--order-file", help="JSON list with the coordinate permutation (with --order file)")
    p.add_argument("--assert", dest="check_invariants", action="store_true",
                   help="log per-step Double Greedy invariants and fail on violations")
    p.add_argument("--out", help="output directory")


def cmd_solve(args) -> int:
    models = [load_model(p) for p in args.model]
    if args.objective == "elbo":
        if len(models) != 1:
            raise SpecError("elbo takes exactly one model file")
        obj = ElboObjective(models[0])
    else:
        if len(models) != 2:
            raise SpecError("pa-elbo takes exactly two model files")
        obj = PaElboObjective(models[0], models[1], args.beta)
    cfg = _config(args, obj.n)
    rep = get_solver(args.solver)(obj, cfg)
    result = {
        "solver": rep.solver,
        "objective": args.objective,
        "final_value": rep.final_value,
        "final_x": rep.final_x.tolist(),
        "epochs_run": rep.epochs_run,
        "runtime_s": rep.runtime,
    }
    if rep.certificate is not None:
        c = rep.certificate
        result["certificate"] = {"ratio": c.ratio, "f_lower": c.f_lower, "f_upper": c.f_upper,
                                 "delta": c.delta, "opt_upper_bound": c.opt_upper_bound}
    if cfg.assertions:
        result["assertions_checked"] = len(rep.assertion_log)
        result["violations"] = [r._asdict() for r in rep.violations]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "trajectory.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["epoch", "step", "coord", "value", "upper"])
            for t in rep.trajectory:
                w.writerow([fmt(v) for v in t])
        (out / "result.json").write_text(json.dumps(result, indent=1) + "\n")
    _emit(result)
    return 1 if cfg.assertions and not rep.assertions_ok else 0


def cmd_compare(args) -> int:
    spec = load_spec(args.spec)
    out = args.out or str(Path(args.spec).with_suffix("")) + "_out"
    status = run_experiment(spec, out)
    _emit({"out": out, "status": "ok" if status == 0 else "errors"})
    return status


def cmd_synth_flid(args) -> int:
    model = synth_flid(SyntheticFlidSpec(args.n, args.D, args.seed, args.per_coordinate_u))
    if args.out:
        save_model(model, args.out)
        _emit({"written": args.out, "n": model.n, "D": model.D})
    else:
        _emit(model_to_dict(model))
    return 0


def cmd_exact_logz(args) -> int:
    F = load_model(args.model)
    upper, A = log_partition_upper(F, args.beta, "exhaustive")
    _emit({"log_z": exact_log_partition(F, args.beta), "upper_bound": upper, "upper_set": list(A),
           "beta": args.beta})
    return 0


def cmd_pa_bound(args) -> int:
    F1, F2 = load_model(args.model1), load_model(args.model2)
    res = pa_lower_bound(F1, F2, args.beta, _config(args, F1.n, epochs_default=6))
    _emit({
        "pa_lower_bound": res.lower_bound,
        "pa_elbo": res.pa_elbo,
        "log_z_upper": list(res.log_z_upper),
        "exact_pa": res.exact,
        "x": res.x.tolist(),
        "beta": args.beta,
    })
    return 0


def cmd_check(args) -> int:
    F = load_model(args.model)
    verdict = check_submodular(F, "auto", samples=args.samples, seed=args.seed)
    result = {"submodular": verdict.submodular, "mode": verdict.mode, "checked": verdict.checked,
              "violation": None if verdict.violation is None else repr(verdict.violation)}
    ok = verdict.submodular
    if F.n <= MAX_ENUM_N:
        rng = np.random.default_rng(args.seed)
        X = rng.random((args.points, F.n))
        enum = MultilinearOracle(F, "enumeration")
        ref = enum.value_batch(X)
        if isinstance(F, CLOSED_FORM_FAMILIES):
            closed = MultilinearOracle(F, "closed_form").value_batch(X)
            err = float(np.max(np.abs(closed - ref)))
            result["closed_form_max_error"] = err
            ok &= err <= 1e-9
        # each partial must equal the difference of the two coordinate faces
        gerr = 0.0
        for x in X[: min(5, args.points)]:
            g = enum.grad(x)
            for i in range(F.n):
                hi, lo = x.copy(), x.copy()
                hi[i], lo[i] = 1.0, 0.0
                gerr = max(gerr, abs(g[i] - (enum.value(hi) - enum.value(lo))))
        result["gradient_identity_max_error"] = gerr
        ok &= gerr <= 1e-9
    result["ok"] = bool(ok)
    _emit(result)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dgmeanfield", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one solver on one instance")
    s.add_argument("model", nargs="+", help="model file (two for pa-elbo)")
    s.add_argument("--objective", choices=("elbo", "pa-elbo"), default="elbo")
    s.add_argument("--solver", choices=sorted(SOLVERS), default="dr-dg")
    s.add_argument("--beta", type=float, default=1.0)
    _add_run_flags(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="run an experiment spec")
    c.add_argument("spec", help="experiment spec or manifest JSON")
    c.add_argument("--out", help="output directory")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("synth-flid", help="generate a synthetic FLID model file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--D", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--per-coordinate-u", action="store_true")
    g.add_argument("--out", help="model file to write (stdout if omitted)")
    g.set_defaults(func=cmd_synth_flid)

    e = sub.add_parser("exact-logz", help="log-partition function by enumeration")
    e.add_argument("model")
    e.add_argument("--beta", type=float, default=1.0)
    e.set_defaults(func=cmd_exact_logz)

    b = sub.add_parser("pa-bound", help="certified lower bound on the PA objective")
    b.add_argument("model1")
    b.add_argument("model2")
    b.add_argument("--beta", type=float, default=1.0)
    _add_run_flags(b)
    b.set_defaults(func=cmd_pa_bound)

    k = sub.add_parser("check", help="submodularity and oracle self-tests")
    k.add_argument("model")
    k.add_argument("--samples", type=int, default=2000)
    k.add_argument("--points", type=int, default=20)
    k.add_argument("--seed", type=int, default=0)
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ModelFileError, SpecError, DomainError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
