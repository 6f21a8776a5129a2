"""Solver-comparison runs with CSV output and a replayable manifest.

An experiment spec is a JSON object::

    {
      "objective": "elbo",               # or "pa-elbo"
      "instances": [
        {"name": "a", "models": [{"path": "m.json"}]},
        {"name": "b", "models": [{"synth_flid": {"n": 10, "D": 7, "seed": 3}}]},
        {"name": "c", "folds": [{"path": "f0.json"}, {"path": "f1.json"}, {"path": "f2.json"}]}
      ],
      "solvers": ["dr-dg", "sub-dg", "dgmf-half"],
      "seed": 0, "epochs": 6, "beta": 1.0, "order": "random",
      "assertions": false, "exact": true
    }

A model source is ``{"path": ...}``, ``{"synth_flid": {...}}`` or
``{"model": {...}}`` (inline model object). ``folds`` expands to every
unordered pair and only applies to ``pa-elbo``.

Outputs in the output directory: ``summary.csv`` (one row per instance and
solver), ``trajectory.csv``, ``manifest.json``, which is itself a valid spec
reproducing the CSVs bit-for-bit, and ``timings.json`` holding wall-clock
runtimes (kept out of the CSVs since it varies between runs).
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .bounds import exact_log_partition, exact_pa_objective, log_partition_upper
from .io import load_model, model_from_dict
from .objectives import ElboObjective, PaElboObjective
from .set_functions import MAX_ENUM_N, SetFunction
from .solvers import SOLVERS, SolverConfig, get_solver
from .synth import SyntheticFlidSpec, synth_flid

log = logging.getLogger(__name__)

SUMMARY_FIELDS = [
    "instance", "objective", "solver", "status", "n", "final_value", "epochs_run",
    "cert_ratio", "f_lower", "f_upper", "cert_opt_upper",
    "exact_log_z", "log_z_upper", "exact_pa", "log_z_upper_1", "log_z_upper_2", "pa_lower_bound",
    "assertions_ok", "final_x", "message",
]
TRAJECTORY_FIELDS = ["instance", "solver", "epoch", "step", "coord", "value", "upper"]


class SpecError(ValueError):
    """Invalid experiment spec."""


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentSpec:
    objective: str
    instances: list[dict[str, Any]]
    solvers: list[str]
    seed: int = 0
    epochs: int = 6
    beta: float = 1.0
    order: Any = "random"
    assertions: bool = False
    exact: bool = True
    bound_strategy: str = "auto"
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir=".") -> "ExperimentSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        known = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        unknown = set(d) - known - {"provenance"}
        if unknown:
            raise SpecError(f"unknown spec fields: {sorted(unknown)}")
        for req in ("objective", "instances", "solvers"):
            if req not in d:
                raise SpecError(f"spec is missing {req!r}")
        kw = {k: d[k] for k in known if k in d}
        spec = cls(**kw, base_dir=Path(base_dir))
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.objective not in ("elbo", "pa-elbo"):
            raise SpecError(f"objective must be 'elbo' or 'pa-elbo', got {self.objective!r}")
        if not self.solvers:
            raise SpecError("solver list is empty")
        for s in self.solvers:
            if s not in SOLVERS:
                raise SpecError(f"unknown solver {s!r}; known: {sorted(SOLVERS)}")
        if not self.instances:
            raise SpecError("instance list is empty")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise SpecError(f"epochs must be a positive integer, got {self.epochs!r}")
        if not self.beta > 0:
            raise SpecError(f"beta must be positive, got {self.beta!r}")
        if not (self.order in ("random", "identity") or isinstance(self.order, list)):
            raise SpecError(f"order must be 'random', 'identity' or a permutation list, got {self.order!r}")
        names = set()
        for inst in self.instances:
            name = inst.get("name")
            if not name or name in names:
                raise SpecError(f"instance names must be unique and non-empty, got {name!r}")
            names.add(name)
            if "folds" in inst:
                if self.objective != "pa-elbo":
                    raise SpecError(f"instance {name!r}: folds only apply to pa-elbo")
                if len(inst["folds"]) < 2:
                    raise SpecError(f"instance {name!r}: need at least two folds")
            else:
                want = 1 if self.objective == "elbo" else 2
                if len(inst.get("models", [])) != want:
                    raise SpecError(f"instance {name!r}: {self.objective} needs exactly {want} model source(s)")

    def config(self, n: int) -> SolverConfig:
        if self.order == "identity":
            order = list(range(n))
        elif isinstance(self.order, list):
            order = self.order
        else:
            order = None
        return SolverConfig(order=order, seed=int(self.seed), epochs=int(self.epochs), assertions=bool(self.assertions))


def _resolve_source(src: dict[str, Any], base: Path) -> dict[str, Any]:
    if "path" in src:
        p = Path(src["path"])
        p = p if p.is_absolute() else (base / p)
        p = p.resolve()
        try:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
        except OSError:
            digest = None  # the instance itself will report the failure
        return {"path": str(p), "sha256": digest}
    return dict(src)


def _load_source(src: dict[str, Any], base: Path) -> SetFunction:
    if "path" in src:
        p = Path(src["path"])
        p = (p if p.is_absolute() else base / p).resolve()
        want = src.get("sha256")
        if want is not None and hashlib.sha256(p.read_bytes()).hexdigest() != want:
            raise SpecError(f"{p}: contents changed since the manifest was written (sha256 mismatch)")
        return load_model(p)
    if "synth_flid" in src:
        return synth_flid(SyntheticFlidSpec(**src["synth_flid"]))
    if "model" in src:
        return model_from_dict(src["model"])
    raise SpecError(f"model source needs 'path', 'synth_flid' or 'model': {src!r}")


def expand_instances(spec: ExperimentSpec) -> list[tuple[str, list[dict[str, Any]]]]:
    out = []
    for inst in spec.instances:
        if "folds" in inst:
            for i, j in itertools.combinations(range(len(inst["folds"])), 2):
                out.append((f"{inst['name']}[{i},{j}]", [inst["folds"][i], inst["folds"][j]]))
        else:
            out.append((inst["name"], list(inst["models"])))
    return out


def _instance_rows(spec: ExperimentSpec, name: str, sources: list[dict[str, Any]]):
    models = [_load_source(s, spec.base_dir) for s in sources]
    n = models[0].n
    extra: dict[str, Any] = {}
    enumerable = spec.exact and n <= MAX_ENUM_N
    strategy = spec.bound_strategy
    if strategy == "auto":
        strategy = "exhaustive" if n <= MAX_ENUM_N else "local_search"
    if spec.objective == "elbo":
        obj = ElboObjective(models[0])
        if enumerable:
            extra["exact_log_z"] = exact_log_partition(models[0])
        extra["log_z_upper"] = log_partition_upper(models[0], 1.0, strategy, seed=spec.seed)[0]
    else:
        if models[1].n != n:
            raise SpecError(f"folds disagree on ground set size: {n} vs {models[1].n}")
        obj = PaElboObjective(models[0], models[1], spec.beta)
        if enumerable:
            extra["exact_pa"] = exact_pa_objective(models[0], models[1], spec.beta)
        extra["log_z_upper_1"] = log_partition_upper(models[0], spec.beta, strategy, seed=spec.seed)[0]
        extra["log_z_upper_2"] = log_partition_upper(models[1], spec.beta, strategy, seed=spec.seed)[0]
    cfg = spec.config(n)
    for solver in spec.solvers:
        try:
            rep = get_solver(solver)(obj, cfg)
        except Exception as exc:  # one solver failing must not sink the others
            log.warning("instance %s, solver %s failed: %s", name, solver, exc)
            yield {"instance": name, "objective": spec.objective, "solver": solver, "status": "error",
                   "n": n, "message": f"{type(exc).__name__}: {exc}"}, [], None
            continue
        row = {
            "instance": name, "objective": spec.objective, "solver": solver, "status": "ok", "n": n,
            "final_value": rep.final_value, "epochs_run": rep.epochs_run,
            "assertions_ok": rep.assertions_ok if spec.assertions else None,
            "final_x": " ".join(repr(float(v)) for v in rep.final_x),
            **extra,
        }
        if rep.certificate is not None:
            c = rep.certificate
            row.update(cert_ratio=c.ratio, f_lower=c.f_lower, f_upper=c.f_upper, cert_opt_upper=c.opt_upper_bound)
        if spec.objective == "pa-elbo":
            row["pa_lower_bound"] = rep.final_value - extra["log_z_upper_1"] - extra["log_z_upper_2"]
        traj = [
            {"instance": name, "solver": solver, "epoch": t.epoch, "step": t.step, "coord": t.coord,
             "value": t.value, "upper": t.upper}
            for t in rep.trajectory
        ]
        yield row, traj, rep.runtime


def manifest_dict(spec: ExperimentSpec) -> dict[str, Any]:
    instances = []
    for inst in spec.instances:
        inst = dict(inst)
        for key in ("models", "folds"):
            if key in inst:
                inst[key] = [_resolve_source(s, spec.base_dir) for s in inst[key]]
        instances.append(inst)
    return {
        "objective": spec.objective,
        "instances": instances,
        "solvers": list(spec.solvers),
        "seed": spec.seed,
        "epochs": spec.epochs,
        "beta": spec.beta,
        "order": spec.order,
        "assertions": spec.assertions,
        "exact": spec.exact,
        "bound_strategy": spec.bound_strategy,
        "provenance": {"package": "dgmeanfield", "version": __version__},
    }


def _write_csv(path: Path, fields: list[str], rows: list[dict[str, Any]]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: fmt(r.get(k)) for k in fields})


def run_experiment(spec: ExperimentSpec, out_dir) -> int:
    """Run every (instance, solver) pair and write the output files.

    Returns 0 when every row succeeded, 1 otherwise. A failing instance is
    logged and reported as error rows; the remaining instances still run.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = manifest_dict(spec)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    summary, traj, timings = [], [], []
    failed = False
    for name, sources in expand_instances(spec):
        try:
            for row, steps, runtime in _instance_rows(spec, name, sources):
                summary.append(row)
                traj.extend(steps)
                failed |= row["status"] != "ok"
                if runtime is not None:
                    timings.append({"instance": name, "solver": row["solver"], "runtime_s": runtime})
        except Exception as exc:
            log.warning("instance %s aborted: %s", name, exc)
            failed = True
            for solver in spec.solvers:
                summary.append({"instance": name, "objective": spec.objective, "solver": solver,
                                "status": "error", "message": f"{type(exc).__name__}: {exc}"})
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)
    _write_csv(out / "trajectory.csv", TRAJECTORY_FIELDS, traj)
    (out / "timings.json").write_text(json.dumps(timings, indent=1) + "\n")
    return 1 if failed else 0


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentSpec.from_dict(data, base_dir=path.parent)
