"""Double Greedy and coordinate-ascent solvers for DR-submodular maximization over a box.

All solvers take a :class:`~dgmeanfield.core.DrObjective` and a
:class:`SolverConfig` and return a :class:`SolverReport`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .core import DomainError, DrObjective

ASSERT_SLACK = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by every solver.

    ``order`` fixes the coordinate order for every epoch; when ``None`` each
    epoch ``e`` gets its own permutation drawn from ``seed``, so solvers run
    with the same seed see the same order in the same epoch.
    """

    order: Sequence[int] | None = None
    seed: int = 0
    epochs: int = 1
    delta: float = 0.0
    assertions: bool = False
    reference: Sequence[float] | None = None
    trajectory: str = "coordinate"
    early_stop: float = 1e-10

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.trajectory not in ("coordinate", "epoch"):
            raise ValueError(f"trajectory must be 'coordinate' or 'epoch', got {self.trajectory!r}")

    def epoch_order(self, epoch: int, n: int) -> np.ndarray:
        if self.order is not None:
            order = np.asarray(self.order, dtype=np.int64)
            if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
                raise DomainError(f"order must be a permutation of 0..{n - 1}")
            return order
        return np.random.default_rng([int(self.seed), int(epoch)]).permutation(n)


class TraceEntry(NamedTuple):
    epoch: int
    step: int
    coord: int
    value: float
    # value of the upper row y^k for Double Greedy passes
    upper: float | None = None


class AssertionRecord(NamedTuple):
    epoch: int
    step: int
    coord: int
    check: str
    lhs: float
    rhs: float
    ok: bool


@dataclass(frozen=True)
class Certificate:
    """Worst-case guarantee of a Double Greedy pass.

    ``ratio`` 1/2: ``f(out) >= f(x*)/2 + (f(a) + f(b))/4 - 5 delta/4``.
    ``ratio`` 1/3: ``f(out) >= (f(x*) + f(a) + f(b))/3``.
    """

    ratio: str
    f_lower: float
    f_upper: float
    delta: float
    value: float

    def guaranteed(self, opt: float) -> float:
        if self.ratio == "1/2":
            return 0.5 * opt + 0.25 * (self.f_lower + self.f_upper) - 1.25 * self.delta
        return (opt + self.f_lower + self.f_upper) / 3.0

    @property
    def opt_upper_bound(self) -> float:
        """Largest ``f(x*)`` consistent with the guarantee and the achieved value."""
        if self.ratio == "1/2":
            return 2.0 * (self.value - 0.25 * (self.f_lower + self.f_upper) + 1.25 * self.delta)
        return 3.0 * self.value - self.f_lower - self.f_upper


@dataclass
class SolverReport:
    solver: str
    final_x: np.ndarray
    final_value: float
    trajectory: list[TraceEntry] = field(default_factory=list)
    certificate: Certificate | None = None
    assertion_log: list[AssertionRecord] = field(default_factory=list)
    runtime: float = 0.0
    epochs_run: int = 0

    @property
    def assertions_ok(self) -> bool:
        return all(r.ok for r in self.assertion_log)

    @property
    def violations(self) -> list[AssertionRecord]:
        return [r for r in self.assertion_log if not r.ok]


def _eval(obj: DrObjective, x: np.ndarray) -> float:
    v = obj.value(x)
    if not math.isfinite(v):
        raise FloatingPointError(f"non-finite objective value at {x.tolist()}")
    return v


def _with(x: np.ndarray, i: int, t: float) -> np.ndarray:
    z = x.copy()
    z[i] = t
    return z


def _double_greedy(obj: DrObjective, cfg: SolverConfig, variant: str, name: str) -> SolverReport:
    start = time.perf_counter()
    dom = obj.domain
    n = dom.n
    order = cfg.epoch_order(0, n)
    x = dom.lower.copy()
    y = dom.upper.copy()
    fx, fy = _eval(obj, x), _eval(obj, y)
    f_lower, f_upper = fx, fy
    log: list[AssertionRecord] = []
    trace = [TraceEntry(1, 0, -1, fx, fy)] if cfg.trajectory == "coordinate" else []
    ref = None
    if cfg.assertions and cfg.reference is not None:
        ref = dom.check(cfg.reference)

    # Checks: each row loses at most delta/n when moved to the other row's
    # maximizer; clipping the reference into [x, y] costs at most half the
    # rows' combined gain; the rows stay ordered and meet after the pass.
    def record(k, e, check, lhs, rhs):
        log.append(AssertionRecord(1, k, int(e), check, float(lhs), float(rhs), bool(lhs >= rhs)))

    for k, e in enumerate(order, start=1):
        e = int(e)
        u_a, d_a = obj.coord_max(e, x)
        u_b, d_b = obj.coord_max(e, y)
        if not (math.isfinite(d_a) and math.isfinite(d_b)):
            raise FloatingPointError(f"non-finite gain at coordinate {e}")
        if variant == "dr":
            w_a, w_b = max(d_a, 0.0), max(d_b, 0.0)
            u = u_a if w_a + w_b == 0.0 else (w_a * u_a + w_b * u_b) / (w_a + w_b)
        else:
            u = u_a if d_a >= d_b else u_b
        if cfg.assertions:
            delta = max(cfg.delta, obj.delta)
            slack = delta / n + ASSERT_SLACK
            record(k, e, "lower_row_gain", _eval(obj, _with(x, e, u_b)) - fx, -slack)
            record(k, e, "upper_row_gain", _eval(obj, _with(y, e, u_a)) - fy, -slack)
            if ref is not None:
                o_prev = np.minimum(np.maximum(ref, x), y)
        x_new, y_new = _with(x, e, u), _with(y, e, u)
        fx_new, fy_new = _eval(obj, x_new), _eval(obj, y_new)
        if cfg.assertions:
            record(k, e, "x_le_y", 0.0, float(np.max(x_new - y_new)))
            if ref is not None and variant == "dr":
                o_new = np.minimum(np.maximum(ref, x_new), y_new)
                loss = _eval(obj, o_prev) - _eval(obj, o_new)
                budget = 0.5 * (fx_new - fx + fy_new - fy) + 2.5 * delta / n + ASSERT_SLACK
                record(k, e, "reference_loss", budget, loss)
        x, y, fx, fy = x_new, y_new, fx_new, fy_new
        if cfg.trajectory == "coordinate":
            trace.append(TraceEntry(1, k, e, fx, fy))
    if cfg.trajectory == "epoch":
        trace.append(TraceEntry(1, n, -1, fx, fy))
    if cfg.assertions:
        record(n, -1, "rows_meet", 0.0, float(np.max(np.abs(x - y))))
    delta = max(cfg.delta, obj.delta)
    cert = Certificate("1/2" if variant == "dr" else "1/3", f_lower, f_upper, delta, fx)
    return SolverReport(name, x, fx, trace, cert, log, time.perf_counter() - start, 1)


def dr_double_greedy(obj: DrObjective, cfg: SolverConfig | None = None) -> SolverReport:
    """One pass of DR-DoubleGreedy.

    Each coordinate of the lower row ``x`` and upper row ``y`` is set to the
    gain-weighted convex combination of the two rows' 1-D maximizers. The
    rows meet after the pass.
    """
    return _double_greedy(obj, cfg or SolverConfig(), "dr", "dr-dg")


def submodular_double_greedy(obj: DrObjective, cfg: SolverConfig | None = None) -> SolverReport:
    """One pass of the winner-take-all continuous Double Greedy (1/3 guarantee)."""
    return _double_greedy(obj, cfg or SolverConfig(), "sub", "sub-dg")


def _initial_point(obj: DrObjective, init, seed: int) -> np.ndarray:
    dom = obj.domain
    if isinstance(init, str):
        if init == "zeros":
            return dom.lower.copy()
        if init == "ones":
            return dom.upper.copy()
        if init == "random":
            return np.random.default_rng([int(seed), 0x1A17]).uniform(dom.lower, dom.upper)
        raise ValueError(f"unknown init {init!r}")
    return dom.check(init).copy()


def _ascent(obj, x, cfg, first_epoch, epochs, trace, log, first_label):
    n = obj.domain.n
    fx = _eval(obj, x)
    epochs_run = 0
    for t in range(epochs):
        epoch_label = first_label + t
        order = cfg.epoch_order(first_epoch + t, n)
        biggest = 0.0
        for k, e in enumerate(order, start=1):
            e = int(e)
            u, gain = obj.coord_max(e, x)
            if not math.isfinite(gain):
                raise FloatingPointError(f"non-finite gain at coordinate {e}")
            step = abs(u - x[e])
            # moves below the stopping threshold only add rounding noise
            if gain >= 0.0 and step > cfg.early_stop:
                biggest = max(biggest, step)
                x = _with(x, e, u)
                f_new = _eval(obj, x)
                if cfg.assertions:
                    log.append(AssertionRecord(epoch_label, k, e, "monotone", f_new - fx, -1e-12,
                                               f_new - fx >= -1e-12))
                fx = f_new
            if cfg.trajectory == "coordinate":
                trace.append(TraceEntry(epoch_label, k, e, fx))
        if cfg.trajectory == "epoch":
            trace.append(TraceEntry(epoch_label, n, -1, fx))
        epochs_run += 1
        if biggest < cfg.early_stop:
            break
    return x, fx, epochs_run


def coordinate_ascent(obj: DrObjective, init="zeros", cfg: SolverConfig | None = None) -> SolverReport:
    """``cfg.epochs`` sweeps of exact coordinate maximization from ``init``.

    ``init`` is ``"zeros"`` (lower corner), ``"ones"`` (upper corner),
    ``"random"`` (uniform in the box, from ``cfg.seed``) or an explicit point.
    Moves that would lower the objective, or that are no larger than
    ``cfg.early_stop``, are skipped; a sweep without any move ends the run.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    x = _initial_point(obj, init, cfg.seed)
    trace = [TraceEntry(0, 0, -1, _eval(obj, x))]
    log: list[AssertionRecord] = []
    x, fx, ran = _ascent(obj, x, cfg, 0, cfg.epochs, trace, log, 1)
    label = {"zeros": "ca-0", "ones": "ca-1", "random": "ca-random"}.get(init, "ca") if isinstance(init, str) else "ca"
    return SolverReport(label, x, fx, trace, None, log, time.perf_counter() - start, ran)


def dg_mean_field(obj: DrObjective, variant: str = "half", cfg: SolverConfig | None = None) -> SolverReport:
    """Double Greedy initializer followed by ``cfg.epochs`` coordinate-ascent sweeps.

    The ascent epochs use the orders of epochs 1..T, so the initializer's
    pass and a plain coordinate ascent's first sweep share epoch 0's order.
    """
    cfg = cfg or SolverConfig()
    if variant == "half":
        init = dr_double_greedy(obj, cfg)
    elif variant == "third":
        init = submodular_double_greedy(obj, cfg)
    else:
        raise ValueError(f"variant must be 'half' or 'third', got {variant!r}")
    start = time.perf_counter()
    trace = list(init.trajectory)
    log = list(init.assertion_log)
    x, fx, ran = _ascent(obj, init.final_x.copy(), cfg, 1, cfg.epochs, trace, log, 2)
    return SolverReport(
        f"dgmf-{variant}", x, fx, trace, init.certificate, log,
        init.runtime + time.perf_counter() - start, 1 + ran,
    )


Solver = Callable[[DrObjective, SolverConfig], SolverReport]

SOLVERS: dict[str, Solver] = {}


def register_solver(name: str, fn: Solver | None = None):
    """Add a solver under ``name``; usable as a decorator.

    External methods (for instance binary-search bi-greedy or shrunken
    Frank-Wolfe) plug in here with the same ``(objective, config)`` signature.
    """
    def deco(f):
        if name in SOLVERS:
            raise ValueError(f"solver {name!r} already registered")
        SOLVERS[name] = f
        return f

    return deco(fn) if fn is not None else deco


def get_solver(name: str) -> Solver:
    try:
        return SOLVERS[name]
    except KeyError:
        raise KeyError(f"unknown solver {name!r}; known: {sorted(SOLVERS)}") from None


register_solver("dr-dg", dr_double_greedy)
register_solver("sub-dg", submodular_double_greedy)
register_solver("ca-0", lambda obj, cfg: coordinate_ascent(obj, "zeros", cfg))
register_solver("ca-1", lambda obj, cfg: coordinate_ascent(obj, "ones", cfg))
register_solver("ca-random", lambda obj, cfg: coordinate_ascent(obj, "random", cfg))
register_solver("dgmf-half", lambda obj, cfg: dg_mean_field(obj, "half", cfg))
register_solver("dgmf-third", lambda obj, cfg: dg_mean_field(obj, "third", cfg))
