"""Log-partition bounds and the posterior-agreement lower bound.

For ``p(S) ~ exp(beta F(S))``:

* exact ``ln Z`` by enumeration (n <= 20);
* an upper bound from modular majorants: with the bar supergradient ``s``
  at ``A``, ``F(S) <= F(A) - s(A) + s(S)`` and hence
  ``ln Z <= F(A) - s(A) + sum_i ln(1 + exp(s_i))``, minimized over ``A``;
* a lower bound from any mean-field point (the ELBO).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import DomainError
from .objectives import ElboObjective, PaElboObjective
from .set_functions import MAX_ENUM_N, SetFunction, indicator, mask_bits
from .solvers import SolverConfig, SolverReport, dg_mean_field


def _require_enum(F: SetFunction, what: str) -> None:
    if F.n > MAX_ENUM_N:
        raise DomainError(f"{what} needs n <= {MAX_ENUM_N}, got n={F.n}")


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be a positive finite number, got {beta}")
    return beta


def exact_log_partition(F: SetFunction, beta: float = 1.0) -> float:
    """``ln sum_S exp(beta F(S))`` by enumeration with max-shift."""
    _require_enum(F, "exact log-partition")
    return float(logsumexp(_check_beta(beta) * F.table()))


def exact_pa_objective(F1: SetFunction, F2: SetFunction, beta: float = 1.0) -> float:
    """``ln sum_S p_beta(S|F1) p_beta(S|F2)`` by enumeration."""
    _require_enum(F1, "exact PA objective")
    if F1.n != F2.n:
        raise DomainError(f"folds disagree on ground set size: {F1.n} vs {F2.n}")
    beta = _check_beta(beta)
    t1, t2 = beta * F1.table(), beta * F2.table()
    return float(logsumexp(t1 + t2) - logsumexp(t1) - logsumexp(t2))


def _marginals(F: SetFunction) -> tuple[float, np.ndarray, np.ndarray]:
    """``F(empty)``, singleton gains ``F(i | empty)`` and co-singleton gains ``F(i | V - i)``."""
    n = F.n
    eye = np.eye(n, dtype=bool)
    rows = np.vstack([np.zeros((1, n), bool), eye, np.ones((1, n), bool), ~eye])
    vals = F.batch(rows)
    f0, single, fv, rest = vals[0], vals[1 : n + 1], vals[n + 1], vals[n + 2 :]
    return float(f0), single - f0, fv - rest


def bar_supergradient(F: SetFunction, A) -> np.ndarray:
    """``s_i = F(i | V - i)`` for ``i`` in ``A`` and ``F(i | empty)`` otherwise."""
    inA = indicator(A, F.n)
    _, single, co = _marginals(F)
    return np.where(inA, co, single)


def _softplus(s):
    return np.logaddexp(0.0, s)


def modular_bound_value(F: SetFunction, A, beta: float = 1.0) -> float:
    """``log Z+(s, beta F(A) - s(A))`` with ``s`` the bar supergradient of ``beta F`` at ``A``."""
    beta = _check_beta(beta)
    inA = indicator(A, F.n)
    s = beta * bar_supergradient(F, np.flatnonzero(inA))
    c = beta * F.batch(inA[None, :])[0] - float(s[inA].sum())
    return float(c + _softplus(s).sum())


def _bound_terms(F: SetFunction, beta: float):
    # bound(A) = beta F(A) + sum_{i in A} per_in_i + sum_{i not in A} per_out_i
    _, single, co = _marginals(F)
    per_in = _softplus(beta * co) - beta * co
    per_out = _softplus(beta * single)
    return per_in, per_out


def log_partition_upper(
    F: SetFunction,
    beta: float = 1.0,
    strategy: str = "exhaustive",
    seed: int = 0,
    restarts: int = 10,
) -> tuple[float, tuple[int, ...]]:
    """Smallest bar-supergradient bound on ``ln Z`` over the visited sets ``A``.

    ``exhaustive`` visits every subset (n <= 20). ``local_search`` runs
    single-element add/remove descent from ``restarts`` random starts; any
    value it returns is still a valid upper bound.
    """
    beta = _check_beta(beta)
    per_in, per_out = _bound_terms(F, beta)
    n = F.n
    if strategy == "exhaustive":
        _require_enum(F, "exhaustive bound search")
        total = 1 << n
        best, best_mask = math.inf, 0
        step = 1 << 14
        for s in range(0, total, step):
            B = mask_bits(s, min(s + step, total), n)
            vals = beta * F.batch(B) + B @ per_in + (~B) @ per_out
            k = int(np.argmin(vals))
            if vals[k] < best:
                best, best_mask = float(vals[k]), s + k
        return best, tuple(i for i in range(n) if best_mask >> i & 1)
    if strategy != "local_search":
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = np.random.default_rng(seed)

    def bound(v):
        return float(beta * F.batch(v[None, :])[0] + per_in[v].sum() + per_out[~v].sum())

    best, best_set = math.inf, None
    for _ in range(max(1, int(restarts))):
        v = rng.random(n) < 0.5
        cur = bound(v)
        improved = True
        while improved:
            improved = False
            for i in range(n):
                v[i] = not v[i]
                cand = bound(v)
                if cand < cur - 1e-15:
                    cur, improved = cand, True
                else:
                    v[i] = not v[i]
        if cur < best:
            best, best_set = cur, tuple(np.flatnonzero(v).tolist())
    return best, best_set


@dataclass
class PartitionReport:
    log_z_upper: float
    upper_set: tuple[int, ...]
    elbo_lower: float
    elbo_x: np.ndarray
    log_z_exact: float | None = None


def partition_report(
    F: SetFunction,
    cfg: SolverConfig | None = None,
    strategy: str | None = None,
    exact: bool | None = None,
) -> PartitionReport:
    """Sandwich ``ELBO <= ln Z <= bound`` at unit temperature."""
    if strategy is None:
        strategy = "exhaustive" if F.n <= MAX_ENUM_N else "local_search"
    if exact is None:
        exact = F.n <= MAX_ENUM_N
    rep = dg_mean_field(ElboObjective(F), "half", cfg or SolverConfig(epochs=6))
    upper, A = log_partition_upper(F, 1.0, strategy)
    return PartitionReport(upper, A, rep.final_value, rep.final_x,
                           exact_log_partition(F) if exact else None)


@dataclass
class PaBound:
    """Certified lower bound on the PA objective and its parts."""

    lower_bound: float
    pa_elbo: float
    x: np.ndarray
    log_z_upper: tuple[float, float]
    upper_sets: tuple[tuple[int, ...], tuple[int, ...]]
    exact: float | None = None
    report: SolverReport | None = field(default=None, repr=False)


def pa_lower_bound(
    F1: SetFunction,
    F2: SetFunction,
    beta: float = 1.0,
    solver_cfg: SolverConfig | None = None,
    bound_strategy: str | None = None,
    exact: bool | None = None,
) -> PaBound:
    """PA-ELBO maximized by DG-MeanField-1/2, minus an upper bound on each fold's ``ln Z``."""
    beta = _check_beta(beta)
    if F1.n != F2.n:
        raise DomainError(f"folds disagree on ground set size: {F1.n} vs {F2.n}")
    if bound_strategy is None:
        bound_strategy = "exhaustive" if F1.n <= MAX_ENUM_N else "local_search"
    if exact is None:
        exact = F1.n <= MAX_ENUM_N
    rep = dg_mean_field(PaElboObjective(F1, F2, beta), "half", solver_cfg or SolverConfig(epochs=6))
    u1, A1 = log_partition_upper(F1, beta, bound_strategy)
    u2, A2 = log_partition_upper(F2, beta, bound_strategy)
    return PaBound(
        rep.final_value - u1 - u2, rep.final_value, rep.final_x, (u1, u2), (A1, A2),
        exact_pa_objective(F1, F2, beta) if exact else None, rep,
    )
