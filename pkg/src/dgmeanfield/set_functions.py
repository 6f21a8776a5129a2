"""Submodular set-function families.

Every model evaluates ``F(S)`` for an explicit subset and, vectorized, for a
stack of 0/1 indicator rows. Models are immutable after construction.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import DomainError, check_index

MAX_ENUM_N = 20
_CHUNK = 1 << 14


class ModelError(ValueError):
    """Invalid model parameters."""


class SubmodularityError(ModelError):
    """The model fails the submodularity condition it was validated against."""


def mask_bits(start: int, stop: int, n: int) -> np.ndarray:
    """Indicator rows for masks ``start..stop-1``; bit ``i`` is element ``i``."""
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def indicator(S: Iterable[int], n: int) -> np.ndarray:
    v = np.zeros(n, dtype=bool)
    for i in S:
        v[check_index(i, n)] = True
    return v


def _finite(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{name} contains non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


class SetFunction(ABC):
    """Base class: ``F(S)`` over the ground set ``0..n-1``."""

    kind: str = "abstract"
    n: int

    def __call__(self, S: Iterable[int]) -> float:
        return self.value(S)

    def value(self, S: Iterable[int]) -> float:
        return float(self.batch(indicator(S, self.n)[None, :])[0])

    def batch(self, V) -> np.ndarray:
        """Evaluate ``F`` on every row of a (k, n) 0/1 indicator array."""
        V = np.asarray(V).astype(bool)
        if V.ndim != 2 or V.shape[1] != self.n:
            raise DomainError(f"indicator array must have shape (k, {self.n}), got {V.shape}")
        if V.shape[0] <= _CHUNK:
            return self._batch(V)
        return np.concatenate(
            [self._batch(V[s : s + _CHUNK]) for s in range(0, V.shape[0], _CHUNK)]
        )

    @abstractmethod
    def _batch(self, V: np.ndarray) -> np.ndarray: ...

    def table(self) -> np.ndarray:
        """All ``2**n`` values, indexed by bitmask."""
        if self.n > MAX_ENUM_N:
            raise DomainError(f"enumeration needs n <= {MAX_ENUM_N}, got n={self.n}")
        total = 1 << self.n
        return np.concatenate(
            [self._batch(mask_bits(s, min(s + _CHUNK, total), self.n)) for s in range(0, total, _CHUNK)]
        )


class ModularFunction(SetFunction):
    kind = "modular"

    def __init__(self, weights: Sequence[float]):
        w = _finite("weights", np.asarray(weights, dtype=float))
        if w.ndim != 1 or w.size < 1:
            raise ModelError("weights must be a non-empty vector")
        self.weights = _frozen(w)
        self.n = w.size

    def _batch(self, V):
        return V.astype(float) @ self.weights


class FlidModel(SetFunction):
    """Facility-location diversity model.

    ``F(S) = sum_{i in S} u'_i + sum_d max_{i in S} W[i, d]`` with
    ``u' = u - W.sum(axis=1)``. ``u`` may be any real vector.
    """

    kind = "flid"

    def __init__(self, W, u):
        W = np.asarray(W, dtype=float)
        u = np.asarray(u, dtype=float)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise ModelError(f"W must be an n x D matrix, got shape {W.shape}")
        if u.shape != (W.shape[0],):
            raise ModelError(f"u must have length {W.shape[0]}, got shape {u.shape}")
        _finite("W", W)
        _finite("u", u)
        neg = np.argwhere(W < 0)
        if neg.size:
            i, d = neg[0]
            raise ModelError(f"W[{i}][{d}] = {W[i, d]} is negative")
        self.W = _frozen(W)
        self.u = _frozen(u)
        self.u_prime = _frozen(u - W.sum(axis=1))
        self.n, self.D = W.shape

    @classmethod
    def facility_location(cls, W) -> "FlidModel":
        W = np.asarray(W, dtype=float)
        return cls(W, W.sum(axis=1))

    def _batch(self, V):
        covered = np.where(V[:, :, None], self.W[None, :, :], 0.0).max(axis=1).sum(axis=1)
        return V.astype(float) @ self.u_prime + covered


class CutGraph(SetFunction):
    """Weighted cut function of a directed or undirected graph.

    Directed: ``F(S) = sum w_ij [i in S][j not in S]``.
    Undirected: ``F(S) = 1/2 sum w_ij (v_i + v_j - 2 v_i v_j)``.
    Duplicate edges are merged by summing weights.
    """

    kind = "cut"

    def __init__(self, n: int, edges: Iterable[Sequence[float]], directed: bool = True):
        if int(n) < 1:
            raise ModelError(f"n must be >= 1, got {n}")
        self.n = int(n)
        self.directed = bool(directed)
        merged: dict[tuple[int, int], float] = {}
        for e in edges:
            if len(e) != 3:
                raise ModelError(f"edge must be (src, dst, weight), got {e!r}")
            s, t, w = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= s < self.n and 0 <= t < self.n):
                raise ModelError(f"edge ({s}, {t}) has an endpoint outside 0..{self.n - 1}")
            if s == t:
                raise ModelError(f"self-loop on node {s}")
            if not math.isfinite(w) or w < 0:
                raise ModelError(f"edge ({s}, {t}) has invalid weight {w}")
            key = (s, t) if self.directed else (min(s, t), max(s, t))
            merged[key] = merged.get(key, 0.0) + w
        keys = sorted(merged)
        self.src = np.array([k[0] for k in keys], dtype=np.int64)
        self.dst = np.array([k[1] for k in keys], dtype=np.int64)
        self.weights = _frozen([merged[k] for k in keys])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(s), int(t), float(w)) for s, t, w in zip(self.src, self.dst, self.weights)]

    def _batch(self, V):
        a = V[:, self.src].astype(float)
        b = V[:, self.dst].astype(float)
        if self.directed:
            return (a * (1.0 - b)) @ self.weights
        return 0.5 * ((a + b - 2.0 * a * b) @ self.weights)


class GibbsPolynomial(SetFunction):
    """Negative energy with finite-order interactions, ``sum_T theta_T prod_{t in T} v_t``.

    ``validate`` selects how submodularity is established at construction:
    ``"sign"`` requires ``theta_T <= 0`` whenever ``|T| >= 2``; ``"exhaustive"``
    defers to :func:`check_submodular`; ``"none"`` skips validation.
    """

    kind = "gibbs"

    def __init__(self, n: int, terms: Iterable[tuple[Iterable[int], float]], validate: str = "sign"):
        if int(n) < 1:
            raise ModelError(f"n must be >= 1, got {n}")
        self.n = int(n)
        merged: dict[tuple[int, ...], float] = {}
        for varset, theta in terms:
            vs = tuple(sorted(int(v) for v in varset))
            if not vs:
                raise ModelError("interaction term with an empty variable set")
            if len(set(vs)) != len(vs):
                raise ModelError(f"interaction term {vs} repeats a variable")
            if vs[0] < 0 or vs[-1] >= self.n:
                raise ModelError(f"interaction term {vs} has a variable outside 0..{self.n - 1}")
            theta = float(theta)
            if not math.isfinite(theta):
                raise ModelError(f"term {vs} has non-finite coefficient")
            merged[vs] = merged.get(vs, 0.0) + theta
        self.terms: tuple[tuple[tuple[int, ...], float], ...] = tuple(
            (vs, merged[vs]) for vs in sorted(merged, key=lambda t: (len(t), t))
        )
        self.order = max((len(vs) for vs, _ in self.terms), default=0)
        if validate == "sign":
            for vs, theta in self.terms:
                if len(vs) >= 2 and theta > 0:
                    raise SubmodularityError(
                        f"term {list(vs)} has positive coefficient {theta}; "
                        "use validate='exhaustive' to check submodularity directly"
                    )
        elif validate == "exhaustive":
            verdict = check_submodular(self)
            if not verdict.submodular:
                raise SubmodularityError(f"model is not submodular: {verdict.violation}")
        elif validate != "none":
            raise ValueError(f"unknown validate mode {validate!r}")

    @classmethod
    def ising(cls, unary: Sequence[float], pairwise: Iterable[tuple[int, int, float]], **kw) -> "GibbsPolynomial":
        terms = [((s,), float(t)) for s, t in enumerate(unary)]
        terms += [((s, t), float(w)) for s, t, w in pairwise]
        return cls(len(unary), terms, **kw)

    def _batch(self, V):
        out = np.zeros(V.shape[0])
        for vs, theta in self.terms:
            out += theta * V[:, list(vs)].all(axis=1)
        return out


class SetCoverInstance(SetFunction):
    """Weighted coverage, ``F(S) = sum_c m_c [S hits items(c)]``."""

    kind = "setcover"

    def __init__(self, n: int, concepts: Iterable[tuple[float, Iterable[int]]]):
        if int(n) < 1:
            raise ModelError(f"n must be >= 1, got {n}")
        self.n = int(n)
        weights, covers = [], []
        for c, (w, items) in enumerate(concepts):
            w = float(w)
            if not math.isfinite(w) or w < 0:
                raise ModelError(f"concept {c} has invalid weight {w}")
            items = tuple(sorted({int(i) for i in items}))
            if not items:
                raise ModelError(f"concept {c} is covered by no item")
            if items[0] < 0 or items[-1] >= self.n:
                raise ModelError(f"concept {c} lists an item outside 0..{self.n - 1}")
            weights.append(w)
            covers.append(items)
        self.weights = _frozen(weights)
        self.covers: tuple[tuple[int, ...], ...] = tuple(covers)

    @property
    def concepts(self) -> list[tuple[float, tuple[int, ...]]]:
        return list(zip(self.weights.tolist(), self.covers))

    def _batch(self, V):
        out = np.zeros(V.shape[0])
        for w, items in zip(self.weights, self.covers):
            out += w * V[:, list(items)].any(axis=1)
        return out


class TableFunction(SetFunction):
    """Explicit value table; ``values[mask]`` is ``F`` of the set encoded by ``mask``."""

    kind = "table"

    def __init__(self, values: Sequence[float]):
        vals = _finite("values", np.asarray(values, dtype=float))
        n = int(vals.size).bit_length() - 1
        if vals.ndim != 1 or vals.size < 2 or vals.size != 1 << n:
            raise ModelError(f"table length must be 2**n with n >= 1, got {vals.size}")
        if n > MAX_ENUM_N:
            raise ModelError(f"table needs n <= {MAX_ENUM_N}, got n={n}")
        self.n = n
        self.values = _frozen(vals)
        self._pow = 1 << np.arange(n, dtype=np.int64)

    def _batch(self, V):
        return self.values[V.astype(np.int64) @ self._pow]

    def table(self):
        return self.values.copy()


class ConcaveOverModular(SetFunction):
    """``F(S) = sum_j w_j (sum_{i in S} m^j_i)^a`` with ``a`` in (0, 1]."""

    kind = "concave_modular"

    def __init__(self, weights: Sequence[float], modular, exponent: float):
        w = _finite("weights", np.asarray(weights, dtype=float))
        M = _finite("modular", np.atleast_2d(np.asarray(modular, dtype=float)))
        if w.ndim != 1 or M.shape[0] != w.size or M.shape[1] < 1:
            raise ModelError(f"need one modular row per weight, got {w.size} weights and rows {M.shape}")
        if np.any(w < 0):
            raise ModelError("concave-over-modular weights must be non-negative")
        neg = np.argwhere(M < 0)
        if neg.size:
            j, i = neg[0]
            raise ModelError(f"modular[{j}][{i}] = {M[j, i]} is negative")
        a = float(exponent)
        if not 0 < a <= 1:
            raise ModelError(f"exponent must lie in (0, 1], got {a}")
        self.weights = _frozen(w)
        self.modular = _frozen(M)
        self.exponent = a
        self.n = M.shape[1]

    def _batch(self, V):
        return np.power(V.astype(float) @ self.modular.T, self.exponent) @ self.weights


def to_table(F: SetFunction) -> TableFunction:
    return TableFunction(F.table())


def modular_approximation(f: ConcaveOverModular) -> ModularFunction:
    """Modular surrogate ``sum_j w_j sum_{i in S} (m^j_i)^a``.

    Exact for ``a = 1``; otherwise within a factor ``O(|S|^(1-a))``.
    """
    if np.any(np.asarray(f.modular) < 0):
        raise ModelError("modular entries must be non-negative")
    return ModularFunction(np.power(f.modular, f.exponent).T @ f.weights)


@dataclass(frozen=True)
class SubmodularityVerdict:
    submodular: bool
    mode: str
    checked: int
    # (S, T, i, F(S+i)-F(S), F(T+i)-F(T)) for the first violating triple
    violation: tuple | None = None

    def __bool__(self):
        return self.submodular


def _mask_to_set(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def check_submodular(
    F: SetFunction,
    mode: str = "auto",
    samples: int = 2000,
    seed: int = 0,
    atol: float = 1e-9,
) -> SubmodularityVerdict:
    """Test diminishing returns ``F(S+i) - F(S) >= F(T+i) - F(T)`` for ``S <= T``, ``i`` not in ``T``.

    Exhaustive mode checks every ``S`` and pair ``i != j`` outside ``S`` with
    ``T = S + j``, which is equivalent to the full condition and is a proof for
    the given table. Spot mode samples ``(S, T, i)`` triples directly.
    """
    n = F.n
    if mode == "auto":
        mode = "exhaustive" if n <= MAX_ENUM_N else "spot"
    if mode == "exhaustive":
        if n > MAX_ENUM_N:
            raise DomainError(f"exhaustive check needs n <= {MAX_ENUM_N}, got n={n}")
        vals = F.table()
        masks = np.arange(1 << n, dtype=np.int64)
        checked = 0
        for i in range(n):
            bi = 1 << i
            for j in range(i + 1, n):
                bj = 1 << j
                S = masks[(masks & (bi | bj)) == 0]
                lhs = vals[S | bi] - vals[S]
                rhs = vals[S | bi | bj] - vals[S | bj]
                checked += S.size
                bad = np.flatnonzero(lhs < rhs - atol)
                if bad.size:
                    k = bad[0]
                    s = int(S[k])
                    return SubmodularityVerdict(
                        False, mode, checked,
                        (_mask_to_set(s, n), _mask_to_set(s | bj, n), i, float(lhs[k]), float(rhs[k])),
                    )
        return SubmodularityVerdict(True, mode, checked)
    if mode != "spot":
        raise ValueError(f"unknown mode {mode!r}")
    if n < 1:
        return SubmodularityVerdict(True, mode, 0)
    rng = np.random.default_rng(seed)
    for k in range(samples):
        i = int(rng.integers(n))
        T = rng.random(n) < rng.random()
        T[i] = False
        S = T & (rng.random(n) < rng.random())
        Si, Ti = S.copy(), T.copy()
        Si[i] = Ti[i] = True
        vals = F.batch(np.stack([S, Si, T, Ti]))
        lhs, rhs = vals[1] - vals[0], vals[3] - vals[2]
        if lhs < rhs - atol:
            return SubmodularityVerdict(
                False, mode, k + 1,
                (tuple(np.flatnonzero(S).tolist()), tuple(np.flatnonzero(T).tolist()), i, float(lhs), float(rhs)),
            )
    return SubmodularityVerdict(True, mode, samples)
