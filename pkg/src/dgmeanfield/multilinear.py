"""Multilinear extension ``m(x) = E_{S ~ q(.|x)} F(S)`` and its gradient.

Three evaluation modes share one interface:

* ``closed_form`` -- polynomial-time formulas for FLID, cuts, Gibbs
  polynomials, set cover and modular functions;
* ``enumeration`` -- the defining sum over all ``2**n`` subsets (n <= 20);
* ``sampling`` -- Monte-Carlo mean over ``k`` seeded draws.

Partial derivatives always follow ``m(x; i<-1) - m(x; i<-0)``; this is exact
because ``m`` is affine in each coordinate.
"""
from __future__ import annotations

import math

import numpy as np

from .core import DomainError, as_point, check_index
from .set_functions import (
    MAX_ENUM_N,
    CutGraph,
    FlidModel,
    GibbsPolynomial,
    ModularFunction,
    SetCoverInstance,
    SetFunction,
    mask_bits,
)

CLOSED_FORM_FAMILIES = (FlidModel, CutGraph, GibbsPolynomial, SetCoverInstance, ModularFunction)
_SAMPLE_CHUNK = 1 << 14


def _check_unit(x, n: int) -> np.ndarray:
    x = as_point(x, n)
    if not (np.all(x >= 0.0) and np.all(x <= 1.0)):
        raise DomainError(f"point {x.tolist()} lies outside [0, 1]^{n}")
    return x


def flid_sort(W) -> np.ndarray:
    """Per-column ascending order of ``W``; ties broken by item index. Shape (D, n)."""
    W = np.asarray(W)
    return np.stack([np.argsort(W[:, d], kind="stable") for d in range(W.shape[1])])


def _flid_value(model: FlidModel, perms: np.ndarray, wsorted: np.ndarray, x: np.ndarray) -> float:
    xs = x[perms]
    keep = np.cumprod((1.0 - xs)[:, ::-1], axis=1)[:, ::-1]
    # after[d, l] = prod_{m > l} (1 - x_{i_d(m)})
    after = np.concatenate([keep[:, 1:], np.ones((xs.shape[0], 1))], axis=1)
    return float(model.u_prime @ x + np.sum(wsorted * xs * after))


def _cut_value(model: CutGraph, x: np.ndarray) -> float:
    a, b = x[model.src], x[model.dst]
    if model.directed:
        return float(model.weights @ (a * (1.0 - b)))
    return float(0.5 * (model.weights @ (a + b - 2.0 * a * b)))


def _gibbs_value(model: GibbsPolynomial, x: np.ndarray) -> float:
    return math.fsum(theta * float(np.prod(x[list(vs)])) for vs, theta in model.terms)


def _setcover_value(model: SetCoverInstance, x: np.ndarray) -> float:
    return math.fsum(
        w * (1.0 - float(np.prod(1.0 - x[list(items)]))) for w, items in zip(model.weights, model.covers)
    )


def enumeration_weights(X: np.ndarray, start: int, stop: int) -> np.ndarray:
    """``q(S | x)`` for masks ``start..stop-1`` and every row of ``X``; shape (k, stop-start)."""
    B = mask_bits(start, stop, X.shape[1])
    return np.prod(np.where(B[None, :, :], X[:, None, :], 1.0 - X[:, None, :]), axis=2)


def multilinear_enumerate(values: np.ndarray, X) -> np.ndarray:
    """Defining sum over all subsets for each row of ``X``, given the value table."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    total = 1 << n
    if values.shape != (total,):
        raise DomainError(f"value table has {values.shape} entries, expected {total}")
    chunk = max(1, (1 << 20) // max(1, X.shape[0] * n))
    out = np.zeros(X.shape[0])
    for s in range(0, total, chunk):
        e = min(s + chunk, total)
        out += enumeration_weights(X, s, e) @ values[s:e]
    return out


def multilinear_sample(model: SetFunction, x, k: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate of ``m(x)`` from ``k`` draws, with its standard error.

    Draws use a Philox counter-based generator seeded with ``seed``; element
    ``i`` is included when its uniform variate is below ``x_i``.
    """
    x = _check_unit(x, model.n)
    vals = _sample_values(model, x, None, int(k), seed)
    return _mean_stderr(vals)


def _mean_stderr(vals: np.ndarray) -> tuple[float, float]:
    k = vals.size
    stderr = float(np.std(vals, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return float(np.mean(vals)), stderr


def _sample_values(model: SetFunction, x: np.ndarray, force: tuple[int, bool] | None, k: int, seed) -> np.ndarray:
    if k < 1:
        raise ValueError(f"sample count must be >= 1, got {k}")
    rng = np.random.Generator(np.random.Philox(seed))
    out = np.empty(k)
    for s in range(0, k, _SAMPLE_CHUNK):
        e = min(s + _SAMPLE_CHUNK, k)
        V = rng.random((e - s, model.n)) < x
        if force is not None:
            V[:, force[0]] = force[1]
        out[s:e] = model.batch(V)
    return out


class MultilinearOracle:
    """Value and gradient of the multilinear extension of ``model``.

    ``mode`` is ``"closed_form"``, ``"enumeration"``, ``"sampling"`` or
    ``"auto"`` (closed form when the family has one, enumeration otherwise).
    """

    def __init__(self, model: SetFunction, mode: str = "auto", samples: int = 10_000, seed: int = 0):
        if mode == "auto":
            mode = "closed_form" if isinstance(model, CLOSED_FORM_FAMILIES) else "enumeration"
        if mode == "closed_form" and not isinstance(model, CLOSED_FORM_FAMILIES):
            raise ValueError(f"no closed form for {type(model).__name__}; use enumeration or sampling")
        if mode == "enumeration" and model.n > MAX_ENUM_N:
            raise DomainError(f"enumeration needs n <= {MAX_ENUM_N}, got n={model.n}")
        if mode == "sampling" and samples < 1:
            raise ValueError(f"sample count must be >= 1, got {samples}")
        if mode not in ("closed_form", "enumeration", "sampling"):
            raise ValueError(f"unknown mode {mode!r}")
        self.model = model
        self.mode = mode
        self.samples = int(samples)
        self.seed = seed
        self._table = None
        if mode == "closed_form" and isinstance(model, FlidModel):
            self.perms = flid_sort(model.W)
            self._wsorted = np.take_along_axis(model.W.T, self.perms, axis=1)

    @property
    def n(self) -> int:
        return self.model.n

    def table(self) -> np.ndarray:
        if self._table is None:
            self._table = self.model.table()
            self._table.flags.writeable = False
        return self._table

    def _value(self, x: np.ndarray) -> float:
        if self.mode == "enumeration":
            return float(multilinear_enumerate(self.table(), x[None, :])[0])
        if self.mode == "sampling":
            return _mean_stderr(_sample_values(self.model, x, None, self.samples, self.seed))[0]
        model = self.model
        if isinstance(model, FlidModel):
            return _flid_value(model, self.perms, self._wsorted, x)
        if isinstance(model, CutGraph):
            return _cut_value(model, x)
        if isinstance(model, GibbsPolynomial):
            return _gibbs_value(model, x)
        if isinstance(model, SetCoverInstance):
            return _setcover_value(model, x)
        return float(model.weights @ x)

    def value(self, x) -> float:
        return self._value(_check_unit(x, self.n))

    def value_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n or np.any(X < 0) or np.any(X > 1):
            raise DomainError(f"points must lie in [0, 1]^{self.n}")
        if self.mode == "enumeration":
            return multilinear_enumerate(self.table(), X)
        return np.array([self._value(x) for x in X])

    def partial(self, i: int, x) -> float:
        x = _check_unit(x, self.n)
        i = check_index(i, self.n)
        if self.mode == "sampling":
            # common random numbers for both endpoints
            hi = _sample_values(self.model, x, (i, True), self.samples, self.seed)
            lo = _sample_values(self.model, x, (i, False), self.samples, self.seed)
            return float(np.mean(hi) - np.mean(lo))
        hi, lo = x.copy(), x.copy()
        hi[i], lo[i] = 1.0, 0.0
        return self._value(hi) - self._value(lo)

    def grad(self, x) -> np.ndarray:
        x = _check_unit(x, self.n)
        return np.array([self.partial(i, x) for i in range(self.n)])


def multilinear_value(oracle: MultilinearOracle, x) -> float:
    return oracle.value(x)


def multilinear_grad(oracle: MultilinearOracle, x) -> np.ndarray:
    return oracle.grad(x)


def gibbs_grad_analytic(model: GibbsPolynomial, x) -> np.ndarray:
    """Term-wise derivative of the Gibbs polynomial at ``x``."""
    x = _check_unit(x, model.n)
    g = np.zeros(model.n)
    for vs, theta in model.terms:
        for pos, v in enumerate(vs):
            rest = vs[:pos] + vs[pos + 1 :]
            g[v] += theta * float(np.prod(x[list(rest)]))
    return g


def _require_flid(oracle: MultilinearOracle) -> FlidModel:
    if not (isinstance(oracle.model, FlidModel) and oracle.mode == "closed_form"):
        raise TypeError("refined gradient needs a closed-form FLID oracle")
    return oracle.model


def flid_grad_refined(oracle: MultilinearOracle, i: int, x) -> float:
    """Partial derivative of the FLID extension in O(Dn) from the sorted columns.

    For column ``d`` with ``i`` at sorted position ``p``, the contribution is
    ``P * (W[i, d] - A)``: ``P`` is the probability that no item ranked above
    ``p`` is chosen, ``A`` the expected column maximum over items ranked below.
    """
    model = _require_flid(oracle)
    x = _check_unit(x, model.n)
    i = check_index(i, model.n)
    total = float(model.u_prime[i])
    for d in range(model.D):
        order = oracle.perms[d]
        p = int(np.flatnonzero(order == i)[0])
        below = 0.0
        for l in range(p):
            j = order[l]
            below = below * (1.0 - x[j]) + model.W[j, d] * x[j]
        above = float(np.prod(1.0 - x[order[p + 1 :]]))
        total += above * (model.W[i, d] - below)
    return total


def flid_grad_refined_all(oracle: MultilinearOracle, x) -> np.ndarray:
    """All partials at once with the same recursion, O(Dn) total after sorting."""
    model = _require_flid(oracle)
    x = _check_unit(x, model.n)
    g = model.u_prime.copy()
    xs = x[oracle.perms]
    ws = oracle._wsorted
    keep = np.cumprod((1.0 - xs)[:, ::-1], axis=1)[:, ::-1]
    after = np.concatenate([keep[:, 1:], np.ones((model.D, 1))], axis=1)
    below = np.zeros_like(xs)
    for l in range(1, model.n):
        below[:, l] = below[:, l - 1] * (1.0 - xs[:, l - 1]) + ws[:, l - 1] * xs[:, l - 1]
    np.add.at(g, oracle.perms.ravel(), (after * (ws - below)).ravel())
    return g


__all__ = [
    "MultilinearOracle",
    "multilinear_value",
    "multilinear_grad",
    "multilinear_sample",
    "multilinear_enumerate",
    "flid_grad_refined",
    "flid_grad_refined_all",
    "gibbs_grad_analytic",
    "flid_sort",
]
