"""Mean-field objectives and 1-D coordinate solvers.

ELBO:     ``f(x) = m(x) + sum_i H(x_i)``
PA-ELBO:  ``f(x) = beta * m1(x) + beta * m2(x) + sum_i H(x_i)``

with ``H`` the binary entropy in nats. Along one coordinate both objectives
are ``g * t + H(t) + const``, maximized exactly at ``t = sigmoid(g)``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import entr, expit

from .core import BoxDomain, DomainError, DrObjective, as_point, check_index
from .multilinear import MultilinearOracle
from .set_functions import SetFunction

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def entropy(t: float) -> float:
    """Binary entropy ``-[t ln t + (1-t) ln(1-t)]`` with ``0 ln 0 = 0``."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"entropy argument {t} outside [0, 1]")
    return float(entr(t) + entr(1.0 - t))


def entropy_sum(x) -> float:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("entropy argument outside [0, 1]")
    return float(np.sum(entr(x) + entr(1.0 - x)))


def _oracle(model_or_oracle) -> MultilinearOracle:
    if isinstance(model_or_oracle, MultilinearOracle):
        return model_or_oracle
    if isinstance(model_or_oracle, SetFunction):
        return MultilinearOracle(model_or_oracle)
    raise TypeError(f"expected a SetFunction or MultilinearOracle, got {type(model_or_oracle).__name__}")


class MeanFieldObjective(DrObjective):
    """Linear-in-each-coordinate term plus entropy on the unit box."""

    delta = 0.0

    def __init__(self, n: int):
        self._domain = BoxDomain.unit(n)

    @property
    def domain(self) -> BoxDomain:
        return self._domain

    def linear_value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def linear_partial(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def value(self, x) -> float:
        x = self._domain.check(x)
        return self.linear_value(x) + entropy_sum(x)

    def coord_max(self, i: int, x) -> tuple[float, float]:
        x = self._domain.check(x)
        i = check_index(i, self.n)
        g = self.linear_partial(i, x)
        if not math.isfinite(g):
            raise FloatingPointError(f"non-finite partial derivative {g} at coordinate {i}")
        u = float(expit(g))
        moved = x.copy()
        moved[i] = u
        return u, self.value(moved) - self.value(x)


class ElboObjective(MeanFieldObjective):
    def __init__(self, model):
        self.oracle = _oracle(model)
        super().__init__(self.oracle.n)

    def linear_value(self, x):
        return self.oracle.value(x)

    def linear_partial(self, i, x):
        return self.oracle.partial(i, x)


class PaElboObjective(MeanFieldObjective):
    def __init__(self, model1, model2, beta: float = 1.0):
        self.oracle1 = _oracle(model1)
        self.oracle2 = _oracle(model2)
        if self.oracle1.n != self.oracle2.n:
            raise DomainError(f"folds disagree on ground set size: {self.oracle1.n} vs {self.oracle2.n}")
        beta = float(beta)
        if not (beta > 0 and math.isfinite(beta)):
            raise ValueError(f"beta must be a positive finite number, got {beta}")
        self.beta = beta
        super().__init__(self.oracle1.n)

    def linear_value(self, x):
        return self.beta * self.oracle1.value(x) + self.beta * self.oracle2.value(x)

    def linear_partial(self, i, x):
        return self.beta * self.oracle1.partial(i, x) + self.beta * self.oracle2.partial(i, x)


def elbo_value(obj: ElboObjective, x) -> float:
    return obj.value(x)


def pa_elbo_value(obj: PaElboObjective, x) -> float:
    return obj.value(x)


def coord_max_closed_form(obj: MeanFieldObjective, i: int, x) -> tuple[float, float]:
    return obj.coord_max(i, x)


def _golden_section(phi: Callable[[float], float], lo: float, hi: float, tol: float):
    """Maximize a concave ``phi`` on ``[lo, hi]``; returns (point, value, width, all values)."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = phi(c), phi(d)
    seen = [fc, fd]
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = phi(c)
            seen.append(fc)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = phi(d)
            seen.append(fd)
    u, fu = (c, fc) if fc >= fd else (d, fd)
    return u, fu, hi - lo, seen


def generic_coord_max_ternary(f: DrObjective, i: int, x, tol: float = 1e-8) -> tuple[float, float]:
    """1-D maximizer of ``t -> f(x with i <- t)`` over the box side by golden-section search.

    The restriction must be concave. Box endpoints are compared against the
    interior estimate so monotone restrictions land exactly on the boundary;
    a flat restriction returns the midpoint.
    """
    u, gain, _ = _ternary(f, i, x, tol)
    return u, gain


def _ternary(f: DrObjective, i: int, x, tol: float):
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    dom = f.domain
    x = dom.check(x)
    i = check_index(i, dom.n)
    lo, hi = float(dom.lower[i]), float(dom.upper[i])

    def phi(t: float) -> float:
        z = x.copy()
        z[i] = t
        v = f.value(z)
        if not math.isfinite(v):
            raise FloatingPointError(f"non-finite objective value at coordinate {i}, t={t}")
        return v

    base = f.value(x)
    if hi == lo:
        return lo, 0.0, 0.0
    u, fu, width, seen = _golden_section(phi, lo, hi, tol)
    fa, fb = phi(lo), phi(hi)
    seen += [fa, fb]
    if max(seen) == min(seen):
        mid = 0.5 * (lo + hi)
        return mid, phi(mid) - base, width
    if fb > fu and fb >= fa:
        u, fu = hi, fb
    elif fa > fu:
        u, fu = lo, fa
    return u, fu - base, width


class CoordinateSearchObjective(DrObjective):
    """Wrap a value-only DR-submodular function; coordinates solved by golden-section search.

    ``delta`` is ``n * L * tol`` where ``L`` bounds the slope of the 1-D
    restrictions. When no ``lipschitz`` constant is supplied it is estimated
    from secant slopes at the box ends (the steepest part of a concave
    restriction), and ``delta`` tracks the largest estimate seen so far.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], domain: BoxDomain, tol: float = 1e-8,
                 lipschitz: float | None = None):
        self.fn = fn
        self._domain = domain
        self.tol = float(tol)
        self.lipschitz = lipschitz
        self.delta = 0.0 if lipschitz is None else domain.n * float(lipschitz) * self.tol

    @property
    def domain(self):
        return self._domain

    def value(self, x) -> float:
        return float(self.fn(self._domain.check(x)))

    def _slope_bound(self, i: int, x: np.ndarray) -> float:
        lo, hi = float(self._domain.lower[i]), float(self._domain.upper[i])
        h = max(self.tol, 1e-6 * (hi - lo))
        if hi - lo <= 2 * h:
            h = 0.5 * (hi - lo)

        def at(t):
            z = x.copy()
            z[i] = t
            return self.fn(z)

        return max(abs(at(lo + h) - at(lo)), abs(at(hi) - at(hi - h))) / h

    def coord_max(self, i, x):
        x = as_point(x, self.n)
        u, gain, width = _ternary(self, i, x, self.tol)
        if self.lipschitz is None and width > 0:
            self.delta = max(self.delta, self.n * self._slope_bound(i, x) * width)
        return u, gain
