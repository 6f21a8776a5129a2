"""Synthetic model generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .set_functions import (
    CutGraph,
    FlidModel,
    GibbsPolynomial,
    ModularFunction,
    SetCoverInstance,
    SetFunction,
)

FAMILIES = ("flid", "cut_directed", "cut_undirected", "gibbs", "setcover", "modular")


@dataclass(frozen=True)
class SyntheticFlidSpec:
    n: int
    D: int
    seed: int = 0
    # one shared U(0,1) draw scales the all-ones utility vector unless set
    per_coordinate_u: bool = False


def synth_flid(spec: SyntheticFlidSpec) -> FlidModel:
    """FLID with ``W ~ U(0,1)`` entrywise and ``u = 0.1 D r 1``, ``r ~ U(0,1)``."""
    if spec.n < 1 or spec.D < 1:
        raise ValueError(f"need n, D >= 1, got n={spec.n}, D={spec.D}")
    rng = np.random.default_rng(spec.seed)
    W = rng.uniform(0.0, 1.0, size=(spec.n, spec.D))
    if spec.per_coordinate_u:
        u = 0.1 * spec.D * rng.uniform(0.0, 1.0, size=spec.n)
    else:
        u = 0.1 * spec.D * rng.uniform(0.0, 1.0) * np.ones(spec.n)
    return FlidModel(W, u)


def random_instance(family: str, n: int, rng: np.random.Generator) -> SetFunction:
    """A random submodular instance of ``family`` on ``n`` elements."""
    if family == "flid":
        D = int(rng.integers(1, 5))
        return FlidModel(rng.uniform(0, 1, (n, D)), rng.uniform(-0.5, 1.5, n))
    if family in ("cut_directed", "cut_undirected"):
        edges = [
            (i, j, float(rng.uniform(0.1, 2.0)))
            for i in range(n)
            for j in range(n)
            if i != j and rng.random() < 0.4
        ]
        return CutGraph(n, edges, directed=family == "cut_directed")
    if family == "gibbs":
        terms = [((i,), float(rng.uniform(-1.5, 1.5))) for i in range(n)]
        terms += [
            ((i, j), float(rng.uniform(-2.0, 0.0)))
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.5
        ]
        if n >= 3:
            for _ in range(int(rng.integers(0, 3))):
                trip = sorted(rng.choice(n, 3, replace=False).tolist())
                terms.append((trip, float(rng.uniform(-1.0, 0.0))))
        return GibbsPolynomial(n, terms)
    if family == "setcover":
        concepts = []
        for _ in range(int(rng.integers(1, 2 * n + 1))):
            size = int(rng.integers(1, min(n, 3) + 1))
            concepts.append((float(rng.uniform(0, 2)), rng.choice(n, size, replace=False).tolist()))
        return SetCoverInstance(n, concepts)
    if family == "modular":
        return ModularFunction(rng.uniform(-1.5, 1.5, n))
    raise ValueError(f"unknown family {family!r}; known: {FAMILIES}")
