"""Candidate generation: defaults, random search and Bayesian optimization."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.stats import qmc

from ..engines import DEFAULT_PARAMS, EngineKind
from .gp import fit_gp, expected_improvement
from .space import Candidate, ParamSpace

logger = logging.getLogger(__name__)

N_ACQUISITION = 1024
N_NEIGHBOURS = 64
NEIGHBOUR_SD = 0.05


def _unique_engines(engines: Iterable[EngineKind]) -> list[EngineKind]:
    out = []
    for e in engines:
        e = EngineKind(e)
        if e not in out:
            out.append(e)
    return out


def default_candidates(engines: Iterable[EngineKind]) -> list[Candidate]:
    engines = _unique_engines(engines)
    if not engines:
        raise ValueError("no engines selected")
    return [Candidate(e, dict(DEFAULT_PARAMS[e]), "default", name=f"{e.value}_model") for e in engines]


def random_search(
    engines: Iterable[EngineKind],
    spaces: dict[EngineKind, ParamSpace],
    n_per_engine: int,
    seed: int = 0,
) -> list[Candidate]:
    """``n_per_engine`` independent draws per engine; engine ``e`` draws from
    a generator seeded with ``(seed, index of e in EngineKind)``."""
    out = []
    order = list(EngineKind)
    for e in _unique_engines(engines):
        rng = np.random.default_rng([seed, order.index(e)])
        for i in range(n_per_engine):
            params = {**DEFAULT_PARAMS[e], **spaces[e].sample(rng)}
            out.append(Candidate(e, params, "random_search", name=f"{e.value}_RS_{i + 1}"))
    return out


@dataclass
class BayesState:
    X: list[list[float]] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    params: list[dict] = field(default_factory=list)
    length_scales: list[float] = field(default_factory=list)
    noise: float = 1e-6
    iteration: int = 0
    warnings: list[str] = field(default_factory=list)

    def best_index(self) -> int:
        return int(np.argmax(self.y))  # first of equal maxima

    def running_best(self) -> list[float]:
        return [float(v) for v in np.maximum.accumulate(self.y)] if self.y else []

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "y": self.y,
            "params": self.params,
            "length_scales": self.length_scales,
            "noise": self.noise,
            "iteration": self.iteration,
            "warnings": self.warnings,
        }

    @classmethod
    def from_json(cls, doc: dict) -> BayesState:
        return cls(**doc)


def _latin_hypercube(space: ParamSpace, n: int, seed: int) -> list[np.ndarray]:
    if n <= 0:
        return []
    sample = qmc.LatinHypercube(d=space.width, seed=np.random.default_rng([seed, 1])).random(n)
    return [space.canonical(x) for x in sample]


def bayes_opt(
    engine: EngineKind,
    space: ParamSpace,
    objective: Callable[[Candidate], float],
    budget: int = 20,
    init_points: int = 8,
    seed: int = 0,
    default: dict | None = None,
) -> tuple[Candidate, BayesState]:
    """Maximize ``objective`` over ``space``.

    The initial design is ``default`` (when given) followed by Latin-hypercube
    points, ``init_points`` in total. Every later point maximizes expected
    improvement under a GP fit to all observations so far, over
    ``N_ACQUISITION`` uniform points plus ``N_NEIGHBOURS`` perturbations of
    the incumbent. The best observed candidate is returned.
    """
    if not budget >= init_points >= 2:
        raise ValueError("bayes_opt needs budget >= init_points >= 2")
    engine = EngineKind(engine)
    state = BayesState()
    rng = np.random.default_rng([seed, 2])
    base = dict(DEFAULT_PARAMS.get(engine, {}))
    seen: set[str] = set()

    def evaluate(x: np.ndarray, params: dict) -> None:
        cand = Candidate(engine, params, "bayes_opt")
        value = objective(cand)
        if value is None or not math.isfinite(value):
            worst = min([v for v in state.y], default=0.0)
            msg = f"objective returned {value!r} for {params}; recorded as worst value {worst}"
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            state.warnings.append(msg)
            value = worst
        state.X.append([float(v) for v in x])
        state.y.append(float(value))
        state.params.append(params)
        seen.add(_key(params))

    design: list[tuple[np.ndarray, dict]] = []
    if default is not None:
        design.append((space.encode(default), {**base, **default}))
    for x in _latin_hypercube(space, init_points - len(design), seed):
        design.append((x, {**base, **space.decode(x)}))
    for x, params in design:
        evaluate(x, params)

    while len(state.y) < budget:
        state.iteration += 1
        X = np.array(state.X)
        y = np.array(state.y)
        gp = fit_gp(X, y, rng, state.noise)
        state.length_scales = [float(v) for v in gp.length_scales]
        pool = rng.uniform(size=(N_ACQUISITION, space.width))
        incumbent = X[int(np.argmax(y))]
        near = np.clip(incumbent + rng.normal(0, NEIGHBOUR_SD, size=(N_NEIGHBOURS, space.width)), 0, 1)
        pool = np.vstack([pool, near])
        snapped, decoded = [], []
        for x in pool:
            params = space.decode(x)
            if _key({**base, **params}) in seen:
                continue
            snapped.append(space.encode(params))
            decoded.append(params)
        if not snapped:
            logger.info("acquisition pool exhausted after %d evaluations", len(state.y))
            break
        S = np.array(snapped)
        mu, sd = gp.predict(S)
        ei = expected_improvement(mu, sd, float(y.max()))
        j = int(np.argmax(ei))
        evaluate(S[j], {**base, **decoded[j]})

    i = state.best_index()
    best = Candidate(engine, state.params[i], "bayes_opt", state.y[i], name=f"{engine.value}_bayes")
    return best, state


def _key(params: dict) -> str:
    return repr(sorted(params.items(), key=lambda kv: kv[0]))
