"""Hyperparameter spaces and their unit-cube encodings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..engines import DEFAULT_PARAMS, EngineKind, TrainedModel

KINDS = ("int", "real", "choice")


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    options: tuple = ()
    scale: str = "linear"
    # stands in for a ``None`` parameter value (e.g. "engine decides") when
    # a point has to be placed in the cube
    none_as: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpaceError(f"dimension {self.name!r}: kind must be one of {KINDS}")
        if self.scale not in ("linear", "log"):
            raise SpaceError(f"dimension {self.name!r}: scale must be 'linear' or 'log'")
        if self.kind == "choice":
            if len(self.options) < 1:
                raise SpaceError(f"dimension {self.name!r}: choice needs options")
            return
        if self.low is None or self.high is None or not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise SpaceError(f"dimension {self.name!r}: bounds must be finite")
        if not self.low < self.high:
            raise SpaceError(f"dimension {self.name!r}: low must be below high")
        if self.scale == "log" and self.low <= 0:
            raise SpaceError(f"dimension {self.name!r}: log scale needs positive bounds")

    @property
    def width(self) -> int:
        return len(self.options) if self.kind == "choice" else 1

    def _warp(self, v: float) -> float:
        return math.log(v) if self.scale == "log" else v

    def _unwarp(self, v: float) -> float:
        return math.exp(v) if self.scale == "log" else v

    def encode(self, value) -> list[float]:
        if self.kind == "choice":
            if value not in self.options:
                raise SpaceError(f"{self.name}={value!r} is not one of {list(self.options)}")
            return [1.0 if o == value else 0.0 for o in self.options]
        if value is None:
            if self.none_as is None:
                raise SpaceError(f"{self.name} has no value")
            value = self.none_as
        lo, hi = self._warp(self.low), self._warp(self.high)
        u = (self._warp(float(value)) - lo) / (hi - lo)
        return [min(1.0, max(0.0, u))]

    def decode(self, code: Sequence[float]):
        if self.kind == "choice":
            return self.options[int(np.argmax(code))]
        u = min(1.0, max(0.0, float(code[0])))
        lo, hi = self._warp(self.low), self._warp(self.high)
        v = self._unwarp(lo + u * (hi - lo))
        if self.kind == "int":
            return int(min(self.high, max(self.low, round(v))))
        return float(min(self.high, max(self.low, v)))

    def sample(self, rng: np.random.Generator):
        if self.kind == "choice":
            return self.options[int(rng.integers(len(self.options)))]
        if self.kind == "int" and self.scale == "linear":
            return int(rng.integers(int(self.low), int(self.high) + 1))
        lo, hi = self._warp(self.low), self._warp(self.high)
        v = self._unwarp(rng.uniform(lo, hi))
        if self.kind == "int":
            return int(min(self.high, max(self.low, round(v))))
        return float(min(self.high, max(self.low, v)))

    def contains(self, value) -> bool:
        if self.kind == "choice":
            return value in self.options
        if value is None:
            return self.none_as is not None
        if self.kind == "int" and int(value) != value:
            return False
        return self.low <= value <= self.high

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"name": self.name, "kind": self.kind, "scale": self.scale}
        if self.kind == "choice":
            doc["options"] = list(self.options)
        else:
            doc["low"], doc["high"] = self.low, self.high
        if self.none_as is not None:
            doc["none_as"] = self.none_as
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> Dimension:
        return cls(
            doc["name"],
            doc["kind"],
            doc.get("low"),
            doc.get("high"),
            tuple(doc.get("options", ())),
            doc.get("scale", "linear"),
            doc.get("none_as"),
        )


@dataclass(frozen=True)
class ParamSpace:
    dims: tuple[Dimension, ...]
    fixed: dict = field(default_factory=dict)  # parameters pinned for every draw

    def __post_init__(self) -> None:
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate dimension names")
        if not self.dims:
            raise SpaceError("a parameter space needs at least one dimension")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def width(self) -> int:
        return sum(d.width for d in self.dims)

    def encode(self, params: dict) -> np.ndarray:
        out: list[float] = []
        for d in self.dims:
            out.extend(d.encode(params.get(d.name)))
        return np.array(out)

    def decode(self, x: Sequence[float]) -> dict:
        params, pos = dict(self.fixed), 0
        for d in self.dims:
            params[d.name] = d.decode(x[pos:pos + d.width])
            pos += d.width
        return params

    def canonical(self, x: np.ndarray) -> np.ndarray:
        """Snap a cube point onto the encoding of the parameters it decodes to."""
        return self.encode(self.decode(x))

    def sample(self, rng: np.random.Generator) -> dict:
        params = dict(self.fixed)
        for d in self.dims:
            params[d.name] = d.sample(rng)
        return params

    def contains(self, params: dict) -> bool:
        return all(d.contains(params.get(d.name)) for d in self.dims)

    def to_json(self) -> dict:
        return {"dims": [d.to_json() for d in self.dims], "fixed": dict(self.fixed)}

    @classmethod
    def from_json(cls, doc) -> ParamSpace:
        if isinstance(doc, list):
            return cls(tuple(Dimension.from_json(d) for d in doc))
        return cls(tuple(Dimension.from_json(d) for d in doc["dims"]), dict(doc.get("fixed", {})))


_GBDT_DIMS = (
    Dimension("n_rounds", "int", 20, 200),
    Dimension("learning_rate", "real", 0.01, 0.3, scale="log"),
    Dimension("min_child_weight", "real", 0.1, 10.0, scale="log"),
    Dimension("reg_lambda", "real", 0.01, 10.0, scale="log"),
    Dimension("subsample", "real", 0.5, 1.0),
    Dimension("colsample", "real", 0.5, 1.0),
)

DEFAULT_SPACES: dict[EngineKind, ParamSpace] = {
    EngineKind.TREE: ParamSpace(
        (
            Dimension("max_depth", "int", 1, 20),
            Dimension("min_samples_leaf", "int", 1, 50, scale="log"),
            Dimension("criterion", "choice", options=("gini", "entropy")),
        )
    ),
    EngineKind.RANDOM_FOREST: ParamSpace(
        (
            Dimension("n_trees", "int", 10, 200),
            Dimension("mtry_fraction", "real", 0.05, 1.0, none_as=0.3),
            Dimension("sample_fraction", "real", 0.3, 1.0),
            Dimension("min_samples_leaf", "int", 1, 20, scale="log"),
            Dimension("max_depth", "int", 2, 30, none_as=30),
        )
    ),
    EngineKind.GBDT_DEPTHWISE: ParamSpace(_GBDT_DIMS + (Dimension("max_depth", "int", 2, 10),)),
    EngineKind.GBDT_LEAFWISE: ParamSpace(_GBDT_DIMS + (Dimension("max_leaves", "int", 4, 64, scale="log"),)),
}


def load_spaces(doc: dict | str | None) -> dict[EngineKind, ParamSpace]:
    """Built-in spaces overridden per engine by ``{engine: [dimension, ...]}``."""
    spaces = dict(DEFAULT_SPACES)
    if doc is None:
        return spaces
    if isinstance(doc, str):
        doc = json.loads(doc)
    for key, value in doc.items():
        try:
            engine = EngineKind(key)
        except ValueError:
            raise SpaceError(f"unknown engine {key!r} in parameter space") from None
        space = ParamSpace.from_json(value)
        unknown = [n for n in space.names + list(space.fixed) if n not in DEFAULT_PARAMS[engine]]
        if unknown:
            raise SpaceError(f"parameters {unknown} do not exist for engine {engine.value}")
        spaces[engine] = space
    return spaces


@dataclass
class Candidate:
    engine: EngineKind
    params: dict
    origin: str  # "default" | "random_search" | "bayes_opt"
    objective_value: float | None = None
    name: str = ""
    model: TrainedModel | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "engine": self.engine.value,
            "origin": self.origin,
            "params": self.params,
            "objective_value": self.objective_value,
        }
