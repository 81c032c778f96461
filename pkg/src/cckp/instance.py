"""Knapsack instances, stochastic weight models and exact deterministic baselines."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

MAX_DP_CELLS = 200_000_000


class InstanceError(ValueError):
    """Invalid instance data or an instance file that cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------------------
# weight models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformAdditive:
    """w_i ~ U[a_i - delta, a_i + delta]; one shared interval width."""

    delta: float

    def variance_units(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        return self.delta**2 / 3.0, np.ones_like(a)

    def validate(self, a: np.ndarray) -> None:
        if not self.delta >= 0:
            raise InstanceError(f"delta must be nonnegative, got {self.delta}")
        if len(a) and self.delta >= a.min():
            raise InstanceError(
                f"delta={self.delta} must be below the smallest expected weight {a.min()}"
            )


@dataclass(frozen=True)
class UniformRelative:
    """w_i ~ U[(1 - beta) a_i, (1 + beta) a_i]."""

    beta: float

    def variance_units(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        return self.beta**2 / 3.0, a * a

    def validate(self, a: np.ndarray) -> None:
        if not 0.0 <= self.beta < 1.0:
            raise InstanceError(f"beta must lie in [0, 1), got {self.beta}")


@dataclass(frozen=True)
class Normal:
    """w_i ~ N(a_i, variances[i])."""

    variances: tuple[float, ...]

    def variance_units(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        return 1.0, np.asarray(self.variances, dtype=float)

    def validate(self, a: np.ndarray) -> None:
        if len(self.variances) != len(a):
            raise InstanceError(
                f"normal model needs {len(a)} variances, got {len(self.variances)}"
            )
        if any(not v >= 0 for v in self.variances):
            raise InstanceError("normal variances must be nonnegative")


@dataclass(frozen=True)
class Deterministic:
    """Zero-variance weights: w_i = a_i."""

    def variance_units(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        return 0.0, np.zeros_like(a)

    def validate(self, a: np.ndarray) -> None:
        pass


WeightModel = Union[UniformAdditive, UniformRelative, Normal, Deterministic]


def model_to_dict(model: WeightModel) -> dict:
    if isinstance(model, UniformAdditive):
        return {"type": "uniform_additive", "delta": model.delta}
    if isinstance(model, UniformRelative):
        return {"type": "uniform_relative", "beta": model.beta}
    if isinstance(model, Normal):
        return {"type": "normal", "variances": list(model.variances)}
    return {"type": "deterministic"}


def model_from_dict(d: dict) -> WeightModel:
    kind = d.get("type")
    if kind == "uniform_additive":
        return UniformAdditive(float(d["delta"]))
    if kind == "uniform_relative":
        return UniformRelative(float(d["beta"]))
    if kind == "normal":
        return Normal(tuple(float(v) for v in d["variances"]))
    if kind == "deterministic":
        return Deterministic()
    raise InstanceError(f"unknown weight model type {kind!r}")


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DetInstance:
    profits: np.ndarray
    weights: np.ndarray
    capacity: int

    def __post_init__(self):
        p = np.asarray(self.profits, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.int64)
        if p.ndim != 1 or p.shape != w.shape:
            raise InstanceError("profits and weights must be 1-d with equal length")
        if len(p) < 1:
            raise InstanceError("an instance needs at least one item")
        if (p < 1).any() or (w < 1).any():
            raise InstanceError("profits and weights must be positive integers")
        if int(self.capacity) < 1:
            raise InstanceError("capacity must be a positive integer")
        object.__setattr__(self, "profits", _readonly(p.copy()))
        object.__setattr__(self, "weights", _readonly(w.copy()))
        object.__setattr__(self, "capacity", int(self.capacity))

    @property
    def n(self) -> int:
        return len(self.profits)

    def __eq__(self, other):
        if not isinstance(other, DetInstance):
            return NotImplemented
        return (
            self.capacity == other.capacity
            and np.array_equal(self.profits, other.profits)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class CCInstance:
    profits: np.ndarray
    expected_weights: np.ndarray
    model: WeightModel
    capacity: float
    alpha: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        p = np.asarray(self.profits, dtype=np.int64)
        a = np.asarray(self.expected_weights, dtype=float)
        if p.ndim != 1 or p.shape != a.shape or len(p) < 1:
            raise InstanceError("profits and expected weights must be 1-d, equal length, nonempty")
        if (p < 1).any():
            raise InstanceError("profits must be positive integers")
        if not (a > 0).all():
            raise InstanceError("expected weights must be positive")
        if not self.capacity > 0:
            raise InstanceError("capacity must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise InstanceError(f"alpha must lie in (0, 1], got {self.alpha}")
        self.model.validate(a)
        object.__setattr__(self, "profits", _readonly(p.copy()))
        object.__setattr__(self, "expected_weights", _readonly(a.copy()))
        object.__setattr__(self, "capacity", float(self.capacity))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return len(self.profits)

    def variance_units(self) -> tuple[float, np.ndarray]:
        """(scale, q) with per-item variance scale * q_i.

        Var_W(X) is computed as scale * sum(q_i x_i); for the uniform models
        with integral a_i that sum is exact and path independent.
        """
        return self.model.variance_units(self.expected_weights)

    def item_variances(self) -> np.ndarray:
        scale, q = self.variance_units()
        return scale * q

    def with_model(self, model: WeightModel) -> "CCInstance":
        return CCInstance(self.profits, self.expected_weights, model, self.capacity, self.alpha, self.name)

    def with_alpha(self, alpha: float) -> "CCInstance":
        return CCInstance(self.profits, self.expected_weights, self.model, self.capacity, alpha, self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "profits": [int(v) for v in self.profits],
            "expected_weights": [float(v) for v in self.expected_weights],
            "model": model_to_dict(self.model),
            "capacity": self.capacity,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CCInstance":
        try:
            return cls(
                profits=d["profits"],
                expected_weights=d["expected_weights"],
                model=model_from_dict(d["model"]),
                capacity=d["capacity"],
                alpha=d["alpha"],
                name=d.get("name", ""),
            )
        except KeyError as exc:
            raise InstanceError(f"missing field {exc.args[0]!r}") from None

    def __eq__(self, other):
        if not isinstance(other, CCInstance):
            return NotImplemented
        return self.to_dict() | {"name": ""} == other.to_dict() | {"name": ""}


@dataclass(frozen=True)
class WeightStats:
    expected: float
    variance: float
    count: int

    def __add__(self, other: "WeightStats") -> "WeightStats":
        return WeightStats(
            self.expected + other.expected, self.variance + other.variance, self.count + other.count
        )


@dataclass(frozen=True)
class AdaptationReport:
    gamma: int
    k: int
    original_capacity: int
    adapted_capacity: float


def as_solution(x: Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    bits = np.asarray(x)
    if bits.shape != (n,):
        raise ValueError(f"solution length {bits.size} does not match instance size {n}")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("solution must be a 0/1 vector")
    return bits.astype(bool)


def weight_stats(inst: CCInstance, x) -> WeightStats:
    bits = as_solution(x, inst.n)
    scale, q = inst.variance_units()
    expected = float(inst.expected_weights[bits].sum())
    variance = float(scale * q[bits].sum()) if scale else 0.0
    return WeightStats(expected, variance, int(bits.sum()))


def profit(inst: CCInstance | DetInstance, x) -> int:
    bits = as_solution(x, inst.n)
    return int(inst.profits[bits].sum())


# ---------------------------------------------------------------------------
# canonical text format
# ---------------------------------------------------------------------------

_POSITIVE = re.compile(r"[1-9][0-9]*")


def _positive_int(token: str, line: int, what: str) -> int:
    if _POSITIVE.fullmatch(token):
        return int(token)
    if re.fullmatch(r"-?[0-9]+", token) and int(token) <= 0:
        raise InstanceError(f"{what} must be a positive integer, got {token}", line)
    raise InstanceError(f"malformed {what} {token!r}", line)


def parse_instance(text: str) -> DetInstance:
    """Parse the canonical format: n, then n lines "p w", then B.

    A single trailing newline is allowed; anything else that would not
    round-trip through :func:`serialize_instance` is rejected.
    """
    body = text[:-1] if text.endswith("\n") else text
    lines = body.split("\n")
    if not lines or not lines[0].strip():
        raise InstanceError("missing item count header", 1)
    n = _positive_int(lines[0], 1, "item count")
    if len(lines) < 2:
        raise InstanceError("missing capacity line", 2)
    items = lines[1:-1]
    if len(items) != n:
        raise InstanceError(f"expected {n} item lines, found {len(items)}", len(lines))
    profits, weights = [], []
    for lineno, line in enumerate(items, start=2):
        parts = line.split(" ")
        if len(parts) != 2:
            raise InstanceError(f"expected 'profit weight', got {line!r}", lineno)
        profits.append(_positive_int(parts[0], lineno, "profit"))
        weights.append(_positive_int(parts[1], lineno, "weight"))
    capacity = _positive_int(lines[-1], len(lines), "capacity")
    return DetInstance(profits, weights, capacity)


def serialize_instance(det: DetInstance) -> str:
    rows = [str(det.n)]
    rows += [f"{p} {w}" for p, w in zip(det.profits.tolist(), det.weights.tolist())]
    rows.append(str(det.capacity))
    return "\n".join(rows) + "\n"


def load_instance(path) -> DetInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def load_cc_instance(path) -> CCInstance:
    with open(path, encoding="utf-8") as fh:
        return CCInstance.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# generation and adaptation
# ---------------------------------------------------------------------------

INSTANCE_KINDS = ("uncorr", "bou-s-c")


def generate_instance(
    kind: str,
    n: int,
    seed: int,
    profit_shift: int = 100,
    capacity: int | None = None,
    capacity_ratio: float = 0.5,
) -> DetInstance:
    """Random benchmark instance; weights uniform on [1, 1000].

    uncorr draws profits independently on [1, 1000]; bou-s-c sets
    p_i = w_i + profit_shift. Default capacity is floor(ratio * sum w).
    """
    if n < 1:
        raise InstanceError("n must be at least 1")
    if kind not in INSTANCE_KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}")
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, 1001, size=n)
    if kind == "uncorr":
        profits = rng.integers(1, 1001, size=n)
    else:
        if profit_shift < 1:
            raise InstanceError("profit_shift must be at least 1")
        profits = weights + profit_shift
    if capacity is None:
        capacity = max(1, int(capacity_ratio * int(weights.sum())))
    return DetInstance(profits, weights, capacity)


def greedy_prefix_count(weights: np.ndarray, capacity: int) -> int:
    """Largest m such that the m smallest weights sum to at most capacity."""
    order = np.argsort(weights, kind="stable")
    prefix = np.cumsum(np.asarray(weights)[order])
    return int(np.searchsorted(prefix, capacity, side="right"))


def adapt_instance(
    det: DetInstance, gamma: int, model: WeightModel, alpha: float, name: str = ""
) -> tuple[CCInstance, AdaptationReport]:
    """Shift every weight by gamma and the capacity by k * gamma."""
    if gamma < 0:
        raise InstanceError("gamma must be nonnegative")
    k = greedy_prefix_count(det.weights, det.capacity)
    adapted = det.capacity + k * gamma
    expected = det.weights.astype(float) + gamma
    inst = CCInstance(det.profits, expected, model, float(adapted), alpha, name)
    return inst, AdaptationReport(int(gamma), k, det.capacity, float(adapted))


def deterministic_cc(det: DetInstance, alpha: float = 0.01, name: str = "") -> CCInstance:
    """Wrap a deterministic instance as a zero-variance chance-constrained one."""
    return CCInstance(det.profits, det.weights.astype(float), Deterministic(), det.capacity, alpha, name)


# ---------------------------------------------------------------------------
# exact baseline
# ---------------------------------------------------------------------------


def dp_optimum(det: DetInstance, max_cells: int = MAX_DP_CELLS) -> int:
    """Capacity-indexed 0/1 knapsack dynamic program."""
    cells = det.n * (det.capacity + 1)
    if cells > max_cells:
        raise MemoryError(
            f"dp table of {cells} cells exceeds the budget of {max_cells}"
        )
    best = np.zeros(det.capacity + 1, dtype=np.int64)
    for p, w in zip(det.profits.tolist(), det.weights.tolist()):
        if w <= det.capacity:
            np.maximum(best[w:], best[:-w] + p, out=best[w:])
    return int(best[-1])
