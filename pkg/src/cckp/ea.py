"""(1+1) EA and GSEMO with standard bit mutation.

Random streams are numpy ``Generator(PCG64(seed))``. A run is a pure
function of (instance, RunConfig). Mutation masks are drawn in blocks of
rows from ``rng.random((rows, n)) < 1/n``; row for row this is the same
stream that repeated :func:`mutate` calls would consume.
"""
from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .bounds import (
    BoundMethod,
    cantelli_value,
    check_admissible,
    chernoff_uniform_additive,
)
from .fitness import MOFitness, SOFitness, so_fitness
from .instance import CCInstance, Deterministic

_BLOCK = 2048


class InvariantViolation(AssertionError):
    """Raised in debug mode when elitism or archive non-dominance breaks."""


@dataclass(frozen=True)
class RunConfig:
    budget: int = 100_000
    seed: int = 0
    method: BoundMethod = BoundMethod.CANTELLI
    objective: str = "single"
    trace_stride: int = 1000
    debug: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be at least 1")
        if self.objective not in ("single", "multi"):
            raise ValueError(f"objective must be 'single' or 'multi', got {self.objective!r}")
        object.__setattr__(self, "method", BoundMethod(self.method))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d


@dataclass
class RunResult:
    config: RunConfig
    best_feasible_profit: int | None
    evaluations_used: int
    trace: list[tuple[int, int | None]]
    best: np.ndarray | None = None
    best_fitness: SOFitness | None = None
    archive: list[tuple[np.ndarray, MOFitness]] | None = None

    def to_dict(self) -> dict:
        d = {
            "config": self.config.to_dict(),
            "best_feasible_profit": self.best_feasible_profit,
            "evaluations": self.evaluations_used,
            "trace": [list(t) for t in self.trace],
        }
        if self.best is not None:
            d["best"] = bits_to_str(self.best)
            d["best_fitness"] = list(self.best_fitness)
        if self.archive is not None:
            d["archive"] = [
                {"bits": bits_to_str(b), "g1": f.g1, "g2": f.g2} for b, f in self.archive
            ]
        return d


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def bits_from_str(s: str) -> np.ndarray:
    return np.array([c == "1" for c in s], dtype=bool)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master_seed: int, *keys) -> int:
    """64-bit seed from a master seed and string/int keys, order sensitive."""
    words = [int(master_seed) & 0xFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            words.append(zlib.crc32(k.encode("utf-8")))
        else:
            words.append(int(k) & 0xFFFFFFFF)
    state = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def mutate(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability 1/n."""
    x = np.asarray(x, dtype=bool)
    return x ^ (rng.random(x.size) < 1.0 / x.size)


def _flip_blocks(rng: np.random.Generator, n: int):
    """Yield the flipped positions of successive offspring."""
    rate = 1.0 / n
    while True:
        mask = rng.random((_BLOCK, n)) < rate
        rows, cols = np.nonzero(mask)
        cols = cols.tolist()
        ends = np.cumsum(np.bincount(rows, minlength=_BLOCK)).tolist()
        start = 0
        for end in ends:
            yield cols[start:end]
            start = end


class _Evaluator:
    """Incremental sufficient statistics (sum a, sum q, count, profit)."""

    def __init__(self, inst: CCInstance, method: BoundMethod):
        check_admissible(method, inst.model)
        self.inst = inst
        self.a = inst.expected_weights.tolist()
        scale, q = inst.variance_units()
        self.scale = scale
        self.q = q.tolist()
        self.p = inst.profits.tolist()
        self.capacity = inst.capacity
        self.alpha = inst.alpha
        self.deterministic = isinstance(inst.model, Deterministic)
        self.bound = self._bound_fn(inst, method)

    @staticmethod
    def _bound_fn(inst: CCInstance, method: BoundMethod) -> Callable[[float, float, int], float]:
        cap = inst.capacity
        if isinstance(inst.model, Deterministic):
            return lambda e, var, c: 1.0 if e > cap else 0.0
        if method is BoundMethod.CHERNOFF:
            delta = inst.model.delta
            return lambda e, var, c: chernoff_uniform_additive(delta, c, e, cap)
        return lambda e, var, c: cantelli_value(e, var, cap)

    def state_of(self, bits: bytearray) -> tuple[float, float, int, int]:
        idx = [i for i, b in enumerate(bits) if b]
        return (
            float(sum(self.a[i] for i in idx)),
            float(sum(self.q[i] for i in idx)),
            len(idx),
            sum(self.p[i] for i in idx),
        )

    def child_state(self, bits: bytearray, state, flips):
        e, q, c, p = state
        for i in flips:
            if bits[i]:
                e -= self.a[i]
                q -= self.q[i]
                c -= 1
                p -= self.p[i]
            else:
                e += self.a[i]
                q += self.q[i]
                c += 1
                p += self.p[i]
        return e, q, c, p

    def so(self, state) -> SOFitness:
        e, q, c, p = state
        b = self.bound(e, self.scale * q, c)
        return SOFitness(max(e - self.capacity, 0.0), max(b - self.alpha, 0.0), p)

    def mo(self, state) -> MOFitness:
        e, q, c, p = state
        if e < self.capacity or (self.deterministic and e == self.capacity):
            g2 = self.bound(e, self.scale * q, c)
        else:
            g2 = 1.0 + (e - self.capacity)
        return MOFitness(p if g2 <= self.alpha else -1, g2)


def _initial(rng: np.random.Generator, n: int) -> bytearray:
    return bytearray(rng.integers(0, 2, size=n).astype(np.uint8).tobytes())


def _apply(bits: bytearray, flips) -> bytearray:
    for i in flips:
        bits[i] ^= 1
    return bits


def _to_array(bits: bytearray) -> np.ndarray:
    return np.frombuffer(bytes(bits), dtype=np.uint8).astype(bool)


def run_one_plus_one(inst: CCInstance, cfg: RunConfig) -> RunResult:
    """(1+1) EA on the lexicographic fitness (u, v, P)."""
    if cfg.objective != "single":
        raise ValueError("run_one_plus_one needs objective='single'")
    ev = _Evaluator(inst, cfg.method)
    rng = make_rng(cfg.seed)
    n = inst.n
    x = _initial(rng, n)
    state = ev.state_of(x)
    fit = ev.so(state)
    key = fit.key()
    trace: list[tuple[int, int | None]] = []
    stride = cfg.trace_stride

    def best_profit():
        return fit.p if fit.u == 0 and fit.v == 0 else None

    evals = 1
    if evals % stride == 0:
        trace.append((evals, best_profit()))
    flips_iter = _flip_blocks(rng, n)
    while evals < cfg.budget:
        flips = next(flips_iter)
        evals += 1
        if flips:
            child_state = ev.child_state(x, state, flips)
            child_fit = ev.so(child_state)
            child_key = child_fit.key()
            if child_key >= key:
                _apply(x, flips)
                if cfg.debug:
                    _check_elitism(inst, cfg.method, x, child_fit, key)
                state, fit, key = child_state, child_fit, child_key
        if evals % stride == 0:
            trace.append((evals, best_profit()))
    if cfg.debug:
        _check_state(ev, x, state)
    if not trace or trace[-1][0] != evals:
        trace.append((evals, best_profit()))
    return RunResult(
        config=cfg,
        best_feasible_profit=best_profit(),
        evaluations_used=evals,
        trace=trace,
        best=_to_array(x),
        best_fitness=fit,
    )


def _check_elitism(inst, method, bits, new_fit: SOFitness, old_key) -> None:
    ref = so_fitness(inst, _to_array(bits), method)
    if ref.p != new_fit.p or not np.allclose(ref[:2], new_fit[:2], rtol=1e-9, atol=1e-12):
        raise InvariantViolation(f"incremental fitness {new_fit} differs from {ref}")
    if ref.key() < old_key:
        raise InvariantViolation("parent fitness decreased")


def _check_state(ev: _Evaluator, bits: bytearray, state) -> None:
    e, q, c, p = ev.state_of(bits)
    if c != state[2] or p != state[3] or not np.isclose(e, state[0]) or not np.isclose(q, state[1]):
        raise InvariantViolation("incremental statistics drifted from the bit string")


def _check_archive(fits: list[MOFitness]) -> None:
    for i, a in enumerate(fits):
        for j, b in enumerate(fits):
            if i != j and a.g1 >= b.g1 and a.g2 <= b.g2:
                raise InvariantViolation(f"archive member {i} weakly dominates member {j}")


def run_gsemo(inst: CCInstance, cfg: RunConfig) -> RunResult:
    """GSEMO on (g1 maximized, g2 minimized) with weak dominance."""
    if cfg.objective != "multi":
        raise ValueError("run_gsemo needs objective='multi'")
    ev = _Evaluator(inst, cfg.method)
    rng = make_rng(cfg.seed)
    n = inst.n
    alpha = inst.alpha
    x0 = _initial(rng, n)
    s0 = ev.state_of(x0)
    f0 = ev.mo(s0)
    bits_l = [x0]
    states = [s0]
    g1s = [f0.g1]
    g2s = [f0.g2]
    best = f0.g1 if f0.g2 <= alpha else None
    trace: list[tuple[int, int | None]] = []
    stride = cfg.trace_stride

    evals = 1
    if evals % stride == 0:
        trace.append((evals, best))
    flips_iter = _flip_blocks(rng, n)
    picks: list[float] = []
    while evals < cfg.budget:
        if not picks:
            picks = rng.random(_BLOCK).tolist()
            picks.reverse()
        u = picks.pop()
        flips = next(flips_iter)
        evals += 1
        j = int(u * len(states))
        parent = bits_l[j]
        cs = ev.child_state(parent, states[j], flips)
        cf = ev.mo(cs)
        g1, g2 = cf
        dominated = False
        for a1, a2 in zip(g1s, g2s):
            if a1 >= g1 and a2 <= g2:
                dominated = True
                break
        if not dominated:
            keep = [k for k in range(len(states)) if not (g1 >= g1s[k] and g2 <= g2s[k])]
            bits_l = [bits_l[k] for k in keep]
            states = [states[k] for k in keep]
            g1s = [g1s[k] for k in keep]
            g2s = [g2s[k] for k in keep]
            bits_l.append(_apply(bytearray(parent), flips))
            states.append(cs)
            g1s.append(g1)
            g2s.append(g2)
            if g2 <= alpha and (best is None or g1 > best):
                best = g1
            if cfg.debug:
                _check_archive([MOFitness(a, b) for a, b in zip(g1s, g2s)])
        if evals % stride == 0:
            trace.append((evals, best))
    archive = [(_to_array(b), MOFitness(a1, a2)) for b, a1, a2 in zip(bits_l, g1s, g2s)]
    _check_archive([f for _, f in archive])
    if cfg.debug:
        for b, s in zip(bits_l, states):
            _check_state(ev, b, s)
    if not trace or trace[-1][0] != evals:
        trace.append((evals, best))
    return RunResult(
        config=cfg,
        best_feasible_profit=best,
        evaluations_used=evals,
        trace=trace,
        archive=archive,
    )


def best_feasible(archive, alpha: float):
    """Archive member with maximal g1 among those with g2 <= alpha, or None."""
    best = None
    for bits, fit in archive:
        if fit.g2 <= alpha and (best is None or fit.g1 > best[1].g1):
            best = (bits, fit)
    return None if best is None else best[0]


def run(inst: CCInstance, cfg: RunConfig) -> RunResult:
    return run_one_plus_one(inst, cfg) if cfg.objective == "single" else run_gsemo(inst, cfg)
