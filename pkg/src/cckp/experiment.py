"""Run matrices over (instance, alpha, uncertainty, algorithm) and their tables."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import BoundMethod, crossover_grid
from .ea import RunConfig, derive_seed, run
from .instance import (
    CCInstance,
    Deterministic,
    DetInstance,
    UniformAdditive,
    UniformRelative,
    adapt_instance,
    generate_instance,
    load_instance,
)
from .stats import NO_DIFFERENCE, kruskal_wallis, pairwise_posthoc

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "CCKP_OUTPUT_DIR"
PAPER_ALPHAS = (0.0001, 0.001, 0.01)
PAPER_DELTAS = (25, 50)
PAPER_BETAS = (0.01, 0.05, 0.1, 0.15)
FIG1_EPSILONS = (0.01, 0.05, 0.1, 0.2, 0.3)

# name -> (objective, bound method, run on zero-variance weights)
ALGORITHMS = {
    "ea_deterministic": ("single", BoundMethod.CANTELLI, True),
    "ea_chernoff": ("single", BoundMethod.CHERNOFF, False),
    "ea_cantelli": ("single", BoundMethod.CANTELLI, False),
    "gsemo_chernoff": ("multi", BoundMethod.CHERNOFF, False),
    "gsemo_cantelli": ("multi", BoundMethod.CANTELLI, False),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instances: list[dict]
    alphas: list[float]
    algorithms: list[str]
    deltas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    repetitions: int = 30
    budget: int = 100_000
    master_seed: int = 0
    output_dir: str = "results"
    gamma: int = 100
    trace_stride: int = 1000

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be at least 1")
        if not self.instances:
            raise ConfigError("no instances configured")
        if not self.alphas:
            raise ConfigError("no alphas configured")
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {sorted(ALGORITHMS)}")
        if not self.deltas and not self.betas:
            raise ConfigError("configure at least one delta or beta")
        if any(ALGORITHMS[a][1] is BoundMethod.CHERNOFF for a in self.algorithms) and not self.deltas:
            raise ConfigError("chernoff algorithms need a deltas grid")
        names = [inst.get("name") for inst in self.instances]
        if any(not n for n in names) or len(set(names)) != len(names):
            raise ConfigError("every instance source needs a unique name")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def load_source(source: dict, base_dir: Path | None = None) -> DetInstance:
    """A deterministic instance from {"file": path} or {"generate": {...}}."""
    if "file" in source:
        path = Path(source["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_instance(path)
    if "generate" in source:
        return generate_instance(**source["generate"])
    raise ConfigError(f"instance source {source.get('name')!r} needs 'file' or 'generate'")


# ---------------------------------------------------------------------------
# run matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    instance: str
    uncertainty: str  # "delta" or "beta"
    level: float
    alpha: float
    algorithm: str
    repetition: int

    def key(self) -> tuple:
        return (self.instance, self.uncertainty, self.level, self.alpha, self.algorithm, self.repetition)


def build_tasks(cfg: ExperimentConfig) -> list[Task]:
    tasks = []
    levels = [("delta", float(d)) for d in cfg.deltas] + [("beta", float(b)) for b in cfg.betas]
    for source in cfg.instances:
        for kind, level in levels:
            for alpha in cfg.alphas:
                for alg in cfg.algorithms:
                    if kind == "beta" and ALGORITHMS[alg][1] is BoundMethod.CHERNOFF:
                        continue
                    for rep in range(cfg.repetitions):
                        tasks.append(Task(source["name"], kind, level, float(alpha), alg, rep))
    return tasks


def task_instance(det: DetInstance, task: Task, gamma: int) -> CCInstance:
    _, _, zero_variance = ALGORITHMS[task.algorithm]
    if zero_variance:
        model = Deterministic()
    elif task.uncertainty == "delta":
        model = UniformAdditive(task.level)
    else:
        model = UniformRelative(task.level)
    inst, _ = adapt_instance(det, gamma, model, task.alpha, name=task.instance)
    return inst


def task_seed(master_seed: int, task: Task) -> int:
    # shared by every algorithm and grid point of an instance: paired runs
    return derive_seed(master_seed, task.instance, task.repetition)


def execute_task(det: DetInstance, task: Task, cfg: ExperimentConfig) -> dict:
    objective, method, _ = ALGORITHMS[task.algorithm]
    inst = task_instance(det, task, cfg.gamma)
    seed = task_seed(cfg.master_seed, task)
    result = run(
        inst,
        RunConfig(
            budget=cfg.budget,
            seed=seed,
            method=method,
            objective=objective,
            trace_stride=min(cfg.trace_stride, cfg.budget),
        ),
    )
    return {
        "instance": task.instance,
        "uncertainty": task.uncertainty,
        "level": task.level,
        "alpha": task.alpha,
        "algorithm": task.algorithm,
        "repetition": task.repetition,
        "seed": seed,
        "best_feasible_profit": result.best_feasible_profit,
        "evaluations": result.evaluations_used,
        "trace": [list(t) for t in result.trace],
    }


def record_key(rec: dict) -> tuple:
    return (rec["instance"], rec["uncertainty"], rec["level"], rec["alpha"], rec["algorithm"], rec["repetition"])


def _dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_raw(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                # a torn last line after a crash
                log.warning("skipping unreadable raw record in %s", path)
    return records


def _run_chunk(args):
    det, tasks, cfg = args
    return [execute_task(det, t, cfg) for t in tasks]


def run_matrix(cfg: ExperimentConfig, base_dir: Path | None = None, workers: int = 1,
               resume: bool = True) -> "ExperimentTable":
    """Execute every (cell, repetition), write raw records, aggregate.

    Output files in ``cfg.output_dir``: ``raw.partial.jsonl`` is appended
    as runs finish; ``raw.jsonl`` (sorted) and ``table.csv`` are written
    atomically at the end.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "raw.partial.jsonl"
    done: dict[tuple, dict] = {}
    if resume and partial.exists():
        for rec in read_raw(partial):
            done[record_key(rec)] = rec
    elif partial.exists():
        partial.unlink()

    errors: dict[str, str] = {}
    dets: dict[str, DetInstance] = {}
    for source in cfg.instances:
        try:
            dets[source["name"]] = load_source(source, base_dir)
        except Exception as exc:  # reported per instance, others proceed
            errors[source["name"]] = str(exc)
            log.error("instance %s failed to load: %s", source["name"], exc)

    todo: dict[str, list[Task]] = defaultdict(list)
    for task in build_tasks(cfg):
        if task.instance in dets and task.key() not in done:
            todo[task.instance].append(task)

    with open(partial, "a", encoding="utf-8") as fh:
        def sink(recs):
            for rec in recs:
                done[record_key(rec)] = rec
                fh.write(_dumps(rec) + "\n")
            fh.flush()

        chunks = []
        for name, tasks in todo.items():
            for i in range(0, len(tasks), 50):
                chunks.append((dets[name], tasks[i : i + 50], cfg))
        if workers > 1 and chunks:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for recs in pool.map(_run_chunk, chunks):
                    sink(recs)
        else:
            for chunk in chunks:
                sink(_run_chunk(chunk))

    records = sorted(done.values(), key=record_key)
    atomic_write(out / "raw.jsonl", "".join(_dumps(r) + "\n" for r in records))
    table = aggregate(records, cfg.algorithms)
    table.errors = errors
    atomic_write(out / "table.csv", emit_table(table))
    partial.unlink()
    return table


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


@dataclass
class Cell:
    mean: float
    std: float
    runs: int
    marks: dict[str, str] = field(default_factory=dict)


@dataclass
class TableRow:
    instance: str
    uncertainty: str
    level: float
    alpha: float
    cells: dict[str, Cell]
    kw_h: float | None = None
    kw_p: float | None = None

    def key(self) -> tuple:
        return (self.instance, self.uncertainty, self.level, self.alpha)


@dataclass
class ExperimentTable:
    algorithms: list[str]
    rows: list[TableRow]
    errors: dict[str, str] = field(default_factory=dict)

    def row(self, instance: str, uncertainty: str, level: float, alpha: float) -> TableRow:
        for r in self.rows:
            if r.key() == (instance, uncertainty, float(level), float(alpha)):
                return r
        raise KeyError((instance, uncertainty, level, alpha))


def run_profit(rec: dict) -> int:
    """A run's score; runs without a feasible solution count as the empty knapsack."""
    p = rec["best_feasible_profit"]
    return 0 if p is None else int(p)


def aggregate(records, algorithms) -> ExperimentTable:
    """Means, deviations and significance marks; a pure function of the records."""
    grouped: dict[tuple, dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for rec in sorted(records, key=record_key):
        row_key = (rec["instance"], rec["uncertainty"], float(rec["level"]), float(rec["alpha"]))
        grouped[row_key][rec["algorithm"]].append(run_profit(rec))
    rows = []
    for row_key in sorted(grouped):
        by_alg = grouped[row_key]
        present = [a for a in algorithms if a in by_alg]
        cells = {}
        for alg in present:
            vals = np.asarray(by_alg[alg], dtype=float)
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            cells[alg] = Cell(float(vals.mean()), std, int(vals.size))
        row = TableRow(*row_key, cells=cells)
        if len(present) >= 2:
            groups = [by_alg[a] for a in present]
            row.kw_h, row.kw_p = kruskal_wallis(groups)
            if row.kw_p < 0.05:
                marks = pairwise_posthoc(groups)
            else:
                marks = [[NO_DIFFERENCE] * len(present) for _ in present]
            for i, a in enumerate(present):
                cells[a].marks = {b: marks[i][j] for j, b in enumerate(present) if j != i}
        rows.append(row)
    return ExperimentTable(list(algorithms), rows)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def format_stat(cell: Cell, algorithms: list[str]) -> str:
    """Opponent marks as "2(+),3(-)", numbered by configured column order."""
    parts = []
    for idx, alg in enumerate(algorithms, start=1):
        if alg in cell.marks:
            parts.append(f"{idx}({cell.marks[alg]})")
    return ",".join(parts)


def parse_stat(text: str, algorithms: list[str]) -> dict[str, str]:
    marks = {}
    for part in filter(None, text.split(",")):
        idx, mark = part[:-1].split("(")
        marks[algorithms[int(idx) - 1]] = mark
    return marks


def table_header(algorithms) -> list[str]:
    cols = ["instance", "uncertainty", "level", "alpha"]
    for alg in algorithms:
        cols += [f"{alg}_mean", f"{alg}_std", f"{alg}_runs", f"{alg}_stat"]
    return cols + ["kw_h", "kw_p"]


def emit_table(table: ExperimentTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table_header(table.algorithms))
    for row in table.rows:
        out = [row.instance, row.uncertainty, _fmt(row.level), _fmt(row.alpha)]
        for alg in table.algorithms:
            cell = row.cells.get(alg)
            if cell is None:
                out += ["", "", "", ""]
            else:
                out += [_fmt(cell.mean), _fmt(cell.std), str(cell.runs), format_stat(cell, table.algorithms)]
        out += [_fmt(row.kw_h), _fmt(row.kw_p)]
        w.writerow(out)
    return buf.getvalue()


def read_table_csv(text: str) -> ExperimentTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    algorithms = [c[: -len("_mean")] for c in header if c.endswith("_mean")]
    if header != table_header(algorithms):
        raise ValueError("not an experiment table CSV")
    rows = []
    for rec in reader:
        d = dict(zip(header, rec))
        cells = {}
        for alg in algorithms:
            if d[f"{alg}_mean"] == "":
                continue
            cells[alg] = Cell(
                float(d[f"{alg}_mean"]),
                float(d[f"{alg}_std"]),
                int(d[f"{alg}_runs"]),
                parse_stat(d[f"{alg}_stat"], algorithms),
            )
        rows.append(
            TableRow(
                d["instance"],
                d["uncertainty"],
                float(d["level"]),
                float(d["alpha"]),
                cells,
                float(d["kw_h"]) if d["kw_h"] else None,
                float(d["kw_p"]) if d["kw_p"] else None,
            )
        )
    return ExperimentTable(algorithms, rows)


def emit_fig1(eps_values=FIG1_EPSILONS, expected_grid=None) -> str:
    """Crossover-variance curves: one (epsilon, E, var_star) row per grid point."""
    if expected_grid is None:
        expected_grid = np.linspace(0.5, 50.0, 100)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "E", "var_star"])
    for eps, e, v in crossover_grid(eps_values, expected_grid):
        w.writerow([repr(eps), repr(e), "invalid" if v is None else repr(v)])
    return buf.getvalue()


def fig2_rows(table: ExperimentTable, instance: str, uncertainty: str, level: float):
    rows = []
    groups = [a for a in table.algorithms if not ALGORITHMS.get(a, (None, None, False))[2]]
    slice_ = sorted(
        (r for r in table.rows
         if r.instance == instance and r.uncertainty == uncertainty and r.level == float(level)),
        key=lambda r: r.alpha,
    )
    for alg in groups:
        for r in slice_:
            if alg in r.cells:
                rows.append((alg, r.alpha, r.cells[alg].mean))
    return rows


def emit_fig2(table: ExperimentTable, instance: str, uncertainty: str, level: float) -> str:
    """Grouped-bar data: mean profit per (algorithm, alpha) for one instance slice."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "alpha", "mean"])
    for alg, alpha, mean in fig2_rows(table, instance, uncertainty, level):
        w.writerow([alg, repr(alpha), repr(mean)])
    return buf.getvalue()
