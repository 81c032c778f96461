import json

import numpy as np
import pytest

from cckp.bounds import crossover_variance
from cckp.experiment import (
    FIG1_EPSILONS,
    Cell,
    ConfigError,
    ExperimentConfig,
    ExperimentTable,
    TableRow,
    aggregate,
    build_tasks,
    emit_fig1,
    emit_fig2,
    emit_table,
    fig2_rows,
    format_stat,
    parse_stat,
    read_raw,
    read_table_csv,
    run_matrix,
    table_header,
)

GEN = {"kind": "uncorr", "n": 20, "seed": 3}


def small_config(tmp_path, **overrides):
    d = dict(
        instances=[{"name": "u20", "generate": GEN}],
        alphas=[0.001, 0.01],
        deltas=[25],
        algorithms=["ea_cantelli", "gsemo_cantelli", "ea_chernoff"],
        repetitions=3,
        budget=500,
        output_dir=str(tmp_path / "out"),
        trace_stride=250,
    )
    d.update(overrides)
    return ExperimentConfig.from_dict(d)


@pytest.mark.parametrize(
    "patch",
    [
        {"repetitions": 0},
        {"alphas": []},
        {"algorithms": []},
        {"algorithms": ["ea_magic"]},
        {"deltas": [], "betas": [0.1]},
        {"instances": []},
        {"instances": [{"generate": GEN}]},
        {"colour": "red"},
    ],
)
def test_config_validation(tmp_path, patch):
    with pytest.raises(ConfigError):
        small_config(tmp_path, **patch)


def test_config_round_trip(tmp_path):
    cfg = small_config(tmp_path)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg


def test_chernoff_skipped_on_relative_rows(tmp_path):
    cfg = small_config(tmp_path, betas=[0.05], repetitions=1)
    tasks = build_tasks(cfg)
    assert not [t for t in tasks if t.uncertainty == "beta" and "chernoff" in t.algorithm]
    assert len(tasks) == 2 * 3 + 2 * 2


def test_single_cell_table(tmp_path):
    cfg = small_config(tmp_path, alphas=[0.01], algorithms=["ea_cantelli"], repetitions=1)
    table = run_matrix(cfg)
    raw = read_raw(tmp_path / "out" / "raw.jsonl")
    assert len(table.rows) == 1 and len(raw) == 1
    cell = table.rows[0].cells["ea_cantelli"]
    assert cell.runs == 1 and cell.mean == (raw[0]["best_feasible_profit"] or 0)
    assert cell.marks == {} and table.rows[0].kw_h is None
    csv_text = (tmp_path / "out" / "table.csv").read_text()
    assert len(csv_text.strip().splitlines()) == 2
    assert not (tmp_path / "out" / "raw.partial.jsonl").exists()


def test_rerun_is_identical(tmp_path):
    a = small_config(tmp_path, output_dir=str(tmp_path / "a"))
    b = small_config(tmp_path, output_dir=str(tmp_path / "b"))
    run_matrix(a)
    run_matrix(b)
    for name in ("raw.jsonl", "table.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_matches_sequential(tmp_path):
    a = small_config(tmp_path, output_dir=str(tmp_path / "a"))
    b = small_config(tmp_path, output_dir=str(tmp_path / "b"))
    run_matrix(a, workers=1)
    run_matrix(b, workers=2)
    for name in ("raw.jsonl", "table.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_every_mean_aggregates_all_repetitions(tmp_path):
    cfg = small_config(tmp_path)
    table = run_matrix(cfg)
    for row in table.rows:
        assert {c.runs for c in row.cells.values()} == {cfg.repetitions}


def test_deterministic_cell_invariant_across_grid(tmp_path):
    cfg = small_config(
        tmp_path,
        alphas=[0.0001, 0.001, 0.01],
        deltas=[25, 50],
        betas=[0.05],
        algorithms=["ea_deterministic", "ea_cantelli"],
        repetitions=4,
    )
    table = run_matrix(cfg)
    cells = {(c.mean, c.std) for r in table.rows for c in [r.cells["ea_deterministic"]]}
    assert len(table.rows) == 9 and len(cells) == 1


def test_reaggregation_reproduces_table(tmp_path):
    cfg = small_config(tmp_path)
    table = run_matrix(cfg)
    raw = read_raw(tmp_path / "out" / "raw.jsonl")
    assert emit_table(aggregate(raw, cfg.algorithms)) == emit_table(table)
    assert emit_table(aggregate(list(reversed(raw)), cfg.algorithms)) == emit_table(table)


def test_resume_from_partial_output(tmp_path):
    full = small_config(tmp_path, output_dir=str(tmp_path / "full"))
    run_matrix(full)
    lines = (tmp_path / "full" / "raw.jsonl").read_text().splitlines()

    part = tmp_path / "part"
    part.mkdir()
    # half the runs plus a torn record, as left behind by a crash
    (part / "raw.partial.jsonl").write_text("\n".join(lines[::2]) + '\n{"instance": "u2')
    resumed = small_config(tmp_path, output_dir=str(part))
    run_matrix(resumed)
    for name in ("raw.jsonl", "table.csv"):
        assert (part / name).read_bytes() == (tmp_path / "full" / name).read_bytes()


def test_instance_load_failure_is_isolated(tmp_path):
    cfg = small_config(
        tmp_path,
        instances=[{"name": "u20", "generate": GEN}, {"name": "missing", "file": str(tmp_path / "nope.txt")}],
        repetitions=1,
    )
    table = run_matrix(cfg)
    assert "missing" in table.errors
    assert {r.instance for r in table.rows} == {"u20"}


def test_csv_round_trip_and_column_order(tmp_path):
    cfg = small_config(tmp_path, algorithms=["gsemo_cantelli", "ea_chernoff", "ea_cantelli"])
    table = run_matrix(cfg)
    text = emit_table(table)
    header = text.splitlines()[0].split(",")
    assert header == table_header(cfg.algorithms)
    assert header[4:6] == ["gsemo_cantelli_mean", "gsemo_cantelli_std"]
    back = read_table_csv(text)
    assert back.algorithms == table.algorithms
    assert back.rows == table.rows
    assert emit_table(back) == text


def test_stat_format():
    algs = ["a", "b", "c"]
    cell = Cell(1.0, 0.0, 3, {"b": "+", "c": "-"})
    assert format_stat(cell, algs) == "2(+),3(-)"
    assert parse_stat("2(+),3(-)", algs) == cell.marks
    assert parse_stat("", algs) == {}


def test_significance_marks_antisymmetric():
    recs = []
    for alg, base in (("ea_cantelli", 0), ("gsemo_cantelli", 100), ("ea_chernoff", 100)):
        for rep in range(10):
            recs.append(
                dict(instance="i", uncertainty="delta", level=25.0, alpha=0.01, algorithm=alg,
                     repetition=rep, best_feasible_profit=base + rep)
            )
    table = aggregate(recs, ["ea_cantelli", "gsemo_cantelli", "ea_chernoff"])
    cells = table.rows[0].cells
    assert cells["ea_cantelli"].marks == {"gsemo_cantelli": "-", "ea_chernoff": "-"}
    assert cells["gsemo_cantelli"].marks == {"ea_cantelli": "+", "ea_chernoff": "·"}
    assert table.rows[0].kw_p < 0.05


def test_marks_suppressed_without_omnibus_significance():
    recs = [
        dict(instance="i", uncertainty="delta", level=25.0, alpha=0.01, algorithm=alg,
             repetition=rep, best_feasible_profit=v)
        for alg, vals in (("ea_cantelli", [1, 5, 9]), ("gsemo_cantelli", [2, 6, 8]))
        for rep, v in enumerate(vals)
    ]
    table = aggregate(recs, ["ea_cantelli", "gsemo_cantelli"])
    assert table.rows[0].kw_p >= 0.05
    assert table.rows[0].cells["ea_cantelli"].marks == {"gsemo_cantelli": "·"}


def test_missing_feasible_profit_counts_as_zero():
    recs = [dict(instance="i", uncertainty="delta", level=25.0, alpha=0.01, algorithm="ea_cantelli",
                 repetition=0, best_feasible_profit=None)]
    assert aggregate(recs, ["ea_cantelli"]).rows[0].cells["ea_cantelli"].mean == 0.0


def _fig1_curves(text):
    lines = text.strip().splitlines()
    assert lines[0] == "epsilon,E,var_star"
    curves = {}
    for line in lines[1:]:
        eps, e, v = line.split(",")
        curves.setdefault(float(eps), {})[float(e)] = None if v == "invalid" else float(v)
    return curves


def test_fig1_five_curves_and_spot_value():
    curves = _fig1_curves(emit_fig1())
    assert sorted(curves) == list(FIG1_EPSILONS)
    assert all(len(c) == 100 for c in curves.values())
    spot = _fig1_curves(emit_fig1([0.5], [2.0]))
    assert spot[0.5][2.0] == pytest.approx(4.1394, rel=1e-4)


def test_fig1_invalid_rows_are_kept():
    curves = _fig1_curves(emit_fig1([1e-200, 0.5], [1.0]))
    assert curves[1e-200][1.0] is None and curves[0.5][1.0] is not None


def test_fig1_ordering_over_grid():
    # Observed on the default grid: every pair of curves crosses once; past
    # the crossing the larger-epsilon curve lies strictly below.  All crossings
    # fall at E <= 22.5, and for E <= 2.5 the order is fully reversed.
    curves = _fig1_curves(emit_fig1())
    grid = sorted(curves[FIG1_EPSILONS[0]])
    for i, lo in enumerate(FIG1_EPSILONS):
        for hi in FIG1_EPSILONS[i + 1 :]:
            below = [curves[hi][e] < curves[lo][e] for e in grid]
            first = below.index(True)
            assert all(below[first:]) and not any(below[:first])
            assert grid[first] <= 22.5
    for e in grid:
        vals = [curves[eps][e] for eps in FIG1_EPSILONS]
        if e >= 22.5:
            assert all(np.diff(vals) < 0)
        if e <= 2.5:
            assert all(np.diff(vals) > 0)


def test_fig1_matches_crossover_variance():
    curves = _fig1_curves(emit_fig1([0.1], [3.0, 7.5]))
    assert curves[0.1][7.5] == crossover_variance(0.1, 7.5)


def _table_for_fig2():
    algs = ["ea_deterministic", "ea_chernoff", "ea_cantelli", "gsemo_chernoff", "gsemo_cantelli"]
    rows = []
    for alpha in (0.01, 0.0001, 0.001):
        cells = {a: Cell(1000 * alpha + i, 1.0, 10) for i, a in enumerate(algs)}
        rows.append(TableRow("bsc", "delta", 25.0, alpha, cells))
    rows.append(TableRow("bsc", "delta", 50.0, 0.01, {a: Cell(0, 0, 10) for a in algs}))
    return ExperimentTable(algs, rows)


def test_fig2_cross_product():
    table = _table_for_fig2()
    rows = fig2_rows(table, "bsc", "delta", 25)
    assert len(rows) == 12
    assert [r[1] for r in rows[:3]] == [0.0001, 0.001, 0.01]
    assert {r[0] for r in rows} == {"ea_chernoff", "ea_cantelli", "gsemo_chernoff", "gsemo_cantelli"}
    text = emit_fig2(table, "bsc", "delta", 25)
    assert text.splitlines()[0] == "group,alpha,mean" and len(text.splitlines()) == 13


def test_fig2_empty_slice_header_only():
    assert emit_fig2(_table_for_fig2(), "other", "delta", 25) == "group,alpha,mean\n"
