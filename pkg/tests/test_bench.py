import json
import math

import numpy as np
import pytest

from phmm import bench
from phmm.bench import (
    CSV_HEADER,
    ExperimentConfig,
    error_rate,
    gnuplot_script,
    margin_gain,
    read_csv,
    rows_to_csv,
    run_experiment,
    run_single_replicate,
    write_csv,
)
from phmm.errors import DegenerateLikelihood, UndefinedMargin
from phmm.hmm import StopRule


def small_config(**overrides):
    kw = dict(
        train_length=120,
        test_length=150,
        num_runs=3,
        tau_grid=(0.0, 0.3),
        p_true_grid=(0.8,),
        p_train_grid={0.8: (0.8,)},
        master_seed=5,
        em_stop=StopRule(max_iters=60, rel_tol=1e-5),
    )
    kw.update(overrides)
    return ExperimentConfig(**kw)


@pytest.mark.parametrize(
    "method, expected",
    [(0.20, 1.0), (0.30, 0.0), (0.23, 0.7)],
)
def test_margin_gain(method, expected):
    assert margin_gain(0.30, 0.20, method) == pytest.approx(expected, abs=1e-12)


def test_margin_undefined_without_gap():
    with pytest.raises(UndefinedMargin):
        margin_gain(0.2, 0.2, 0.1)
    with pytest.raises(UndefinedMargin):
        margin_gain(0.1, 0.2, 0.1)


def test_error_rate_permutation():
    truth = np.array([0, 0, 1, 2, 2])
    relabeled = np.array([1, 1, 2, 0, 0])
    assert error_rate(relabeled, truth, 3, best_permutation=False) == 1.0
    assert error_rate(relabeled, truth, 3, best_permutation=True) == 0.0


def test_supervised_replicate_reaches_oracle():
    config = small_config(train_length=250, test_length=500, em_stop=StopRule())
    gaps = []
    for r in range(5):
        res = run_single_replicate(config, 1.0, 1.0, 1.0, r)
        gaps.append(res["phmm"] - res["oracle"])
    assert np.mean(gaps) < 0.02


def test_no_labels_phmm_equals_baseline():
    config = small_config()
    for r in range(3):
        res = run_single_replicate(config, 0.0, 0.8, 0.8, r)
        assert res["phmm"] == res["baseline"]
        assert res["limit"] == res["baseline"]


def test_oracle_ignores_training_data():
    a = run_single_replicate(small_config(train_length=100), 0.3, 0.8, 0.8, 0)
    b = run_single_replicate(small_config(train_length=300), 0.3, 0.8, 0.8, 0)
    assert a["oracle"] == b["oracle"]


def test_single_cell_gives_one_row_per_method():
    config = small_config(num_runs=1, tau_grid=(0.3,))
    rows = run_experiment(config)
    assert [r.method for r in rows] == ["phmm", "baseline", "oracle", "limit"]
    assert all(r.runs == 1 and r.failed_runs == 0 for r in rows)
    for r in rows:
        assert 0.0 <= r.mean_error_rate <= 1.0
        if r.method in ("baseline", "oracle"):
            assert r.margin_gain_fraction is None


def test_rows_deterministic_and_schedule_independent():
    config = small_config()
    serial = rows_to_csv(run_experiment(config))
    assert rows_to_csv(run_experiment(config)) == serial
    assert rows_to_csv(run_experiment(config, workers=2)) == serial


def test_master_seed_changes_results():
    assert rows_to_csv(run_experiment(small_config(master_seed=1))) != rows_to_csv(
        run_experiment(small_config(master_seed=2))
    )


def test_failed_fits_are_counted(monkeypatch):
    calls = {"n": 0}
    real = bench.phmm_fit

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 1:
            raise DegenerateLikelihood(7)
        return real(*args, **kwargs)

    monkeypatch.setattr(bench, "phmm_fit", flaky)
    config = small_config(num_runs=2, tau_grid=(0.3,))
    rows = {r.method: r for r in run_experiment(config)}
    assert rows["phmm"].runs == 1 and rows["phmm"].failed_runs == 1
    assert rows["oracle"].runs == 2


def test_csv_round_trip(tmp_path):
    rows = run_experiment(small_config(num_runs=2))
    path = tmp_path / "out.csv"
    write_csv(rows, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_csv(path)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a.method == b.method and a.runs == b.runs
        assert a.mean_error_rate == pytest.approx(b.mean_error_rate, rel=1e-9)
        if a.margin_gain_fraction is None:
            assert b.margin_gain_fraction is None
        else:
            assert a.margin_gain_fraction == pytest.approx(b.margin_gain_fraction, rel=1e-9)


def test_config_from_dict():
    doc = {
        "true_model": "reference",
        "num_runs": 4,
        "tau_grid": [0, 0.5],
        "p_true_grid": [1],
        "p_train_grid": {"1.0": [1, 0.5]},
        "em_stop": {"max_iters": 10, "rel_tol": 1e-4},
        "permutation_mode": "raw",
    }
    config = ExperimentConfig.from_dict(doc)
    assert config.p_train_grid == {1.0: (1.0, 0.5)}
    assert config.em_stop == StopRule(10, 1e-4)
    assert list(config.cells()) == [(0.0, 1.0, 1.0), (0.5, 1.0, 1.0), (0.0, 1.0, 0.5), (0.5, 1.0, 0.5)]


@pytest.mark.parametrize(
    "doc",
    [
        {"bogus": 1},
        {"tau_grid": []},
        {"tau_grid": [1.5]},
        {"p_true_grid": [0.7]},
        {"num_runs": 0},
        {"permutation_mode": "sorted"},
        {"b_update_bound": "half"},
    ],
)
def test_config_rejects_bad_documents(doc):
    with pytest.raises((ValueError, TypeError)):
        ExperimentConfig.from_dict(doc)


def test_default_grid():
    config = ExperimentConfig()
    assert (config.train_length, config.test_length) == (250, 500)
    assert config.tau_grid[0] == 0.0 and config.tau_grid[-1] == 0.6
    assert config.p_train_grid[0.8] == (0.75, 0.8, 0.85, 1.0)
    assert config.p_train_grid[1.0] == (1.0, 0.5)
    assert len(list(config.cells())) == 70


def test_gnuplot_script_references_csv():
    script = gnuplot_script("runs/out.csv", small_config())
    assert "'out.csv'" in script
    assert "set datafile separator ','" in script
    assert script.count("plot '") == 1


def _paired_gap_ok(hi, lo):
    """``hi`` may exceed ``lo`` by at most two standard errors of the difference."""
    return hi[0] - lo[0] <= 2 * math.hypot(hi[1], lo[1])


@pytest.mark.slow
def test_grid_ordering_oracle_limit_baseline(reference_grid):
    cells = {key[:3] for key in reference_grid}
    for tau, p_true, p_train in cells:
        oracle = reference_grid[(tau, p_true, p_train, "oracle")]
        limit = reference_grid[(tau, p_true, p_train, "limit")]
        baseline = reference_grid[(tau, p_true, p_train, "baseline")]
        assert _paired_gap_ok(oracle, limit), (tau, p_true, p_train)
        assert _paired_gap_ok(limit, baseline), (tau, p_true, p_train)


@pytest.mark.slow
def test_grid_error_non_increasing_once_labels_anchor(reference_grid):
    # tau = 0 is scored up to relabeling and every later tau is scored raw,
    # so the comparison starts at the first tau that reveals labels
    taus = sorted({key[0] for key in reference_grid if key[0] > 0})
    pairs = {(key[1], key[2]) for key in reference_grid if abs(key[1] - key[2]) <= 0.05 + 1e-9}
    for p_true, p_train in pairs:
        errs = [reference_grid[(tau, p_true, p_train, "phmm")] for tau in taus]
        for tau, prev, cur in zip(taus[1:], errs, errs[1:]):
            assert _paired_gap_ok(cur, prev), (p_true, p_train, tau)
