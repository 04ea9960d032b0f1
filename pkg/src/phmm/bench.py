"""Monte Carlo state-recognition experiment.

For every replicate a training and a test sequence are drawn from the true
model. The training states are corrupted into labels, a model is fitted with
and without the labels, and the test states are decoded with Viterbi under
each fitted model and under the true model. Four methods are scored:

``phmm``      side-information training with the cell's ``(tau, p_train)``
``baseline``  ordinary Baum-Welch on the observations alone
``oracle``    decoding with the true parameters
``limit``     side-information training with correct, fully trusted labels

Seeding
-------
Replicate ``r`` owns ``SeedSequence(master_seed, spawn_key=(r,))``, whose four
spawned children drive, in order, the training sequence, the test sequence,
the shared random initial model, and the label corruption. Every grid cell
re-creates its label generator from the same child, so within a replicate
all cells see the same data and coupled labels. Results depend only on
``master_seed`` and the replicate index, never on execution order.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DegenerateLikelihood, DegenerateStatistics, UndefinedMargin
from .hmm import B_UPDATE_BOUNDS, StopRule, baum_welch_fit, sample_sequence, viterbi
from .model import HmmModel, reference_model, random_model
from .side_info import SENTINEL, SideInfoParams, phmm_fit
from .simulate import corrupt_labels

log = logging.getLogger(__name__)

METHODS = ("phmm", "baseline", "oracle", "limit")
PERMUTATION_MODES = ("raw", "best-permutation")
CSV_HEADER = (
    "tau",
    "p_true",
    "p_train",
    "method",
    "mean_error_rate",
    "std_error",
    "margin_gain_fraction",
    "runs",
    "failed_runs",
)

DEFAULT_TAU_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
DEFAULT_P_TRUE_GRID = (0.6, 0.8, 1.0)
DEFAULT_P_TRAIN_GRID = {
    0.6: (0.55, 0.6, 0.65, 1.0),
    0.8: (0.75, 0.8, 0.85, 1.0),
    1.0: (1.0, 0.5),
}


@dataclass(frozen=True)
class ExperimentConfig:
    true_model: HmmModel = field(default_factory=reference_model)
    train_length: int = 250
    test_length: int = 500
    num_runs: int = 100
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    p_true_grid: tuple[float, ...] = DEFAULT_P_TRUE_GRID
    p_train_grid: dict[float, tuple[float, ...]] = field(default_factory=lambda: dict(DEFAULT_P_TRAIN_GRID))
    master_seed: int = 0
    em_stop: StopRule = StopRule()
    b_update_bound: Literal["paper", "full"] = "full"
    permutation_mode: Literal["raw", "best-permutation"] = "best-permutation"

    def __post_init__(self):
        self.true_model.validated()
        if self.train_length < 2 or self.test_length < 1 or self.num_runs < 1:
            raise ValueError("lengths and num_runs must be positive (train_length >= 2)")
        if not self.tau_grid or not self.p_true_grid:
            raise ValueError("tau_grid and p_true_grid must be non-empty")
        for v in (*self.tau_grid, *self.p_true_grid):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"grid value {v} outside [0, 1]")
        for p_true in self.p_true_grid:
            trains = self.p_train_grid.get(p_true)
            if not trains:
                raise ValueError(f"no p_train values for p_true={p_true}")
            if any(not 0.0 <= v <= 1.0 for v in trains):
                raise ValueError(f"p_train values for p_true={p_true} outside [0, 1]")
        if self.b_update_bound not in B_UPDATE_BOUNDS:
            raise ValueError(f"b_update_bound must be one of {B_UPDATE_BOUNDS}")
        if self.permutation_mode not in PERMUTATION_MODES:
            raise ValueError(f"permutation_mode must be one of {PERMUTATION_MODES}")

    def cells(self):
        """``(tau, p_true, p_train)`` triples in output order."""
        for p_true in self.p_true_grid:
            for p_train in self.p_train_grid[p_true]:
                for tau in self.tau_grid:
                    yield tau, p_true, p_train

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(doc)
        if "true_model" in kw:
            tm = kw["true_model"]
            kw["true_model"] = reference_model() if tm == "reference" else HmmModel.from_dict(tm)
        for key in ("tau_grid", "p_true_grid"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        if "p_train_grid" in kw:
            kw["p_train_grid"] = {
                float(k): tuple(float(v) for v in vals) for k, vals in kw["p_train_grid"].items()
            }
        if "em_stop" in kw:
            kw["em_stop"] = StopRule(**kw["em_stop"])
        return cls(**kw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ResultRow:
    tau: float
    p_true: float
    p_train: float
    method: str
    mean_error_rate: float
    std_error: float
    margin_gain_fraction: float | None
    runs: int
    failed_runs: int


def margin_gain(baseline_err: float, oracle_err: float, method_err: float) -> float:
    """Fraction of the baseline-to-oracle gap closed by a method."""
    if not baseline_err > oracle_err:
        raise UndefinedMargin(f"baseline error {baseline_err} does not exceed oracle error {oracle_err}")
    return (baseline_err - method_err) / (baseline_err - oracle_err)


def error_rate(predicted, truth, num_states: int, best_permutation: bool) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if not best_permutation:
        return float(np.mean(predicted != truth))
    best = 1.0
    for perm in itertools.permutations(range(num_states)):
        best = min(best, float(np.mean(np.asarray(perm)[predicted] != truth)))
    return best


def replicate_streams(master_seed: int, replicate: int):
    """Seed sequences for (train data, test data, initial model, labels)."""
    return np.random.SeedSequence(master_seed, spawn_key=(replicate,)).spawn(4)


class Replicate:
    """Data and fitted models for one replicate, shared by every grid cell.

    Fits are cached by ``(tau, p_true, p_train)`` so the limit method and the
    ``p_true = p_train = 1`` cells reuse each other's work.
    """

    def __init__(self, config: ExperimentConfig, replicate: int):
        self.config = config
        train_ss, test_ss, init_ss, self._label_ss = replicate_streams(config.master_seed, replicate)
        model = config.true_model
        self.train_states, self.train_obs = sample_sequence(model, config.train_length, np.random.default_rng(train_ss))
        self.test_states, self.test_obs = sample_sequence(model, config.test_length, np.random.default_rng(test_ss))
        self.init = random_model(model.num_states, model.num_symbols, np.random.default_rng(init_ss))
        self._cache: dict = {}

    def labels(self, tau: float, p_true: float) -> np.ndarray:
        rng = np.random.default_rng(self._label_ss)
        return corrupt_labels(self.train_states, tau, p_true, self.config.true_model.num_states, rng)

    def _score(self, model: HmmModel, anchored: bool) -> float:
        path, _ = viterbi(model, self.test_obs)
        permute = self.config.permutation_mode == "best-permutation" and not anchored
        return error_rate(path, self.test_states, model.num_states, permute)

    def oracle(self) -> float:
        if "oracle" not in self._cache:
            self._cache["oracle"] = self._score(self.config.true_model, anchored=True)
        return self._cache["oracle"]

    def baseline(self) -> float | None:
        if "baseline" not in self._cache:
            try:
                fit = baum_welch_fit(self.init, self.train_obs, self.config.em_stop, self.config.b_update_bound)
                self._cache["baseline"] = self._score(fit.final_model, anchored=False)
            except (DegenerateLikelihood, DegenerateStatistics) as exc:
                log.warning("baseline fit failed: %s", exc)
                self._cache["baseline"] = None
        return self._cache["baseline"]

    def phmm(self, tau: float, p_true: float, p_train: float) -> float | None:
        key = (tau, p_true, p_train)
        if key not in self._cache:
            labels = self.labels(tau, p_true)
            side = SideInfoParams(tau=tau, p=p_train, num_states=self.config.true_model.num_states)
            try:
                fit = phmm_fit(self.init, self.train_obs, labels, side, self.config.em_stop, self.config.b_update_bound)
                anchored = bool(np.any(labels != SENTINEL))
                self._cache[key] = self._score(fit.final_model, anchored=anchored)
            except (DegenerateLikelihood, DegenerateStatistics) as exc:
                log.warning("phmm fit failed at %s: %s", key, exc)
                self._cache[key] = None
        return self._cache[key]

    def limit(self, tau: float) -> float | None:
        return self.phmm(tau, 1.0, 1.0)

    def cell(self, tau: float, p_true: float, p_train: float) -> dict[str, float | None]:
        return {
            "phmm": self.phmm(tau, p_true, p_train),
            "baseline": self.baseline(),
            "oracle": self.oracle(),
            "limit": self.limit(tau),
        }


def run_single_replicate(config: ExperimentConfig, tau: float, p_true: float, p_train: float, replicate: int):
    """Per-method error rates for one replicate of one cell; ``None`` marks a failed fit."""
    return Replicate(config, replicate).cell(tau, p_true, p_train)


def _replicate_table(args):
    config, replicate = args
    rep = Replicate(config, replicate)
    return [rep.cell(*cell) for cell in config.cells()]


def run_experiment(config: ExperimentConfig, workers: int = 1, progress=None) -> list[ResultRow]:
    """Aggregate every replicate into four rows per grid cell.

    ``workers > 1`` spreads replicates over processes; results are identical.
    ``progress``, if given, is called with the number of finished replicates.
    """
    jobs = [(config, r) for r in range(config.num_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tables = []
            for table in pool.map(_replicate_table, jobs):
                tables.append(table)
                if progress:
                    progress(len(tables))
    else:
        tables = []
        for job in jobs:
            tables.append(_replicate_table(job))
            if progress:
                progress(len(tables))

    rows = []
    for k, (tau, p_true, p_train) in enumerate(config.cells()):
        stats = {}
        for method in METHODS:
            values = [table[k][method] for table in tables]
            ok = np.array([v for v in values if v is not None], dtype=np.float64)
            mean = float(ok.mean()) if ok.size else math.nan
            se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
            stats[method] = (mean, se, int(ok.size), len(values) - int(ok.size))
        base_mean, oracle_mean = stats["baseline"][0], stats["oracle"][0]
        for method in METHODS:
            mean, se, runs, failed = stats[method]
            gain = None
            if method in ("phmm", "limit"):
                try:
                    gain = margin_gain(base_mean, oracle_mean, mean)
                except UndefinedMargin:
                    gain = None
            rows.append(ResultRow(tau, p_true, p_train, method, mean, se, gain, runs, failed))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])
    return buf.getvalue()


def write_csv(rows: list[ResultRow], path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def read_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                ResultRow(
                    tau=float(rec["tau"]),
                    p_true=float(rec["p_true"]),
                    p_train=float(rec["p_train"]),
                    method=rec["method"],
                    mean_error_rate=float(rec["mean_error_rate"]),
                    std_error=float(rec["std_error"]),
                    margin_gain_fraction=float(rec["margin_gain_fraction"]) if rec["margin_gain_fraction"] else None,
                    runs=int(rec["runs"]),
                    failed_runs=int(rec["failed_runs"]),
                )
            )
    return rows


def gnuplot_script(csv_path, config: ExperimentConfig) -> str:
    """A gnuplot script drawing one error-vs-tau panel per ``(p_true, p_train)``."""
    panels = [(pt, ptr) for pt in config.p_true_grid for ptr in config.p_train_grid[pt]]
    cols = min(len(panels), 4)
    nrows = math.ceil(len(panels) / cols)
    name = Path(csv_path).name
    out = [
        "# error rate against tau for each (p_true, p_train)",
        "set datafile separator ','",
        f"set terminal pngcairo size {400 * cols},{320 * nrows}",
        f"set output '{Path(name).stem}.png'",
        "set key top right font ',8'",
        "set xlabel 'tau'",
        "set ylabel 'state recognition error'",
        f"set multiplot layout {nrows},{cols}",
    ]
    for pt, ptr in panels:
        sel = f"(strcol(4) eq '%s' && abs($2-{pt})<1e-9 && abs($3-{ptr})<1e-9 ? $5 : 1/0)"
        series = ", ".join(
            f"'{name}' every ::1 using 1:{sel % method} with linespoints title '{method}'" for method in METHODS
        )
        out.append(f"set title 'p_true={pt:g}, p_train={ptr:g}'")
        out.append(f"plot {series}")
    out.append("unset multiplot")
    return "\n".join(out) + "\n"


def format_summary(rows: list[ResultRow]) -> str:
    """Text table of PHMM and limit margin gains, one line per cell."""
    lines = [f"{'tau':>5} {'p_true':>6} {'p_train':>7} {'phmm':>8} {'baseline':>8} {'oracle':>8} {'limit':>8} {'gain':>7}"]
    by_cell: dict = {}
    for r in rows:
        by_cell.setdefault((r.tau, r.p_true, r.p_train), {})[r.method] = r
    for (tau, pt, ptr), m in by_cell.items():
        gain = m["phmm"].margin_gain_fraction
        gain_txt = f"{gain:7.3f}" if gain is not None else f"{'n/a':>7}"
        lines.append(
            f"{tau:5.2f} {pt:6.2f} {ptr:7.2f} {m['phmm'].mean_error_rate:8.4f} {m['baseline'].mean_error_rate:8.4f} "
            f"{m['oracle'].mean_error_rate:8.4f} {m['limit'].mean_error_rate:8.4f} {gain_txt}"
        )
    return "\n".join(lines)
