import csv
import json

import numpy as np
import pytest
from hypothesis import strategies as st

from phmm.cli import main
from phmm.model import HmmModel, reference_model, random_model
from phmm.side_info import SENTINEL, SideInfoParams

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_instance(seed, max_T=6, max_states=3, max_symbols=3, min_T=1):
    """Random model, observations, labels and channel params, all from one seed."""
    rng = np.random.default_rng(seed)
    ns = int(rng.integers(1, max_states + 1))
    nv = int(rng.integers(1, max_symbols + 1))
    T = int(rng.integers(min_T, max_T + 1))
    model = random_model(ns, nv, rng)
    obs = rng.integers(0, nv, size=T)
    labels = rng.integers(-1, ns, size=T)
    side = SideInfoParams(tau=float(rng.uniform(0, 0.95)), p=float(rng.uniform(0, 1)), num_states=ns)
    return model, obs, labels, side


@pytest.fixture
def reference():
    return reference_model()


@pytest.fixture
def flip_chain():
    """Deterministic two-state chain that alternates 0, 1, 0, ... and emits its state."""
    return HmmModel(pi=[1.0, 0.0], A=[[0.0, 1.0], [1.0, 0.0]], B=[[1.0, 0.0], [0.0, 1.0]])


def all_sentinel(T):
    return np.full(T, SENTINEL)


@pytest.fixture(scope="session")
def reference_grid(tmp_path_factory):
    """Full default grid (100 runs) through ``phmm bench``, computed once per session.

    Returns ``{(tau, p_true, p_train, method): (mean_error, std_error, gain)}``.
    """
    root = tmp_path_factory.mktemp("grid")
    (root / "grid.json").write_text(json.dumps({"true_model": "reference", "num_runs": 100}))
    out = root / "grid.csv"
    assert main(["bench", "--config", str(root / "grid.json"), "--out", str(out)]) == 0
    table = {}
    with open(out, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (float(row["tau"]), float(row["p_true"]), float(row["p_train"]), row["method"])
            gain = float(row["margin_gain_fraction"]) if row["margin_gain_fraction"] else None
            table[key] = (float(row["mean_error_rate"]), float(row["std_error"]), gain)
    return table
