import numpy as np
import pytest

from phmm.hmm import sample_sequence
from phmm.side_info import SENTINEL
from phmm.simulate import corrupt_labels


def test_no_reveal_gives_all_sentinels():
    truth = np.array([0, 1, 2, 1, 0])
    assert np.all(corrupt_labels(truth, 0.0, 0.8, 3, np.random.default_rng(0)) == SENTINEL)


def test_full_reveal_without_noise_is_truth():
    truth = np.random.default_rng(1).integers(0, 3, size=200)
    np.testing.assert_array_equal(corrupt_labels(truth, 1.0, 1.0, 3, np.random.default_rng(2)), truth)


def test_seed_determinism():
    truth = np.random.default_rng(1).integers(0, 3, size=200)
    a = corrupt_labels(truth, 0.4, 0.7, 3, np.random.default_rng(5))
    b = corrupt_labels(truth, 0.4, 0.7, 3, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_channel_frequencies():
    n = 100_000
    truth = np.random.default_rng(3).integers(0, 3, size=n)
    labels = corrupt_labels(truth, 0.3, 0.8, 3, np.random.default_rng(4))
    unseen = labels == SENTINEL
    correct = labels == truth
    wrong_by_offset = [(labels == (truth + k) % 3) & ~unseen for k in (1, 2)]
    for observed, prob in [(unseen, 0.70), (correct, 0.24), *[(w, 0.03) for w in wrong_by_offset]]:
        se = np.sqrt(prob * (1 - prob) / n)
        assert abs(observed.mean() - prob) < 3 * se


def test_reveal_indicator_has_no_autocorrelation():
    n = 100_000
    truth = np.zeros(n, dtype=np.int64)
    revealed = (corrupt_labels(truth, 0.3, 1.0, 2, np.random.default_rng(6)) != SENTINEL).astype(float)
    centered = revealed - revealed.mean()
    lag1 = (centered[:-1] @ centered[1:]) / (centered @ centered)
    assert abs(lag1) < 3 / np.sqrt(n)


def test_revealed_set_grows_with_tau_for_a_fixed_seed(reference):
    z, _ = sample_sequence(reference, 500, np.random.default_rng(0))
    low = corrupt_labels(z, 0.2, 0.8, 3, np.random.default_rng(9)) != SENTINEL
    high = corrupt_labels(z, 0.5, 0.8, 3, np.random.default_rng(9)) != SENTINEL
    assert np.all(high[low])


def test_noise_needs_two_states():
    with pytest.raises(ValueError):
        corrupt_labels([0, 0], 0.5, 0.9, 1, np.random.default_rng(0))
    assert corrupt_labels([0, 0], 1.0, 1.0, 1, np.random.default_rng(0)).tolist() == [0, 0]
