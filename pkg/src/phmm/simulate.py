"""Corrupting a known state sequence into partial, noisy labels."""

import numpy as np

from .side_info import SENTINEL


def corrupt_labels(truth, tau: float, p_true: float, num_states: int, rng: np.random.Generator) -> np.ndarray:
    """Reveal each state independently with probability ``tau``.

    A revealed state is kept with probability ``p_true`` and otherwise replaced
    by one of the other ``num_states - 1`` states, uniformly. Unrevealed
    positions get :data:`SENTINEL`.

    Three draws of length T are always consumed, whatever ``tau`` and
    ``p_true`` are, so one generator state gives coupled label sequences
    across a parameter sweep: the revealed set grows with ``tau``.
    """
    if not (0.0 <= tau <= 1.0 and 0.0 <= p_true <= 1.0):
        raise ValueError("tau and p_true must lie in [0, 1]")
    if num_states < 2 and p_true < 1.0:
        raise ValueError("wrong labels need at least two states")
    truth = np.asarray(truth, dtype=np.int64)
    T = truth.size
    revealed = rng.random(T) < tau
    correct = rng.random(T) < p_true
    if num_states > 1:
        offset = rng.integers(1, num_states, size=T)
    else:
        offset = np.zeros(T, dtype=np.int64)
    labels = np.where(correct, truth, (truth + offset) % max(num_states, 1))
    return np.where(revealed, labels, SENTINEL)
