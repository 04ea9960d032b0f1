"""Exhaustive path enumeration, the reference every recursion is checked against.

Each function writes the defining probability as a product over one explicit
path and sums over all ``N_s ** T`` paths with :func:`math.fsum`. Nothing is
shared with the forward-backward code.
"""

import itertools
import math

import numpy as np

from .errors import InstanceTooLarge
from .side_info import SENTINEL, SideInfoParams

MAX_PATHS = 10**6


def _paths(num_states: int, T: int) -> np.ndarray:
    if num_states**T > MAX_PATHS:
        raise InstanceTooLarge(f"{num_states}^{T} paths exceeds the limit of {MAX_PATHS}")
    return np.array(list(itertools.product(range(num_states), repeat=T)), dtype=np.int64).reshape(-1, T)


def _label_weight(label: int, state: int, side: SideInfoParams) -> float:
    if label == SENTINEL:
        return 1.0 - side.tau
    if label == state:
        return side.tau * side.p
    return side.tau * (1.0 - side.p) / (side.num_states - 1)


def path_probabilities(model, obs, labels=None, side=None):
    """Return ``(paths, probs)`` with ``probs[k] = P(Z_k, Y[, X] | model)``."""
    obs = [int(v) for v in obs]
    T = len(obs)
    paths = _paths(model.num_states, T)
    probs = np.empty(len(paths))
    for k, z in enumerate(paths):
        prob = model.pi[z[0]] * model.B[z[0], obs[0]]
        for t in range(1, T):
            prob *= model.A[z[t - 1], z[t]] * model.B[z[t], obs[t]]
        if labels is not None:
            for t in range(T):
                prob *= _label_weight(int(labels[t]), int(z[t]), side)
        probs[k] = prob
    return paths, probs


def enumerate_joint(model, obs, labels=None, side=None) -> float:
    """``P(Y, X | model)``, or ``P(Y | model)`` when no labels are given."""
    _, probs = path_probabilities(model, obs, labels, side)
    return math.fsum(probs)


def enumerate_posterior(model, obs, labels, side, t: int, i: int, j: int) -> float:
    """``P(z_t = i, z_{t+1} = j | Y, X, model)`` with 0-based ``t``."""
    paths, probs = path_probabilities(model, obs, labels, side)
    mask = (paths[:, t] == i) & (paths[:, t + 1] == j)
    return math.fsum(probs[mask]) / math.fsum(probs)


def enumerate_occupancy(model, obs, labels, side, t: int, i: int) -> float:
    """``P(z_t = i | Y, X, model)``."""
    paths, probs = path_probabilities(model, obs, labels, side)
    return math.fsum(probs[paths[:, t] == i]) / math.fsum(probs)


def enumerate_best_path(model, obs, tie_rtol: float = 1e-12):
    """Exact maximizer of ``P(Z, Y | model)``.

    Paths within a relative ``tie_rtol`` of the maximum count as tied, since
    different paths can multiply the same factors in a different order. Among
    tied paths the one chosen is the one Viterbi back-tracking picks: lowest
    final state, then lowest predecessor, and so on backwards.
    Returns ``(path, prob)``.
    """
    paths, probs = path_probabilities(model, obs)
    best = probs.max()
    tied = paths[probs >= best * (1.0 - tie_rtol)]
    # lexicographic order on reversed paths
    order = np.lexsort(tied.T)
    return tied[order[0]], float(best)


def enumerate_all_posteriors(model, obs, labels=None, side=None):
    """Every ``epsilon[t, i, j]`` and ``gamma[t, i]`` from a single enumeration."""
    paths, probs = path_probabilities(model, obs, labels, side)
    T, N = paths.shape[1], model.num_states
    total = math.fsum(probs)
    eps = np.zeros((T - 1, N, N))
    gamma = np.zeros((T, N))
    for t in range(T):
        for i in range(N):
            at_i = paths[:, t] == i
            gamma[t, i] = math.fsum(probs[at_i]) / total
            if t < T - 1:
                for j in range(N):
                    eps[t, i, j] = math.fsum(probs[at_i & (paths[:, t + 1] == j)]) / total
    return eps, gamma
