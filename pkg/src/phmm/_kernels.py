"""Compiled inner loops shared by the plain and side-information estimators.

Every recursion here runs on an evidence matrix ``E`` of shape (T, N_s), where
``E[t, i]`` is the probability of everything observed at step ``t`` given
``z_t = i``. For the plain HMM that is ``B[i, y_t]``; with side information it
is ``B[i, y_t] * nu(x_t, i)``. Failures are reported through return codes
because compiled code cannot raise the package's exception types.
"""

import numpy as np
from numba import njit

# Log-domain margin below which two path scores count as tied. Distinct paths
# can share the same multiset of factors, so exact ties round differently.
TIE_TOL = 1e-12


@njit(cache=True)
def forward(pi, A, E):
    """Scaled forward pass. Returns (alpha_hat, scale, bad_t), bad_t = -1 on success."""
    T, N = E.shape
    alpha = np.zeros((T, N))
    scale = np.zeros(T)
    c = 0.0
    for i in range(N):
        alpha[0, i] = pi[i] * E[0, i]
        c += alpha[0, i]
    if not c > 0.0:
        return alpha, scale, 0
    scale[0] = c
    for i in range(N):
        alpha[0, i] /= c
    for t in range(1, T):
        c = 0.0
        for i in range(N):
            acc = 0.0
            for j in range(N):
                acc += alpha[t - 1, j] * A[j, i]
            alpha[t, i] = acc * E[t, i]
            c += alpha[t, i]
        if not c > 0.0:
            return alpha, scale, t
        scale[t] = c
        for i in range(N):
            alpha[t, i] /= c
    return alpha, scale, -1


@njit(cache=True)
def backward(A, E, scale):
    T, N = E.shape
    beta = np.zeros((T, N))
    for i in range(N):
        beta[T - 1, i] = 1.0
    for t in range(T - 2, -1, -1):
        for i in range(N):
            acc = 0.0
            for j in range(N):
                acc += A[i, j] * E[t + 1, j] * beta[t + 1, j]
            beta[t, i] = acc / scale[t + 1]
    return beta


@njit(cache=True)
def pair_posteriors(A, E, alpha, beta, scale):
    """eps[t, i, j] for t < T-1, from scaled quantities."""
    T, N = E.shape
    eps = np.zeros((max(T - 1, 0), N, N))
    for t in range(T - 1):
        for i in range(N):
            for j in range(N):
                eps[t, i, j] = alpha[t, i] * A[i, j] * E[t + 1, j] * beta[t + 1, j] / scale[t + 1]
    return eps


@njit(cache=True)
def viterbi(log_pi, log_A, log_E):
    """Max-product decoding in the log domain.

    Ties (within TIE_TOL) go to the lowest state index, both for the final
    state and for every back-pointer. Returns (path, best_log_prob, bad_t);
    bad_t = -1 on success.
    """
    T, N = log_E.shape
    delta = np.empty((T, N))
    back = np.zeros((T, N), dtype=np.int64)
    for i in range(N):
        delta[0, i] = log_pi[i] + log_E[0, i]
    bad_t = -1
    if np.all(delta[0] == -np.inf):
        bad_t = 0
    for t in range(1, T):
        for j in range(N):
            best = -np.inf
            arg = 0
            for i in range(N):
                v = delta[t - 1, i] + log_A[i, j]
                if v > best + TIE_TOL:
                    best = v
                    arg = i
            delta[t, j] = best + log_E[t, j]
            back[t, j] = arg
        if bad_t < 0 and np.all(delta[t] == -np.inf):
            bad_t = t
    path = np.zeros(T, dtype=np.int64)
    best = -np.inf
    last = 0
    for i in range(N):
        if delta[T - 1, i] > best + TIE_TOL:
            best = delta[T - 1, i]
            last = i
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best, bad_t
