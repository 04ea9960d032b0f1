"""Classical discrete HMM: sampling, scaled forward-backward, Baum-Welch, Viterbi.

The evidence-matrix helpers at the bottom (``_trellis_from_evidence``,
``_reestimate``, ``_em_loop``) are shared with :mod:`phmm.side_info`, which
only changes how the per-step evidence is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import _kernels
from .errors import DegenerateLikelihood, DegenerateStatistics
from .model import HmmModel, floor_model, validate_model

BUpdateBound = Literal["paper", "full"]
B_UPDATE_BOUNDS = ("paper", "full")


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 200
    rel_tol: float = 1e-6


@dataclass(frozen=True, eq=False)
class ScaledTrellis:
    """Scaled forward/backward values.

    ``alpha_hat[t]`` sums to one; the unscaled forward value is
    ``alpha_hat[t] * prod(scale[:t+1])`` and the unscaled backward value is
    ``beta_hat[t] * prod(scale[t+1:])``.

    ``log_offset`` carries per-step constants that were factored out of the
    evidence before the recursions ran (zero for the plain HMM). They scale
    every state alike, so they change the likelihood but no posterior.
    """

    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    scale: np.ndarray
    log_offset: float = 0.0

    @property
    def log_likelihood(self) -> float:
        return float(np.log(self.scale).sum()) + self.log_offset


@dataclass
class FitReport:
    final_model: HmmModel
    log_likelihood_trace: list[float] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False


def as_observations(obs, num_symbols: int | None = None) -> np.ndarray:
    arr = np.asarray(obs)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("observation sequence must be a non-empty 1-d array")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.mod(arr, 1) == 0):
            raise ValueError("observation symbols must be integers")
    arr = arr.astype(np.int64)
    if arr.min() < 0 or (num_symbols is not None and arr.max() >= num_symbols):
        raise ValueError(f"observation symbols must lie in [0, {num_symbols})")
    return arr


def sample_sequence(model: HmmModel, length: int, rng: np.random.Generator):
    """Draw ``(states, observations)`` of the given length from ``model``.

    Uses two uniforms per step and inverse-CDF lookup, so a given generator
    state always yields the same sequences.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    ns, nv = model.num_states, model.num_symbols
    cdf_pi = np.cumsum(model.pi)
    cdf_A = np.cumsum(model.A, axis=1)
    cdf_B = np.cumsum(model.B, axis=1)
    u = rng.random((length, 2))
    z = np.empty(length, dtype=np.int64)
    y = np.empty(length, dtype=np.int64)
    z[0] = min(int(np.searchsorted(cdf_pi, u[0, 0], side="right")), ns - 1)
    for t in range(1, length):
        z[t] = min(int(np.searchsorted(cdf_A[z[t - 1]], u[t, 0], side="right")), ns - 1)
    for t in range(length):
        y[t] = min(int(np.searchsorted(cdf_B[z[t]], u[t, 1], side="right")), nv - 1)
    return z, y


def emission_evidence(model: HmmModel, obs) -> np.ndarray:
    """``E[t, i] = B[i, y_t]``, shape (T, N_s)."""
    return np.ascontiguousarray(model.B[:, obs].T)


def forward_scaled(model: HmmModel, obs):
    obs = as_observations(obs, model.num_symbols)
    return _forward(model, emission_evidence(model, obs))


def backward_scaled(model: HmmModel, obs, scale) -> np.ndarray:
    obs = as_observations(obs, model.num_symbols)
    return _kernels.backward(model.A, emission_evidence(model, obs), np.asarray(scale, dtype=np.float64))


def trellis(model: HmmModel, obs) -> ScaledTrellis:
    obs = as_observations(obs, model.num_symbols)
    return _trellis_from_evidence(model, emission_evidence(model, obs))


def log_likelihood(model: HmmModel, obs) -> float:
    """``log P(Y | model)``."""
    return float(np.log(forward_scaled(model, obs)[1]).sum())


def posteriors(model: HmmModel, obs, trell: ScaledTrellis):
    """Return ``(epsilon, gamma)``.

    ``epsilon[t, i, j] = P(z_t=i, z_{t+1}=j | Y)`` for t < T-1 and
    ``gamma[t, i] = P(z_t=i | Y)``; for t < T-1 gamma is the row sum of epsilon.
    """
    obs = as_observations(obs, model.num_symbols)
    return _posteriors_from_evidence(model, emission_evidence(model, obs), trell)


def baum_welch_step(model: HmmModel, obs, b_update_bound: BUpdateBound = "full") -> HmmModel:
    """One re-estimation of ``(A, B, pi)`` from a single sequence.

    ``b_update_bound="full"`` sums the emission update over all T steps.
    ``"paper"`` stops at T-1 like the transition update; that variant is not
    an exact M-step and can lower the likelihood slightly near convergence.
    The result is floored at 1e-12 and renormalized.
    """
    validate_model(model)
    obs = as_observations(obs, model.num_symbols)
    E = emission_evidence(model, obs)
    trell = _trellis_from_evidence(model, E)
    eps, gamma = _posteriors_from_evidence(model, E, trell)
    return _reestimate(eps, gamma, obs, model.num_symbols, b_update_bound)


def baum_welch_fit(
    init: HmmModel,
    obs,
    stop: StopRule = StopRule(),
    b_update_bound: BUpdateBound = "full",
) -> FitReport:
    validate_model(init)
    obs = as_observations(obs, init.num_symbols)
    return _em_loop(init, obs, lambda m: (emission_evidence(m, obs), 0.0), stop, b_update_bound)


def viterbi(model: HmmModel, obs):
    """Most probable state path and its log joint probability ``log P(Z, Y)``."""
    validate_model(model)
    obs = as_observations(obs, model.num_symbols)
    return _viterbi_from_evidence(model, emission_evidence(model, obs))


# -- shared machinery ------------------------------------------------------


def _forward(model: HmmModel, E: np.ndarray):
    alpha, scale, bad_t = _kernels.forward(model.pi, model.A, E)
    if bad_t >= 0:
        raise DegenerateLikelihood(int(bad_t))
    return alpha, scale


def _trellis_from_evidence(model: HmmModel, E: np.ndarray, log_offset: float = 0.0) -> ScaledTrellis:
    alpha, scale = _forward(model, E)
    beta = _kernels.backward(model.A, E, scale)
    return ScaledTrellis(alpha_hat=alpha, beta_hat=beta, scale=scale, log_offset=log_offset)


def _posteriors_from_evidence(model: HmmModel, E: np.ndarray, trell: ScaledTrellis):
    eps = _kernels.pair_posteriors(model.A, E, trell.alpha_hat, trell.beta_hat, trell.scale)
    T = E.shape[0]
    gamma = np.empty((T, model.num_states))
    gamma[: T - 1] = eps.sum(axis=2)
    gamma[T - 1] = trell.alpha_hat[T - 1] * trell.beta_hat[T - 1]
    return eps, gamma


def _reestimate(eps, gamma, obs, num_symbols: int, b_update_bound: BUpdateBound) -> HmmModel:
    if b_update_bound not in B_UPDATE_BOUNDS:
        raise ValueError(f"b_update_bound must be one of {B_UPDATE_BOUNDS}")
    T = gamma.shape[0]
    trans_occ = gamma[: T - 1].sum(axis=0)
    b_gamma = gamma[: T - 1] if b_update_bound == "paper" else gamma
    b_obs = obs[: b_gamma.shape[0]]
    emit_occ = b_gamma.sum(axis=0)
    for occ in (trans_occ, emit_occ):
        zero = np.flatnonzero(occ <= 0.0)
        if zero.size:
            raise DegenerateStatistics(int(zero[0]))

    A = eps.sum(axis=0) / trans_occ[:, None]
    counts = np.zeros((gamma.shape[1], num_symbols))
    for k in range(num_symbols):
        counts[:, k] = b_gamma[b_obs == k].sum(axis=0)
    B = counts / emit_occ[:, None]
    pi = gamma[0] / gamma[0].sum()
    return floor_model(HmmModel(pi=pi, A=A, B=B))


def _em_loop(
    init: HmmModel,
    obs: np.ndarray,
    evidence: Callable[[HmmModel], tuple[np.ndarray, float]],
    stop: StopRule,
    b_update_bound: BUpdateBound,
) -> FitReport:
    """Iterate E and M steps; the trace holds the log-likelihood of every model visited.

    ``evidence(model)`` returns the evidence matrix and its log offset.
    ``trace[0]`` belongs to ``init`` and ``trace[q]`` to the model after q steps.
    Convergence means the last step improved the log-likelihood by at most
    ``rel_tol * |previous|``.
    """
    if stop.max_iters < 0:
        raise ValueError("max_iters must be non-negative")
    model = init
    E, offset = evidence(model)
    trell = _trellis_from_evidence(model, E, offset)
    report = FitReport(final_model=model, log_likelihood_trace=[trell.log_likelihood])
    while report.iterations_run < stop.max_iters:
        eps, gamma = _posteriors_from_evidence(model, E, trell)
        model = _reestimate(eps, gamma, obs, model.num_symbols, b_update_bound)
        E, offset = evidence(model)
        trell = _trellis_from_evidence(model, E, offset)
        previous = report.log_likelihood_trace[-1]
        current = trell.log_likelihood
        report.log_likelihood_trace.append(current)
        report.iterations_run += 1
        report.final_model = model
        if current - previous <= stop.rel_tol * abs(previous):
            report.converged = True
            break
    return report


def _viterbi_from_evidence(model: HmmModel, E: np.ndarray):
    with np.errstate(divide="ignore"):
        path, best, bad_t = _kernels.viterbi(np.log(model.pi), np.log(model.A), np.log(E))
    if bad_t >= 0:
        raise DegenerateLikelihood(int(bad_t), f"every path has zero probability by timestep {bad_t}")
    return path, float(best)
