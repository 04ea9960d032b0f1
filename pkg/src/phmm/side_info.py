"""HMM training when part of the hidden state sequence is revealed, possibly wrongly.

At every step the true state is revealed as a label with probability ``tau``.
A revealed label is correct with probability ``p``; otherwise it is one of the
other ``N_s - 1`` states chosen uniformly. Unrevealed steps carry the
:data:`SENTINEL` label. The label channel enters every recursion through the
weight :func:`nu`, folded into the per-step evidence before scaling, so the
normalizers absorb ``P(Y, X | model)`` and nothing underflows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hmm
from ._kernels import backward as _backward
from .hmm import BUpdateBound, FitReport, ScaledTrellis, StopRule
from .model import HmmModel, validate_model

SENTINEL = -1


@dataclass(frozen=True)
class SideInfoParams:
    """Label channel parameters: reveal probability ``tau`` and confidence ``p``.

    With a single state there is no wrong label to emit, so ``p`` is forced to 1.
    """

    tau: float
    p: float
    num_states: int

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.num_states < 1:
            raise ValueError("num_states must be positive")
        if self.num_states == 1:
            object.__setattr__(self, "p", 1.0)

    @property
    def unlabeled_weight(self) -> float:
        return 1.0 - self.tau

    @property
    def match_weight(self) -> float:
        return self.tau * self.p

    @property
    def mismatch_weight(self) -> float:
        if self.num_states == 1:
            return 0.0
        return self.tau * (1.0 - self.p) / (self.num_states - 1)


def nu(label: int, state: int, side: SideInfoParams) -> float:
    """Probability of seeing ``label`` when the true state is ``state``."""
    if label == SENTINEL:
        return side.unlabeled_weight
    if label == state:
        return side.match_weight
    return side.mismatch_weight


def nu_matrix(labels, side: SideInfoParams) -> np.ndarray:
    """``W[t, i] = nu(labels[t], i)``, shape (T, N_s)."""
    labels = np.asarray(labels)
    states = np.arange(side.num_states)
    W = np.where(labels[:, None] == states[None, :], side.match_weight, side.mismatch_weight)
    W[labels == SENTINEL] = side.unlabeled_weight
    return W


def as_labels(labels, num_states: int) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("side-information sequence must be 1-d")
    bad = (arr != SENTINEL) & ((arr < 0) | (arr >= num_states))
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        raise ValueError(f"label {arr[t]} at position {t} is not a state in [0, {num_states})")
    return arr


def _check(model: HmmModel, obs, labels, side: SideInfoParams):
    obs = hmm.as_observations(obs, model.num_symbols)
    labels = as_labels(labels, model.num_states)
    if labels.shape != obs.shape:
        raise ValueError(f"{labels.size} labels for {obs.size} observations")
    if side.num_states != model.num_states:
        raise ValueError("side-information params and model disagree on num_states")
    return obs, labels


def side_evidence(model: HmmModel, obs, labels, side: SideInfoParams) -> np.ndarray:
    """``E[t, i] = B[i, y_t] * nu(x_t, i)``."""
    return hmm.emission_evidence(model, obs) * nu_matrix(labels, side)


def _normalized_weights(labels, side: SideInfoParams):
    """``nu_matrix`` with each row divided by its largest entry, and those maxima.

    Unlabeled rows become exactly one, so the recursions see the plain
    emission evidence there. An all-zero row keeps a divisor of one so the
    forward pass still reports it as a zero-likelihood step.
    """
    W = nu_matrix(labels, side)
    m = W.max(axis=1)
    m[m == 0.0] = 1.0
    return W / m[:, None], m


def _internal_trellis(model: HmmModel, obs, Wn, m):
    E = hmm.emission_evidence(model, obs) * Wn
    return E, hmm._trellis_from_evidence(model, E, float(np.log(m).sum()))


def phmm_forward_scaled(model: HmmModel, obs, labels, side: SideInfoParams):
    """Scaled forward pass; ``sum(log(scale))`` is ``log P(Y, X | model)``."""
    obs, labels = _check(model, obs, labels, side)
    Wn, m = _normalized_weights(labels, side)
    alpha, scale = hmm._forward(model, hmm.emission_evidence(model, obs) * Wn)
    return alpha, scale * m


def phmm_backward_scaled(model: HmmModel, obs, labels, side: SideInfoParams, scale) -> np.ndarray:
    obs, labels = _check(model, obs, labels, side)
    E = side_evidence(model, obs, labels, side)
    return _backward(model.A, E, np.asarray(scale, dtype=np.float64))


def phmm_trellis(model: HmmModel, obs, labels, side: SideInfoParams) -> ScaledTrellis:
    obs, labels = _check(model, obs, labels, side)
    Wn, m = _normalized_weights(labels, side)
    _, trell = _internal_trellis(model, obs, Wn, m)
    return ScaledTrellis(alpha_hat=trell.alpha_hat, beta_hat=trell.beta_hat, scale=trell.scale * m)


def joint_log_likelihood(model: HmmModel, obs, labels, side: SideInfoParams) -> float:
    """``log P(Y, X | model)``."""
    obs, labels = _check(model, obs, labels, side)
    Wn, m = _normalized_weights(labels, side)
    return _internal_trellis(model, obs, Wn, m)[1].log_likelihood


def phmm_posteriors(model: HmmModel, obs, labels, side: SideInfoParams, trell: ScaledTrellis):
    """``(epsilon_bar, gamma_bar)`` conditioned on observations and labels."""
    obs, labels = _check(model, obs, labels, side)
    return hmm._posteriors_from_evidence(model, side_evidence(model, obs, labels, side), trell)


def phmm_em_step(
    model: HmmModel,
    obs,
    labels,
    side: SideInfoParams,
    b_update_bound: BUpdateBound = "full",
) -> HmmModel:
    validate_model(model)
    obs, labels = _check(model, obs, labels, side)
    Wn, m = _normalized_weights(labels, side)
    E, trell = _internal_trellis(model, obs, Wn, m)
    eps, gamma = hmm._posteriors_from_evidence(model, E, trell)
    return hmm._reestimate(eps, gamma, obs, model.num_symbols, b_update_bound)


class PhmmFitReport(FitReport):
    """Same fields as :class:`FitReport`; the trace holds ``log P(X, Y | model)``."""


def phmm_fit(
    init: HmmModel,
    obs,
    labels,
    side: SideInfoParams,
    stop: StopRule = StopRule(),
    b_update_bound: BUpdateBound = "full",
) -> PhmmFitReport:
    validate_model(init)
    obs, labels = _check(init, obs, labels, side)
    Wn, m = _normalized_weights(labels, side)
    offset = float(np.log(m).sum())
    report = hmm._em_loop(
        init, obs, lambda model: (hmm.emission_evidence(model, obs) * Wn, offset), stop, b_update_bound
    )
    return PhmmFitReport(**vars(report))
