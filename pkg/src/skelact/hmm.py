"""Discrete hidden Markov models over segment-symbol sequences.

States and symbols share one alphabet of size K. In the default
(frozen-emission) mode the emission matrix is pinned to the identity, so
each state emits exactly its own symbol, the state path is observed, and
Baum-Welch reduces to transition/initial frequency counting; the full EM
with a free emission matrix is also implemented and doubles as the
general code path that the frozen mode cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class HmmModel:
    """Initial distribution, transition matrix and emission matrix.

    Rows of ``transition`` and ``initial`` are probability vectors;
    ``emission[j, k]`` is the probability state j emits symbol k.
    ``loglik_trace`` records the total training log-likelihood per EM
    iteration when the model came from ``baum_welch``.
    """

    initial: np.ndarray
    transition: np.ndarray
    emission: np.ndarray
    loglik_trace: np.ndarray | None = None

    def __post_init__(self):
        k = self.initial.shape[0]
        if self.transition.shape != (k, k) or self.emission.shape != (k, k):
            raise DataError("inconsistent HMM shapes")

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]


def _check_sequences(sequences: list[np.ndarray], k: int) -> list[np.ndarray]:
    if not sequences:
        raise DataError("need at least one training sequence")
    checked = []
    for seq in sequences:
        arr = np.asarray(seq, dtype=np.int64)
        if arr.ndim != 1 or len(arr) == 0:
            raise DataError("sequences must be non-empty 1D symbol arrays")
        if arr.min() < 0 or arr.max() >= k:
            raise DataError(f"symbol out of range [0, {k}): "
                            f"{arr[(arr < 0) | (arr >= k)][0]}")
        checked.append(arr)
    return checked


def _scaled_forward(model_pi, model_a, model_b, seq):
    """Returns (alpha_hat, scales, loglik); loglik is -inf for sequences
    the model cannot generate."""
    t_len = len(seq)
    k = model_pi.shape[0]
    alpha = np.zeros((t_len, k))
    scales = np.zeros(t_len)
    alpha[0] = model_pi * model_b[:, seq[0]]
    scales[0] = alpha[0].sum()
    if scales[0] == 0:
        return alpha, scales, -np.inf
    alpha[0] /= scales[0]
    for t in range(1, t_len):
        alpha[t] = (alpha[t - 1] @ model_a) * model_b[:, seq[t]]
        scales[t] = alpha[t].sum()
        if scales[t] == 0:
            return alpha, scales, -np.inf
        alpha[t] /= scales[t]
    return alpha, scales, float(np.log(scales).sum())


def _scaled_backward(model_a, model_b, seq, scales):
    t_len = len(seq)
    k = model_a.shape[0]
    beta = np.zeros((t_len, k))
    beta[-1] = 1.0
    for t in range(t_len - 2, -1, -1):
        beta[t] = model_a @ (model_b[:, seq[t + 1]] * beta[t + 1])
        beta[t] /= scales[t + 1]
    return beta


def forward_log_likelihood(model: HmmModel, sequence) -> float:
    """Exact log P(sequence | model) via the scaled forward recursion."""
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.ndim != 1 or len(seq) == 0:
        raise DataError("sequence must be a non-empty 1D symbol array")
    if seq.min() < 0 or seq.max() >= model.n_states:
        raise DataError(f"symbol out of range [0, {model.n_states})")
    _, _, loglik = _scaled_forward(model.initial, model.transition,
                                   model.emission, seq)
    return loglik


def baum_welch(sequences: list, k: int, freeze_emissions: bool = True,
               epsilon: float = 1e-3, max_iters: int = 50,
               tol: float = 1e-6) -> HmmModel:
    """EM estimation of an HMM from symbol sequences.

    ``epsilon`` is added to the expected transition counts before row
    normalization so unseen transitions keep a little mass. With frozen
    emissions and epsilon = 0 the result equals plain frequency counting.
    """
    if k < 1:
        raise DataError("need at least one state")
    if epsilon < 0:
        raise DataError("epsilon must be >= 0")
    seqs = _check_sequences(sequences, k)

    pi = np.full(k, 1.0 / k)
    a = np.full((k, k), 1.0 / k)
    if freeze_emissions:
        b = np.eye(k)
    else:
        b = np.ones((k, k)) + 0.5 * np.eye(k)
        b /= b.sum(axis=1, keepdims=True)

    trace = []
    prev_ll = -np.inf
    for _ in range(max_iters):
        init_counts = np.zeros(k)
        trans_counts = np.zeros((k, k))
        emis_counts = np.zeros((k, k))
        total_ll = 0.0
        for seq in seqs:
            alpha, scales, ll = _scaled_forward(pi, a, b, seq)
            if not np.isfinite(ll):
                raise DataError("training sequence impossible under the "
                                "current model (zero forward mass)")
            total_ll += ll
            beta = _scaled_backward(a, b, seq, scales)
            gamma = alpha * beta
            gamma /= gamma.sum(axis=1, keepdims=True)
            init_counts += gamma[0]
            for t in range(len(seq) - 1):
                xi = (alpha[t][:, None] * a * b[:, seq[t + 1]][None, :]
                      * beta[t + 1][None, :])
                xi /= xi.sum()
                trans_counts += xi
            np.add.at(emis_counts.T, seq, gamma)

        trace.append(total_ll)
        if np.isfinite(prev_ll) and abs(total_ll - prev_ll) < tol:
            break
        prev_ll = total_ll

        pi = init_counts / init_counts.sum()
        smoothed = trans_counts + epsilon
        row_sums = smoothed.sum(axis=1, keepdims=True)
        nonzero = row_sums[:, 0] > 0
        a = np.where(nonzero[:, None], smoothed / np.where(row_sums > 0, row_sums, 1.0), a)
        if not freeze_emissions:
            erows = emis_counts.sum(axis=1, keepdims=True)
            occupied = erows[:, 0] > 1e-12
            b = np.where(occupied[:, None],
                         emis_counts / np.where(erows > 0, erows, 1.0), b)

    return HmmModel(initial=pi, transition=a, emission=b,
                    loglik_trace=np.asarray(trace))


def build_features(models: list[HmmModel], sequence, normalize: bool = True,
                   floor: float = -50.0) -> np.ndarray:
    """Per-class log-likelihood feature vector for one symbol sequence,
    length-normalized by default, floored to stay finite."""
    if len(models) < 2:
        raise DataError("need models for at least 2 classes")
    seq = np.asarray(sequence, dtype=np.int64)
    feats = np.empty(len(models))
    for i, model in enumerate(models):
        ll = forward_log_likelihood(model, seq)
        if normalize:
            ll = ll / len(seq)
        feats[i] = max(ll, floor)
    return feats
