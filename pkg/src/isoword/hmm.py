"""Discrete-observation hidden Markov models.

Implements scaled forward/backward recursions, log-space Viterbi decoding
and multi-sequence Baum-Welch re-estimation. Scaling keeps likelihoods
finite on long sequences; Viterbi works in log space with log(0) = -inf.
Left-right models restrict transitions to {self, +1, +2} and start in
state 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyTrainingSet, SymbolOutOfRange

PROB_FLOOR = 1e-6
STOCHASTIC_TOL = 1e-9
MAX_FORWARD_JUMP = 2


@dataclass(frozen=True)
class DiscreteHmm:
    """Initial distribution pi, transitions A (NxN), emissions B (NxM)."""

    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    left_right: bool = False

    @property
    def n_states(self) -> int:
        return len(self.pi)

    @property
    def n_symbols(self) -> int:
        return self.B.shape[1]

    def validate(self, tol: float = STOCHASTIC_TOL) -> None:
        """Raise ValueError if any stochastic or structural invariant fails."""
        n = self.n_states
        if self.A.shape != (n, n) or self.B.shape[0] != n:
            raise ValueError("inconsistent pi/A/B shapes")
        for name, matrix in (("pi", self.pi[None, :]), ("A", self.A), ("B", self.B)):
            if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
                raise ValueError(f"{name} has negative or non-finite entries")
            sums = matrix.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > tol):
                raise ValueError(f"{name} rows must sum to 1 within {tol}")
        if self.left_right:
            if self.pi[0] != 1.0 or np.any(self.pi[1:] != 0.0):
                raise ValueError("left-right model must start in state 0")
            if np.any(self.A[~transition_mask(n, True)] != 0.0):
                raise ValueError("left-right model has a backward or long jump")


@dataclass
class TrainTrace:
    """Per-iteration record of a Baum-Welch run."""

    log_likelihoods: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    starved_states: list[tuple[int, int]] = field(default_factory=list)


def transition_mask(n_states: int, left_right: bool) -> np.ndarray:
    """Boolean mask of transitions the topology allows."""
    if not left_right:
        return np.ones((n_states, n_states), dtype=bool)
    mask = np.zeros((n_states, n_states), dtype=bool)
    for i in range(n_states):
        mask[i, i:min(i + MAX_FORWARD_JUMP, n_states - 1) + 1] = True
    return mask


def _check_obs(hmm: DiscreteHmm, obs) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.intp)
    if obs.size == 0:
        raise ValueError("observation sequence is empty")
    if obs.min() < 0 or obs.max() >= hmm.n_symbols:
        raise SymbolOutOfRange(
            f"symbols must lie in [0, {hmm.n_symbols}), got "
            f"[{obs.min()}, {obs.max()}]"
        )
    return obs


def forward(hmm: DiscreteHmm, obs) -> tuple[float, np.ndarray, np.ndarray]:
    """Scaled forward pass.

    Returns (log_likelihood, alphas, scales) where alphas[t] is normalized
    to sum to 1 and scales[t] is the normalizer at step t, so the
    log-likelihood is sum(log(scales)). An impossible sequence returns
    (-inf, ...) with zeros from the failing step on, never a crash.
    """
    obs = _check_obs(hmm, obs)
    n_frames = len(obs)
    alphas = np.zeros((n_frames, hmm.n_states))
    scales = np.zeros(n_frames)

    alpha = hmm.pi * hmm.B[:, obs[0]]
    for t in range(n_frames):
        if t > 0:
            alpha = (alphas[t - 1] @ hmm.A) * hmm.B[:, obs[t]]
        total = alpha.sum()
        if total <= 0.0:
            return -np.inf, alphas, scales
        scales[t] = total
        alphas[t] = alpha / total
    return float(np.log(scales).sum()), alphas, scales


def backward(hmm: DiscreteHmm, obs, scales: np.ndarray) -> np.ndarray:
    """Scaled backward pass using the forward pass's scale factors.

    With this scaling, alphas[t] * betas[t] * scales[t] is the state
    posterior gamma[t], which sums to 1 at every step. Zero scales (an
    impossible sequence) yield all-zero betas as the sentinel.
    """
    obs = _check_obs(hmm, obs)
    n_frames = len(obs)
    betas = np.zeros((n_frames, hmm.n_states))
    if np.any(scales <= 0.0):
        return betas
    betas[-1] = 1.0 / scales[-1]
    for t in range(n_frames - 2, -1, -1):
        betas[t] = (hmm.A @ (hmm.B[:, obs[t + 1]] * betas[t + 1])) / scales[t]
    return betas


def viterbi(hmm: DiscreteHmm, obs) -> tuple[np.ndarray, float]:
    """Most likely state path and its joint log-score.

    Ties break toward the lower state index at every backtrack step. An
    impossible sequence returns (empty path, -inf).
    """
    obs = _check_obs(hmm, obs)
    n_frames = len(obs)
    with np.errstate(divide="ignore"):
        log_pi = np.log(hmm.pi)
        log_a = np.log(hmm.A)
        log_b = np.log(hmm.B)

    delta = log_pi + log_b[:, obs[0]]
    psi = np.zeros((n_frames, hmm.n_states), dtype=np.intp)
    for t in range(1, n_frames):
        candidates = delta[:, None] + log_a
        psi[t] = np.argmax(candidates, axis=0)
        delta = candidates[psi[t], np.arange(hmm.n_states)] + log_b[:, obs[t]]

    best_last = int(np.argmax(delta))
    score = float(delta[best_last])
    if score == -np.inf:
        return np.zeros(0, dtype=np.intp), -np.inf
    path = np.zeros(n_frames, dtype=np.intp)
    path[-1] = best_last
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = psi[t, path[t]]
    return path, score


def init_left_right(n_states: int, n_symbols: int, seed: int = 0) -> DiscreteHmm:
    """Fresh left-right model: uniform allowed transitions, jittered emissions.

    pi is one-hot on state 0; each row of A is uniform over the allowed
    {self, +1, +2} targets (truncated near the last state); B is uniform
    with a +-1% seeded jitter, renormalized, to break re-estimation symmetry.
    """
    if n_states < 1 or n_symbols < 1:
        raise ValueError("need at least one state and one symbol")
    pi = np.zeros(n_states)
    pi[0] = 1.0
    mask = transition_mask(n_states, True)
    A = np.where(mask, 1.0, 0.0)
    A /= A.sum(axis=1, keepdims=True)
    rng = np.random.default_rng(seed)
    B = (1.0 + rng.uniform(-0.01, 0.01, (n_states, n_symbols))) / n_symbols
    B /= B.sum(axis=1, keepdims=True)
    return DiscreteHmm(pi=pi, A=A, B=B, left_right=True)


def _floor_rows(rows: np.ndarray, mask: np.ndarray) -> np.ndarray:
    floored = np.where(mask, np.maximum(rows, PROB_FLOOR), 0.0)
    return floored / floored.sum(axis=1, keepdims=True)


def baum_welch(
    hmm: DiscreteHmm,
    sequences,
    max_iters: int = 30,
    tol: float = 1e-5,
) -> tuple[DiscreteHmm, TrainTrace]:
    """Multi-sequence Baum-Welch re-estimation.

    Expected counts (gamma/xi) are accumulated over all sequences in order,
    then transition and emission rows are re-estimated, floored at 1e-6
    where the topology allows, and renormalized; structural zeros of
    left-right models are preserved. Stops when the relative improvement of
    the total log-likelihood drops below `tol` or after `max_iters`
    iterations. A state with zero occupancy across all sequences keeps its
    previous rows and is flagged in the trace.
    """
    seq_list = [np.asarray(s, dtype=np.intp) for s in sequences]
    if not seq_list:
        raise EmptyTrainingSet("no training sequences")
    for i, seq in enumerate(seq_list):
        if seq.size == 0:
            raise EmptyTrainingSet(f"training sequence {i} is empty")

    n, m = hmm.n_states, hmm.n_symbols
    a_mask = transition_mask(n, hmm.left_right)
    trace = TrainTrace()
    current = hmm

    for iteration in range(max_iters):
        pi_acc = np.zeros(n)
        a_num = np.zeros((n, n))
        a_den = np.zeros(n)
        b_num = np.zeros((n, m))
        b_den = np.zeros(n)
        total_ll = 0.0

        for seq in seq_list:
            ll, alphas, scales = forward(current, seq)
            total_ll += ll
            betas = backward(current, seq, scales)
            gammas = alphas * betas * scales[:, None]
            pi_acc += gammas[0]
            b_den += gammas.sum(axis=0)
            np.add.at(b_num.T, seq, gammas)
            if len(seq) > 1:
                a_den += gammas[:-1].sum(axis=0)
                # xi[t,i,j] = alpha[t,i] * A[i,j] * B[j,o(t+1)] * beta[t+1,j];
                # summed over t it factors into one matrix product.
                emission_beta = current.B[:, seq[1:]].T * betas[1:]
                a_num += current.A * (alphas[:-1].T @ emission_beta)

        trace.log_likelihoods.append(total_ll)
        trace.iterations = iteration + 1
        if iteration > 0:
            prev = trace.log_likelihoods[-2]
            if abs(prev) > 0 and (total_ll - prev) / abs(prev) < tol:
                trace.converged = True
                break

        starved = b_den == 0.0
        for state in np.flatnonzero(starved):
            trace.starved_states.append((iteration, int(state)))

        if current.left_right:
            new_pi = current.pi
        else:
            new_pi = _floor_rows((pi_acc / len(seq_list))[None, :], np.ones((1, n), bool))[0]

        new_a = np.array(current.A)
        new_b = np.array(current.B)
        for i in range(n):
            if starved[i]:
                continue  # keep previous rows for states with no occupancy
            if a_den[i] > 0.0:
                new_a[i] = a_num[i] / a_den[i]
            new_b[i] = b_num[i] / b_den[i]
        keep = starved | (a_den == 0.0)
        new_a[~keep] = _floor_rows(new_a[~keep], a_mask[~keep])
        new_b[~starved] = _floor_rows(new_b[~starved], np.ones((int((~starved).sum()), m), bool))
        current = replace(current, pi=new_pi, A=new_a, B=new_b)

    return current, trace
