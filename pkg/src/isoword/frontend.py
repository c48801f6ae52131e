"""Signal-processing front end: audio in, per-frame feature vectors out.

Pipeline: endpoint detection -> pre-emphasis -> framing -> Hamming window ->
autocorrelation -> Levinson-Durbin linear prediction -> cepstral conversion,
plus log-energy and first-difference deltas. Every step is deterministic, so
the same buffer and config always produce a bit-identical feature matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .errors import (
    BadLength,
    EmptyInput,
    InsufficientSamples,
    LagTooLarge,
    NoSpeech,
    ZeroEnergy,
)

ENERGY_FLOOR = 1e-12       # autocorrelation r[0] at or below this is silence
LOG_ENERGY_OFFSET = 1e-10  # added inside log() so silence stays finite
REFLECTION_LIMIT = 1.0 - 1e-6
REFLECTION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class FrontendConfig:
    """Analysis parameters; defaults are conventional for 16 kHz speech."""

    pre_emphasis_alpha: float = 0.97
    frame_len_ms: int = 25
    hop_ms: int = 10
    lpc_order: int = 10
    n_cepstra: int = 12
    energy_ratio: float = 0.03
    min_speech_frames: int = 5

    def __post_init__(self):
        if not 0.0 <= self.pre_emphasis_alpha < 1.0:
            raise ValueError("pre_emphasis_alpha must be in [0, 1)")
        if not self.frame_len_ms > self.hop_ms > 0:
            raise ValueError("need frame_len_ms > hop_ms > 0")
        if self.lpc_order < 1:
            raise ValueError("lpc_order must be >= 1")
        if self.n_cepstra < 1:
            raise ValueError("n_cepstra must be >= 1")
        if self.energy_ratio <= 0:
            raise ValueError("energy_ratio must be positive")
        if self.min_speech_frames < 1:
            raise ValueError("min_speech_frames must be >= 1")

    def frame_len(self, sample_rate_hz: int) -> int:
        return int(round(sample_rate_hz * self.frame_len_ms / 1000.0))

    def hop(self, sample_rate_hz: int) -> int:
        return int(round(sample_rate_hz * self.hop_ms / 1000.0))

    @property
    def feature_dim(self) -> int:
        # cepstra + delta cepstra + log-energy + delta log-energy
        return 2 * self.n_cepstra + 2


@dataclass(frozen=True)
class FeatureMatrix:
    """T x D feature rows plus the start sample index of each frame.

    Row layout: [c1..cn, log_energy, delta_c1..delta_cn, delta_log_energy],
    so the delta block occupies columns n_cepstra+1 .. 2*n_cepstra+1.
    """

    rows: np.ndarray
    frame_times: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class LpcDiagnostics:
    """Counters for recoverable numerical events during analysis."""

    clamped_reflections: int = 0
    zero_energy_frames: int = 0


def pre_emphasize(x, alpha: float) -> np.ndarray:
    """First-order high-pass: y[0]=x[0], y[n]=x[n]-alpha*x[n-1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("cannot pre-emphasize an empty signal")
    return np.concatenate(([x[0]], x[1:] - alpha * x[:-1]))


def frame_signal(x, frame_len: int, hop: int) -> np.ndarray:
    """Slice x into overlapping frames; the trailing remainder is dropped.

    Frame i covers samples [i*hop, i*hop + frame_len); the count is
    floor((len - frame_len) / hop) + 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < frame_len:
        raise InsufficientSamples(
            f"signal of {len(x)} samples is shorter than one {frame_len}-sample frame"
        )
    view = np.lib.stride_tricks.sliding_window_view(x, frame_len)
    return view[::hop].copy()


def hamming_window(n: int) -> np.ndarray:
    """Hamming weights w[k] = 0.54 - 0.46*cos(2*pi*k/(n-1))."""
    if n < 2:
        raise BadLength("window length must be >= 2")
    return np.hamming(n)


def autocorrelation(frame, max_lag: int) -> np.ndarray:
    """r[k] = sum_n frame[n]*frame[n+k] for k = 0..max_lag."""
    frame = np.asarray(frame, dtype=np.float64)
    if max_lag >= len(frame):
        raise LagTooLarge(f"max_lag {max_lag} >= frame length {len(frame)}")
    full = np.correlate(frame, frame, mode="full")
    return full[len(frame) - 1:len(frame) + max_lag]


def levinson_durbin(r, order: int, diagnostics: LpcDiagnostics | None = None):
    """Solve the order-p Toeplitz normal equations by Levinson recursion.

    Returns (a, k, e): predictor coefficients a[1..p] such that
    x_hat[n] = sum_j a[j] * x[n-j], reflection coefficients k[1..p], and the
    final prediction error e >= 0. Reflection coefficients whose magnitude
    exceeds 1 beyond a 1e-6 tolerance are clamped to +-(1 - 1e-6) and counted
    in the diagnostics; r[0] at or below the energy floor raises ZeroEnergy.
    """
    r = np.asarray(r, dtype=np.float64)
    if len(r) < order + 1:
        raise LagTooLarge(f"need {order + 1} autocorrelation lags, got {len(r)}")
    if r[0] <= ENERGY_FLOOR:
        raise ZeroEnergy(f"r[0]={r[0]!r} at or below floor {ENERGY_FLOOR}")

    a = np.zeros(order + 1)
    a[0] = 1.0
    k_out = np.zeros(order)
    e = r[0]
    for i in range(1, order + 1):
        acc = r[i] - np.dot(a[1:i], r[i - 1:0:-1])
        k = acc / e
        if abs(k) > REFLECTION_LIMIT:
            if diagnostics is not None and abs(k) > 1.0 + REFLECTION_TOLERANCE:
                diagnostics.clamped_reflections += 1
            k = np.copysign(REFLECTION_LIMIT, k)
        k_out[i - 1] = k
        a[1:i] = a[1:i] - k * a[i - 1:0:-1]
        a[i] = k
        e *= 1.0 - k * k
    return a[1:], k_out, e


def lpc_to_cepstrum(a, n_cepstra: int) -> np.ndarray:
    """Cepstral recursion for the all-pole model defined by predictor a.

    c[m] = a[m] + sum_{k=1}^{m-1} (k/m) * c[k] * a[m-k], with a[m] = 0 for
    m beyond the prediction order.
    """
    a = np.asarray(a, dtype=np.float64)
    p = len(a)
    c = np.zeros(n_cepstra)
    for m in range(1, n_cepstra + 1):
        value = a[m - 1] if m <= p else 0.0
        for k in range(1, m):
            if m - k <= p:
                value += (k / m) * c[k - 1] * a[m - k - 1]
        c[m - 1] = value
    return c


def endpoint_detect(buffer: AudioBuffer, config: FrontendConfig) -> tuple[int, int]:
    """Locate the speech region by short-time energy thresholding.

    Returns (start_sample, end_sample): the smallest window containing every
    frame whose energy exceeds energy_ratio * peak frame energy, expanded by
    one frame on each side. Raises NoSpeech when fewer than min_speech_frames
    frames clear the threshold.
    """
    x = np.asarray(buffer.samples, dtype=np.float64)
    frame_len = config.frame_len(buffer.sample_rate_hz)
    hop = config.hop(buffer.sample_rate_hz)
    frames = frame_signal(x, frame_len, hop)
    energies = np.sum(frames * frames, axis=1)
    threshold = config.energy_ratio * energies.max()
    above = np.flatnonzero(energies > threshold)
    if len(above) < config.min_speech_frames:
        raise NoSpeech(
            f"{len(above)} frames above threshold, "
            f"need {config.min_speech_frames}"
        )
    first = max(int(above[0]) - 1, 0)
    last = min(int(above[-1]) + 1, len(energies) - 1)
    start = first * hop
    end = min(last * hop + frame_len, len(x))
    return start, end


def extract_features(
    buffer: AudioBuffer,
    config: FrontendConfig | None = None,
    diagnostics: LpcDiagnostics | None = None,
) -> FeatureMatrix:
    """Run the full analysis pipeline on one utterance.

    Frames that fall below the energy floor are replaced by the silence
    vector (zero cepstra, log-energy of the floor offset) instead of failing,
    so a valid buffer never yields NaN or Inf features.
    """
    config = config or FrontendConfig()
    start, end = endpoint_detect(buffer, config)
    x = pre_emphasize(buffer.samples[start:end], config.pre_emphasis_alpha)
    frame_len = config.frame_len(buffer.sample_rate_hz)
    hop = config.hop(buffer.sample_rate_hz)
    frames = frame_signal(x, frame_len, hop) * hamming_window(frame_len)

    n_static = config.n_cepstra + 1
    static = np.zeros((len(frames), n_static))
    for t, frame in enumerate(frames):
        r = autocorrelation(frame, config.lpc_order)
        try:
            a, _, _ = levinson_durbin(r, config.lpc_order, diagnostics)
        except ZeroEnergy:
            if diagnostics is not None:
                diagnostics.zero_energy_frames += 1
            static[t, -1] = np.log(LOG_ENERGY_OFFSET)
            continue
        static[t, :-1] = lpc_to_cepstrum(a, config.n_cepstra)
        static[t, -1] = np.log(r[0] + LOG_ENERGY_OFFSET)

    deltas = np.zeros_like(static)
    deltas[1:] = static[1:] - static[:-1]
    rows = np.hstack([static, deltas])
    frame_times = start + np.arange(len(frames)) * hop
    return FeatureMatrix(rows=rows, frame_times=frame_times)


def dump_features(features: FeatureMatrix, path) -> None:
    """Write a feature matrix as text: header line 'T D', one frame per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{features.n_frames} {features.dim}\n")
        for row in features.rows:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
