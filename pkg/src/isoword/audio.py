"""WAV file I/O and deterministic synthetic word generation.

Only mono 16-bit PCM RIFF/WAVE files are read or written; anything else is
rejected so test fixtures stay bit-exact. The synthetic generator produces
fake "spoken" keywords as sinusoid segment sequences with per-speaker
perturbations, which makes the whole recognition pipeline testable without
recordings.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import (
    EmptyBuffer,
    NotWav,
    Truncated,
    UnknownSyntheticKeyword,
    UnsupportedFormat,
)

DEFAULT_SAMPLE_RATE = 16000
INT16_FULL_SCALE = 32768.0

# Synthetic-word construction constants.
SILENCE_PAD_MS = 100
PAD_NOISE_AMPLITUDE = 0.002     # keeps pads below the 0.005 near-silence bound
SEGMENT_NOISE_AMPLITUDE = 0.006  # conditioning noise so LPC stays well-posed
SPEAKER_TEMPO_RANGE = 0.06       # global duration scale, pairwise < 15% apart
SPEAKER_WEIGHT_RANGE = 0.04      # per-segment duration jitter before renorm
SPEAKER_FREQ_RANGE = 0.08        # per-sinusoid frequency perturbation
SPEAKER_AMP_RANGE = 0.15
RAMP_MS = 10


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal: float64 samples in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic utterance; equal specs give identical audio."""

    keyword: str
    speaker_id: int
    duration_ms: int = 600
    seed: int = 0


def read_wav(path) -> AudioBuffer:
    """Read a mono 16-bit PCM WAV file.

    int16 samples are scaled by 1/32768 into [-1, 1). Raises NotWav for a
    bad container magic, UnsupportedFormat for stereo/non-PCM/non-16-bit
    content, and Truncated when a chunk is shorter than declared.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise Truncated(f"{path}: fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < size:
                raise Truncated(
                    f"{path}: data chunk declares {size} bytes, "
                    f"only {len(body)} present"
                )
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise Truncated(f"{path}: no fmt chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat(f"{path}: audio format {audio_format}, want PCM (1)")
    if channels != 1:
        raise UnsupportedFormat(f"{path}: {channels} channels, want mono")
    if bits != 16:
        raise UnsupportedFormat(f"{path}: {bits}-bit samples, want 16")
    if payload is None:
        raise Truncated(f"{path}: no data chunk")
    if len(payload) % 2:
        raise Truncated(f"{path}: data chunk has an odd byte count")

    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / INT16_FULL_SCALE
    return AudioBuffer(samples=samples, sample_rate_hz=int(sample_rate))


def write_wav(buffer: AudioBuffer, path) -> None:
    """Write a mono 16-bit PCM WAV file; round-trip error is <= 1/32768."""
    if len(buffer.samples) == 0:
        raise EmptyBuffer("refusing to write a WAV file with zero samples")
    quantized = np.clip(
        np.round(np.asarray(buffer.samples, dtype=np.float64) * INT16_FULL_SCALE),
        -32768,
        32767,
    ).astype("<i2")
    body = quantized.tobytes()
    rate = int(buffer.sample_rate_hz)
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(body),
        b"WAVE",
        b"fmt ",
        16,
        1,              # PCM
        1,              # mono
        rate,
        rate * 2,       # byte rate
        2,              # block align
        16,             # bits per sample
        b"data",
        len(body),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


@lru_cache(maxsize=1)
def load_lexicon() -> dict[str, list[tuple[float, float, float, float]]]:
    """Load the synthetic lexicon: keyword -> [(f1, f2, weight, amp), ...]."""
    raw = json.loads(
        resources.files("isoword.data").joinpath("synth_lexicon.json").read_text("utf-8")
    )
    lexicon = {}
    for keyword, segments in raw["keywords"].items():
        if not 2 <= len(segments) <= 4:
            raise ValueError(f"lexicon entry {keyword!r} must have 2-4 segments")
        lexicon[keyword] = [tuple(float(v) for v in seg) for seg in segments]
    return lexicon


def _entropy(*values: int) -> np.random.Generator:
    # SeedSequence wants non-negative ints; fold signed values into uint64.
    return np.random.default_rng(
        np.random.SeedSequence([v & 0xFFFFFFFFFFFFFFFF for v in values])
    )


def synth_word(spec: SynthSpec) -> AudioBuffer:
    """Generate one synthetic utterance of a lexicon keyword.

    The keyword selects a fixed sequence of 2-4 segments, each the sum of two
    sinusoids at keyword-specific frequencies. The speaker id deterministically
    perturbs frequencies (up to +-8%), amplitudes (up to +-15%) and segment
    durations (up to +-15%); the seed varies phases and the noise floor
    between repetitions. 100 ms of near-silence (|x| <= 0.005) is added on
    both sides. A pure function of its spec: same spec, same samples.
    """
    lexicon = load_lexicon()
    if spec.keyword not in lexicon:
        raise UnknownSyntheticKeyword(
            f"{spec.keyword!r} is not in the synthetic lexicon"
        )
    segments = lexicon[spec.keyword]
    n_seg = len(segments)
    sr = DEFAULT_SAMPLE_RATE
    keyword_tag = zlib.crc32(spec.keyword.encode("utf-8"))

    speaker_rng = _entropy(spec.speaker_id, keyword_tag, 0x5EED)
    rep_rng = _entropy(spec.seed, spec.speaker_id, keyword_tag)

    tempo = 1.0 + speaker_rng.uniform(-SPEAKER_TEMPO_RANGE, SPEAKER_TEMPO_RANGE)
    weight_jitter = 1.0 + speaker_rng.uniform(
        -SPEAKER_WEIGHT_RANGE, SPEAKER_WEIGHT_RANGE, n_seg
    )
    # One loudness and one frequency factor per utterance: a speaker's voice
    # shifts the whole word, not each segment independently.
    freq_jitter = 1.0 + speaker_rng.uniform(-SPEAKER_FREQ_RANGE, SPEAKER_FREQ_RANGE, 2)
    amp_jitter = 1.0 + speaker_rng.uniform(-SPEAKER_AMP_RANGE, SPEAKER_AMP_RANGE)

    weights = np.array([seg[2] for seg in segments]) * weight_jitter
    weights /= weights.sum()
    n_speech = int(round(sr * spec.duration_ms * tempo / 1000.0))
    # Cumulative rounding so segment sample counts always sum to n_speech.
    bounds = np.round(np.concatenate(([0.0], np.cumsum(weights))) * n_speech).astype(int)

    n_pad = int(round(sr * SILENCE_PAD_MS / 1000.0))
    pieces = [rep_rng.uniform(-PAD_NOISE_AMPLITUDE, PAD_NOISE_AMPLITUDE, n_pad)]
    ramp_len = int(round(sr * RAMP_MS / 1000.0))
    for i, (f1, f2, _, amp) in enumerate(segments):
        n_i = int(bounds[i + 1] - bounds[i])
        t = np.arange(n_i) / sr
        phases = rep_rng.uniform(0.0, 2.0 * np.pi, 2)
        a = amp * amp_jitter
        x = a * (
            0.55 * np.sin(2.0 * np.pi * f1 * freq_jitter[0] * t + phases[0])
            + 0.45 * np.sin(2.0 * np.pi * f2 * freq_jitter[1] * t + phases[1])
        )
        edge = min(ramp_len, n_i // 4)
        if edge > 0:
            ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
            x[:edge] *= ramp
            x[-edge:] *= ramp[::-1]
        x += rep_rng.uniform(-SEGMENT_NOISE_AMPLITUDE, SEGMENT_NOISE_AMPLITUDE, n_i)
        pieces.append(x)
    pieces.append(rep_rng.uniform(-PAD_NOISE_AMPLITUDE, PAD_NOISE_AMPLITUDE, n_pad))

    samples = np.clip(np.concatenate(pieces), -1.0, 1.0)
    return AudioBuffer(samples=samples, sample_rate_hz=sr)
