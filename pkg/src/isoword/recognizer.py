"""Training and decoding of the full word-model set.

Training fits a shared codebook and feature normalization, one left-right
HMM per keyword, and one rescoring perceptron over all keywords.
Recognition runs a Viterbi fast match over every word model, keeps the
N best, rescores them with the perceptron's posteriors, and applies an
absolute rejection threshold to the combined score.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import ann, hmm, quantizer
from .audio import AudioBuffer, read_wav
from .errors import (
    CorruptModel,
    EmptyVocabulary,
    InsufficientExamples,
    IsowordError,
    VersionMismatch,
)
from .frontend import FeatureMatrix, FrontendConfig, extract_features

log = logging.getLogger(__name__)

MODEL_VERSION = 1
MIN_EXAMPLES_PER_KEYWORD = 3
MIN_DISTINCT_SPEAKERS = 2
DEFAULT_RESCORE_WEIGHT = 0.5
# Measured on the synthetic corpus: held-out keywords score about -1.5 per
# frame combined, shaped noise about -6 or lower; -3.5 splits them cleanly.
DEFAULT_REJECT_THRESHOLD = -3.5
POSTERIOR_EPSILON = 1e-12


@dataclass(frozen=True)
class TrainSettings:
    """Structural knobs for train_vocabulary."""

    codebook_size: int = 64
    hmm_states: int = 5
    pool_segments: int = 8
    bw_max_iters: int = 30
    bw_tol: float = 1e-5


@dataclass(frozen=True)
class WordModelSet:
    """Everything needed to recognize: the trained engine state."""

    vocabulary: tuple[str, ...]
    frontend_config: FrontendConfig
    normalization: quantizer.Normalization
    codebook: quantizer.Codebook
    hmms: dict[str, hmm.DiscreteHmm]
    mlp: ann.Mlp
    pool_segments: int
    rescore_weight: float
    reject_threshold: float
    seed: int
    version: int = MODEL_VERSION


@dataclass(frozen=True)
class NBestEntry:
    keyword: str
    hmm_score: float
    ann_posterior: float
    combined_score: float


@dataclass(frozen=True)
class Decision:
    """Outcome of the rejection check on an N-best list."""

    accepted: bool
    keyword: str
    combined_score: float


def _subseed(seed: int, tag: str) -> int:
    return zlib.crc32(f"{seed}/{tag}".encode("utf-8"))


def train_vocabulary(
    corpus,
    frontend_config: FrontendConfig | None = None,
    settings: TrainSettings | None = None,
    ann_config: ann.AnnTrainConfig | None = None,
    rescore_weight: float = DEFAULT_RESCORE_WEIGHT,
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD,
    seed: int = 42,
) -> WordModelSet:
    """Train a complete model set from (wav_path, keyword, speaker_id) rows.

    Requires at least 3 utterances per keyword and 2 distinct speakers
    overall. Front-end failures are re-raised with the offending file path
    prepended. Fully deterministic for a given corpus and seed.
    """
    frontend_config = frontend_config or FrontendConfig()
    settings = settings or TrainSettings()
    rows = [(str(path), str(keyword), int(speaker)) for path, keyword, speaker in corpus]
    if not rows:
        raise InsufficientExamples("training corpus is empty")

    by_keyword: dict[str, list[FeatureMatrix]] = {}
    speakers = set()
    features: list[tuple[str, FeatureMatrix]] = []
    for path, keyword, speaker in rows:
        speakers.add(speaker)
        try:
            feats = extract_features(read_wav(path), frontend_config)
        except IsowordError as exc:
            raise type(exc)(f"{path}: {exc}") from exc
        features.append((keyword, feats))
        by_keyword.setdefault(keyword, []).append(feats)

    for keyword, utterances in sorted(by_keyword.items()):
        if len(utterances) < MIN_EXAMPLES_PER_KEYWORD:
            raise InsufficientExamples(
                f"keyword {keyword!r} has {len(utterances)} utterances, "
                f"need {MIN_EXAMPLES_PER_KEYWORD}"
            )
    if len(speakers) < MIN_DISTINCT_SPEAKERS:
        raise InsufficientExamples(
            f"corpus has {len(speakers)} distinct speakers, "
            f"need {MIN_DISTINCT_SPEAKERS}"
        )

    vocabulary = tuple(sorted(by_keyword))
    all_frames = np.vstack([f.rows for _, f in features])
    normalization = quantizer.fit_normalization(all_frames)
    codebook = quantizer.train_codebook(
        normalization.apply(all_frames), settings.codebook_size, seed
    )

    hmms: dict[str, hmm.DiscreteHmm] = {}
    for keyword in vocabulary:
        sequences = [
            quantizer.encode(codebook, normalization.apply(f.rows))
            for f in by_keyword[keyword]
        ]
        init = hmm.init_left_right(
            settings.hmm_states, settings.codebook_size, _subseed(seed, keyword)
        )
        model, trace = hmm.baum_welch(
            init, sequences, max_iters=settings.bw_max_iters, tol=settings.bw_tol
        )
        hmms[keyword] = model
        log.info(
            "keyword %-8s baum-welch log-likelihood %.3f after %d iterations%s",
            keyword,
            trace.log_likelihoods[-1],
            trace.iterations,
            " (converged)" if trace.converged else "",
        )

    pooled = np.vstack(
        [
            ann.pool_utterance(normalization.apply(f.rows), settings.pool_segments)
            for _, f in features
        ]
    )
    labels = np.array([vocabulary.index(kw) for kw, _ in features])
    ann_config = ann_config or ann.AnnTrainConfig(seed=_subseed(seed, "ann"))
    mlp, history = ann.train_ann(pooled, labels, len(vocabulary), ann_config)
    log.info("rescoring net final training loss %.4f (%d epochs)",
             history[-1][0] if history else float("nan"), len(history))

    return WordModelSet(
        vocabulary=vocabulary,
        frontend_config=frontend_config,
        normalization=normalization,
        codebook=codebook,
        hmms=hmms,
        mlp=mlp,
        pool_segments=settings.pool_segments,
        rescore_weight=rescore_weight,
        reject_threshold=reject_threshold,
        seed=seed,
    )


def recognize(model_set: WordModelSet, audio: AudioBuffer, n: int = 5) -> list[NBestEntry]:
    """Score an utterance against every word model and rescore the N best.

    Per keyword the fast-match score is the Viterbi log-score divided by the
    frame count; the top n keywords are then re-ranked by
    (1 - lambda) * hmm_score + lambda * log(posterior + 1e-12). Ties break
    toward the lower vocabulary index. Pure: no state is mutated.
    """
    if not model_set.vocabulary:
        raise EmptyVocabulary("model set has no keywords")
    if n < 1:
        raise ValueError("n must be >= 1")

    feats = extract_features(audio, model_set.frontend_config)
    norm_rows = model_set.normalization.apply(feats.rows)
    symbols = quantizer.encode(model_set.codebook, norm_rows)
    n_frames = len(symbols)

    scores = []
    for idx, keyword in enumerate(model_set.vocabulary):
        _, score = hmm.viterbi(model_set.hmms[keyword], symbols)
        scores.append((score / n_frames, idx))
    scores.sort(key=lambda pair: (-pair[0], pair[1]))
    candidates = scores[: min(n, len(scores))]

    pooled = ann.pool_utterance(norm_rows, model_set.pool_segments)
    posteriors = ann.mlp_forward(model_set.mlp, pooled)

    weight = model_set.rescore_weight
    entries = []
    for hmm_score, idx in candidates:
        posterior = float(posteriors[idx])
        combined = (1.0 - weight) * hmm_score + weight * float(
            np.log(posterior + POSTERIOR_EPSILON)
        )
        entries.append((combined, idx, hmm_score, posterior))
    entries.sort(key=lambda e: (-e[0], e[1]))
    return [
        NBestEntry(
            keyword=model_set.vocabulary[idx],
            hmm_score=hmm_score,
            ann_posterior=posterior,
            combined_score=combined,
        )
        for combined, idx, hmm_score, posterior in entries
    ]


def decide(nbest: list[NBestEntry], threshold: float) -> Decision:
    """Accept the top entry iff its combined score clears the threshold."""
    if not nbest:
        raise ValueError("empty N-best list")
    top = nbest[0]
    return Decision(
        accepted=top.combined_score >= threshold,
        keyword=top.keyword,
        combined_score=top.combined_score,
    )


def _frontend_to_dict(config: FrontendConfig) -> dict:
    return {
        "pre_emphasis_alpha": config.pre_emphasis_alpha,
        "frame_len_ms": config.frame_len_ms,
        "hop_ms": config.hop_ms,
        "lpc_order": config.lpc_order,
        "n_cepstra": config.n_cepstra,
        "energy_ratio": config.energy_ratio,
        "min_speech_frames": config.min_speech_frames,
    }


def save_model(model_set: WordModelSet, path) -> None:
    """Serialize the model set as canonical JSON (sorted keys, full floats).

    Floats are written with Python's shortest round-trip representation, so
    loading reproduces every stored number exactly and identical model sets
    produce byte-identical files.
    """
    doc = {
        "version": model_set.version,
        "frontend_config": _frontend_to_dict(model_set.frontend_config),
        "normalization": {
            "mean": model_set.normalization.mean.tolist(),
            "scale": model_set.normalization.scale.tolist(),
        },
        "codebook": {
            "centroids": model_set.codebook.centroids.tolist(),
            "distortion": model_set.codebook.distortion,
        },
        "hmms": {
            keyword: {
                "pi": model.pi.tolist(),
                "A": model.A.tolist(),
                "B": model.B.tolist(),
            }
            for keyword, model in model_set.hmms.items()
        },
        "mlp": {
            "pool_segments": model_set.pool_segments,
            "w1": model_set.mlp.w1.tolist(),
            "b1": model_set.mlp.b1.tolist(),
            "w2": model_set.mlp.w2.tolist(),
            "b2": model_set.mlp.b2.tolist(),
        },
        "lambda": model_set.rescore_weight,
        "theta": model_set.reject_threshold,
        "seed": model_set.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> WordModelSet:
    """Load and fully re-validate a model file.

    Raises VersionMismatch for an unsupported format version and
    CorruptModel for parse failures or any violated invariant.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptModel(f"{path}: top-level JSON value is not an object")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise VersionMismatch(f"{path}: version {version!r}, supported {MODEL_VERSION}")

    try:
        fc = doc["frontend_config"]
        frontend_config = FrontendConfig(
            pre_emphasis_alpha=float(fc["pre_emphasis_alpha"]),
            frame_len_ms=int(fc["frame_len_ms"]),
            hop_ms=int(fc["hop_ms"]),
            lpc_order=int(fc["lpc_order"]),
            n_cepstra=int(fc["n_cepstra"]),
            energy_ratio=float(fc["energy_ratio"]),
            min_speech_frames=int(fc["min_speech_frames"]),
        )
        normalization = quantizer.Normalization(
            mean=np.array(doc["normalization"]["mean"], dtype=np.float64),
            scale=np.array(doc["normalization"]["scale"], dtype=np.float64),
        )
        codebook = quantizer.Codebook(
            centroids=np.array(doc["codebook"]["centroids"], dtype=np.float64),
            distortion=float(doc["codebook"]["distortion"]),
        )
        hmms = {}
        for keyword, payload in doc["hmms"].items():
            model = hmm.DiscreteHmm(
                pi=np.array(payload["pi"], dtype=np.float64),
                A=np.array(payload["A"], dtype=np.float64),
                B=np.array(payload["B"], dtype=np.float64),
                left_right=True,
            )
            hmms[keyword] = model
        mlp_doc = doc["mlp"]
        mlp = ann.Mlp(
            w1=np.array(mlp_doc["w1"], dtype=np.float64),
            b1=np.array(mlp_doc["b1"], dtype=np.float64),
            w2=np.array(mlp_doc["w2"], dtype=np.float64),
            b2=np.array(mlp_doc["b2"], dtype=np.float64),
        )
        model_set = WordModelSet(
            vocabulary=tuple(sorted(hmms)),
            frontend_config=frontend_config,
            normalization=normalization,
            codebook=codebook,
            hmms=hmms,
            mlp=mlp,
            pool_segments=int(mlp_doc["pool_segments"]),
            rescore_weight=float(doc["lambda"]),
            reject_threshold=float(doc["theta"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"{path}: {exc}") from exc

    try:
        _validate_model(model_set)
    except (ValueError, AssertionError) as exc:
        raise CorruptModel(f"{path}: {exc}") from exc
    return model_set


def _validate_model(model_set: WordModelSet) -> None:
    if not model_set.vocabulary:
        raise ValueError("empty vocabulary")
    dim = model_set.codebook.dim
    if model_set.normalization.mean.shape != (dim,):
        raise ValueError("normalization dim does not match codebook dim")
    if model_set.normalization.scale.shape != (dim,):
        raise ValueError("normalization scale dim does not match codebook dim")
    if not np.all(np.isfinite(model_set.codebook.centroids)):
        raise ValueError("codebook has non-finite centroids")
    if np.any(model_set.normalization.scale <= 0):
        raise ValueError("normalization scale must be positive")
    for keyword, model in model_set.hmms.items():
        model.validate()
        if model.n_symbols != model_set.codebook.size:
            raise ValueError(f"hmm {keyword!r} symbol count != codebook size")
    d_in, _, n_out = model_set.mlp.layer_sizes
    if n_out != len(model_set.vocabulary):
        raise ValueError("mlp output dim != vocabulary size")
    if d_in != model_set.pool_segments * dim:
        raise ValueError("mlp input dim != pool_segments * feature dim")
    for tensor in (model_set.mlp.w1, model_set.mlp.b1, model_set.mlp.w2, model_set.mlp.b2):
        if not np.all(np.isfinite(tensor)):
            raise ValueError("mlp has non-finite parameters")
    if not np.isfinite(model_set.rescore_weight) or not 0.0 <= model_set.rescore_weight <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
