"""Isolated-word keyword recognition with keyword-indexed retrieval.

Train per-keyword discrete HMMs plus a rescoring perceptron from labeled
WAV files, recognize a spoken keyword from audio, and fetch the matching
records from a file-backed keyword store. See the README for the CLI.
"""

from . import ann, audio, cli, errors, frontend, hmm, quantizer, recognizer, retrieval
from .audio import AudioBuffer, SynthSpec, read_wav, synth_word, write_wav
from .errors import IsowordError
from .frontend import FeatureMatrix, FrontendConfig, extract_features
from .hmm import DiscreteHmm, baum_welch, init_left_right, viterbi
from .quantizer import Codebook, encode, train_codebook
from .recognizer import (
    Decision,
    NBestEntry,
    WordModelSet,
    decide,
    load_model,
    recognize,
    save_model,
    train_vocabulary,
)
from .retrieval import Record, RecordStore, build_query, load_store, save_store

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "Codebook",
    "Decision",
    "DiscreteHmm",
    "FeatureMatrix",
    "FrontendConfig",
    "IsowordError",
    "NBestEntry",
    "Record",
    "RecordStore",
    "SynthSpec",
    "WordModelSet",
    "ann",
    "audio",
    "baum_welch",
    "build_query",
    "cli",
    "decide",
    "encode",
    "errors",
    "extract_features",
    "frontend",
    "hmm",
    "init_left_right",
    "load_model",
    "load_store",
    "quantizer",
    "read_wav",
    "recognize",
    "recognizer",
    "retrieval",
    "save_model",
    "save_store",
    "synth_word",
    "train_codebook",
    "train_vocabulary",
    "viterbi",
    "write_wav",
]
