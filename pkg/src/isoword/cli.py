"""Command-line interface: corpus synthesis, training, recognition, retrieval.

Exit codes are a stable scripting contract: 0 success, 2 fault, 3 word
rejected, 4 no stored information for the keyword. Every command writes its
human-readable output followed by one machine-readable JSON summary line.
Log verbosity on stderr is controlled by ISOWORD_LOG (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import recognizer, retrieval
from .audio import SynthSpec, load_lexicon, read_wav, synth_word, write_wav
from .errors import IsowordError
from .frontend import dump_features, extract_features
from .retrieval import build_query, render_result

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAULT = 2
EXIT_REJECTED = 3
EXIT_NO_MATCH = 4


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isoword",
        description="Isolated-word keyword recognition and retrieval over files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic WAV corpus + manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--keywords", nargs="+", default=None,
                   help="keywords to synthesize (default: whole lexicon)")
    p.add_argument("--speakers", type=_positive_int, required=True)
    p.add_argument("--reps", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--duration-ms", type=_positive_int, default=600)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a word-model set from a manifest")
    p.add_argument("--corpus", required=True, help="manifest.tsv path")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="recognize one WAV file")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--nbest", type=_positive_int, default=5)
    p.add_argument("--dump-features", default=None,
                   help="write the feature matrix to this text file")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("query", help="look up a keyword in a record store")
    p.add_argument("--store", required=True)
    p.add_argument("--keyword", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("ask", help="speech in, stored information out")
    p.add_argument("--model", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--nbest", type=_positive_int, default=5)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("eval", help="run recognition over a manifest and report")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--nbest", type=_positive_int, default=5)
    p.set_defaults(func=cmd_eval)

    return parser


def read_manifest(path: str) -> list[tuple[str, str, int]]:
    """Parse manifest rows `path<TAB>keyword<TAB>speaker`, resolving paths
    relative to the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise IsowordError(
                    f"{path}: line {line_no}: expected 3 tab-separated fields"
                )
            wav_path, keyword, speaker = parts
            if not keyword:
                raise IsowordError(f"{path}: line {line_no}: empty keyword")
            try:
                speaker_id = int(speaker)
            except ValueError as exc:
                raise IsowordError(
                    f"{path}: line {line_no}: speaker {speaker!r} is not an integer"
                ) from exc
            if not os.path.isabs(wav_path):
                wav_path = os.path.join(base, wav_path)
            rows.append((wav_path, keyword, speaker_id))
    return rows


def cmd_synth(args) -> int:
    keywords = args.keywords or sorted(load_lexicon())
    os.makedirs(args.out, exist_ok=True)
    manifest_lines = []
    count = 0
    for keyword in keywords:
        for speaker in range(1, args.speakers + 1):
            for rep in range(1, args.reps + 1):
                spec = SynthSpec(
                    keyword=keyword,
                    speaker_id=speaker,
                    duration_ms=args.duration_ms,
                    seed=args.seed + rep,
                )
                name = f"{keyword}_s{speaker:03d}_r{rep}.wav"
                write_wav(synth_word(spec), os.path.join(args.out, name))
                manifest_lines.append(f"{name}\t{keyword}\t{speaker}")
                count += 1
    manifest_path = os.path.join(args.out, "manifest.tsv")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest_lines) + "\n")
    print(f"wrote {count} wav files and manifest.tsv to {args.out}")
    print(json.dumps(
        {"command": "synth", "files": count, "keywords": len(keywords),
         "speakers": args.speakers, "reps": args.reps, "seed": args.seed},
        sort_keys=True,
    ))
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = read_manifest(args.corpus)
    if not corpus:
        raise IsowordError(f"{args.corpus}: manifest is empty")
    model_set = recognizer.train_vocabulary(corpus, seed=args.seed)
    recognizer.save_model(model_set, args.out)
    print(f"trained {len(model_set.vocabulary)} keyword models "
          f"from {len(corpus)} utterances -> {args.out}")
    print(json.dumps(
        {"command": "train", "keywords": len(model_set.vocabulary),
         "utterances": len(corpus), "seed": args.seed},
        sort_keys=True,
    ))
    return EXIT_OK


def _print_nbest(entries) -> None:
    print(f"{'rank':>4}  {'keyword':<12}{'hmm_score':>10}  {'ann_post':>8}  {'combined':>9}")
    for rank, entry in enumerate(entries, start=1):
        print(f"{rank:>4}  {entry.keyword:<12}{entry.hmm_score:>10.4f}  "
              f"{entry.ann_posterior:>8.4f}  {entry.combined_score:>9.4f}")


def cmd_recognize(args) -> int:
    model_set = recognizer.load_model(args.model)
    audio = read_wav(args.wav)
    if args.dump_features:
        dump_features(extract_features(audio, model_set.frontend_config),
                      args.dump_features)
    entries = recognizer.recognize(model_set, audio, n=args.nbest)
    decision = recognizer.decide(entries, model_set.reject_threshold)
    _print_nbest(entries)
    if decision.accepted:
        print(f"RESULT {decision.keyword}")
    else:
        print(f"REJECTED {decision.keyword} {decision.combined_score:.4f}")
    print(json.dumps(
        {"command": "recognize", "accepted": decision.accepted,
         "keyword": decision.keyword,
         "combined_score": round(decision.combined_score, 6)},
        sort_keys=True,
    ))
    return EXIT_OK if decision.accepted else EXIT_REJECTED


def cmd_query(args) -> int:
    store = retrieval.load_store(args.store)
    print(build_query(args.keyword))
    results = store.search(args.keyword)
    for record in results:
        presentation = render_result(record)
        print(presentation.display_text)
    if not results:
        print(f"NO MATCH for '{args.keyword}'")
    print(json.dumps(
        {"command": "query", "keyword": args.keyword, "matches": len(results)},
        sort_keys=True,
    ))
    return EXIT_OK if results else EXIT_NO_MATCH


def cmd_ask(args) -> int:
    model_set = recognizer.load_model(args.model)
    store = retrieval.load_store(args.store)
    audio = read_wav(args.wav)
    entries = recognizer.recognize(model_set, audio, n=args.nbest)
    decision = recognizer.decide(entries, model_set.reject_threshold)
    summary = {"command": "ask", "accepted": decision.accepted,
               "keyword": decision.keyword, "matches": 0}
    if not decision.accepted:
        print("ERROR: word not recognized")
        print(json.dumps(summary, sort_keys=True))
        return EXIT_REJECTED
    print(f"KEYWORD {decision.keyword}")
    print(build_query(decision.keyword))
    results = store.search(decision.keyword)
    summary["matches"] = len(results)
    if not results:
        print(f"ERROR: no information found for '{decision.keyword}'")
        print(json.dumps(summary, sort_keys=True))
        return EXIT_NO_MATCH
    for record in results:
        presentation = render_result(record)
        print(presentation.display_text)
        print(f"SPEAK: {presentation.speakable_text}")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = read_manifest(args.corpus)
    if not corpus:
        raise IsowordError(f"{args.corpus}: manifest is empty")
    model_set = recognizer.load_model(args.model)
    vocabulary = list(model_set.vocabulary)
    rejected_label = "(rejected)"
    confusion: dict[str, dict[str, int]] = {}
    correct = 0
    rejections = 0
    for wav_path, keyword, _ in corpus:
        entries = recognizer.recognize(model_set, read_wav(wav_path), n=args.nbest)
        decision = recognizer.decide(entries, model_set.reject_threshold)
        predicted = decision.keyword if decision.accepted else rejected_label
        row = confusion.setdefault(keyword, {})
        row[predicted] = row.get(predicted, 0) + 1
        if decision.accepted and decision.keyword == keyword:
            correct += 1
        if not decision.accepted:
            rejections += 1

    total = len(corpus)
    per_keyword = {}
    print(f"{'keyword':<12}{'tested':>7}{'correct':>8}{'accuracy':>9}{'rejected':>9}")
    for keyword in sorted(confusion):
        row = confusion[keyword]
        tested = sum(row.values())
        hits = row.get(keyword, 0)
        kw_rejected = row.get(rejected_label, 0)
        per_keyword[keyword] = {"tested": tested, "correct": hits,
                                "accuracy": hits / tested}
        print(f"{keyword:<12}{tested:>7}{hits:>8}{hits / tested:>8.1%}"
              f"{kw_rejected:>9}")
    accuracy = correct / total
    print(f"{'overall':<12}{total:>7}{correct:>8}{accuracy:>8.1%}{rejections:>9}")

    columns = vocabulary + [rejected_label]
    width = max(len(c) for c in columns + list(confusion)) + 2
    print("confusion (rows=true, cols=predicted):")
    print(" " * width + "".join(f"{c:>{width}}" for c in columns))
    for keyword in sorted(confusion):
        row = confusion[keyword]
        cells = "".join(f"{row.get(c, 0):>{width}}" for c in columns)
        print(f"{keyword:<{width}}" + cells)

    print(json.dumps(
        {"command": "eval", "total": total, "correct": correct,
         "overall_accuracy": accuracy, "rejections": rejections,
         "per_keyword": per_keyword, "confusion": confusion},
        sort_keys=True,
    ))
    return EXIT_OK


def configure_logging() -> None:
    level_name = os.environ.get("ISOWORD_LOG", "info").lower()
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(level_name, logging.INFO)
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FAULT if exc.code else EXIT_OK
    configure_logging()
    try:
        return args.func(args)
    except IsowordError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except OSError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_FAULT


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
