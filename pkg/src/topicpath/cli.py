"""Command-line front end: run, resume, coherence, synth and score-lexicon.

Exit codes: 0 success, 1 configuration error, 2 input/output error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .corpus import default_stopwords, read_jsonl
from .evaluate import Injection, SyntheticSpec, generate_synthetic, make_topics
from .model import TopicPathwayDetector
from .reports import coherence_csv, write_reports
from .sentiment import default_lexicon, load_lexicon, score_message
from .snapshot import SnapshotError, load_snapshot, save_snapshot

__all__ = ["main", "load_config", "ConfigError", "CONFIG_KEYS"]

logger = logging.getLogger("topicpath")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

# config section -> {key: detector parameter}
CONFIG_KEYS = {
    "batch": {"delta_t": "delta_t", "min_doc_freq": "min_doc_freq", "ngram_max": "ngram_max",
              "stopwords": "stopwords"},
    "som": {"learning_rate": "learning_rate", "lr_decay": "lr_decay",
            "spread_factor": "spread_factor", "growth_threshold": "growth_threshold",
            "epochs": "epochs", "min_crv_hits": "min_crv_hits"},
    "layer": {"tau_sim": "tau_sim", "min_spawn_size": "min_spawn_size",
              "top_terms_n": "top_terms_n", "retire_after": "retire_after"},
    "events": {"w": "w", "r_v": "r_v", "r_ps": "r_ps", "r_ns": "r_ns", "tau_e": "tau_e",
               "min_batch_fraction": "min_batch_fraction", "novel_terms_n": "novel_terms_n",
               "exclusion_n": "exclusion_n"},
    "sentiment": {"lexicon": "lexicon"},
    "run": {"seed": "random_state"},
}
_PATH_PARAMS = {"stopwords", "lexicon"}


class ConfigError(Exception):
    pass


def load_config(path) -> dict:
    """Detector parameters from a flat ``section.key = value`` file.

    Relative ``batch.stopwords`` and ``sentiment.lexicon`` paths are resolved
    against the config file's directory.
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    params = {}
    base = os.path.dirname(os.path.abspath(path))
    for section, values in doc.items():
        if section not in CONFIG_KEYS or not isinstance(values, dict):
            raise ConfigError(f"{path}: unknown section {section!r}")
        for key, value in values.items():
            if key not in CONFIG_KEYS[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            name = CONFIG_KEYS[section][key]
            if name in _PATH_PARAMS and isinstance(value, str):
                value = os.path.join(base, value)
            params[name] = value
    return params


def _build_detector(params: dict) -> TopicPathwayDetector:
    det = TopicPathwayDetector(**params)
    try:
        det._build_configs()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    return det


def _read_inputs(paths) -> list:
    stats = {"skipped": 0}
    messages = []
    for p in paths:
        messages.extend(read_jsonl(p, stats))
    if stats["skipped"]:
        logger.warning("skipped %d malformed input line(s)", stats["skipped"])
    return messages


def cmd_run(args) -> int:
    params = load_config(args.config) if args.config else {}
    if args.seed is not None:
        params["random_state"] = args.seed
    det = _build_detector(params)
    messages = _read_inputs(args.input)
    det._reset()
    det.partial_fit(messages, stop_after=args.stop_after)
    write_reports(det, args.out)
    if args.snapshot:
        save_snapshot(det, args.snapshot)
    return EXIT_OK


def cmd_resume(args) -> int:
    det = load_snapshot(args.snapshot)
    det.partial_fit(_read_inputs(args.input), stop_after=args.stop_after)
    write_reports(det, args.out)
    save_snapshot(det, args.snapshot)
    return EXIT_OK


def cmd_coherence(args) -> int:
    det = load_snapshot(args.snapshot)
    text = coherence_csv(det, n_max=args.n_max)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "coherence.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _injection(spec: str, kind: str) -> Injection:
    try:
        b, t, x = spec.split(":")
        b, t, x = int(b), int(t), float(x)
    except ValueError:
        raise ConfigError(f"--{kind} expects BATCH:TOPIC:VALUE, got {spec!r}") from None
    if kind == "burst":
        return Injection(b, t, volume=x)
    if kind == "pos-shift":
        return Injection(b, t, pos_shift=x)
    return Injection(b, t, neg_shift=x)


def cmd_synth(args) -> int:
    seed = 0 if args.seed is None else args.seed
    topics = make_topics(args.topics + len(args.arrival), base=args.per_topic)
    injections = ([_injection(s, "burst") for s in args.burst]
                  + [_injection(s, "pos-shift") for s in args.pos_shift]
                  + [_injection(s, "neg-shift") for s in args.neg_shift])
    try:
        spec = SyntheticSpec(topics[:args.topics], batches=args.batches, injections=injections,
                             arrivals=list(zip(args.arrival, topics[args.topics:])),
                             base_pos=args.base_pos, base_neg=args.base_neg, rng_seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    messages, labels = generate_synthetic(spec)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "messages.jsonl"), "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(json.dumps({"id": m.id, "timestamp": m.timestamp, "text": m.text}) + "\n")
    with open(os.path.join(args.out, "labels.jsonl"), "w", encoding="utf-8") as fh:
        for lab in labels:
            fh.write(json.dumps(lab, sort_keys=True) + "\n")
    # sentiment words are appended to every topic, so keep them out of the features
    with open(os.path.join(args.out, "stopwords.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(sorted(default_stopwords() | spec.sentiment_terms())) + "\n")
    with open(os.path.join(args.out, "run.toml"), "w", encoding="utf-8") as fh:
        fh.write(f'batch.stopwords = "stopwords.txt"\nbatch.delta_t = {spec.delta_t}\nrun.seed = {seed}\n')
    logger.info("wrote %d messages to %s", len(messages), args.out)
    return EXIT_OK


def cmd_score_lexicon(args) -> int:
    lexicon = load_lexicon(args.lexicon) if args.lexicon else default_lexicon()
    texts = args.text or [line.rstrip("\n") for line in sys.stdin]
    for text in texts:
        s = score_message(text, lexicon)
        print(f"{s.pos}\t{s.neg}\t{text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topicpath",
                                     description="Topic pathways and events in short-text streams.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per batch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="process a message stream from scratch")
    p.add_argument("--input", action="append", required=True, help="JSON-lines messages (repeatable)")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--config", help="flat section.key = value configuration file")
    p.add_argument("--seed", type=int, help="overrides run.seed")
    p.add_argument("--snapshot", help="save the final state here")
    p.add_argument("--stop-after", type=int, help="last batch index to process")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue from a snapshot and update it")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stop-after", type=int)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("coherence", help="coherence curves from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", help="directory for coherence.csv (default: stdout)")
    p.add_argument("--n-max", type=int, default=100)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("synth", help="write a synthetic stream with ground-truth labels")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--topics", type=int, default=5)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--per-topic", type=int, default=40, help="messages per topic per batch")
    p.add_argument("--arrival", type=int, action="append", default=[],
                   help="batch at which an extra topic appears (repeatable)")
    p.add_argument("--burst", action="append", default=[], metavar="B:T:MULT")
    p.add_argument("--pos-shift", action="append", default=[], metavar="B:T:SHIFT")
    p.add_argument("--neg-shift", action="append", default=[], metavar="B:T:SHIFT")
    p.add_argument("--base-pos", type=float, default=1.0)
    p.add_argument("--base-neg", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score-lexicon", help="print positive/negative strength of texts")
    p.add_argument("text", nargs="*", help="texts to score (default: one per stdin line)")
    p.add_argument("--lexicon", help="term<TAB>category<TAB>value file")
    p.set_defaults(func=cmd_score_lexicon)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reports bad usage with status 2, which is reserved for I/O errors here
        return EXIT_CONFIG if exc.code == 2 else (exc.code or EXIT_OK)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SnapshotError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
