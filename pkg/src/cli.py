"""Command-line interface: ink <subcommand> [flags].

Every failure prints one ``error[kind]: message`` line to stderr and exits
with 1 (usage), 2 (data) or 3 (numeric or contract).
"""

import argparse
import json
import logging
import sys
from typing import Callable, List, Optional

import numpy as np

from .classifier import Classifier, accuracy
from .cvrnn import CvrnnModel, infer_style, reconstruct, restyle, sample_text
from .diagnostics import DEFAULT_TOL, run_gradcheck_suite
from .errors import InkDataError, InkError, UsageError
from .ink import (
    compute_stats,
    corpus_report,
    from_model_space,
    labels_to_text,
    load_corpus,
    load_stats,
    parse_selector,
    render_svg,
    save_corpus,
    save_stats,
    select_sample,
    split_corpus,
    to_model_space,
)
from .models import (
    Alphabet,
    ClassifierConfig,
    Corpus,
    CvrnnConfig,
    EncodedSequence,
    InkSample,
    NormStats,
    SamplingConfig,
    TrainConfig,
)
from .storage import atomic_write_text
from .synth import generate_corpus
from .training import load_checkpoint, model_from_checkpoint, train_on_corpus

logger = logging.getLogger(__name__)

IDENTITY_STATS = NormStats((0.0, 0.0), (1.0, 1.0))


class InkArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports bad usage as a UsageError instead of exiting with 2."""

    def error(self, message):
        raise UsageError(message)


# -- shared helpers -----------------------------------------------------------

def _encode_for(model_alphabet: Alphabet, corpus: Corpus, sample: InkSample, stats: NormStats) -> EncodedSequence:
    if corpus.alphabet != model_alphabet:
        raise InkDataError(
            f"corpus alphabet '{corpus.alphabet.symbols}' does not match the model's '{model_alphabet.symbols}'",
            field="alphabet",
        )
    return to_model_space(sample, stats)


def _write_outputs(seq: EncodedSequence, alphabet: Alphabet, stats: NormStats, out: str, svg: Optional[str],
                   author: str = ""):
    sample = from_model_space(seq, stats)
    sample.author = author
    save_corpus(Corpus(alphabet, [sample]), out)
    if svg:
        atomic_write_text(svg, render_svg(sample))
    print(f"{len(sample)} strokes '{sample.text}' -> {out}" + (f", {svg}" if svg else ""))


def _load_cvrnn(path: str):
    model, ckpt = model_from_checkpoint(path, kind=CvrnnModel.kind)
    return model, ckpt.stats or IDENTITY_STATS


def _sampling_config(args) -> SamplingConfig:
    return SamplingConfig(eoc_threshold=args.eoc_threshold, max_strokes_per_char=args.max_strokes_per_char,
                          greedy=args.greedy, seed=args.seed)


def _train_config(args) -> TrainConfig:
    kwargs = dict(
        lr0=args.lr, epochs=args.epochs, batch_size=args.batch_size, checkpoint_every=args.checkpoint_every,
        max_steps=args.max_steps, validation_fraction=args.validation, seed=args.seed,
        grad_clip=None if args.no_clip else args.grad_clip,
    )
    if args.threads is not None:
        kwargs["threads"] = args.threads
    if hasattr(args, "kl_warmup"):
        kwargs.update(kl_weight=args.kl_weight, kl_warmup_steps=args.kl_warmup)
    return TrainConfig(**kwargs)


# -- subcommands --------------------------------------------------------------

def cmd_corpus_gen(args) -> int:
    """Write a synthetic corpus; --samples is split evenly over --authors."""
    if args.authors < 1 or args.samples < args.authors:
        raise UsageError("--authors must be >= 1 and --samples at least --authors")
    per_author, rest = divmod(args.samples, args.authors)
    if rest:
        logger.warning(f"{args.samples} samples do not divide over {args.authors} authors; "
                       f"writing {per_author * args.authors}")
    corpus = generate_corpus(args.alphabet, authors=args.authors, samples_per_author=per_author,
                             points_per_glyph=args.points_per_glyph, seed=args.seed, max_words=args.max_words)
    save_corpus(corpus, args.out)
    print(f"{len(corpus)} samples -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    """Print corpus counts and delta statistics as one JSON line."""
    corpus = load_corpus(args.corpus)
    report = corpus_report(corpus).to_dict()
    report["points"] = sum(len(s) for s in corpus.samples)
    if len(corpus):
        stats = compute_stats(corpus)
        report.update(delta_mean=list(stats.mean), delta_std=list(stats.std))
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_preprocess(args) -> int:
    """Split long samples and write the split corpus with its norm stats."""
    if args.max_strokes < 1:
        raise UsageError(f"--max-strokes must be >= 1, got {args.max_strokes}")
    corpus = split_corpus(load_corpus(args.corpus), args.max_strokes)
    stats = compute_stats(corpus)
    save_corpus(corpus, args.out)
    save_stats(stats, args.stats)
    print(f"{len(corpus)} samples -> {args.out}; stats -> {args.stats}")
    return 0


def _run_training(kind: str, make_config: Callable[[Alphabet], object], args) -> int:
    corpus = load_corpus(args.corpus)
    model_config = make_config(corpus.alphabet)
    stats = load_stats(args.stats) if args.stats else None
    resume = load_checkpoint(args.resume) if args.resume else None
    result = train_on_corpus(kind, corpus, model_config, _train_config(args), args.out, args.metrics, stats, resume)
    last = result.history[-1].total if result.history else float("nan")
    print(f"{kind}: {result.position.step} steps, final loss {last:.4f} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    """Train the conditional variational RNN."""
    def make_config(alphabet: Alphabet) -> CvrnnConfig:
        return CvrnnConfig(alphabet_size=len(alphabet), hidden_size=args.hidden, latent_size=args.latent,
                           gmm_size=args.gmm or args.latent, ff_size=args.ff or args.hidden)
    return _run_training(CvrnnModel.kind, make_config, args)


def cmd_train_classifier(args) -> int:
    """Train the stroke recognizer."""
    def make_config(alphabet: Alphabet) -> ClassifierConfig:
        return ClassifierConfig(alphabet_size=len(alphabet), hidden_size=args.hidden, projection_size=args.projection,
                                num_layers=args.layers, bidirectional=not args.unidirectional)
    return _run_training(Classifier.kind, make_config, args)


def cmd_sample(args, require_style: bool = False) -> int:
    """Synthesize --text, in the style of --style-ref when given."""
    if require_style and not args.style_ref:
        raise UsageError("transfer needs --style-ref file.json#index")
    model, stats = _load_cvrnn(args.model)
    initial, author = None, ""
    if args.style_ref:
        ref_corpus, ref = select_sample(args.style_ref)
        initial = infer_style(model, _encode_for(model.alphabet, ref_corpus, ref, stats), seed=args.seed)
        author = ref.author
    result = sample_text(model, args.text, initial, _sampling_config(args))
    if result.partial:
        logger.warning("Sampling hit the per-character stroke cap; output is partial")
    _write_outputs(result.sequence, model.alphabet, stats, args.out, args.svg, author)
    return 0


def _labels(args, corpus: Corpus, sample: InkSample) -> Optional[np.ndarray]:
    """Labels from a recognizer checkpoint when given, else None (use the sample's own)."""
    if not args.classifier:
        return None
    recognizer, ckpt = model_from_checkpoint(args.classifier, kind=Classifier.kind)
    seq = _encode_for(recognizer.alphabet, corpus, sample, ckpt.stats or IDENTITY_STATS)
    return recognizer.predict(seq)


def cmd_restyle(args) -> int:
    """Rewrite the content of --input in the style of --style-ref."""
    model, stats = _load_cvrnn(args.model)
    corpus, sample = select_sample(args.input)
    ref_corpus, ref = select_sample(args.style_ref)
    result = restyle(model, _encode_for(model.alphabet, corpus, sample, stats),
                     _encode_for(model.alphabet, ref_corpus, ref, stats), _sampling_config(args),
                     labels=_labels(args, corpus, sample))
    _write_outputs(result.sequence, model.alphabet, stats, args.out, args.svg, ref.author)
    return 0


def cmd_reconstruct(args) -> int:
    """Re-decode --input from its own posterior."""
    model, stats = _load_cvrnn(args.model)
    corpus, sample = select_sample(args.input)
    seq = _encode_for(model.alphabet, corpus, sample, stats)
    out = reconstruct(model, seq, _labels(args, corpus, sample), greedy=not args.sampled, seed=args.seed)
    _write_outputs(out, model.alphabet, stats, args.out, args.svg, sample.author)
    return 0


def cmd_recognize(args) -> int:
    """Predict stroke labels for one sample or a whole corpus."""
    recognizer, ckpt = model_from_checkpoint(args.model, kind=Classifier.kind)
    stats = ckpt.stats or IDENTITY_STATS
    if "#" in args.input:
        corpus, sample = select_sample(args.input)
        samples = [(parse_selector(args.input)[1], sample)]
    else:
        corpus = load_corpus(args.input)
        samples = list(enumerate(corpus.samples))
    sequences, records = [], []
    for index, sample in samples:
        if len(sample) == 0:
            continue
        seq = _encode_for(recognizer.alphabet, corpus, sample, stats)
        predicted = recognizer.predict(seq)
        text = labels_to_text(predicted, seq.eoc, seq.bow, recognizer.alphabet)
        sequences.append(seq)
        records.append({"index": index, "y": [int(k) for k in predicted], "text": text})
        print(f"#{index}: {text}")
    result = {"samples": records}
    if sequences:
        result["accuracy"] = accuracy(recognizer, sequences)
        print(f"stroke accuracy: {result['accuracy']:.4f}")
    if args.out:
        atomic_write_text(args.out, json.dumps(result, sort_keys=True, separators=(",", ":")) + "\n")
    return 0


def cmd_render(args) -> int:
    """Render one sample to SVG."""
    _, sample = select_sample(args.input)
    atomic_write_text(args.out, render_svg(sample))
    print(f"{len(sample)} points -> {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    """Run the finite-difference suite; exit 3 when any check fails."""
    results = run_gradcheck_suite(seed=args.seed, tol=args.tol, model_entries=args.entries)
    for r in results:
        print(f"{r.name:16s} max_rel_err={r.max_rel_error:.3e} {'ok' if r.passed else 'FAIL'}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"error[numeric]: gradient check failed for {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


# -- parser -------------------------------------------------------------------

def _add_training_flags(p: argparse.ArgumentParser):
    p.add_argument("--corpus", required=True, help="Corpus JSON (split with preprocess or raw)")
    p.add_argument("--stats", help="Norm stats JSON from preprocess (default: computed from the corpus)")
    p.add_argument("--out", required=True, help="Checkpoint path")
    p.add_argument("--metrics", help="JSON-lines metrics path")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.001, help="Initial learning rate")
    p.add_argument("--max-steps", type=int, help="Stop after this many optimizer steps")
    p.add_argument("--checkpoint-every", type=int, default=10, help="Epochs between checkpoints")
    p.add_argument("--validation", type=float, default=0.0, help="Held-out fraction for validation loss")
    p.add_argument("--grad-clip", type=float, default=5.0, help="Global-norm gradient clamp")
    p.add_argument("--no-clip", action="store_true", help="Disable gradient clipping")
    p.add_argument("--threads", type=int, help="Worker threads per batch (default: INK_THREADS or 1)")
    p.add_argument("--resume", help="Checkpoint to continue from")
    p.add_argument("--seed", type=int, default=0)


def _add_sampling_flags(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, help="C-VRNN checkpoint")
    p.add_argument("--out", required=True, help="Output corpus JSON holding the result")
    p.add_argument("--svg", help="Also render the result to this SVG")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--greedy", action="store_true", help="Use distribution means instead of draws")
    p.add_argument("--eoc-threshold", type=float, default=0.5)
    p.add_argument("--max-strokes-per-char", type=int, default=50)


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one subcommand per pipeline stage."""
    parser = InkArgumentParser(prog="ink", description="Digital ink synthesis, style transfer and recognition")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("corpus-gen", help="Generate a synthetic labeled corpus")
    p.add_argument("--alphabet", default="abcde", help="Glyph subset (default: abcde)")
    p.add_argument("--authors", type=int, default=4)
    p.add_argument("--samples", type=int, default=40, help="Total samples, split evenly over authors")
    p.add_argument("--points-per-glyph", type=int, default=8)
    p.add_argument("--max-words", type=int, default=1, help="Words per sample, at most (default: 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corpus_gen)

    p = sub.add_parser("stats", help="Print corpus counts and delta statistics")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("preprocess", help="Split long samples and compute norm stats")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="Split corpus JSON")
    p.add_argument("--stats", required=True, help="Norm stats JSON")
    p.add_argument("--max-strokes", type=int, default=300)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="Train the C-VRNN")
    _add_training_flags(p)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--latent", type=int, default=8)
    p.add_argument("--gmm", type=int, help="Content code size (default: --latent)")
    p.add_argument("--ff", type=int, help="Feed-forward width (default: --hidden)")
    p.add_argument("--kl-weight", type=float, default=1.0)
    p.add_argument("--kl-warmup", type=int, default=0, help="Steps of linear KL warm-up")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-classifier", help="Train the stroke recognizer")
    _add_training_flags(p)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--projection", type=int, default=16)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--unidirectional", action="store_true", help="Forward-only baseline")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("sample", help="Write text, optionally in a reference style")
    _add_sampling_flags(p)
    p.add_argument("--text", required=True)
    p.add_argument("--style-ref", help="Reference sample file.json#index")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("transfer", help="Write text in the style of a reference sample")
    _add_sampling_flags(p)
    p.add_argument("--text", required=True)
    p.add_argument("--style-ref", required=True, help="Reference sample file.json#index")
    p.set_defaults(func=lambda a: cmd_sample(a, require_style=True))

    p = sub.add_parser("restyle", help="Rewrite a sample's content in a reference style")
    _add_sampling_flags(p)
    p.add_argument("--input", required=True, help="Sample file.json#index")
    p.add_argument("--style-ref", required=True, help="Reference sample file.json#index")
    p.add_argument("--classifier", help="Recognizer checkpoint for labels (default: the sample's own)")
    p.set_defaults(func=cmd_restyle)

    p = sub.add_parser("reconstruct", help="Re-synthesize a sample from its own style and content")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="Sample file.json#index")
    p.add_argument("--classifier", help="Recognizer checkpoint for labels (default: the sample's own)")
    p.add_argument("--sampled", action="store_true", help="Draw from the posterior instead of its mean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("recognize", help="Label strokes with a recognizer")
    p.add_argument("--model", required=True, help="Recognizer checkpoint")
    p.add_argument("--input", required=True, help="Corpus JSON or file.json#index")
    p.add_argument("--out", help="Predictions JSON")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("render", help="Render a sample to SVG")
    p.add_argument("--input", required=True, help="Corpus JSON (first sample) or file.json#index")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("gradcheck", help="Finite-difference check of every op and both models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--entries", type=int, default=50, help="Sampled entries per model loss")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        elif args.quiet:
            logging.getLogger().setLevel(logging.WARNING)
        return args.func(args)
    except InkError as e:
        print(f"error[{e.kind}]: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error[data]: {e}", file=sys.stderr)
        return InkDataError.exit_code
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
