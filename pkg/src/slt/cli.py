"""``slt`` command line: preprocess, stats, train, translate, evaluate, baseline, gradcheck, synth.

Exit codes: 0 success, 1 usage error, 2 data or format error (or a failed
gradient check).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, apply_overrides, load_config
from .data import (
    ClipDataset,
    build_manifest,
    build_vocab,
    corpus_stats,
    filter_long,
    parse_srt,
    read_manifest,
    synth_corpus,
    tokenize_german,
    video_stats,
    write_manifest,
)
from .data.manifest import run_commands
from .data.stats import CORPUS_HEADER, VIDEO_HEADER, format_video_row
from .errors import SLTError
from .model import SignTranslationModel
from .rng import SplitMix64

log = logging.getLogger("slt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _write_lines(path: str, lines) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return apply_overrides(cfg, overrides) if overrides else cfg


def cmd_preprocess(args) -> int:
    raw = Path(args.srt).read_bytes()
    entries = parse_srt(raw)
    duration = int(args.duration * 1000) if args.duration is not None else max(e.end_ms for e in entries)
    records, commands, dropped = build_manifest(entries, args.video, duration, args.out_dir)
    kept, too_long = filter_long(records, args.max_tokens)
    out_dir = Path(args.out_dir)
    manifest = Path(args.manifest) if args.manifest else out_dir / "manifest.tsv"
    write_manifest(manifest, kept)
    kept_paths = {r.clip_path for r in kept}
    commands = [c for c, r in zip(commands, records) if r.clip_path in kept_paths]
    _write_lines(str(out_dir / "ffmpeg_commands.sh"), commands)
    print(f"{len(kept)} clips, {dropped} empty intervals dropped, {too_long} over {args.max_tokens} tokens")
    if args.execute:
        run_commands(commands)
    return 0


def cmd_stats(args) -> int:
    names = args.name or [Path(m).stem for m in args.manifest]
    if len(names) != len(args.manifest):
        raise UsageError("give one --name per --manifest")
    corpus_rows, video_rows = [], []
    for name, path in zip(names, args.manifest):
        records = read_manifest(path)
        corpus_rows.append(corpus_stats([r.sentence for r in records]).row(name))
        video_rows.append(format_video_row(name, video_stats([r.duration_s for r in records])))
    print("\n".join([CORPUS_HEADER, *corpus_rows, "", VIDEO_HEADER, *video_rows]))
    return 0


def _load_split(path: str, max_tokens: int):
    kept, dropped = filter_long(read_manifest(path), max_tokens)
    if dropped:
        log.info("%s: dropped %d sentences over %d tokens", path, dropped, max_tokens)
    return kept


def cmd_train(args) -> int:
    from .training import OptimConfig, perplexity, train_loop

    cfg = _run_config(args)
    if args.train_manifest:
        cfg.data.train_manifest = args.train_manifest
    if args.dev_manifest:
        cfg.data.dev_manifest = args.dev_manifest
    if not cfg.data.train_manifest:
        raise UsageError("no training manifest (set data.train_manifest or --train-manifest)")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json() + "\n")
    train_records = _load_split(cfg.data.train_manifest, cfg.data.max_tokens)
    dev_records = _load_split(cfg.data.dev_manifest or cfg.data.train_manifest, cfg.data.max_tokens)
    vocab = build_vocab(tokenize_german(r.sentence) for r in train_records)
    dims = cfg.visual.clip_dims
    train = ClipDataset.from_records(train_records, vocab, dims)
    dev = ClipDataset.from_records(dev_records, vocab, dims)
    rng = SplitMix64(cfg.seed)
    model = SignTranslationModel(cfg.visual.resnet(), cfg.visual.swm, cfg.language, len(vocab), rng)
    optim: OptimConfig = cfg.optim
    log.info("model has %d parameters, vocabulary %d", model.num_parameters(), len(vocab))
    state = train_loop(model, train, dev, vocab, optim, rng, out, extra={"clip_dims": list(dims)})
    train_ppl = perplexity(model, train, optim.batch_size)
    print(f"epochs {state.epoch}  steps {state.global_step}  best dev PPL {state.best_dev_ppl:.4f}  "
          f"final train PPL {train_ppl:.4f}")
    return 0


def cmd_translate(args) -> int:
    from .data.batching import batch_iter
    from .training import load_checkpoint

    ckpt = load_checkpoint(args.checkpoint)
    dims = tuple(ckpt.extra.get("clip_dims") or (args.frame_depth, args.height, args.width))
    records = read_manifest(args.manifest)
    data = ClipDataset.from_records(records, ckpt.vocab, dims, cache=False)
    hyps = []
    for batch in batch_iter(data, args.batch_size, shuffle=False):
        hyps += ckpt.model.translate(batch.clips, ckpt.vocab)
    _write_lines(args.out, hyps)
    print(f"wrote {len(hyps)} hypotheses to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    from .metrics import score_with_ci

    hyps, refs = _read_lines(args.hyp), _read_lines(args.ref)
    metrics = ["bleu", "chrf"] if args.metric == "both" else [args.metric]
    reports = [score_with_ci(hyps, refs, m, args.bootstrap, args.seed).report() for m in metrics]
    text = json.dumps(reports[0] if len(reports) == 1 else reports, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_baseline(args) -> int:
    from .metrics import random_walk_baseline

    records = read_manifest(args.manifest)
    tokenized = [tokenize_german(r.sentence) for r in records]
    vocab = build_vocab(tokenized)
    n = args.n if args.n is not None else len(records)
    hyps = random_walk_baseline(vocab.frequencies(), n, [len(t) for t in tokenized],
                                SplitMix64(args.seed), args.weighting)
    _write_lines(args.out, hyps)
    print(f"wrote {len(hyps)} random-walk hypotheses to {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    from .checks import model_gradcheck

    report = model_gradcheck(args.seed, args.samples, args.tol)
    print("parameter\tchecked\tmax_rel_err\tstatus")
    print("\n".join(report.lines()))
    print(f"overall max rel err {report.max_rel_err:.3e}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 2


def cmd_synth(args) -> int:
    records, manifest = synth_corpus(args.n, args.vocab_size, tuple(args.dims), SplitMix64(args.seed),
                                     args.out_dir)
    print(f"wrote {len(records)} synthetic clips and {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slt", description="End-to-end sign language translation toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("preprocess", help="SRT + video -> clip manifest and ffmpeg commands")
    s.add_argument("--srt", required=True)
    s.add_argument("--video", required=True)
    s.add_argument("--duration", type=float, help="video length in seconds (default: last subtitle end)")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--manifest", help="manifest path (default: OUT_DIR/manifest.tsv)")
    s.add_argument("--max-tokens", type=int, default=50)
    s.add_argument("--execute", action="store_true", help="run the ffmpeg commands")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("stats", help="corpus and video statistics for manifests")
    s.add_argument("--manifest", required=True, action="append")
    s.add_argument("--name", action="append")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("train", help="train the model")
    s.add_argument("--config", help="JSON run config; missing fields use the defaults")
    s.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config field")
    s.add_argument("--train-manifest")
    s.add_argument("--dev-manifest")
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir", default="run")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("translate", help="decode clips with a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--batch-size", type=int, default=10)
    s.add_argument("--frame-depth", type=int, default=100)
    s.add_argument("--height", type=int, default=224)
    s.add_argument("--width", type=int, default=224)
    s.set_defaults(func=cmd_translate)

    s = sub.add_parser("evaluate", help="BLEU / chrF2++ with bootstrap intervals")
    s.add_argument("--hyp", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--metric", choices=["bleu", "chrf", "both"], default="bleu")
    s.add_argument("--bootstrap", type=int, default=1000)
    s.add_argument("--seed", type=int, default=12345)
    s.add_argument("--out", help="also write the JSON report here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("baseline", help="random-walk hypotheses from a training manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, help="sentences to generate (default: manifest size)")
    s.add_argument("--weighting", choices=["frequency", "uniform"], default="frequency")
    s.add_argument("--seed", type=int, default=7)
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("gradcheck", help="finite-difference check of the full tiny model")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--samples", type=int, default=6, help="coordinates per parameter tensor")
    s.add_argument("--tol", type=float, default=1e-3)
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("synth", help="write a seeded synthetic corpus")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--vocab-size", type=int, default=10)
    s.add_argument("--dims", type=int, nargs=3, default=[8, 16, 16], metavar=("D", "H", "W"))
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"slt {args.command}: {exc}", file=sys.stderr)
        return 1
    except (SLTError, OSError, ValueError, KeyError) as exc:
        print(f"slt {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
