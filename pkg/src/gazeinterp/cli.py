"""Command-line entry point: ``gazeinterp {parse,run,eval,synth}``.

Exit codes: 0 success, 2 bad input or config, 3 provider/evaluation
failure, 4 internal invariant violation. Logs go to stderr; data goes to
files under ``--out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from gazeinterp.backend import Provider, make_provider
from gazeinterp.config import PipelineConfig, load_config
from gazeinterp.errors import BackendError, InputError, InvariantError
from gazeinterp.integration import load_motions
from gazeinterp.metrics import evaluate_corpus, load_lexicon
from gazeinterp.parser import parse, write_events
from gazeinterp.pipeline import PipelineRecord, run_pipeline
from gazeinterp.signal import load_trace, smooth_trace, write_trace
from gazeinterp.synthgen import EventScript, generate_trace

logger = logging.getLogger("gazeinterp")

EXIT_OK, EXIT_INPUT, EXIT_BACKEND, EXIT_INTERNAL = 0, 2, 3, 4


def _out_dir(args, config: PipelineConfig) -> Path:
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> PipelineConfig:
    config = load_config(args.config)
    if args.provider:
        config = dataclasses.replace(
            config,
            generation=dataclasses.replace(config.generation, kind=args.provider),
            embedding=dataclasses.replace(config.embedding, kind=args.provider),
        )
    return config


def cmd_parse(args) -> int:
    config = _config(args)
    trace = load_trace(args.trace, format=args.format, invalid=config.invalid_rows)
    if config.smoothing_window:
        trace = smooth_trace(trace, config.smoothing_window)
    events = parse(trace, config.parser)
    path = _out_dir(args, config) / args.name
    write_events(events, path)
    logger.info("wrote %d event(s) to %s", len(events), path)
    return EXIT_OK


def _run_one(trace_path, motions_path, out_path: Path, config: PipelineConfig, provider: Provider) -> int:
    trace = load_trace(trace_path, invalid=config.invalid_rows)
    motions = load_motions(motions_path)
    with out_path.open("w", encoding="utf-8") as fh:

        def sink(rec: PipelineRecord) -> None:
            fh.write(rec.to_json() + "\n")
            fh.flush()

        records = run_pipeline(trace, motions, config, provider, sink=sink)
    logger.info("wrote %d record(s) to %s", len(records), out_path)
    return len(records)


def _read_batch(path) -> list[dict]:
    pairs = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            pairs.append({"name": str(obj["name"]), "trace": str(obj["trace"]), "motions": str(obj["motions"])})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: line {line_no}: batch entries need name, trace and motions ({exc})") from None
    names = [p["name"] for p in pairs]
    if len(set(names)) != len(names):
        raise InputError(f"{path}: batch names must be unique")
    return pairs


def cmd_run(args) -> int:
    config = _config(args)
    out = _out_dir(args, config)
    provider = make_provider(config.generation)
    if args.batch:
        pairs = _read_batch(args.batch)
        with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
            futures = [
                pool.submit(_run_one, p["trace"], p["motions"], out / f"{p['name']}.records.jsonl", config, provider)
                for p in pairs
            ]
            for f in futures:
                f.result()
        return EXIT_OK
    if not (args.trace and args.motions):
        raise InputError("run needs TRACE and MOTIONS (or --batch)")
    _run_one(args.trace, args.motions, out / args.name, config, provider)
    return EXIT_OK


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {str(path)!r}: {exc}") from exc


def cmd_eval(args) -> int:
    config = _config(args)
    candidates, references = _read_lines(args.candidates), _read_lines(args.references)
    lexicon = load_lexicon(args.lexicon)
    provider = make_provider(config.embedding)
    report = evaluate_corpus(candidates, references, lexicon, lambda a, b: tuple(provider.embed_many([a, b])))
    path = _out_dir(args, config) / args.name
    path.write_text(report.to_json(), encoding="utf-8")
    logger.info("wrote metrics for %d pair(s) to %s", len(report.rows), path)
    return EXIT_OK


def cmd_synth(args) -> int:
    config = _config(args)
    script = EventScript.load(args.script)
    trace, truth = generate_trace(script, config.parser)
    out = _out_dir(args, config)
    write_trace(trace, out / f"{args.prefix}.{args.format}", args.format)
    write_events(truth, out / f"{args.prefix}.truth.jsonl")
    logger.info("wrote %d samples and %d planted event(s) to %s", trace.sample_count, len(truth), out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # accepted before or after the subcommand; SUPPRESS keeps the
        # subparser from clobbering values given before it
        kw = {"default": argparse.SUPPRESS} if suppress else {}
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--config", help="pipeline config JSON", **kw)
        g.add_argument("--out", help="output directory (default: config output_dir)", **kw)
        g.add_argument("--provider", choices=["template", "remote"], help="override the provider kind", **kw)
        g.add_argument("-v", "--verbose", action="count", **(kw or {"default": 0}))
        return g

    common = global_flags(suppress=True)
    ap = argparse.ArgumentParser(
        prog="gazeinterp", description=__doc__.splitlines()[0], parents=[global_flags(suppress=False)]
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="gaze trace -> events JSONL")
    p.add_argument("trace")
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--name", default="events.jsonl")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("run", parents=[common], help="trace + motions -> records JSONL")
    p.add_argument("trace", nargs="?")
    p.add_argument("motions", nargs="?")
    p.add_argument("--name", default="records.jsonl")
    p.add_argument("--batch", help="JSONL of {name, trace, motions} pairs")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", parents=[common], help="line-aligned candidates vs references -> metrics JSON")
    p.add_argument("candidates")
    p.add_argument("references")
    p.add_argument("--lexicon", help="action keyword file, one per line")
    p.add_argument("--name", default="metrics.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="event script -> synthetic trace + truth events")
    p.add_argument("script")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--prefix", default="trace")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    try:
        return args.func(args)
    except InputError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except BackendError as exc:
        logger.error("%s", exc)
        return EXIT_BACKEND
    except InvariantError as exc:
        logger.error("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
