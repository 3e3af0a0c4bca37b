"""Component ablations on the bundled demo, offline.

Runs the pipeline once per switch setting with the template provider and
scores each segment's integrated narration against the hand-written
references in assets/demo/references.txt. The template engine is rule
based, so this exercises the plumbing of each variant rather than measuring
language quality; point --config at a remote provider for real numbers.

    python scripts/run_ablations.py
    python scripts/run_ablations.py --config remote.json --out ablations.json
"""

import argparse
import dataclasses
import json
from importlib import resources

from gazeinterp.backend import make_provider
from gazeinterp.config import AblationSwitches, load_config
from gazeinterp.integration import load_motions
from gazeinterp.metrics import evaluate_corpus, load_lexicon
from gazeinterp.pipeline import PipelineAborted, run_pipeline
from gazeinterp.signal import load_trace

VARIANTS = {
    "full": AblationSwitches(),
    "no_parser": AblationSwitches(symbolic_parser=False),
    "no_hierarchy": AblationSwitches(hierarchical=False),
    "no_self_correction": AblationSwitches(self_correction=False),
    "match_only": AblationSwitches(integrated_dimensions=("Match",)),
    "no_gaze_loop": AblationSwitches(gaze_dimensions=()),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="pipeline config JSON (default: offline template provider)")
    ap.add_argument("--out", help="write the per-variant summary here")
    args = ap.parse_args()

    demo = resources.files("gazeinterp").joinpath("assets", "demo")
    trace = load_trace(str(demo / "trace.csv"))
    motions = load_motions(str(demo / "motions.jsonl"))
    references = (demo / "references.txt").read_text(encoding="utf-8").splitlines()
    lexicon = load_lexicon()
    base = load_config(args.config)
    provider = make_provider(base.generation)

    summary = {}
    for name, switches in VARIANTS.items():
        config = dataclasses.replace(base, ablation=switches)
        try:
            records = run_pipeline(trace, motions, config, provider)
        except PipelineAborted as exc:
            summary[name] = {"error": str(exc)}
            print(f"{name:<20} aborted: {exc}")
            continue
        texts = [r.integrated["text"] for r in records]
        report = evaluate_corpus(texts, references[: len(texts)], lexicon)
        evals = sum(r.integrated["transcript"]["eval_calls"] for r in records)
        summary[name] = {"means": report.means, "integrated_eval_calls": evals, "texts": texts}
        m = report.means
        print(
            f"{name:<20} R1 {m['rouge1_f1']:.3f}  RL {m['rougeL_f1']:.3f}  "
            f"ActF1 {m['action_f1']:.3f}  cos {m['cosine_similarity']:.3f}  evals {evals}"
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)


if __name__ == "__main__":
    main()
