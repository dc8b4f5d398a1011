"""Build a toy benchmark from fixture fonts and score stub models on it.

Runs every stage end to end without network access or real fonts: fixture
fonts and a 3-script toy corpus, the render/degrade pipeline, four stub
models (truth, empty, Latin lorem, truncated), then the report tables.

    python3 scripts/toy_pipeline.py --out /tmp/toy --n 20
"""
import argparse
from pathlib import Path

from scriptocr.config import RunConfig
from scriptocr.corpus import read_manifest
from scriptocr.fixtures import FIXTURE_METADATA, build_fixture_fonts, write_metadata, write_toy_corpus
from scriptocr.harness import OracleClient, StubClient, run_eval
from scriptocr.pipeline import run_pipeline
from scriptocr.report import generate_report
from scriptocr.tiers import default_tier_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="toy_run")
    ap.add_argument("--n", type=int, default=20, help="sentences per script")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    root = Path(args.out)
    fonts = root / "fonts"
    fonts.mkdir(parents=True, exist_ok=True)
    build_fixture_fonts(fonts)
    meta = write_metadata(root / "font_meta.json", FIXTURE_METADATA)
    corpus = write_toy_corpus(root / "corpus.jsonl", n=args.n, seed=args.seed)

    cfg = RunConfig(corpus_path=str(corpus), fonts_dir=str(fonts), font_metadata=str(meta),
                    output_dir=str(root / "bench"), seed=args.seed)
    report = run_pipeline(cfg)
    print(f"rendered {report.rendered}; scripts without font: {report.scripts_without_font or 'none'}")

    bench = root / "bench"
    rows = read_manifest(bench / "manifest.jsonl")
    truth = {r["id"]: r["text"] for r in rows}
    oracle = OracleClient(rows, bench)

    def truncated(img, prompt):
        full = oracle.transcribe(img, prompt)
        return f"<text>{full[: int(len(full) * 0.9)]}</text>"

    clients = [
        oracle,
        StubClient("empty", lambda img, prompt: ""),
        StubClient("lorem", lambda img, prompt: "<text>Lorem ipsum dolor sit amet</text>"),
        StubClient("truncated", truncated),
    ]
    preds = []
    for client in clients:
        path = root / "predictions" / f"{client.name}.jsonl"
        path.parent.mkdir(exist_ok=True)
        run_eval(rows, bench, client, path, variants=cfg.variants)
        preds.append(path)
    rep = generate_report(preds, rows, default_tier_table({r["script"] for r in rows}), root / "report")
    print(f"{len(truth)} samples x {len(cfg.variants)} variants x {len(clients)} models")
    print((root / "report" / "report.md").read_text(encoding="utf-8"))
    for note in rep.notices:
        print("note:", note)


if __name__ == "__main__":
    main()
