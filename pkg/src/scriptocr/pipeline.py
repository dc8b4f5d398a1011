"""End-to-end benchmark build: corpus -> fonts -> clean and degraded images.

Output tree::

    manifest.jsonl          one row per rendered sentence
    clean/<id>.png, .json   image and sidecar
    degraded/<id>.png, .json
    build_report.json       per-script counts and font-selection failures
    config.json             the resolved RunConfig
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .corpus import SentenceRecord, build_corpus, ingest, write_manifest
from .degrade import DegradeRanges, TextureSource, apply_degradation
from .fontcat import FontCatalog, FontSelectionError, index_fonts, select_font
from .render import PageImage, PerturbConfig, RenderConfig, render_clean, render_perturbed
from .seeding import derive_seed

log = logging.getLogger(__name__)


class PipelineError(Exception):
    def __init__(self, stage: str, sample_id: str, cause: Exception):
        self.stage, self.sample_id = stage, sample_id
        super().__init__(f"stage {stage!r} failed on sample {sample_id}: {type(cause).__name__}: {cause}")


def sample_seed(global_seed: int, sample_id: str, variant: str) -> int:
    """Per-sample seed; adding or removing other samples never changes it."""
    return derive_seed(global_seed, sample_id, variant)


def write_sidecar(path: Path, payload: Mapping) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def render_variant(
    rec: SentenceRecord,
    font_path: str,
    variant: str,
    seed: int,
    render_cfg: RenderConfig,
    perturb_cfg: PerturbConfig | None = None,
    ranges: DegradeRanges | None = None,
    textures: TextureSource | None = None,
) -> PageImage:
    """Clean: plain render with slight rotation. Degraded: perturbed render, then the degradation stages."""
    if variant == "clean":
        return render_clean(rec.text, font_path, rec.direction, render_cfg, seed)
    img = render_perturbed(rec.text, font_path, rec.direction, render_cfg, seed, perturb_cfg)
    return apply_degradation(img, ranges, derive_seed(seed, "degrade"), textures)


def save_sample(out_dir: Path, variant: str, rec: SentenceRecord, font_family: str, font_path: str, seed: int, img: PageImage) -> None:
    d = out_dir / variant
    d.mkdir(parents=True, exist_ok=True)
    img.save_png(d / f"{rec.id}.png")
    write_sidecar(d / f"{rec.id}.json", {
        "id": rec.id, "variant": variant, "font_family": font_family, "font_file": Path(font_path).name,
        "seed": seed, "width": img.width, "height": img.height, "params": img.meta,
    })


@dataclass
class BuildReport:
    stage_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    rendered: dict[str, int] = field(default_factory=dict)
    font_failures: dict[str, dict] = field(default_factory=dict)
    scripts_without_font: list[str] = field(default_factory=list)
    texture_source: str = "procedural"

    def to_dict(self) -> dict:
        return {
            "stage_counts": self.stage_counts,
            "rendered": dict(sorted(self.rendered.items())),
            "font_failures": dict(sorted(self.font_failures.items())),
            "scripts_without_font": sorted(self.scripts_without_font),
            "texture_source": self.texture_source,
        }


def render_corpus(
    records: Iterable[SentenceRecord],
    catalog: FontCatalog,
    out_dir: str | Path,
    config: RunConfig,
    report: BuildReport | None = None,
) -> tuple[list[SentenceRecord], dict[str, dict], BuildReport]:
    """Select a font and render every requested variant for each sentence.

    Font-selection failures are recorded per script and skipped; any other
    failure aborts with the stage name and sample id.
    """
    out_dir = Path(out_dir)
    report = report or BuildReport()
    textures = TextureSource(config.textures_dir, config.procedural_textures)
    report.texture_source = textures.kind
    failures: dict[str, Counter] = defaultdict(Counter)
    examples: dict[str, list[str]] = defaultdict(list)
    attempted: Counter = Counter()
    done, extra = [], {}
    for rec in records:
        attempted[rec.script] += 1
        try:
            font = select_font(rec, catalog, derive_seed(config.seed, rec.id, "font"))
        except FontSelectionError as exc:
            failures[rec.script][f"stage{exc.stage}:{type(exc).__name__}"] += 1
            if len(examples[rec.script]) < 3:
                examples[rec.script].append(str(exc))
            continue
        except Exception as exc:
            raise PipelineError("fonts", rec.id, exc) from exc
        for variant in config.variants:
            seed = sample_seed(config.seed, rec.id, variant)
            try:
                img = render_variant(rec, font.path, variant, seed, config.render, config.perturb, config.degrade, textures)
            except Exception as exc:
                raise PipelineError(f"render:{variant}", rec.id, exc) from exc
            save_sample(out_dir, variant, rec, font.family, font.path, seed, img)
        done.append(rec)
        extra[rec.id] = {"font_family": font.family}
    rendered = Counter(r.script for r in done)
    report.rendered = dict(rendered)
    report.font_failures = {s: {"counts": dict(c), "examples": examples[s]} for s, c in failures.items()}
    report.scripts_without_font = [s for s in attempted if not rendered[s]]
    for s in report.scripts_without_font:
        log.warning("no usable font for any %s sentence; script skipped", s)
    return done, extra, report


def run_pipeline(config: RunConfig, catalog: FontCatalog | None = None) -> BuildReport:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "config.json")
    tiers = config.tier_table()

    try:
        raw = ingest(config.corpus_path)
        records, stage_counts = build_corpus(raw, config.corpus, config.seed)
    except Exception as exc:
        raise PipelineError("corpus", "-", exc) from exc
    if catalog is None:
        try:
            catalog = index_fonts(config.fonts_dir, config.font_metadata)
        except Exception as exc:
            raise PipelineError("fonts", "-", exc) from exc

    report = BuildReport(stage_counts=stage_counts)
    done, extra, report = render_corpus(records, catalog, out, config, report)
    for rec in done:
        if rec.script in tiers:
            extra[rec.id]["tier"] = tiers[rec.script].value
    write_manifest(done, out / "manifest.jsonl", extra)
    (out / "build_report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return report
