"""Command-line entry point: ``scriptocr <command>``."""

from __future__ import annotations

import glob as globlib
import json
import logging
import sys
from pathlib import Path

import click
from click.core import ParameterSource

from .config import RunConfig, load_mapping
from .corpus import Caps, CorpusConfig, SentenceRecord, build_corpus, ingest, read_manifest, write_manifest
from .degrade import DegradeRanges, TextureSource, apply_degradation
from .render import PageImage, PerturbConfig, RenderConfig

log = logging.getLogger("scriptocr")


def _pair(kind):
    def parse(ctx, param, value):
        if value is None or isinstance(value, tuple):
            return value
        parts = value.replace("x", ",").split(",")
        if len(parts) != 2:
            raise click.BadParameter("expected two comma-separated values")
        try:
            return tuple(kind(p) for p in parts)
        except ValueError as exc:
            raise click.BadParameter(str(exc)) from exc
    return parse


def _stack(*decorators):
    def apply(f):
        for d in reversed(decorators):
            f = d(f)
        return f
    return apply


render_options = _stack(
    click.option("--font-px", type=int, default=48, show_default=True, help="Font size in pixels."),
    click.option("--canvas-width", type=int, default=1000, show_default=True, help="Canvas width in pixels."),
    click.option("--padding", type=int, default=40, show_default=True, help="Padding on every side in pixels."),
    click.option("--clean-rotation", type=float, default=1.0, show_default=True,
                 help="Clean variant rotation bound, degrees (uniform in +/- bound)."),
    click.option("--line-spacing", type=float, default=1.3, show_default=True, help="Line height as a multiple of font size."),
    click.option("--spacing", callback=_pair(int), default="-2,4", show_default=True,
                 help="Per-glyph spacing perturbation range in pixels (degraded)."),
    click.option("--p-dilate", type=float, default=0.4, show_default=True, help="Per-glyph dilation probability (degraded)."),
    click.option("--p-erode", type=float, default=0.25, show_default=True,
                 help="Per-glyph erosion probability when not dilated (degraded)."),
    click.option("--morph-kernel", type=int, default=2, show_default=True, help="Square dilation/erosion kernel size."),
    click.option("--line-jitter", type=float, default=3.0, show_default=True, help="Per-line vertical jitter bound in pixels."),
    click.option("--curl", type=float, default=6.0, show_default=True,
                 help="Parabolic page-curl bound: maximum vertical displacement in pixels."),
)

degrade_options = _stack(
    click.option("--rotation", callback=_pair(float), default="-2,2", show_default=True,
                 help="Stage 1: rotation range in degrees over paper texture."),
    click.option("--elastic-kernel", type=int, default=17, show_default=True, help="Stage 2: Gaussian kernel size for the elastic field."),
    click.option("--elastic-amplitude", type=float, default=8.0, show_default=True, help="Stage 2: maximum elastic displacement in pixels."),
    click.option("--noise-sigma", type=float, default=8.0, show_default=True, help="Stage 2: Gaussian noise sigma."),
    click.option("--patches", callback=_pair(int), default="10,30", show_default=True, help="Stage 3: number of white dropout patches."),
    click.option("--patch-max", callback=_pair(int), default="40x15", show_default=True, help="Stage 3: maximum patch width x height."),
    click.option("--ink-scale", callback=_pair(float), default="0.5,0.85", show_default=True, help="Stage 3: ink intensity scale range."),
    click.option("--texture-sigma", type=float, default=10.0, show_default=True, help="Stage 3: ink texture noise sigma."),
    click.option("--downsample", callback=_pair(float), default="0.4,0.7", show_default=True,
                 help="Stage 4: downsample fraction (area down, bilinear back up)."),
    click.option("--jpeg-quality", callback=_pair(int), default="30,80", show_default=True, help="Stage 4: JPEG quality range."),
    click.option("--perspective", type=float, default=0.10, show_default=True,
                 help="Stage 5: maximum corner shift as a fraction of image size."),
    click.option("--textures", type=click.Path(file_okay=False), default=None, help="Directory of scanned paper textures."),
    click.option("--no-procedural", is_flag=True, help="Fail instead of generating paper texture when no pool is given."),
)

_RENDER_KEYS = {"font_px": "font_px", "canvas_width": "canvas_width_px", "padding": "padding_px",
                "clean_rotation": "rotation_deg", "line_spacing": "line_spacing"}
_PERTURB_KEYS = {"spacing": "spacing_px", "p_dilate": "p_dilate", "p_erode": "p_erode", "morph_kernel": "kernel_px",
                 "line_jitter": "line_jitter_px", "curl": "curl_max_px"}
_DEGRADE_KEYS = {"elastic_kernel": "elastic_kernel", "patches": "patch_count", "patch_max": "patch_max_wh",
                 "ink_scale": "ink_scale", "downsample": "downsample", "jpeg_quality": "jpeg_quality"}


def _explicit(ctx: click.Context, name: str) -> bool:
    return ctx.get_parameter_source(name) not in (ParameterSource.DEFAULT, ParameterSource.DEFAULT_MAP)


def _apply_options(ctx, kw, render: RenderConfig, perturb: PerturbConfig, ranges: DegradeRanges, only_explicit: bool):
    use = (lambda n: n in kw and (not only_explicit or _explicit(ctx, n)))
    for opt, attr in _RENDER_KEYS.items():
        if use(opt):
            setattr(render, attr, kw[opt])
    render.__post_init__()
    for opt, attr in _PERTURB_KEYS.items():
        if use(opt):
            setattr(perturb, attr, kw[opt])
    for opt, attr in _DEGRADE_KEYS.items():
        if use(opt):
            setattr(ranges, attr, kw[opt])
    if use("rotation"):
        ranges.rotation_deg = kw["rotation"]
    if use("elastic_amplitude"):
        ranges.elastic_amplitude_px = (0.0, kw["elastic_amplitude"])
    if use("noise_sigma"):
        ranges.noise_sigma = (kw["noise_sigma"],) * 2
    if use("texture_sigma"):
        ranges.texture_noise_sigma = (kw["texture_sigma"],) * 2
    if use("perspective"):
        ranges.perspective_frac = (0.0, kw["perspective"])


def _fail(exc: Exception):
    raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging (-v info, -vv debug).")
def main(verbose: int):
    """Multi-script OCR benchmark: build corpora, render clean and degraded images, evaluate models."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# -- corpus -------------------------------------------------------------------

@main.group()
def corpus():
    """Seed-text corpus commands."""


@corpus.command("build")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Seed-text JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Output manifest JSONL.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--caps", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TOML/JSON with 'default' and per-script 'scripts' caps (default: 100, Latn 4000, Cyrl/Hani/Deva/Arab 400).")
@click.option("--min-chars", type=int, default=30, show_default=True)
@click.option("--max-chars", type=int, default=100, show_default=True)
@click.option("--fallback-script", multiple=True, help="Script allowed to keep shorter (word-level) records.")
def corpus_build(in_path, out_path, seed, caps, min_chars, max_chars, fallback_script):
    """Verify scripts, drop mixed-direction text, length-filter and sample per script."""
    try:
        cfg = CorpusConfig(min_chars, max_chars, tuple(fallback_script),
                           Caps.from_mapping(load_mapping(caps)) if caps else Caps())
        records, stages = build_corpus(ingest(in_path), cfg, seed)
    except Exception as exc:
        _fail(exc)
    write_manifest(records, out_path)
    click.echo(json.dumps(stages, indent=1))


# -- fonts --------------------------------------------------------------------

@main.group()
def fonts():
    """Font catalog commands."""


@fonts.command("index")
@click.option("--dir", "font_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--meta", required=True, type=click.Path(exists=True, dir_okay=False), help="Family -> scripts (TOML/JSON).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def fonts_index(font_dir, meta, out_path):
    """Parse character maps of every TTF/OTF and attach declared scripts."""
    from .fontcat import font_stats, index_fonts
    from .tiers import default_tier_table

    try:
        catalog = index_fonts(font_dir, meta)
    except Exception as exc:
        _fail(exc)
    catalog.save(out_path)
    click.echo(f"{len(catalog.records)} fonts indexed, {len(catalog.skipped)} skipped")
    for row in font_stats(catalog, default_tier_table(catalog.by_script)):
        click.echo("{tier}: scripts={scripts} families={total} median={median} min={min} max={max}".format(**row))


# -- render / degrade -----------------------------------------------------------

@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--variant", type=click.Choice(["clean", "degraded", "both"]), default="both", show_default=True,
              help="'degraded' renders with glyph perturbations and then applies the five degradation stages.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@render_options
@degrade_options
@click.pass_context
def render(ctx, manifest, catalog, out_dir, variant, seed, **kw):
    """Render manifest sentences to PNG images with JSON sidecars."""
    from .fontcat import FontCatalog
    from .pipeline import BuildReport, render_corpus

    cfg = RunConfig(seed=seed, variants=("clean", "degraded") if variant == "both" else (variant,),
                    textures_dir=kw["textures"], procedural_textures=not kw["no_procedural"])
    try:
        _apply_options(ctx, kw, cfg.render, cfg.perturb, cfg.degrade, only_explicit=False)
        rows = read_manifest(manifest)
        records = [SentenceRecord.from_manifest(r) for r in rows]
        done, _extra, report = render_corpus(records, FontCatalog.load(catalog), out_dir, cfg, BuildReport())
    except Exception as exc:
        _fail(exc)
    Path(out_dir, "render_report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8")
    click.echo(f"rendered {len(done)}/{len(records)} sentences")


@main.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Directory of PNG images.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@degrade_options
@click.pass_context
def degrade(ctx, in_dir, out_dir, seed, **kw):
    """Apply the five-stage aged-document degradation to existing images."""
    import numpy as np
    from PIL import Image

    from .seeding import derive_seed

    ranges = DegradeRanges()
    try:
        _apply_options(ctx, kw, RenderConfig(), PerturbConfig(), ranges, only_explicit=False)
        textures = TextureSource(kw["textures"], not kw["no_procedural"])
    except Exception as exc:
        _fail(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(Path(in_dir).glob("*.png"))
    for p in paths:
        img = PageImage(np.asarray(Image.open(p)), {})
        s = derive_seed(seed, p.stem, "degrade")
        res = apply_degradation(img, ranges, s, textures)
        res.save_png(out / p.name)
        (out / f"{p.stem}.json").write_text(
            json.dumps({"id": p.stem, "seed": s, "params": res.meta}, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"degraded {len(paths)} images")


# -- eval ---------------------------------------------------------------------

@main.group(name="eval")
def eval_():
    """Model inference and reporting."""


@eval_.command("run")
@click.option("--model", "profile", required=True, type=click.Path(exists=True, dir_okay=False), help="Model profile TOML.")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--images", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory holding clean/ and/or degraded/ images.")
@click.option("--mode", type=click.Choice(["plain", "hinted"]), default="plain", show_default=True)
@click.option("--variant", type=click.Choice(["clean", "degraded", "both"]), default="clean", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--resume", is_flag=True, help="Keep existing predictions and only run missing samples.")
@click.option("--concurrency", type=click.IntRange(1), default=4, show_default=True)
@click.option("--attempts", type=click.IntRange(1), default=3, show_default=True)
@click.option("--backoff", type=float, default=2.0, show_default=True, help="Base delay in seconds, doubled per retry.")
def eval_run(profile, manifest, images, mode, variant, out_path, resume, concurrency, attempts, backoff):
    """Send every image to a model and store predictions as JSONL."""
    from .harness import ModelProfile, RetryPolicy, run_eval

    try:
        rows = read_manifest(manifest)
        prof = ModelProfile.load(profile)
        client = prof.build(rows, images)
        variants = ("clean", "degraded") if variant == "both" else (variant,)
        recs = run_eval(rows, images, client, out_path, mode, variants, concurrency, resume, prof.tag,
                        RetryPolicy(attempts, backoff))
    except Exception as exc:
        _fail(exc)
    n_err = sum(r.error is not None for r in recs)
    click.echo(f"{len(recs)} predictions, {n_err} errors -> {out_path}")


@eval_.command("report")
@click.option("--pred", required=True, multiple=True, help="Prediction JSONL path or glob (repeatable).")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tiers", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Optional script -> High/Mid/Low table (TOML/JSON).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def eval_report(pred, manifest, tiers, out_dir):
    """Score predictions and write CSV/Markdown tables."""
    from .report import generate_report
    from .tiers import default_tier_table, load_tier_table

    files = sorted({f for pattern in pred for f in (globlib.glob(pattern) or [pattern])})
    missing = [f for f in files if not Path(f).exists()]
    if missing:
        raise click.ClickException(f"prediction files not found: {', '.join(missing)}")
    try:
        rows = read_manifest(manifest)
        table = load_tier_table(load_mapping(tiers)) if tiers else default_tier_table({r["script"] for r in rows})
        rep = generate_report(files, rows, table, out_dir)
    except Exception as exc:
        _fail(exc)
    for notice in rep.notices:
        click.echo(f"note: {notice}")
    click.echo(f"{len(rep.tables)} tables -> {out_dir}")


# -- pipeline -----------------------------------------------------------------

@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="RunConfig JSON/TOML; command-line options override it.")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Seed-text JSONL.")
@click.option("--fonts", "fonts_dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--meta", "font_metadata", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Global seed [default: 0].")
@click.option("--variant", type=click.Choice(["clean", "degraded", "both"]), default=None, help="[default: both]")
@render_options
@degrade_options
@click.pass_context
def pipeline(ctx, config_path, corpus_path, fonts_dir, font_metadata, output_dir, seed, variant, **kw):
    """Build the full benchmark tree: manifest, clean/ and degraded/ images, sidecars, build report."""
    from .pipeline import run_pipeline

    try:
        cfg = RunConfig.load(config_path) if config_path else RunConfig()
        for name, value in (("corpus_path", corpus_path), ("fonts_dir", fonts_dir), ("font_metadata", font_metadata),
                            ("output_dir", output_dir), ("seed", seed)):
            if value is not None:
                setattr(cfg, name, value)
        if variant:
            cfg.variants = ("clean", "degraded") if variant == "both" else (variant,)
        if _explicit(ctx, "textures"):
            cfg.textures_dir = kw["textures"]
        if kw["no_procedural"]:
            cfg.procedural_textures = False
        _apply_options(ctx, kw, cfg.render, cfg.perturb, cfg.degrade, only_explicit=True)
        if not (cfg.corpus_path and cfg.fonts_dir and cfg.font_metadata):
            raise click.UsageError("corpus, fonts and meta paths are required (via options or --config)")
        report = run_pipeline(cfg)
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)
    click.echo(json.dumps({"rendered": report.rendered, "scripts_without_font": report.scripts_without_font}, indent=1))


if __name__ == "__main__":
    sys.exit(main())
