"""Draw statistics and timing for the degradation and glyph-perturbation stages.

Renders a few fixture-font pages, degrades each under many seeds, and prints
the observed range of every sampled parameter next to its configured range.
With --sheet, also writes a contact sheet of clean/degraded pairs.

    python3 scripts/degradation_stats.py --n 300 --sheet sheet.png
"""
import argparse
import tempfile
import time
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
from PIL import Image

from scriptocr.degrade import DegradeRanges, apply_degradation
from scriptocr.fixtures import build_fixture_fonts, toy_sentences
from scriptocr.render import PerturbConfig, RenderConfig, contact_sheet, layout, perturb_glyphs, render_clean, shape
from scriptocr.seeding import derive_seed


def scalar_draws(draws: dict) -> dict[str, float]:
    out = {
        "rotation_deg": draws["background_rotation"]["rotation_deg"],
        "elastic_amplitude_px": draws["elastic_noise"]["amplitude_px"],
        "patches": len(draws["ink_effects"]["patches"]),
        "ink_scale": draws["ink_effects"]["ink_scale"],
        "downsample": draws["resolution_jpeg"]["downsample"],
        "jpeg_quality": draws["resolution_jpeg"]["jpeg_quality"],
        "perspective_frac": draws["perspective"]["frac"],
    }
    if draws["ink_effects"]["patches"]:
        out["max_patch_w"] = max(p[2] for p in draws["ink_effects"]["patches"])
        out["max_patch_h"] = max(p[3] for p in draws["ink_effects"]["patches"])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200, help="degraded samples to draw")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sheet", help="write a clean/degraded contact sheet PNG here")
    args = ap.parse_args()

    font_dir = Path(tempfile.mkdtemp())
    build_fixture_fonts(font_dir)
    cfg = RenderConfig()
    jobs = [("Latn", "FixLatin.ttf", "LTR"), ("Hebr", "FixHebrew.ttf", "RTL"), ("Deva", "FixDeva.ttf", "LTR")]
    pages = [render_clean(toy_sentences(s, 1, args.seed, 60, 120)[0]["text"], font_dir / f, d, cfg, args.seed)
             for s, f, d in jobs]

    seen = defaultdict(list)
    t0 = time.perf_counter()
    sheet = []
    for i in range(args.n):
        page = pages[i % len(pages)]
        out = apply_degradation(page, seed=derive_seed(args.seed, i))
        for k, v in scalar_draws(out.meta["degrade"]["draws"]).items():
            seen[k].append(v)
        if args.sheet and i < 6:
            sheet += [page.pixels, out.pixels.mean(axis=2).astype(np.uint8)]
    per = (time.perf_counter() - t0) / args.n

    r = DegradeRanges()
    print(f"{args.n} degraded samples, {per * 1000:.1f} ms each\n")
    print(f"{'parameter':<22}{'min':>9}{'max':>9}{'mean':>9}")
    for k, vs in seen.items():
        print(f"{k:<22}{min(vs):>9.3f}{max(vs):>9.3f}{np.mean(vs):>9.3f}")
    print(f"\nconfigured: {r.to_dict()}")

    pc = PerturbConfig()
    ops, gaps = Counter(), []
    for i in range(50):
        text = toy_sentences("Latn", 1, i, 80, 140)[0]["text"]
        p = perturb_glyphs(layout(shape(text, font_dir / "FixLatin.ttf", "LTR", cfg.font_px), cfg), i, pc)
        ops.update(o for line in p.ops for o in line)
        gaps += [d for line in p.spacing for d in line]
    n = sum(ops.values())
    print(f"\nglyph ops over {n} glyphs: " + ", ".join(f"{k} {v / n:.1%}" for k, v in sorted(ops.items())))
    print(f"spacing deltas: min {min(gaps)}, max {max(gaps)}, histogram {sorted(Counter(gaps).items())}")

    if args.sheet:
        Image.fromarray(contact_sheet(sheet, columns=2)).save(args.sheet)
        print(f"\ncontact sheet written to {args.sheet}")


if __name__ == "__main__":
    main()
