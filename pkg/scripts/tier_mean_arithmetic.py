"""Recompute the across-tier means of the published per-tier table.

Prints each model's computed means next to the published ones and lists the
cells that miss by more than 0.05, plus the High/Mid Acc@5 averages.

    python3 scripts/tier_mean_arithmetic.py [--json out.json]
"""
import argparse
import json

from scriptocr.metrics import TierSummary, mean_across_tiers, round_half_up

# (CER, A@0, A@5) per tier High, Mid, Low, then the published Mean row; percent
TABLE = {
    "Gemini": (((0.9, 86.0, 95.3), (3.0, 66.1, 82.7), (79.0, 5.0, 7.7)), (27.7, 52.4, 61.9)),
    "dots.mocr": (((1.5, 82.5, 93.1), (6.0, 57.0, 78.1), (84.1, 5.1, 7.7)), (30.5, 48.2, 59.6)),
    "dots.ocr": (((1.6, 80.4, 91.8), (5.0, 55.4, 78.3), (82.6, 5.2, 7.7)), (29.7, 47.0, 59.3)),
    "Hunyuan": (((3.4, 56.0, 85.3), (6.3, 52.5, 73.9), (87.3, 1.7, 3.4)), (32.3, 36.8, 54.2)),
    "Qwen": (((2.0, 72.8, 89.5), (7.2, 47.6, 67.1), (89.8, 0.3, 0.8)), (33.0, 40.3, 52.4)),
    "olmOCR": (((2.0, 75.0, 90.5), (8.3, 45.3, 63.8), (90.2, 0.2, 0.3)), (33.5, 40.2, 51.5)),
    "RolmOCR": (((2.0, 72.7, 89.6), (10.0, 44.6, 61.8), (92.0, 0.1, 0.2)), (34.7, 39.1, 50.6)),
    "GPT4.1": (((2.7, 58.7, 83.2), (6.3, 45.6, 66.7), (85.9, 0.6, 1.6)), (31.7, 35.0, 50.5)),
    "LightOn": (((2.2, 75.6, 89.8), (13.0, 28.4, 51.6), (91.6, 0.2, 0.7)), (35.6, 34.7, 47.4)),
    "Nanonets": (((2.3, 70.7, 88.6), (12.2, 34.1, 51.1), (91.9, 0.1, 0.2)), (35.5, 35.0, 46.6)),
    "Paddle": (((4.6, 57.0, 79.8), (26.9, 33.9, 48.6), (91.8, 1.5, 2.0)), (41.1, 30.8, 43.5)),
    "FireRed": (((3.4, 59.2, 83.6), (19.3, 27.9, 46.5), (91.9, 0.1, 0.2)), (38.2, 29.0, 43.4)),
    "GLM": (((2.1, 70.9, 89.5), (31.1, 17.8, 29.8), (91.2, 0.0, 0.0)), (41.5, 29.5, 39.8)),
    "DeepSeek": (((5.5, 50.1, 76.2), (24.4, 22.2, 39.7), (92.0, 0.1, 0.3)), (40.6, 24.1, 38.7)),
}
COLS = ("CER", "A@0", "A@5")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--json", help="also write the comparison as JSON")
    args = ap.parse_args()

    rows, misses = [], []
    print(f"{'model':<10} " + "  ".join(f"{c:>16}" for c in COLS))
    for model, (tiers, published) in TABLE.items():
        summaries = [TierSummary(name, c, a0, a5, 0.0, 1) for name, (c, a0, a5) in zip(("High", "Mid", "Low"), tiers)]
        m = mean_across_tiers(summaries)
        got = (m.cer_macro, m.acc0_macro, m.acc5_macro)
        cells = []
        for col, g, p in zip(COLS, got, published):
            flag = "*" if abs(g - p) > 0.05 + 1e-9 else " "
            if flag == "*":
                misses.append((model, col, g, p))
            cells.append(f"{g:7.3f} ({p:5.1f}){flag}")
        print(f"{model:<10} " + "  ".join(cells))
        rows.append({"model": model, "computed": got, "published": published})

    high = sum(t[0][2] for t, _ in TABLE.values()) / len(TABLE)
    mid = sum(t[1][2] for t, _ in TABLE.values()) / len(TABLE)
    print(f"\n{len(misses)} of {3 * len(TABLE)} cells differ by more than 0.05 (marked *):")
    for model, col, g, p in misses:
        print(f"  {model} {col}: computed {g:.3f} -> {round_half_up(g, 1)}, published {p} (off by {g - p:+.3f})")
    print(f"\nmean High A@5 {high:.3f}, mean Mid A@5 {mid:.3f}, drop {high - mid:.3f} pp")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"rows": rows, "misses": misses, "high_a5": high, "mid_a5": mid}, fh, indent=1)


if __name__ == "__main__":
    main()
