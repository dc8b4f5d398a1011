"""Tiny synthetic TrueType fonts and corpora for tests and demos.

Each mapped character gets a distinct box-shaped glyph, so renders are
legible enough to tell glyphs apart while staying fully deterministic.
"""

from __future__ import annotations

import json
import unicodedata
from collections.abc import Iterable
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

UPEM = 1000
ASCENT, DESCENT = 800, -200

LATIN = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:!?'-"
HEBREW = "".join(chr(c) for c in range(0x05D0, 0x05EB))
DEVANAGARI = "".join(chr(c) for c in range(0x0900, 0x0954) if unicodedata.category(chr(c)) != "Cn") + "०१२।"


def _box_glyph(cp: int, mark: bool):
    pen = TTGlyphPen(None)
    if mark:  # small box above the base, drawn left of the pen position
        pen.moveTo((-300, 650)); pen.lineTo((-300, 750)); pen.lineTo((-100, 750)); pen.lineTo((-100, 650)); pen.closePath()
        return pen.glyph(), 0
    h = 350 + (cp * 37) % 350
    w = 260 + (cp * 53) % 240
    pen.moveTo((60, 0)); pen.lineTo((60, h)); pen.lineTo((60 + w, h)); pen.lineTo((60 + w, 0)); pen.closePath()
    # an inner notch whose position depends on the code point
    ny = 40 + (cp * 11) % max(1, h - 140)
    pen.moveTo((120, ny)); pen.lineTo((60 + w - 60, ny)); pen.lineTo((60 + w - 60, ny + 50)); pen.lineTo((120, ny + 50)); pen.closePath()
    return pen.glyph(), w + 120


def _empty_glyph():
    return TTGlyphPen(None).glyph()


def build_font(
    path: str | Path,
    family: str,
    chars: Iterable[str],
    empty: Iterable[str] = (),
    space_advance: int = 300,
) -> Path:
    """Write a TTF mapping ``chars`` (plus space) to box glyphs.

    Characters listed in ``empty`` are mapped in the cmap but get an outline
    with no contours, which is what a broken font looks like at render time.
    """
    empty = set(empty)
    cps = sorted({ord(c) for c in chars} | {ord(c) for c in empty} | {0x20})
    order = [".notdef"]
    glyphs = {".notdef": None}
    metrics = {}
    cmap = {}

    pen = TTGlyphPen(None)
    pen.moveTo((50, 0)); pen.lineTo((50, 700)); pen.lineTo((450, 700)); pen.lineTo((450, 0)); pen.closePath()
    glyphs[".notdef"] = pen.glyph()
    metrics[".notdef"] = (500, 50)

    for cp in cps:
        name = f"uni{cp:04X}"
        ch = chr(cp)
        if cp == 0x20:
            glyphs[name], adv = _empty_glyph(), space_advance
        elif ch in empty:
            glyphs[name], adv = _empty_glyph(), 500
        else:
            glyphs[name], adv = _box_glyph(cp, unicodedata.category(ch) in ("Mn", "Me"))
        order.append(name)
        cmap[cp] = name
        bounds = getattr(glyphs[name], "xMin", 0) or 0
        metrics[name] = (adv, bounds)

    fb = FontBuilder(UPEM, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics({n: (adv, 0) for n, (adv, _) in metrics.items()})
    fb.setupHorizontalHeader(ascent=ASCENT, descent=DESCENT)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=ASCENT, sTypoDescender=DESCENT, usWinAscent=ASCENT, usWinDescent=-DESCENT)
    fb.setupPost()
    # fix left side bearings now that glyf bounds are known
    glyf = fb.font["glyf"]
    fb.font["hmtx"].metrics = {n: (metrics[n][0], getattr(glyf[n], "xMin", 0)) for n in order}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fb.save(str(path))
    return path


def build_fixture_fonts(directory: str | Path) -> dict[str, Path]:
    """The standard fixture set: sound fonts plus three adversarial Devanagari fonts.

    - ``latin``/``hebrew``/``deva``: sound fonts for Latn, Hebr, Deva
    - ``wrong_script``: full Devanagari cmap but declared as Latn only
    - ``pruned``: declared Deva, cmap lacks U+0950
    - ``empty_om``: declared Deva, maps U+0950 to an empty glyph
    """
    d = Path(directory)
    fonts = {
        "latin": build_font(d / "FixLatin.ttf", "Fixture Latin", LATIN),
        "hebrew": build_font(d / "FixHebrew.ttf", "Fixture Hebrew", HEBREW + LATIN[-10:]),
        "deva": build_font(d / "FixDeva.ttf", "Fixture Deva", DEVANAGARI),
        "wrong_script": build_font(d / "FixWrong.ttf", "Fixture Wrong", DEVANAGARI),
        "pruned": build_font(d / "FixPruned.ttf", "Fixture Pruned", DEVANAGARI.replace("ॐ", "")),
        "empty_om": build_font(d / "FixEmptyOm.ttf", "Fixture EmptyOm", DEVANAGARI.replace("ॐ", ""), empty="ॐ"),
    }
    return fonts


FIXTURE_METADATA = {
    "Fixture Latin": ["Latn"],
    "Fixture Hebrew": ["Hebr"],
    "Fixture Deva": ["Deva"],
    "Fixture Wrong": ["Latn"],
    "Fixture Pruned": ["Deva"],
    "Fixture EmptyOm": ["Deva"],
}


def write_metadata(path: str | Path, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(metadata or FIXTURE_METADATA, indent=1, sort_keys=True), encoding="utf-8")
    return path


_LATIN_WORDS = "the quick brown fox jumps over lazy dog while seven wizards quietly box jumbo crates".split()
_HEBREW_WORDS = ["שלום", "עולם", "ספר", "בית", "מים", "אור", "לחם", "דרך", "ילד", "כתב", "זמן", "חדש"]
_DEVA_WORDS = ["नमस", "भारत", "पानी", "घर", "किताब", "सूरज", "चाँद", "दिन", "रात", "नदी", "हवा", "पेड़"]

WORDS = {"Latn": (_LATIN_WORDS, "eng"), "Hebr": (_HEBREW_WORDS, "heb"), "Deva": (_DEVA_WORDS, "hin")}


def toy_sentences(script: str, n: int, seed: int = 0, min_chars: int = 30, max_chars: int = 60) -> list[dict]:
    """``n`` distinct pseudo-sentences for ``script`` within the length bounds."""
    import numpy as np

    words, lang = WORDS[script]
    rng = np.random.default_rng(seed)
    out, seen = [], set()
    while len(out) < n:
        text = ""
        target = int(rng.integers(min_chars, max_chars + 1))
        while len(text) < target:
            w = words[int(rng.integers(len(words)))]
            if len(text) + len(w) + 1 > max_chars:
                break
            text = f"{text} {w}" if text else w
        if len(text) < min_chars or text in seen:
            continue
        seen.add(text)
        out.append({"text": text, "script": script, "language": lang, "source": "toy"})
    return out


def write_toy_corpus(path: str | Path, scripts: Iterable[str] = ("Latn", "Hebr", "Deva"), n: int = 20, seed: int = 0) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for i, s in enumerate(scripts):
            for row in toy_sentences(s, n, seed + i):
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
