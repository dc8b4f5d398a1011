"""Font indexing and per-sentence font selection.

Selection narrows the catalog in three filters (declared script, full
codepoint coverage, clean rendering) and picks uniformly among survivors.
"""

from __future__ import annotations

import json
import logging
import statistics
from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import SentenceRecord
from .render import render_problems
from .sfnt import FontParseError, read_font
from .tiers import TIER_ORDER, ResourceTier

log = logging.getLogger(__name__)

FONT_SUFFIXES = (".ttf", ".otf")

RenderCheck = Callable[[str, str, str], list]


class FontIndexError(Exception):
    pass


class FontSelectionError(Exception):
    stage = 0

    def __init__(self, sentence_id: str, script: str, detail: str = ""):
        self.sentence_id, self.script = sentence_id, script
        super().__init__(f"{self.__class__.__name__} (stage {self.stage}) for {sentence_id} [{script}] {detail}".rstrip())


class NoDeclaredFont(FontSelectionError):
    stage = 1


class NoCoveringFont(FontSelectionError):
    stage = 2


class NoRenderingFont(FontSelectionError):
    stage = 3


@dataclass(frozen=True)
class FontRecord:
    path: str
    family: str
    declared_scripts: frozenset[str]
    coverage: frozenset[int]

    def covers(self, text: str) -> bool:
        return all(ord(ch) in self.coverage for ch in text)

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "family": self.family,
            "declared_scripts": sorted(self.declared_scripts),
            "coverage": _to_ranges(self.coverage),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "FontRecord":
        cov = frozenset(c for lo, hi in obj["coverage"] for c in range(lo, hi + 1))
        return cls(obj["path"], obj["family"], frozenset(obj["declared_scripts"]), cov)


def _to_ranges(codepoints: Iterable[int]) -> list[list[int]]:
    ranges: list[list[int]] = []
    for c in sorted(codepoints):
        if ranges and ranges[-1][1] == c - 1:
            ranges[-1][1] = c
        else:
            ranges.append([c, c])
    return ranges


@dataclass
class FontCatalog:
    records: list[FontRecord]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    by_script: dict[str, list[int]] = field(init=False)

    def __post_init__(self):
        index: dict[str, list[int]] = defaultdict(list)
        for i, rec in enumerate(self.records):
            for s in rec.declared_scripts:
                index[s].append(i)
        self.by_script = dict(sorted(index.items()))

    def for_script(self, script: str) -> list[FontRecord]:
        return [self.records[i] for i in self.by_script.get(script, [])]

    def families_per_script(self) -> dict[str, int]:
        return {s: len({self.records[i].family for i in idx}) for s, idx in self.by_script.items()}

    def save(self, path: str | Path) -> None:
        data = {"fonts": [r.to_json() for r in self.records], "skipped": [list(s) for s in self.skipped]}
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FontCatalog":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([FontRecord.from_json(o) for o in data["fonts"]], [tuple(s) for s in data.get("skipped", [])])


def load_metadata(path: str | Path) -> dict[str, list[str]]:
    """Family -> declared ISO 15924 scripts, from JSON or TOML."""
    path = Path(path)
    if not path.exists():
        raise FontIndexError(f"metadata file not found: {path}")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        data = json.loads(path.read_text(encoding="utf-8"))
    data = data.get("families", data)
    return {str(k): [str(s) for s in v] for k, v in data.items()}


def index_fonts(font_dir: str | Path, metadata: str | Path | Mapping[str, list[str]]) -> FontCatalog:
    """Parse every TTF/OTF under ``font_dir`` and attach declared scripts.

    Metadata keys may be family names, file names or file stems.
    """
    meta = metadata if isinstance(metadata, Mapping) else load_metadata(metadata)
    paths = sorted(p for p in Path(font_dir).rglob("*") if p.suffix.lower() in FONT_SUFFIXES)
    records, skipped = [], []
    for p in paths:
        try:
            family, cmap = read_font(p)
        except (FontParseError, OSError) as exc:
            skipped.append((str(p), f"unparseable: {exc}"))
            continue
        family = family or p.stem
        scripts = meta.get(family) or meta.get(p.name) or meta.get(p.stem)
        if not scripts:
            skipped.append((str(p), f"no metadata for family {family!r}"))
            continue
        if not cmap:
            skipped.append((str(p), "empty character map"))
            continue
        records.append(FontRecord(str(p), family, frozenset(scripts), frozenset(cmap)))
    for path, reason in skipped:
        log.warning("skipped %s: %s", path, reason)
    if not records:
        raise FontIndexError(f"no usable fonts under {font_dir}")
    return FontCatalog(records, skipped)


@dataclass
class StageSurvivors:
    declared: list[FontRecord]
    covering: list[FontRecord]
    rendering: list[FontRecord]


def filter_stages(sentence: SentenceRecord, catalog: FontCatalog, check: RenderCheck = render_problems) -> StageSurvivors:
    """Exhaustive survivors of each filter (diagnostics; ``select_font`` is lazier)."""
    declared = sorted(catalog.for_script(sentence.script), key=lambda r: r.path)
    covering = [r for r in declared if r.covers(sentence.text)]
    rendering = [r for r in covering if not check(sentence.text, r.path, sentence.direction)]
    return StageSurvivors(declared, covering, rendering)


def select_font(
    sentence: SentenceRecord,
    catalog: FontCatalog,
    seed: int,
    check: RenderCheck = render_problems,
) -> FontRecord:
    """Pick a font that declares the script, covers every codepoint and renders cleanly.

    Covering candidates are visited in a seeded random order and the first
    that renders cleanly is returned. That is a uniform draw over the fonts
    surviving all filters, without render-checking every candidate.
    """
    declared = sorted(catalog.for_script(sentence.script), key=lambda r: r.path)
    if not declared:
        raise NoDeclaredFont(sentence.id, sentence.script)
    covering = [r for r in declared if r.covers(sentence.text)]
    if not covering:
        missing = sorted({f"U+{ord(c):04X}" for c in sentence.text if not any(r.covers(c) for r in declared)})
        raise NoCoveringFont(sentence.id, sentence.script, " ".join(missing[:8]))
    rng = np.random.default_rng(seed)
    reasons = []
    for i in rng.permutation(len(covering)):
        rec = covering[i]
        problems = check(sentence.text, rec.path, sentence.direction)
        if not problems:
            return rec
        reasons.append(f"{rec.family}: {problems[0]}")
    raise NoRenderingFont(sentence.id, sentence.script, "; ".join(reasons[:3]))


def font_stats(catalog: FontCatalog, tier_table: Mapping[str, ResourceTier]) -> list[dict]:
    """Per-tier family counts (scripts, total, median, min, max) plus an 'All' row."""
    per_script = {s: n for s, n in catalog.families_per_script().items() if s in tier_table}
    rows = []
    groups = [(t.value, [n for s, n in per_script.items() if tier_table[s] is t]) for t in TIER_ORDER]
    groups.append(("All", list(per_script.values())))
    for name, counts in groups:
        if counts:
            rows.append({
                "tier": name, "scripts": len(counts), "total": sum(counts),
                "median": statistics.median(counts), "min": min(counts), "max": max(counts),
            })
        else:
            rows.append({"tier": name, "scripts": 0, "total": 0, "median": 0, "min": 0, "max": 0})
    return rows
