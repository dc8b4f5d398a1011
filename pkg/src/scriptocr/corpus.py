"""Seed-text ingestion, validation, filtering and per-script sampling."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import re
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .scriptid import dominant_script
from .seeding import rng_for
from .tiers import is_script_code, tier_of
from .uniprops import strong_directions

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("text", "script", "language", "source")
_LANG = re.compile(r"^[a-z]{3}$")


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class SentenceRecord:
    id: str
    text: str
    script: str
    language: str
    source: str
    direction: str = "LTR"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("text is empty")
        if not is_script_code(self.script):
            raise ValueError(f"invalid ISO 15924 code {self.script!r}")
        if self.direction not in ("LTR", "RTL"):
            raise ValueError(f"invalid direction {self.direction!r}")

    @property
    def n_chars(self) -> int:
        return len(self.text)

    def to_manifest(self) -> dict:
        row = dataclasses.asdict(self)
        row["tier"] = tier_of(self.script).value
        return row

    @classmethod
    def from_manifest(cls, row: Mapping) -> "SentenceRecord":
        return cls(**{f.name: row[f.name] for f in dataclasses.fields(cls) if f.name in row})


def record_id(text: str, script: str, language: str) -> str:
    return hashlib.sha256(f"{text}\x1f{script}\x1f{language}".encode("utf-8")).hexdigest()[:16]


def text_direction(text: str) -> str:
    return "RTL" if "RTL" in strong_directions(text) else "LTR"


@dataclass
class LineError:
    line: int
    message: str


@dataclass
class IngestResult:
    records: list[SentenceRecord]
    errors: list[LineError] = field(default_factory=list)


def parse_jsonl(path: str | Path) -> IngestResult:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc

    result = IngestResult([])
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            missing = [k for k in REQUIRED_KEYS if k not in obj]
            if missing:
                raise ValueError(f"missing keys: {', '.join(missing)}")
            text, script, lang = str(obj["text"]), str(obj["script"]), str(obj["language"])
            if lang != "und" and not _LANG.match(lang):
                raise ValueError(f"invalid ISO 639-3 code {lang!r}")
            rec = SentenceRecord(
                id=record_id(text, script, lang),
                text=text,
                script=script,
                language=lang,
                source=str(obj["source"]),
                direction=text_direction(text),
            )
        except ValueError as exc:  # JSONDecodeError is a ValueError
            result.errors.append(LineError(lineno, str(exc)))
            continue
        result.records.append(rec)
    return result


def ingest(path: str | Path) -> list[SentenceRecord]:
    """Read seed-text JSONL. Bad lines are logged and skipped; fails only if every line is bad."""
    result = parse_jsonl(path)
    for err in result.errors:
        log.warning("%s:%d: %s", path, err.line, err.message)
    if not result.records:
        if result.errors:
            raise CorpusError(f"{path}: all {len(result.errors)} lines failed to parse")
        log.warning("%s: no records", path)
    return result.records


def filter_length(
    records: Iterable[SentenceRecord],
    min_chars: int = 30,
    max_chars: int = 100,
    fallback_scripts: Iterable[str] = (),
) -> list[SentenceRecord]:
    """Keep records whose scalar count is within [min_chars, max_chars].

    Scripts listed in ``fallback_scripts`` that have no record in range keep
    their shorter (word-level) records instead.
    """
    if min_chars > max_chars:
        raise ValueError("min_chars must not exceed max_chars")
    records = list(records)
    fallback = set(fallback_scripts)
    in_range = Counter(r.script for r in records if min_chars <= r.n_chars <= max_chars)
    out = []
    for r in records:
        if min_chars <= r.n_chars <= max_chars:
            out.append(r)
        elif r.script in fallback and not in_range[r.script] and r.n_chars < min_chars:
            out.append(r)
    return out


def exclude_mixed_bidi(records: Iterable[SentenceRecord]) -> list[SentenceRecord]:
    out = []
    for r in records:
        dirs = strong_directions(r.text)
        if len(dirs) > 1:
            continue
        out.append(dataclasses.replace(r, direction="RTL" if dirs == {"RTL"} else "LTR"))
    return out


def verify_script(record: SentenceRecord) -> bool:
    return dominant_script(record.text).dominant == record.script


@dataclass
class Caps:
    default: int = 100
    per_script: dict[str, int] = field(
        default_factory=lambda: {"Latn": 4000, "Cyrl": 400, "Hani": 400, "Deva": 400, "Arab": 400}
    )

    def __getitem__(self, script: str) -> int:
        return self.per_script.get(script, self.default)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "Caps":
        caps = cls()
        if "default" in data:
            caps.default = int(data["default"])
        if "scripts" in data:
            caps.per_script = {k: int(v) for k, v in data["scripts"].items()}
        return caps

    def to_mapping(self) -> dict:
        return {"default": self.default, "scripts": dict(sorted(self.per_script.items()))}


def sample(records: Iterable[SentenceRecord], caps: Caps | None = None, seed: int = 0) -> list[SentenceRecord]:
    """Uniform per-script sampling without replacement, deterministic in ``seed``."""
    caps = caps or Caps()
    groups: dict[str, list[SentenceRecord]] = defaultdict(list)
    for r in records:
        groups[r.script].append(r)
    out = []
    for script in sorted(groups):
        pool = sorted(groups[script], key=lambda r: (r.id, r.text))
        k = min(caps[script], len(pool))
        idx = rng_for(seed, "sample", script).choice(len(pool), size=k, replace=False)
        out.extend(pool[i] for i in idx)
    return sorted(out, key=lambda r: (r.script, r.id))


@dataclass
class CorpusConfig:
    min_chars: int = 30
    max_chars: int = 100
    fallback_scripts: tuple[str, ...] = ()
    caps: Caps = field(default_factory=Caps)


def dedupe(records: Iterable[SentenceRecord]) -> list[SentenceRecord]:
    seen, out = set(), []
    for r in records:
        if r.id not in seen:
            seen.add(r.id)
            out.append(r)
    return out


def build_corpus(records: Iterable[SentenceRecord], config: CorpusConfig, seed: int) -> tuple[list[SentenceRecord], dict]:
    """Run script verification, bidi exclusion, length filter and sampling.

    Returns the sampled records and per-script counts after every stage.
    """
    stages: dict[str, Counter] = {}
    recs = dedupe(records)
    stages["ingested"] = Counter(r.script for r in recs)
    recs = [r for r in recs if verify_script(r)]
    stages["script_verified"] = Counter(r.script for r in recs)
    recs = exclude_mixed_bidi(recs)
    stages["bidi_ok"] = Counter(r.script for r in recs)
    recs = filter_length(recs, config.min_chars, config.max_chars, config.fallback_scripts)
    stages["length_ok"] = Counter(r.script for r in recs)
    recs = sample(recs, config.caps, seed)
    stages["sampled"] = Counter(r.script for r in recs)
    return recs, {name: dict(sorted(c.items())) for name, c in stages.items()}


def write_manifest(records: Iterable[SentenceRecord], path: str | Path, extra: Mapping[str, Mapping] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            row = r.to_manifest()
            if extra and r.id in extra:
                row.update(extra[r.id])
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
