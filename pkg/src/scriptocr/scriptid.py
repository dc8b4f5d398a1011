"""Dominant-script detection and failure-mode classification of model outputs.

Script properties come from the Unicode ``Scripts.txt`` table bundled with
fontTools. Codepoints whose script is Common (Zyyy), Inherited (Zinh) or
Unknown (Zzzz) carry no script evidence.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from fontTools import unicodedata as ucd

from .uniprops import is_blank

NON_SCRIPTS = frozenset({"Zyyy", "Zinh", "Zzzz"})
KANA = frozenset({"Hira", "Kana"})


def char_script(ch: str) -> str:
    return ucd.script(ch)


@dataclass(frozen=True)
class ScriptVerdict:
    dominant: str | None
    histogram: dict[str, int] = field(default_factory=dict)
    coverage_frac: float = 0.0


def _composite(hist: Counter) -> Counter:
    # Kana mixed with Han, or Hiragana mixed with Katakana, is written Japanese.
    kana = sum(hist[s] for s in KANA)
    if kana and (hist["Hani"] or (hist["Hira"] and hist["Kana"])):
        merged = Counter({s: n for s, n in hist.items() if s not in KANA and s != "Hani"})
        merged["Jpan"] = kana + hist["Hani"]
        return merged
    return hist


def dominant_script(text: str, strict_majority: bool = False) -> ScriptVerdict:
    """Plurality script of ``text`` over codepoints with a real Script property.

    Ties go to the lexicographically smallest code. With ``strict_majority``
    the winner must hold more than half of the script-bearing codepoints,
    otherwise ``dominant`` is None.
    """
    hist: Counter = Counter()
    total = 0
    for ch in text:
        total += 1
        sc = char_script(ch)
        if sc not in NON_SCRIPTS:
            hist[sc] += 1
    counted = sum(hist.values())
    coverage = counted / total if total else 0.0
    if not counted:
        return ScriptVerdict(None, {}, coverage)

    merged = _composite(hist)
    dominant, best = min(merged.items(), key=lambda kv: (-kv[1], kv[0]))
    if strict_majority and best * 2 <= counted:
        dominant = None
    return ScriptVerdict(dominant, dict(sorted(hist.items())), coverage)


class FailureKind(str, enum.Enum):
    CORRECT = "correct"
    HALLUCINATION = "hallucination"
    SILENT = "silent"
    ARTIFACT = "artifact"


@dataclass(frozen=True)
class FailureMode:
    kind: FailureKind
    script: str | None = None  # dominant output script, for Correct and Hallucination

    def __str__(self) -> str:
        if self.kind is FailureKind.HALLUCINATION:
            return f"hallucination({self.script})"
        return self.kind.value

    @classmethod
    def parse(cls, value: str) -> "FailureMode":
        if value.startswith("hallucination(") and value.endswith(")"):
            return cls(FailureKind.HALLUCINATION, value[len("hallucination("):-1])
        return cls(FailureKind(value))


def classify(prediction: str, expected_script: str, strict_majority: bool = False) -> FailureMode:
    if is_blank(prediction):
        return FailureMode(FailureKind.SILENT)
    verdict = dominant_script(prediction, strict_majority=strict_majority)
    if verdict.dominant is None:
        return FailureMode(FailureKind.ARTIFACT)
    if verdict.dominant == expected_script:
        return FailureMode(FailureKind.CORRECT, verdict.dominant)
    return FailureMode(FailureKind.HALLUCINATION, verdict.dominant)
