"""CER, best-of-4 CER, Acc@k, ScriptAcc, tier aggregation, degradation drop, hint gain.

Per-script values are means over that script's samples. Tier values are
unweighted means over scripts, and the overall value is the unweighted mean
of the tier values.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .scriptid import FailureKind, FailureMode, classify
from .tiers import TIER_ORDER, ResourceTier
from .uniprops import remove_marks, strip_white

log = logging.getLogger(__name__)

BEST_OF_CONFIGS = ("original", "reversed", "lowercased", "marks_removed")


class EmptyTruthError(ValueError):
    pass


class MetricsError(Exception):
    pass


def levenshtein(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cer(prediction: str, truth: str) -> float:
    """min(1, edit distance / truth length) with all White_Space removed from both sides."""
    t = strip_white(truth)
    if not t:
        raise EmptyTruthError("ground truth is empty after whitespace removal")
    return min(1.0, levenshtein(strip_white(prediction), t) / len(t))


def variants(prediction: str) -> dict[str, str]:
    return {
        "original": prediction,
        "reversed": prediction[::-1],
        "lowercased": prediction.lower(),
        "marks_removed": remove_marks(prediction),
    }


def cer_best_of_4(prediction: str, truth: str) -> tuple[float, str]:
    """Lowest CER over the four prediction variants; ties keep the earlier variant."""
    best, best_cfg = math.inf, "original"
    for cfg, text in variants(prediction).items():
        c = cer(text, truth)
        if c < best:
            best, best_cfg = c, cfg
    return best, best_cfg


@dataclass(frozen=True)
class EvalRecord:
    sample_id: str
    model: str
    variant: str  # clean | degraded
    cer: float
    best_config: str
    acc0: bool
    acc5: bool
    failure: FailureMode
    expected_script: str
    predicted_script: str | None
    prompt_mode: str = "plain"
    language: str = "und"
    n_chars: int = 0

    def __post_init__(self):
        if not 0.0 <= self.cer <= 1.0:
            raise ValueError(f"cer out of range: {self.cer}")
        if self.acc0 and not self.acc5:
            raise ValueError("acc0 implies acc5")
        if self.acc0 != (self.cer == 0.0):
            raise ValueError("acc0 must hold exactly when cer == 0")

    @property
    def script_ok(self) -> bool:
        return self.predicted_script == self.expected_script


def evaluate(
    prediction: str,
    truth: str,
    expected_script: str,
    *,
    sample_id: str,
    model: str = "",
    variant: str = "clean",
    prompt_mode: str = "plain",
    language: str = "und",
) -> EvalRecord:
    score, cfg = cer_best_of_4(prediction, truth)
    failure = classify(prediction, expected_script)
    predicted = failure.script if failure.kind in (FailureKind.CORRECT, FailureKind.HALLUCINATION) else None
    return EvalRecord(
        sample_id=sample_id, model=model, variant=variant, cer=score, best_config=cfg,
        acc0=score <= 0.0, acc5=score <= 0.05, failure=failure, expected_script=expected_script,
        predicted_script=predicted, prompt_mode=prompt_mode, language=language, n_chars=len(truth),
    )


def acc_at_k(values: Iterable[EvalRecord | float], k: float) -> float:
    """Fraction of samples with CER <= k/100."""
    cers = [v.cer if isinstance(v, EvalRecord) else float(v) for v in values]
    if not cers:
        raise MetricsError("acc_at_k of an empty record set")
    return sum(c <= k / 100 for c in cers) / len(cers)


def script_acc(records: Iterable[EvalRecord]) -> float:
    records = list(records)
    if not records:
        raise MetricsError("script_acc of an empty record set")
    return sum(r.script_ok for r in records) / len(records)


def round_half_up(x: float, places: int = 1) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ScriptMeans:
    script: str
    n: int
    cer: float
    acc0: float
    acc5: float
    scriptacc: float


@dataclass(frozen=True)
class TierSummary:
    tier: str
    cer_macro: float
    acc0_macro: float
    acc5_macro: float
    scriptacc_macro: float
    n_scripts: int


def per_script(records: Iterable[EvalRecord]) -> dict[str, ScriptMeans]:
    groups: dict[str, list[EvalRecord]] = defaultdict(list)
    for r in records:
        groups[r.expected_script].append(r)
    out = {}
    for s, rs in sorted(groups.items()):
        n = len(rs)
        out[s] = ScriptMeans(
            s, n,
            sum(r.cer for r in rs) / n,
            sum(r.acc0 for r in rs) / n,
            sum(r.acc5 for r in rs) / n,
            sum(r.script_ok for r in rs) / n,
        )
    return out


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def mean_across_tiers(tiers: Sequence[TierSummary]) -> TierSummary:
    """Unweighted mean of tier values (the 'Mean (across tiers)' column)."""
    if not tiers:
        raise MetricsError("no tiers to average")
    return TierSummary(
        "Mean",
        _mean([t.cer_macro for t in tiers]),
        _mean([t.acc0_macro for t in tiers]),
        _mean([t.acc5_macro for t in tiers]),
        _mean([t.scriptacc_macro for t in tiers]),
        sum(t.n_scripts for t in tiers),
    )


def aggregate_tiers(
    records: Iterable[EvalRecord], tier_table: Mapping[str, ResourceTier]
) -> tuple[list[TierSummary], TierSummary]:
    """Per-script means, then macro means per tier, then the mean across tiers.

    Tiers without any records are left out of both the list and the mean.
    """
    scripts = per_script(records)
    missing = sorted(s for s in scripts if s not in tier_table)
    if missing:
        raise MetricsError(f"scripts missing from tier table: {', '.join(missing)}")
    tiers = []
    for tier in TIER_ORDER:
        ms = [m for s, m in scripts.items() if tier_table[s] is tier]
        if not ms:
            continue
        tiers.append(TierSummary(
            tier.value,
            _mean([m.cer for m in ms]),
            _mean([m.acc0 for m in ms]),
            _mean([m.acc5 for m in ms]),
            _mean([m.scriptacc for m in ms]),
            len(ms),
        ))
    return tiers, mean_across_tiers(tiers)


@dataclass(frozen=True)
class Drop:
    model: str
    tier: str
    clean: float
    degraded: float
    absolute: float
    relative: float | None  # None when the clean score is zero


def _tier_acc5(records: list[EvalRecord], tier_table: Mapping[str, ResourceTier]) -> dict[str, float]:
    tiers, _ = aggregate_tiers(records, tier_table)
    return {t.tier: t.acc5_macro for t in tiers}


def degradation_drop(
    clean_records: Iterable[EvalRecord],
    degraded_records: Iterable[EvalRecord],
    tier_table: Mapping[str, ResourceTier],
) -> list[Drop]:
    """Clean minus degraded Acc@5 (macro, per model and tier), absolute and relative."""
    clean = {(r.model, r.sample_id): r for r in clean_records}
    degraded = {(r.model, r.sample_id): r for r in degraded_records}
    unmatched = set(clean) ^ set(degraded)
    if unmatched:
        example = sorted(unmatched)[:3]
        raise MetricsError(f"{len(unmatched)} samples not present in both variants, e.g. {example}")
    out = []
    for model in sorted({m for m, _ in clean}):
        c = _tier_acc5([r for (m, _), r in clean.items() if m == model], tier_table)
        d = _tier_acc5([r for (m, _), r in degraded.items() if m == model], tier_table)
        for tier in c:
            a = c[tier] - d[tier]
            out.append(Drop(model, tier, c[tier], d[tier], a, a / c[tier] if c[tier] else None))
    return out


@dataclass(frozen=True)
class HintGain:
    deltas: dict[str, float]  # per script, hinted - baseline Acc@5 (fractions)
    improved: int
    unchanged: int
    worsened: int
    mean_delta: float
    excluded: int


def hint_gain(
    baseline_records: Iterable[EvalRecord],
    hinted_records: Iterable[EvalRecord],
    min_chars: int = 10,
    eps: float = 1e-12,
) -> HintGain:
    """Per-script Acc@5 change from hinting, ignoring samples shorter than ``min_chars``."""
    base = list(baseline_records)
    hint = list(hinted_records)
    keep_b = [r for r in base if r.n_chars >= min_chars]
    keep_h = [r for r in hint if r.n_chars >= min_chars]
    excluded = len(base) - len(keep_b)
    ids_b = {(r.model, r.sample_id) for r in keep_b}
    ids_h = {(r.model, r.sample_id) for r in keep_h}
    if ids_b != ids_h:
        raise MetricsError(f"baseline and hinted sample sets differ ({len(ids_b ^ ids_h)} unmatched)")
    b, h = per_script(keep_b), per_script(keep_h)
    deltas = {s: h[s].acc5 - b[s].acc5 for s in b}
    improved = sum(d > eps for d in deltas.values())
    worsened = sum(d < -eps for d in deltas.values())
    mean = _mean(list(deltas.values())) if deltas else 0.0
    return HintGain(deltas, improved, len(deltas) - improved - worsened, worsened, mean, excluded)


FAILURE_COLUMNS = ("correct", "hallucination", "silent", "artifact")


def failure_rates(records: Iterable[EvalRecord]) -> dict[str, float]:
    """Failure-mode shares (%) macro-averaged over scripts; they sum to 100."""
    groups: dict[str, list[EvalRecord]] = defaultdict(list)
    for r in records:
        groups[r.expected_script].append(r)
    if not groups:
        raise MetricsError("failure_rates of an empty record set")
    totals = dict.fromkeys(FAILURE_COLUMNS, 0.0)
    for rs in groups.values():
        for col in FAILURE_COLUMNS:
            totals[col] += sum(r.failure.kind.value == col for r in rs) / len(rs)
    return {col: 100.0 * v / len(groups) for col, v in totals.items()}
