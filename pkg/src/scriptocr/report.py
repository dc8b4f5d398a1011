"""Turn prediction JSONL into CSV and Markdown result tables.

Everything here is recomputed from the prediction files and the manifest.
Predictions that carry a harness error are left out of every metric and
counted separately, since they say nothing about the model's output.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .harness import PredictionRecord, read_predictions
from .metrics import (
    FAILURE_COLUMNS,
    EmptyTruthError,
    EvalRecord,
    MetricsError,
    aggregate_tiers,
    degradation_drop,
    evaluate,
    failure_rates,
    hint_gain,
    per_script,
    round_half_up,
)
from .tiers import TIER_ORDER, ResourceTier

log = logging.getLogger(__name__)

TIER_METRICS = (("CER", "cer_macro"), ("A@0", "acc0_macro"), ("A@5", "acc5_macro"))


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list]

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.header)
            w.writerows(self.rows)

    def to_markdown(self) -> str:
        def cell(v):
            return f"{v:.1f}" if isinstance(v, float) else str(v)

        lines = ["| " + " | ".join(self.header) + " |", "|" + "---|" * len(self.header)]
        lines += ["| " + " | ".join(cell(v) for v in row) + " |" for row in self.rows]
        return "\n".join(lines)


@dataclass
class Report:
    tables: dict[str, Table] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)
    n_errors: int = 0
    n_excluded_truth: int = 0


def pct(x: float) -> float:
    return round_half_up(100.0 * x, 1)


def to_eval_records(
    predictions: Iterable[PredictionRecord], manifest: Mapping[str, Mapping]
) -> tuple[list[EvalRecord], int, int]:
    """Score every error-free prediction; returns (records, n_errors, n_empty_truth)."""
    out, n_err, n_empty = [], 0, 0
    for p in predictions:
        if p.error is not None:
            n_err += 1
            continue
        row = manifest.get(p.sample_id)
        if row is None:
            raise MetricsError(f"prediction for unknown sample {p.sample_id}")
        try:
            out.append(evaluate(
                p.extracted_text, row["text"], row["script"], sample_id=p.sample_id, model=p.model,
                variant=p.variant, prompt_mode=p.prompt_mode, language=row.get("language", "und"),
            ))
        except EmptyTruthError:
            n_empty += 1
            log.warning("sample %s has empty ground truth after whitespace removal; excluded", p.sample_id)
    return out, n_err, n_empty


def _group(records: Iterable[EvalRecord], *keys: str) -> dict[tuple, list[EvalRecord]]:
    g: dict[tuple, list[EvalRecord]] = defaultdict(list)
    for r in records:
        g[tuple(getattr(r, k) for k in keys)].append(r)
    return dict(sorted(g.items()))


def tier_table(summaries: Mapping[str, tuple], tiers_present: Sequence[str] | None = None) -> Table:
    """Rows of per-tier CER/A@0/A@5 plus the mean across tiers, laid out per model."""
    tiers_present = tiers_present or [t.value for t in TIER_ORDER]
    header = ["Model"] + [f"{t} {m}" for t in [*tiers_present, "Mean"] for m, _ in TIER_METRICS]
    rows = []
    for model, (tiers, mean) in summaries.items():
        by = {t.tier: t for t in tiers}
        row = [model]
        for t in tiers_present:
            row += [pct(getattr(by[t], attr)) if t in by else "" for _, attr in TIER_METRICS]
        row += [pct(getattr(mean, attr)) for _, attr in TIER_METRICS]
        rows.append(row)
    return Table("tiers", header, rows)


def top_output_scripts(records: Iterable[EvalRecord], k: int = 2) -> dict[str, list[tuple[str, float]]]:
    """Per target script, the k most frequent output scripts, shares averaged over models."""
    shares: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for (script, _model), rs in _group(records, "expected_script", "model").items():
        counts = Counter(r.predicted_script for r in rs if r.predicted_script)
        for out_script in set(counts) | set(shares[script]):
            shares[script][out_script].append(counts.get(out_script, 0) / len(rs))
    n_models = {s: len({r.model for r in rs}) for (s,), rs in _group(records, "expected_script").items()}
    out = {}
    for script, by_out in shares.items():
        avg = {o: sum(v) / n_models[script] for o, v in by_out.items()}
        ranked = sorted(((o, a) for o, a in avg.items() if a > 0), key=lambda t: (-t[1], t[0]))
        out[script] = ranked[:k]
    return dict(sorted(out.items()))


def _fmt_top(top: list[tuple[str, float]]) -> str:
    return ", ".join(f"{s} ({pct(a):.1f})" for s, a in top)


def generate_report(
    prediction_files: Sequence[str | Path],
    manifest: Iterable[Mapping],
    tier_map: Mapping[str, ResourceTier],
    out_dir: str | Path | None = None,
) -> Report:
    rows = {r["id"]: r for r in manifest}
    preds = [p for f in prediction_files for p in read_predictions(f)]
    records, n_err, n_empty = to_eval_records(preds, rows)
    report = Report(n_errors=n_err, n_excluded_truth=n_empty)
    if n_err:
        report.notices.append(f"{n_err} predictions carry harness errors and are excluded from all metrics")

    plain_clean = [r for r in records if r.prompt_mode == "plain" and r.variant == "clean"]
    if not records:
        report.notices.append("no scorable predictions; all tables skipped")
    else:
        _tables(report, records, plain_clean, tier_map)

    if out_dir is not None:
        write_report(report, out_dir)
    return report


def _tables(report: Report, records: list[EvalRecord], plain_clean: list[EvalRecord], tier_map) -> None:
    tables, notices = report.tables, report.notices

    # (a) tier summary
    if plain_clean:
        summaries = {m: aggregate_tiers(rs, tier_map) for (m,), rs in _group(plain_clean, "model").items()}
        present = [t.value for t in TIER_ORDER if any(t.value in {x.tier for x in s[0]} for s in summaries.values())]
        tables["tiers"] = tier_table(summaries, present)
    else:
        notices.append("tier table skipped: no clean plain-prompt predictions")

    # (b) per-script A@5 / ScriptAcc with (d) top-2 output scripts
    if plain_clean:
        models = sorted({r.model for r in plain_clean})
        top = top_output_scripts(plain_clean)
        by_model = {m: per_script(rs) for (m,), rs in _group(plain_clean, "model").items()}
        scripts = sorted({r.expected_script for r in plain_clean})
        n_samples = {s: len({r.sample_id for r in plain_clean if r.expected_script == s}) for s in scripts}
        header = ["Script", "Tier", "n", "Top-2 Out.Script"] + [f"{m} A@5/SA" for m in models]
        body = []
        for s in scripts:
            cells = []
            for m in models:
                sm = by_model[m].get(s)
                cells.append(f"{pct(sm.acc5):.1f}/{pct(sm.scriptacc):.1f}" if sm else "")
            tier = tier_map[s].value if s in tier_map else ""
            body.append([s, tier, n_samples[s], _fmt_top(top.get(s, []))] + cells)
        tables["per_script"] = Table("per_script", header, body)
        tables["top_scripts"] = Table(
            "top_scripts", ["Script", "Top-1", "Share", "Top-2", "Share"],
            [[s] + [x for o, a in (t + [("", 0.0)] * 2)[:2] for x in (o, pct(a))] for s, t in top.items()],
        )

    # (c) failure modes
    if plain_clean:
        rows = []
        for (m,), rs in _group(plain_clean, "model").items():
            fr = failure_rates(rs)
            rows.append([m] + [round_half_up(fr[c], 1) for c in FAILURE_COLUMNS])
        rows.sort(key=lambda r: (r[2], r[0]))
        if len(rows) > 1:
            raw = [failure_rates(rs) for rs in _group(plain_clean, "model").values()]
            rows.append(["Average"] + [round_half_up(sum(fr[c] for fr in raw) / len(raw), 1) for c in FAILURE_COLUMNS])
        tables["failure_modes"] = Table("failure_modes", ["Model", "Correct", "Hall.", "Silent", "Artifact"], rows)

    # (e) clean vs degraded
    clean = [r for r in records if r.prompt_mode == "plain" and r.variant == "clean"]
    degraded = [r for r in records if r.prompt_mode == "plain" and r.variant == "degraded"]
    if clean and degraded:
        both = {(r.model, r.sample_id) for r in clean} & {(r.model, r.sample_id) for r in degraded}
        dropped = len(clean) + len(degraded) - 2 * len(both)
        if dropped:
            notices.append(f"degradation table: {dropped} predictions without a counterpart variant ignored")
        drops = degradation_drop(
            [r for r in clean if (r.model, r.sample_id) in both],
            [r for r in degraded if (r.model, r.sample_id) in both],
            tier_map,
        )
        tables["degradation"] = Table(
            "degradation", ["Model", "Tier", "Clean A@5", "Degraded A@5", "Drop (pp)", "Relative drop (%)"],
            [[d.model, d.tier, pct(d.clean), pct(d.degraded), pct(d.absolute),
              pct(d.relative) if d.relative is not None else "undefined"] for d in drops],
        )
    else:
        notices.append("degradation table skipped: needs plain-prompt predictions for both clean and degraded images")

    # (f) hint gain
    hinted = [r for r in records if r.prompt_mode == "hinted" and r.variant == "clean"]
    if hinted and clean:
        rows, per = [], []
        for (m,), hs in _group(hinted, "model").items():
            model_clean = [r for r in clean if r.model == m]
            common = {r.sample_id for r in hs} & {r.sample_id for r in model_clean if r.n_chars >= 10}
            if not common:
                continue
            base = [r for r in model_clean if r.n_chars < 10 or r.sample_id in common]
            hs = [r for r in hs if r.sample_id in common]
            g = hint_gain(base, hs)
            rows.append([m, len(g.deltas), g.improved, g.unchanged, g.worsened, round_half_up(100 * g.mean_delta, 1), g.excluded])
            per += [[m, s, pct(d)] for s, d in sorted(g.deltas.items())]
        if rows:
            tables["hint_gain"] = Table(
                "hint_gain", ["Model", "Scripts", "Improved", "Unchanged", "Worsened", "Mean delta (pp)", "Excluded short"], rows
            )
            tables["hint_gain_per_script"] = Table("hint_gain_per_script", ["Model", "Script", "Delta A@5 (pp)"], per)
    else:
        notices.append("hint-gain table skipped: needs clean predictions in both plain and hinted modes")

    # per-language rows
    if plain_clean:
        body = []
        for (m, s, lang), rs in _group(plain_clean, "model", "expected_script", "language").items():
            body.append([m, s, lang, len(rs), pct(sum(r.acc5 for r in rs) / len(rs)), pct(sum(r.script_ok for r in rs) / len(rs))])
        tables["per_language"] = Table("per_language", ["Model", "Script", "Language", "n", "A@5", "SA"], body)


def write_report(report: Report, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    md = ["# OCR results", ""]
    for notice in report.notices:
        md.append(f"> {notice}")
    if report.notices:
        md.append("")
    for name, t in report.tables.items():
        t.to_csv(out / f"{name}.csv")
        md += [f"## {name.replace('_', ' ')}", "", t.to_markdown(), ""]
    (out / "report.md").write_text("\n".join(md), encoding="utf-8")
    summary = {
        "notices": report.notices,
        "n_errors": report.n_errors,
        "n_excluded_truth": report.n_excluded_truth,
        "tables": {n: {"header": t.header, "rows": t.rows} for n, t in report.tables.items()},
    }
    (out / "report.json").write_text(json.dumps(summary, indent=1, ensure_ascii=False), encoding="utf-8")


__all__ = ["Report", "Table", "generate_report", "tier_table", "top_output_scripts", "to_eval_records", "write_report"]
