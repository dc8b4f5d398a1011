import json

import pytest

from scriptocr.harness import PredictionRecord
from scriptocr.report import generate_report, top_output_scripts, to_eval_records
from scriptocr.tiers import ResourceTier

TIERS = {"Latn": ResourceTier.HIGH, "Deva": ResourceTier.MID, "Nkoo": ResourceTier.LOW}
ROWS = [
    {"id": "l1", "text": "hello there world friend", "script": "Latn", "language": "eng"},
    {"id": "l2", "text": "another latin line here", "script": "Latn", "language": "eng"},
    {"id": "d1", "text": "नमस्ते दुनिया कैसे हो", "script": "Deva", "language": "hin"},
    {"id": "d2", "text": "यह एक वाक्य है भाई", "script": "Deva", "language": "mar"},
    {"id": "n1", "text": "ߒߞߏ ߞߊ߲ ߞߎߘߊ", "script": "Nkoo", "language": "nqo"},
]
TEXT = {r["id"]: r["text"] for r in ROWS}


def pred(sid, out, model="m", variant="clean", mode="plain", error=None):
    return PredictionRecord(sid, model, variant, out, None if error else out, mode, 1.0, error=error)


def write(path, preds):
    path.write_text("".join(p.to_json() + "\n" for p in preds), encoding="utf-8")
    return path


def test_single_model_single_script(tmp_path):
    f = write(tmp_path / "p.jsonl", [pred("l1", TEXT["l1"])])
    rep = generate_report([f], ROWS, TIERS, tmp_path / "out")
    assert len(rep.tables["tiers"].rows) == 1
    assert len(rep.tables["per_script"].rows) == 1
    assert rep.tables["tiers"].rows[0][1:] == [0.0, 100.0, 100.0, 0.0, 100.0, 100.0]
    for name in ("tiers", "per_script", "failure_modes"):
        assert (tmp_path / "out" / f"{name}.csv").exists()
    assert "degradation table skipped" in (tmp_path / "out" / "report.md").read_text()


def test_failure_rows_sum_to_100(tmp_path):
    preds = [pred("l1", TEXT["l1"]), pred("l2", ""), pred("d1", "hello"), pred("d2", "1234"), pred("n1", TEXT["n1"])]
    preds += [pred(p.sample_id, p.extracted_text, model="m2") for p in preds[:3]]
    rep = generate_report([write(tmp_path / "p.jsonl", preds)], ROWS, TIERS)
    rows = rep.tables["failure_modes"].rows
    assert rows[-1][0] == "Average"
    for row in rows:
        assert sum(row[1:]) == pytest.approx(100.0, abs=0.2)


def test_errors_excluded_not_silent(tmp_path):
    preds = [pred("l1", None, error="TimeoutError: slow"), pred("l2", TEXT["l2"])]
    rep = generate_report([write(tmp_path / "p.jsonl", preds)], ROWS, TIERS)
    assert rep.n_errors == 1
    (row,) = rep.tables["failure_modes"].rows
    assert row[1:] == [100.0, 0.0, 0.0, 0.0]
    assert any("harness errors" in n for n in rep.notices)


def test_degradation_and_hint_tables(tmp_path):
    preds = [pred(r["id"], r["text"]) for r in ROWS]
    preds += [pred(r["id"], r["text"] if r["script"] == "Latn" else "", variant="degraded") for r in ROWS]
    preds += [pred(r["id"], r["text"], mode="hinted") for r in ROWS]
    rep = generate_report([write(tmp_path / "p.jsonl", preds)], ROWS, TIERS, tmp_path / "o")
    drops = {row[1]: row for row in rep.tables["degradation"].rows}
    assert drops["High"][4] == 0.0 and drops["Mid"][4] == 100.0 and drops["Mid"][5] == 100.0
    (hint,) = rep.tables["hint_gain"].rows
    assert hint[2:5] == [0, 3, 0]
    summary = json.loads((tmp_path / "o" / "report.json").read_text())
    assert set(summary["tables"]) >= {"tiers", "degradation", "hint_gain", "per_language"}


def test_top_output_scripts_average_over_models():
    preds = [pred("d1", "hello"), pred("d2", "नमस्ते"), pred("d1", "hello", model="b"), pred("d2", "hello", model="b")]
    recs, _, _ = to_eval_records(preds, {r["id"]: r for r in ROWS})
    top = top_output_scripts(recs)
    # model m: Latn 0.5, Deva 0.5; model b: Latn 1.0 -> Latn 0.75, Deva 0.25
    assert top["Deva"] == [("Latn", pytest.approx(0.75)), ("Deva", pytest.approx(0.25))]


def test_unknown_sample_rejected(tmp_path):
    from scriptocr.metrics import MetricsError

    with pytest.raises(MetricsError):
        generate_report([write(tmp_path / "p.jsonl", [pred("zz", "x")])], ROWS, TIERS)


def test_reproducible_from_jsonl(tmp_path):
    preds = [pred(r["id"], r["text"][:-2]) for r in ROWS]
    f = write(tmp_path / "p.jsonl", preds)
    generate_report([f], ROWS, TIERS, tmp_path / "a")
    generate_report([f], ROWS, TIERS, tmp_path / "b")
    for name in ("tiers.csv", "per_script.csv", "report.md", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
