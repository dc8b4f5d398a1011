import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from scriptocr.cli import main
from scriptocr.config import RunConfig
from scriptocr.corpus import Caps, CorpusConfig, read_manifest
from scriptocr.fixtures import toy_sentences
from scriptocr.pipeline import PipelineError, run_pipeline, sample_seed
from scriptocr.render import RenderConfig

NKOO = "ߒߞߏ ߞߊ߲ ߞߎߘߊ ߟߎ߬ ߦߋ߫ ߞߍ߫ ߞߊ߬ ߛߓߍߟߌ ߞߍ"


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "config.json":
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture
def toy_corpus(tmp_path):
    rows = toy_sentences("Latn", 3, 0) + toy_sentences("Hebr", 3, 1)
    rows.append({"text": NKOO, "script": "Nkoo", "language": "nqo", "source": "toy"})
    p = tmp_path / "corpus.jsonl"
    p.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")
    return p


def cfg_for(tmp_path, toy_corpus, font_dir, metadata_path, name="out", seed=5):
    return RunConfig(corpus_path=str(toy_corpus), fonts_dir=str(font_dir), font_metadata=str(metadata_path),
                     output_dir=str(tmp_path / name), seed=seed)


def test_config_round_trip(tmp_path):
    cfg = RunConfig(seed=3, tiers={"Latn": "High"}, corpus=CorpusConfig(caps=Caps(default=7)),
                    render=RenderConfig(font_px=40))
    cfg.save(tmp_path / "c.json")
    again = RunConfig.load(tmp_path / "c.json")
    assert again == cfg and again.to_json() == cfg.to_json()
    with pytest.raises(ValueError):
        RunConfig(variants=("blurry",))
    with pytest.raises(KeyError):
        RunConfig.from_dict({"render": {"font_size": 3}})


def test_config_from_toml(tmp_path):
    (tmp_path / "c.toml").write_text('seed = 9\nvariants = ["clean"]\n[render]\nfont_px = 32\n[degrade]\njpeg_quality = [50, 60]\n')
    cfg = RunConfig.load(tmp_path / "c.toml")
    assert cfg.seed == 9 and cfg.variants == ("clean",) and cfg.render.font_px == 32
    assert cfg.degrade.jpeg_quality == (50, 60)


def test_pipeline_tree(tmp_path, toy_corpus, font_dir, metadata_path):
    cfg = cfg_for(tmp_path, toy_corpus, font_dir, metadata_path)
    report = run_pipeline(cfg)
    out = Path(cfg.output_dir)
    rows = read_manifest(out / "manifest.jsonl")
    assert len(rows) == 6 and report.rendered == {"Latn": 3, "Hebr": 3}
    assert report.scripts_without_font == ["Nkoo"]
    assert "stage1:NoDeclaredFont" in report.font_failures["Nkoo"]["counts"]
    ids = {r["id"] for r in rows}
    for variant in ("clean", "degraded"):
        assert {p.stem for p in (out / variant).glob("*.png")} == ids
        assert {p.stem for p in (out / variant).glob("*.json")} == ids
    side = json.loads((out / "degraded" / f"{rows[0]['id']}.json").read_text())
    assert side["seed"] == sample_seed(5, rows[0]["id"], "degraded")
    assert "degrade" in side["params"] and side["font_family"].startswith("Fixture")
    assert RunConfig.load(out / "config.json") == cfg
    assert json.loads((out / "build_report.json").read_text())["scripts_without_font"] == ["Nkoo"]


def test_pipeline_deterministic(tmp_path, toy_corpus, font_dir, metadata_path):
    run_pipeline(cfg_for(tmp_path, toy_corpus, font_dir, metadata_path, "a"))
    run_pipeline(cfg_for(tmp_path, toy_corpus, font_dir, metadata_path, "b"))
    run_pipeline(cfg_for(tmp_path, toy_corpus, font_dir, metadata_path, "c", seed=6))
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")
    assert tree_digest(tmp_path / "a") != tree_digest(tmp_path / "c")


def test_adding_a_script_keeps_existing_samples(tmp_path, toy_corpus, font_dir, metadata_path):
    run_pipeline(cfg_for(tmp_path, toy_corpus, font_dir, metadata_path, "a"))
    more = tmp_path / "more.jsonl"
    extra = toy_sentences("Deva", 2, 9)
    more.write_text(toy_corpus.read_text(encoding="utf-8")
                    + "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in extra), encoding="utf-8")
    run_pipeline(cfg_for(tmp_path, more, font_dir, metadata_path, "b"))
    for p in (tmp_path / "a" / "clean").glob("*.png"):
        assert p.read_bytes() == (tmp_path / "b" / "clean" / p.name).read_bytes()


def test_pipeline_stage_error(tmp_path, font_dir, metadata_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("nope\n")
    with pytest.raises(PipelineError) as e:
        run_pipeline(RunConfig(corpus_path=str(bad), fonts_dir=str(font_dir), font_metadata=str(metadata_path),
                               output_dir=str(tmp_path / "o")))
    assert e.value.stage == "corpus"


def test_cli_end_to_end(tmp_path, toy_corpus, font_dir, metadata_path):
    r = CliRunner()
    out = tmp_path / "bench"
    res = r.invoke(main, ["pipeline", "--corpus", str(toy_corpus), "--fonts", str(font_dir), "--meta",
                          str(metadata_path), "--out", str(out), "--seed", "5", "--jpeg-quality", "40,50"])
    assert res.exit_code == 0, res.output
    assert RunConfig.load(out / "config.json").degrade.jpeg_quality == (40, 50)
    profile = tmp_path / "oracle.toml"
    profile.write_text('name = "oracle"\nkind = "oracle"\n')
    res = r.invoke(main, ["eval", "run", "--model", str(profile), "--manifest", str(out / "manifest.jsonl"),
                          "--images", str(out), "--out", str(tmp_path / "preds" / "m.jsonl")])
    assert res.exit_code == 0, res.output
    res = r.invoke(main, ["eval", "report", "--pred", str(tmp_path / "preds" / "*.jsonl"), "--manifest",
                          str(out / "manifest.jsonl"), "--out", str(tmp_path / "rep")])
    assert res.exit_code == 0, res.output
    tiers = (tmp_path / "rep" / "tiers.csv").read_text().splitlines()
    assert tiers[1].startswith("oracle,0.0,100.0,100.0")


def test_cli_stage_commands(tmp_path, toy_corpus, font_dir, metadata_path):
    r = CliRunner()
    caps = tmp_path / "caps.toml"
    caps.write_text("default = 2\n")
    res = r.invoke(main, ["corpus", "build", "--in", str(toy_corpus), "--out", str(tmp_path / "m.jsonl"),
                          "--seed", "1", "--caps", str(caps)])
    assert res.exit_code == 0, res.output
    assert len(read_manifest(tmp_path / "m.jsonl")) == 6  # Latn keeps its own cap: 3 Latn, 2 Hebr, 1 Nkoo
    res = r.invoke(main, ["fonts", "index", "--dir", str(font_dir), "--meta", str(metadata_path), "--out",
                          str(tmp_path / "cat.json")])
    assert res.exit_code == 0 and "6 fonts indexed" in res.output
    res = r.invoke(main, ["render", "--manifest", str(tmp_path / "m.jsonl"), "--catalog", str(tmp_path / "cat.json"),
                          "--out", str(tmp_path / "r"), "--variant", "clean"])
    assert res.exit_code == 0 and "rendered 5/6" in res.output
    res = r.invoke(main, ["degrade", "--in", str(tmp_path / "r" / "clean"), "--out", str(tmp_path / "d"), "--seed", "2"])
    assert res.exit_code == 0 and "degraded 5 images" in res.output
    assert len(list((tmp_path / "d").glob("*.json"))) == 5


def test_cli_help_lists_defaults():
    res = CliRunner().invoke(main, ["pipeline", "--help"])
    for text in ["48", "1000", "40", "-2,4", "0.4", "0.25", "17", "8.0", "10,30", "40x15", "0.5,0.85", "0.4,0.7",
                 "30,80", "0.1"]:
        assert text in res.output, text


def test_cli_errors(tmp_path):
    r = CliRunner()
    res = r.invoke(main, ["pipeline"])
    assert res.exit_code != 0 and "required" in res.output
    res = r.invoke(main, ["degrade", "--in", str(tmp_path), "--out", str(tmp_path / "o"), "--patches", "1"])
    assert res.exit_code != 0
