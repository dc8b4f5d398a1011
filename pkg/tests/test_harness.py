import base64
import json
import re
import threading
import time

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scriptocr.harness import (
    HarnessError,
    HTTPChatClient,
    ModelProfile,
    OracleClient,
    PredictionRecord,
    PromptError,
    RetryPolicy,
    StubClient,
    build_prompt,
    extract_transcription,
    hint_charset,
    read_predictions,
    run_eval,
)

ROWS = [
    {"id": f"s{i:02d}", "text": t, "script": s, "language": lang}
    for i, (t, s, lang) in enumerate([
        ("hello brave new world", "Latn", "eng"),
        ("नमस्ते दुनिया कैसे हो", "Deva", "hin"),
        ("שלום עולם ומלואו", "Hebr", "heb"),
        ("short", "Latn", "eng"),
        ("another latin sentence", "Latn", "eng"),
        ("यह एक वाक्य है भाई", "Deva", "hin"),
    ])
]


@pytest.fixture
def images(tmp_path):
    d = tmp_path / "img"
    for v in ("clean", "degraded"):
        (d / v).mkdir(parents=True)
        for r in ROWS:
            (d / v / f"{r['id']}.png").write_bytes(f"png:{v}:{r['id']}".encode())
    return d


# -- prompts -------------------------------------------------------------------

def test_prompts():
    plain = build_prompt("plain", ROWS[0])
    assert plain == build_prompt("plain", ROWS[1]) == build_prompt("plain")
    assert "<text>" in plain
    hinted = build_prompt("hinted", {"text": "bab bab bab", "script": "Latn", "language": "eng"})
    assert hinted.startswith(plain) and hinted.endswith(": ab") and "Latn" in hinted and "eng" in hinted
    with pytest.raises(PromptError):
        build_prompt("hinted", {"text": "123456789", "script": "Latn"})
    build_prompt("hinted", {"text": "1234567890", "script": "Latn"})
    with pytest.raises(PromptError):
        build_prompt("fancy", ROWS[0])


def test_hint_charset_sorted_by_codepoint():
    assert hint_charset("bab") == "ab"
    assert hint_charset("ñ a\tB") == "Bañ"
    s = hint_charset("नमस्ते")
    assert list(s) == sorted(set(s), key=ord)


# -- extraction ------------------------------------------------------------------

@pytest.mark.parametrize("raw,text,clean", [
    ("<text>hola</text>", "hola", True),
    ("hola", "hola", False),
    ("  hola \n", "hola", False),
    ("Sure! <text>hola</text> done", "hola", True),
    ("<text> keep  inner space </text>", " keep  inner space ", True),
    ("<text>a</text><text>b</text>", "a", True),
    ("<text>a<text>b</text>c</text>", "a<text>b</text>c", False),
    ("<text>unterminated", "unterminated", False),
    ("</text>stray", "</text>stray", False),
    ("", "", False),
])
def test_extract_examples(raw, text, clean):
    ext = extract_transcription(raw)
    assert ext.text == text and ext.clean is clean
    assert ext.fallback is (not clean)


def _reference(raw, tag="text"):
    # token-stream reference: split on tags, then walk with a depth counter
    o, c = f"<{tag}>", f"</{tag}>"
    parts = re.split(f"({re.escape(o)}|{re.escape(c)})", raw)
    if o not in parts:
        return raw.strip()
    start = parts.index(o)
    depth, out = 0, []
    for p in parts[start:]:
        if p == o:
            depth += 1
            if depth == 1:
                continue
        elif p == c:
            depth -= 1
            if depth == 0:
                return "".join(out)
        out.append(p)
    return "".join(out).strip()


@given(st.lists(st.sampled_from(["<text>", "</text>", "a", "ब", " ", "<tex", ">"]), max_size=10))
def test_extract_matches_reference(tokens):
    raw = "".join(tokens)
    ext = extract_transcription(raw)
    assert ext.text == _reference(raw)
    simple = re.fullmatch(r"[^<]*<text>([^<]*)</text>.*", raw, re.S)
    if simple and raw.count("<text>") == 1 and raw.count("</text>") == 1:
        assert ext.clean and ext.text == simple.group(1)


def test_custom_tag():
    assert extract_transcription("<ocr>x</ocr>", tag="ocr").text == "x"
    assert "<ocr>" in build_prompt("plain", tag="ocr")


# -- records -------------------------------------------------------------------

def test_prediction_invariant():
    with pytest.raises(ValueError):
        PredictionRecord("a", "m", "clean", "raw", None, "plain", 1.0)
    with pytest.raises(ValueError):
        PredictionRecord("a", "m", "clean", "raw", "x", "plain", 1.0, error="boom")
    r = PredictionRecord("a", "m", "clean", None, None, "plain", 1.0, error="boom")
    assert json.loads(r.to_json())["error"] == "boom"


# -- runs ------------------------------------------------------------------------

def test_oracle_run(tmp_path, images):
    client = OracleClient(ROWS, images)
    recs = run_eval(ROWS, images, client, tmp_path / "p.jsonl", variants=("clean", "degraded"))
    assert len(recs) == 2 * len(ROWS)
    truth = {r["id"]: r["text"] for r in ROWS}
    assert all(r.extracted_text == truth[r.sample_id] and not r.tag_fallback for r in recs)
    assert [r.key for r in read_predictions(tmp_path / "p.jsonl")] == [r.key for r in recs]


def test_timeouts_become_errors(tmp_path, images):
    def boom(img, prompt):
        raise TimeoutError("slow")

    sleeps = []
    recs = run_eval(ROWS, images, StubClient("slow", boom), tmp_path / "p.jsonl", sleep=sleeps.append)
    assert all(r.error and "TimeoutError" in r.error and r.extracted_text is None for r in recs)
    assert sorted(sleeps) == sorted([2.0, 4.0] * len(ROWS))


def test_retry_then_success(tmp_path, images):
    calls = {}

    def flaky(img, prompt):
        calls[img] = calls.get(img, 0) + 1
        if calls[img] < 3:
            raise ConnectionError("reset")
        return "<text>ok</text>"

    recs = run_eval(ROWS, images, StubClient("flaky", flaky), tmp_path / "p.jsonl", sleep=lambda s: None)
    assert all(r.extracted_text == "ok" for r in recs)
    calls.clear()
    recs = run_eval(ROWS, images, StubClient("once", flaky), tmp_path / "q.jsonl", sleep=lambda s: None,
                    retry=RetryPolicy(attempts=1))
    assert all(r.error and "ConnectionError" in r.error for r in recs)


def test_hinted_short_sample_is_error(tmp_path, images):
    recs = run_eval(ROWS, images, StubClient("m", lambda i, p: "<text>x</text>"), tmp_path / "p.jsonl", mode="hinted")
    short = [r for r in recs if r.sample_id == "s03"]
    assert short[0].error and "refused" in short[0].error
    assert all(r.error is None for r in recs if r.sample_id != "s03")


def test_resume_equals_uninterrupted(tmp_path, images):
    fn = lambda img, p: f"<text>{img.decode()[::-1]}</text>"  # noqa: E731
    full = tmp_path / "full.jsonl"
    run_eval(ROWS, images, StubClient("m", fn), full, variants=("clean", "degraded"), concurrency_limit=3)
    part = tmp_path / "part.jsonl"
    run_eval(ROWS, images, StubClient("m", fn), part, variants=("clean", "degraded"), limit=5)
    seen = []
    run_eval(ROWS, images, StubClient("m", lambda i, p: seen.append(i) or fn(i, p)), part,
             variants=("clean", "degraded"), resume=True)
    assert len(seen) == 2 * len(ROWS) - 5
    strip = lambda path: [{k: v for k, v in json.loads(l).items() if k != "latency_ms"}  # noqa: E731
                          for l in path.read_text().splitlines()]
    assert strip(full) == strip(part)


def test_without_resume_overwrites(tmp_path, images):
    out = tmp_path / "p.jsonl"
    run_eval(ROWS, images, StubClient("m", lambda i, p: "a"), out)
    run_eval(ROWS, images, StubClient("m", lambda i, p: "b"), out)
    assert {r.extracted_text for r in read_predictions(out)} == {"b"}


def test_concurrency_bound(tmp_path, images):
    lock, state = threading.Lock(), {"now": 0, "max": 0}

    def slow(img, prompt):
        with lock:
            state["now"] += 1
            state["max"] = max(state["max"], state["now"])
        time.sleep(0.02)
        with lock:
            state["now"] -= 1
        return "x"

    run_eval(ROWS, images, StubClient("m", slow), tmp_path / "p.jsonl", variants=("clean", "degraded"), concurrency_limit=2)
    assert 1 <= state["max"] <= 2


def test_missing_images(tmp_path, images):
    rows = ROWS + [{"id": "nope", "text": "x", "script": "Latn"}]
    with pytest.raises(HarnessError):
        run_eval(rows, images, StubClient("m", lambda i, p: ""), tmp_path / "p.jsonl")


# -- HTTP client -------------------------------------------------------------------

def test_http_chat_client_sends_native_png():
    seen = {}

    def handler(request):
        seen["path"] = request.url.path
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"choices": [{"message": {"content": "<text>hi</text>"}}]})

    client = HTTPChatClient("m", "http://x/v1", "model-x", "k", transport=httpx.MockTransport(handler))
    png = b"\x89PNG exact bytes"
    assert client.transcribe(png, "prompt") == "<text>hi</text>"
    assert seen["path"] == "/v1/chat/completions" and seen["auth"] == "Bearer k"
    content = seen["body"]["messages"][0]["content"]
    url = next(c["image_url"]["url"] for c in content if c["type"] == "image_url")
    assert base64.b64decode(url.split(",", 1)[1]) == png


def test_http_raw_prompt_and_timeout():
    def handler(request):
        if json.loads(request.content)["prompt"] == "slow":
            raise httpx.ReadTimeout("t", request=request)
        return httpx.Response(200, json={"choices": [{"text": "raw out"}]})

    client = HTTPChatClient("m", "http://x/v1", "mx", chat_template=False, transport=httpx.MockTransport(handler))
    assert client.transcribe(b"img", "p") == "raw out"
    with pytest.raises(TimeoutError):
        client.transcribe(b"img", "slow")


def test_profiles(tmp_path, monkeypatch):
    p = tmp_path / "m.toml"
    p.write_text('[model]\nname = "api"\nendpoint = "http://localhost:1/v1"\napi_key_env = "SCRIPTOCR_TEST_KEY"\n'
                 'tag = "ocr"\nchat_template = false\n')
    prof = ModelProfile.load(p)
    assert prof.tag == "ocr" and prof.chat_template is False
    monkeypatch.delenv("SCRIPTOCR_TEST_KEY", raising=False)
    with pytest.raises(HarnessError):
        prof.build()
    monkeypatch.setenv("SCRIPTOCR_TEST_KEY", "secret")
    assert isinstance(prof.build(), HTTPChatClient)
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "x"\nfoo = 1\n')
    with pytest.raises(HarnessError):
        ModelProfile.load(bad)
    stub = ModelProfile(name="s", kind="stub", response="<text>x</text>").build()
    assert stub.transcribe(b"", "") == "<text>x</text>"
