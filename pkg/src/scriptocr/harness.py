"""Model inference over rendered images: prompts, clients, extraction, resumable runs."""

from __future__ import annotations

import base64
import dataclasses
import hashlib
import json
import logging
import os
import re
import threading
import time
from collections.abc import Callable, Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .uniprops import WHITE_SPACE

log = logging.getLogger(__name__)

PLAIN_PROMPT = (
    "Transcribe all of the text shown in this image exactly as it appears. "
    "Wrap the transcription in <{tag}></{tag}> tags and do not add any commentary or explanation."
)
HINT_TEMPLATE = (
    "\nHint: the text is in the language '{language}', written in the script '{script}' (ISO 15924). "
    "The image contains exactly these characters: {chars}"
)
MIN_HINT_CHARS = 10


class HarnessError(Exception):
    pass


class PromptError(ValueError):
    pass


def hint_charset(text: str) -> str:
    """Distinct non-whitespace characters of ``text`` sorted by code point."""
    return "".join(sorted({ch for ch in text if ch not in WHITE_SPACE}))


def build_prompt(mode: str, sentence: Mapping | None = None, tag: str = "text", template: str = PLAIN_PROMPT) -> str:
    prompt = template.format(tag=tag)
    if mode == "plain":
        return prompt
    if mode != "hinted":
        raise PromptError(f"unknown prompt mode {mode!r}")
    if sentence is None:
        raise PromptError("hinted prompts need the sentence")
    text = sentence["text"]
    if len(text) < MIN_HINT_CHARS:
        raise PromptError(f"hinted prompt refused: text has {len(text)} < {MIN_HINT_CHARS} characters")
    return prompt + HINT_TEMPLATE.format(
        language=sentence.get("language", "und"), script=sentence["script"], chars=hint_charset(text)
    )


@dataclass(frozen=True)
class Extraction:
    text: str
    tagged: bool  # a tag pair was found
    clean: bool  # exactly one non-nested, well-formed pair

    @property
    def fallback(self) -> bool:
        return not self.clean


def extract_transcription(raw: str, tag: str = "text") -> Extraction:
    """Content of the first (outermost) tag pair, with fallbacks for broken tagging."""
    open_t, close_t = f"<{tag}>", f"</{tag}>"
    tokens = [(m.start(), m.group()) for m in re.finditer(re.escape(open_t) + "|" + re.escape(close_t), raw)]
    first_open = next((i for i, (_, t) in enumerate(tokens) if t == open_t), None)
    if first_open is None:  # untagged, or only stray closing tags: keep everything
        return Extraction(raw.strip(), False, False)

    start = tokens[first_open][0] + len(open_t)
    depth, nested = 0, False
    for pos, t in tokens[first_open:]:
        if t == open_t:
            depth += 1
            nested = nested or depth > 1
        else:
            depth -= 1
            if depth == 0:
                return Extraction(raw[start:pos], True, not nested and first_open == 0)
    return Extraction(raw[start:].strip(), True, False)


# -- clients ------------------------------------------------------------------

class ModelClient(Protocol):
    name: str
    chat_template: bool

    def transcribe(self, image: bytes, prompt: str) -> str: ...


class StubClient:
    """Local client backed by a plain function, for tests and dry runs."""

    def __init__(self, name: str, fn: Callable[[bytes, str], str], chat_template: bool = True):
        self.name, self.fn, self.chat_template = name, fn, chat_template

    def transcribe(self, image: bytes, prompt: str) -> str:
        return self.fn(image, prompt)


def image_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class OracleClient(StubClient):
    """Answers with the ground truth of whichever manifest image it is shown."""

    def __init__(self, manifest: Iterable[Mapping], images_dir: str | Path, tag: str = "text", name: str = "oracle"):
        lookup = {}
        for row in manifest:
            for variant in ("clean", "degraded"):
                p = Path(images_dir) / variant / f"{row['id']}.png"
                if p.exists():
                    lookup[image_digest(p.read_bytes())] = row["text"]
        super().__init__(name, lambda img, _prompt: f"<{tag}>{lookup.get(image_digest(img), '')}</{tag}>")


class HTTPChatClient:
    """Generic OpenAI-style endpoint client.

    With ``chat_template`` the request goes to ``/chat/completions`` as a
    multimodal chat message; otherwise the raw prompt and image go to
    ``/completions``.
    """

    def __init__(
        self,
        name: str,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        chat_template: bool = True,
        timeout_s: float = 120.0,
        max_tokens: int = 1024,
        transport=None,
    ):
        import httpx

        self.name, self.model, self.chat_template, self.max_tokens = name, model, chat_template, max_tokens
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = httpx.Client(base_url=endpoint.rstrip("/"), headers=headers, timeout=timeout_s, transport=transport)

    def transcribe(self, image: bytes, prompt: str) -> str:
        import httpx

        b64 = base64.b64encode(image).decode("ascii")
        if self.chat_template:
            path, body = "/chat/completions", {
                "model": self.model,
                "temperature": 0,
                "max_tokens": self.max_tokens,
                "messages": [{"role": "user", "content": [
                    {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}},
                    {"type": "text", "text": prompt},
                ]}],
            }
        else:
            path, body = "/completions", {
                "model": self.model, "temperature": 0, "max_tokens": self.max_tokens,
                "prompt": prompt, "images": [b64],
            }
        try:
            resp = self._http.post(path, json=body)
        except httpx.TimeoutException as exc:
            raise TimeoutError(f"{self.name}: request timed out") from exc
        resp.raise_for_status()
        data = resp.json()
        choice = data["choices"][0]
        if self.chat_template:
            content = choice["message"]["content"]
            if isinstance(content, list):
                content = "".join(part.get("text", "") for part in content)
            return content or ""
        return choice.get("text", "")


@dataclass
class ModelProfile:
    name: str
    kind: str = "http"  # http | stub | oracle
    endpoint: str = ""
    model: str = ""
    api_key_env: str | None = None
    tag: str = "text"
    chat_template: bool = True
    timeout_s: float = 120.0
    response: str = ""  # stub only

    @classmethod
    def load(cls, path: str | Path) -> "ModelProfile":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        data = data.get("model", data)
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise HarnessError(f"unknown profile keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def build(self, manifest: Iterable[Mapping] = (), images_dir: str | Path | None = None) -> ModelClient:
        if self.kind == "stub":
            return StubClient(self.name, lambda _img, _p: self.response, self.chat_template)
        if self.kind == "oracle":
            if images_dir is None:
                raise HarnessError("oracle client needs the images directory")
            return OracleClient(manifest, images_dir, self.tag, self.name)
        if self.kind != "http":
            raise HarnessError(f"unknown client kind {self.kind!r}")
        if not self.endpoint:
            raise HarnessError(f"profile {self.name!r} has no endpoint")
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if self.api_key_env and not key:
            raise HarnessError(f"environment variable {self.api_key_env} is not set")
        return HTTPChatClient(self.name, self.endpoint, self.model or self.name, key, self.chat_template, self.timeout_s)


# -- runs ---------------------------------------------------------------------

@dataclass
class PredictionRecord:
    sample_id: str
    model: str
    variant: str
    raw_output: str | None
    extracted_text: str | None
    prompt_mode: str
    latency_ms: float
    error: str | None = None
    tag_fallback: bool = False

    def __post_init__(self):
        if (self.extracted_text is None) == (self.error is None):
            raise ValueError("exactly one of extracted_text and error must be set")

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.sample_id, self.variant, self.model, self.prompt_mode)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), ensure_ascii=False, sort_keys=True)


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(PredictionRecord(**json.loads(line)))
    return out


@dataclass
class RetryPolicy:
    attempts: int = 3
    base_delay_s: float = 2.0


def _call_with_retry(client: ModelClient, image: bytes, prompt: str, retry: RetryPolicy, sleep) -> str:
    last: Exception | None = None
    for attempt in range(retry.attempts):
        try:
            return client.transcribe(image, prompt)
        except Exception as exc:  # noqa: BLE001 - any client failure is retried, then recorded
            last = exc
            if attempt + 1 < retry.attempts:
                sleep(retry.base_delay_s * 2**attempt)
    raise last  # type: ignore[misc]


def run_eval(
    manifest: Iterable[Mapping],
    images_dir: str | Path,
    client: ModelClient,
    out_path: str | Path,
    mode: str = "plain",
    variants: Iterable[str] = ("clean",),
    concurrency_limit: int = 4,
    resume: bool = False,
    tag: str = "text",
    retry: RetryPolicy | None = None,
    clock: Callable[[], float] = time.perf_counter,
    sleep: Callable[[float], None] = time.sleep,
    limit: int | None = None,
) -> list[PredictionRecord]:
    """One prediction per (sample, variant), appended as they finish.

    Images are sent byte-for-byte as rendered. With ``resume`` existing
    records are kept and skipped. On completion the file is rewritten in
    manifest order, so an interrupted-then-resumed run ends up identical to
    an uninterrupted one.
    """
    retry = retry or RetryPolicy()
    rows = list(manifest)
    variants = tuple(variants)
    out_path = Path(out_path)

    jobs = []
    missing = []
    for row in rows:
        for v in variants:
            img = Path(images_dir) / v / f"{row['id']}.png"
            if not img.exists():
                missing.append(str(img))
            jobs.append((row, v, img))
    if missing:
        raise HarnessError(f"{len(missing)} manifest images missing, e.g. {missing[:3]}")

    done: dict[tuple, PredictionRecord] = {}
    if resume and out_path.exists():
        for rec in read_predictions(out_path):
            done[rec.key] = rec
    elif out_path.exists():
        out_path.unlink()

    todo = [(row, v, img) for row, v, img in jobs if (row["id"], v, client.name, mode) not in done]
    if limit is not None:
        todo = todo[:limit]
    lock = threading.Lock()
    out_path.parent.mkdir(parents=True, exist_ok=True)

    def work(row, variant, img_path) -> PredictionRecord:
        try:
            prompt = build_prompt(mode, row, tag)
        except PromptError as exc:
            return PredictionRecord(row["id"], client.name, variant, None, None, mode, 0.0, error=str(exc))
        image = img_path.read_bytes()
        t0 = clock()
        try:
            raw = _call_with_retry(client, image, prompt, retry, sleep)
        except Exception as exc:  # noqa: BLE001
            ms = (clock() - t0) * 1000
            return PredictionRecord(row["id"], client.name, variant, None, None, mode, ms, error=f"{type(exc).__name__}: {exc}")
        ms = (clock() - t0) * 1000
        ext = extract_transcription(raw, tag)
        return PredictionRecord(row["id"], client.name, variant, raw, ext.text, mode, ms, tag_fallback=ext.fallback)

    with open(out_path, "a", encoding="utf-8") as fh, ThreadPoolExecutor(max_workers=max(1, concurrency_limit)) as pool:
        futures = [pool.submit(work, *job) for job in todo]
        for fut in as_completed(futures):
            rec = fut.result()
            with lock:
                fh.write(rec.to_json() + "\n")
                fh.flush()
                done[rec.key] = rec

    ordered = [done[k] for k in ((r["id"], v, client.name, mode) for r, v, _ in jobs) if k in done]
    extra = [rec for key, rec in done.items() if (key[0], key[1]) not in {(r["id"], v) for r, v, _ in jobs}]
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in ordered + extra:
            fh.write(rec.to_json() + "\n")
    os.replace(tmp, out_path)
    return ordered
