"""Resolved run configuration, serialized next to every output tree."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Caps, CorpusConfig
from .degrade import DegradeRanges
from .render import PerturbConfig, RenderConfig
from .tiers import ResourceTier, default_tier_table, load_tier_table

VARIANTS = ("clean", "degraded")


def load_mapping(path: str | Path) -> dict:
    """Read a JSON or TOML file into a dict."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _tuples(cls, data: dict):
    """Build a flat dataclass, turning JSON lists back into tuples."""
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise KeyError(f"unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


@dataclass
class RunConfig:
    corpus_path: str = ""
    fonts_dir: str = ""
    font_metadata: str = ""
    output_dir: str = "out"
    textures_dir: str | None = None
    procedural_textures: bool = True
    seed: int = 0
    variants: tuple[str, ...] = VARIANTS
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    tiers: dict[str, str] | None = None  # script -> High/Mid/Low; None uses the built-in table
    render: RenderConfig = field(default_factory=RenderConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    degrade: DegradeRanges = field(default_factory=DegradeRanges)

    def __post_init__(self):
        bad = set(self.variants) - set(VARIANTS)
        if bad:
            raise ValueError(f"unknown variants: {sorted(bad)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def tier_table(self) -> dict[str, ResourceTier]:
        return load_tier_table(self.tiers) if self.tiers else default_tier_table()

    def to_dict(self) -> dict:
        c = self.corpus
        return {
            "corpus_path": self.corpus_path,
            "fonts_dir": self.fonts_dir,
            "font_metadata": self.font_metadata,
            "output_dir": self.output_dir,
            "textures_dir": self.textures_dir,
            "procedural_textures": self.procedural_textures,
            "seed": self.seed,
            "variants": list(self.variants),
            "corpus": {
                "min_chars": c.min_chars,
                "max_chars": c.max_chars,
                "fallback_scripts": list(c.fallback_scripts),
                "caps": c.caps.to_mapping(),
            },
            "tiers": dict(sorted(self.tiers.items())) if self.tiers else None,
            "render": dataclasses.asdict(self.render),
            "perturb": {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self.perturb).items()},
            "degrade": self.degrade.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        corpus = data.pop("corpus", None) or {}
        cfg = CorpusConfig(
            min_chars=corpus.get("min_chars", 30),
            max_chars=corpus.get("max_chars", 100),
            fallback_scripts=tuple(corpus.get("fallback_scripts", ())),
            caps=Caps.from_mapping(corpus.get("caps", {})),
        )
        render = _tuples(RenderConfig, data.pop("render", None) or {})
        perturb = _tuples(PerturbConfig, data.pop("perturb", None) or {})
        degrade = DegradeRanges.from_dict(data.pop("degrade", None) or {})
        if "variants" in data:
            data["variants"] = tuple(data["variants"])
        return cls(corpus=cfg, render=render, perturb=perturb, degrade=degrade, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, ensure_ascii=False)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(load_mapping(path))
