"""Aged-document degradation: five stages applied in a fixed order.

1. background_rotation  paper texture (multiplicative blend), rotation
2. elastic_noise        smoothed displacement field, additive Gaussian noise
3. ink_effects          white dropout patches, ink fading with texture noise
4. resolution_jpeg      area downsample, bilinear upsample, JPEG round trip
5. perspective          independent corner shifts

All random values are drawn up front (``draw_params``) so the sidecar holds
every parameter that shaped the output.
"""

from __future__ import annotations

import io
from dataclasses import asdict, dataclass
from pathlib import Path

import cv2
import numpy as np
from PIL import Image

from .render import PageImage
from .seeding import derive_seed

STAGES = ("background_rotation", "elastic_noise", "ink_effects", "resolution_jpeg", "perspective")

PAPER_RGB = (242.0, 233.0, 212.0)
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")


class DegradeError(Exception):
    pass


@dataclass
class DegradeRanges:
    """Closed ranges the per-image draws come from."""

    texture_opacity: tuple[float, float] = (1.0, 1.0)
    rotation_deg: tuple[float, float] = (-2.0, 2.0)
    elastic_kernel: int = 17
    elastic_amplitude_px: tuple[float, float] = (0.0, 8.0)
    noise_sigma: tuple[float, float] = (8.0, 8.0)
    patch_count: tuple[int, int] = (10, 30)
    patch_max_wh: tuple[int, int] = (40, 15)
    ink_scale: tuple[float, float] = (0.50, 0.85)
    texture_noise_sigma: tuple[float, float] = (10.0, 10.0)
    downsample: tuple[float, float] = (0.40, 0.70)
    jpeg_quality: tuple[int, int] = (30, 80)
    perspective_frac: tuple[float, float] = (0.0, 0.10)

    @classmethod
    def identity(cls) -> "DegradeRanges":
        return cls(
            texture_opacity=(0.0, 0.0), rotation_deg=(0.0, 0.0), elastic_amplitude_px=(0.0, 0.0),
            noise_sigma=(0.0, 0.0), patch_count=(0, 0), ink_scale=(1.0, 1.0),
            texture_noise_sigma=(0.0, 0.0), downsample=(1.0, 1.0), jpeg_quality=(100, 100),
            perspective_frac=(0.0, 0.0),
        )

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "DegradeRanges":
        out = cls()
        for k, v in data.items():
            if not hasattr(out, k):
                raise KeyError(f"unknown degradation parameter {k!r}")
            setattr(out, k, tuple(v) if isinstance(v, list) else v)
        return out


def draw_params(ranges: DegradeRanges, rng: np.random.Generator, width: int, height: int) -> dict:
    """Sample one concrete parameter set, grouped by stage."""
    u = lambda lo_hi: float(rng.uniform(*lo_hi)) if lo_hi[0] != lo_hi[1] else float(lo_hi[0])  # noqa: E731
    n_patches = int(rng.integers(ranges.patch_count[0], ranges.patch_count[1] + 1))
    pw, ph = ranges.patch_max_wh
    patches = []
    for _ in range(n_patches):
        w, h = int(rng.integers(1, pw + 1)), int(rng.integers(1, ph + 1))
        x, y = int(rng.integers(0, max(width - w, 0) + 1)), int(rng.integers(0, max(height - h, 0) + 1))
        patches.append([x, y, w, h])
    frac = u(ranges.perspective_frac)
    corners = [[float(rng.uniform(-frac, frac) * width), float(rng.uniform(-frac, frac) * height)] for _ in range(4)]
    return {
        "background_rotation": {"texture_opacity": u(ranges.texture_opacity), "rotation_deg": u(ranges.rotation_deg)},
        "elastic_noise": {
            "kernel": ranges.elastic_kernel,
            "amplitude_px": u(ranges.elastic_amplitude_px),
            "noise_sigma": u(ranges.noise_sigma),
        },
        "ink_effects": {
            "patches": patches,
            "ink_scale": u(ranges.ink_scale),
            "texture_noise_sigma": u(ranges.texture_noise_sigma),
        },
        "resolution_jpeg": {
            "downsample": u(ranges.downsample),
            "jpeg_quality": int(rng.integers(ranges.jpeg_quality[0], ranges.jpeg_quality[1] + 1)),
        },
        "perspective": {"frac": frac, "corners": corners},
    }


class TextureSource:
    """Scanned paper textures from a directory, or a procedural fallback."""

    def __init__(self, directory: str | Path | None = None, procedural_fallback: bool = True):
        self.paths: list[Path] = []
        if directory is not None:
            d = Path(directory)
            self.paths = sorted(p for p in d.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES) if d.is_dir() else []
        if not self.paths and not procedural_fallback:
            raise DegradeError(f"no paper textures in {directory!r} and procedural fallback disabled")

    @property
    def kind(self) -> str:
        return "pool" if self.paths else "procedural"

    def sample(self, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
        if self.paths:
            return self._crop(self.paths[int(rng.integers(len(self.paths)))], height, width, rng)
        return procedural_paper(height, width, rng)

    @staticmethod
    def _crop(path: Path, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
        tex = np.asarray(Image.open(path).convert("RGB"), dtype=np.float32)
        th, tw = tex.shape[:2]
        scale = max(height / th, width / tw, 1.0)
        if scale > 1.0:
            tex = cv2.resize(tex, (int(np.ceil(tw * scale)), int(np.ceil(th * scale))), interpolation=cv2.INTER_LINEAR)
            th, tw = tex.shape[:2]
        y, x = int(rng.integers(0, th - height + 1)), int(rng.integers(0, tw - width + 1))
        return tex[y:y + height, x:x + width]


def procedural_paper(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Beige paper: multi-octave value noise plus fine grain, float32 RGB."""
    field = np.zeros((height, width), np.float32)
    for cells, amp in ((4, 10.0), (12, 5.0), (40, 2.5)):
        gh, gw = max(2, height * cells // max(width, 1) + 2), cells + 2
        grid = rng.uniform(-1, 1, (gh, gw)).astype(np.float32)
        field += amp * cv2.resize(grid, (width, height), interpolation=cv2.INTER_CUBIC)
    field += rng.normal(0, 2.0, (height, width)).astype(np.float32)
    paper = np.stack([field + c for c in PAPER_RGB], axis=-1)
    return np.clip(paper, 0, 255)


def _as_rgb(pixels: np.ndarray) -> np.ndarray:
    return np.repeat(pixels[..., None], 3, axis=2) if pixels.ndim == 2 else pixels


def _to_u8(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


def _background_rotation(px, d, rng, textures):
    img = _as_rgb(px).astype(np.float32)
    opacity = d["texture_opacity"]
    if opacity > 0:
        tex = textures.sample(img.shape[0], img.shape[1], rng)
        paper = 255.0 * (1 - opacity) + tex * opacity
        img = img / 255.0 * paper
    img = _to_u8(img)
    if d["rotation_deg"]:
        h, w = img.shape[:2]
        m = cv2.getRotationMatrix2D((w / 2, h / 2), d["rotation_deg"], 1.0)
        img = cv2.warpAffine(img, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REFLECT)
    return img


def elastic_field(shape: tuple[int, int], kernel: int, amplitude: float, rng: np.random.Generator):
    """Displacement fields (dx, dy) with max |displacement| equal to ``amplitude``."""
    fields = []
    for _ in range(2):
        f = cv2.GaussianBlur(rng.uniform(-1, 1, shape).astype(np.float32), (kernel, kernel), 0)
        peak = float(np.abs(f).max())
        fields.append(f * (amplitude / peak) if peak > 0 else f * 0)
    return fields


def _elastic_noise(px, d, rng, textures):
    img = _as_rgb(px)
    h, w = img.shape[:2]
    if d["amplitude_px"] > 0:
        dx, dy = elastic_field((h, w), d["kernel"], d["amplitude_px"], rng)
        gx, gy = np.meshgrid(np.arange(w, dtype=np.float32), np.arange(h, dtype=np.float32))
        img = cv2.remap(img, gx + dx, gy + dy, interpolation=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REFLECT)
    if d["noise_sigma"] > 0:
        img = _to_u8(img.astype(np.float32) + rng.normal(0, d["noise_sigma"], img.shape))
    return img


def _ink_effects(px, d, rng, textures):
    img = _as_rgb(px).copy()
    for x, y, w, h in d["patches"]:
        img[y:y + h, x:x + w] = 255
    darkness = 255.0 - img.astype(np.float32)
    faded = darkness * d["ink_scale"]
    if d["texture_noise_sigma"] > 0:
        # Noise is weighted by ink coverage so bare paper keeps its own texture.
        noise = rng.normal(0, d["texture_noise_sigma"], img.shape[:2]).astype(np.float32)[..., None]
        faded = faded + noise * (darkness / 255.0)
    return _to_u8(255.0 - faded)


def jpeg_roundtrip(img: np.ndarray, quality: int) -> np.ndarray:
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="JPEG", quality=int(quality))
    return np.asarray(Image.open(io.BytesIO(buf.getvalue())).convert("RGB"))


def downsample_size(width: int, height: int, frac: float) -> tuple[int, int]:
    return max(1, int(round(width * frac))), max(1, int(round(height * frac)))


def _resolution_jpeg(px, d, rng, textures):
    img = _as_rgb(px)
    h, w = img.shape[:2]
    if d["downsample"] != 1.0:
        small = cv2.resize(img, downsample_size(w, h, d["downsample"]), interpolation=cv2.INTER_AREA)
        img = cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR)
    return jpeg_roundtrip(img, d["jpeg_quality"])


def perspective_matrix(width: int, height: int, corners: list) -> np.ndarray:
    src = np.float32([[0, 0], [width, 0], [width, height], [0, height]])
    dst = src + np.float32(corners)
    return cv2.getPerspectiveTransform(src, dst)


def _perspective(px, d, rng, textures):
    img = _as_rgb(px)
    if not any(dx or dy for dx, dy in d["corners"]):
        return img.copy()
    h, w = img.shape[:2]
    m = perspective_matrix(w, h, d["corners"])
    return cv2.warpPerspective(img, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE)


_STAGE_FUNCS = {
    "background_rotation": _background_rotation,
    "elastic_noise": _elastic_noise,
    "ink_effects": _ink_effects,
    "resolution_jpeg": _resolution_jpeg,
    "perspective": _perspective,
}


def stage(name: str, image: PageImage, draw: dict, seed: int, textures: TextureSource | None = None) -> PageImage:
    """Apply a single named stage with explicit draws."""
    if name not in _STAGE_FUNCS:
        raise DegradeError(f"unknown stage {name!r}; expected one of {', '.join(STAGES)}")
    out = _STAGE_FUNCS[name](image.pixels, draw, np.random.default_rng(seed), textures or TextureSource())
    return PageImage(out, dict(image.meta))


def apply_degradation(
    image: PageImage,
    ranges: DegradeRanges | None = None,
    seed: int = 0,
    textures: TextureSource | None = None,
) -> PageImage:
    ranges = ranges or DegradeRanges()
    textures = textures or TextureSource()
    rng = np.random.default_rng(seed)
    draws = draw_params(ranges, rng, image.width, image.height)
    seeds = {name: derive_seed(seed, name) for name in STAGES}
    out = PageImage(image.pixels, {})
    for name in STAGES:
        out = stage(name, out, draws[name], seeds[name], textures)
    out.meta = {**image.meta, "degrade": {"draws": draws, "stage_seeds": seeds, "texture_source": textures.kind}}
    return out


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    return float("inf") if mse == 0 else 10 * np.log10(255.0**2 / mse)
