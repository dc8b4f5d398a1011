"""Shaping (HarfBuzz), line layout and rasterization (FreeType) of one sentence.

Coordinates are pixels. ``x`` grows rightwards and ``y`` downwards (image
convention); HarfBuzz y offsets are flipped on the way in.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import freetype
import numpy as np
import uharfbuzz as hb

from .seeding import derive_seed
from .uniprops import is_white, renders_empty

log = logging.getLogger(__name__)


class ShapingError(Exception):
    pass


@dataclass
class RenderConfig:
    font_px: int = 48
    canvas_width_px: int = 1000
    padding_px: int = 40
    rotation_deg: float = 1.0  # clean rotation drawn from [-rotation_deg, +rotation_deg]
    line_spacing: float = 1.3  # multiple of font_px
    background: int = 255

    def __post_init__(self):
        if min(self.font_px, self.canvas_width_px, self.padding_px) <= 0 or self.line_spacing <= 0:
            raise ValueError("render sizes must be positive")
        if self.rotation_deg < 0:
            raise ValueError("rotation bound must be >= 0")
        if self.canvas_width_px <= 2 * self.padding_px:
            raise ValueError("canvas narrower than its padding")

    @property
    def usable_width(self) -> int:
        return self.canvas_width_px - 2 * self.padding_px

    @property
    def line_height(self) -> float:
        return self.line_spacing * self.font_px


@dataclass
class PerturbConfig:
    spacing_px: tuple[int, int] = (-2, 4)
    p_dilate: float = 0.4
    p_erode: float = 0.25
    dilate_first: bool = True  # mutually exclusive ops; which one is sampled first
    kernel_px: int = 2
    line_jitter_px: float = 3.0
    curl_max_px: float = 6.0

    @classmethod
    def identity(cls) -> "PerturbConfig":
        return cls(spacing_px=(0, 0), p_dilate=0.0, p_erode=0.0, line_jitter_px=0.0, curl_max_px=0.0)


# -- font loading -------------------------------------------------------------

@dataclass
class LoadedFont:
    path: str
    upem: int
    hb_font: hb.Font
    ft_face: freetype.Face


@functools.lru_cache(maxsize=128)
def load_font(path: str) -> LoadedFont:
    data = Path(path).read_bytes()
    face = hb.Face(data)
    font = hb.Font(face)
    upem = face.upem
    font.scale = (upem, upem)
    return LoadedFont(str(path), upem, font, freetype.Face(str(path)))


def _ft_sized(font: LoadedFont, px: int) -> freetype.Face:
    face = font.ft_face
    if face.is_scalable:
        face.set_pixel_sizes(0, px)
    return face


@functools.lru_cache(maxsize=65536)
def glyph_bitmap(path: str, gid: int, px: int) -> tuple[np.ndarray, int, int]:
    """Anti-aliased coverage bitmap (uint8) with its left/top bearings."""
    face = _ft_sized(load_font(path), px)
    face.load_glyph(gid, freetype.FT_LOAD_RENDER | freetype.FT_LOAD_NO_HINTING)
    slot = face.glyph
    bmp = slot.bitmap
    if bmp.rows == 0 or bmp.width == 0:
        arr = np.zeros((0, 0), np.uint8)
    else:
        arr = np.array(bmp.buffer, dtype=np.uint8).reshape(bmp.rows, bmp.pitch)[:, : bmp.width].copy()
    return arr, slot.bitmap_left, slot.bitmap_top


@functools.lru_cache(maxsize=65536)
def glyph_has_ink(path: str, gid: int) -> bool:
    """True if the glyph has a nonzero-area outline (or a non-blank bitmap for bitmap fonts)."""
    font = load_font(path)
    face = font.ft_face
    if face.is_scalable:
        face.load_glyph(gid, freetype.FT_LOAD_NO_SCALE | freetype.FT_LOAD_NO_BITMAP)
        outline = face.glyph.outline
        if outline.n_contours <= 0 or outline.n_points < 3:
            return False
        bbox = outline.get_bbox()
        return (bbox.xMax - bbox.xMin) > 0 and (bbox.yMax - bbox.yMin) > 0
    arr, _, _ = glyph_bitmap(path, gid, 48)
    return bool(arr.size and arr.any())


# -- shaping ------------------------------------------------------------------

@dataclass
class GlyphRun:
    text: str
    font_path: str
    direction: str
    font_px: int
    glyph_ids: list[int] = field(default_factory=list)
    clusters: list[int] = field(default_factory=list)  # index of first source codepoint
    advances: list[float] = field(default_factory=list)
    x_offsets: list[float] = field(default_factory=list)
    y_offsets: list[float] = field(default_factory=list)  # image convention (down positive)
    ascender: float = 0.0
    descender: float = 0.0  # positive distance below baseline

    def __len__(self) -> int:
        return len(self.glyph_ids)

    def cluster_spans(self) -> dict[int, str]:
        """Source substring belonging to each cluster start."""
        starts = sorted(set(self.clusters))
        spans = {}
        for i, s in enumerate(starts):
            end = starts[i + 1] if i + 1 < len(starts) else len(self.text)
            spans[s] = self.text[s:end]
        return spans


def shape(text: str, font_path: str | Path, direction: str = "LTR", font_px: int = 48) -> GlyphRun:
    """Shape ``text`` into a glyph run in visual (left-to-right) order."""
    font_path = str(font_path)
    try:
        font = load_font(font_path)
        buf = hb.Buffer()
        buf.add_codepoints([ord(c) for c in text])
        buf.direction = "rtl" if direction == "RTL" else "ltr"
        buf.guess_segment_properties()
        hb.shape(font.hb_font, buf, {})
    except Exception as exc:  # noqa: BLE001 - engine errors are re-raised with context
        raise ShapingError(f"shaping failed for font {font_path}: {exc}") from exc

    scale = font_px / font.upem
    ext = font.hb_font.get_font_extents("ltr")
    run = GlyphRun(
        text=text,
        font_path=font_path,
        direction=direction,
        font_px=font_px,
        ascender=ext.ascender * scale,
        descender=-ext.descender * scale,
    )
    for info, pos in zip(buf.glyph_infos or [], buf.glyph_positions or []):
        run.glyph_ids.append(info.codepoint)
        run.clusters.append(info.cluster)
        run.advances.append(pos.x_advance * scale)
        run.x_offsets.append(pos.x_offset * scale)
        run.y_offsets.append(-pos.y_offset * scale)
    return run


def render_problems(text: str, font_path: str | Path, direction: str = "LTR") -> list[str]:
    """Reasons why ``font_path`` cannot render ``text``; empty when it can.

    Fails on any .notdef output, and on inkless glyphs beyond what the
    cluster's whitespace, marks and format characters account for.
    """
    run = shape(text, font_path, direction)
    problems = []
    spans = run.cluster_spans()
    empty_by_cluster: dict[int, int] = {}
    for gid, cl in zip(run.glyph_ids, run.clusters):
        if gid == 0:
            problems.append(f".notdef for {spans[cl]!r}")
        elif not glyph_has_ink(run.font_path, gid):
            empty_by_cluster[cl] = empty_by_cluster.get(cl, 0) + 1
    for cl, n_empty in sorted(empty_by_cluster.items()):
        exempt = sum(1 for ch in spans[cl] if renders_empty(ch))
        if n_empty > exempt:
            problems.append(f"empty glyph for {spans[cl]!r}")
    return problems


# -- layout -------------------------------------------------------------------

@dataclass(frozen=True)
class PlacedGlyph:
    gid: int
    x: float  # pen x + x offset, absolute on the canvas
    y: float  # vertical offset from the baseline
    cluster: int
    advance: float


@dataclass
class Line:
    glyphs: list[PlacedGlyph]
    baseline: float
    width: float
    direction: str


@dataclass
class Layout:
    lines: list[Line]
    font_path: str
    font_px: int
    width: int
    height: int


def _tokens(run: GlyphRun) -> list[tuple[bool, list[int]]]:
    """Split logical-order glyph indices into (is_space, indices) tokens."""
    spans = run.cluster_spans()
    order = range(len(run)) if run.direction != "RTL" else range(len(run) - 1, -1, -1)
    tokens: list[tuple[bool, list[int]]] = []
    for i in order:
        space = all(is_white(ch) for ch in spans[run.clusters[i]])
        if tokens and tokens[-1][0] == space:
            tokens[-1][1].append(i)
        else:
            tokens.append((space, [i]))
    return tokens


def layout(run: GlyphRun, config: RenderConfig) -> Layout:
    """Greedy line wrapping at whitespace, then absolute placement on the canvas."""
    usable = config.usable_width
    width_of = lambda idx: sum(run.advances[i] for i in idx)  # noqa: E731

    logical_lines: list[list[int]] = []
    current: list[int] = []
    pending_space: list[int] = []
    for is_space, idx in _tokens(run):
        if is_space:
            if current:
                pending_space = idx
            else:
                current.extend(idx)
            continue
        candidate = current + pending_space + idx
        if current and width_of(candidate) > usable:
            logical_lines.append(current)
            current = list(idx)
        else:
            current = candidate
        pending_space = []
        if width_of(idx) > usable:
            log.warning("unbreakable run of %.0f px exceeds usable width %d px", width_of(idx), usable)
    if current:
        logical_lines.append(current)

    lh = config.line_height
    baseline_in_line = (lh - (run.ascender + run.descender)) / 2 + run.ascender
    lines = []
    for n, logical in enumerate(logical_lines):
        # HarfBuzz emits RTL runs in visual order, so ascending index is left-to-right.
        visual = sorted(logical)
        w = width_of(visual)
        x0 = config.canvas_width_px - config.padding_px - w if run.direction == "RTL" else config.padding_px
        pen, glyphs = x0, []
        for i in visual:
            glyphs.append(PlacedGlyph(run.glyph_ids[i], pen + run.x_offsets[i], run.y_offsets[i], run.clusters[i], run.advances[i]))
            pen += run.advances[i]
        lines.append(Line(glyphs, config.padding_px + n * lh + baseline_in_line, w, run.direction))

    height = int(np.ceil(2 * config.padding_px + max(1, len(lines)) * lh))
    return Layout(lines, run.font_path, run.font_px, config.canvas_width_px, height)


# -- rasterization ------------------------------------------------------------

@dataclass
class PageImage:
    pixels: np.ndarray  # uint8, HxW (gray) or HxWx3 (RGB)
    meta: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_pil(self):
        from PIL import Image

        return Image.fromarray(self.pixels)

    def save_png(self, path: str | Path) -> None:
        # Fixed compression settings and no metadata chunks keep output byte-stable.
        self.to_pil().save(path, format="PNG", optimize=False, compress_level=6)


def _morph(bmp: np.ndarray, op: str, k: int) -> tuple[np.ndarray, int]:
    """Apply dilation/erosion; returns the new bitmap and the pad added on each side."""
    if op == "none" or bmp.size == 0:
        return bmp, 0
    padded = np.pad(bmp, k)
    kernel = np.ones((k, k), np.uint8)
    out = cv2.dilate(padded, kernel) if op == "dilate" else cv2.erode(padded, kernel)
    return out, k


def draw_lines(page: Layout, ops: list[list[str]] | None = None, kernel_px: int = 2) -> np.ndarray:
    """Composite glyph coverage onto a white grayscale canvas (no rotation)."""
    cover = np.zeros((page.height, page.width), np.uint8)
    for li, line in enumerate(page.lines):
        for gi, g in enumerate(line.glyphs):
            bmp, left, top = glyph_bitmap(page.font_path, g.gid, page.font_px)
            if bmp.size == 0:
                continue
            op = ops[li][gi] if ops else "none"
            bmp, pad = _morph(bmp, op, kernel_px)
            x = int(round(g.x)) + left - pad
            y = int(round(line.baseline + g.y)) - top - pad
            h, w = bmp.shape
            x0, y0, x1, y1 = max(x, 0), max(y, 0), min(x + w, page.width), min(y + h, page.height)
            if x1 <= x0 or y1 <= y0:
                continue
            region = cover[y0:y1, x0:x1]
            np.maximum(region, bmp[y0 - y:y1 - y, x0 - x:x1 - x], out=region)
    return 255 - cover


def rotate(pixels: np.ndarray, angle_deg: float, border=255) -> np.ndarray:
    """Rotate about the image center keeping the canvas size."""
    if angle_deg == 0:
        return pixels.copy()
    h, w = pixels.shape[:2]
    m = cv2.getRotationMatrix2D((w / 2, h / 2), angle_deg, 1.0)
    if pixels.ndim == 3 and not isinstance(border, (tuple, list)):
        border = (border,) * pixels.shape[2]
    return cv2.warpAffine(pixels, m, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=border)


def rasterize_clean(page: Layout, config: RenderConfig, seed: int) -> PageImage:
    rng = np.random.default_rng(seed)
    angle = float(rng.uniform(-config.rotation_deg, config.rotation_deg)) if config.rotation_deg else 0.0
    pixels = rotate(draw_lines(page), angle, config.background)
    return PageImage(pixels, {"rotation_deg": angle})


@dataclass
class Perturbation:
    layout: Layout
    ops: list[list[str]]
    spacing: list[list[int]]  # one delta per cluster boundary, visual order
    jitter: list[float]
    curl_px: float


def perturb_glyphs(page: Layout, seed: int, config: PerturbConfig | None = None) -> Perturbation:
    """Glyph-level perturbations for the degraded variant.

    Spacing deltas shift whole clusters so marks stay on their base. The
    curl term displaces glyphs by ``a * (x - x_center)**2`` with ``a`` chosen
    so the displacement reaches ``curl_px`` at the canvas edges.
    """
    config = config or PerturbConfig()
    rng = np.random.default_rng(seed)
    lo, hi = config.spacing_px
    curl = float(rng.uniform(-config.curl_max_px, config.curl_max_px)) if config.curl_max_px else 0.0
    x_center = page.width / 2
    a = curl / x_center**2

    new_lines, all_ops, all_spacing, jitters = [], [], [], []
    for line in page.lines:
        jitter = float(rng.uniform(-config.line_jitter_px, config.line_jitter_px)) if config.line_jitter_px else 0.0
        ops, deltas, glyphs = [], [], []
        shift = 0
        for gi, g in enumerate(line.glyphs):
            if gi and g.cluster != line.glyphs[gi - 1].cluster:
                d = int(rng.integers(lo, hi + 1))
                deltas.append(d)
                shift += d
            ops.append(_draw_op(rng, config))
            x = g.x + shift
            glyphs.append((g, x))
        if line.direction == "RTL":
            # Keep right alignment: the line grows leftwards.
            glyphs = [(g, x - shift) for g, x in glyphs]
        placed = []
        for g, x in glyphs:
            dy = float(np.clip(a * (x - x_center) ** 2, -abs(curl), abs(curl)))
            placed.append(dataclasses.replace(g, x=x, y=g.y + dy))
        glyphs = placed
        new_lines.append(Line(glyphs, line.baseline + jitter, line.width + shift, line.direction))
        all_ops.append(ops)
        all_spacing.append(deltas)
        jitters.append(jitter)
    new_layout = dataclasses.replace(page, lines=new_lines)
    return Perturbation(new_layout, all_ops, all_spacing, jitters, curl)


def _draw_op(rng: np.random.Generator, config: PerturbConfig) -> str:
    u, v = rng.random(), rng.random()
    if config.dilate_first:
        if u < config.p_dilate:
            return "dilate"
        return "erode" if v < config.p_erode else "none"
    if u < config.p_erode:
        return "erode"
    return "dilate" if v < config.p_dilate else "none"


def rasterize_perturbed(p: Perturbation, config: PerturbConfig | None = None) -> PageImage:
    config = config or PerturbConfig()
    pixels = draw_lines(p.layout, p.ops, config.kernel_px)
    meta = {
        "ops": p.ops,
        "spacing_px": p.spacing,
        "line_jitter_px": p.jitter,
        "curl_px": p.curl_px,
    }
    return PageImage(pixels, meta)


def render_clean(text: str, font_path: str | Path, direction: str, config: RenderConfig, seed: int) -> PageImage:
    page = layout(shape(text, font_path, direction, config.font_px), config)
    img = rasterize_clean(page, config, seed)
    img.meta["lines"] = len(page.lines)
    return img


def render_perturbed(
    text: str,
    font_path: str | Path,
    direction: str,
    config: RenderConfig,
    seed: int,
    perturb: PerturbConfig | None = None,
) -> PageImage:
    page = layout(shape(text, font_path, direction, config.font_px), config)
    p = perturb_glyphs(page, derive_seed(seed, "glyphs"), perturb)
    img = rasterize_perturbed(p, perturb)
    img.meta["lines"] = len(page.lines)
    return img


def contact_sheet(images: list[np.ndarray], columns: int = 2, gap: int = 8) -> np.ndarray:
    """Tile images into one grayscale sheet for manual per-script inspection."""
    if not images:
        return np.full((1, 1), 255, np.uint8)
    gray = [im if im.ndim == 2 else cv2.cvtColor(im, cv2.COLOR_RGB2GRAY) for im in images]
    rows = [gray[i:i + columns] for i in range(0, len(gray), columns)]
    cell_w = max(im.shape[1] for im in gray)
    row_h = [max(im.shape[0] for im in r) for r in rows]
    sheet = np.full((sum(row_h) + gap * (len(rows) + 1), columns * cell_w + gap * (columns + 1)), 200, np.uint8)
    y = gap
    for r, h in zip(rows, row_h):
        x = gap
        for im in r:
            sheet[y:y + im.shape[0], x:x + im.shape[1]] = im
            x += cell_w + gap
        y += h + gap
    return sheet
