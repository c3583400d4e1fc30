"""Synthetic multi-focus pairs with controllable defocus spread.

From an all-in-focus image and a binary foreground mask, two sources are
composited: one with the foreground sharp, one with the background sharp.
The background-focused source uses a blurred matte, so the out-of-focus
foreground bleeds across the boundary exactly as real defocus does. The
generated pair comes with the all-in-focus reference and the ground-truth
selection map, which is what makes quantitative testing possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .image import as_image


@dataclass(frozen=True)
class BlurSpec:
    """Truncated Gaussian: kernel radius ceil(3*sigma), normalized to sum 1."""

    sigma: float = 2.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def radius(self) -> int:
        return math.ceil(3.0 * self.sigma)

    def kernel(self) -> np.ndarray:
        x = np.arange(-self.radius, self.radius + 1, dtype=np.float64)
        k = np.exp(-0.5 * (x / self.sigma) ** 2)
        return k / k.sum()


def _blur_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    # windowed view appends the tap axis at the end; the matmul removes it,
    # leaving the original layout with `axis` back at its original length
    radius = (kernel.size - 1) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="edge")
    view = sliding_window_view(padded, kernel.size, axis=axis)
    return view @ kernel


def gaussian_blur(img: np.ndarray, spec: BlurSpec | float = BlurSpec()) -> np.ndarray:
    """Separable Gaussian blur with replicate padding; output stays in [0, 1]."""
    if not isinstance(spec, BlurSpec):
        spec = BlurSpec(float(spec))
    img = as_image(img)
    k = spec.kernel()
    out = _blur_axis(_blur_axis(img, k, 0), k, 1)
    return np.clip(out, 0.0, 1.0)


def _check_mask(mask: np.ndarray, shape_hw) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim == 3:
        mask = mask[:, :, 0]
    if mask.shape != tuple(shape_hw):
        raise ShapeError(f"mask shape {mask.shape} does not match image {tuple(shape_hw)}")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("mask must be binary (0/1)")
    return mask


class SynthPair(NamedTuple):
    foreground_focused: np.ndarray   # X1: foreground sharp
    background_focused: np.ndarray   # X2: background sharp, spread foreground
    gt_selection: np.ndarray         # per-pixel index of the sharp source (0=X1)
    reference: np.ndarray            # the all-in-focus input


def synthesize_pair(all_in_focus: np.ndarray, mask: np.ndarray,
                    fg_spec: BlurSpec = BlurSpec(), bg_spec: BlurSpec = BlurSpec(),
                    matte_spec: BlurSpec = BlurSpec()) -> SynthPair:
    """Composite a defocus pair from an all-in-focus image and foreground mask.

    With the clear matte aC = mask and the blurred matte aB = blur(aC):
      X1 = aC*img + (1-aC)*blur((1-aC)*img)     foreground in focus
      X2 = blur(aC*img) + (1-aB)*(1-aC)*img     background in focus
    X2's blurred matte lets the defocused foreground expand over the sharp
    background near the boundary (the defocus spread).
    """
    img = as_image(all_in_focus)
    alpha_c = _check_mask(mask, img.shape[:2])[:, :, None]
    alpha_b = gaussian_blur(alpha_c, matte_spec)
    fg_clear = alpha_c * img
    bg_clear = (1.0 - alpha_c) * img
    fg_blur = gaussian_blur(fg_clear, fg_spec)
    bg_blur = gaussian_blur(bg_clear, bg_spec)
    x1 = np.clip(fg_clear + (1.0 - alpha_c) * bg_blur, 0.0, 1.0)
    x2 = np.clip(fg_blur + (1.0 - alpha_b) * bg_clear, 0.0, 1.0)
    gt_selection = (1 - alpha_c[:, :, 0]).astype(np.int64)
    return SynthPair(x1, x2, gt_selection, img)


class SynthStack(NamedTuple):
    sources: list
    gt_selection: np.ndarray
    reference: np.ndarray


def synthesize_stack(all_in_focus: np.ndarray, masks,
                     spec: BlurSpec = BlurSpec()) -> SynthStack:
    """Generalize the pair construction to K regions that partition the image.

    Source k keeps region k sharp; everything else is blurred and composited
    with the blurred matte of the out-of-focus complement, so each source
    shows the spread effect at its region boundary.
    """
    img = as_image(all_in_focus)
    masks = [_check_mask(m, img.shape[:2]) for m in masks]
    total = np.zeros(img.shape[:2])
    for m in masks:
        total += m
    if not np.array_equal(total, np.ones_like(total)):
        raise ValueError("masks must partition the image (each pixel in exactly one)")
    sources = []
    for m in masks:
        alpha_in = m[:, :, None]
        out_clear = (1.0 - alpha_in) * img
        out_blur = gaussian_blur(out_clear, spec)
        alpha_out_b = gaussian_blur(1.0 - alpha_in, spec)
        sources.append(np.clip(out_blur + (1.0 - alpha_out_b) * alpha_in * img, 0.0, 1.0))
    gt = np.zeros(img.shape[:2], dtype=np.int64)
    for k, m in enumerate(masks):
        gt[m == 1.0] = k
    return SynthStack(sources, gt, img)


def _texture(shape, rng, amplitude: float, base: float) -> np.ndarray:
    """Band-limited noise texture centered on `base` with peak deviation ~amplitude."""
    noise = rng.random(shape)
    smooth = gaussian_blur(noise[:, :, None], BlurSpec(0.7))[:, :, 0]
    smooth -= smooth.mean()
    peak = np.abs(smooth).max()
    if peak > 0:
        smooth *= amplitude / peak
    return base + smooth


def scene(name: str, size: int = 64, regions: int = 2, seed: int = 0,
          channels: int = 1, amplitude: float = 0.04, shift: float = 0.05):
    """Procedural all-in-focus test scenes; returns (image, region masks).

    Scenes: 'disk' (concentric regions), 'stripes' (vertical bands), 'text'
    (block glyphs on a gradient). Content is textured everywhere so sharpness
    detection has signal, with contrast kept low enough that the similarity
    index's stabilizers dominate flat-window statistics.
    """
    if size < 16:
        raise ValueError("scene size must be >= 16")
    if regions < 2:
        raise ValueError("scenes need at least 2 regions")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    rng = np.random.Generator(np.random.Philox(seed))
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    if name == "disk":
        r = np.hypot(yy - (size - 1) / 2.0, xx - (size - 1) / 2.0)
        # equal-area-ish concentric rings, outermost is background
        radii = [size * 0.33 * math.sqrt((k + 1) / (regions - 1)) for k in range(regions - 1)]
        masks = []
        prev = np.zeros((size, size), dtype=bool)
        for rad in radii:
            inside = r <= rad
            masks.append((inside & ~prev).astype(np.float64))
            prev = inside
        masks.append((~prev).astype(np.float64))
    elif name == "stripes":
        band = np.clip((xx * regions / size).astype(np.int64), 0, regions - 1)
        masks = [(band == k).astype(np.float64) for k in range(regions)]
    elif name == "text":
        masks_px = _glyph_mask(size)
        if regions != 2:
            raise ValueError("the text scene supports regions=2 only")
        masks = [masks_px, 1.0 - masks_px]
    else:
        raise ValueError(f"unknown scene {name!r} (expected disk, stripes, or text)")

    chans = []
    for _ in range(channels):
        chans.append(_texture((size, size), rng, amplitude, 0.5))
    img = np.stack(chans, axis=2)
    if name == "text":
        img = img + 0.15 * (xx / max(size - 1, 1) - 0.5)[:, :, None]
    for k, m in enumerate(masks[:-1]):
        img = img + shift * (1.0 - k / max(regions - 1, 1)) * m[:, :, None]
    return np.clip(img, 0.0, 1.0), masks


def _glyph_mask(size: int) -> np.ndarray:
    """Block letters, scaled to the scene; crude but font-free."""
    rows = ["X...X", "X...X", "XXXXX", "X...X", "X...X"]  # an 'H'-like glyph
    glyph = np.array([[1.0 if ch == "X" else 0.0 for ch in row] for row in rows])
    reps = max(size // 16, 1)
    tile = np.kron(glyph, np.ones((reps, reps)))
    mask = np.zeros((size, size))
    gh, gw = tile.shape
    r0 = (size - gh) // 2
    c0 = (size - gw) // 2
    mask[r0:r0 + gh, c0:c0 + gw] = tile
    return mask


SCENES = ("disk", "stripes", "text")
