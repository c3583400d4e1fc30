"""Gradient ascent on the patch-wise fusion similarity index.

The objective is the mean over all stride-1 windows of the SSIM between the
fused patch and the map-selected source patch. Its gradient with respect to
the fused image decomposes, per window, into a constant term plus terms
linear in the source and fused patch entries; aggregation over overlapping
windows therefore reduces to three box scatters per source-count, which is
what keeps one iteration at O(W^2 P).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .focus import FocusMap, detect_focus_map, rasterize_map
from .image import PatchGrid, as_image, box_scatter, overlap_counts
from .metrics import (DEFAULT_CONSTANTS, MetricReport, SsimConstants, WindowStats,
                      _check_one_hot, global_ssim, patch_stats, psnr, source_tables,
                      window_stats)


@dataclass(frozen=True)
class FusionConfig:
    """Hyper-parameters of the ascent loop and the window geometry."""

    learning_rate: float = 1e-3
    max_iters: int = 1000
    window_ratio: float = 5e-5     # W = round(ratio * H * W_img), clamped
    window: int | None = None      # explicit override of the resolved W
    stride: int = 1
    constants: SsimConstants = field(default_factory=SsimConstants)
    stop_tol: float = 1e-8         # early stop on |Q(t) - Q(t-1)|
    overlap_normalize: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be >= 0")

    def resolve_window(self, height: int, width: int) -> int:
        """Window side: the ratio rule rounded half-up, clamped to [3, min(H, W)]."""
        if self.window is not None:
            w = int(self.window)
        else:
            w = int(np.floor(self.window_ratio * height * width + 0.5))
        return max(3, min(w, height, width))

    def grid_for(self, img: np.ndarray) -> PatchGrid:
        img = as_image(img)
        h, w = img.shape[:2]
        return PatchGrid(h, w, img.shape[2], self.resolve_window(h, w), self.stride)


def patch_gradient(source_patches, y: np.ndarray, weights,
                   constants: SsimConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """Gradient of the selected-source SSIM with respect to the fused patch y."""
    k = _check_one_hot(weights, len(source_patches))
    x = np.asarray(source_patches[k], dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    s = patch_stats(x, y, constants)
    n = y.size
    b1b2 = s.b1 * s.b2
    term1 = (s.mean_x * s.a2 + s.a1 * (x - s.mean_x)) / b1b2
    term2 = s.a1 * s.a2 * (s.mean_y * s.b2 + s.b1 * (y - s.mean_y)) / (b1b2 * b1b2)
    return (2.0 / n) * (term1 - term2)


def _gradient_from_stats(tables, stats: WindowStats, sources, fused: np.ndarray,
                         overlap_normalize: bool = False) -> np.ndarray:
    """Assemble the image-shaped gradient from per-window statistics.

    Per window the patch gradient is A*1 + B*(x - mu_x) + D*(y - mu_y); the
    scatter of each piece collapses to a box scatter of per-window scalars.
    """
    grid = tables.grid
    n = grid.patch_len
    b1b2 = stats.b1 * stats.b2
    coef_x = (2.0 / n) * stats.a1 / b1b2
    coef_y = -(2.0 / n) * stats.a1 * stats.a2 / (b1b2 * stats.b2)
    coef_1 = (2.0 / n) * (stats.mu_x * stats.a2 / b1b2
                          - stats.a1 * stats.a2 * stats.mu_y / (stats.b1 * b1b2))
    const_map = coef_1 - coef_x * stats.mu_x - coef_y * stats.mu_y
    grad2d = box_scatter(const_map, grid)[:, :, None].repeat(grid.channels, axis=2)
    for k, src in enumerate(sources):
        grad2d += box_scatter(coef_x * tables.sel_masks[k], grid)[:, :, None] * src
    grad2d += box_scatter(coef_y, grid)[:, :, None] * fused
    grad2d /= grid.patch_count
    if overlap_normalize:
        grad2d /= overlap_counts(grid)[:, :, None]
    return grad2d


def full_gradient(sources, fused: np.ndarray, fmap: FocusMap, grid: PatchGrid,
                  cfg: FusionConfig | None = None) -> np.ndarray:
    """Gradient of the fusion index Q with respect to the fused image."""
    cfg = cfg or FusionConfig()
    sources = [grid.check_image(s) for s in sources]
    fused = grid.check_image(fused)
    tables = source_tables(sources, fmap, grid)
    stats = window_stats(tables, fused, cfg.constants)
    return _gradient_from_stats(tables, stats, sources, fused,
                                overlap_normalize=cfg.overlap_normalize)


def fuse(sources, fmap: FocusMap | None, cfg: FusionConfig = FusionConfig(),
         init: np.ndarray | None = None,
         reference: np.ndarray | None = None) -> tuple[np.ndarray, MetricReport]:
    """Run the ascent loop and return the fused image plus a metric report.

    Starts from the average image unless `init` is given, updates
    Y <- clamp(Y + lr * G), and stops after max_iters updates or when the
    index changes by less than stop_tol. The report carries the Q trace,
    the iteration count, and SSIM/PSNR against `reference` when supplied.
    """
    sources = [as_image(s) for s in sources]
    if not sources:
        raise ValueError("need at least one source")
    shape = sources[0].shape
    for s in sources[1:]:
        if s.shape != shape:
            raise ShapeError(f"source shapes differ: {s.shape} vs {shape}")
    grid = cfg.grid_for(sources[0])

    if len(sources) == 1:
        fused = sources[0].copy()
        report = MetricReport(entries={"Q": 1.0, "iterations": 0}, trace=[1.0])
        _add_reference_metrics(report, fused, reference, grid, cfg.constants)
        return fused, report

    if fmap is None:
        raise ValueError("a focus map is required for two or more sources")
    fmap.check_grid(grid)
    tables = source_tables(sources, fmap, grid)

    fused = np.clip(init if init is not None else sum(sources) / len(sources), 0.0, 1.0)
    fused = grid.check_image(fused)
    stats = window_stats(tables, fused, cfg.constants)
    trace = [stats.q]
    for _ in range(cfg.max_iters):
        grad = _gradient_from_stats(tables, stats, sources, fused,
                                    overlap_normalize=cfg.overlap_normalize)
        fused = np.clip(fused + cfg.learning_rate * grad, 0.0, 1.0)
        stats = window_stats(tables, fused, cfg.constants)
        trace.append(stats.q)
        if abs(trace[-1] - trace[-2]) < cfg.stop_tol:
            break

    report = MetricReport(entries={"Q": trace[-1], "iterations": len(trace) - 1},
                          trace=trace)
    _add_reference_metrics(report, fused, reference, grid, cfg.constants)
    return fused, report


def _add_reference_metrics(report, fused, reference, grid, constants) -> None:
    if reference is None:
        return
    reference = grid.check_image(reference)
    report.entries["ssim"] = global_ssim(reference, fused, grid, constants)
    report.entries["psnr_db"] = psnr(reference, fused)


def addition_fuse(sources, pixel_map: np.ndarray) -> np.ndarray:
    """Pixel-wise baseline: Y = M*X1 + (1-M)*X2 for a binary per-pixel map M."""
    if len(sources) != 2:
        raise ValueError("addition fusion takes exactly two sources")
    x1, x2 = (as_image(s) for s in sources)
    if x1.shape != x2.shape:
        raise ShapeError(f"source shapes differ: {x1.shape} vs {x2.shape}")
    m = np.asarray(pixel_map, dtype=np.float64)
    if m.shape != x1.shape[:2]:
        raise ShapeError(f"pixel map shape {m.shape} != {x1.shape[:2]}")
    if not np.isin(m, (0.0, 1.0)).all():
        raise ValueError("pixel map must be binary (0/1)")
    return m[:, :, None] * x1 + (1.0 - m[:, :, None]) * x2


def addition_fuse_from_map(sources, fmap: FocusMap, grid: PatchGrid) -> np.ndarray:
    """Rasterize a per-patch map to pixels (nearest patch center) and add-fuse."""
    pixel_sel = rasterize_map(fmap, grid)
    return addition_fuse(sources, (pixel_sel == 0).astype(np.float64))


def fuse_multi(sources, cfg: FusionConfig = FusionConfig(),
               reference: np.ndarray | None = None) -> tuple[np.ndarray, MetricReport]:
    """Detect a K-way focus map with the Laplacian detector, then fuse."""
    sources = [as_image(s) for s in sources]
    if len(sources) < 2:
        raise ValueError("need at least two sources")
    grid = cfg.grid_for(sources[0])
    fmap = detect_focus_map(sources, grid)
    return fuse(sources, fmap, cfg, reference=reference)
