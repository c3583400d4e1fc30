"""Structural-similarity metrics over sliding windows.

ssim_patch / mff_ssim_patch operate on flat patch vectors; mff_ssim_index and
global_ssim evaluate whole images through vectorized per-window statistics.
All statistics use the population convention (divide by the C*W^2 patch
length) and treat a color patch as one joint vector, not per-channel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .focus import FocusMap
from .image import PatchGrid, window_sums


@dataclass(frozen=True)
class SsimConstants:
    """Stabilizing constants for the luminance and contrast terms."""

    c1: float = 0.01**2
    c2: float = 0.03**2

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")


DEFAULT_CONSTANTS = SsimConstants()


@dataclass(frozen=True)
class PatchStats:
    """Joint first/second moments of a patch pair and the four SSIM terms."""

    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float
    a1: float
    b1: float
    a2: float
    b2: float


def patch_stats(x: np.ndarray, y: np.ndarray,
                constants: SsimConstants = DEFAULT_CONSTANTS) -> PatchStats:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"patch lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("patches must have at least 2 entries")
    mx = x.mean()
    my = y.mean()
    var_x = max(np.mean((x - mx) ** 2), 0.0)
    var_y = max(np.mean((y - my) ** 2), 0.0)
    cov = np.mean((x - mx) * (y - my))
    return PatchStats(
        mean_x=mx, mean_y=my, var_x=var_x, var_y=var_y, cov_xy=cov,
        a1=2.0 * mx * my + constants.c1,
        b1=mx * mx + my * my + constants.c1,
        a2=2.0 * cov + constants.c2,
        b2=var_x + var_y + constants.c2,
    )


def ssim_patch(x: np.ndarray, y: np.ndarray,
               constants: SsimConstants = DEFAULT_CONSTANTS) -> float:
    """SSIM between two flat patch vectors: (a1*a2)/(b1*b2)."""
    s = patch_stats(x, y, constants)
    return (s.a1 * s.a2) / (s.b1 * s.b2)


def _check_one_hot(weights, n_sources: int) -> int:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size != n_sources:
        raise ShapeError(f"expected {n_sources} weights, got {w.size}")
    ones = np.flatnonzero(w == 1.0)
    if ones.size != 1 or np.count_nonzero(w) != 1:
        raise ValueError("weights must be one-hot (exactly one entry equal to 1)")
    return int(ones[0])


def mff_ssim_patch(source_patches, y: np.ndarray, weights,
                   constants: SsimConstants = DEFAULT_CONSTANTS) -> float:
    """SSIM between a fused patch and the one source patch the weights select."""
    k = _check_one_hot(weights, len(source_patches))
    return ssim_patch(source_patches[k], y, constants)


@dataclass
class SourceTables:
    """Per-source window statistics that stay fixed while the fused image moves.

    Shifting each image by its global mean before forming second-moment sums
    keeps the windowed variance/covariance numerically stable; means are
    recovered by adding the shift back.
    """

    grid: PatchGrid
    shifted: list[np.ndarray]       # X^[k] - mean(X^[k]), per source
    shifts: list[float]
    selection: np.ndarray           # (rows, cols) chosen source index
    sel_masks: list[np.ndarray]     # (rows, cols) float 0/1 per source
    mu_x: np.ndarray                # (rows, cols) selected patch means
    dev_x: np.ndarray               # mu_x minus the selected source's shift
    var_x: np.ndarray


@dataclass
class WindowStats:
    """Per-window statistics of the fused image against the selected sources."""

    mu_x: np.ndarray
    mu_y: np.ndarray
    var_x: np.ndarray
    var_y: np.ndarray
    cov_xy: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    ssim: np.ndarray

    @property
    def q(self) -> float:
        return float(self.ssim.mean())


def source_tables(sources, fmap: FocusMap, grid: PatchGrid) -> SourceTables:
    """Precompute the per-source window sums the index and gradient reuse."""
    if fmap.patch_rows != grid.rows or fmap.patch_cols != grid.cols:
        raise ShapeError(f"focus map {fmap.patch_rows}x{fmap.patch_cols} does not "
                         f"match grid {grid.rows}x{grid.cols}")
    if fmap.n_sources != len(sources):
        raise ShapeError(f"focus map expects {fmap.n_sources} sources, got {len(sources)}")
    n = grid.patch_len
    w, s = grid.window, grid.stride
    shifted, shifts, mus, devs, vars = [], [], [], [], []
    for src in sources:
        src = grid.check_image(src)
        bar = float(src.mean())
        xc = src - bar
        dev = window_sums(xc.sum(axis=2), w, s) / n
        var = np.maximum(window_sums((xc * xc).sum(axis=2), w, s) / n - dev**2, 0.0)
        shifted.append(xc)
        shifts.append(bar)
        mus.append(bar + dev)
        devs.append(dev)
        vars.append(var)
    sel = fmap.selection
    masks = [(sel == k).astype(np.float64) for k in range(len(sources))]

    def pick(maps):
        out = np.zeros_like(maps[0])
        for k, m in enumerate(maps):
            out += masks[k] * m
        return out

    return SourceTables(grid=grid, shifted=shifted, shifts=shifts, selection=sel,
                        sel_masks=masks, mu_x=pick(mus), dev_x=pick(devs),
                        var_x=pick(vars))


def window_stats(tables: SourceTables, fused: np.ndarray,
                 constants: SsimConstants = DEFAULT_CONSTANTS) -> WindowStats:
    """Evaluate all per-window SSIM statistics of `fused` against the tables."""
    grid = tables.grid
    fused = grid.check_image(fused)
    n = grid.patch_len
    w, s = grid.window, grid.stride
    ybar = float(fused.mean())
    yc = fused - ybar
    dev_y = window_sums(yc.sum(axis=2), w, s) / n
    mu_y = ybar + dev_y
    var_y = np.maximum(window_sums((yc * yc).sum(axis=2), w, s) / n - dev_y**2, 0.0)
    cross = np.zeros((grid.rows, grid.cols))
    for k, xc in enumerate(tables.shifted):
        cross += tables.sel_masks[k] * window_sums((xc * yc).sum(axis=2), w, s)
    cov = cross / n - tables.dev_x * dev_y
    a1 = 2.0 * tables.mu_x * mu_y + constants.c1
    b1 = tables.mu_x**2 + mu_y**2 + constants.c1
    a2 = 2.0 * cov + constants.c2
    b2 = tables.var_x + var_y + constants.c2
    return WindowStats(mu_x=tables.mu_x, mu_y=mu_y, var_x=tables.var_x, var_y=var_y,
                       cov_xy=cov, a1=a1, b1=b1, a2=a2, b2=b2,
                       ssim=(a1 * a2) / (b1 * b2))


def mff_ssim_index(sources, fused: np.ndarray, fmap: FocusMap, grid: PatchGrid,
                   constants: SsimConstants = DEFAULT_CONSTANTS) -> float:
    """Mean over all windows of the SSIM between the fused patch and the
    map-selected source patch (the fusion quality index Q)."""
    tables = source_tables(sources, fmap, grid)
    return window_stats(tables, fused, constants).q


def global_ssim(reference: np.ndarray, test: np.ndarray, grid: PatchGrid,
                constants: SsimConstants = DEFAULT_CONSTANTS) -> float:
    """Plain sliding-window SSIM between two images (mean over all windows)."""
    fmap = FocusMap(np.zeros((grid.rows, grid.cols), dtype=np.int64), 1)
    return mff_ssim_index([reference], test, fmap, grid, constants)


PSNR_CAP_DB = 100.0


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 1; capped at 100 dB for MSE 0."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ShapeError(f"shape mismatch: {reference.shape} vs {test.shape}")
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


@dataclass
class MetricReport:
    """Named scalar results plus an optional per-iteration trace of Q."""

    entries: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = dict(self.entries)
        if self.trace:
            out["trace"] = [float(v) for v in self.trace]
        return out

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
