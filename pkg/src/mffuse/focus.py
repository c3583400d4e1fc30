"""Focus maps: detection via Laplacian energy, corruption, and PNG round-trip.

A focus map assigns each grid patch the index of the sharpest source image
(one-hot over K sources). Sharpness is the sum of squared responses of the
4-neighbor Laplacian inside the window, computed on the grayscale image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ShapeError
from .image import PatchGrid, to_grayscale, window_sums

# 4-neighbor stencil [[0,1,0],[1,-4,1],[0,1,0]], applied with replicate padding.
LAPLACIAN_STENCIL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class FocusMap:
    """Per-patch source selection: selection[r, c] is the chosen source index."""

    selection: np.ndarray
    n_sources: int

    def __post_init__(self):
        sel = np.asarray(self.selection)
        if sel.ndim != 2 or not np.issubdtype(sel.dtype, np.integer):
            raise ShapeError("selection must be a 2-D integer array")
        if self.n_sources < 1:
            raise ValueError("n_sources must be >= 1")
        if sel.size and (sel.min() < 0 or sel.max() >= self.n_sources):
            raise ValueError(f"selection indices must lie in [0, {self.n_sources})")

    @property
    def patch_rows(self) -> int:
        return self.selection.shape[0]

    @property
    def patch_cols(self) -> int:
        return self.selection.shape[1]

    @property
    def patch_count(self) -> int:
        return self.selection.size

    def one_hot(self) -> np.ndarray:
        """Materialize the (rows, cols, K) one-hot weight tensor."""
        eye = np.eye(self.n_sources)
        return eye[self.selection]

    def check_grid(self, grid: PatchGrid) -> None:
        if (self.patch_rows, self.patch_cols) != (grid.rows, grid.cols):
            raise ShapeError(f"focus map {self.patch_rows}x{self.patch_cols} does not "
                             f"match grid {grid.rows}x{grid.cols}")


def laplacian_response(img: np.ndarray) -> np.ndarray:
    """Convolve with the Laplacian stencil (replicate padding), returning (H, W).

    Color input is converted to grayscale first.
    """
    gray = to_grayscale(img)[:, :, 0]
    p = np.pad(gray, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * gray


def laplacian_energies(img: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Sum of squared Laplacian responses over each window, as (rows, cols)."""
    resp = laplacian_response(img)
    return window_sums(resp * resp, grid.window, grid.stride)


def detect_focus_map(sources, grid: PatchGrid) -> FocusMap:
    """Select, per patch, the source with the largest Laplacian energy.

    Ties break toward the smallest source index.
    """
    if len(sources) < 2:
        raise ValueError("need at least two sources to detect a focus map")
    energies = np.stack([laplacian_energies(src, grid) for src in sources])
    return FocusMap(np.argmax(energies, axis=0), len(sources))


def corrupt_map(fmap: FocusMap, p: float, seed: int) -> FocusMap:
    """Flip each patch selection independently with probability p.

    For K=2 a flip toggles 0<->1; for K>2 it resamples uniformly among the
    other K-1 indices. The stream is counter-based (Philox), so results are
    bit-reproducible for a given seed.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"corruption probability {p} outside [0, 1]")
    k = fmap.n_sources
    if k < 2:
        raise ValueError("corruption needs at least two sources")
    rng = np.random.Generator(np.random.Philox(seed))
    shape = fmap.selection.shape
    flip = rng.random(shape) < p
    offsets = rng.integers(1, k, size=shape)
    sel = np.where(flip, (fmap.selection + offsets) % k, fmap.selection)
    return FocusMap(sel, k)


def _levels(n_sources: int) -> np.ndarray:
    if n_sources < 2:
        raise ValueError("map files need at least two sources")
    return np.arange(n_sources) * (255 // (n_sources - 1))


def save_map(path, fmap: FocusMap) -> None:
    """Write a focus map as a grayscale PNG; pixel value k * floor(255/(K-1))."""
    data = _levels(fmap.n_sources)[fmap.selection].astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def load_map(path, n_sources: int, grid: PatchGrid | None = None) -> FocusMap:
    """Read a focus-map PNG, decoding pixel values by nearest-level quantization.

    If a grid is given, the map size must equal (grid.rows, grid.cols).
    """
    levels = _levels(n_sources)
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        data = np.asarray(im, dtype=np.int64)
    sel = np.argmin(np.abs(data[:, :, None] - levels[None, None, :]), axis=2)
    fmap = FocusMap(sel, n_sources)
    if grid is not None:
        fmap.check_grid(grid)
    return fmap


def map_from_pixels(pixel_selection: np.ndarray, grid: PatchGrid,
                    n_sources: int) -> FocusMap:
    """Build a per-patch map from a per-pixel source-index field by sampling
    the pixel at each patch center (top-left-biased for even windows)."""
    pixel_selection = np.asarray(pixel_selection)
    if pixel_selection.shape != (grid.height, grid.width):
        raise ShapeError(f"pixel map shape {pixel_selection.shape} != "
                         f"({grid.height}, {grid.width})")
    half = (grid.window - 1) // 2
    rr = np.arange(grid.rows) * grid.stride + half
    cc = np.arange(grid.cols) * grid.stride + half
    sel = pixel_selection[np.ix_(rr, cc)].astype(np.int64)
    return FocusMap(sel, n_sources)


def rasterize_map(fmap: FocusMap, grid: PatchGrid) -> np.ndarray:
    """Expand a per-patch map to pixels: each pixel takes the selection of the
    patch whose center is nearest (ties toward the smaller patch index)."""
    fmap.check_grid(grid)

    def nearest(n_pixels, n_patches):
        centers = np.arange(n_patches) * grid.stride + (grid.window - 1) / 2.0
        dist = np.abs(np.arange(n_pixels)[:, None] - centers[None, :])
        return np.argmin(dist, axis=1)

    rows = nearest(grid.height, grid.rows)
    cols = nearest(grid.width, grid.cols)
    return fmap.selection[np.ix_(rows, cols)]
