"""Image representation and the sliding-window gather/scatter machinery.

An image is a float64 ndarray of shape (H, W, C) with C in {1, 3} and all
values in [0, 1]. Every other module builds on the conventions fixed here:
patch vectors are row-major over (row, col, channel), and only windows that
lie fully inside the image are enumerated (no partial border patches).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image

from .errors import ShapeError

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])  # Rec.601 luminance


def as_image(data) -> np.ndarray:
    """Validate and return an image as a float64 (H, W, C) array.

    Accepts (H, W) or (H, W, C) input; grayscale is promoted to C=1.
    Raises ValueError if the shape or value range is invalid.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ShapeError(f"expected (H, W) or (H, W, C) with C in {{1, 3}}, got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError("empty image")
    if arr.size and (arr.min() < -1e-12 or arr.max() > 1 + 1e-12):
        raise ValueError("image values must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def normalize(raw_image, bit_depth: int = 8) -> np.ndarray:
    """Rescale an integer-valued image to [0, 1] by dividing by 2^bit_depth - 1."""
    if bit_depth not in (8, 16):
        raise ValueError(f"unsupported bit depth {bit_depth}")
    arr = np.asarray(raw_image, dtype=np.float64)
    if arr.size == 0:
        raise ShapeError("empty image")
    peak = float(2**bit_depth - 1)
    if arr.min() < 0 or arr.max() > peak:
        raise ValueError(f"raw values outside [0, {peak:.0f}]")
    return as_image(arr / peak)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Rec.601 luminance conversion; identity copy for single-channel input."""
    img = as_image(img)
    if img.shape[2] == 1:
        return img.copy()
    gray = img @ GRAY_WEIGHTS
    return np.clip(gray, 0.0, 1.0)[:, :, None]


@dataclass(frozen=True)
class PatchGrid:
    """Geometry of the overlapped windows covering an image.

    Patch i has its top-left corner at (i // cols * stride, i % cols * stride)
    and spans window x window pixels across all channels.
    """

    height: int
    width: int
    channels: int
    window: int
    stride: int = 1

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ValueError("window and stride must be >= 1")
        if self.window > min(self.height, self.width):
            raise ShapeError(
                f"window {self.window} exceeds image extent {self.height}x{self.width}")

    @classmethod
    def for_image(cls, img: np.ndarray, window: int, stride: int = 1) -> "PatchGrid":
        img = as_image(img)
        h, w, c = img.shape
        return cls(h, w, c, window, stride)

    @property
    def rows(self) -> int:
        return (self.height - self.window) // self.stride + 1

    @property
    def cols(self) -> int:
        return (self.width - self.window) // self.stride + 1

    @property
    def patch_count(self) -> int:
        return self.rows * self.cols

    @property
    def patch_len(self) -> int:
        return self.channels * self.window * self.window

    def origin(self, index: int) -> tuple[int, int]:
        """Top-left pixel (row, col) of patch `index`."""
        if not 0 <= index < self.patch_count:
            raise IndexError(f"patch index {index} out of range [0, {self.patch_count})")
        return (index // self.cols) * self.stride, (index % self.cols) * self.stride

    def check_image(self, img: np.ndarray) -> np.ndarray:
        img = as_image(img)
        if img.shape != (self.height, self.width, self.channels):
            raise ShapeError(f"image shape {img.shape} does not match grid "
                             f"({self.height}, {self.width}, {self.channels})")
        return img


def extract_patch(img: np.ndarray, grid: PatchGrid, index: int) -> np.ndarray:
    """Read patch `index` as a flat vector of length C*W^2 (row, col, channel order)."""
    img = grid.check_image(img)
    r, c = grid.origin(index)
    w = grid.window
    return img[r:r + w, c:c + w, :].ravel().copy()


def scatter_add(accumulator: np.ndarray, grid: PatchGrid, index: int,
                patch: np.ndarray) -> np.ndarray:
    """Add a flat patch vector back onto its window footprint (the transpose of
    extract_patch); overlapping scatters sum. Mutates and returns `accumulator`."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.size != grid.patch_len:
        raise ShapeError(f"patch length {patch.size} != {grid.patch_len}")
    if accumulator.shape != (grid.height, grid.width, grid.channels):
        raise ShapeError("accumulator shape does not match grid")
    r, c = grid.origin(index)
    w = grid.window
    accumulator[r:r + w, c:c + w, :] += patch.reshape(w, w, grid.channels)
    return accumulator


def window_sums(field: np.ndarray, window: int, stride: int = 1) -> np.ndarray:
    """Sum of every sliding window over a 2-D field, as a (rows, cols) array."""
    view = sliding_window_view(field, (window, window))
    if stride != 1:
        view = view[::stride, ::stride]
    return view.sum(axis=(2, 3))


def box_scatter(values: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Adjoint of window_sums: spread one scalar per patch uniformly over its
    footprint and sum the overlaps, returning an (H, W) field."""
    if values.shape != (grid.rows, grid.cols):
        raise ShapeError(f"values shape {values.shape} != ({grid.rows}, {grid.cols})")
    out = np.zeros((grid.height, grid.width))
    w, s = grid.window, grid.stride
    rs, cs = grid.rows, grid.cols
    for dr in range(w):
        for dc in range(w):
            out[dr:dr + (rs - 1) * s + 1:s, dc:dc + (cs - 1) * s + 1:s] += values
    return out


def overlap_counts(grid: PatchGrid) -> np.ndarray:
    """Number of patches covering each pixel (interior pixels see W^2 at stride 1)."""
    return box_scatter(np.ones((grid.rows, grid.cols)), grid)


def load_image(path) -> np.ndarray:
    """Read a PNG (8-bit gray/RGB, or 16-bit gray) into a [0, 1] image array."""
    with Image.open(path) as im:
        mode = im.mode
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return as_image(arr / 65535.0)
        if mode == "P":
            im = im.convert("RGB")
        elif mode == "RGBA":
            im = im.convert("RGB")
        elif mode == "LA":
            im = im.convert("L")
        if im.mode not in ("L", "RGB"):
            raise ValueError(f"unsupported image mode {mode!r}")
        arr = np.asarray(im, dtype=np.float64)
        return as_image(arr / 255.0)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize to 8 bits: clamp to [0, 1], scale by 255, round half-up."""
    img = as_image(img)
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_image(path, img: np.ndarray) -> None:
    """Write an image as 8-bit PNG (grayscale for C=1, RGB for C=3)."""
    data = to_uint8(img)
    if data.shape[2] == 1:
        Image.fromarray(data[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")
