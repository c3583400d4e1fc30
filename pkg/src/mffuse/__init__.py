"""Multi-focus image fusion by patch-wise structural-similarity ascent."""

from .errors import ShapeError
from .focus import (FocusMap, LAPLACIAN_STENCIL, corrupt_map, detect_focus_map,
                    laplacian_energies, laplacian_response, load_map,
                    map_from_pixels, rasterize_map, save_map)
from .image import (PatchGrid, as_image, box_scatter, extract_patch, load_image,
                    normalize, overlap_counts, save_image, scatter_add,
                    to_grayscale, to_uint8, window_sums)
from .metrics import (MetricReport, PatchStats, SsimConstants, global_ssim,
                      mff_ssim_index, mff_ssim_patch, patch_stats, psnr, ssim_patch)
from .optimize import (FusionConfig, addition_fuse, addition_fuse_from_map,
                       full_gradient, fuse, fuse_multi, patch_gradient)
from .synth import (SCENES, BlurSpec, SynthPair, SynthStack, gaussian_blur, scene,
                    synthesize_pair, synthesize_stack)

__version__ = "0.1.0"

__all__ = [
    "BlurSpec", "FocusMap", "FusionConfig", "LAPLACIAN_STENCIL", "MetricReport",
    "PatchGrid", "PatchStats", "SCENES", "ShapeError", "SsimConstants", "SynthPair",
    "SynthStack", "addition_fuse", "addition_fuse_from_map", "as_image",
    "box_scatter", "corrupt_map", "detect_focus_map", "extract_patch",
    "full_gradient", "fuse", "fuse_multi", "gaussian_blur", "global_ssim",
    "laplacian_energies", "laplacian_response", "load_image", "load_map",
    "map_from_pixels", "mff_ssim_index", "mff_ssim_patch", "normalize",
    "overlap_counts", "patch_gradient", "patch_stats", "psnr", "rasterize_map",
    "save_image", "save_map", "scatter_add", "scene", "ssim_patch",
    "synthesize_pair", "synthesize_stack", "to_grayscale", "to_uint8",
    "window_sums", "__version__",
]
