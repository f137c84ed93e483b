"""Decoding, intensity standardization, contrast, resizing, and patch tiling."""

from .decode import decode_image, sniff_format
from .ops import (
    Resized,
    bilinear_resample,
    enhance_contrast,
    nearest_rank_quantile,
    rescale_within_mask,
    resize,
    standardize_intensity,
)
from .patches import PatchGrid, assemble_patches, tile_patches
from .raster import (
    mask_to_png_bytes,
    png_bytes_to_mask,
    raster_to_png_bytes,
    validate_mask,
    validate_raster,
)

__all__ = [
    "decode_image", "sniff_format", "Resized", "bilinear_resample",
    "enhance_contrast", "nearest_rank_quantile", "rescale_within_mask",
    "resize", "standardize_intensity", "PatchGrid", "assemble_patches",
    "tile_patches", "mask_to_png_bytes", "png_bytes_to_mask",
    "raster_to_png_bytes", "validate_mask", "validate_raster",
]
