"""Patch tiling and reassembly for the super-resolution backend."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PatchShapeMismatch
from .raster import validate_raster


@dataclass
class PatchGrid:
    """Row-major square patches plus the replicated-edge padding applied."""

    patch_size: int
    rows: int
    cols: int
    patches: list = field(default_factory=list)
    pad_right: int = 0
    pad_bottom: int = 0


def tile_patches(img: np.ndarray, patch_size: int) -> PatchGrid:
    """Tile a raster into patch_size squares, edge-replicating right/bottom."""
    img = validate_raster(img)
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    h, w = img.shape
    rows = -(-h // patch_size)
    cols = -(-w // patch_size)
    pad_bottom = rows * patch_size - h
    pad_right = cols * patch_size - w
    padded = np.pad(img, ((0, pad_bottom), (0, pad_right)), mode="edge")
    patches = [
        padded[r * patch_size:(r + 1) * patch_size,
               c * patch_size:(c + 1) * patch_size].copy()
        for r in range(rows) for c in range(cols)
    ]
    return PatchGrid(patch_size, rows, cols, patches, pad_right, pad_bottom)


def assemble_patches(grid: PatchGrid, scale: int = 1) -> np.ndarray:
    """Concatenate patches row-major and crop the scaled padding."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    side = grid.patch_size * scale
    if len(grid.patches) != grid.rows * grid.cols:
        raise PatchShapeMismatch(
            f"expected {grid.rows * grid.cols} patches, got {len(grid.patches)}")
    for k, p in enumerate(grid.patches):
        p = np.asarray(p)
        if p.shape != (side, side):
            raise PatchShapeMismatch(
                f"patch {k} has shape {p.shape}, expected {(side, side)}")
    full = np.empty((grid.rows * side, grid.cols * side))
    for r in range(grid.rows):
        for c in range(grid.cols):
            full[r * side:(r + 1) * side, c * side:(c + 1) * side] = \
                grid.patches[r * grid.cols + c]
    out_h = full.shape[0] - grid.pad_bottom * scale
    out_w = full.shape[1] - grid.pad_right * scale
    return full[:out_h, :out_w]
