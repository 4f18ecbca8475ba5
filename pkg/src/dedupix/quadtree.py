"""Quadtree decomposition and the fixed n x m chunk grid used for transfer."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyImage, MissingChunk
from .imgcore import GrayImage, write_pgm

DEFAULT_DEPTH = 3
DEFAULT_HOM_THRESHOLD = 2


def padded_side(width: int, height: int, depth: int) -> int:
    """Smallest power-of-two side that covers the image and holds 2**depth cells."""
    side = 1
    while side < max(width, height):
        side *= 2
    return max(side, 2 ** depth)


def pad_square(img: GrayImage, side: int) -> np.ndarray:
    return np.pad(img.pixels, ((0, side - img.height), (0, side - img.width)), mode="edge")


def _check(img) -> None:
    if img is None or img.width < 1 or img.height < 1:
        raise EmptyImage("image has no pixels")


@dataclass(frozen=True)
class QuadtreeNode:
    depth: int
    x: int
    y: int
    side: int
    children: tuple = ()
    mean: float = 0.0
    homogeneous: bool = True

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for ch in self.children:
                yield from ch.leaves()


def build_quadtree(img: GrayImage, max_depth: int, hom_threshold: int = DEFAULT_HOM_THRESHOLD) -> QuadtreeNode:
    """Split recursively into four until a block is homogeneous
    (max - min <= ``hom_threshold``) or ``max_depth`` is reached."""
    _check(img)
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    side = padded_side(img.width, img.height, max_depth)
    px = pad_square(img, side)

    def build(depth, x, y, s):
        block = px[y:y + s, x:x + s]
        hom = int(block.max()) - int(block.min()) <= hom_threshold
        mean = float(block.mean())
        if hom or depth == max_depth or s == 1:
            return QuadtreeNode(depth, x, y, s, (), mean, hom)
        h = s // 2
        kids = tuple(build(depth + 1, x + dx, y + dy, h) for dy in (0, h) for dx in (0, h))
        return QuadtreeNode(depth, x, y, s, kids, mean, hom)

    return build(0, 0, 0, side)


@dataclass(frozen=True)
class ImageChunk:
    row: int
    col: int
    pixels: np.ndarray
    homogeneous: bool
    label: str | None = None

    @property
    def data(self) -> bytes:
        return np.ascontiguousarray(self.pixels, dtype=np.uint8).tobytes()


@dataclass(frozen=True)
class ChunkGrid:
    rows: int
    cols: int
    chunk_px: int
    chunks: list = field(default_factory=list)

    def stack(self) -> np.ndarray:
        """Chunks as a (rows*cols, chunk_px, chunk_px) array in row-major order."""
        return np.stack([c.pixels for c in self.chunks]) if self.chunks else np.zeros((0, self.chunk_px, self.chunk_px), np.uint8)


def grid_stack(img: GrayImage, depth: int) -> tuple[np.ndarray, int]:
    """Row-major stack of the 2**depth x 2**depth chunks and the chunk side."""
    _check(img)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    side = padded_side(img.width, img.height, depth)
    n = 2 ** depth
    cp = side // n
    px = pad_square(img, side)
    stack = px.reshape(n, cp, n, cp).swapaxes(1, 2).reshape(n * n, cp, cp)
    return np.ascontiguousarray(stack), cp


def chunk_grid(img: GrayImage, depth: int = DEFAULT_DEPTH, hom_threshold: int = DEFAULT_HOM_THRESHOLD) -> ChunkGrid:
    stack, cp = grid_stack(img, depth)
    n = 2 ** depth
    spread = stack.max(axis=(1, 2)).astype(np.int32) - stack.min(axis=(1, 2))
    chunks = []
    for k in range(n * n):
        arr = stack[k]
        arr.setflags(write=False)
        chunks.append(ImageChunk(k // n, k % n, arr, bool(spread[k] <= hom_threshold)))
    return ChunkGrid(n, n, cp, chunks)


def reassemble(grid: ChunkGrid, orig_w: int, orig_h: int) -> GrayImage:
    """Tile the chunks back together and crop the replicated padding."""
    by_pos = {}
    for ch in grid.chunks:
        if ch is not None:
            by_pos[(ch.row, ch.col)] = ch
    missing = [(i, j) for i in range(grid.rows) for j in range(grid.cols) if (i, j) not in by_pos]
    if missing:
        raise MissingChunk(missing)
    cp = grid.chunk_px
    canvas = np.empty((grid.rows * cp, grid.cols * cp), dtype=np.uint8)
    for (i, j), ch in by_pos.items():
        canvas[i * cp:(i + 1) * cp, j * cp:(j + 1) * cp] = np.asarray(ch.pixels).reshape(cp, cp)
    return GrayImage(canvas[:orig_h, :orig_w])


def dump_chunks(grid: ChunkGrid, image_id: str, out_dir) -> list[str]:
    """Write each chunk as ``<image-id>_<i>_<j>.pgm``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for ch in grid.chunks:
        path = os.path.join(out_dir, f"{image_id}_{ch.row}_{ch.col}.pgm")
        write_pgm(path, GrayImage(ch.pixels))
        paths.append(path)
    return paths
