"""Walk one synthetic slice through edge detection, binarization and chunking.

Run: python demos/01_preprocess_and_chunk.py
"""

import numpy as np

from dedupix.bench import synthetic_image
from dedupix.identity import FALLBACK, chunk_features, encode_features
from dedupix.merkle import merkle_build
from dedupix.preprocess import binarize_otsu, canny, photon_map
from dedupix.quadtree import build_quadtree, chunk_grid
from dedupix.tiger import tiger

img = synthetic_image(0)
print(img, "mean", img.pixels.mean().round(1))

edges = canny(img, sigma=1.0, ksize=5, low=40, high=100)
print("edge pixels:", int(edges.flags.sum()))

photons = photon_map(edges, epsilon=1.0, decay=0.9)
print("photon field max", photons.intensity.max(), "lit pixels", int((photons.intensity > 0).sum()))

binary, t = binarize_otsu(img)
print("otsu threshold", t, "foreground fraction", binary.mean().round(3))

# adaptive split vs the fixed grid used for transfer
tree = build_quadtree(img, max_depth=5)
leaves = list(tree.leaves())
print("adaptive leaves:", len(leaves), "sides:", sorted({l.side for l in leaves}))

grid = chunk_grid(img, depth=3)
print(f"grid {grid.rows}x{grid.cols}, {grid.chunk_px}px chunks,",
      sum(c.homogeneous for c in grid.chunks), "homogeneous")

features = [chunk_features(c.pixels) for c in grid.chunks]
print("fallback chunks:", sum(f.kind == FALLBACK for f in features))
digests = [tiger(encode_features(f)) for f in features]
print("distinct digests:", len(set(digests)), "of", len(digests))

tree = merkle_build(digests, grid.rows, grid.cols)
print("root", tree.root.hex())

# one changed pixel moves the root
px = np.array(img.pixels)
px[256, 256] ^= 1
from dedupix.imgcore import GrayImage
g2 = chunk_grid(GrayImage(px), 3)
d2 = [tiger(encode_features(chunk_features(c.pixels))) for c in g2.chunks]
print("changed leaves:", sum(a != b for a, b in zip(digests, d2)),
      "root equal:", merkle_build(d2, 8, 8).root == tree.root)
