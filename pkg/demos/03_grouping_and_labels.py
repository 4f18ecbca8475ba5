"""Group slices before sending, then label chunks with a tiny network.

Run: python demos/03_grouping_and_labels.py
"""

import numpy as np

from dedupix.bench import synthetic_image
from dedupix.clustering import cluster_images, fuzzy_cmeans, group_order, image_summary
from dedupix.identity import feature_summary, features_stack
from dedupix.imgcore import GrayImage
from dedupix.mlp import classify_chunk, default_ontology, init_model, one_hot, train
from dedupix.quadtree import grid_stack

rng = np.random.default_rng(3)
slices = [synthetic_image(k) for k in range(4)]
flat = [GrayImage(np.full((512, 512), v, np.uint8)) for v in (10, 240)]
noisy = [GrayImage(rng.integers(0, 256, (512, 512), dtype=np.uint8)) for _ in range(2)]
images = slices + flat + noisy

summaries = np.array([image_summary(im) for im in images])
groups = cluster_images(summaries, k=3)
print("groups", groups.tolist())
print("send order", group_order(groups))

fcm = fuzzy_cmeans(summaries, c=3, m=2.0)
print("fuzzy memberships (rounded)")
print(fcm.partition.round(2))

# label chunk summaries: background, edge, roi
stack, _ = grid_stack(slices[0], 3)
feats = features_stack(stack)
x = np.array([feature_summary(f) for f in feats])
means = stack.reshape(len(stack), -1).mean(axis=1)
spread = stack.reshape(len(stack), -1).std(axis=1)
labels = np.where(means < 35, 0, np.where(spread > 30, 2, 1))
print("label counts", np.bincount(labels, minlength=3).tolist())

model, curve = train(init_model([x.shape[1], 8, 3], seed=0), x, one_hot(labels, 3), 2000, 0.5)
print("loss", round(curve[0], 4), "->", round(curve[-1], 4))
onto = default_ontology()
for k in (0, 27, 36):
    print("chunk", k, classify_chunk(model, onto, x[k]))
