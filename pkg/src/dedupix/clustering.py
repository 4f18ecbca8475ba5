"""K-Means and Fuzzy C-Means from scratch, plus image-level grouping."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BadC, BadFuzziness, BadK, EmptyInput
from .imgcore import GrayImage


@dataclass(frozen=True)
class HardClustering:
    centroids: np.ndarray
    assignments: np.ndarray
    iterations: int
    inertia: float
    inertia_history: list = field(default_factory=list)


@dataclass(frozen=True)
class FuzzyClustering:
    centroids: np.ndarray
    partition: np.ndarray
    fuzziness: float
    iterations: int


def _as_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInput("need a non-empty n x d array of vectors")
    if x.shape[1] < 1:
        raise EmptyInput("vectors must have at least one dimension")
    return x


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def _init_centroids(x: np.ndarray, k: int, init: str, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    if init == "random":
        return x[rng.choice(n, size=k, replace=False)].copy()
    if init == "kmeans++":
        centers = [x[rng.integers(n)]]
        for _ in range(1, k):
            d2 = _sq_dists(x, np.array(centers)).min(axis=1)
            total = d2.sum()
            if total == 0:
                centers.append(x[rng.integers(n)])
            else:
                centers.append(x[rng.choice(n, p=d2 / total)])
        return np.array(centers)
    raise ValueError(f"unknown init {init!r}")


def _lloyd(x, k, init, max_iter, tol, rng) -> HardClustering:
    centroids = _init_centroids(x, k, init, rng)
    history = []
    it = 0
    while True:
        d2 = _sq_dists(x, centroids)
        # argmin returns the first minimum: ties go to the lowest index
        assign = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(x)), assign].sum()))
        if it >= max_iter:
            break
        new = centroids.copy()
        for j in range(k):
            members = assign == j
            if members.any():
                new[j] = x[members].mean(axis=0)
        empty = [j for j in range(k) if not (assign == j).any()]
        if empty:
            own = d2[np.arange(len(x)), assign]
            taken: set[int] = set()
            for j in empty:
                order = np.argsort(-own, kind="stable")
                pick = next(int(p) for p in order if int(p) not in taken)
                taken.add(pick)
                new[j] = x[pick]
                own[pick] = -1.0
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        it += 1
        if shift <= tol and not empty:
            d2 = _sq_dists(x, centroids)
            assign = d2.argmin(axis=1)
            history.append(float(d2[np.arange(len(x)), assign].sum()))
            break
    return HardClustering(centroids, assign, it, history[-1], history)


def kmeans(vectors, k: int, init: str = "kmeans++", max_iter: int = 300, tol: float = 0.0,
           seed: int = 0, n_init: int = 1) -> HardClustering:
    """Lloyd's algorithm; with ``n_init`` > 1 the lowest-inertia restart wins.

    The returned ``inertia_history`` holds the inertia after every
    assignment step; it never increases.
    """
    x = _as_matrix(vectors)
    if not (1 <= k <= x.shape[0]):
        raise BadK(f"k must satisfy 1 <= k <= n={x.shape[0]}, got {k}")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        res = _lloyd(x, k, init, max_iter, tol, rng)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def _memberships(x: np.ndarray, centroids: np.ndarray, m: float) -> np.ndarray:
    d = np.sqrt(_sq_dists(x, centroids))
    n, c = d.shape
    w = np.empty((n, c))
    zero = d == 0
    hit = zero.any(axis=1)
    if hit.any():
        first = zero[hit].argmax(axis=1)
        w[hit] = 0.0
        w[np.flatnonzero(hit), first] = 1.0
    rest = ~hit
    if rest.any():
        # w_ij = 1 / sum_k (d_ij / d_ik)^p, evaluated as a softmax of -p*log d
        logits = -(2.0 / (m - 1.0)) * np.log(d[rest])
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        w[rest] = e / e.sum(axis=1, keepdims=True)
    return w


def _fcm_centroids(x, w, m):
    wm = w ** m
    return (wm.T @ x) / wm.sum(axis=0)[:, None]


def fcm_iterations(vectors, c: int, m: float = 2.0, seed: int = 0, init_partition=None,
                   max_iter: int = 300) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(centroids, partition)`` after every FCM update."""
    x = _as_matrix(vectors)
    n = x.shape[0]
    if not (2 <= c <= n):
        raise BadC(f"c must satisfy 2 <= c <= n={n}, got {c}")
    if not (m > 1):
        raise BadFuzziness(f"fuzziness m must exceed 1, got {m}")
    if init_partition is None:
        rng = np.random.default_rng(seed)
        w = rng.random((n, c)) + 1e-3
        w /= w.sum(axis=1, keepdims=True)
    else:
        w = np.array(init_partition, dtype=np.float64)
    for _ in range(max_iter):
        centroids = _fcm_centroids(x, w, m)
        w = _memberships(x, centroids, m)
        yield centroids, w


def fuzzy_cmeans(vectors, c: int, m: float = 2.0, eps: float = 1e-6, max_iter: int = 300,
                 seed: int = 0, init_partition=None) -> FuzzyClustering:
    """Alternate the weighted-centroid and membership updates until no
    membership moves by more than ``eps``."""
    if not (eps > 0):
        raise ValueError("eps must be positive")
    x = _as_matrix(vectors)
    if init_partition is None:
        rng = np.random.default_rng(seed)
        init_partition = rng.random((x.shape[0], c)) + 1e-3
        init_partition /= init_partition.sum(axis=1, keepdims=True)
    prev = np.array(init_partition, dtype=np.float64)
    it = 0
    centroids, w = _fcm_centroids(x, prev, m), prev
    for centroids, w in fcm_iterations(x, c, m, seed, prev, max_iter):
        it += 1
        if float(np.abs(w - prev).max()) <= eps:
            break
        prev = w
    return FuzzyClustering(centroids, w, float(m), it)


def image_summary(img: GrayImage, depth: int = 3, hom_threshold: int = 2) -> np.ndarray:
    """32-bin L1-normalised histogram plus the fraction of non-homogeneous chunks."""
    from .quadtree import grid_stack

    hist = np.bincount(img.pixels.ravel() >> 3, minlength=32).astype(np.float64)
    hist /= hist.sum()
    stack, _ = grid_stack(img, depth)
    spread = stack.max(axis=(1, 2)).astype(np.int32) - stack.min(axis=(1, 2))
    busy = float((spread > hom_threshold).mean())
    return np.concatenate([hist, [busy]])


def cluster_images(summaries: Sequence, k: int, seed: int = 0, n_init: int = 10) -> np.ndarray:
    """Group images by their summary vectors; returns one group id per image."""
    x = _as_matrix(np.asarray(summaries, dtype=np.float64))
    k = min(k, x.shape[0])
    return kmeans(x, k, init="kmeans++", seed=seed, n_init=n_init).assignments


def group_order(groups: Sequence[int]) -> list[int]:
    """Indices ordered group by group (groups by first appearance, stable inside)."""
    first: dict[int, int] = {}
    for i, g in enumerate(groups):
        first.setdefault(int(g), i)
    return sorted(range(len(groups)), key=lambda i: (first[int(groups[i])], i))


def write_clustering_csv(path, result) -> None:
    """Centroid rows followed by one row per point (cluster id or memberships)."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        cents = np.asarray(result.centroids)
        if isinstance(result, HardClustering):
            per_point = [[int(a)] for a in result.assignments]
        else:
            per_point = [[repr(float(v)) for v in row] for row in result.partition]
        out.writerow(["kind", "index", "values"])
        for j, c in enumerate(cents):
            out.writerow(["centroid", j] + [repr(float(v)) for v in c])
        for i, vals in enumerate(per_point):
            out.writerow(["point", i] + vals)
