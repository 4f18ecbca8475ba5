"""Per-chunk content identity: FAST-9 keypoints, steered BRIEF descriptors,
a histogram fallback for featureless chunks, the canonical byte encoding and
its Tiger digest.

Functions working on a single chunk are thin wrappers around the batched
``*_stack`` versions, which take a (N, side, side) uint8 array of chunks.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from ._brief_pattern import PATTERN
from .errors import ChunkTooSmall, NonCanonicalInput
from .tiger import DIGEST_SIZE, tiger_many, tiger_rows

KEYPOINT = 0
FALLBACK = 1
MAGIC = b"FV01"
CELL = 8
DESCRIPTOR_BYTES = 32
ORIENTATION_STEPS = 12
MIN_FAST_SIDE = 7

DEFAULT_FAST_T = 20
DEFAULT_MAX_KP = 8

# Bresenham circle of radius 3 as (dx, dy), clockwise from 12 o'clock
RING = ((0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3))
ARC = 9


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    score: int
    orientation: float


@dataclass(frozen=True)
class FeatureVector:
    kind: int
    descriptors: tuple = ()
    hist: bytes | None = None
    mean: int | None = None
    content: bytes = b""

    def __post_init__(self):
        if self.kind not in (KEYPOINT, FALLBACK):
            raise ValueError(f"unknown feature kind {self.kind}")
        if (self.kind == FALLBACK) != (len(self.descriptors) == 0):
            raise ValueError("fallback vectors carry no descriptors and keypoint vectors need some")
        if len(self.content) != DIGEST_SIZE:
            raise ValueError("content tag must be a 24-byte digest")

    def is_canonical(self) -> bool:
        return list(self.descriptors) == sorted(self.descriptors)


# -- FAST ----------------------------------------------------------------------

def _ring_diffs(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    side = stack.shape[1]
    inner = slice(3, side - 3)
    center = stack[:, inner, inner].astype(np.int16)
    ring = np.stack([stack[:, 3 + dy:side - 3 + dy, 3 + dx:side - 3 + dx] for dx, dy in RING]).astype(np.int16)
    return ring - center, center


def _has_arc(mask: np.ndarray) -> np.ndarray:
    ext = np.concatenate([mask, mask[:ARC - 1]], axis=0)
    return sliding_window_view(ext, ARC, axis=0).all(axis=-1).any(axis=0)


def _arc_score(diffs: np.ndarray) -> np.ndarray:
    """Largest t for which a (K, 16) set of ring differences is still a corner."""
    ext = np.concatenate([diffs, diffs[:, :ARC - 1]], axis=1)
    win = sliding_window_view(ext, ARC, axis=1)
    bright = win.min(axis=-1).max(axis=-1)
    dark = -(win.max(axis=-1)).min(axis=-1)
    return np.maximum(bright, dark).astype(np.int32) - 1


def fast_score_map(stack: np.ndarray, t: int) -> np.ndarray:
    """Per-pixel FAST-9 score (-1 where the pixel is not a corner)."""
    stack = np.asarray(stack, dtype=np.uint8)
    n, side = stack.shape[0], stack.shape[1]
    scores = np.full(stack.shape, -1, dtype=np.int32)
    if side < MIN_FAST_SIDE:
        return scores
    diffs, _ = _ring_diffs(stack)
    corner = _has_arc(diffs > t) | _has_arc(diffs < -t)
    idx = np.nonzero(corner)
    if idx[0].size:
        inner = scores[:, 3:side - 3, 3:side - 3]
        inner[idx] = _arc_score(diffs[:, idx[0], idx[1], idx[2]].T)
    return scores


def _orientations(stack: np.ndarray, ks: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    if ks.size == 0:
        return np.zeros(0)
    off = np.arange(-3, 4)
    py = ys[:, None, None] + off[None, :, None]
    px = xs[:, None, None] + off[None, None, :]
    patch = stack[ks[:, None, None], py, px].astype(np.float64)
    m10 = (patch * off[None, None, :]).sum(axis=(1, 2))
    m01 = (patch * off[None, :, None]).sum(axis=(1, 2))
    return np.arctan2(m01, m10)


def fast_keypoints_stack(stack: np.ndarray, t: int = DEFAULT_FAST_T, max_kp: int = DEFAULT_MAX_KP):
    """Detect keypoints in every chunk of a stack.

    Returns parallel arrays (chunk index, y, x, score, orientation), sorted by
    chunk, then score descending, then (y, x).
    """
    stack = np.asarray(stack, dtype=np.uint8)
    scores = fast_score_map(stack, t)
    peak = ndimage.maximum_filter(scores, size=(1, 3, 3), mode="constant", cval=-1)
    keep = (scores >= 0) & (scores >= peak)
    ks, ys, xs = np.nonzero(keep)
    sc = scores[ks, ys, xs]
    order = np.lexsort((xs, ys, -sc, ks))
    ks, ys, xs, sc = ks[order], ys[order], xs[order], sc[order]
    if ks.size:
        starts = np.r_[0, np.flatnonzero(np.diff(ks)) + 1]
        rank = np.arange(ks.size) - np.repeat(starts, np.diff(np.r_[starts, ks.size]))
        sel = rank < max_kp
        ks, ys, xs, sc = ks[sel], ys[sel], xs[sel], sc[sel]
    return ks, ys, xs, sc, _orientations(stack, ks, ys, xs)


def fast_keypoints(pixels, t: int = DEFAULT_FAST_T, max_kp: int = DEFAULT_MAX_KP) -> list[Keypoint]:
    """FAST-9 corners of one chunk with 3x3 non-max suppression, best ``max_kp`` kept."""
    px = np.asarray(getattr(pixels, "pixels", pixels), dtype=np.uint8)
    if min(px.shape) < MIN_FAST_SIDE:
        raise ChunkTooSmall(f"FAST needs at least {MIN_FAST_SIDE}x{MIN_FAST_SIDE}, got {px.shape}")
    _, ys, xs, sc, th = fast_keypoints_stack(px[None], t, max_kp)
    return [Keypoint(int(x), int(y), int(s), float(o)) for x, y, s, o in zip(xs, ys, sc, th)]


# -- steered BRIEF ---------------------------------------------------------------

def _rotated_patterns() -> np.ndarray:
    pat = np.asarray(PATTERN, dtype=np.float64)
    out = np.empty((ORIENTATION_STEPS, len(pat), 4), dtype=np.int64)
    for k in range(ORIENTATION_STEPS):
        a = 2 * math.pi * k / ORIENTATION_STEPS
        ca, sa = math.cos(a), math.sin(a)
        for col in (0, 2):
            x, y = pat[:, col], pat[:, col + 1]
            out[k, :, col] = np.floor(ca * x - sa * y + 0.5)
            out[k, :, col + 1] = np.floor(sa * x + ca * y + 0.5)
    return out


_ROTATED = _rotated_patterns()


def orientation_step(theta: float) -> int:
    return int(math.floor(theta / (2 * math.pi / ORIENTATION_STEPS) + 0.5)) % ORIENTATION_STEPS


def box_sums(stack: np.ndarray) -> np.ndarray:
    """5x5 box sums with edge clamping (the smoothing applied before BRIEF tests)."""
    p = np.pad(np.asarray(stack, dtype=np.int32), ((0, 0), (2, 2), (2, 2)), mode="edge")
    c = np.zeros((p.shape[0], p.shape[1] + 1, p.shape[2] + 1), dtype=np.int32)
    c[:, 1:, 1:] = p.cumsum(axis=1).cumsum(axis=2)
    side_y, side_x = stack.shape[1], stack.shape[2]
    return c[:, 5:5 + side_y, 5:5 + side_x] - c[:, 0:side_y, 5:5 + side_x] - c[:, 5:5 + side_y, 0:side_x] + c[:, 0:side_y, 0:side_x]


def brief_stack(smoothed: np.ndarray, ks, ys, xs, thetas) -> np.ndarray:
    """Descriptors (K, 32 bytes) for keypoints given by chunk index and position."""
    ks = np.asarray(ks, dtype=np.intp)
    if ks.size == 0:
        return np.zeros((0, DESCRIPTOR_BYTES), dtype=np.uint8)
    steps = np.array([orientation_step(t) for t in np.asarray(thetas, dtype=np.float64)])
    pat = _ROTATED[steps]
    hi_y, hi_x = smoothed.shape[1] - 1, smoothed.shape[2] - 1
    ys = np.asarray(ys)[:, None]
    xs = np.asarray(xs)[:, None]
    ay = np.clip(ys + pat[:, :, 1], 0, hi_y)
    ax = np.clip(xs + pat[:, :, 0], 0, hi_x)
    by = np.clip(ys + pat[:, :, 3], 0, hi_y)
    bx = np.clip(xs + pat[:, :, 2], 0, hi_x)
    kk = ks[:, None]
    bits = smoothed[kk, ay, ax] < smoothed[kk, by, bx]
    return np.packbits(bits, axis=1, bitorder="little")


def brief_descriptor(pixels, kp: Keypoint) -> bytes:
    """256-bit steered BRIEF descriptor of one keypoint (strict ``<`` tests)."""
    px = np.asarray(getattr(pixels, "pixels", pixels), dtype=np.uint8)
    sm = box_sums(px[None])
    return bytes(brief_stack(sm, [0], [kp.y], [kp.x], [kp.orientation])[0])


def hamming(a: bytes, b: bytes) -> int:
    return int(np.unpackbits(np.frombuffer(bytes(x ^ y for x, y in zip(a, b)), dtype=np.uint8)).sum())


# -- feature vectors ---------------------------------------------------------------

def _fallback_parts(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = stack.shape[0]
    flat = stack.reshape(n, -1)
    bins = (flat >> 4).astype(np.intp) + 16 * np.arange(n)[:, None]
    counts = np.bincount(bins.ravel(), minlength=16 * n).reshape(n, 16)
    hist = np.floor(counts * 255.0 / flat.shape[1] + 0.5).astype(np.uint8)
    mean = np.floor(flat.mean(axis=1) + 0.5).astype(np.uint8)
    return hist, mean


def features_stack(stack: np.ndarray, t: int = DEFAULT_FAST_T, max_kp: int = DEFAULT_MAX_KP) -> list[FeatureVector]:
    """Canonical feature vectors for every chunk in a (N, side, side) stack."""
    stack = np.ascontiguousarray(stack, dtype=np.uint8)
    n = stack.shape[0]
    if n == 0:
        return []
    tags = tiger_rows(stack.reshape(n, -1))
    hist, mean = _fallback_parts(stack)
    per_chunk: list[list] = [[] for _ in range(n)]
    if min(stack.shape[1:]) >= MIN_FAST_SIDE:
        ks, ys, xs, _, th = fast_keypoints_stack(stack, t, max_kp)
        if ks.size:
            desc = brief_stack(box_sums(stack), ks, ys, xs, th)
            for k, y, x, d in zip(ks.tolist(), ys.tolist(), xs.tolist(), desc):
                per_chunk[k].append((y // CELL, x // CELL, bytes(d)))
    out = []
    for k in range(n):
        if per_chunk[k]:
            out.append(FeatureVector(KEYPOINT, tuple(sorted(per_chunk[k])), content=tags[k]))
        else:
            out.append(FeatureVector(FALLBACK, (), bytes(hist[k]), int(mean[k]), tags[k]))
    return out


def chunk_features(pixels, t: int = DEFAULT_FAST_T, max_kp: int = DEFAULT_MAX_KP) -> FeatureVector:
    """Feature vector of a single chunk (keypoint-based, else histogram fallback)."""
    px = np.asarray(getattr(pixels, "pixels", pixels), dtype=np.uint8)
    return features_stack(px[None], t, max_kp)[0]


def encode_features(f: FeatureVector) -> bytes:
    """``FV01`` | kind u8 | count u32 | records or (16 hist + mean) | 24-byte content tag.

    Keypoint records are (cell_y u8, cell_x u8, 32 descriptor bytes) in
    canonical order. All integers little-endian.
    """
    if not f.is_canonical():
        raise NonCanonicalInput("descriptors are not in canonical order")
    parts = [MAGIC, struct.pack("<BI", f.kind, len(f.descriptors))]
    if f.kind == KEYPOINT:
        for cy, cx, d in f.descriptors:
            if len(d) != DESCRIPTOR_BYTES or not (0 <= cy < 256 and 0 <= cx < 256):
                raise NonCanonicalInput("malformed descriptor record")
            parts.append(struct.pack("<BB", cy, cx) + d)
    else:
        if f.hist is None or len(f.hist) != 16 or f.mean is None:
            raise NonCanonicalInput("fallback vector needs 16 histogram bytes and a mean")
        parts.append(bytes(f.hist) + bytes([f.mean]))
    parts.append(f.content)
    return b"".join(parts)


def decode_features(blob: bytes) -> FeatureVector:
    blob = bytes(blob)
    if blob[:4] != MAGIC or len(blob) < 9 + DIGEST_SIZE:
        raise NonCanonicalInput("not an FV01 feature record")
    kind, count = struct.unpack_from("<BI", blob, 4)
    pos = 9
    if kind == KEYPOINT:
        need = pos + count * (2 + DESCRIPTOR_BYTES) + DIGEST_SIZE
        if count == 0 or len(blob) != need:
            raise NonCanonicalInput("bad keypoint record length")
        descs = []
        for _ in range(count):
            descs.append((blob[pos], blob[pos + 1], blob[pos + 2:pos + 2 + DESCRIPTOR_BYTES]))
            pos += 2 + DESCRIPTOR_BYTES
        f = FeatureVector(KEYPOINT, tuple(descs), content=blob[pos:])
    elif kind == FALLBACK:
        if count != 0 or len(blob) != pos + 17 + DIGEST_SIZE:
            raise NonCanonicalInput("bad fallback record length")
        f = FeatureVector(FALLBACK, (), blob[pos:pos + 16], blob[pos + 16], blob[pos + 17:])
    else:
        raise NonCanonicalInput(f"unknown kind byte {kind}")
    if not f.is_canonical():
        raise NonCanonicalInput("descriptors are not in canonical order")
    return f


def feature_digest(feature_bytes: bytes) -> bytes:
    return tiger_many([feature_bytes])[0]


def encode_stack(stack: np.ndarray, t: int = DEFAULT_FAST_T, max_kp: int = DEFAULT_MAX_KP) -> tuple[list[bytes], list[bytes]]:
    """Encoded feature records and their Tiger digests for a chunk stack."""
    enc = [encode_features(f) for f in features_stack(stack, t, max_kp)]
    return enc, tiger_many(enc)


def feature_summary(f: FeatureVector, max_kp: int = DEFAULT_MAX_KP) -> np.ndarray:
    """Fixed-length (20) real summary of a feature vector for the classifier:
    [is_keypoint, keypoint fill, descriptor bit density, mean/255, 16 hist/255]."""
    out = np.zeros(20)
    if f.kind == KEYPOINT:
        bits = np.unpackbits(np.frombuffer(b"".join(d for _, _, d in f.descriptors), dtype=np.uint8))
        out[0] = 1.0
        out[1] = min(len(f.descriptors), max_kp) / max_kp
        out[2] = bits.mean()
    else:
        out[3] = f.mean / 255.0
        out[4:] = np.frombuffer(f.hist, dtype=np.uint8) / 255.0
    return out
