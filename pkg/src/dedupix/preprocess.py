"""Edge pipeline (Gaussian, Sobel, NMS, hysteresis), Otsu binarization and
the simplified photon-intensity map.

Every neighbourhood operation replicates border pixels (edge clamp).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadDecay, BadEpsilon, BadKernelSize, BadThresholds, ImageTooSmall
from .imgcore import GrayImage

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True)
class EdgeMap:
    flags: np.ndarray

    @property
    def width(self) -> int:
        return self.flags.shape[1]

    @property
    def height(self) -> int:
        return self.flags.shape[0]

    def to_image(self) -> GrayImage:
        return GrayImage(np.where(self.flags, 255, 0).astype(np.uint8))


@dataclass(frozen=True)
class PhotonMap:
    intensity: np.ndarray
    epsilon: float
    decay: float

    def to_image(self) -> GrayImage:
        return GrayImage(np.clip(np.floor(self.intensity + 0.5), 0, 255).astype(np.uint8))


def gaussian_kernel(sigma: float, ksize: int) -> np.ndarray:
    r = ksize // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def _round_clip(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def gaussian_smooth(img: GrayImage, sigma: float, ksize: int) -> GrayImage:
    if sigma <= 0:
        raise BadKernelSize(f"sigma must be positive, got {sigma}")
    if ksize < 1 or ksize % 2 == 0 or ksize > min(img.width, img.height):
        raise BadKernelSize(f"ksize {ksize} must be odd and <= {min(img.width, img.height)}")
    kernel = gaussian_kernel(sigma, ksize)
    out = ndimage.correlate(img.pixels.astype(np.float64), kernel, mode="nearest")
    return GrayImage(_round_clip(out))


def _shifted(padded: np.ndarray, dy: int, dx: int, h: int, w: int) -> np.ndarray:
    return padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]


def sobel_gradients(img: GrayImage) -> GradientField:
    """3x3 Sobel masks; magnitude is the L1 norm ``|gx| + |gy|``."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmall(f"Sobel needs at least 3x3, got {img.width}x{img.height}")
    h, w = img.height, img.width
    p = np.pad(img.pixels.astype(np.int32), 1, mode="edge")
    s = lambda dy, dx: _shifted(p, dy, dx, h, w)  # noqa: E731
    gx = (s(-1, 1) + 2 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2 * s(0, -1) + s(1, -1))
    gy = (s(1, -1) + 2 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2 * s(-1, 0) + s(-1, 1))
    magnitude = np.abs(gx) + np.abs(gy)
    direction = np.arctan2(gy, gx).astype(np.float64)
    return GradientField(gx, gy, magnitude, direction)


# values within this distance of a bin boundary count as a tie
_TIE_EPS = 1e-6


def _direction_bins(theta: np.ndarray) -> np.ndarray:
    t = np.mod(theta, math.pi)
    k = np.ceil((t - math.pi / 8 - _TIE_EPS) / (math.pi / 4)).astype(np.int64)
    return np.mod(k, 4)


def quantize_direction(theta: float) -> int:
    """Nearest of 0/45/90/135 degrees (mod 180); ties go to the smaller angle."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    return int(_direction_bins(np.asarray(theta))) * 45


# neighbour offsets (dy, dx) along the gradient for each direction bin
_NMS_OFFSETS = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


def non_max_suppress(field: GradientField, intensity: np.ndarray | None = None) -> np.ndarray:
    """Thin the gradient magnitude along the quantized gradient direction.

    A pixel survives when its magnitude is >= both neighbours along the
    gradient. With ``intensity`` given, an exact magnitude tie against a
    neighbour is resolved in favour of the brighter pixel, which keeps the
    two-pixel plateaus of symmetric steps one pixel thick while staying
    equivariant under right-angle rotations. Border pixels are zeroed.
    """
    mag = np.asarray(field.magnitude)
    h, w = mag.shape
    out = np.zeros_like(mag)
    if h < 3 or w < 3:
        return out
    bins = _direction_bins(field.direction)
    pm = np.pad(mag, 1, mode="edge")
    pi_ = None if intensity is None else np.pad(np.asarray(intensity, dtype=np.int32), 1, mode="edge")
    keep = np.zeros((h, w), dtype=bool)
    for b, (dy, dx) in _NMS_OFFSETS.items():
        sel = bins == b
        if not sel.any():
            continue
        ok = np.ones((h, w), dtype=bool)
        for sgn in (1, -1):
            nb = _shifted(pm, sgn * dy, sgn * dx, h, w)
            if pi_ is None:
                ok &= mag >= nb
            else:
                nbi = _shifted(pi_, sgn * dy, sgn * dx, h, w)
                own = _shifted(pi_, 0, 0, h, w)
                ok &= (mag > nb) | ((mag == nb) & (own >= nbi))
        keep |= sel & ok
    keep[0, :] = keep[-1, :] = False
    keep[:, 0] = keep[:, -1] = False
    out[keep] = mag[keep]
    return out


def hysteresis(thinned: np.ndarray, low: float, high: float) -> EdgeMap:
    """Dual-threshold tracking: 8-connected runs >= low that touch a pixel >= high."""
    if not (0 <= low < high):
        raise BadThresholds(f"need 0 <= low < high, got low={low}, high={high}")
    thinned = np.asarray(thinned)
    weak = thinned >= low
    labels, count = ndimage.label(weak, structure=_EIGHT)
    if count == 0:
        return EdgeMap(np.zeros(thinned.shape, dtype=bool))
    seeded = np.unique(labels[thinned >= high])
    seeded = seeded[seeded > 0]
    return EdgeMap(np.isin(labels, seeded))


def canny(img: GrayImage, sigma: float = 1.0, ksize: int = 5, low: float = 40, high: float = 100) -> EdgeMap:
    smooth = gaussian_smooth(img, sigma, ksize)
    field = sobel_gradients(smooth)
    thinned = non_max_suppress(field, intensity=smooth.pixels)
    return hysteresis(thinned, low, high)


def _between_class_key(hist: list[int], t: int, csum: list[int], ccount: list[int]):
    """Between-class variance at threshold t as an exact fraction (num, den)."""
    n0 = ccount[t]
    n1 = ccount[255] - n0
    if n0 == 0 or n1 == 0:
        return 0, 1
    s0 = csum[t]
    s1 = csum[255] - s0
    diff = s0 * n1 - s1 * n0
    return diff * diff, n0 * n1


def otsu_threshold(pixels: np.ndarray) -> int:
    hist = np.bincount(np.asarray(pixels, dtype=np.uint8).ravel(), minlength=256).tolist()
    nonzero = [v for v in range(256) if hist[v]]
    if len(nonzero) == 1:
        return nonzero[0]
    csum, ccount = [], []
    s = c = 0
    for v in range(256):
        s += v * hist[v]
        c += hist[v]
        csum.append(s)
        ccount.append(c)
    best_t, best = 0, (0, 1)
    for t in range(256):
        num, den = _between_class_key(hist, t, csum, ccount)
        # strict comparison keeps the smallest threshold on ties
        if num * best[1] > best[0] * den:
            best_t, best = t, (num, den)
    return best_t


def binarize_otsu(img: GrayImage) -> tuple[np.ndarray, int]:
    """Otsu threshold over the 256-bin histogram; returns (0/1 raster, threshold).

    A constant image yields threshold == its value and an all-zero raster.
    """
    t = otsu_threshold(img.pixels)
    return (img.pixels > t).astype(np.uint8), t


def photon_map(edges: EdgeMap, epsilon: float = 1.0, decay: float = 0.9) -> PhotonMap:
    """Diffuse light from edge pixels ring by ring.

    Edge pixels emit 255. Each following 8-connected ring takes ``decay`` times
    the mean of its neighbours in the previous ring; a value below ``epsilon``
    becomes 0 and does not propagate further.
    """
    if not (0 < decay < 1):
        raise BadDecay(f"decay must lie in (0, 1), got {decay}")
    if not (epsilon > 0):
        raise BadEpsilon(f"epsilon must be positive, got {epsilon}")
    flags = np.asarray(edges.flags, dtype=bool)
    h, w = flags.shape
    value = np.where(flags, 255.0, 0.0)
    assigned = flags.copy()
    live = flags.copy()
    while live.any():
        pv = np.pad(np.where(assigned, value, 0.0), 1)
        pa = np.pad(assigned, 1).astype(np.int32)
        pl = np.pad(live, 1)
        total = np.zeros((h, w))
        count = np.zeros((h, w), dtype=np.int32)
        touches_live = np.zeros((h, w), dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                total += _shifted(pv, dy, dx, h, w)
                count += _shifted(pa, dy, dx, h, w)
                touches_live |= _shifted(pl, dy, dx, h, w)
        ring = touches_live & ~assigned
        if not ring.any():
            break
        cand = decay * total[ring] / count[ring]
        ring_vals = np.where(cand >= epsilon, cand, 0.0)
        value[ring] = ring_vals
        assigned |= ring
        live = np.zeros((h, w), dtype=bool)
        live[ring] = ring_vals > 0
    return PhotonMap(value, float(epsilon), float(decay))
