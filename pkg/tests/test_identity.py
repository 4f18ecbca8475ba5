import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dedupix.errors import ChunkTooSmall, NonCanonicalInput
from dedupix.identity import (FALLBACK, KEYPOINT, RING, FeatureVector, Keypoint, brief_descriptor,
                              chunk_features, decode_features, encode_features, fast_keypoints, hamming)
from dedupix.quadtree import ImageChunk
from dedupix.tiger import tiger

# Bresenham circle of radius 3, written out independently of the module
CIRCLE = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
          (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]


def is_corner(px, x, y, t):
    c = int(px[y, x])
    ring = [int(px[y + dy, x + dx]) for dx, dy in CIRCLE]
    for test in (lambda v: v > c + t, lambda v: v < c - t):
        flags = [test(v) for v in ring]
        for start in range(16):
            if all(flags[(start + k) % 16] for k in range(9)):
                return True
    return False


def fast_oracle(px, t, max_kp):
    h, w = px.shape
    score = -np.ones((h, w), int)
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            if is_corner(px, x, y, t):
                s = t
                while s + 1 <= 255 and is_corner(px, x, y, s + 1):
                    s += 1
                score[y, x] = s
    kps = []
    for y in range(h):
        for x in range(w):
            if score[y, x] < 0:
                continue
            nb = score[max(0, y - 1):y + 2, max(0, x - 1):x + 2]
            if score[y, x] >= nb.max():
                kps.append((-score[y, x], y, x))
    return [(x, y, -s) for s, y, x in sorted(kps)[:max_kp]]


def rand_vector(rng, kind):
    if kind == FALLBACK:
        return FeatureVector(FALLBACK, (), rng.integers(0, 256, 16, dtype=np.uint8).tobytes(),
                             int(rng.integers(256)), tiger(rng.bytes(8)))
    descs = sorted((int(rng.integers(8)), int(rng.integers(8)), rng.bytes(32))
                   for _ in range(int(rng.integers(1, 9))))
    return FeatureVector(KEYPOINT, tuple(descs), content=tiger(rng.bytes(8)))


class TestFast:
    def test_ring_constant_matches(self):
        assert list(RING) == CIRCLE

    def test_constant_chunk(self):
        assert fast_keypoints(np.full((16, 16), 90, np.uint8), 20, 8) == []

    def test_isolated_pixel(self):
        px = np.zeros((16, 16), np.uint8)
        px[8, 8] = 255
        # every ring pixel is darker than the centre, so the oracle calls it a corner
        expected = [(x, y, s) for x, y, s in fast_oracle(px, 20, 8)]
        got = [(k.x, k.y, k.score) for k in fast_keypoints(px, 20, 8)]
        assert got == expected == [(8, 8, 254)]
        px2 = np.zeros((16, 16), np.uint8)
        px2[1, 8] = 255
        assert fast_keypoints(px2, 20, 8) == []

    def test_square_corners(self):
        px = np.zeros((16, 16), np.uint8)
        px[5:11, 5:11] = 255
        kps = fast_keypoints(px, 20, 64)
        corners = [(5, 5), (10, 5), (5, 10), (10, 10)]
        for cx, cy in corners:
            assert any(abs(k.x - cx) <= 1 and abs(k.y - cy) <= 1 for k in kps)
        assert [(k.x, k.y, k.score) for k in kps] == fast_oracle(px, 20, 64)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        side = int(rng.integers(7, 33))
        px = rng.integers(0, 256, (side, side), dtype=np.uint8)
        if seed % 2:
            px = (px // 64 * 64).astype(np.uint8)
        got = [(k.x, k.y, k.score) for k in fast_keypoints(px, 20, 8)]
        assert got == fast_oracle(px, 20, 8)

    def test_keypoints_clear_of_border(self):
        px = np.random.default_rng(3).integers(0, 256, (20, 20), dtype=np.uint8)
        assert all(3 <= k.x < 17 and 3 <= k.y < 17 for k in fast_keypoints(px, 10, 50))

    def test_too_small(self):
        with pytest.raises(ChunkTooSmall):
            fast_keypoints(np.zeros((6, 6), np.uint8), 20, 8)

    def test_accepts_image_chunk(self):
        px = np.zeros((16, 16), np.uint8)
        px[8, 8] = 255
        assert len(fast_keypoints(ImageChunk(0, 0, px, False), 20, 8)) == 1


class TestBrief:
    def test_constant_is_zero(self):
        d = brief_descriptor(np.full((40, 40), 77, np.uint8), Keypoint(20, 20, 0, 0.3))
        assert d == bytes(32)

    def test_rotation_by_one_step(self):
        rng = np.random.default_rng(4)
        px = rng.integers(0, 256, (81, 81), dtype=np.uint8)
        from scipy import ndimage
        px = ndimage.gaussian_filter(px.astype(float), 2.0)
        px = np.clip(px, 0, 255).astype(np.uint8)
        base = brief_descriptor(px, Keypoint(40, 40, 0, 0.0))
        # rotate by 30 degrees about the keypoint (x right, y down)
        rot = ndimage.rotate(px.astype(float), -30, reshape=False, order=1, mode="nearest")
        turned = brief_descriptor(np.clip(rot, 0, 255).astype(np.uint8), Keypoint(40, 40, 0, np.pi / 6))
        assert hamming(base, turned) <= 64

    def test_random_patches_differ(self):
        rng = np.random.default_rng(5)
        dists = []
        for _ in range(100):
            a = rng.integers(0, 256, (32, 32), dtype=np.uint8)
            b = rng.integers(0, 256, (32, 32), dtype=np.uint8)
            kp = Keypoint(16, 16, 0, 0.0)
            dists.append(hamming(brief_descriptor(a, kp), brief_descriptor(b, kp)))
        assert abs(np.mean(dists) - 128) <= 40


class TestFeatures:
    def test_gray_chunks_equal(self):
        a = chunk_features(np.full((32, 32), 128, np.uint8))
        b = chunk_features(np.full((32, 32), 128, np.uint8))
        assert a == b and a.kind == FALLBACK

    def test_black_vs_white(self):
        a = chunk_features(np.zeros((16, 16), np.uint8))
        b = chunk_features(np.full((16, 16), 255, np.uint8))
        assert (a.mean, b.mean) == (0, 255) and a != b

    def test_textured_duplicate(self):
        px = np.random.default_rng(6).integers(0, 256, (64, 64), dtype=np.uint8)
        a, b = chunk_features(px), chunk_features(px.copy())
        assert a.kind == KEYPOINT and a == b
        assert a.is_canonical()

    def test_tiny_chunk_uses_fallback(self):
        px = np.random.default_rng(7).integers(0, 256, (4, 4), dtype=np.uint8)
        assert chunk_features(px).kind == FALLBACK

    def test_content_tag_separates_pixels(self):
        a = np.zeros((16, 16), np.uint8)
        b = a.copy()
        b[0, 0] = 3
        fa, fb = chunk_features(a), chunk_features(b)
        assert fa.hist == fb.hist and fa.mean == fb.mean
        assert encode_features(fa) != encode_features(fb)


class TestEncoding:
    def test_fallback_length(self):
        blob = encode_features(chunk_features(np.zeros((16, 16), np.uint8)))
        # magic, then kind + count + 16 histogram bytes + mean, then the content tag
        assert blob[:4] == b"FV01"
        assert len(blob) - 4 - 24 == 22

    def test_deterministic(self):
        f = chunk_features(np.random.default_rng(8).integers(0, 256, (32, 32), dtype=np.uint8))
        assert encode_features(f) == encode_features(f)

    def test_non_canonical(self):
        d1, d2 = (0, 1, bytes(32)), (0, 0, bytes(32))
        with pytest.raises(NonCanonicalInput):
            encode_features(FeatureVector(KEYPOINT, (d1, d2), content=bytes(24)))

    def test_decode_rejects_garbage(self):
        with pytest.raises(NonCanonicalInput):
            decode_features(b"FV02" + bytes(60))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([KEYPOINT, FALLBACK]))
    def test_roundtrip(self, seed, kind):
        f = rand_vector(np.random.default_rng(seed), kind)
        assert decode_features(encode_features(f)) == f

    def test_injective(self):
        rng = np.random.default_rng(9)
        vecs = [rand_vector(rng, kind) for kind in [KEYPOINT, FALLBACK] * 100]
        encs = [encode_features(v) for v in vecs]
        distinct = {v for v in vecs}
        assert len(set(encs)) == len(distinct)
