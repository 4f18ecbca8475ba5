import numpy as np
import pytest

from dedupix.errors import CountMismatch
from dedupix.identity import encode_features, features_stack
from dedupix.imgcore import GrayImage, load_pgm, save_pgm
from dedupix.merkle import merkle_build, merkle_root, roots_equal
from dedupix.quadtree import grid_stack
from dedupix.tiger import tiger, tiger_many


def leaves(k, seed=0):
    rng = np.random.default_rng(seed)
    return [tiger(rng.bytes(10)) for _ in range(k)]


class TestBuild:
    def test_single_leaf(self):
        (h,) = leaves(1)
        t = merkle_build([h], 1, 1)
        assert merkle_root(t) == h and len(t.levels) == 1

    def test_two_leaves(self):
        a, b = leaves(2)
        assert merkle_root(merkle_build([a, b], 1, 2)) == tiger(a + b)

    def test_three_leaves(self):
        a, b, c = leaves(3)
        assert merkle_build([a, b, c]).root == tiger(tiger(a + b) + tiger(c + c))

    def test_count_mismatch(self):
        with pytest.raises(CountMismatch):
            merkle_build(leaves(5), 2, 2)
        with pytest.raises(CountMismatch):
            merkle_build([], 0, 0)

    def test_levels_halve(self):
        t = merkle_build(leaves(6), 2, 3)
        assert [len(l) for l in t.levels] == [8, 4, 2, 1] and t.leaf_count == 6
        for lower, upper in zip(t.levels, t.levels[1:]):
            assert list(upper) == [tiger(lower[2 * i] + lower[2 * i + 1]) for i in range(len(upper))]

    def test_text_export(self):
        t = merkle_build(leaves(3))
        blocks = t.to_text().strip().split("\n\n")
        assert [len(b.split("\n")) for b in blocks] == [4, 2, 1]
        assert blocks[-1] == t.root.hex()


class TestRoot:
    def test_permutation_changes_root(self):
        ls = leaves(4)
        swapped = [ls[1], ls[0]] + ls[2:]
        assert merkle_root(ls) != merkle_root(swapped)

    def test_deterministic(self):
        assert merkle_root(leaves(9)) == merkle_root(leaves(9))

    def test_single_leaf_change(self):
        rng = np.random.default_rng(1)
        for trial in range(1000):
            ls = leaves(int(rng.integers(1, 17)), seed=trial)
            k = int(rng.integers(len(ls)))
            changed = list(ls)
            changed[k] = tiger(ls[k])
            assert merkle_root(ls) != merkle_root(changed)

    def test_roots_equal(self):
        (h,) = leaves(1)
        flipped = bytes([h[0] ^ 1]) + h[1:]
        assert roots_equal(h, h)
        assert not roots_equal(h, flipped) and not roots_equal(flipped, h)

    def test_root_survives_disk_roundtrip(self):
        px = np.random.default_rng(2).integers(0, 256, (70, 50), dtype=np.uint8)

        def root_of(img):
            stack, _ = grid_stack(img, 2)
            return merkle_root(tiger_many([encode_features(f) for f in features_stack(stack)]))

        img = GrayImage(px)
        assert root_of(img) == root_of(load_pgm(save_pgm(img)))
