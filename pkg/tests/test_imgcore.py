import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dedupix.errors import LengthMismatch, MalformedHeader, TruncatedPayload, UnsupportedMaxval
from dedupix.imgcore import GrayImage, load_pgm, read_pgm, save_pgm, to_gray, write_pgm


class TestLoad:
    def test_two_by_two(self):
        img = load_pgm(b"P5 2 2 255\n" + bytes([0, 255, 0, 255]))
        assert (img.width, img.height) == (2, 2)
        assert img.data == bytes([0, 255, 0, 255])

    def test_single_pixel(self):
        img = load_pgm(b"P5 1 1 255\n" + bytes([7]))
        assert img.pixels[0, 0] == 7

    def test_truncated(self):
        with pytest.raises(TruncatedPayload):
            load_pgm(b"P5 4 4 255\n" + bytes(8))

    def test_comments_in_header(self):
        img = load_pgm(b"P5\n# made by hand\n3 1\n# depth\n255\n" + bytes([1, 2, 3]))
        assert img.data == bytes([1, 2, 3])

    def test_bad_magic(self):
        with pytest.raises(MalformedHeader):
            load_pgm(b"P2 1 1 255\n7")

    def test_sixteen_bit_rejected(self):
        with pytest.raises(UnsupportedMaxval):
            load_pgm(b"P5 1 1 65535\n" + bytes(2))


class TestSave:
    def test_canonical_header(self):
        assert save_pgm(GrayImage(np.zeros((1, 1), np.uint8))) == b"P5\n1 1\n255\n\x00"

    def test_random_roundtrip(self):
        px = np.random.default_rng(0).integers(0, 256, (64, 64), dtype=np.uint8)
        assert load_pgm(save_pgm(GrayImage(px))) == GrayImage(px)

    def test_white_roundtrip(self):
        img = GrayImage(np.full((5, 9), 255, np.uint8))
        assert load_pgm(save_pgm(img)) == img

    def test_file_roundtrip(self, tmp_path):
        img = GrayImage(np.arange(12, dtype=np.uint8).reshape(3, 4))
        write_pgm(tmp_path / "a.pgm", img)
        assert read_pgm(tmp_path / "a.pgm") == img

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20))))
    def test_roundtrip_property(self, px):
        assert load_pgm(save_pgm(GrayImage(px))) == GrayImage(px)


class TestToGray:
    def test_white(self):
        assert to_gray(bytes([255, 255, 255, 9]), 1, 1).pixels[0, 0] == 255

    def test_black(self):
        assert to_gray(bytes([0, 0, 0, 200]), 1, 1).pixels[0, 0] == 0

    def test_pure_red(self):
        # round(0.299 * 255) = round(76.245)
        assert to_gray(bytes([255, 0, 0, 255]), 1, 1).pixels[0, 0] == 76

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            to_gray(bytes(7), 1, 2)

    def test_gray_replication_is_identity(self):
        g = np.arange(256, dtype=np.uint8)
        rgba = np.stack([g, g, g, np.full_like(g, 255)], axis=1).tobytes()
        assert to_gray(rgba, 256, 1).data == g.tobytes()
