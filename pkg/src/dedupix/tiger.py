"""Tiger-192 hash (Anderson & Biham, 1996).

Two code paths share the same S-boxes:

* :func:`tiger` -- scalar pure-Python reference, one message at a time.
* :func:`tiger_many` -- numpy lane-parallel version that hashes many messages
  at once (messages of equal length are compressed together).

The S-boxes are regenerated on first use with the published generation
procedure rather than pasted in as a 1024-entry literal.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

DIGEST_SIZE = 24
BLOCK_SIZE = 64

_MASK = (1 << 64) - 1
_IV = (0x0123456789ABCDEF, 0xFEDCBA9876543210, 0xF096A5B4C3B2E187)
_SBOX_SEED = b"Tiger - A Fast New Hash Function, by Ross Anderson and Eli Biham"


def _compress(sbox: Sequence[int], words: Sequence[int], state: Sequence[int]) -> tuple[int, int, int]:
    t1 = sbox[0:256]
    t2 = sbox[256:512]
    t3 = sbox[512:768]
    t4 = sbox[768:1024]
    x = list(words)
    a, b, c = state

    def rnd(a, b, c, xv, mul):
        c ^= xv
        a = (a - (t1[c & 255] ^ t2[(c >> 16) & 255] ^ t3[(c >> 32) & 255] ^ t4[(c >> 48) & 255])) & _MASK
        b = (b + (t4[(c >> 8) & 255] ^ t3[(c >> 24) & 255] ^ t2[(c >> 40) & 255] ^ t1[(c >> 56) & 255])) & _MASK
        return a, (b * mul) & _MASK, c

    def one_pass(a, b, c, mul):
        a, b, c = rnd(a, b, c, x[0], mul)
        b, c, a = rnd(b, c, a, x[1], mul)
        c, a, b = rnd(c, a, b, x[2], mul)
        a, b, c = rnd(a, b, c, x[3], mul)
        b, c, a = rnd(b, c, a, x[4], mul)
        c, a, b = rnd(c, a, b, x[5], mul)
        a, b, c = rnd(a, b, c, x[6], mul)
        b, c, a = rnd(b, c, a, x[7], mul)
        return a, b, c

    def key_schedule():
        x[0] = (x[0] - (x[7] ^ 0xA5A5A5A5A5A5A5A5)) & _MASK
        x[1] ^= x[0]
        x[2] = (x[2] + x[1]) & _MASK
        x[3] = (x[3] - (x[2] ^ ((~x[1] << 19) & _MASK))) & _MASK
        x[4] ^= x[3]
        x[5] = (x[5] + x[4]) & _MASK
        x[6] = (x[6] - (x[5] ^ ((~x[4] & _MASK) >> 23))) & _MASK
        x[7] ^= x[6]
        x[0] = (x[0] + x[7]) & _MASK
        x[1] = (x[1] - (x[0] ^ ((~x[7] << 19) & _MASK))) & _MASK
        x[2] ^= x[1]
        x[3] = (x[3] + x[2]) & _MASK
        x[4] = (x[4] - (x[3] ^ ((~x[2] & _MASK) >> 23))) & _MASK
        x[5] ^= x[4]
        x[6] = (x[6] + x[5]) & _MASK
        x[7] = (x[7] - (x[6] ^ 0x0123456789ABCDEF)) & _MASK

    aa, bb, cc = a, b, c
    a, b, c = one_pass(a, b, c, 5)
    key_schedule()
    c, a, b = one_pass(c, a, b, 7)
    key_schedule()
    b, c, a = one_pass(b, c, a, 9)
    return a ^ aa, (b - bb) & _MASK, (c + cc) & _MASK


@lru_cache(maxsize=None)
def sboxes() -> tuple[int, ...]:
    """Return the four 256-entry S-boxes concatenated (1024 64-bit words)."""
    words = [int.from_bytes(_SBOX_SEED[k:k + 8], "little") for k in range(0, 64, 8)]
    table = [bytearray([i & 255] * 8) for i in range(1024)]
    state = _IV
    abc = 2
    for _ in range(5):
        for i in range(256):
            for sb in range(0, 1024, 256):
                abc += 1
                if abc == 3:
                    abc = 0
                    current = [int.from_bytes(t, "little") for t in table]
                    state = _compress(current, words, state)
                sel = state[abc].to_bytes(8, "little")
                for col in range(8):
                    other = table[sb + sel[col]]
                    mine = table[sb + i]
                    mine[col], other[col] = other[col], mine[col]
    return tuple(int.from_bytes(t, "little") for t in table)


def _pad(message: bytes) -> bytes:
    n = len(message)
    return message + b"\x01" + b"\x00" * ((55 - n) % 64) + (8 * n & _MASK).to_bytes(8, "little")


def tiger(message: bytes) -> bytes:
    """Tiger-192 digest of ``message`` (24 bytes, reference byte order)."""
    sbox = sboxes()
    padded = _pad(bytes(message))
    state = _IV
    for off in range(0, len(padded), BLOCK_SIZE):
        words = [int.from_bytes(padded[off + k:off + k + 8], "little") for k in range(0, 64, 8)]
        state = _compress(sbox, words, state)
    return b"".join(v.to_bytes(8, "little") for v in state)


def hexdigest(digest: bytes) -> str:
    return digest.hex()


# ---------------------------------------------------------------------------
# numpy lane-parallel path

@lru_cache(maxsize=None)
def _np_tables() -> np.ndarray:
    return np.array(sboxes(), dtype=np.uint64).reshape(4, 256)


# byte positions of c feeding the subtracted / added lookups, and the table
# each byte indexes (t1..t4 -> rows 0..3)
_SUB_BYTES = np.array([0, 2, 4, 6])
_SUB_ROWS = np.array([0, 1, 2, 3]) * 256
_ADD_BYTES = np.array([1, 3, 5, 7])
_ADD_ROWS = np.array([3, 2, 1, 0]) * 256

_C_A5 = np.uint64(0xA5A5A5A5A5A5A5A5)
_C_01 = np.uint64(0x0123456789ABCDEF)
_S19 = np.uint64(19)
_S23 = np.uint64(23)


def _np_compress(flat: np.ndarray, x: list, a: np.ndarray, b: np.ndarray, c: np.ndarray):
    def rnd(a, b, c, xv, mul):
        c = c ^ xv
        cb = c.view(np.uint8).reshape(-1, 8).astype(np.intp)
        a = a - np.bitwise_xor.reduce(flat[cb[:, _SUB_BYTES] + _SUB_ROWS], axis=1)
        b = b + np.bitwise_xor.reduce(flat[cb[:, _ADD_BYTES] + _ADD_ROWS], axis=1)
        return a, b * mul, c

    def one_pass(a, b, c, mul):
        mul = np.uint64(mul)
        a, b, c = rnd(a, b, c, x[0], mul)
        b, c, a = rnd(b, c, a, x[1], mul)
        c, a, b = rnd(c, a, b, x[2], mul)
        a, b, c = rnd(a, b, c, x[3], mul)
        b, c, a = rnd(b, c, a, x[4], mul)
        c, a, b = rnd(c, a, b, x[5], mul)
        a, b, c = rnd(a, b, c, x[6], mul)
        b, c, a = rnd(b, c, a, x[7], mul)
        return a, b, c

    def key_schedule():
        x[0] = x[0] - (x[7] ^ _C_A5)
        x[1] = x[1] ^ x[0]
        x[2] = x[2] + x[1]
        x[3] = x[3] - (x[2] ^ (~x[1] << _S19))
        x[4] = x[4] ^ x[3]
        x[5] = x[5] + x[4]
        x[6] = x[6] - (x[5] ^ (~x[4] >> _S23))
        x[7] = x[7] ^ x[6]
        x[0] = x[0] + x[7]
        x[1] = x[1] - (x[0] ^ (~x[7] << _S19))
        x[2] = x[2] ^ x[1]
        x[3] = x[3] + x[2]
        x[4] = x[4] - (x[3] ^ (~x[2] >> _S23))
        x[5] = x[5] ^ x[4]
        x[6] = x[6] + x[5]
        x[7] = x[7] - (x[6] ^ _C_01)

    aa, bb, cc = a, b, c
    a, b, c = one_pass(a, b, c, 5)
    key_schedule()
    c, a, b = one_pass(c, a, b, 7)
    key_schedule()
    b, c, a = one_pass(b, c, a, 9)
    return a ^ aa, b - bb, c + cc


def _tiger_equal_length(blocks: np.ndarray) -> np.ndarray:
    """Hash ``L`` padded messages given as a (L, nblocks*8) uint64 array."""
    flat = _np_tables().reshape(-1)
    lanes = blocks.shape[0]
    a = np.full(lanes, _IV[0], dtype=np.uint64)
    b = np.full(lanes, _IV[1], dtype=np.uint64)
    c = np.full(lanes, _IV[2], dtype=np.uint64)
    for off in range(0, blocks.shape[1], 8):
        x = [np.ascontiguousarray(blocks[:, off + k]) for k in range(8)]
        a, b, c = _np_compress(flat, x, a, b, c)
    out = np.stack([a, b, c], axis=1).astype("<u8")
    return out.view(np.uint8).reshape(lanes, DIGEST_SIZE)


def tiger_rows(rows: np.ndarray) -> list[bytes]:
    """Digest every row of a 2-D uint8 array (all messages the same length)."""
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("tiger_rows expects a 2-D array of messages")
    lanes, n = rows.shape
    if lanes == 0:
        return []
    tail = np.frombuffer(_pad(b"\x00" * n)[n:], dtype=np.uint8)
    padded = np.empty((lanes, n + tail.size), dtype=np.uint8)
    padded[:, :n] = rows
    padded[:, n:] = tail
    words = padded.view("<u8").astype(np.uint64)
    digests = _tiger_equal_length(words)
    return [bytes(d) for d in digests]


def tiger_many(messages: Iterable[bytes]) -> list[bytes]:
    """Digest a batch of messages; equal-length messages share numpy lanes."""
    messages = [bytes(m) for m in messages]
    out: list[bytes | None] = [None] * len(messages)
    by_len: dict[int, list[int]] = {}
    for idx, msg in enumerate(messages):
        by_len.setdefault(len(msg), []).append(idx)
    for length, idxs in by_len.items():
        if len(idxs) == 1:
            out[idxs[0]] = tiger(messages[idxs[0]])
            continue
        rows = np.frombuffer(b"".join(messages[i] for i in idxs), dtype=np.uint8)
        for i, d in zip(idxs, tiger_rows(rows.reshape(len(idxs), length))):
            out[i] = d
    return out  # type: ignore[return-value]
