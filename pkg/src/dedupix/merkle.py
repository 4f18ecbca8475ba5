"""Binary Merkle tree over chunk digests, hashed with Tiger."""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from .errors import CountMismatch
from .tiger import DIGEST_SIZE, tiger_many


@dataclass(frozen=True)
class MerkleTree:
    """``levels[0]`` holds the padded leaves in row-major order, ``levels[-1]`` the root."""

    leaf_count: int
    levels: tuple

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]

    def to_text(self) -> str:
        """One hex digest per line, leaves first, levels separated by blank lines."""
        return "\n\n".join("\n".join(h.hex() for h in lvl) for lvl in self.levels) + "\n"


def merkle_build(hashes, n: int | None = None, m: int | None = None) -> MerkleTree:
    """Build the tree over row-major chunk digests of an n x m grid.

    Leaves are padded to a power of two by repeating the last digest and each
    parent is ``tiger(left || right)``.
    """
    leaves = [bytes(h) for h in hashes]
    if n is not None or m is not None:
        if n is None or m is None or n * m != len(leaves):
            raise CountMismatch(f"expected {n}x{m} digests, got {len(leaves)}")
    if not leaves:
        raise CountMismatch("a Merkle tree needs at least one leaf")
    if any(len(h) != DIGEST_SIZE for h in leaves):
        raise CountMismatch("every leaf must be a 24-byte digest")
    width = 1
    while width < len(leaves):
        width *= 2
    level = leaves + [leaves[-1]] * (width - len(leaves))
    levels = [tuple(level)]
    while len(level) > 1:
        level = tiger_many([level[i] + level[i + 1] for i in range(0, len(level), 2)])
        levels.append(tuple(level))
    return MerkleTree(len(leaves), tuple(levels))


def merkle_root(tree) -> bytes:
    """Top digest of a tree (a plain digest list is built first)."""
    if not isinstance(tree, MerkleTree):
        tree = merkle_build(tree)
    return tree.root


def roots_equal(a: bytes, b: bytes) -> bool:
    """Constant-time byte equality of two roots."""
    return hmac.compare_digest(bytes(a), bytes(b))
