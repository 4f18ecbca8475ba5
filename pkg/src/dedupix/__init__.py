"""Deduplicating image transfer: quadtree chunking, ORB-style chunk identity,
Tiger Merkle roots and a chunk-level transfer protocol, plus the edge,
clustering and MLP tools used to describe and group images."""

from .imgcore import GrayImage, load_pgm, read_pgm, save_pgm, to_gray, write_pgm
from .tiger import tiger

__version__ = "0.1.0"

__all__ = ["GrayImage", "load_pgm", "save_pgm", "read_pgm", "write_pgm", "to_gray", "tiger"]
