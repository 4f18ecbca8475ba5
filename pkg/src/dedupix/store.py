"""Persistent content-addressed chunk store and per-image manifests.

On-disk layout under ``root_dir``::

    chunks/<hex-digest>.bin     feat_len (u32 BE) | feature bytes | chunk pixels
    index.tsv                   hex digest, feat_len, chunk_len, refcount
    manifests/<image-id>.manifest   MSG_ROOT payload followed by the digests

``index.tsv`` is appended to on every change (the last line for a digest
wins) and compacted on open and on :meth:`ChunkStore.flush`.
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass

from .errors import CorruptIndex, CountMismatch, DigestMismatch, IoFailure, NonCanonicalInput
from .identity import decode_features
from .merkle import merkle_root
from .tiger import DIGEST_SIZE, tiger, tiger_many

ROOT_LAYOUT = struct.Struct(">16s24sHHHII")


@dataclass(frozen=True)
class ImageManifest:
    image_id: bytes
    root: bytes
    n: int
    m: int
    chunk_px: int
    orig_w: int
    orig_h: int
    chunk_digests: tuple

    def __post_init__(self):
        if len(self.chunk_digests) != self.n * self.m:
            raise CountMismatch(f"{len(self.chunk_digests)} digests for a {self.n}x{self.m} grid")

    def root_payload(self) -> bytes:
        return ROOT_LAYOUT.pack(self.image_id, self.root, self.n, self.m, self.chunk_px, self.orig_w, self.orig_h)

    def to_bytes(self) -> bytes:
        return self.root_payload() + b"".join(self.chunk_digests)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ImageManifest":
        if len(blob) < ROOT_LAYOUT.size:
            raise CountMismatch("manifest shorter than its header")
        image_id, root, n, m, cp, w, h = ROOT_LAYOUT.unpack_from(blob)
        body = blob[ROOT_LAYOUT.size:]
        if len(body) != n * m * DIGEST_SIZE:
            raise CountMismatch("manifest digest list does not match its grid")
        digests = tuple(body[k:k + DIGEST_SIZE] for k in range(0, len(body), DIGEST_SIZE))
        return cls(image_id, root, n, m, cp, w, h, digests)

    def consistent(self) -> bool:
        return merkle_root(list(self.chunk_digests)) == self.root


@dataclass
class _Entry:
    feature: bytes
    chunk_len: int
    refcount: int


def _content_ok(feature: bytes, chunk: bytes) -> bool:
    try:
        return decode_features(feature).content == tiger(chunk)
    except NonCanonicalInput:
        return False


class ChunkStore:
    """Map digest -> (feature bytes, chunk pixels, refcount) backed by a directory.

    Lookups are lock-free; every mutation takes the store lock, so several
    receiver sessions may share one store.
    """

    def __init__(self, root_dir, sync: bool = True):
        self.root_dir = os.fspath(root_dir)
        self.sync = sync
        self.corrupt: list[bytes] = []
        self._index: dict[bytes, _Entry] = {}
        self._lock = threading.RLock()
        self._log = None

    # -- paths
    def _chunk_path(self, digest: bytes) -> str:
        return os.path.join(self.root_dir, "chunks", digest.hex() + ".bin")

    @property
    def index_path(self) -> str:
        return os.path.join(self.root_dir, "index.tsv")

    @property
    def manifest_dir(self) -> str:
        return os.path.join(self.root_dir, "manifests")

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, digest) -> bool:
        return bytes(digest) in self._index

    def digests(self) -> list[bytes]:
        return sorted(self._index)

    def refcount(self, digest: bytes) -> int:
        e = self._index.get(bytes(digest))
        return e.refcount if e else 0

    # -- loading
    def _load(self, strict: bool) -> None:
        rows = {}
        if os.path.exists(self.index_path):
            with open(self.index_path, "r", encoding="ascii") as fh:
                for line in fh:
                    parts = line.split()
                    if len(parts) != 4:
                        continue
                    try:
                        rows[bytes.fromhex(parts[0])] = (int(parts[1]), int(parts[2]), int(parts[3]))
                    except ValueError:
                        continue
        bad, blobs = [], {}
        for digest, (flen, clen, ref) in rows.items():
            if ref <= 0:
                continue
            try:
                with open(self._chunk_path(digest), "rb") as fh:
                    blob = fh.read()
            except OSError:
                bad.append(digest)
                continue
            if len(blob) != 4 + flen + clen or struct.unpack_from(">I", blob)[0] != flen:
                bad.append(digest)
                continue
            blobs[digest] = (blob[4:4 + flen], blob[4 + flen:], ref)
        keys = list(blobs)
        feat_digests = tiger_many([blobs[k][0] for k in keys])
        pix_digests = tiger_many([blobs[k][1] for k in keys])
        for k, fd, pd in zip(keys, feat_digests, pix_digests):
            feature, chunk, ref = blobs[k]
            try:
                tag = decode_features(feature).content
            except NonCanonicalInput:
                tag = None
            if fd != k or tag != pd:
                bad.append(k)
                continue
            self._index[k] = _Entry(feature, len(chunk), ref)
        self.corrupt = sorted(bad)
        if bad and strict:
            raise CorruptIndex(self.corrupt)
        self._compact()

    def _compact(self) -> None:
        with self._lock:
            self._close_log()
            tmp = self.index_path + ".tmp"
            try:
                with open(tmp, "w", encoding="ascii") as fh:
                    for d in sorted(self._index):
                        e = self._index[d]
                        fh.write(f"{d.hex()}\t{len(e.feature)}\t{e.chunk_len}\t{e.refcount}\n")
                    fh.flush()
                    if self.sync:
                        os.fsync(fh.fileno())
                os.replace(tmp, self.index_path)
            except OSError as exc:
                raise IoFailure(str(exc)) from exc

    def _append(self, lines: list[str]) -> None:
        if self._log is None:
            self._log = open(self.index_path, "a", encoding="ascii")
        self._log.write("".join(lines))
        self._log.flush()
        if self.sync:
            os.fsync(self._log.fileno())

    def _close_log(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    # -- queries and updates
    def has(self, feature: bytes, digest: bytes) -> bool:
        """True iff the digest is stored with exactly these feature bytes."""
        e = self._index.get(bytes(digest))
        return e is not None and e.feature == bytes(feature)

    def get(self, digest: bytes) -> tuple[bytes, bytes]:
        """(feature bytes, chunk pixels) of a stored digest; KeyError if absent."""
        digest = bytes(digest)
        e = self._index[digest]
        try:
            with open(self._chunk_path(digest), "rb") as fh:
                blob = fh.read()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        flen = len(e.feature)
        return blob[4:4 + flen], blob[4 + flen:]

    def put(self, feature: bytes, digest: bytes, chunk: bytes) -> None:
        """Store a chunk durably, or bump its refcount if it is already held.

        The digest must be the Tiger hash of the feature bytes and the
        feature's content tag must match the chunk pixels.
        """
        feature, digest, chunk = bytes(feature), bytes(digest), bytes(chunk)
        if tiger(feature) != digest:
            raise DigestMismatch(f"digest {digest.hex()} does not match its feature bytes")
        with self._lock:
            e = self._index.get(digest)
            if e is not None:
                e.refcount += 1
                self._append([f"{digest.hex()}\t{len(feature)}\t{e.chunk_len}\t{e.refcount}\n"])
                return
            if not _content_ok(feature, chunk):
                raise DigestMismatch(f"chunk pixels do not match the content tag of {digest.hex()}")
            path = self._chunk_path(digest)
            tmp = path + ".tmp"
            try:
                with open(tmp, "wb") as fh:
                    fh.write(struct.pack(">I", len(feature)) + feature + chunk)
                    fh.flush()
                    if self.sync:
                        os.fsync(fh.fileno())
                os.replace(tmp, path)
                self._index[digest] = _Entry(feature, len(chunk), 1)
                self._append([f"{digest.hex()}\t{len(feature)}\t{len(chunk)}\t1\n"])
            except OSError as exc:
                raise IoFailure(str(exc)) from exc

    def incref(self, digests) -> None:
        """Add one reference per listed (already stored) digest."""
        with self._lock:
            lines = []
            for d in digests:
                e = self._index[bytes(d)]
                e.refcount += 1
                lines.append(f"{bytes(d).hex()}\t{len(e.feature)}\t{e.chunk_len}\t{e.refcount}\n")
            if lines:
                self._append(lines)

    def remove(self, digest: bytes) -> None:
        """Drop an entry entirely (index first, then the chunk file)."""
        digest = bytes(digest)
        with self._lock:
            e = self._index.pop(digest, None)
            if e is None:
                return
            self._append([f"{digest.hex()}\t{len(e.feature)}\t{e.chunk_len}\t0\n"])
            try:
                os.remove(self._chunk_path(digest))
            except OSError:
                pass

    def flush(self) -> None:
        self._compact()

    def close(self) -> None:
        self._compact()
        self._close_log()

    # -- manifests
    def save_manifest(self, manifest: ImageManifest) -> str:
        path = os.path.join(self.manifest_dir, manifest.image_id.hex() + ".manifest")
        tmp = path + ".tmp"
        try:
            with open(tmp, "wb") as fh:
                fh.write(manifest.to_bytes())
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        return path

    def load_manifest(self, image_id) -> ImageManifest:
        name = image_id.hex() if isinstance(image_id, bytes) else str(image_id)
        try:
            with open(os.path.join(self.manifest_dir, name + ".manifest"), "rb") as fh:
                return ImageManifest.from_bytes(fh.read())
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    def manifests(self) -> list[str]:
        return sorted(f[:-9] for f in os.listdir(self.manifest_dir) if f.endswith(".manifest"))


def store_open(root_dir, strict: bool = True, sync: bool = True) -> ChunkStore:
    """Open (creating if needed) a store and verify every indexed entry.

    Entries whose chunk file is missing or does not hash to its digest are
    dropped and listed in ``store.corrupt``; with ``strict`` a CorruptIndex
    naming them is raised instead.
    """
    store = ChunkStore(root_dir, sync=sync)
    try:
        os.makedirs(os.path.join(store.root_dir, "chunks"), exist_ok=True)
        os.makedirs(store.manifest_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    store._load(strict)
    return store


def store_has(store: ChunkStore, feature: bytes, digest: bytes) -> bool:
    return store.has(feature, digest)


def store_put(store: ChunkStore, feature: bytes, digest: bytes, chunk: bytes) -> None:
    store.put(feature, digest, chunk)
