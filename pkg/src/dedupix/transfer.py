"""Deduplicating image transfer: sender, receiver and verified reconstruction.

Per image the sender emits ROOT, one FEAT per chunk in row-major order, and
DONE. The receiver answers every FEAT with ACK_HAVE or ACK_NEED (in FEAT
order) and the sender follows each ACK_NEED with the CHUNK. Up to
``pipeline_window`` FEATs may be unanswered, across image boundaries, so the
CHUNKs of one image may trail its DONE. Once an image is complete the
receiver rebuilds the Merkle root from its store and replies ROOT_OK or
ROOT_MISMATCH; verdicts come back in image order.

A chunk whose pixels do not match the digest announced for it is NAKed once
and expected again at the back of the chunk queue; a second failure aborts
the session.
"""

from __future__ import annotations

import queue
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .errors import (ConnectionLost, CountMismatch, DigestMismatch, MissingChunk, PeerProtocolError,
                     ProtocolViolation, RootMismatch)
from .identity import decode_features, encode_features, features_stack
from .imgcore import GrayImage
from .merkle import merkle_build, roots_equal
from .protocol import (ACK_HAVE, ACK_NEED, MSG_CHUNK, MSG_DONE, MSG_FEAT, MSG_ROOT, NAK, ROOT_MISMATCH,
                       ROOT_OK, Channel, encode_chunk, encode_feat, encode_ij)
from .quadtree import ChunkGrid, ImageChunk, grid_stack, reassemble
from .store import ROOT_LAYOUT, ChunkStore, ImageManifest
from .tiger import tiger, tiger_many

FEAT_HEADER = 1 + 2 + 2 + 24 + 4
CHUNK_HEADER = 1 + 2 + 2 + 4


@dataclass
class TransferReport:
    image_id: bytes = b""
    chunks_total: int = 0
    chunks_sent: int = 0
    chunks_deduped: int = 0
    bytes_on_wire: int = 0
    bytes_raw: int = 0
    wall_time: float = 0.0
    verified: bool = False
    naks: int = 0
    error: str | None = None


@dataclass
class PreparedImage:
    manifest: ImageManifest
    features: list
    chunks: np.ndarray


@dataclass
class SentHistory:
    """Sender-side record of digests already shipped to each peer (advisory only)."""

    peers: dict = field(default_factory=dict)

    def add(self, peer: str, digest: bytes) -> None:
        self.peers.setdefault(peer, set()).add(digest)

    def seen(self, peer: str, digest: bytes) -> bool:
        return digest in self.peers.get(peer, ())


def protocol_overhead(chunks_total: int, max_kp: int = 8, padding: int = 0) -> int:
    """Upper bound on bytes beyond raw pixels for one clean image transfer."""
    max_feature = 9 + 34 * max_kp + 24
    return 1 + ROOT_LAYOUT.size + 1 + padding + chunks_total * (FEAT_HEADER + max_feature + CHUNK_HEADER)


def image_id_for(root: bytes, width: int, height: int) -> bytes:
    return tiger(b"dedupix-image" + root + struct.pack(">II", width, height))[:16]


def prepare_images(images, depth: int = 3, fast_t: int = 20, max_kp: int = 8, max_pixels: int = 1 << 21):
    """Yield a PreparedImage per input, extracting features in batches of images."""
    images = list(images)
    pos = 0
    while pos < len(images):
        batch, stacks, total, cp0 = [], [], 0, None
        while pos < len(images):
            stack, cp = grid_stack(images[pos], depth)
            if batch and (cp != cp0 or total + stack.size > max_pixels):
                break
            batch.append(images[pos])
            stacks.append(stack)
            total += stack.size
            cp0 = cp
            pos += 1
        all_chunks = np.concatenate(stacks)
        encoded = [encode_features(f) for f in features_stack(all_chunks, fast_t, max_kp)]
        digests = tiger_many(encoded)
        start = 0
        n = 2 ** depth
        for img, stack in zip(batch, stacks):
            stop = start + stack.shape[0]
            leaves = digests[start:stop]
            root = merkle_build(leaves, n, n).root
            manifest = ImageManifest(image_id_for(root, img.width, img.height), root, n, n, cp0,
                                     img.width, img.height, tuple(leaves))
            yield PreparedImage(manifest, encoded[start:stop], stack)
            start = stop


def _reply_queue(channel: Channel) -> queue.Queue:
    """Start (once per channel) a thread that pumps incoming replies into a queue."""
    q = getattr(channel, "_replies", None)
    if q is not None:
        return q
    q = queue.Queue()

    def pump():
        try:
            while True:
                msg = channel.recv()
                q.put(msg)
                if msg is None:
                    return
        except Exception as exc:  # handed to the consumer
            q.put(exc)

    channel._replies = q
    threading.Thread(target=pump, name="dedupix-replies", daemon=True).start()
    return q


def send_images(channel: Channel, images, config: Config | None = None, history: SentHistory | None = None,
                peer: str = "peer") -> list[TransferReport]:
    """Send images back-to-back over one connection; one report per image.

    A lost connection marks unfinished images unverified instead of raising;
    a reply that breaks the protocol raises PeerProtocolError.
    """
    cfg = config or Config()
    images = list(images)
    window = cfg.pipeline_window
    replies = _reply_queue(channel)
    channel.buffered = True
    reports: list[TransferReport] = []
    started: list[float] = []
    outstanding: deque = deque()   # (ctx, i, j, digest, chunk) awaiting an ACK
    shipped: deque = deque()       # [ctx, i, j, chunk, retries] that may still be NAKed
    awaiting: deque = deque()      # contexts awaiting a verdict

    def send(ctx: int, tag: int, body: bytes) -> None:
        reports[ctx].bytes_on_wire += channel.send(tag, body)

    def handle(msg) -> None:
        if isinstance(msg, Exception):
            raise msg if isinstance(msg, ConnectionLost) else ConnectionLost(str(msg))
        if msg is None:
            raise ConnectionLost("receiver closed the connection")
        if msg.tag in (ACK_HAVE, ACK_NEED):
            if not outstanding:
                raise PeerProtocolError("acknowledgement without an outstanding FEAT")
            ctx, i, j, digest, chunk = outstanding.popleft()
            if (msg.i, msg.j) != (i, j):
                raise PeerProtocolError(f"ACK for ({msg.i},{msg.j}) while ({i},{j}) was expected")
            if msg.tag == ACK_NEED:
                send(ctx, MSG_CHUNK, encode_chunk(i, j, chunk))
                reports[ctx].chunks_sent += 1
                shipped.append([ctx, i, j, chunk, 0])
                if history is not None:
                    history.add(peer, digest)
            else:
                reports[ctx].chunks_deduped += 1
        elif msg.tag == NAK:
            cands = [e for e in shipped if e[1] == msg.i and e[2] == msg.j]
            if not cands:
                raise PeerProtocolError(f"NAK for unknown chunk ({msg.i},{msg.j})")
            fresh = [e for e in cands if e[4] == 0]
            entry = (fresh or cands)[0]
            entry[4] += 1
            reports[entry[0]].naks += 1
            send(entry[0], MSG_CHUNK, encode_chunk(entry[1], entry[2], entry[3]))
        elif msg.tag in (ROOT_OK, ROOT_MISMATCH):
            if not awaiting:
                raise PeerProtocolError("verdict without a finished image")
            ctx = awaiting.popleft()
            rep = reports[ctx]
            rep.verified = msg.tag == ROOT_OK
            rep.wall_time = time.perf_counter() - started[ctx]
            if not rep.verified:
                rep.error = "ROOT_MISMATCH"
            for e in [e for e in shipped if e[0] == ctx]:
                shipped.remove(e)
        else:
            raise PeerProtocolError(f"unexpected {msg.name} from receiver")

    def drain() -> None:
        while True:
            try:
                msg = replies.get_nowait()
            except queue.Empty:
                return
            handle(msg)

    def wait_one() -> None:
        channel.flush()
        handle(replies.get())

    try:
        for prep in prepare_images(images, cfg.depth, cfg.fast_t, cfg.max_kp):
            man = prep.manifest
            ctx = len(reports)
            reports.append(TransferReport(man.image_id, man.n * man.m, bytes_raw=man.orig_w * man.orig_h))
            started.append(time.perf_counter())
            send(ctx, MSG_ROOT, man.root_payload())
            for k, (digest, feature) in enumerate(zip(man.chunk_digests, prep.features)):
                while len(outstanding) >= window:
                    wait_one()
                i, j = divmod(k, man.m)
                send(ctx, MSG_FEAT, encode_feat(i, j, digest, feature))
                outstanding.append((ctx, i, j, digest, prep.chunks[k].tobytes()))
                if k % 64 == 63:
                    drain()
            send(ctx, MSG_DONE, b"")
            awaiting.append(ctx)
            drain()
        while awaiting:
            wait_one()
    except ConnectionLost as exc:
        for rep in reports:
            if not rep.verified and rep.error is None:
                rep.error = f"connection lost: {exc}"
    while len(reports) < len(images):
        reports.append(TransferReport(error="not sent"))
    return reports


def send_image(channel: Channel, img: GrayImage, config: Config | None = None, **kw) -> TransferReport:
    return send_images(channel, [img], config, **kw)[0]


# -- receiver ------------------------------------------------------------------

@dataclass
class ReceivedImage:
    manifest: ImageManifest | None
    report: TransferReport
    image: GrayImage | None = None


@dataclass
class _Context:
    header: tuple
    started: float
    digests: list = field(default_factory=list)
    haves: list = field(default_factory=list)
    pending: int = 0
    done: bool = False
    report: TransferReport = field(default_factory=TransferReport)


def reconstruct(manifest: ImageManifest, store: ChunkStore, verify_pixels: bool = True) -> GrayImage:
    """Rebuild an image from the store after checking its Merkle root.

    The image id must match the root and original dimensions. Leaf
    digests are recomputed from the stored feature bytes; with
    ``verify_pixels`` the chunk pixels are also checked against the content
    tags carried in those features.
    """
    if not roots_equal(image_id_for(manifest.root, manifest.orig_w, manifest.orig_h), manifest.image_id):
        raise RootMismatch("image id does not match the root and dimensions")
    m = manifest.m
    missing = [divmod(k, m) for k, d in enumerate(manifest.chunk_digests) if d not in store]
    if missing:
        raise MissingChunk(missing)
    unique = list(dict.fromkeys(manifest.chunk_digests))
    entries = {d: store.get(d) for d in unique}
    recomputed = dict(zip(unique, tiger_many([entries[d][0] for d in unique])))
    leaves = [recomputed[d] for d in manifest.chunk_digests]
    if not roots_equal(merkle_build(leaves, manifest.n, m).root, manifest.root):
        raise RootMismatch("recomputed Merkle root differs from the announced root")
    size = manifest.chunk_px * manifest.chunk_px
    if any(len(entries[d][1]) != size for d in unique):
        raise RootMismatch("stored chunk has the wrong size")
    if verify_pixels:
        tags = tiger_many([entries[d][1] for d in unique])
        for d, tag in zip(unique, tags):
            if decode_features(entries[d][0]).content != tag:
                raise RootMismatch(f"chunk pixels of {d.hex()} do not match their features")
    cp = manifest.chunk_px
    chunks = []
    for k, d in enumerate(manifest.chunk_digests):
        px = np.frombuffer(entries[d][1], dtype=np.uint8).reshape(cp, cp)
        chunks.append(ImageChunk(k // m, k % m, px, False))
    return reassemble(ChunkGrid(manifest.n, m, cp, chunks), manifest.orig_w, manifest.orig_h)


def receive_session(channel: Channel, store: ChunkStore, on_image=None, max_retries: int = 1) -> list[ReceivedImage]:
    """Serve one sender connection until it closes; one entry per finished image.

    Raises ProtocolViolation on malformed traffic and DigestMismatch when a
    chunk fails verification again after its NAK; the caller should then
    drop the connection.
    """
    contexts: deque = deque()
    expected: deque = deque()   # [ctx, i, j, digest, feature, retries]
    promised: dict = {}         # digest -> feature bytes of a chunk already asked for
    current: _Context | None = None
    results: list[ReceivedImage] = []

    def finalize(ctx: _Context) -> None:
        image_id, root, n, m, cp, w, h = ctx.header
        rep = ctx.report
        manifest, image = None, None
        try:
            manifest = ImageManifest(image_id, root, n, m, cp, w, h, tuple(ctx.digests))
            image = reconstruct(manifest, store, verify_pixels=False)
            rep.verified = True
        except (RootMismatch, MissingChunk, CountMismatch) as exc:
            rep.error = f"{type(exc).__name__}: {exc}"
        if rep.verified:
            store.incref(ctx.haves)
            store.save_manifest(manifest)
        channel.send(ROOT_OK if rep.verified else ROOT_MISMATCH)
        rep.wall_time = time.perf_counter() - ctx.started
        res = ReceivedImage(manifest, rep, image)
        results.append(res)
        if on_image is not None:
            on_image(res)

    while True:
        before = channel.bytes_received
        msg = channel.recv()
        if msg is None:
            if contexts or expected or (current is not None and not current.done):
                raise ConnectionLost("sender closed the connection mid-image")
            return results
        size = channel.bytes_received - before
        if msg.tag == MSG_ROOT:
            if current is not None and not current.done:
                raise ProtocolViolation("ROOT before the previous image's DONE")
            header = ROOT_LAYOUT.unpack(msg.payload)
            current = _Context(header, time.perf_counter())
            current.report.image_id = header[0]
            current.report.bytes_raw = header[5] * header[6]
            current.report.bytes_on_wire += size
            contexts.append(current)
        elif msg.tag == MSG_FEAT:
            if current is None or current.done:
                raise ProtocolViolation("FEAT outside an image")
            n, m = current.header[2], current.header[3]
            k = len(current.digests)
            if k >= n * m or (msg.i, msg.j) != divmod(k, m):
                raise ProtocolViolation(f"FEAT ({msg.i},{msg.j}) out of order")
            rep = current.report
            rep.bytes_on_wire += size
            rep.chunks_total += 1
            current.digests.append(msg.digest)
            if store.has(msg.payload, msg.digest) or promised.get(msg.digest) == msg.payload:
                current.haves.append(msg.digest)
                rep.chunks_deduped += 1
                channel.send(ACK_HAVE, encode_ij(msg.i, msg.j))
            else:
                promised.setdefault(msg.digest, msg.payload)
                expected.append([current, msg.i, msg.j, msg.digest, msg.payload, 0])
                current.pending += 1
                rep.chunks_sent += 1
                channel.send(ACK_NEED, encode_ij(msg.i, msg.j))
        elif msg.tag == MSG_CHUNK:
            if not expected:
                raise ProtocolViolation("CHUNK that was never requested")
            entry = expected.popleft()
            ctx, i, j, digest, feature, retries = entry
            if (msg.i, msg.j) != (i, j):
                raise ProtocolViolation(f"CHUNK ({msg.i},{msg.j}) while ({i},{j}) was expected")
            ctx.report.bytes_on_wire += size
            cp = ctx.header[4]
            try:
                if len(msg.payload) != cp * cp:
                    raise DigestMismatch(f"chunk ({i},{j}) has {len(msg.payload)} bytes, expected {cp * cp}")
                store.put(feature, digest, msg.payload)
            except DigestMismatch:
                if retries >= max_retries:
                    raise
                entry[5] += 1
                ctx.report.naks += 1
                expected.append(entry)
                channel.send(NAK, encode_ij(i, j))
                continue
            if promised.get(digest) == feature:
                del promised[digest]
            ctx.pending -= 1
        elif msg.tag == MSG_DONE:
            if current is None or current.done:
                raise ProtocolViolation("DONE outside an image")
            current.report.bytes_on_wire += size
            current.done = True
        else:
            raise ProtocolViolation(f"unexpected {msg.name} from sender")
        while contexts and contexts[0].done and contexts[0].pending == 0:
            finalize(contexts.popleft())


def receive_image(channel: Channel, store: ChunkStore) -> tuple[ImageManifest | None, TransferReport]:
    """Serve a single-image session and return its manifest and report."""
    results = receive_session(channel, store)
    if len(results) != 1:
        raise ProtocolViolation(f"expected exactly one image, received {len(results)}")
    return results[0].manifest, results[0].report
