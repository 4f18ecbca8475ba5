"""Synthetic corpus, chunk-size sweep and the analytic link model."""

from __future__ import annotations

import csv
import io
import math
import os
import socket
import tempfile
import threading
import time
from dataclasses import dataclass

import numpy as np

from .clustering import cluster_images, group_order, image_summary
from .config import Config
from .imgcore import GrayImage, read_pgm, write_pgm
from .protocol import Channel
from .quadtree import grid_stack
from .store import store_open
from .transfer import receive_session, send_images

CSV_COLUMNS = ("run_label", "depth", "chunk_px", "images", "chunks_total", "chunks_sent", "chunks_deduped",
               "bytes_raw", "bytes_on_wire", "wall_time_s", "dedup_ratio", "modeled_time_s",
               "modeled_baseline_s", "modeled_improvement")

CORPUS_SIDE = 512
BACKGROUND = 30
# body ellipse and per-image blob settings, tuned so that about 60% of depth-3
# chunks in a 100-image corpus repeat an earlier chunk
BODY_AXES = (200, 165)
BLOBS = (20, 32)
BLOB_RADIUS = (6, 14)


def _body() -> np.ndarray:
    yy, xx = np.mgrid[0:CORPUS_SIDE, 0:CORPUS_SIDE].astype(np.float64)
    c = CORPUS_SIDE / 2 - 0.5
    inside = ((xx - c) / BODY_AXES[0]) ** 2 + ((yy - c) / BODY_AXES[1]) ** 2 <= 1.0
    tissue = 110 + 25 * np.sin(xx / 9.0) * np.cos(yy / 13.0)
    img = np.where(inside, np.floor(tissue + 0.5), BACKGROUND)
    return img.astype(np.uint8), inside


def synthetic_image(index: int, seed: int = 0) -> GrayImage:
    """One corpus image: the shared body plus a few seeded noisy blobs inside it."""
    body, inside = _body()
    rng = np.random.default_rng([seed, index])
    img = body.copy()
    yy, xx = np.mgrid[0:CORPUS_SIDE, 0:CORPUS_SIDE]
    ys, xs = np.nonzero(inside)
    for _ in range(int(rng.integers(BLOBS[0], BLOBS[1] + 1))):
        k = int(rng.integers(ys.size))
        r = int(rng.integers(BLOB_RADIUS[0], BLOB_RADIUS[1] + 1))
        mask = ((yy - ys[k]) ** 2 + (xx - xs[k]) ** 2 <= r * r) & inside
        level = int(rng.integers(160, 240))
        noise = rng.integers(-20, 21, size=int(mask.sum()))
        img[mask] = np.clip(level + noise, 0, 255)
    return GrayImage(img)


def make_synthetic_corpus(out_dir, count: int, seed: int = 0) -> list[str]:
    """Write ``count`` 512x512 corpus images as ``img_XXXX.pgm``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k in range(count):
        path = os.path.join(out_dir, f"img_{k:04d}.pgm")
        write_pgm(path, synthetic_image(k, seed))
        paths.append(path)
    return paths


def load_corpus(corpus_dir) -> list[GrayImage]:
    names = sorted(f for f in os.listdir(corpus_dir) if f.lower().endswith(".pgm"))
    return [read_pgm(os.path.join(corpus_dir, f)) for f in names]


def duplicate_fraction(images, depth: int) -> float:
    """Fraction of chunks whose exact pixels already occurred earlier in the corpus."""
    seen, total = set(), 0
    for img in images:
        stack, _ = grid_stack(img, depth)
        for chunk in stack:
            seen.add(chunk.tobytes())
        total += stack.shape[0]
    return 1.0 - len(seen) / total


def transfer_order(images, cfg: Config) -> list[int]:
    """Send order: images grouped by clustering their summaries."""
    if len(images) < 2:
        return list(range(len(images)))
    summaries = [image_summary(img, cfg.depth, cfg.hom_threshold) for img in images]
    return group_order(cluster_images(summaries, cfg.kmeans_k, seed=cfg.seed))


@dataclass
class LinkModel:
    bandwidth: float
    latency: float
    window: int

    def round_trips(self, feats: int, naks: int = 0) -> int:
        return math.ceil(feats / self.window) + 1 + naks

    def time(self, bytes_on_wire: int, feats: int, naks: int = 0) -> float:
        return bytes_on_wire / self.bandwidth + self.round_trips(feats, naks) * self.latency

    def baseline(self, bytes_raw: int) -> float:
        return bytes_raw / self.bandwidth + self.latency


def loopback_transfer(images, cfg: Config, store_dir):
    """Send ``images`` to a fresh in-process receiver; returns (reports, seconds)."""
    store = store_open(store_dir, sync=False)
    left, right = socket.socketpair()
    failure = []

    def serve():
        ch = Channel(right)
        try:
            receive_session(ch, store)
        except Exception as exc:
            failure.append(exc)
        finally:
            ch.close()

    rx = threading.Thread(target=serve, daemon=True)
    rx.start()
    ch = Channel(left)
    t0 = time.perf_counter()
    reports = send_images(ch, images, cfg)
    elapsed = time.perf_counter() - t0
    ch.close()
    rx.join()
    store.close()
    if failure:
        raise failure[0]
    return reports, elapsed


def run_bench(images, depths, cfg: Config | None = None, run_label: str = "bench") -> list[dict]:
    """One row per depth, each using a fresh receiver store."""
    cfg = cfg or Config()
    order = transfer_order(images, cfg)
    ordered = [images[k] for k in order]
    link = LinkModel(cfg.bandwidth_bytes_per_s, cfg.latency_s, cfg.pipeline_window)
    rows = []
    for depth in depths:
        dcfg = cfg.replace(depth=depth)
        with tempfile.TemporaryDirectory(prefix="dedupix-bench-") as tmp:
            reports, elapsed = loopback_transfer(ordered, dcfg, tmp)
        total = sum(r.chunks_total for r in reports)
        sent = sum(r.chunks_sent for r in reports)
        deduped = sum(r.chunks_deduped for r in reports)
        raw = sum(r.bytes_raw for r in reports)
        wire = sum(r.bytes_on_wire for r in reports)
        naks = sum(r.naks for r in reports)
        if not all(r.verified for r in reports):
            raise RuntimeError(f"depth {depth}: transfer not verified")
        modeled = link.time(wire, total, naks)
        base = link.baseline(raw)
        _, cp = grid_stack(ordered[0], depth)
        rows.append({
            "run_label": run_label, "depth": depth, "chunk_px": cp, "images": len(images),
            "chunks_total": total, "chunks_sent": sent, "chunks_deduped": deduped,
            "bytes_raw": raw, "bytes_on_wire": wire, "wall_time_s": elapsed,
            "dedup_ratio": deduped / total if total else 0.0,
            "modeled_time_s": modeled, "modeled_baseline_s": base,
            "modeled_improvement": 1.0 - modeled / base,
        })
    return rows


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_COLUMNS)
    for row in rows:
        out.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()
