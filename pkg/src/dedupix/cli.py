"""``dedupix`` command-line interface.

Exit codes: 0 success, 2 I/O failure or incomplete transfer, 3 bad
configuration or arguments, 4 root mismatch.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import signal
import socket
import sys
import threading

from .bench import load_corpus, make_synthetic_corpus, rows_to_csv, run_bench, transfer_order
from .config import Config, add_config_flags, config_from_args, split_addr
from .errors import ConfigError, CorruptIndex, DedupixError, IoFailure, MissingChunk, RootMismatch
from .imgcore import GrayImage, read_pgm, write_pgm
from .merkle import merkle_build
from .preprocess import binarize_otsu, canny, photon_map
from .protocol import Channel
from .quadtree import chunk_grid, dump_chunks
from .store import store_open
from .transfer import prepare_images, receive_session, reconstruct, send_images

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_ROOT = 0, 2, 3, 4

log = logging.getLogger("dedupix")


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path) -> GrayImage:
    try:
        return read_pgm(path)
    except OSError as exc:
        raise _Exit(EXIT_IO, f"cannot read {path}: {exc}") from exc
    except DedupixError as exc:
        raise _Exit(EXIT_IO, f"cannot decode {path}: {exc}") from exc


def _stem(path) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def cmd_preprocess(args, cfg: Config) -> int:
    img = _read(args.input)
    edges = canny(img, cfg.canny_sigma, cfg.canny_ksize, cfg.canny_low, cfg.canny_high)
    photons = photon_map(edges, cfg.photon_epsilon, cfg.photon_decay)
    binary, t = binarize_otsu(img)
    out = args.out_dir or os.path.dirname(os.path.abspath(args.input))
    stem = _stem(args.input)
    try:
        os.makedirs(out, exist_ok=True)
        write_pgm(os.path.join(out, f"{stem}_edge.pgm"), edges.to_image())
        write_pgm(os.path.join(out, f"{stem}_photon.pgm"), photons.to_image())
        write_pgm(os.path.join(out, f"{stem}_binary.pgm"), GrayImage(binary))
    except OSError as exc:
        raise _Exit(EXIT_IO, str(exc)) from exc
    print(f"edges={int(edges.flags.sum())} otsu_threshold={t}")
    return EXIT_OK


def cmd_chunk(args, cfg: Config) -> int:
    img = _read(args.input)
    prep = next(prepare_images([img], cfg.depth, cfg.fast_t, cfg.max_kp))
    man = prep.manifest
    print(f"image_id={man.image_id.hex()} root={man.root.hex()} grid={man.n}x{man.m} chunk_px={man.chunk_px}")
    try:
        if args.out_dir:
            grid = chunk_grid(img, cfg.depth, cfg.hom_threshold)
            dump_chunks(grid, man.image_id.hex(), args.out_dir)
        if args.tree:
            with open(args.tree, "w", encoding="ascii") as fh:
                fh.write(merkle_build(man.chunk_digests, man.n, man.m).to_text())
    except OSError as exc:
        raise _Exit(EXIT_IO, str(exc)) from exc
    return EXIT_OK


def _open_store(path):
    try:
        return store_open(path, strict=False)
    except IoFailure as exc:
        raise _Exit(EXIT_IO, f"cannot open store {path}: {exc}") from exc


def cmd_serve(args, cfg: Config) -> int:
    store = _open_store(args.store)
    for d in store.corrupt:
        log.warning("skipped corrupt store entry %s", d.hex())
    host, port = split_addr(cfg.listen_addr)
    try:
        srv = socket.create_server((host, port))
    except OSError as exc:
        raise _Exit(EXIT_IO, f"cannot listen on {cfg.listen_addr}: {exc}") from exc
    stop = threading.Event()

    def on_signal(signum, frame):
        stop.set()

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, on_signal)
        signal.signal(signal.SIGINT, on_signal)
    srv.settimeout(0.2)
    print(f"listening on {host}:{srv.getsockname()[1]}", flush=True)

    def session(conn, peer):
        ch = Channel(conn)
        try:
            def report(res):
                r = res.report
                print(f"image={r.image_id.hex()} total={r.chunks_total} sent={r.chunks_sent} "
                      f"deduped={r.chunks_deduped} bytes={r.bytes_on_wire} verified={r.verified}", flush=True)
            receive_session(ch, store, on_image=report)
        except DedupixError as exc:
            log.warning("session from %s aborted: %s", peer, exc)
        finally:
            ch.close()

    workers, served = [], 0
    try:
        while not stop.is_set() and (args.max_sessions is None or served < args.max_sessions):
            try:
                conn, peer = srv.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.settimeout(None)
            t = threading.Thread(target=session, args=(conn, peer), daemon=True)
            t.start()
            workers.append(t)
            served += 1
        for t in workers:
            t.join()
    finally:
        srv.close()
        store.close()
    return EXIT_OK


SEND_COLUMNS = ("path", "image_id", "chunks_total", "chunks_sent", "chunks_deduped", "bytes_raw",
                "bytes_on_wire", "wall_time_s", "dedup_ratio", "verified")


def cmd_send(args, cfg: Config) -> int:
    if not args.paths:
        raise _Exit(EXIT_CONFIG, "no images given")
    images = [_read(p) for p in args.paths]
    order = transfer_order(images, cfg)
    host, port = split_addr(cfg.connect_addr)
    try:
        sock = socket.create_connection((host, port), timeout=10)
        sock.settimeout(None)
    except OSError as exc:
        raise _Exit(EXIT_IO, f"cannot reach {cfg.connect_addr}: {exc}") from exc
    ch = Channel(sock)
    try:
        reports = send_images(ch, [images[k] for k in order], cfg, peer=cfg.connect_addr)
    finally:
        ch.close()
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(SEND_COLUMNS)
    for k, rep in zip(order, reports):
        ratio = rep.chunks_deduped / rep.chunks_total if rep.chunks_total else 0.0
        out.writerow([args.paths[k], rep.image_id.hex(), rep.chunks_total, rep.chunks_sent, rep.chunks_deduped,
                      rep.bytes_raw, rep.bytes_on_wire, f"{rep.wall_time:.6f}", f"{ratio:.6f}", rep.verified])
    total = sum(r.chunks_total for r in reports)
    deduped = sum(r.chunks_deduped for r in reports)
    out.writerow(["TOTAL", "", total, sum(r.chunks_sent for r in reports), deduped,
                  sum(r.bytes_raw for r in reports), sum(r.bytes_on_wire for r in reports),
                  f"{sum(r.wall_time for r in reports):.6f}", f"{deduped / total if total else 0.0:.6f}",
                  all(r.verified for r in reports)])
    sys.stdout.flush()
    if any(r.error == "ROOT_MISMATCH" for r in reports):
        return EXIT_ROOT
    if not all(r.verified for r in reports):
        log.error("transfer incomplete: %s", "; ".join(r.error or "" for r in reports if not r.verified))
        return EXIT_IO
    return EXIT_OK


def cmd_bench(args, cfg: Config) -> int:
    try:
        images = load_corpus(args.corpus_dir)
    except (OSError, DedupixError) as exc:
        raise _Exit(EXIT_IO, f"cannot load corpus {args.corpus_dir}: {exc}") from exc
    if len(images) < 2:
        raise _Exit(EXIT_CONFIG, "the bench needs a corpus of at least two images")
    try:
        depths = [int(d) for d in args.depths.split(",") if d.strip()]
    except ValueError:
        raise _Exit(EXIT_CONFIG, f"bad depth list {args.depths!r}") from None
    if not depths or min(depths) < 0:
        raise _Exit(EXIT_CONFIG, "depths must be non-negative integers")
    text = rows_to_csv(run_bench(images, depths, cfg, args.label))
    if args.out:
        try:
            with open(args.out, "w", encoding="ascii") as fh:
                fh.write(text)
        except OSError as exc:
            raise _Exit(EXIT_IO, str(exc)) from exc
    sys.stdout.write(text)
    return EXIT_OK


def cmd_corpus(args, cfg: Config) -> int:
    if args.count < 0:
        raise _Exit(EXIT_CONFIG, "count must be >= 0")
    try:
        paths = make_synthetic_corpus(args.out_dir, args.count, cfg.seed)
    except OSError as exc:
        raise _Exit(EXIT_IO, str(exc)) from exc
    print(f"wrote {len(paths)} images to {args.out_dir}")
    return EXIT_OK


def cmd_reconstruct(args, cfg: Config) -> int:
    store = _open_store(args.store)
    try:
        manifest = store.load_manifest(args.image_id)
        img = reconstruct(manifest, store)
        write_pgm(args.output, img)
    except RootMismatch as exc:
        raise _Exit(EXIT_ROOT, str(exc)) from exc
    except (IoFailure, MissingChunk, OSError) as exc:
        raise _Exit(EXIT_IO, str(exc)) from exc
    print(f"wrote {img.width}x{img.height} image to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dedupix", description="Deduplicating image transfer toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        add_config_flags(sp)
        sp.set_defaults(func=func)
        return sp

    sp = add("preprocess", cmd_preprocess, "edge, photon and binary maps of one image")
    sp.add_argument("input")
    sp.add_argument("--out-dir", default=None)

    sp = add("chunk", cmd_chunk, "chunk an image and print its Merkle root")
    sp.add_argument("input")
    sp.add_argument("--out-dir", default=None, help="dump chunks as PGM files here")
    sp.add_argument("--tree", default=None, help="write the Merkle tree as text")

    sp = add("serve", cmd_serve, "run a receiver")
    sp.add_argument("--store", required=True)
    sp.add_argument("--max-sessions", type=int, default=None)

    sp = add("send", cmd_send, "send images to a receiver")
    sp.add_argument("paths", nargs="*")

    sp = add("bench", cmd_bench, "chunk-size sweep over a corpus")
    sp.add_argument("corpus_dir")
    sp.add_argument("--depths", default="1,2,3,4")
    sp.add_argument("--out", default=None)
    sp.add_argument("--label", default="bench")

    sp = add("corpus", cmd_corpus, "write the synthetic benchmark corpus")
    sp.add_argument("out_dir")
    sp.add_argument("--count", type=int, default=100)

    sp = add("reconstruct", cmd_reconstruct, "rebuild a stored image from its manifest")
    sp.add_argument("--store", required=True)
    sp.add_argument("image_id")
    sp.add_argument("output")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except _Exit as exc:
        log.error("%s", exc)
        return exc.code
    except CorruptIndex as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
