import os
import re
import signal
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import square_image
from dedupix.bench import synthetic_image
from dedupix.cli import main
from dedupix.imgcore import GrayImage, read_pgm, write_pgm
from dedupix.store import store_open


@pytest.fixture
def square_pgm(tmp_path):
    path = tmp_path / "square.pgm"
    write_pgm(path, square_image())
    return path


def count_components(mask):
    seen = np.zeros_like(mask, bool)
    count = 0
    for y, x in zip(*np.nonzero(mask)):
        if seen[y, x]:
            continue
        count += 1
        stack = [(y, x)]
        seen[y, x] = True
        while stack:
            cy, cx = stack.pop()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < mask.shape[0] and 0 <= nx < mask.shape[1] and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
    return count


class TestPreprocess:
    def test_square(self, square_pgm, tmp_path):
        assert main(["preprocess", str(square_pgm), "--out-dir", str(tmp_path / "o")]) == 0
        edge = read_pgm(tmp_path / "o" / "square_edge.pgm").pixels > 0
        assert count_components(edge) == 1
        for suffix in ("photon", "binary"):
            assert (tmp_path / "o" / f"square_{suffix}.pgm").exists()

    def test_constant(self, tmp_path):
        write_pgm(tmp_path / "c.pgm", GrayImage(np.full((32, 32), 90, np.uint8)))
        assert main(["preprocess", str(tmp_path / "c.pgm")]) == 0
        assert not read_pgm(tmp_path / "c_edge.pgm").pixels.any()

    def test_missing_file(self, tmp_path):
        assert main(["preprocess", str(tmp_path / "absent.pgm")]) == 2

    def test_bad_config(self, square_pgm):
        assert main(["preprocess", str(square_pgm), "--canny_low", "500"]) == 3


def test_chunk(square_pgm, tmp_path, capsys):
    assert main(["chunk", str(square_pgm), "--depth", "1", "--out-dir", str(tmp_path / "c"),
                 "--tree", str(tmp_path / "t.txt")]) == 0
    assert "grid=2x2" in capsys.readouterr().out
    assert len(os.listdir(tmp_path / "c")) == 4
    assert len((tmp_path / "t.txt").read_text().strip().split("\n\n")) == 3


def test_send_without_paths():
    assert main(["send"]) == 3


def test_send_unreachable(square_pgm):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    assert main(["send", str(square_pgm), "--connect_addr", f"127.0.0.1:{port}"]) == 2


def test_bench_needs_two_images(tmp_path):
    write_pgm(tmp_path / "a.pgm", square_image())
    assert main(["bench", str(tmp_path)]) == 3


def test_corpus_and_bench(tmp_path, capsys):
    assert main(["corpus", str(tmp_path / "c"), "--count", "3"]) == 0
    assert main(["bench", str(tmp_path / "c"), "--depths", "2,3", "--out", str(tmp_path / "b.csv")]) == 0
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("run_label,depth")


def test_serve_send_reconstruct(tmp_path, capsys):
    imgs = [synthetic_image(k) for k in range(2)]
    paths = []
    for k, img in enumerate(imgs):
        paths.append(str(tmp_path / f"i{k}.pgm"))
        write_pgm(paths[-1], img)
    store_dir = tmp_path / "store"
    srv = subprocess.Popen([sys.executable, "-m", "dedupix.cli", "serve", "--store", str(store_dir),
                            "--listen_addr", "127.0.0.1:0"], stdout=subprocess.PIPE, text=True)
    try:
        port = int(re.search(r":(\d+)$", srv.stdout.readline().strip()).group(1))
        addr = ["--connect_addr", f"127.0.0.1:{port}"]

        # a client speaking garbage must not take the server down
        with socket.create_connection(("127.0.0.1", port)) as bad:
            bad.sendall(b"\xff\xff\xff")
            bad.recv(1)

        assert main(["send", *paths, *addr]) == 0
        first = capsys.readouterr().out.splitlines()
        assert main(["send", paths[0], *addr]) == 0
        second = capsys.readouterr().out.splitlines()
    finally:
        srv.send_signal(signal.SIGTERM)
        srv.wait(timeout=30)
    assert srv.returncode == 0
    assert first[0].startswith("path,image_id") and first[-1].startswith("TOTAL")
    assert second[1].split(",")[3] == "0"

    store = store_open(store_dir)
    assert len(store.manifests()) == 2
    image_id = second[1].split(",")[1]
    out = tmp_path / "back.pgm"
    assert main(["reconstruct", "--store", str(store_dir), image_id, str(out)]) == 0
    assert read_pgm(out) == imgs[0]
    assert main(["reconstruct", "--store", str(store_dir), "00" * 16, str(out)]) == 2
