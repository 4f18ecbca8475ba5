import socket
import threading

import numpy as np
import pytest

from dedupix.config import Config
from dedupix.imgcore import GrayImage
from dedupix.protocol import Channel
from dedupix.store import store_open
from dedupix.transfer import receive_session, send_images

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def square_image(side=64, inner=32):
    px = np.zeros((side, side), dtype=np.uint8)
    a = (side - inner) // 2
    px[a:a + inner, a:a + inner] = 255
    return GrayImage(px)


def loopback(images, store, cfg=None, tamper=None):
    """Run one sender/receiver session over a socket pair.

    Returns (sender reports, receiver results, receiver exception or None).
    """
    left, right = socket.socketpair()
    box = {"results": [], "error": None}

    def serve():
        ch = Channel(right)
        try:
            box["results"] = receive_session(ch, store, on_image=None)
        except Exception as exc:
            box["error"] = exc
        finally:
            ch.close()

    t = threading.Thread(target=serve, daemon=True)
    t.start()
    ch = Channel(left, tamper=tamper)
    reports = send_images(ch, images, cfg or Config())
    ch.close()
    t.join(timeout=60)
    return reports, box["results"], box["error"]


@pytest.fixture
def store(tmp_path):
    s = store_open(tmp_path / "store", sync=False)
    yield s
    s.close()
