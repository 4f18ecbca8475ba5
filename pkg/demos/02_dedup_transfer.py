"""Send a few slices to an in-process receiver and watch the dedup counters.

Run: python demos/02_dedup_transfer.py
"""

import socket
import tempfile
import threading

from dedupix.bench import LinkModel, synthetic_image
from dedupix.config import Config
from dedupix.protocol import Channel
from dedupix.store import store_open
from dedupix.transfer import receive_session, reconstruct, send_images

cfg = Config(depth=3)
images = [synthetic_image(k) for k in range(6)]
images.append(images[0])  # an exact resend

tmp = tempfile.mkdtemp(prefix="dedupix-demo-")
store = store_open(tmp, sync=False)
left, right = socket.socketpair()
received = []
rx = threading.Thread(target=lambda: received.extend(receive_session(Channel(right), store)))
rx.start()

ch = Channel(left)
reports = send_images(ch, images, cfg)
ch.close()
rx.join()

for r in reports:
    print(r.image_id.hex()[:12], f"sent {r.chunks_sent:2d}/{r.chunks_total}",
          f"wire {r.bytes_on_wire:7d} B raw {r.bytes_raw} B verified={r.verified}")

print("store holds", len(store), "chunks for", len(store.manifests()), "images")

back = reconstruct(store.load_manifest(reports[3].image_id), store)
print("reconstructed image 3 matches:", back == images[3])

link = LinkModel(cfg.bandwidth_bytes_per_s, cfg.latency_s, cfg.pipeline_window)
wire = sum(r.bytes_on_wire for r in reports)
raw = sum(r.bytes_raw for r in reports)
feats = sum(r.chunks_total for r in reports)
t, base = link.time(wire, feats), link.baseline(raw)
print(f"modeled {t * 1e3:.1f} ms vs raw {base * 1e3:.1f} ms")
store.close()
