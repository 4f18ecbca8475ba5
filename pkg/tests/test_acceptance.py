"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict that the terminal summary
prints under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, loopback, square_image
from test_clustering import brute_force_inertia
from test_mlp import XOR_X, XOR_Y, finite_difference_check
from test_preprocess import components, otsu_oracle
from dedupix.bench import CSV_COLUMNS, duplicate_fraction, rows_to_csv, run_bench, synthetic_image
from dedupix.clustering import fcm_iterations, kmeans
from dedupix.config import Config
from dedupix.errors import DigestMismatch
from dedupix.imgcore import GrayImage
from dedupix.mlp import forward, init_model, one_hot, train
from dedupix.preprocess import canny, otsu_threshold
from dedupix.protocol import MSG_CHUNK, MSG_FEAT, MSG_ROOT
from dedupix.store import store_open
from dedupix.tiger import tiger

CORPUS_SIZE = 100
SWEEP = [1, 2, 3, 4]


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def corpus():
    t0 = time.perf_counter()
    images = [synthetic_image(k, seed=0) for k in range(CORPUS_SIZE)]
    return images, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep(corpus):
    images, _ = corpus
    t0 = time.perf_counter()
    rows = run_bench(images, SWEEP, Config(seed=0), "acceptance")
    return rows, time.perf_counter() - t0


def test_c1_transfer_improvement(corpus):
    images, gen_time = corpus
    dup = duplicate_fraction(images, 3)
    t0 = time.perf_counter()
    (row,) = run_bench(images, [3], Config(seed=0), "c1")
    runtime = gen_time + time.perf_counter() - t0
    ok = 0.5 <= dup <= 0.7 and row["modeled_improvement"] >= 0.20 and runtime < 120
    record(1, ok, f"depth-3 duplicate fraction {dup:.3f}, modeled improvement "
                  f"{row['modeled_improvement']:.3f} (need >= 0.20), runtime {runtime:.1f}s (< 120s)")


def test_c2_chunk_size_trend(sweep):
    rows, runtime = sweep
    ratios = [r["dedup_ratio"] for r in rows]
    steps = np.diff(ratios)
    ok = bool(np.all(steps >= 0) and np.any(steps > 0) and runtime < 300)
    record(2, ok, "dedup_ratio by depth 1..4 = " + ", ".join(f"{r:.3f}" for r in ratios)
           + f", runtime {runtime:.1f}s (< 300s)")


def random_image(rng):
    h, w = (int(v) for v in rng.integers(1, 97, size=2))
    kind = rng.integers(3)
    if kind == 0:
        px = rng.integers(0, 256, (h, w))
    elif kind == 1:
        px = rng.integers(0, 3, (h, w)) * 100
    else:
        px = np.full((h, w), int(rng.integers(256)))
        px[rng.random((h, w)) < 0.05] = 255
    return GrayImage(px.astype(np.uint8))


def test_c3_integrity(tmp_path):
    rng = np.random.default_rng(2024)
    store = store_open(tmp_path / "rt", sync=False)
    clean_ok = 0
    for trial in range(200):
        img = random_image(rng)
        depth = int(rng.integers(0, 5))
        (rep,), results, err = loopback([img], store, Config(depth=depth))
        if err is None and rep.verified and len(results) == 1 and results[0].image == img:
            clean_ok += 1
    store.close()

    outcomes = {"ROOT_MISMATCH": 0, "NAK-then-abort": 0, "other": 0}
    silent = 0
    for trial in range(50):
        img = GrayImage(rng.integers(0, 256, (64, 64), dtype=np.uint8))
        hook = corruption(rng, trial % 4)
        s = store_open(tmp_path / f"bad{trial}", sync=False)
        (rep,), results, err = loopback([img], s, Config(depth=3), tamper=hook)
        if rep.verified or any(r.image is not None and r.image != img for r in results):
            silent += 1
        elif rep.error == "ROOT_MISMATCH" and err is None:
            outcomes["ROOT_MISMATCH"] += 1
        elif isinstance(err, DigestMismatch) and rep.naks >= 1:
            outcomes["NAK-then-abort"] += 1
        else:
            outcomes["other"] += 1
        s.close()
    ok = clean_ok == 200 and silent == 0 and outcomes["other"] == 0
    record(3, ok, f"{clean_ok}/200 clean round trips bit-identical with ROOT_OK; 50 corrupted: "
                  f"{outcomes['ROOT_MISMATCH']} ROOT_MISMATCH, {outcomes['NAK-then-abort']} NAK-then-abort, "
                  f"{outcomes['other']} other, {silent} silently wrong")


def corruption(rng, kind):
    """Tamper hook for one corruption scenario.

    0: one chunk's pixels flipped on every transmission
    1: one feature record's bytes flipped
    2: one announced digest flipped
    3: ROOT header flipped (root, image id, or dimensions)
    """
    target = int(rng.integers(64))
    byte = int(rng.integers(256))
    bit = 1 << int(rng.integers(8))
    state = {"k": 0, "ij": None}

    def hook(tag, body):
        b = bytearray(body)
        if kind == 0 and tag == MSG_CHUNK:
            if state["k"] == target:
                state["ij"] = bytes(b[:4])
            state["k"] += 1
            if bytes(b[:4]) == state["ij"]:
                b[8 + byte % (len(b) - 8)] ^= bit
        elif kind in (1, 2) and tag == MSG_FEAT:
            if state["k"] == target:
                if kind == 1:
                    b[33 + byte % (len(b) - 33)] ^= bit
                else:
                    b[4 + byte % 24] ^= bit
            state["k"] += 1
        elif kind == 3 and tag == MSG_ROOT:
            # image id and root (0..39) or width/height (46..53); grid fields are left alone
            pos = [*range(40), *range(46, 54)][byte % 48]
            b[pos] ^= bit
        return bytes(b)
    return hook


def test_c4_tiger_vectors():
    vectors = {
        b"": "3293ac630c13f0245f92bbb1766e16167a4e58492dde73f3",
        b"abc": "2aab1484e8c158f2bfb8c5ff41b57a525129131c957b5f93",
        b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+-":
            "f71c8583902afb879edfe610f82c0d4786a3a534504486b5",
    }
    got = {m: tiger(m).hex() for m in vectors}
    ok = got == vectors
    record(4, ok, f"{sum(got[m] == v for m, v in vectors.items())}/3 reference digests match")


def test_c5_canny():
    flags = canny(square_image(), 1.0, 5, 40, 100).flags
    blocks = flags[:-1, :-1] & flags[1:, :-1] & flags[:-1, 1:] & flags[1:, 1:]
    contour = components(flags) == 1 and components(~flags, eight=False) == 2 and not blocks.any()
    empty = all(not canny(GrayImage(np.full((40, 40), v, np.uint8))).flags.any() for v in (0, 77, 255))
    record(5, contour and empty, f"square: {components(flags)} 8-connected contour, closed="
                                 f"{components(~flags, eight=False) == 2}, thin={not blocks.any()}; "
                                 f"constant images empty={empty}")


def test_c6_otsu():
    rng = np.random.default_rng(6)
    agree = 0
    for _ in range(100):
        h, w = (int(v) for v in rng.integers(1, 33, size=2))
        if rng.random() < 0.5:
            px = rng.integers(0, 256, (h, w), dtype=np.uint8)
        else:
            lo, hi = sorted(int(v) for v in rng.integers(0, 256, size=2))
            px = rng.integers(lo, hi + 1, (h, w)).astype(np.uint8)
        agree += otsu_threshold(px) == otsu_oracle(px)
    record(6, agree == 100, f"{agree}/100 thresholds equal the exhaustive argmax")


def test_c7_kmeans():
    rng = np.random.default_rng(7)
    worst, count = 0.0, 0
    for n in range(1, 9):
        for d in (1, 2):
            for k in range(1, min(3, n) + 1):
                x = rng.normal(size=(n, d)) * rng.uniform(0.5, 5)
                best = kmeans(x, k, n_init=20, seed=count).inertia
                worst = max(worst, abs(best - brute_force_inertia(x, k)))
                count += 1
    record(7, worst <= 1e-9, f"{count} instances, max |inertia - brute force| = {worst:.2e} (<= 1e-9)")


def test_c8_fcm():
    rng = np.random.default_rng(8)
    worst = 0.0
    for trial in range(20):
        x = rng.normal(size=(int(rng.integers(3, 30)), int(rng.integers(1, 4))))
        c = int(rng.integers(2, min(4, len(x)) + 1))
        m = float(rng.uniform(1.2, 3.0))
        for _, w in fcm_iterations(x, c, m, seed=trial, max_iter=50):
            worst = max(worst, float(np.abs(w.sum(axis=1) - 1).max()))
    x = np.array([[0.0], [5.0], [10.0]])
    _, w = next(fcm_iterations(x, 2, 2.0, init_partition=[[1, 0], [0.5, 0.5], [0, 1]]))
    sym = bool(np.allclose(w[1], [0.5, 0.5], atol=1e-12))
    record(8, worst <= 1e-9 and sym, f"max |row sum - 1| = {worst:.2e} over every iteration; "
                                     f"equidistant point memberships {w[1].round(12).tolist()}")


def test_c9_mlp():
    model = init_model([2, 3, 2], seed=9)
    x = np.random.default_rng(9).normal(size=(6, 2))
    y = one_hot([0, 1, 1, 0, 0, 1], 2)
    err = finite_difference_check(model, x, y, h=1e-5)
    trained, _ = train(init_model([2, 4, 1], seed=0), XOR_X, XOR_Y, 5000, 0.5, seed=0)
    acc = int(np.sum((forward(trained, XOR_X)[:, 0] > 0.5) == (XOR_Y[:, 0] > 0.5)))
    record(9, err < 1e-5 and acc == 4, f"max relative gradient error {err:.2e} (< 1e-5); XOR {acc}/4 after 5000 epochs")


def test_c10_determinism(corpus, sweep):
    images, _ = corpus
    rows, _ = sweep
    again = run_bench(images, SWEEP, Config(seed=0), "acceptance")
    col = CSV_COLUMNS.index("wall_time_s")

    def strip(text):
        return [",".join(v for i, v in enumerate(line.split(",")) if i != col) for line in text.splitlines()]

    same = strip(rows_to_csv(rows)) == strip(rows_to_csv(again))
    record(10, same, f"two full sweeps byte-identical apart from wall_time_s: {same}")
