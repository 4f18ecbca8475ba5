"""Flat ``key = value`` configuration with per-key command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class Config:
    seed: int = 0
    depth: int = 3
    hom_threshold: int = 2
    canny_sigma: float = 1.0
    canny_ksize: int = 5
    canny_low: float = 40.0
    canny_high: float = 100.0
    fast_t: int = 20
    max_kp: int = 8
    kmeans_k: int = 3
    kmeans_tol: float = 0.0
    kmeans_max_iter: int = 300
    fcm_c: int = 3
    fcm_m: float = 2.0
    fcm_eps: float = 1e-6
    fcm_max_iter: int = 300
    photon_epsilon: float = 1.0
    photon_decay: float = 0.9
    listen_addr: str = "127.0.0.1:7878"
    connect_addr: str = "127.0.0.1:7878"
    pipeline_window: int = 65536
    bandwidth_bytes_per_s: float = 100e6
    latency_s: float = 0.04

    def validate(self) -> "Config":
        checks = [
            (self.depth >= 0, "depth must be >= 0"),
            (self.depth <= 12, "depth must be <= 12"),
            (self.hom_threshold >= 0, "hom_threshold must be >= 0"),
            (self.canny_sigma > 0, "canny_sigma must be > 0"),
            (self.canny_ksize >= 1 and self.canny_ksize % 2 == 1, "canny_ksize must be odd"),
            (0 <= self.canny_low <= self.canny_high, "need 0 <= canny_low <= canny_high"),
            (0 <= self.fast_t <= 255, "fast_t must lie in [0, 255]"),
            (self.max_kp >= 1, "max_kp must be >= 1"),
            (self.kmeans_k >= 1, "kmeans_k must be >= 1"),
            (self.kmeans_tol >= 0, "kmeans_tol must be >= 0"),
            (self.kmeans_max_iter >= 1, "kmeans_max_iter must be >= 1"),
            (self.fcm_c >= 2, "fcm_c must be >= 2"),
            (self.fcm_m > 1, "fcm_m must be > 1"),
            (self.fcm_eps > 0, "fcm_eps must be > 0"),
            (self.fcm_max_iter >= 1, "fcm_max_iter must be >= 1"),
            (self.photon_epsilon > 0, "photon_epsilon must be > 0"),
            (0 < self.photon_decay < 1, "photon_decay must lie in (0, 1)"),
            (self.pipeline_window >= 1, "pipeline_window must be >= 1"),
            (self.bandwidth_bytes_per_s > 0, "bandwidth_bytes_per_s must be > 0"),
            (self.latency_s >= 0, "latency_s must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        for name in ("listen_addr", "connect_addr"):
            split_addr(getattr(self, name))
        return self

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw).validate()


def split_addr(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) <= 65535:
        raise ConfigError(f"bad address {addr!r}, expected host:port")
    return host or "127.0.0.1", int(port)


def _coerce(name: str, typ, raw: str):
    try:
        if typ in (int, "int"):
            return int(raw, 0)
        if typ in (float, "float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None


def _types() -> dict:
    return {f.name: f.type for f in fields(Config)}


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse ``key = value`` lines (``#`` starts a comment) on top of ``base``."""
    types = _types()
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise ConfigError(f"line {lineno}: unknown or malformed entry {line!r}")
        values[key] = _coerce(key, types[key], raw.strip())
    return dataclasses.replace(base or Config(), **values).validate()


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def dump_config(cfg: Config) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(Config))


def add_config_flags(parser) -> None:
    """Register ``--config`` plus one ``--<key>`` flag per configuration key."""
    parser.add_argument("--config", default=None, help="configuration file (key = value)")
    for f in fields(Config):
        parser.add_argument("--" + f.name, dest="cfg_" + f.name, default=None, metavar=f.name.upper())


def config_from_args(args) -> Config:
    cfg = load_config(args.config) if getattr(args, "config", None) else Config()
    types = _types()
    overrides = {}
    for name, typ in types.items():
        raw = getattr(args, "cfg_" + name, None)
        if raw is not None:
            overrides[name] = _coerce(name, typ, raw)
    return dataclasses.replace(cfg, **overrides).validate()
