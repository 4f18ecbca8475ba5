import argparse

import pytest

from dedupix.config import (Config, add_config_flags, config_from_args, dump_config, load_config,
                            parse_config, split_addr)
from dedupix.errors import ConfigError


def test_defaults_validate():
    cfg = Config().validate()
    assert cfg.depth == 3 and cfg.fast_t == 20 and cfg.max_kp == 8


def test_parse_with_comments():
    cfg = parse_config("# link\ndepth = 4   # deeper\nlatency_s = 0.1\nlisten_addr = 0.0.0.0:9000\n")
    assert (cfg.depth, cfg.latency_s, cfg.listen_addr) == (4, 0.1, "0.0.0.0:9000")


def test_dump_roundtrip():
    cfg = Config(depth=2, fcm_m=1.5, connect_addr="10.0.0.1:1")
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text", ["depth = -1", "nonsense = 3", "depth = many", "fcm_m = 1.0",
                                  "photon_decay = 1.5", "canny_low = 200", "listen_addr = nohost"])
def test_invalid(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("depth = 2\nfast_t = 30\n")
    p = argparse.ArgumentParser()
    add_config_flags(p)
    cfg = config_from_args(p.parse_args(["--config", str(path), "--depth", "4"]))
    assert (cfg.depth, cfg.fast_t) == (4, 30)


def test_split_addr():
    assert split_addr(":7000") == ("127.0.0.1", 7000)
    with pytest.raises(ConfigError):
        split_addr("host:99999")
