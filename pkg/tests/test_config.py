import argparse

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srckey import cli, config
from srckey.config import ConfigError, RunConfig


def test_defaults():
    cfg = RunConfig()
    assert cfg["run"]["seed"] == 20240601
    assert cfg["params"]["n"] == 1_000_000 and cfg["params"]["m"] == 100_000
    assert cfg["probs"]["p_omega"] is None
    assert cfg["optimize"]["mu_range"] == (0.05, 0.5)


def test_round_trip_defaults():
    cfg = RunConfig()
    assert config.loads(cfg.dumps()) == cfg
    assert config.loads(cfg.dumps()).dumps() == cfg.dumps()


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), n=st.integers(1, 10**20),
       mu=st.floats(1e-6, 0.999, allow_nan=False), pj=st.one_of(st.none(), st.floats(0, 1)),
       sizes=st.lists(st.integers(1, 10), min_size=1, max_size=4), flag=st.booleans())
def test_round_trip_random(seed, n, mu, pj, sizes, flag):
    cfg = RunConfig()
    cfg.set("run", "seed", seed)
    cfg.set("params", "n", n)
    cfg.set("params", "mu", mu)
    cfg.set("probs", "p_omega_and_upsilon2", pj)
    cfg.set("sampling", "sample_sizes", tuple(sizes))
    cfg.set("bounds", "imperfect_measurements", flag)
    assert config.loads(cfg.dumps()) == cfg


def test_scientific_integers():
    cfg = config.loads("[params]\nn = 1e6\nm = 2.5e4\n")
    assert cfg["params"]["n"] == 1_000_000 and cfg["params"]["m"] == 25_000
    with pytest.raises(ConfigError):
        config.loads("[params]\nn = 1.5\n")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        config.loads("[nope]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        config.loads("[params]\nlambda = 1\n")
    with pytest.raises(ConfigError):
        config.loads("[params]\nmu = abc\n")
    with pytest.raises(ConfigError):
        config.load("/nonexistent/file.ini")


def _args(argv):
    return cli.build_parser().parse_args(argv)


def test_precedence(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[run]\nseed = 5\n[params]\nmu = 0.1\n")
    cfg = cli.resolve_config(_args(["rate", "--config", str(path)]), environ={})
    assert cfg["run"]["seed"] == 5 and cfg["params"]["mu"] == 0.1
    cfg = cli.resolve_config(_args(["rate", "--config", str(path)]), environ={config.SEED_ENV: "7"})
    assert cfg["run"]["seed"] == 7
    cfg = cli.resolve_config(_args(["rate", "--config", str(path), "--seed", "9", "--mu", "0.2"]),
                             environ={config.SEED_ENV: "7"})
    assert cfg["run"]["seed"] == 9 and cfg["params"]["mu"] == 0.2


def test_seed_range():
    with pytest.raises(ConfigError):
        cli.resolve_config(_args(["rate", "--seed", str(2**64)]), environ={})
    with pytest.raises(ConfigError):
        cli.resolve_config(_args(["rate"]), environ={config.SEED_ENV: "-1"})
    assert isinstance(_args(["rate"]), argparse.Namespace)
