from pathlib import Path

import pytest

from gridflex.config import (
    FIXTURE_DIR,
    build_scenario,
    config_from_pairs,
    fixture_config,
    load_config,
    parse_pairs,
)
from gridflex.errors import ConfigError
from gridflex.flex import MechanismKind


def from_text(text, base=FIXTURE_DIR):
    return config_from_pairs(parse_pairs(text), Path(base))


def test_bundled_config():
    cfg = load_config(fixture_config("scenario"))
    assert cfg.p_r_min_mw == 250 and cfg.shed_step_mw == 25 and cfg.seed == 42
    assert cfg.paths["capacity"] == FIXTURE_DIR / "capacity.csv"
    assert cfg.sweep_scales == (1, 2, 4, 8)
    assert cfg.frontier_rationing == (0, 0.25, 0.5)
    assert cfg.effective_replications == 1


def test_comments_and_defaults():
    cfg = from_text("# only paths\nbuses = b.csv # trailing\nbranches=r.csv\ngenerators=g.csv\n"
                    "loads=l.csv\ntimeline=t.csv\ncapacity=c.csv\n")
    assert cfg.p_r_min_mw == 2300 and cfg.shed_step_mw == 25 and cfg.interrupt_threshold_mw == 3000
    assert cfg.mechanism_order == tuple(MechanismKind)
    assert cfg.out_dir == FIXTURE_DIR / "out"


def test_every_problem_reported_with_key():
    with pytest.raises(ConfigError) as info:
        from_text("shed_step_mw = -5\nrationing_max_frac = 2\nmechanism_order = rationing,rationing,incentive\n"
                  "colour = blue\nseed = -1\n")
    joined = "\n".join(info.value.violations)
    for key in ("shed_step_mw", "rationing_max_frac", "mechanism_order", "colour", "seed", "buses", "capacity"):
        assert key in joined


def test_syntax_errors():
    with pytest.raises(ConfigError, match=":2:"):
        parse_pairs("a = 1\nnot a pair\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_pairs("a = 1\na = 2\n")


def test_sweep_scales_must_increase():
    with pytest.raises(ConfigError) as info:
        from_text("sweep_scales = 1,4,2\n")
    assert any("sweep_scales" in v for v in info.value.violations)


def test_missing_file_named(tmp_path):
    text = fixture_config("scenario").read_text().replace("capacity = capacity.csv",
                                                          f"capacity = {tmp_path / 'nope.csv'}")
    p = tmp_path / "x.cfg"
    p.write_text(text.replace("= buses.csv", f"= {FIXTURE_DIR / 'buses.csv'}"))
    cfg = load_config(p)
    with pytest.raises(ConfigError) as info:
        build_scenario(cfg)
    assert any("nope.csv" in v for v in info.value.violations)


def test_overrides(tmp_path):
    cfg = load_config(fixture_config("scenario")).with_overrides(out_dir=tmp_path, seed=7)
    assert cfg.out_dir == tmp_path and cfg.seed == 7
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=-1)


def test_incentive_model_keys():
    cfg = from_text("incentive_active_mean = 0.3\nincentive_discount_rule = none\nincentive_coverage = 0.4\n"
                    + "".join(f"{k} = x.csv\n" for k in ("buses", "branches", "generators", "loads",
                                                         "timeline", "capacity")))
    assert cfg.incentive_model.active_mean == 0.3
    assert cfg.incentive_model.discount_rule == "none"
    assert cfg.effective_replications == 30
    with pytest.raises(ConfigError, match="problem"):
        from_text("incentive_discount_rule = cubic\n")
