import csv
import json

import pytest

from lorentz_iso import spacetimes as stm
from lorentz_iso.cli import RunConfig, build_parser, load_config, main
from lorentz_iso.errors import ConfigError

HEADER = ["name", "lhs", "rhs", "slack", "stderr", "pass"]


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_sharpness_exit_zero_and_outputs(tmp_path):
    assert run(tmp_path, "verify-sharpness", "--n", "3", "--a", "2") == 0
    rep = json.loads((tmp_path / "verify-sharpness.json").read_text())[0]
    assert rep["metadata"]["n"] == 3 and rep["pass"]
    rows = list(csv.reader((tmp_path / "verify-sharpness.csv").open()))
    assert rows[0] == HEADER and len(rows) == 2


def test_schwarzschild_default_grid(tmp_path):
    assert run(tmp_path, "verify-schwarzschild", "--m", "1", "--slab", "0", "1") == 0
    reps = json.loads((tmp_path / "verify-schwarzschild.json").read_text())
    assert len(reps) == 50 and all(r["pass"] for r in reps)


def test_missing_config_exits_two(tmp_path, capsys):
    assert run(tmp_path, "verify-isoperimetry", "--config", str(tmp_path / "nope.json"), "--seed", "1") == 2
    assert "config error" in capsys.readouterr().err


def test_missing_seed_exits_two(tmp_path):
    assert run(tmp_path, "sprinkle", "--n", "200") == 2


def test_bad_config_values_exit_two(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_samples": 5, "seed": 1}))
    assert run(tmp_path, "sprinkle", "--config", str(cfg)) == 2
    cfg.write_text("[1, 2")
    assert run(tmp_path, "sprinkle", "--config", str(cfg)) == 2


def test_failing_report_exits_one(tmp_path):
    # V is not in the past of the slice, so the domain check fails at run time
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"spacetime": stm.minkowski(2).to_dict(), "V": stm.point(0, 0).to_dict(),
                               "S": stm.coordinate_slice(0.5, radius=1.0).to_dict()}))
    assert run(tmp_path, "verify-isoperimetry", "--config", str(cfg), "--seed", "0", "--n", "1000") == 1


def test_same_seed_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "sprinkle", "--seed", "7", "--n", "300") == 0
    assert (a / "sprinkle.json").read_bytes() == (b / "sprinkle.json").read_bytes()
    assert (a / "sprinkle.csv").read_bytes() == (b / "sprinkle.csv").read_bytes()
    c = tmp_path / "c"
    run(c, "sprinkle", "--seed", "8", "--n", "300")
    assert (a / "sprinkle.json").read_bytes() != (c / "sprinkle.json").read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_samples": 500, "seed": 1, "curvature": {"K": 0.0, "N": 3.0}}))
    args = build_parser().parse_args(["content", "--config", str(cfg), "--seed", "4", "--n", "900", "--K", "-1"])
    c = load_config(args)
    assert (c.seed, c.n_samples, c.curvature.K, c.curvature.N) == (4, 900, -1.0, 3.0)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(n_samples=10)
    with pytest.raises(ConfigError):
        RunConfig(eps_grid=[0.1, -0.1])
    c = RunConfig.from_dict({"n_samples": 200, "region": [[0, 1], [0, 1]]})
    assert c.extra["region"] == [[0, 1], [0, 1]]


@pytest.mark.parametrize("cmd", ["transport", "localize", "verify-monotonicity", "verify-brunn-minkowski"])
def test_seeded_pipelines_run(tmp_path, cmd):
    assert run(tmp_path, cmd, "--seed", "2", "--n", "4000") == 0
    assert json.loads((tmp_path / f"{cmd}.json").read_text())
