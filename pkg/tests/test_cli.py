"""Config ingestion, CSV emission, exit codes, determinism."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest
import yaml

import sublexp.cli as cli
import sublexp.experiments as exp
from sublexp.errors import ValidationError

SMALL_CONFIG = {
    "name": "tiny",
    "mode": "clt_sweep",
    "model": {
        "kind": "moving_window",
        "weights": [1.0, 1.0],
        "scaling": "none",
        "innovation": [
            {"values": [-1.0, 0.0, 1.0], "probs": [0.245, 0.51, 0.245]},
            {"values": [-1.0, 0.0, 1.0], "probs": [0.5, 0.0, 0.5]},
        ],
    },
    "n_list": [4, 8],
    "functionals": ["cos", "ramp@0"],
    "gnormal": {"nx": 201, "half_width": 8.0},
}


def write_config(tmp_path: Path, raw: dict) -> Path:
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------


def test_load_small_config(tmp_path):
    cfg = exp.load_config(write_config(tmp_path, SMALL_CONFIG))
    assert cfg.name == "tiny"
    assert cfg.n_list == (4, 8)
    model = cfg.model_for(4)
    assert model.kind == "moving_window" and model.n == 4 and model.m == 1


def test_malformed_probs_rejected(tmp_path):
    bad = {
        "mode": "eval",
        "model": {"kind": "independent",
                  "laws": [{"values": [-1.0, 1.0], "probs": [0.4, 0.5]}]},
    }
    with pytest.raises(ValidationError):
        exp.load_config(write_config(tmp_path, bad))


def test_unknown_keys_rejected(tmp_path):
    raw = dict(SMALL_CONFIG)
    raw["typo_section"] = {}
    with pytest.raises(ValidationError):
        exp.load_config(write_config(tmp_path, raw))


def test_unsorted_n_list_rejected(tmp_path):
    raw = dict(SMALL_CONFIG)
    raw["n_list"] = [8, 4]
    with pytest.raises(ValidationError):
        exp.load_config(write_config(tmp_path, raw))


def test_not_yaml_rejected(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("mode: [unclosed")
    with pytest.raises(ValidationError):
        exp.load_config(path)


def test_reference_experiments_ship_four():
    refs = exp.reference_experiments()
    assert set(refs) == {
        "stationary-1dep", "iid-peng", "mean-uncertain-fail", "truncated-heavy"
    }
    for cfg in refs.values():
        assert cfg.model_for(cfg.n_list[0]).n == cfg.n_list[0]


def test_builder_models_match_documented_moments():
    model = exp.reference_experiments()["stationary-1dep"].model_for(12)
    import sublexp as sl
    B, b = sl.Bn(model)
    assert B * B == pytest.approx(4 * 12 - 2, abs=1e-9)
    assert (b * b) / (B * B) == pytest.approx(0.49, abs=1e-9)


# ---------------------------------------------------------------------------
# Runners and CSV schemas
# ---------------------------------------------------------------------------


def _read(path: Path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_eval_mode_schema(tmp_path):
    cfg = exp.config_from_mapping({**SMALL_CONFIG, "mode": "eval"})
    paths = cli.run(cfg, tmp_path, mode="eval")
    rows = _read(paths[0])
    assert list(rows[0]) == list(cli.EVAL_HEADER)
    assert {r["n"] for r in rows} == {"4", "8"}
    for r in rows:
        assert float(r["lower"]) <= float(r["upper"]) + 1e-12
        assert float(r["b_n"]) <= float(r["B_n"]) + 1e-12


def test_clt_sweep_rows(tmp_path):
    cfg = exp.config_from_mapping(SMALL_CONFIG)
    paths = cli.run(cfg, tmp_path)
    rows = _read(paths[0])
    assert list(rows[0]) == list(cli.SWEEP_HEADER)
    for r in rows:
        assert float(r["abs_err_upper"]) == pytest.approx(
            abs(float(r["upper"]) - float(r["gnormal_upper"])), abs=1e-9
        )
        assert float(r["lower"]) <= float(r["upper"]) + 1e-12
        assert float(r["b_n"]) <= float(r["B_n"]) + 1e-12
        assert r["mean_unc_flag"] == "0"
    assert float(rows[0]["r"]) == pytest.approx(0.49, abs=1e-9)


def test_negative_control_is_flagged(tmp_path):
    cfg = exp.reference_experiments()["mean-uncertain-fail"]
    paths = cli.run(cfg, tmp_path)
    rows = [r for r in _read(paths[0]) if r["n"] == "32"]
    assert rows and all(r["mean_unc_flag"] == "1" for r in rows)


def test_blocking_inspect_outputs(tmp_path):
    raw = {**SMALL_CONFIG, "mode": "blocking_inspect", "blocking": {"pn_list": [2, 2]}}
    cfg = exp.config_from_mapping(raw)
    paths = cli.run(cfg, tmp_path)
    names = {p.name for p in paths}
    assert names == {"tiny_blocking.csv", "tiny_blocking_plan.csv"}
    diag = _read([p for p in paths if p.name.endswith("_blocking.csv")][0])
    for r in diag:
        assert float(r["removed_mass"]) <= float(r["sum_beta_cuts"]) + 1e-9


def test_conditions_outputs_trends(tmp_path):
    raw = {**SMALL_CONFIG, "mode": "conditions",
           "conditions": {"eps": [0.25], "p": [2.0], "tau": 1.5}}
    cfg = exp.config_from_mapping(raw)
    paths = cli.run(cfg, tmp_path)
    rows = _read([p for p in paths if p.name.endswith("_conditions.csv")][0])
    quantities = {r["quantity"] for r in rows}
    assert {"lindeberg", "mean_unc", "m2_ratio", "var_ratio", "pth",
            "cap_tail", "trunc_mean_unc"} <= quantities
    trends = _read([p for p in paths if p.name.endswith("_condition_trends.csv")][0])
    assert list(trends[0]) == list(cli.TRENDS_HEADER)


def test_gnormal_eval_table(tmp_path):
    raw = {**SMALL_CONFIG, "mode": "gnormal_eval", "functionals": ["square", "cos"],
           "gnormal": {"sigma_lo2": 1.0, "sigma_hi2": 1.0, "nx": 401},
           "peng_n": [4, 8]}
    cfg = exp.config_from_mapping(raw)
    rows = _read(cli.run(cfg, tmp_path)[0])
    sq = next(r for r in rows if r["functional"] == "square")
    assert float(sq["pde_upper"]) == pytest.approx(1.0, abs=2e-3)
    assert float(sq["quad_ref"]) == pytest.approx(1.0, abs=1e-6)
    cos_row = next(r for r in rows if r["functional"] == "cos")
    assert cos_row["quad_ref"] == "nan"  # neither convex nor concave


# ---------------------------------------------------------------------------
# main(): exit codes and determinism
# ---------------------------------------------------------------------------


def test_main_success_and_determinism(tmp_path, capsys):
    cfg_path = write_config(tmp_path, {**SMALL_CONFIG, "n_list": [4]})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["clt-sweep", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert cli.main(["clt-sweep", "--config", str(cfg_path), "--out", str(out2)]) == 0
    b1 = (out1 / "tiny_clt_sweep.csv").read_bytes()
    b2 = (out2 / "tiny_clt_sweep.csv").read_bytes()
    assert b1 == b2


def test_main_validation_error_exit_1_no_files(tmp_path):
    bad = {
        "mode": "eval",
        "model": {"kind": "independent",
                  "laws": [{"values": [-1.0, 1.0], "probs": [0.4, 0.5]}]},
    }
    cfg_path = write_config(tmp_path, bad)
    out = tmp_path / "out"
    assert cli.main(["eval", "--config", str(cfg_path), "--out", str(out)]) == 1
    assert not out.exists()


def test_main_state_cap_exit_2(tmp_path):
    cfg_path = write_config(tmp_path, {**SMALL_CONFIG, "mode": "eval"})
    out = tmp_path / "out"
    code = cli.main(["eval", "--config", str(cfg_path), "--out", str(out),
                     "--state-cap", "3"])
    assert code == 2
    assert not out.exists()


def test_main_requires_exactly_one_source(tmp_path):
    assert cli.main(["eval", "--out", str(tmp_path)]) == 1


def test_main_unknown_experiment(tmp_path):
    assert cli.main(["eval", "--experiment", "nope", "--out", str(tmp_path)]) == 1


def test_grid_override_flags(tmp_path):
    cfg_path = write_config(tmp_path, {**SMALL_CONFIG, "n_list": [4]})
    out = tmp_path / "c"
    code = cli.main([
        "clt-sweep", "--config", str(cfg_path), "--out", str(out),
        "--grid-nx", "401", "--grid-L", "8.0",
    ])
    assert code == 0


def test_tol_flag_drives_block_size_search(tmp_path):
    raw = {**SMALL_CONFIG, "mode": "blocking_inspect", "n_list": [16]}
    cfg_path = write_config(tmp_path, raw)
    tight, loose = tmp_path / "tight", tmp_path / "loose"
    assert cli.main(["blocking-inspect", "--config", str(cfg_path),
                     "--out", str(tight)]) == 0
    assert cli.main(["blocking-inspect", "--config", str(cfg_path),
                     "--out", str(loose), "--tol", "1e9"]) == 0
    p_tight = _read(tight / "tiny_blocking.csv")[0]["p_n"]
    p_loose = _read(loose / "tiny_blocking.csv")[0]["p_n"]
    assert int(p_loose) >= int(p_tight)
    assert int(p_loose) == 4  # tol=inf picks the even floor of sqrt(16)
