"""Tests for configuration loading, validation and CLI overrides."""

import pytest
import yaml
from pydantic import ValidationError

from robusthedging.config import apply_overrides, dump_config, load_config, load_synthetic_spec
from robusthedging.errors import ConfigError
from robusthedging.main import build_parser, main, pipeline_overrides
from robusthedging.schemas.config import PairSpec, PipelineConfig


def _make_raw(**overrides):
    raw = {
        "data_dir": "data",
        "symbols": ["IVV", "GOVT"],
        "pairs": [{"hedged": "IVV", "hedging": "GOVT"}],
        "tau": [1, 10],
        "bp": [0.0, 5.0, 10.0],
        "bootstrap": {"reps": 100, "seed": 3},
    }
    raw.update(overrides)
    return raw


def _write_yaml(tmp_path, raw, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


def test_config_hash_ignores_key_order():
    raw = _make_raw()
    reordered = dict(reversed(list(raw.items())))
    reordered["bootstrap"] = {"seed": 3, "reps": 100}
    assert PipelineConfig.model_validate(raw).config_hash() == PipelineConfig.model_validate(reordered).config_hash()


def test_config_hash_changes_with_content():
    base = PipelineConfig.model_validate(_make_raw()).config_hash()
    assert PipelineConfig.model_validate(_make_raw(bp=[0.0, 5.0])).config_hash() != base


def test_tau_normalised_and_bounded():
    config = PipelineConfig.model_validate(_make_raw(tau=[10, 1, 10]))
    assert config.tau == [1, 10]
    with pytest.raises(ValidationError, match="tau_max"):
        PipelineConfig.model_validate(_make_raw(tau=[1, 20]))


def test_split_dates_must_be_ordered():
    with pytest.raises(ValidationError, match="before test_start"):
        PipelineConfig.model_validate(_make_raw(train_end="2020-06-01", test_start="2020-01-01"))
    with pytest.raises(ValidationError, match="together"):
        PipelineConfig.model_validate(_make_raw(train_end="2020-06-01"))


def test_pairs_must_reference_known_symbols():
    with pytest.raises(ValidationError, match="unknown symbols"):
        PipelineConfig.model_validate(_make_raw(pairs=[{"hedged": "IVV", "hedging": "BNO"}]))


def test_closed_form_theta_needs_level_rv():
    with pytest.raises(ValidationError, match="empirical"):
        PipelineConfig.model_validate(_make_raw(theta_mode="closed_form"))
    config = PipelineConfig.model_validate(_make_raw(theta_mode="closed_form", rv_transform="level"))
    assert config.theta_mode.value == "closed_form"


def test_bootstrap_cell_must_be_in_grid():
    with pytest.raises(ValidationError, match="bootstrap cost level"):
        PipelineConfig.model_validate(_make_raw(bp=[0.0, 10.0]))
    with pytest.raises(ValidationError, match="bootstrap model"):
        PipelineConfig.model_validate(_make_raw(bootstrap={"model": "har"}))


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError):
        PipelineConfig.model_validate(_make_raw(learning_rate=0.1))


def test_all_symbols_falls_back_to_pairs():
    config = PipelineConfig.model_validate(_make_raw(symbols=[], pairs=[{"hedged": "A", "hedging": "B"}]))
    assert config.all_symbols == ["A", "B"]


def test_pair_spec_parse():
    pair = PairSpec.parse(" IVV:GOVT ")
    assert (pair.hedged, pair.hedging, pair.label) == ("IVV", "GOVT", "IVV_GOVT")
    with pytest.raises(ValueError, match="HEDGED:HEDGING"):
        PairSpec.parse("IVV")
    with pytest.raises(ValueError, match="itself"):
        PairSpec.parse("IVV:IVV")


def test_apply_overrides_sets_dotted_keys():
    merged = apply_overrides({"bootstrap": {"reps": 10}}, {"bootstrap.seed": 4, "output_dir": None})
    assert merged == {"bootstrap": {"reps": 10, "seed": 4}}


def test_load_config_with_overrides(tmp_path):
    path = _write_yaml(tmp_path, _make_raw())
    config = load_config(path, {"bootstrap.seed": 11, "output_dir": str(tmp_path / "out")})
    assert config.bootstrap.seed == 11
    assert config.bootstrap.reps == 100
    assert config.output_dir == str(tmp_path / "out")


def test_load_config_errors_are_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("pairs: [unterminated")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)
    invalid = _write_yaml(tmp_path, _make_raw(train_end="2020-06-01", test_start="2020-01-01"), "invalid.yaml")
    with pytest.raises(ConfigError, match="invalid configuration") as info:
        load_config(invalid)
    assert info.value.exit_code == 1


def test_dumped_config_reloads_identically(tmp_path):
    config = PipelineConfig.model_validate(_make_raw())
    path = tmp_path / "dumped.yaml"
    path.write_text(dump_config(config))
    assert load_config(path).config_hash() == config.config_hash()


def test_synthetic_spec_overrides():
    spec = load_synthetic_spec(None, {"seed": 9, "n_days": 10})
    assert (spec.seed, spec.n_days) == (9, 10)
    with pytest.raises(ConfigError, match="synthetic spec"):
        load_synthetic_spec(None, {"n_days": -1})


def test_cli_flags_become_overrides():
    args = build_parser().parse_args(["run", "--tau", "1,5", "--bp", "0,10", "--pairs", "A:B,C:D", "--seed", "2"])
    overrides = pipeline_overrides(args)
    assert overrides["tau"] == [1, 5]
    assert overrides["bootstrap.tau"] == 1
    assert overrides["bp"] == [0.0, 10.0]
    assert overrides["bootstrap.bp"] == 0.0
    assert overrides["bootstrap.seed"] == 2
    assert overrides["pairs"] == [{"hedged": "A", "hedging": "B"}, {"hedged": "C", "hedging": "D"}]
    assert "output_dir" not in overrides


def test_cli_bad_pair_is_config_error():
    args = build_parser().parse_args(["fit", "--pairs", "AB"])
    with pytest.raises(ConfigError):
        pipeline_overrides(args)


def test_main_exit_code_for_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 1
