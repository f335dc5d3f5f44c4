import pytest

from sbtrain.config import TrainConfig, load_config, validate_config
from sbtrain.errors import ConfigError

GOOD_YAML = """
dataset:
  synthetic:
    n: 400
    classes: 3
    dim: 2
    spread: 0.7
model:
  hidden: [16, 16]
strategy:
  name: sb
  selectivity: 0.333
bsize: 32
epochs: 5
lr:
  initial: 0.1
  steps: [[3, 2.0]]
seed: 7
"""


def good_dict(**overrides):
    base = {
        "dataset": {"synthetic": {"n": 100}},
        "strategy": {"name": "traditional"},
        "epochs": 1,
        "lr": {"initial": 0.1},
    }
    base.update(overrides)
    return base


def test_load_config_yaml(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(GOOD_YAML)
    cfg = load_config(str(p))
    assert cfg.strategy.name == "sb"
    assert cfg.bsize == 32
    assert cfg.lr.steps == [(3, 2.0)]
    assert cfg.dataset.synthetic.n == 400
    assert cfg.seed == 7


def test_defaults_fill_in():
    cfg = validate_config(good_dict())
    assert cfg.bsize == 128
    assert cfg.seed == 0
    assert cfg.model.hidden == []
    assert cfg.dataset.synthetic.classes == 2
    assert cfg.strategy.history_capacity == 1024


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="momentum"):
        validate_config(good_dict(momentum=0.9))
    with pytest.raises(ConfigError, match="dataset.synthetic.noise"):
        validate_config(good_dict(dataset={"synthetic": {"n": 100, "noise": 1}}))


def test_dataset_exactly_one_source():
    with pytest.raises(ConfigError, match="exactly one"):
        validate_config(good_dict(dataset={}))
    with pytest.raises(ConfigError, match="exactly one"):
        validate_config(
            good_dict(
                dataset={
                    "synthetic": {"n": 100},
                    "csv": {"train": "a.csv", "test": "b.csv"},
                }
            )
        )


def test_strategy_field_must_match_name():
    with pytest.raises(ConfigError, match="fraction"):
        validate_config(good_dict(strategy={"name": "sb", "fraction": 0.5}))
    with pytest.raises(ConfigError, match="pool_size"):
        validate_config(good_dict(strategy={"name": "topk", "pool_size": 3}))
    with pytest.raises(ConfigError, match="selectivity"):
        validate_config(good_dict(strategy={"name": "kath18", "selectivity": 0.5}))


def test_selectivity_and_beta_are_exclusive():
    with pytest.raises(ConfigError, match="not both"):
        validate_config(good_dict(strategy={"name": "sb", "selectivity": 0.5, "beta": 1.0}))


def test_stale_requires_period():
    with pytest.raises(ConfigError, match="staleness_n"):
        validate_config(good_dict(strategy={"name": "stale_sb", "selectivity": 0.5}))


def test_lr_steps_must_increase():
    with pytest.raises(ConfigError, match="increasing"):
        validate_config(good_dict(lr={"initial": 0.1, "steps": [[5, 2.0], [3, 2.0]]}))
    with pytest.raises(ConfigError, match="increasing"):
        validate_config(good_dict(lr={"initial": 0.1, "steps": [[3, 2.0], [3, 4.0]]}))
    with pytest.raises(ConfigError, match="positive"):
        validate_config(good_dict(lr={"initial": 0.1, "steps": [[3, 0.0]]}))


def test_value_bounds():
    with pytest.raises(ConfigError, match="epochs"):
        validate_config(good_dict(epochs=-1))
    with pytest.raises(ConfigError, match="bsize"):
        validate_config(good_dict(bsize=0))
    with pytest.raises(ConfigError, match="selectivity"):
        validate_config(good_dict(strategy={"name": "sb", "selectivity": 1.5}))
    with pytest.raises(ConfigError, match="fraction"):
        validate_config(good_dict(corruption={"fraction": 1.5}))


def test_bad_yaml_file(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("strategy: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(str(p))


def test_non_mapping_file(tmp_path):
    p = tmp_path / "list.yaml"
    p.write_text("- a\n- b\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(str(p))


def test_fingerprint_tracks_content():
    a = validate_config(good_dict())
    b = validate_config(good_dict())
    c = validate_config(good_dict(seed=1))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert len(a.fingerprint()) == 16
    int(a.fingerprint(), 16)  # hex


def test_config_id_slug_and_override():
    cfg = validate_config(good_dict(strategy={"name": "sb", "selectivity": 0.5}, seed=3))
    assert cfg.config_id() == "sb-s0.5-seed3"
    stale = validate_config(
        good_dict(strategy={"name": "stale_sb", "beta": 2.0, "staleness_n": 3})
    )
    assert stale.config_id() == "stale_sb-b2-n3-seed0"
    named = validate_config(good_dict(run_id="exp.01"))
    assert named.config_id() == "exp.01"


def test_run_id_pattern():
    with pytest.raises(ConfigError, match="run_id"):
        validate_config(good_dict(run_id="has space"))


def test_model_validate_is_equivalent():
    cfg = TrainConfig.model_validate(good_dict())
    assert cfg == validate_config(good_dict())
