import pytest
from pydantic import ValidationError

from src.config.settings import BSplineSettings, Settings, available_keys, load_config_file
from src.core.errors import ConfigError


def test_defaults():
    cfg = Settings()
    assert len(cfg.matching.rotation_angles) == 24
    assert 0.0 in cfg.matching.rotation_angles and 180.0 in cfg.matching.rotation_angles
    assert cfg.matching.ratio == 0.9
    assert cfg.ransac.min_inliers == 8
    assert cfg.bspline.grid_spacing == 32.0
    assert cfg.bspline.reg_weight == 1.5e-5
    assert cfg.registration_config().optimizer.reg_weight == 1.5e-5
    assert cfg.pipeline.spacing == (1.0, 1.0, 8.0)
    assert cfg.pipeline.reference == "first"
    assert cfg.validate()


def test_file_then_overrides(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("bspline_max_iterations=50\nransac_seed=4\nmatching_ratio=0.8\n", encoding="utf-8")

    cfg = Settings.from_file(path, {"ransac_seed": "9"})
    assert cfg.bspline.max_iterations == 50
    assert cfg.ransac.seed == 9
    assert cfg.matching.ratio == 0.8

    registration = cfg.registration_config()
    assert registration.optimizer.max_iterations == 50
    assert registration.ransac.seed == 9


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError):
        Settings({"bspline_learning_rate": "0.1"})

    path = tmp_path / "bad.conf"
    path.write_text("colour=blue\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(path)
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.conf")


def test_groups_forbid_unknown_fields():
    assert BSplineSettings.model_config["extra"] == "forbid"
    with pytest.raises(ValidationError):
        BSplineSettings(learning_rate=0.1)


def test_invalid_values_raise_config_error():
    with pytest.raises(ConfigError):
        Settings({"matching_ratio": "1.5"})
    with pytest.raises(ConfigError):
        Settings({"pipeline_spacing": "1,0,8"})


def test_comma_separated_values():
    cfg = Settings({"matching_rotation_angles": "0,45,-45", "pipeline_spacing": "0.5,0.5,4"})
    assert cfg.matching.rotation_angles == (0.0, 45.0, -45.0)
    assert cfg.pipeline.spacing == (0.5, 0.5, 4.0)


def test_angles_must_include_zero():
    assert not Settings({"matching_rotation_angles": "90,180"}).validate()


def test_environment_is_ignored(monkeypatch):
    monkeypatch.setenv("RANSAC_SEED", "123")
    monkeypatch.setenv("SEED", "123")
    assert Settings().ransac.seed == 0


def test_manifest_excludes_runtime_keys():
    cfg = Settings({"pipeline_workers": "8", "logging_level": "DEBUG"})
    manifest = cfg.manifest_dict()
    assert "pipeline_workers" not in manifest
    assert not any(key.startswith(("logging_", "api_")) for key in manifest)
    assert manifest["ransac_seed"] == 0
    assert manifest["matching_rotation_angles"][0] == -165.0
    assert Settings({"pipeline_workers": "1"}).manifest_dict() == manifest


def test_with_overrides_keeps_other_values():
    cfg = Settings({"ransac_seed": "3"}).with_overrides({"bspline-enabled": "false"})
    assert cfg.ransac.seed == 3
    assert cfg.bspline.enabled is False
    assert not cfg.registration_config().bspline_enabled


def test_every_key_is_listed():
    keys = dict(available_keys())
    assert keys["ransac_inlier_threshold"] == 3.0
    assert keys["synth_num_slices"] == 10
    assert all("_" in key for key in keys)
