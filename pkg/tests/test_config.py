"""Tests for settings loading in app/core/config.py."""
import logging

import pytest


def test_defaults(monkeypatch, tmp_path):
    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    settings = load_settings()
    assert settings.SAMPLE_RATE == 8192
    assert settings.NUM_SAMPLES == 2 ** 16
    assert settings.target().f_m == 8.49
    assert settings.TAU_LIST == [4, 16, 128, 1024]
    assert settings.scattering_config().T == 2 ** 13


def test_flags_override_file_override_environment(monkeypatch, tmp_path):
    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("WORKERS", "2")
    monkeypatch.setenv("SEED", "5")
    monkeypatch.setenv("TAU", "64")
    config = tmp_path / "exp.env"
    config.write_text("WORKERS=3\nSEED=9\n")

    settings = load_settings(config, WORKERS=4)
    assert settings.WORKERS == 4
    assert settings.SEED == 9
    assert settings.TAU == 64


def test_none_flags_are_ignored(monkeypatch, tmp_path):
    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    assert load_settings(LOG_LEVEL=None).LOG_LEVEL == "DEBUG"


def test_list_settings_parse_from_environment(monkeypatch, tmp_path):
    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("TAU_LIST", "[1, 2]")
    monkeypatch.setenv("CHIRP_GAMMAS", "[0.5]")
    settings = load_settings()
    assert settings.TAU_LIST == [1, 2]
    assert settings.CHIRP_GAMMAS == [0.5]


def test_derived_configs_follow_settings(small_env):
    from app.core.config import load_settings

    settings = load_settings()
    pipeline = settings.pipeline_config()
    assert pipeline.synth.sample_rate == 2048
    assert pipeline.synth.f_c == 128.0
    assert pipeline.scattering.Q1 == 4
    assert pipeline.mss.window_sizes == [32, 64, 128, 256]
    grid = settings.grid_spec(5)
    assert grid.points_per_axis == 5
    assert grid.f_c == 128.0


def test_invalid_derived_config_raises(monkeypatch, tmp_path):
    from pydantic import ValidationError

    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    settings = load_settings(NUM_SAMPLES=1000)
    with pytest.raises(ValidationError):
        settings.synth_config()


def test_suspicious_combinations_warn(monkeypatch, tmp_path, caplog):
    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    with caplog.at_level(logging.WARNING, logger="app.core.config"):
        load_settings(CARRIER_HZ=3000.0, JTFS_T=2 ** 20)
    assert "CARRIER_HZ" in caplog.text
    assert "JTFS_T" in caplog.text


def test_snapshot_is_json_ready(monkeypatch, tmp_path):
    import json

    from app.core.config import load_settings

    monkeypatch.chdir(tmp_path)
    snapshot = load_settings().snapshot()
    assert json.loads(json.dumps(snapshot))["OUTPUT_DIR"] == "results"


# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

def test_setup_logging_is_idempotent():
    from app.core.logging import setup_logging

    root = logging.getLogger()
    setup_logging("INFO")
    setup_logging("DEBUG")
    marked = [h for h in root.handlers if getattr(h, "_mesostruct", False)]
    assert len(marked) == 1
    assert root.level == logging.DEBUG
    setup_logging("WARNING")
