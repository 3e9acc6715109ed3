"""Packaged resources: settings defaults and the jig catalog."""

from __future__ import annotations

from pathlib import Path

import pytest

from osteoplan.config import config_file, load_config, load_settings
from osteoplan.core import SchemaError
from osteoplan.geometry import YAxisSign
from osteoplan.jig import default_catalog_path
from osteoplan.simulation import DistributionFamily, MethodEnum


def test_packaged_files_are_installed() -> None:
    assert config_file.exists()
    assert default_catalog_path().exists()


def test_settings_defaults() -> None:
    settings = load_settings()
    assert settings.frame.y_axis is YAxisSign.RIGHT_TO_LEFT
    assert settings.simulation.kerf == pytest.approx(1.27)
    assert settings.evaluation.thresholds == (1.0, 3.0, 5.0)
    assert set(settings.planning.cut_normals) == {
        "supra-acetabular",
        "infra-acetabular",
        "superior-pubic-ramus",
        "auxiliary",
    }


def test_presets() -> None:
    settings = load_settings()
    guided = settings.preset(MethodEnum.GUIDED)
    assert guided.family is DistributionFamily.MAGNITUDE_GAMMA
    assert guided.dt.trunc == pytest.approx(3.0)
    freehand = settings.preset("freehand")
    assert freehand.family is DistributionFamily.MAGNITUDE_GAMMA
    assert (freehand.dt.mean, freehand.dt.sd) == (2.07, 1.71)
    assert freehand.roll.trunc == pytest.approx(90.0)


def test_override_file_is_merged(tmp_path: Path) -> None:
    override = tmp_path / "settings.yaml"
    override.write_text("simulation:\n  kerf: 0.9\n", encoding="utf-8")
    settings = load_settings(override)
    assert settings.simulation.kerf == pytest.approx(0.9)
    assert settings.preset(MethodEnum.FREEHAND).roll.mean == pytest.approx(15.36)


def test_environment_override(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    override = tmp_path / "settings.yaml"
    override.write_text("evaluation:\n  alpha: 0.01\n", encoding="utf-8")
    monkeypatch.setenv("OSTEOPLAN_CONFIG", str(override))
    assert load_settings().evaluation.alpha == pytest.approx(0.01)


@pytest.mark.parametrize(
    "content",
    ["simulation:\n  kerf: -1\n", "evaluation:\n  thresholds: []\n", "frame:\n  y_axis: sideways\n"],
)
def test_invalid_settings(tmp_path: Path, content: str) -> None:
    override = tmp_path / "settings.yaml"
    override.write_text(content, encoding="utf-8")
    with pytest.raises(SchemaError):
        load_settings(override)


def test_missing_settings_file(tmp_path: Path) -> None:
    with pytest.raises(SchemaError):
        load_settings(tmp_path / "missing.yaml")


def test_raw_config_is_a_mapping() -> None:
    raw = load_config()
    assert raw["jig"]["catalog"] is None
