#!/usr/bin/env python3
"""
Tests for config files, overrides, batch sections and logging setup
"""

import logging
from pathlib import Path

import pytest

from orchard.exceptions import ConfigError
from orchard.models.config import PipelineConfig, Stage
from orchard.settings import (
    build_config,
    configure_logging,
    has_scenes,
    load_batch,
    load_pipeline_config,
    parse_overrides,
)


@pytest.fixture
def config_file(tmp_path):
    """Write an INI config and return its path"""

    def _write(text: str, name: str = "orchard.ini") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


@pytest.fixture
def restore_root_logger():
    """Put the root logger back after configure_logging replaced its handlers"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


class TestPipelineConfig:
    """Test loading a single-scene config"""

    def test_defaults_without_file(self):
        """Test no file and no overrides give the defaults"""
        assert load_pipeline_config() == PipelineConfig()

    def test_precedence(self, config_file):
        """Test flags beat overrides, which beat the file"""
        path = config_file("[pipeline]\nseed = 3\nvoxel_edge = 0.01\nmatch_radius = 0.2\n")
        config = load_pipeline_config(
            path, overrides={"seed": "4", "match_radius": "0.15"}, flags={"seed": 5, "winter": None}
        )
        assert config.seed == 5
        assert config.match_radius == pytest.approx(0.15)
        assert config.voxel_edge == pytest.approx(0.01)
        assert config.winter is None

    def test_relative_paths_follow_the_file(self, config_file, tmp_path):
        """Test input paths resolve against the config directory"""
        path = config_file("[pipeline]\nwinter = clouds/winter.ply\nout_dir = /abs/out\n")
        config = load_pipeline_config(path)
        assert config.winter == tmp_path / "clouds" / "winter.ply"
        assert config.out_dir == Path("/abs/out")

    def test_json_values(self, config_file):
        """Test list values are parsed as JSON"""
        path = config_file("[pipeline]\nred_hue_ranges = [[0.0, 0.04], [0.97, 1.0]]\nstage = segment\n")
        config = load_pipeline_config(path)
        assert config.red_hue_ranges == [(0.0, 0.04), (0.97, 1.0)]
        assert config.stage is Stage.SEGMENT

    def test_unknown_key(self, config_file):
        """Test a misspelled key is rejected"""
        with pytest.raises(ConfigError, match="voxel_egde"):
            load_pipeline_config(config_file("[pipeline]\nvoxel_egde = 0.01\n"))

    def test_invalid_value(self, config_file):
        """Test an out-of-range value names its field"""
        with pytest.raises(ConfigError, match="voxel_edge"):
            load_pipeline_config(config_file("[pipeline]\nvoxel_edge = -1\n"))

    def test_malformed_json(self, config_file):
        """Test a broken list value"""
        with pytest.raises(ConfigError):
            load_pipeline_config(config_file("[pipeline]\nred_hue_ranges = [[0.0, \n"))

    def test_unknown_section(self, config_file):
        """Test sections other than pipeline and scene are rejected"""
        with pytest.raises(ConfigError, match="unknown section"):
            load_pipeline_config(config_file("[pipline]\nseed = 1\n"))

    def test_missing_file(self, tmp_path):
        """Test a missing config file"""
        with pytest.raises(ConfigError, match="not found"):
            load_pipeline_config(tmp_path / "absent.ini")

    def test_exit_code(self):
        """Test config errors map to exit code 2"""
        with pytest.raises(ConfigError) as info:
            build_config({"workers": 0})
        assert info.value.exit_code == 2


class TestOverrides:
    """Test --set parsing"""

    def test_pairs(self):
        """Test key=value pairs with JSON lists"""
        assert parse_overrides(["seed=3", "green_hue_ranges=[[0.1, 0.2]]"]) == {
            "seed": "3",
            "green_hue_ranges": [[0.1, 0.2]],
        }

    def test_missing_equals(self):
        """Test a pair without a value"""
        with pytest.raises(ConfigError):
            parse_overrides(["seed"])


class TestBatch:
    """Test scene sections"""

    BATCH = (
        "[pipeline]\nout_dir = out\nseed = 2\n\n"
        "[scene row-a]\nwinter = a/winter.ply\nharvest = a/harvest.ply\n\n"
        "[scene row-b]\nwinter = b/winter.ply\n"
    )

    def test_scenes(self, config_file, tmp_path):
        """Test each scene inherits the pipeline section and gets its own output directory"""
        scenes = load_batch(config_file(self.BATCH))
        assert sorted(scenes) == ["row-a", "row-b"]
        assert scenes["row-a"].out_dir == tmp_path / "out" / "row-a"
        assert scenes["row-a"].harvest == tmp_path / "a" / "harvest.ply"
        assert scenes["row-b"].harvest is None
        assert scenes["row-b"].seed == 2

    def test_has_scenes(self, config_file):
        """Test batch detection"""
        assert has_scenes(config_file(self.BATCH))
        assert not has_scenes(config_file("[pipeline]\nseed = 1\n", "single.ini"))

    def test_scene_may_not_set_constants(self, config_file):
        """Test a scene section limited to input paths"""
        with pytest.raises(ConfigError, match="may only name inputs"):
            load_batch(config_file("[scene a]\nwinter = w.ply\nseed = 4\n"))

    def test_no_scenes(self, config_file):
        """Test a batch needs at least one scene"""
        with pytest.raises(ConfigError, match="no \\[scene NAME\\]"):
            load_batch(config_file("[pipeline]\nseed = 1\n"))


@pytest.mark.usefixtures("restore_root_logger")
class TestLogging:
    """Test ORCHARD_LOG handling"""

    def test_default_is_warning(self, monkeypatch):
        """Test the level without ORCHARD_LOG"""
        monkeypatch.delenv("ORCHARD_LOG", raising=False)
        assert configure_logging() == logging.WARNING

    @pytest.mark.parametrize(
        "value,level", [("DEBUG", logging.DEBUG), ("info", logging.INFO), ("0", logging.DEBUG)]
    )
    def test_environment(self, monkeypatch, value, level):
        """Test names and numeric levels from the environment"""
        monkeypatch.setenv("ORCHARD_LOG", value)
        assert configure_logging() == level
        assert logging.getLogger().level == level

    def test_unknown_level(self, monkeypatch):
        """Test an unknown level name"""
        monkeypatch.setenv("ORCHARD_LOG", "chatty")
        with pytest.raises(ConfigError):
            configure_logging()
