"""Pipeline configuration: INI files, overrides, and dump/load round trips."""

import math

import pytest

from radarkit.config import (
    ConfigError,
    PipelineConfig,
    dump_config,
    load_config,
    parse_overrides,
)


class TestDefaults:
    def test_default_sections_present(self):
        config = PipelineConfig.default()
        assert config.cfar.n == 15 and config.cfar.g == 5
        assert config.grid.voxel_size == (0.4, 0.4, 0.4)
        assert config.grid.extents == (0.0, 72.0, -15.0, 15.0, -2.0, 7.6)
        assert config.polar.range_bins == 150
        assert config.polar.azimuth_res == pytest.approx(math.radians(1.0))
        assert config.tracker.cost_mode == "diou"
        assert config.heatmap.num_classes == 2

    def test_replace_swaps_one_section(self):
        config = PipelineConfig.default()
        other = config.replace(cfar=config.cfar.__class__(n=3, g=1))
        assert other.cfar.n == 3
        assert other.tracker == config.tracker

    def test_load_without_path_gives_defaults(self):
        assert load_config() == PipelineConfig.default()


class TestParseOverrides:
    def test_well_formed_pairs(self):
        parsed = parse_overrides(["cfar.n=3", "tracker.cost_mode=iou"])
        assert parsed == {"cfar": {"n": "3"}, "tracker": {"cost_mode": "iou"}}

    @pytest.mark.parametrize("bad", ["cfar=3", "n=3", "cfar.n", "=x", "a.b.c=1=2"])
    def test_malformed_pairs_rejected(self, bad):
        with pytest.raises(ConfigError):
            parse_overrides([bad])


class TestOverrideApplication:
    def test_scalar_override(self):
        config = load_config(overrides=["cfar.n=3", "cfar.alpha2=2.5"])
        assert config.cfar.n == 3
        assert config.cfar.alpha2 == 2.5

    def test_bool_parsing(self):
        for token, want in [("1", True), ("true", True), ("YES", True),
                            ("on", True), ("0", False), ("false", False),
                            ("No", False), ("off", False)]:
            config = load_config(overrides=[f"tracker.use_appearance={token}"])
            assert config.tracker.use_appearance is want
        with pytest.raises(ConfigError):
            load_config(overrides=["tracker.use_appearance=maybe"])

    def test_tuple_parsing_comma_and_space(self):
        config = load_config(overrides=["scenario.x_range=20,40"])
        assert config.scenario.x_range == (20.0, 40.0)
        config = load_config(overrides=["scenario.x_range=20 40"])
        assert config.scenario.x_range == (20.0, 40.0)

    def test_voxel_size_scalar_or_triple(self):
        config = load_config(overrides=["grid.voxel_size=0.2"])
        assert config.grid.voxel_size == (0.2, 0.2, 0.2)
        config = load_config(overrides=["grid.voxel_size=0.4,0.2,0.1"])
        assert config.grid.voxel_size == (0.4, 0.2, 0.1)

    def test_string_field(self):
        config = load_config(overrides=["tracker.cost_mode=iou"])
        assert config.tracker.cost_mode == "iou"

    def test_unknown_section_lists_valid_ones(self):
        with pytest.raises(ConfigError, match="scenario"):
            load_config(overrides=["sensor.n=3"])

    def test_unknown_key_lists_valid_ones(self):
        with pytest.raises(ConfigError, match="alpha1"):
            load_config(overrides=["cfar.bogus=3"])

    def test_unparseable_number_rejected(self):
        with pytest.raises(ConfigError):
            load_config(overrides=["cfar.n=three"])

    def test_invalid_value_combination_rejected(self):
        # parses fine, but the section constructor rejects it
        with pytest.raises(ConfigError):
            load_config(overrides=["tracker.tau_low=0.9", "tracker.tau_high=0.2"])


class TestConfigFiles:
    def test_missing_file_raises_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(str(tmp_path / "absent.ini"))

    def test_file_values_applied(self, tmp_path):
        path = tmp_path / "pipeline.ini"
        path.write_text(
            "[cfar]\nn = 4\ng = 2\n\n[scenario]\nnum_objects = 5\nseed = 42\n"
        )
        config = load_config(str(path))
        assert config.cfar.n == 4 and config.cfar.g == 2
        assert config.scenario.num_objects == 5
        assert config.scenario.seed == 42

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "pipeline.ini"
        path.write_text("[cfar]\nn = 4\n")
        config = load_config(str(path), overrides=["cfar.n=7"])
        assert config.cfar.n == 7

    def test_unknown_section_in_file_rejected(self, tmp_path):
        path = tmp_path / "pipeline.ini"
        path.write_text("[lidar]\nbeams = 64\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_stray_top_level_keys_rejected(self, tmp_path):
        path = tmp_path / "pipeline.ini"
        path.write_text("n = 4\n[cfar]\ng = 2\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_malformed_ini_rejected(self, tmp_path):
        path = tmp_path / "pipeline.ini"
        path.write_text("[cfar\nn = 4\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_dump_load_round_trip(self, tmp_path):
        original = load_config(
            overrides=[
                "cfar.n=3",
                "cfar.alpha2=2.5",
                "tracker.cost_mode=iou",
                "tracker.use_appearance=false",
                "scenario.x_range=15,45",
                "grid.voxel_size=0.2",
                "render.peak_snr=80",
            ]
        )
        text = dump_config(original)
        path = tmp_path / "dumped.ini"
        path.write_text(text)
        assert load_config(str(path)) == original

    def test_dump_mentions_every_section(self):
        text = dump_config(PipelineConfig.default())
        for section in ("scenario", "render", "corruption", "polar", "grid",
                        "cfar", "heatmap", "tracker"):
            assert f"[{section}]" in text
