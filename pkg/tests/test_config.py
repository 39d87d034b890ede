import dataclasses

import pytest

from wimaxsim.config import (
    ConfigError, ScenarioConfig, load_config, make_preset, serialize,
)


class TestPresets:
    def test_download_preset_defaults(self):
        cfg = make_preset("download_only", n_ss=10)
        assert cfg.direction == "download"
        assert cfg.request_mix == "aggregate_only"
        assert cfg.n_ss == 10
        assert cfg.bs_queue_limit == 50
        assert cfg.frame_duration_s == 0.005
        assert cfg.t16_frames == 20

    def test_upload_mixed_preset(self):
        cfg = make_preset("upload_only_mixed")
        assert cfg.direction == "upload"
        assert cfg.request_mix == "per_k"
        assert cfg.aggregate_every_k == 50

    def test_queue_sweep_preset(self):
        cfg = make_preset("queue_sweep")
        assert cfg.ss_queue_limit == 20
        assert cfg.n_ss == 10
        assert cfg.direction == "download"

    def test_loss_sweep_preset(self):
        cfg = make_preset("loss_sweep")
        assert cfg.p_loss_good == 0.0
        assert cfg.p_good_to_bad == 0.5
        assert cfg.p_bad_to_good == 0.5

    def test_every_preset_fully_populated(self):
        for preset in ("download_only", "upload_only_mixed", "queue_sweep",
                       "loss_sweep", "custom"):
            cfg = make_preset(preset)
            for f in dataclasses.fields(cfg):
                assert getattr(cfg, f.name) is not None

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="preset"):
            make_preset("nope")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="quux"):
            make_preset("custom", quux=1)


class TestValidation:
    @pytest.mark.parametrize("key,value", [
        ("n_ss", 0),
        ("duration_s", -1.0),
        ("frame_duration_s", 0.0),
        ("dl_fraction", 1.5),
        ("p_loss_bad", 2.0),
        ("cw_min", 0),
        ("bs_queue_limit", 0),
        ("policy", "nonsense"),
        ("request_mix", "sometimes"),
    ])
    def test_out_of_range_rejected_with_key_name(self, key, value):
        with pytest.raises(ConfigError) as err:
            make_preset("download_only", **{key: value})
        assert key.split("_")[0] in str(err.value) or key in str(err.value)

    def test_cw_ordering(self):
        with pytest.raises(ConfigError, match="cw_max"):
            make_preset("custom", cw_min=64, cw_max=32)

    def test_degenerate_markov_rejected(self):
        with pytest.raises(ConfigError):
            make_preset("custom", p_good_to_bad=0.0, p_bad_to_good=0.0)


class TestLoadAndSerialize:
    def test_file_with_comments_and_overrides(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text(
            "# a scenario\n"
            "preset = download_only\n"
            "n_ss = 5   # five stations\n"
            "duration_s = 30.0\n",
            encoding="utf-8")
        cfg = load_config(str(path), {"n_ss": "7"})
        assert cfg.preset == "download_only"
        assert cfg.n_ss == 7
        assert cfg.duration_s == 30.0

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="config file"):
            load_config("/does/not/exist.cfg")

    def test_type_mismatch_names_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_ss = many\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="n_ss"):
            load_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("frobnication = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="frobnication"):
            load_config(str(path))

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_ss 5\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=":1"):
            load_config(str(path))

    def test_round_trip_identity(self, tmp_path):
        cfg = make_preset("upload_only_mixed", n_ss=3, seeds=(1, 2, 3),
                          duration_s=12.5, p_loss_bad=0.125)
        path = tmp_path / "round.cfg"
        path.write_text(serialize(cfg), encoding="utf-8")
        again = load_config(str(path))
        assert again == cfg

    def test_seed_list_parsing(self, tmp_path):
        path = tmp_path / "seeds.cfg"
        path.write_text("seeds = 1,2, 3\n", encoding="utf-8")
        assert load_config(str(path)).seeds == (1, 2, 3)


class TestDerivedQuantities:
    def test_table_one_duration(self):
        cfg = make_preset("download_only", duration_s=1000.0)
        assert cfg.n_frames == 200_000

    def test_frames_rounds_up(self):
        cfg = make_preset("download_only")
        assert cfg.frames(0.0101) == 3
        assert cfg.frames(0.010) == 2
