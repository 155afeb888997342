import numpy as np
import pytest

import nfmusic as nf
from nfmusic.cli import main
from nfmusic.config import (build_geometry, complexity_grid, grid_spec,
                            load_profile, parse_config)
from nfmusic.errors import ConfigError


class TestConfig:
    def test_parse_overrides_profile(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text(
            "# a linear array scenario\n"
            "kind = ula\n"
            "m = 21\n"
            "spacing_over_lambda = 0.5\n"
            "lambda_m = 0.02  # comment after value\n"
            "k = 2\n"
            "snr_db = 12.5\n"
            "methods = proposed, music2d\n"
            "snr_list = 0, 10\n")
        cfg = parse_config(path)
        assert (cfg.m, cfg.k) == (21, 2)
        assert cfg.methods == ("proposed", "music2d")
        assert cfg.snr_list == (0.0, 10.0)
        geom = build_geometry(cfg)
        assert geom.spacing == pytest.approx(0.01)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("frobnicate = 3\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_upa_keys(self, tmp_path):
        path = tmp_path / "upa.cfg"
        path.write_text("kind = upa\nmh = 4\nmv = 4\ndh = 0.075\n"
                        "dv = 0.075\nlambda_m = 0.3\nk = 2\n"
                        "r_min_m = 0.6\nr_max_m = 1.1\n")
        geom = build_geometry(parse_config(path))
        assert geom.kind == "upa" and geom.m == 16

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            load_profile("bench")

    def test_desk_grid_axes(self):
        cfg = load_profile("desk")
        geom = build_geometry(cfg)
        grid = grid_spec(cfg, geom)
        az = grid.azimuth_axis()
        assert len(az) == 121
        assert az[0] == pytest.approx(-np.pi / 3)
        dist = grid.distance_axis()
        assert dist[0] == pytest.approx(0.31)
        assert dist[-1] >= 1.9685 - 1e-9

    def test_complexity_grid_samples_m_per_axis(self):
        cfg = load_profile("desk")
        geom = build_geometry(cfg)
        grid = complexity_grid(cfg, geom)
        assert len(grid.azimuth_axis()) == 63
        assert len(grid.distance_axis()) == 63


class TestCli:
    def test_simulate_prints_estimates(self, capsys):
        assert main(["simulate", "--trials", "1", "--seed", "3",
                     "--method", "proposed"]) == 0
        out = capsys.readouterr().out
        assert "proposed" in out and "err=" in out

    def test_sweep_snr_writes_outputs(self, tmp_path, capsys):
        base = tmp_path / "run"
        code = main(["sweep-snr", "--snrs", "10,20", "--trials", "2",
                     "--seed", "5", "--method", "proposed",
                     "--out", str(base)])
        assert code == 0
        assert (tmp_path / "run_trials.csv").exists()
        assert (tmp_path / "run_summary.csv").exists()
        assert (tmp_path / "run_mae.png").exists()
        header = (tmp_path / "run_trials.csv").read_text().splitlines()[0]
        assert header == ("sweep_value,trial,method,source_idx,true_x,true_y,"
                          "true_z,est_x,est_y,est_z,err_m,elapsed_us,"
                          "degraded,swap_flag")
        header = (tmp_path / "run_summary.csv").read_text().splitlines()[0]
        assert header == ("sweep_value,method,mae_m,mae_stderr,time_mean_us,"
                          "time_std_us,degradation_rate")

    def test_sweep_sources_no_plot(self, tmp_path):
        base = tmp_path / "src"
        code = main(["sweep-sources", "--counts", "2,3", "--trials", "1",
                     "--method", "proposed", "--no-plot", "--no-timing",
                     "--out", str(base)])
        assert code == 0
        assert (tmp_path / "src_summary.csv").exists()
        assert not (tmp_path / "src_mae.png").exists()

    def test_beam_demo(self, tmp_path, capsys):
        base = tmp_path / "beam"
        code = main(["beam-demo", "--m", "32", "--step-deg", "1",
                     "--out", str(base)])
        assert code == 0
        assert (tmp_path / "beam.csv").exists()
        assert (tmp_path / "beam.png").exists()
        assert "3-dB support" in capsys.readouterr().out

    def test_bench_timing(self, tmp_path, capsys):
        base = tmp_path / "timing"
        code = main(["bench-timing", "--method", "proposed",
                     "--repetitions", "10", "--out", str(base),
                     "--no-plot"])
        assert code == 0
        lines = (tmp_path / "timing.csv").read_text().splitlines()
        assert lines[0] == "method,time_mean_us,time_std_us"
        assert lines[1].startswith("proposed,")

    def test_config_error_is_reported(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense = 1\n")
        code = main(["simulate", "--config", str(bad)])
        assert code == 2
        assert "error:" in capsys.readouterr().err
