import dataclasses

import numpy as np
import numpy.testing as npt
import pytest

import nfmusic as nf
from nfmusic.bench import SweepSpec, run_sweep, summarize
from nfmusic.errors import ConfigError


def small_cfg(**over):
    cfg = nf.load_profile("desk")
    return dataclasses.replace(cfg, trials=3, **over)


def hungarian_cost(truths, estimates):
    "Independent matcher: scipy's assignment solver."
    from scipy.optimize import linear_sum_assignment
    t = np.asarray(truths)
    e = np.asarray(estimates)
    dist = np.linalg.norm(t[:, None, :] - e[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(dist)
    return float(dist[rows, cols].sum())


class TestMatching:
    def test_identity(self):
        pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        pairs = nf.match_estimates(pts, pts)
        assert [(i, j) for i, j, _ in pairs] == [(0, 0), (1, 1)]
        assert sum(d for *_, d in pairs) == 0.0

    def test_crossed_labels_swap(self):
        truths = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        pairs = nf.match_estimates(truths, truths[::-1])
        assert [(i, j) for i, j, _ in pairs] == [(0, 1), (1, 0)]

    def test_matches_independent_matcher(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            truths = rng.standard_normal((3, 3))
            ests = rng.standard_normal((3, 3))
            got = sum(d for *_, d in nf.match_estimates(truths, ests))
            assert got == pytest.approx(hungarian_cost(truths, ests))

    def test_rejects_large_k(self):
        pts = np.zeros((9, 3))
        with pytest.raises(ConfigError):
            nf.match_estimates(pts, pts)


class TestRunSweep:
    def test_rerun_is_identical(self, tmp_path):
        spec = SweepSpec(config=small_cfg(), variable="snr_db",
                         values=(5.0, 15.0), trials=2,
                         methods=("proposed", "music2d"), master_seed=9,
                         record_timing=False)
        paths = []
        for run in range(2):
            records, summaries = run_sweep(spec)
            tr = tmp_path / f"t{run}.csv"
            su = tmp_path / f"s{run}.csv"
            nf.emit_trials_csv(records, tr)
            nf.emit_summary_csv(summaries, su)
            paths.append((tr.read_bytes(), su.read_bytes()))
        assert paths[0] == paths[1]

    def test_timing_on_changes_only_time_columns(self):
        spec = SweepSpec(config=small_cfg(), variable="snr_db",
                         values=(10.0,), trials=2, methods=("proposed",),
                         master_seed=9, record_timing=True)
        a, _ = run_sweep(spec)
        b, _ = run_sweep(spec)
        for ra, rb in zip(a, b):
            assert dataclasses.replace(ra, elapsed_us=0.0) \
                == dataclasses.replace(rb, elapsed_us=0.0)

    def test_source_count_sweep_uses_value(self):
        spec = SweepSpec(config=small_cfg(), variable="source_count",
                         values=(2, 3), trials=1, methods=("proposed",),
                         master_seed=4, record_timing=False)
        records, _ = run_sweep(spec)
        by_value = {v: [r for r in records if r.sweep_value == v]
                    for v in (2.0, 3.0)}
        assert len(by_value[2.0]) == 2 and len(by_value[3.0]) == 3

    def test_method_geometry_mismatch_rejected(self):
        spec = SweepSpec(config=small_cfg(), variable="snr_db", values=(5.0,),
                         trials=1, methods=("music3d",), master_seed=1)
        with pytest.raises(ConfigError):
            run_sweep(spec)

    def test_summary_mae_consistent_with_records(self):
        spec = SweepSpec(config=small_cfg(), variable="snr_db",
                         values=(10.0,), trials=3, methods=("music2d",),
                         master_seed=2, record_timing=False)
        records, summaries = run_sweep(spec)
        errs = np.array([r.err_m for r in records])
        assert summaries[0].mae_m == pytest.approx(np.nanmean(errs))

    def test_perfect_estimates_give_zero_mae(self):
        from nfmusic.bench import TrialRecord
        spec = SweepSpec(config=small_cfg(), variable="snr_db",
                         values=(10.0,), trials=1, methods=("music2d",),
                         master_seed=3)
        rows = [TrialRecord(10.0, 0, "music2d", i, 1.0, 2.0, 0.0,
                            1.0, 2.0, 0.0, 0.0, 0.0, 0, 0)
                for i in range(4)]
        assert summarize(rows, spec)[0].mae_m == 0.0


class TestCsvRoundTrip:
    def test_summaries_recomputable_from_trials(self, tmp_path):
        import csv
        spec = SweepSpec(config=small_cfg(), variable="snr_db",
                         values=(5.0, 15.0), trials=3,
                         methods=("music2d", "proposed"), master_seed=11,
                         record_timing=False)
        records, summaries = run_sweep(spec)
        path = tmp_path / "trials.csv"
        nf.emit_trials_csv(records, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(records)
        for want in summaries:
            errs = [float(r["err_m"]) for r in rows
                    if float(r["sweep_value"]) == want.sweep_value
                    and r["method"] == want.method]
            assert np.nanmean(errs) == pytest.approx(want.mae_m, rel=1e-8)

    def test_empty_records_give_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        nf.emit_trials_csv([], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("sweep_value,trial,method")

    def test_single_record_schema(self, tmp_path):
        from nfmusic.bench import TrialRecord
        rec = TrialRecord(5.0, 0, "proposed", 0, 0.1, 0.2, 0.0,
                          0.11, 0.19, 0.0, 0.0141421356, 12.5, 0, 1)
        path = tmp_path / "one.csv"
        nf.emit_trials_csv([rec], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1] == "5,0,proposed,0,0.1,0.2,0,0.11,0.19,0,0.0141421356,12.5,0,1"


class TestBeamGain:
    def test_far_source_peaks_at_bearing_with_unit_gain(self):
        geom = nf.ula(64, 0.05, 0.1)
        grid = nf.axis_values((-np.pi / 3, np.pi / 3, np.pi / 360))
        bearing = grid[240]
        far = 1e3 * nf.field_boundaries(geom).fraunhofer
        gain = nf.beam_gain_sweep(geom, nf.position_from_polar(far, bearing),
                                  grid)
        assert int(np.argmax(gain)) == 240
        assert gain.max() == pytest.approx(1.0, abs=1e-4)

    def test_near_source_spreads_the_beam(self):
        geom = nf.ula(128, 0.05, 0.1)
        b = nf.field_boundaries(geom)
        grid = nf.axis_values((-np.pi / 3, np.pi / 3, np.pi / 1800))
        near = nf.beam_gain_sweep(
            geom, nf.position_from_polar(b.fraunhofer / 20.0, 0.0), grid)
        far = nf.beam_gain_sweep(
            geom, nf.position_from_polar(100.0 * b.fraunhofer, 0.0), grid)
        support = lambda g: int((g >= g.max() / 2.0).sum())
        assert support(near) > support(far)

    def test_single_element_is_flat(self):
        geom = nf.ula(1, 0.05, 0.1)
        grid = nf.axis_values((-1.0, 1.0, 0.1))
        gain = nf.beam_gain_sweep(geom, [3.0, 0.5, 0.0], grid)
        npt.assert_allclose(gain, 1.0, atol=1e-12)


class TestTiming:
    def test_repetition_floor(self):
        with pytest.raises(ConfigError):
            nf.time_spectrum_evaluation("proposed", small_cfg(), repetitions=5)

    def test_small_run_returns_sane_stats(self):
        mean, std = nf.time_spectrum_evaluation("proposed", small_cfg(),
                                                repetitions=10, warmups=1)
        assert mean > 0 and std >= 0
