import numpy as np
import numpy.testing as npt
import pytest

import nfmusic as nf
from nfmusic.errors import ConfigError


def make_scenario(sources, noise=0.0, snapshots=15, seed=1, geom=None):
    geom = geom or nf.ula(16, 0.0025, 0.01)
    return nf.Scenario(geometry=geom, sources=tuple(sources),
                       noise_variance=noise, snapshots=snapshots,
                       rng_seed=seed)


class TestSampleSources:
    def test_point_mass(self):
        g = nf.ula(8, 0.005, 0.01)
        src = nf.sample_sources(g, 1, (5.0, 5.0), (0.0, 0.0),
                                np.random.default_rng(0))
        npt.assert_allclose(src[0].position, [5.0, 0.0, 0.0], atol=1e-12)

    def test_draws_stay_in_intervals(self):
        g = nf.ula(255, 0.0025, 0.01)
        b = nf.field_boundaries(g)
        lo, hi = b.bjornson, b.fraunhofer / 10.0
        srcs = nf.sample_sources(g, 6, (lo, hi), (-np.pi / 3, np.pi / 3),
                                 np.random.default_rng(3))
        for s in srcs:
            assert lo <= s.range_m <= hi
            assert -np.pi / 3 <= s.azimuth <= np.pi / 3

    def test_seeded_draws_repeat(self):
        g = nf.ula(8, 0.005, 0.01)
        a = nf.sample_sources(g, 4, (1.0, 2.0), (-1.0, 1.0),
                              np.random.default_rng(42))
        b = nf.sample_sources(g, 4, (1.0, 2.0), (-1.0, 1.0),
                              np.random.default_rng(42))
        npt.assert_array_equal(np.stack([s.position for s in a]),
                               np.stack([s.position for s in b]))

    def test_empty_interval_rejected(self):
        g = nf.ula(8, 0.005, 0.01)
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            nf.sample_sources(g, 1, (2.0, 1.0), (0.0, 0.0), rng)
        with pytest.raises(ConfigError):
            nf.sample_sources(g, 1, (1.0, 2.0), (-2.0, 2.0), rng)

    def test_upa_elevation_drawn(self):
        g = nf.upa(4, 4, 0.075, 0.075, 0.3)
        srcs = nf.sample_sources(g, 5, (1.0, 2.0), (-1.0, 1.0),
                                 np.random.default_rng(1))
        assert any(abs(s.elevation) > 1e-6 for s in srcs)


class TestNoiseForSnr:
    def test_zero_db(self):
        sc = make_scenario([nf.SourceTruth(position=[1, 0, 0])])
        assert nf.set_noise_for_snr(sc, 0.0).noise_variance == pytest.approx(1.0)

    def test_ten_db(self):
        sc = make_scenario([nf.SourceTruth(position=[1, 0, 0])])
        assert nf.set_noise_for_snr(sc, 10.0).noise_variance == pytest.approx(0.1)

    def test_weakest_source_rule(self):
        sc = make_scenario([nf.SourceTruth(position=[1, 0, 0], power=1.0),
                            nf.SourceTruth(position=[2, 0, 0], power=4.0)])
        assert nf.set_noise_for_snr(sc, 10.0).noise_variance == pytest.approx(0.1)

    def test_needs_sources(self):
        sc = make_scenario([])
        with pytest.raises(ConfigError):
            nf.set_noise_for_snr(sc, 10.0)


class TestSynthesize:
    def test_empty_and_noiseless_is_zero(self):
        sn = nf.synthesize_snapshots(make_scenario([], snapshots=7))
        npt.assert_array_equal(sn.data, 0.0)

    def test_single_source_column_has_constant_modulus(self):
        sc = make_scenario([nf.SourceTruth(position=[0.4, 0.05, 0])],
                           snapshots=1)
        col = nf.synthesize_snapshots(sc).data[:, 0]
        npt.assert_allclose(np.abs(col), np.abs(col[0]), rtol=1e-12)

    def test_deterministic_for_fixed_seed(self):
        sc = make_scenario([nf.SourceTruth(position=[0.4, 0.05, 0])],
                           noise=0.3, seed=99)
        a = nf.synthesize_snapshots(sc).data
        b = nf.synthesize_snapshots(sc).data
        assert a.tobytes() == b.tobytes()

    def test_noise_only_power_level(self):
        sc = make_scenario([], noise=2.0, snapshots=10_000,
                           geom=nf.ula(16, 0.0025, 0.01), seed=5)
        data = nf.synthesize_snapshots(sc).data
        mean_power = np.mean(np.abs(data) ** 2)
        assert abs(mean_power - 2.0) / 2.0 < 0.05

    def test_noise_free_rank_equals_source_count(self):
        sources = [nf.SourceTruth(position=nf.position_from_polar(0.5, az))
                   for az in (-0.5, 0.1, 0.8)]
        sc = make_scenario(sources, snapshots=15)
        data = nf.synthesize_snapshots(sc).data
        w = np.linalg.eigvalsh(data @ data.conj().T / 15)[::-1]
        assert w[3] < 1e-10 * w[0]

    def test_sample_covariance_converges(self):
        geom = nf.ula(8, 0.0025, 0.01)
        sources = [nf.SourceTruth(position=nf.position_from_polar(0.5, -0.4)),
                   nf.SourceTruth(position=nf.position_from_polar(0.7, 0.6))]
        steer = nf.steering_matrix(
            geom, "exact", positions=np.stack([s.position for s in sources]))
        want = steer @ steer.conj().T + 0.5 * np.eye(8)
        errs = []
        for t in (10_000, 40_000):
            sc = make_scenario(sources, noise=0.5, snapshots=t, seed=11,
                               geom=geom)
            got = nf.sample_covariance(nf.synthesize_snapshots(sc)).matrix
            errs.append(np.linalg.norm(got - want) / np.linalg.norm(want))
        assert errs[1] < 0.7 * errs[0]

    def test_source_count_capped_by_elements(self):
        sources = [nf.SourceTruth(position=[1.0, 0.01 * i, 0])
                   for i in range(8)]
        with pytest.raises(ConfigError):
            make_scenario(sources, geom=nf.ula(8, 0.005, 0.01))


class TestSnapshotDump:
    def test_round_trip(self, tmp_path):
        sc = make_scenario([nf.SourceTruth(position=[0.4, 0.05, 0])],
                           noise=0.1, snapshots=9, seed=3)
        sn = nf.synthesize_snapshots(sc)
        path = tmp_path / "snap.bin"
        nf.save_snapshots(sn, path)
        data, wavelength = nf.load_snapshots(path)
        assert wavelength == 0.01
        npt.assert_array_equal(data, sn.data)

    def test_header_layout(self, tmp_path):
        sc = make_scenario([], snapshots=3, geom=nf.ula(5, 0.01, 0.25))
        path = tmp_path / "snap.bin"
        nf.save_snapshots(nf.synthesize_snapshots(sc), path)
        blob = path.read_bytes()
        assert blob[:8] == b"NFSNAP1\x00"
        assert len(blob) == 32 + 16 * 5 * 3
        assert int.from_bytes(blob[8:12], "little") == 5
        assert int.from_bytes(blob[12:16], "little") == 3

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NFSNAP1\x00" + b"\x00" * 10)
        with pytest.raises(ConfigError):
            nf.load_snapshots(path)
