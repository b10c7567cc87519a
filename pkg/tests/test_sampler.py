import numpy as np
import pytest
from scipy import stats

from renyigof.distributions import gaussian, pearson2, student
from renyigof.errors import DomainError
from renyigof.sampler import RngStream, Sample, read_csv, sample, sample_uniform_sphere, write_csv


class TestRngStream:
    def test_same_key_replays_identically(self):
        a = RngStream(42, 7).generator.standard_normal(100)
        b = RngStream(42, 7).generator.standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(42, 0).generator.standard_normal(100)
        b = RngStream(42, 1).generator.standard_normal(100)
        assert not np.array_equal(a, b)

    def test_order_independence(self):
        # consuming stream 5 first does not change stream 9
        s9_alone = sample(gaussian([0.0], [[1.0]]), 50, RngStream(1, 9))
        _ = sample(gaussian([0.0], [[1.0]]), 50, RngStream(1, 5))
        s9_after = sample(gaussian([0.0], [[1.0]]), 50, RngStream(1, 9))
        np.testing.assert_array_equal(s9_alone.points, s9_after.points)


class TestSphere:
    def test_unit_norm(self):
        for m in (1, 2, 3, 7):
            u = sample_uniform_sphere(m, RngStream(3, m))
            assert abs(np.linalg.norm(u) - 1.0) <= 1e-12

    def test_m1_is_sign_flip(self):
        stream = RngStream(11)
        vals = [sample_uniform_sphere(1, stream)[0] for _ in range(10_000)]
        assert set(np.unique(vals)) == {-1.0, 1.0}
        assert 0.47 <= np.mean(np.array(vals) > 0) <= 0.53

    def test_m3_coordinates_centered(self):
        gen = RngStream(12).generator
        from renyigof.sampler import _sphere_block

        u = _sphere_block(3, 10_000, gen)
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)
        assert (np.abs(u.mean(axis=0)) <= 0.02).all()

    def test_m2_angle_uniform(self):
        gen = RngStream(14).generator
        from renyigof.sampler import _sphere_block

        u = _sphere_block(2, 10_000, gen)
        angles = np.arctan2(u[:, 1], u[:, 0])
        counts, _ = np.histogram(angles, bins=16, range=(-np.pi, np.pi))
        chi2 = ((counts - 625.0) ** 2 / 625.0).sum()
        assert chi2 < stats.chi2.ppf(0.99, 15)


class TestSampleLaws:
    def test_gaussian_moments(self):
        s = sample(gaussian([0.0], [[1.0]]), 100_000, RngStream(21))
        assert abs(s.points.mean()) <= 0.02
        assert 0.98 <= s.points.var(ddof=1) <= 1.02

    def test_student_covariance_relation(self):
        # Cov = Sigma / (1 - 2/nu) = 5/3 for nu = 5
        s = sample(student([0.0], [[1.0]], 5.0), 100_000, RngStream(22))
        assert s.points.var(ddof=1) == pytest.approx(5.0 / 3.0, abs=0.1)

    def test_pearson_support_and_radial_law(self):
        spec = pearson2(np.zeros(2), np.eye(2), 1.0)
        s = sample(spec, 10_000, RngStream(23))
        r2 = (s.points**2).sum(axis=1)
        assert (r2 <= 1.0).all()
        ks = stats.kstest(r2, stats.beta(1.0, 2.0).cdf)
        assert ks.pvalue > 0.01

    def test_student_histogram_matches_density(self):
        # 30 equal-probability bins against the exact t(4) law
        nu = 4.0
        s = sample(student([0.0], [[1.0]], nu), 100_000, RngStream(24))
        edges = stats.t(nu).ppf(np.linspace(0.0, 1.0, 31))
        counts, _ = np.histogram(s.points[:, 0], bins=edges)
        expected = 100_000 / 30.0
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < stats.chi2.ppf(0.999, 29)

    def test_affine_correctness(self, rng):
        for m in (1, 2, 3):
            a = rng.standard_normal((m, m))
            scale = a @ a.T + m * np.eye(m)
            loc = rng.standard_normal(m)
            for spec_at in (
                lambda l, s: gaussian(l, s),
                lambda l, s: student(l, s, 6.0),
                lambda l, s: pearson2(l, s, 2.0),
            ):
                shifted = sample(spec_at(loc, scale), 200, RngStream(31, m))
                base = sample(spec_at(np.zeros(m), np.eye(m)), 200, RngStream(31, m))
                chol = np.linalg.cholesky(scale)
                np.testing.assert_allclose(
                    shifted.points, base.points @ chol.T + loc, rtol=1e-12, atol=1e-12
                )

    def test_determinism_bit_identical(self):
        spec = student(np.zeros(3), np.eye(3), 4.0)
        a = sample(spec, 500, RngStream(77, 3))
        b = sample(spec, 500, RngStream(77, 3))
        np.testing.assert_array_equal(a.points, b.points)

    def test_sample_validation(self):
        with pytest.raises(DomainError):
            sample(gaussian([0.0], [[1.0]]), 0, RngStream(1))
        with pytest.raises(DomainError):
            Sample(np.array([[np.nan]]))
        with pytest.raises(DomainError):
            Sample(np.empty((0, 2)))


class TestCsv:
    def test_round_trip_is_exact(self, tmp_path, rng):
        s = Sample(rng.standard_normal((50, 3)))
        path = tmp_path / "s.csv"
        write_csv(s, path)
        back = read_csv(path)
        np.testing.assert_array_equal(back.points, s.points)
        header = path.read_text().splitlines()[0]
        assert header == "x1,x2,x3"

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DomainError):
            read_csv(path)

    def test_rejects_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("x1,x2\n1.0,2.0\n3.0\n")
        with pytest.raises(DomainError, match="expected 2 columns"):
            read_csv(path)

    def test_rejects_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1\n1.0\nfoo\n")
        with pytest.raises(DomainError, match="non-numeric"):
            read_csv(path)
