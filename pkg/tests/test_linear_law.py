import numpy as np
import pytest

from llt.embedding import embed_class
from llt.linear_law import (
    ConvergenceError,
    CorrelationMatrix,
    DegenerateLawError,
    correlation,
    fit_law,
    full_spectrum,
    jacobi_eigensystem,
    law_variance,
    scan_law_length,
    smallest_eigenpair,
)
from llt.types import Beat, Corpus, Label, Role

from conftest import random_beats, sinusoid_beats


def naive_correlation(Y):
    """Independent O(K * l^2) double-loop oracle for C = Y^T Y / K."""
    K, l = Y.shape
    C = np.zeros((l, l))
    for i in range(l):
        for j in range(l):
            s = 0.0
            for k in range(K):
                s += Y[k, i] * Y[k, j]
            C[i, j] = s / K
    return C


def inverse_power_smallest(C, iters=100):
    """Shifted inverse power iteration oracle for the smallest eigenpair,
    independent of the Jacobi solver. A fixed negative shift locks onto
    the smallest eigenvalue; Rayleigh-quotient shift updates then sharpen
    the estimate even when the bottom of the spectrum is clustered."""
    n = C.shape[0]
    eye = np.eye(n)
    shift = -1e-8 * max(np.trace(C), 1.0)
    v = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(iters):
        v = np.linalg.solve(C - shift * eye, v)
        v = v / np.linalg.norm(v)
    for _ in range(10):
        lam = float(v @ C @ v)
        try:
            v_new = np.linalg.solve(C - (lam - 1e-14 * max(np.trace(C), 1.0)) * eye, v)
        except np.linalg.LinAlgError:
            break
        v = v_new / np.linalg.norm(v_new)
    lam = float(v @ C @ v)
    return lam, v


class TestCorrelation:
    def test_identity_rows(self):
        em = embed_class([Beat(samples=np.array([1.0, 0.0, 0.0])),
                          Beat(samples=np.array([0.0, 0.0, 1.0]))], 2)
        # rows: [0,1],[0,0] and [0,0],[1,0] -> Y^T Y = I with K=4
        C = correlation(em).C
        assert np.allclose(C, np.eye(2) / 4)

    def test_rank_one(self):
        class FakeEm:
            data = np.array([[1.0, 1.0], [1.0, 1.0]])
            rows = 2
            width = 2
        C = correlation(FakeEm()).C
        assert np.allclose(C, np.ones((2, 2)))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        Y = rng.standard_normal((100, 5))

        class FakeEm:
            data = Y
            rows = 100
            width = 5

        C = correlation(FakeEm()).C
        assert np.max(np.abs(C - naive_correlation(Y))) < 1e-12

    def test_exact_symmetry(self):
        beats = random_beats(5, 12, seed=2)
        C = correlation(embed_class(beats, 6)).C
        assert np.array_equal(C, C.T)


class TestSmallestEigenpair:
    def test_diagonal(self):
        lam, w = smallest_eigenpair(CorrelationMatrix(C=np.diag([2.0, 1.0]), K=1))
        assert lam == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(w, [0, 1])

    def test_2x2_analytic(self):
        C = np.array([[2.0, 1.0], [1.0, 2.0]])
        tr, det = C.trace(), np.linalg.det(C)
        lam_oracle = (tr - np.sqrt(tr * tr - 4 * det)) / 2
        lam, w = smallest_eigenpair(CorrelationMatrix(C=C, K=1))
        assert lam == pytest.approx(lam_oracle, abs=1e-12)
        assert np.allclose(np.abs(w), [1 / np.sqrt(2), 1 / np.sqrt(2)])
        assert w[0] > 0  # sign convention

    def test_matches_inverse_power_oracle(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            Y = rng.standard_normal((40, 12))
            C = Y.T @ Y / 40
            lam, w = smallest_eigenpair(CorrelationMatrix(C=C, K=40))
            lam_o, w_o = inverse_power_smallest(C)
            assert abs(lam - lam_o) < 1e-9 * max(1.0, np.trace(C))
            assert abs(np.dot(w, w_o)) > 1 - 1e-9

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            jacobi_eigensystem(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test_full_spectrum_sorted(self):
        rng = np.random.default_rng(3)
        Y = rng.standard_normal((30, 6))
        ev = full_spectrum(correlation(
            embed_class(random_beats(5, 10, seed=4), 6)))
        assert np.all(np.diff(ev) >= 0)
        assert np.allclose(
            ev,
            np.linalg.eigvalsh(correlation(
                embed_class(random_beats(5, 10, seed=4), 6)).C),
            atol=1e-10,
        )


class TestFitLaw:
    def test_sinusoid_exact_law(self):
        beats = sinusoid_beats(0.3, 10, seed=5)
        law = fit_law(beats, 3, "Normal")
        power = np.mean([np.mean(b.samples**2) for b in beats])
        assert law.lam <= 1e-18 * power
        ref = np.array([1.0, -2.0 * np.cos(0.3), 1.0])
        ref = ref / np.linalg.norm(ref)
        assert abs(np.dot(law.w, ref)) > 1 - 1e-9

    def test_single_beat_matches_2x2_analytic(self):
        beat = Beat(samples=np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        law = fit_law([beat], 2, "Normal")
        Y = embed_class([beat], 2).data
        C = Y.T @ Y / 4
        tr, det = C.trace(), np.linalg.det(C)
        lam_oracle = (tr - np.sqrt(tr * tr - 4 * det)) / 2
        assert law.lam == pytest.approx(lam_oracle, rel=1e-12, abs=1e-15)

    def test_empty_class(self):
        with pytest.raises(ValueError):
            fit_law([], 3, "Normal")

    def test_degenerate_class_rejected(self):
        # beats on a 1-D manifold: every width-3 window of a linear ramp
        # satisfies two independent laws
        beats = [Beat(samples=c * np.ones(8) + 0.0) for c in (1.0, 2.0)]
        with pytest.raises(DegenerateLawError, match="multiplicity"):
            fit_law(beats, 3, "Normal")
        law = fit_law(beats, 3, "Normal", allow_degenerate=True)
        assert law.lam <= 1e-12

    def test_variance_identity(self):
        for seed in range(5):
            beats = random_beats(8, 15, seed=seed)
            law = fit_law(beats, 5, "Normal")
            var = law_variance(beats, law)
            assert abs(var - law.lam) <= 1e-10 * max(var, law.lam)

    def test_minimality(self):
        beats = random_beats(10, 20, seed=9)
        law = fit_law(beats, 6, "Normal")
        Y = embed_class(beats, 6).data
        rng = np.random.default_rng(10)
        for _ in range(20):
            u = rng.standard_normal(6)
            u = u / np.linalg.norm(u)
            assert np.mean((Y @ u) ** 2) >= law.lam - 1e-12

    def test_scale_equivariance(self):
        beats = random_beats(6, 12, seed=12)
        law1 = fit_law(beats, 4, "Normal")
        scaled = [Beat(samples=3.0 * b.samples, label=b.label) for b in beats]
        law2 = fit_law(scaled, 4, "Normal")
        assert law2.lam == pytest.approx(9.0 * law1.lam, rel=1e-12)
        assert np.allclose(law1.w, law2.w, atol=1e-12)

    def test_sign_determinism(self):
        beats = random_beats(6, 12, seed=13)
        law1 = fit_law(beats, 4, "Normal")
        law2 = fit_law(beats, 4, "Normal")
        assert np.array_equal(law1.w, law2.w)
        assert law1.w[np.flatnonzero(law1.w)[0]] > 0


class TestLawVariance:
    def test_zero_beats(self):
        beats = random_beats(4, 10, seed=1)
        law = fit_law(beats, 4, "Normal")
        zeros = [Beat(samples=np.zeros(10)) for _ in range(3)]
        assert law_variance(zeros, law) == 0.0

    def test_held_out_sinusoids(self):
        train = sinusoid_beats(0.3, 10, seed=20)
        held = sinusoid_beats(0.3, 10, seed=21)
        law = fit_law(train, 3, "Normal")
        assert law_variance(held, law) < 1e-18


class TestScan:
    def test_sinusoid_scan(self):
        train = Corpus(beats=sinusoid_beats(0.3, 20, noise=0.01, seed=30),
                       window_len=30, role=Role.TRAIN)
        val = Corpus(beats=sinusoid_beats(0.3, 20, noise=0.01, seed=31),
                     window_len=30, role=Role.VALIDATION)
        report = scan_law_length(train, val, range(2, 7))
        by_width = {e.width: e for e in report.entries}
        for e in report.entries:
            assert e.feature_count == 30 - e.width + 1
        # the 3-term sinusoid identity kicks in at width 3: residual
        # variance collapses to the noise floor and generalizes
        assert by_width[3].lambda_train < 1e-2 * by_width[2].lambda_train
        for width in (3, 4, 5, 6):
            assert by_width[width].lambda_train < 1e-3
            assert by_width[width].gap < 1.0

    def test_noiseless_scan_collapses(self):
        train = Corpus(beats=sinusoid_beats(0.3, 12, seed=30), window_len=30,
                       role=Role.TRAIN)
        val = Corpus(beats=sinusoid_beats(0.3, 12, seed=31), window_len=30,
                     role=Role.VALIDATION)
        report = scan_law_length(train, val, [3])
        assert report.entries[0].lambda_train < 1e-20
        assert report.entries[0].variance_validation < 1e-18

    def test_full_width_single_feature(self):
        train = Corpus(beats=random_beats(25, 10, seed=33), window_len=10,
                       role=Role.TRAIN)
        val = Corpus(beats=random_beats(25, 10, seed=34), window_len=10,
                     role=Role.VALIDATION)
        report = scan_law_length(train, val, [10])
        assert report.entries[0].feature_count == 1

    def test_out_of_range_width(self):
        train = Corpus(beats=random_beats(6, 10, seed=35), window_len=10,
                       role=Role.TRAIN)
        with pytest.raises(ValueError):
            scan_law_length(train, train, [11])

    def test_csv_shape(self):
        train = Corpus(beats=random_beats(6, 10, seed=36), window_len=10,
                       role=Role.TRAIN)
        val = Corpus(beats=random_beats(6, 10, seed=37), window_len=10,
                     role=Role.VALIDATION)
        text = scan_law_length(train, val, [4, 5]).to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "l,lambda_train,var_val,gap,feature_count"
        assert len(lines) == 3
