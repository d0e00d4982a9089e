import math

import numpy as np
import PIL.Image
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rriqa.color import ColorImage, ColorSpace, load_image
from rriqa.errors import ContractError, DatasetError, DegenerateFitError
from rriqa.metric import DistanceKind, extract_features, score
from rriqa.pyramid import PyramidConfig
from rriqa.validation import (
    DistortionKind,
    EvalConfig,
    LogisticFit,
    distort,
    evaluate,
    fit_logistic,
    load_dataset,
    logistic_fn,
    nelder_mead,
    plcc,
    srcc,
)

# Pearson of (1,2,3,4,5) vs (2,1,4,3,6) by direct evaluation of the
# correlation formula: covariance 10, variances 10 and 14.8
PLCC_HAND = 10.0 / math.sqrt(148.0)


class TestLogisticFn:
    def test_zero_at_origin(self):
        for tau in (-3.0, 0.0, 0.7, 50.0):
            assert logistic_fn(tau, 0.0) == 0.0

    @given(st.floats(min_value=-5, max_value=5), st.floats(min_value=-50, max_value=50))
    @settings(max_examples=80)
    def test_odd_symmetry(self, tau, q):
        assert logistic_fn(tau, q) == pytest.approx(-logistic_fn(tau, -q), abs=1e-15)

    def test_saturates_without_overflow(self):
        with np.errstate(over="raise"):
            assert logistic_fn(1.0, 700.0) == 0.5
            assert logistic_fn(1.0, -700.0) == -0.5
            assert logistic_fn(-1.0, 700.0) == -0.5

    def test_bounded(self):
        for q in np.linspace(-20, 20, 41):
            assert -0.5 <= logistic_fn(2.0, q) <= 0.5


class TestNelderMead:
    def test_quadratic_minimum(self):
        x, value, converged = nelder_mead(lambda v: float((v - 3.0) @ (v - 3.0)),
                                          np.zeros(4))
        assert converged
        np.testing.assert_allclose(x, 3.0, atol=1e-6)
        assert value < 1e-10

    def test_best_vertex_never_worsens(self):
        history = []
        nelder_mead(lambda v: float(np.sum(v ** 4) - np.sum(v) + 1.0),
                    np.array([2.0, -1.0, 0.5]), history=history)
        assert all(later <= earlier for earlier, later in zip(history, history[1:]))

    def test_iteration_cap_reported(self):
        _, _, converged = nelder_mead(lambda v: float(v @ v), np.full(3, 100.0),
                                      max_iter=3)
        assert not converged


class TestFitLogistic:
    def test_recovers_noise_free_synthetic_data(self):
        q = np.linspace(0.0, 5.0, 40)
        truth = LogisticFit(2.0, 1.5, 2.5, 0.6, 1.0, residual=0.0, converged=True)
        mos = truth.predict(q)
        fit = fit_logistic(q, mos)
        assert fit.residual < 1e-6 * float(mos @ mos)
        np.testing.assert_allclose(fit.predict(q), mos, atol=1e-4)

    def test_linear_data_reaches_linear_subspace(self):
        q = np.linspace(0.0, 4.0, 25)
        mos = 3.0 * q + 1.0
        fit = fit_logistic(q, mos)
        design = np.vstack([q, np.ones_like(q)]).T
        coeffs, *_ = np.linalg.lstsq(design, mos, rcond=None)
        linear_residual = float(np.sum((design @ coeffs - mos) ** 2))
        assert fit.residual <= linear_residual + 1e-9

    def test_small_random_input_smoke(self, rng):
        fit = fit_logistic(rng.standard_normal(10), rng.standard_normal(10))
        assert fit.converged
        for value in (fit.b1, fit.b2, fit.b3, fit.b4, fit.b5, fit.residual):
            assert np.isfinite(value)

    def test_prediction_finite_on_wide_range(self, rng):
        q = np.concatenate([np.linspace(0, 3, 15), [500.0, -500.0]])
        mos = np.tanh(q) + 0.01 * rng.standard_normal(q.size)
        fit = fit_logistic(q, mos)
        assert np.all(np.isfinite(fit.predict(q)))

    def test_constant_inputs_rejected(self, rng):
        with pytest.raises(DegenerateFitError):
            fit_logistic(np.ones(12), rng.standard_normal(12))
        with pytest.raises(DegenerateFitError):
            fit_logistic(rng.standard_normal(12), np.full(12, 3.3))

    def test_needs_ten_samples(self, rng):
        with pytest.raises(ContractError):
            fit_logistic(rng.standard_normal(9), rng.standard_normal(9))


class TestCorrelations:
    def test_plcc_perfect(self):
        assert plcc([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0, abs=1e-15)
        assert plcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)

    def test_plcc_hand_computed(self):
        assert plcc([1, 2, 3, 4, 5], [2, 1, 4, 3, 6]) == pytest.approx(
            PLCC_HAND, abs=1e-12)

    def test_plcc_affine_invariance_sign(self, rng):
        a = rng.standard_normal(30)
        assert plcc(a, 2.5 * a + 1.0) == pytest.approx(1.0, abs=1e-12)
        assert plcc(a, -0.3 * a + 2.0) == pytest.approx(-1.0, abs=1e-12)

    def test_plcc_constant_rejected(self):
        with pytest.raises(DegenerateFitError):
            plcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_srcc_hand_computed(self):
        # no ties: classic rank-difference formula gives 1 - 6*4/120
        assert srcc([1, 2, 3, 4, 5], [2, 1, 4, 3, 6]) == pytest.approx(0.8, abs=1e-15)

    def test_srcc_reversal(self):
        assert srcc([1, 2, 3, 4], [9, 7, 5, 1]) == pytest.approx(-1.0, abs=1e-15)

    def test_srcc_monotone_transform_invariant(self, rng):
        a = rng.standard_normal(40)
        b = rng.standard_normal(40)
        assert srcc(np.exp(a), b) == srcc(a, b)
        assert srcc(a, 7.0 * b - 2.0) == srcc(a, b)

    def test_srcc_ties_against_brute_force(self):
        a = [1.0, 2.0, 2.0, 4.0]
        b = [1.0, 3.0, 2.0, 4.0]

        def brute_ranks(values):
            return [sum(1 for w in values if w < v)
                    + (sum(1 for w in values if w == v) + 1) / 2.0
                    for v in values]

        def brute_pearson(x, y):
            mx = sum(x) / len(x)
            my = sum(y) / len(y)
            num = sum((p - mx) * (q - my) for p, q in zip(x, y))
            den = math.sqrt(sum((p - mx) ** 2 for p in x)
                            * sum((q - my) ** 2 for q in y))
            return num / den

        assert srcc(a, b) == pytest.approx(
            brute_pearson(brute_ranks(a), brute_ranks(b)), abs=1e-14)

    def test_srcc_no_ties_matches_rank_difference_formula(self, rng):
        a = rng.permutation(12).astype(float)
        b = rng.permutation(12).astype(float)
        n = len(a)
        ra = np.argsort(np.argsort(a)) + 1
        rb = np.argsort(np.argsort(b)) + 1
        formula = 1.0 - 6.0 * float(np.sum((ra - rb) ** 2)) / (n * (n * n - 1.0))
        assert srcc(a, b) == pytest.approx(formula, abs=1e-12)


class TestDistort:
    @pytest.fixture()
    def gray(self):
        return ColorImage(ColorSpace.RGB, np.full((64, 64, 3), 0.5))

    def test_noise_moment(self, gray):
        noisy = distort(gray, DistortionKind.GAUSSIAN_NOISE, 0.1, seed=1)
        added = noisy.data - gray.data
        assert abs(float(np.std(added)) - 0.1) < 0.005
        assert noisy.data.min() >= 0.0 and noisy.data.max() <= 1.0

    def test_noise_deterministic(self, gray):
        a = distort(gray, DistortionKind.GAUSSIAN_NOISE, 0.2, seed=7)
        b = distort(gray, DistortionKind.GAUSSIAN_NOISE, 0.2, seed=7)
        np.testing.assert_array_equal(a.data, b.data)

    def test_blur_preserves_constant(self, gray):
        blurred = distort(gray, DistortionKind.GAUSSIAN_BLUR, 2.5)
        np.testing.assert_allclose(blurred.data, 0.5, atol=1e-12)

    def test_blur_smooths(self, natural_image):
        blurred = distort(natural_image, DistortionKind.GAUSSIAN_BLUR, 2.0)
        assert float(np.var(blurred.data)) < float(np.var(natural_image.data))

    def test_quantization_bins(self, natural_image):
        quantized = distort(natural_image, DistortionKind.QUANTIZATION, 5)
        assert len(np.unique(quantized.data)) <= 5

    def test_small_level_limit(self, natural_image):
        noisy = distort(natural_image, DistortionKind.GAUSSIAN_NOISE, 1e-6, seed=3)
        np.testing.assert_allclose(noisy.data, natural_image.data, atol=1e-4)

    def test_rejects_bad_input(self, gray):
        with pytest.raises(ContractError):
            distort(gray, DistortionKind.GAUSSIAN_NOISE, 0.0)
        hsv = ColorImage(ColorSpace.HSV, gray.data.copy())
        with pytest.raises(ContractError):
            distort(hsv, DistortionKind.GAUSSIAN_NOISE, 0.1)


# --------------------------------------------------------------------------
# dataset ingestion and evaluation


def write_image(path, data):
    PIL.Image.fromarray((np.clip(data, 0.0, 1.0) * 255).round().astype(np.uint8)).save(path)


@pytest.fixture(scope="module")
def mini_dataset(tmp_path_factory, natural_images):
    """Three references x {noise, blur, quantization} x 4 levels, BMP files."""
    root = tmp_path_factory.mktemp("mini") / "dataset"
    (root / "reference_images").mkdir(parents=True)
    (root / "distorted_images").mkdir()
    levels = {
        DistortionKind.GAUSSIAN_NOISE: [0.03, 0.08, 0.16, 0.30],
        DistortionKind.GAUSSIAN_BLUR: [0.8, 1.6, 3.0, 5.5],
        DistortionKind.QUANTIZATION: [48, 16, 8, 4],
    }
    type_codes = {DistortionKind.GAUSSIAN_NOISE: 1,
                  DistortionKind.QUANTIZATION: 7,
                  DistortionKind.GAUSSIAN_BLUR: 8}
    lines = []
    for ref_index, image in enumerate(natural_images, start=1):
        small = ColorImage(ColorSpace.RGB, image.data[:64, :64])
        write_image(root / "reference_images" / f"I{ref_index:02d}.bmp", small.data)
        for kind, params in levels.items():
            for level_index, level in enumerate(params, start=1):
                distorted = distort(small, kind, level, seed=level_index)
                name = f"i{ref_index:02d}_{type_codes[kind]:02d}_{level_index}.bmp"
                write_image(root / "distorted_images" / name, distorted.data)
                mos = 9.0 - 1.8 * level_index - 0.1 * ref_index
                lines.append(f"{mos:.5f} {name}")
    manifest = root / "mos.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return root, manifest


FAST_CONFIG = EvalConfig(color_space=ColorSpace.YCRCB, distance=DistanceKind.KLD,
                         pyramid_cfg=PyramidConfig(1, 3))


class TestLoadDataset:
    def test_parses_convention(self, mini_dataset):
        root, manifest = mini_dataset
        samples = load_dataset(root, manifest)
        assert len(samples) == 36
        first = samples[0]
        assert first.ref_id == 1
        assert first.distortion_type == 1
        assert first.level == 1
        assert first.mos == pytest.approx(9.0 - 1.8 - 0.1)
        assert first.distorted_path.is_file()
        assert first.ref_path.is_file()

    def test_empty_manifest_warns(self, tmp_path):
        manifest = tmp_path / "empty.txt"
        manifest.write_text("")
        with pytest.warns(UserWarning):
            assert load_dataset(tmp_path, manifest) == []

    def test_type_out_of_range(self, tmp_path):
        manifest = tmp_path / "m.txt"
        manifest.write_text("5.0 i01_99_1.bmp\n")
        with pytest.raises(DatasetError, match="line 1"):
            load_dataset(tmp_path, manifest)

    def test_missing_file_listed(self, tmp_path):
        manifest = tmp_path / "m.txt"
        manifest.write_text("5.0 i01_01_1.bmp\n4.0 i01_01_2.bmp\n")
        with pytest.raises(DatasetError) as excinfo:
            load_dataset(tmp_path, manifest)
        assert "line 1" in str(excinfo.value)
        assert "line 2" in str(excinfo.value)

    def test_malformed_lines_collected(self, tmp_path):
        manifest = tmp_path / "m.txt"
        manifest.write_text("not-a-number i01_01_1.bmp\njust-one-token\n")
        with pytest.raises(DatasetError) as excinfo:
            load_dataset(tmp_path, manifest)
        message = str(excinfo.value)
        assert "line 1" in message and "line 2" in message


class TestEvaluate:
    def test_report_structure_and_determinism(self, mini_dataset):
        root, manifest = mini_dataset
        samples = load_dataset(root, manifest)
        report = evaluate(samples, FAST_CONFIG)
        assert sorted(report.per_type) == [1, 7, 8]
        assert report.overall.n == 36
        assert sum(r.n for r in report.per_type.values()) == report.overall.n
        for result in report.per_type.values():
            assert -1.0 <= result.plcc <= 1.0
            assert -1.0 <= result.srcc <= 1.0
        again = evaluate(load_dataset(root, manifest), FAST_CONFIG)
        assert report.to_csv() == again.to_csv()
        assert report.to_text() == again.to_text()
        assert "all" in report.to_csv().splitlines()[-1]

    def test_monotone_noise_dataset_has_high_srcc(self, tmp_path, natural_images):
        root = tmp_path / "noise_only"
        (root / "reference_images").mkdir(parents=True)
        (root / "distorted_images").mkdir()
        lines = []
        sigmas = [0.02, 0.05, 0.09, 0.15]
        for ref_index, image in enumerate(natural_images, start=1):
            small = ColorImage(ColorSpace.RGB, image.data[:64, :64])
            write_image(root / "reference_images" / f"I{ref_index:02d}.bmp", small.data)
            for level_index in range(1, 5):
                sigma = sigmas[level_index - 1] * (1.0 + 0.2 * (ref_index - 1))
                noisy = distort(small, DistortionKind.GAUSSIAN_NOISE, sigma, seed=level_index)
                name = f"i{ref_index:02d}_01_{level_index}.bmp"
                write_image(root / "distorted_images" / name, noisy.data)
                lines.append(f"{1.0 + 10.0 * sigma:.5f} {name}")
        manifest = root / "mos.txt"
        manifest.write_text("\n".join(lines) + "\n")
        report = evaluate(load_dataset(root, manifest), FAST_CONFIG)
        assert report.overall.srcc >= 0.9

    def test_mos_exactly_monotone_in_q_gives_srcc_one(self, mini_dataset):
        root, manifest = mini_dataset
        samples = load_dataset(root, manifest)
        # compute Q deterministically, then relabel MOS as a monotone map of it
        cache = {}
        qs = []
        for item in samples:
            if item.ref_path not in cache:
                cache[item.ref_path] = extract_features(
                    load_image(item.ref_path), FAST_CONFIG.color_space,
                    FAST_CONFIG.pyramid_cfg)
            qs.append(score(cache[item.ref_path], load_image(item.distorted_path),
                            FAST_CONFIG.distance).q)
        relabeled = manifest.parent / "mos_monotone.txt"
        relabeled.write_text("\n".join(
            f"{2.0 * q ** 3 + 0.5:.12f} {s.distorted_path.name}"
            for q, s in zip(qs, samples)) + "\n")
        report = evaluate(load_dataset(root, relabeled), FAST_CONFIG)
        assert report.overall.srcc == pytest.approx(1.0, abs=1e-15)

    def test_identical_to_reference_degenerates(self, tmp_path, natural_images):
        root = tmp_path / "selfsame"
        (root / "reference_images").mkdir(parents=True)
        (root / "distorted_images").mkdir()
        small = ColorImage(ColorSpace.RGB, natural_images[0].data[:64, :64])
        write_image(root / "reference_images" / "I01.bmp", small.data)
        lines = []
        for dtype in (1, 2, 3):
            for level in range(1, 5):
                name = f"i01_{dtype:02d}_{level}.bmp"
                write_image(root / "distorted_images" / name, small.data)
                lines.append(f"{5.0 - 0.1 * level:.3f} {name}")
        manifest = root / "mos.txt"
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(DegenerateFitError):
            evaluate(load_dataset(root, manifest), FAST_CONFIG)

    def test_failures_collected(self, mini_dataset):
        root, manifest = mini_dataset
        samples = load_dataset(root, manifest)
        # corrupt one distorted file after ingestion, restore afterwards
        pristine = samples[3].distorted_path.read_bytes()
        try:
            samples[3].distorted_path.write_bytes(b"BMtrash")
            report = evaluate(samples, FAST_CONFIG)
        finally:
            samples[3].distorted_path.write_bytes(pristine)
        assert len(report.failures) == 1
        assert report.overall.n == 35

    def test_per_type_fit_mode(self, mini_dataset):
        root, manifest = mini_dataset
        samples = load_dataset(root, manifest)
        config = EvalConfig(color_space=FAST_CONFIG.color_space,
                            distance=FAST_CONFIG.distance,
                            pyramid_cfg=FAST_CONFIG.pyramid_cfg,
                            per_type_fit=True)
        report = evaluate(samples, config)
        assert sorted(report.per_type) == [1, 7, 8]
