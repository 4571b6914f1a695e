import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmdsvr.dataset import (
    CsvFormatError,
    Dataset,
    NormalizationParams,
    SYNTHETIC_FUNCTIONS,
    SyntheticSpec,
    apply_normalizer,
    export_fold_assignments,
    fit_normalizer,
    gen_synthetic,
    kfold_split,
    load_csv,
)


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_basic_parse_with_target_extraction(self, tmp_path):
        p = write(tmp_path, "1,2,10\n3,4,20\n5,6,30\n")
        d = load_csv(p, target_column=2)
        assert np.array_equal(d.instances, [[1, 2], [3, 4], [5, 6]])
        assert np.array_equal(d.targets, [10, 20, 30])

    def test_negative_target_column_means_from_the_right(self, tmp_path):
        p = write(tmp_path, "1,2,10\n3,4,20\n")
        d = load_csv(p, target_column=-1)
        assert np.array_equal(d.targets, [10, 20])

    def test_header_row_is_skipped(self, tmp_path):
        p = write(tmp_path, "x1,x2,y\n1,2,10\n3,4,20\n")
        d = load_csv(p, target_column=2)
        assert d.n == 2

    def test_non_numeric_field_names_row_and_column(self, tmp_path):
        p = write(tmp_path, "1,2,3\n1,abc,3\n")
        with pytest.raises(CsvFormatError, match="row 1, column 1"):
            load_csv(p)

    def test_empty_file(self, tmp_path):
        with pytest.raises(CsvFormatError, match="empty dataset"):
            load_csv(write(tmp_path, ""))

    def test_header_only_file_is_empty(self, tmp_path):
        with pytest.raises(CsvFormatError, match="empty dataset"):
            load_csv(write(tmp_path, "a,b,c\n"))

    def test_inconsistent_row_width(self, tmp_path):
        p = write(tmp_path, "1,2,3\n1,2\n")
        with pytest.raises(CsvFormatError, match="inconsistent row width at row 1"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError, match="cannot read"):
            load_csv(tmp_path / "nope.csv")

    def test_target_column_out_of_range(self, tmp_path):
        p = write(tmp_path, "1,2\n")
        with pytest.raises(CsvFormatError, match="out of range"):
            load_csv(p, target_column=5)


class TestDataset:
    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset([[1.0], [np.nan]], [0.0, 1.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="targets length"):
            Dataset([[1.0], [2.0]], [0.0])

    def test_arrays_are_read_only(self):
        d = Dataset([[1.0]], [2.0])
        with pytest.raises(ValueError):
            d.instances[0, 0] = 5.0


class TestNormalizer:
    def test_fit_records_min_max(self):
        d = Dataset([[0.0], [5.0], [10.0]], np.zeros(3))
        p = fit_normalizer(d)
        assert p.mins[0] == 0 and p.maxs[0] == 10

    def test_fit_constant_column(self):
        p = fit_normalizer(Dataset([[7.0], [7.0], [7.0]], np.zeros(3)))
        assert p.mins[0] == 7 and p.maxs[0] == 7

    def test_fit_two_columns(self):
        p = fit_normalizer(Dataset([[0.0, -1.0], [4.0, 1.0]], np.zeros(2)))
        assert np.array_equal(p.mins, [0, -1]) and np.array_equal(p.maxs, [4, 1])

    def test_apply_maps_endpoints_and_midpoint(self):
        d = Dataset([[0.0], [5.0], [10.0]], np.zeros(3))
        out = apply_normalizer(fit_normalizer(d), d)
        assert np.array_equal(out.instances[:, 0], [-1.0, 0.0, 1.0])

    def test_constant_attribute_maps_to_zero(self):
        d = Dataset([[7.0], [7.0], [7.0]], np.zeros(3))
        out = apply_normalizer(fit_normalizer(d), d)
        assert np.array_equal(out.instances[:, 0], [0.0, 0.0, 0.0])

    def test_out_of_range_value_extrapolates(self):
        p = NormalizationParams([0.0], [10.0])
        out = apply_normalizer(p, Dataset([[15.0]], [0.0]))
        assert out.instances[0, 0] == 2.0

    def test_dimension_mismatch(self):
        p = NormalizationParams([0.0], [1.0])
        with pytest.raises(ValueError, match="attribute count mismatch"):
            apply_normalizer(p, Dataset([[1.0, 2.0]], [0.0]))

    def test_targets_pass_through_untouched(self, rng):
        d = Dataset(rng.normal(size=(5, 2)), rng.normal(size=5))
        out = apply_normalizer(fit_normalizer(d), d)
        assert np.array_equal(out.targets, d.targets)

    def test_train_extremes_land_exactly_on_unit_interval(self, rng):
        d = Dataset(rng.normal(size=(20, 3)) * 10, rng.normal(size=20))
        out = apply_normalizer(fit_normalizer(d), d)
        assert np.all(out.instances.min(axis=0) == -1.0)
        assert np.all(out.instances.max(axis=0) == 1.0)

    @given(
        st.lists(
            st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2),
            min_size=2,
            max_size=30,
        )
    )
    @settings(deadline=None, max_examples=60)
    def test_round_trip_recovers_inputs(self, rows):
        X = np.asarray(rows)
        d = Dataset(X, np.zeros(X.shape[0]))
        p = fit_normalizer(d)
        out = apply_normalizer(p, d).instances
        span = p.maxs - p.mins
        back = (out + 1.0) / 2.0 * np.where(span > 0, span, 1.0) + p.mins
        # relative to the attribute scale: the affine map can only round-trip
        # to span * eps precision
        scale = np.maximum(1.0, np.maximum(np.abs(X), span[None, :]))
        nonconst = span > 0
        assert np.all(np.abs(back - X)[:, nonconst] / scale[:, nonconst] <= 1e-12)


class TestKfold:
    def test_partition_sizes_and_coverage(self, rng):
        d = Dataset(rng.normal(size=(10, 1)), rng.normal(size=10))
        folds = kfold_split(d, 5, seed=3)
        tests = [set(map(int, te)) for _, te in folds]
        assert all(len(t) == 2 for t in tests)
        assert set().union(*tests) == set(range(10))
        for i, a in enumerate(tests):
            for b in tests[i + 1:]:
                assert not (a & b)

    def test_train_is_complement_of_test(self, rng):
        d = Dataset(rng.normal(size=(11, 1)), rng.normal(size=11))
        for tr, te in kfold_split(d, 3, seed=0):
            assert sorted(set(map(int, tr)) | set(map(int, te))) == list(range(11))
            assert not (set(map(int, tr)) & set(map(int, te)))

    def test_deterministic_under_seed(self, rng):
        d = Dataset(rng.normal(size=(13, 2)), rng.normal(size=13))
        a = kfold_split(d, 4, seed=42)
        b = kfold_split(d, 4, seed=42)
        for (tr1, te1), (tr2, te2) in zip(a, b):
            assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)

    def test_k_larger_than_n_rejected(self, rng):
        d = Dataset(rng.normal(size=(3, 1)), rng.normal(size=3))
        with pytest.raises(ValueError):
            kfold_split(d, 5, seed=0)
        with pytest.raises(ValueError):
            kfold_split(d, 1, seed=0)

    def test_export_assignments(self, tmp_path, rng):
        d = Dataset(rng.normal(size=(6, 1)), rng.normal(size=6))
        folds = kfold_split(d, 3, seed=1)
        out = tmp_path / "folds.csv"
        export_fold_assignments(folds, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "index,fold"
        rows = [tuple(map(int, ln.split(","))) for ln in lines[1:]]
        assert [r[0] for r in rows] == list(range(6))
        assert all(0 <= r[1] < 3 for r in rows)


class TestSynthetic:
    def test_sinc_at_zero_is_one(self):
        assert SYNTHETIC_FUNCTIONS["sinc"].fn(np.array([[0.0]])) == 1.0

    def test_zero_noise_targets_equal_clean_bit_exactly(self):
        d, clean = gen_synthetic(SyntheticSpec("sinc", n=50, noise_sd=0.0, seed=9))
        assert np.array_equal(d.targets, clean)

    def test_same_seed_reproduces_bit_exactly(self):
        spec = SyntheticSpec("additive2", n=40, noise_sd=0.2, seed=5)
        d1, c1 = gen_synthetic(spec)
        d2, c2 = gen_synthetic(spec)
        assert np.array_equal(d1.instances, d2.instances)
        assert np.array_equal(d1.targets, d2.targets)
        assert np.array_equal(c1, c2)

    def test_noise_standard_deviation_monte_carlo(self):
        # sample std of (noisy - clean) at n=200, sigma=0.1 over many seeds
        for seed in range(50):
            d, clean = gen_synthetic(SyntheticSpec("sinc", n=200, noise_sd=0.1, seed=seed))
            sd = np.std(d.targets - clean, ddof=1)
            assert 0.07 <= sd <= 0.13

    def test_inputs_respect_bounds(self):
        d, _ = gen_synthetic(SyntheticSpec("cubic", n=100, seed=2))
        assert d.instances.min() >= -2.0 and d.instances.max() <= 2.0

    def test_unknown_function_rejected(self):
        with pytest.raises(ValueError, match="unknown function"):
            SyntheticSpec("nope")

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError, match="lower bound"):
            SyntheticSpec("sinc", bounds=((2.0, -2.0),))
