import numpy as np
import pytest

from capic.datasets import (
    PairedDataset,
    WINE_SCHEMA,
    apply_standardization,
    load_csv,
    make_split,
    one_hot_decode,
    one_hot_encode,
    synthetic_wine_csv,
)
from capic.errors import ContractViolationError, CsvParseError, EmptyDatasetError

TOY_CSV = """color,grade,size
red,good,1.5
blue,bad,2.0
red,bad,0.5
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_toy_categorical_pair(self, tmp_path):
        path = write(tmp_path, "toy.csv", TOY_CSV)
        ds = load_csv(
            path,
            {"color": "x-categorical", "grade": "y-categorical", "size": "ignore"},
        )
        assert ds.x.shape == (2, 3) and ds.y.shape == (2, 3)
        assert ds.x_labels == ("blue", "red")  # lexicographic
        assert ds.y_labels == ("bad", "good")
        np.testing.assert_allclose(ds.x[:, 0], [0.0, 1.0])  # first row is red
        np.testing.assert_allclose(ds.y[:, 0], [0.0, 1.0])  # and good

    def test_continuous_plus_categorical(self, tmp_path):
        path = write(tmp_path, "toy.csv", TOY_CSV)
        ds = load_csv(
            path,
            {"color": "ignore", "grade": "y-categorical", "size": "x-continuous"},
        )
        np.testing.assert_allclose(ds.x, [[1.5, 2.0, 0.5]])
        assert ds.y_kind == "onehot"

    def test_row_length_mismatch_names_line(self, tmp_path):
        path = write(tmp_path, "bad.csv", "a,b\n1,2\n3\n")
        with pytest.raises(CsvParseError, match="line 3"):
            load_csv(path, {"a": "x-continuous", "b": "y-continuous"})

    def test_non_numeric_continuous_names_line(self, tmp_path):
        path = write(tmp_path, "bad.csv", "a,b\n1,2\nx,4\n")
        with pytest.raises(CsvParseError, match="line 3"):
            load_csv(path, {"a": "x-continuous", "b": "y-continuous"})

    def test_missing_schema_column(self, tmp_path):
        path = write(tmp_path, "bad.csv", "a,b\n1,2\n")
        with pytest.raises(CsvParseError, match="missing"):
            load_csv(path, {"a": "x-continuous", "zz": "y-continuous"})

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "empty.csv", "")
        with pytest.raises(CsvParseError):
            load_csv(path, {"a": "x-continuous"})

    def test_no_data_rows(self, tmp_path):
        path = write(tmp_path, "header.csv", "a,b\n")
        with pytest.raises(EmptyDatasetError):
            load_csv(path, {"a": "x-continuous", "b": "y-continuous"})

    def test_standardize_uses_train_split_stats(self, tmp_path):
        rng = np.random.default_rng(5)
        rows = "\n".join(
            f"{float(v)!r},{float(w)!r}" for v, w in rng.normal(3.0, 2.0, size=(50, 2))
        )
        path = write(tmp_path, "std.csv", "a,b\n" + rows + "\n")
        ds = load_csv(
            path,
            {"a": "x-continuous", "b": "y-continuous"},
            standardize=True,
            test_fraction=0.2,
            split_seed=7,
        )
        x_tr, _ = ds.train_arrays()
        assert abs(x_tr.mean()) < 1e-12
        assert abs(x_tr.std() - 1.0) < 1e-12
        # stored stats reproduce the transform
        stats = ds.provenance["standardization"]["x"]
        assert len(stats["mean"]) == 1


class TestOneHot:
    def test_round_trip(self):
        values = ["c", "a", "b", "a"]
        mat, labels = one_hot_encode(values)
        assert labels == ("a", "b", "c")
        assert one_hot_decode(mat, labels) == values

    def test_columns_sum_to_one(self):
        mat, _ = one_hot_encode([1, 2, 2, 3])
        np.testing.assert_allclose(mat.sum(axis=0), 1.0)

    def test_paired_dataset_validates_onehot(self):
        with pytest.raises(ContractViolationError):
            PairedDataset(
                x=np.array([[0.5, 0.0], [0.0, 1.0]]),
                y=np.zeros((1, 2)),
                x_kind="onehot",
                x_labels=("a", "b"),
            )


class TestSplit:
    def test_deterministic(self):
        a = make_split(100, 0.2, seed=3)
        b = make_split(100, 0.2, seed=3)
        assert np.array_equal(a.train_idx, b.train_idx)
        assert a.test_idx.size == 20
        assert np.intersect1d(a.train_idx, a.test_idx).size == 0


class TestStandardizationHelper:
    def test_apply_matches_stats(self):
        stats = {"mean": [1.0, -2.0], "std": [2.0, 0.5]}
        out = apply_standardization(stats, np.array([[3.0], [-1.0]]))
        np.testing.assert_allclose(out, [[1.0], [2.0]])


class TestSyntheticWine:
    def test_shapes_match_expected_schema(self, tmp_path):
        path = synthetic_wine_csv(tmp_path / "wine.csv", n_samples=300, seed=1)
        ds = load_csv(path, WINE_SCHEMA)
        assert ds.x.shape == (11, 300)
        assert ds.y.shape[0] == 6  # six quality grades
        assert ds.y_labels == ("2", "3", "4", "5", "6", "7")

    def test_default_sample_count(self, tmp_path):
        path = synthetic_wine_csv(tmp_path / "wine.csv", seed=2)
        ds = load_csv(path, WINE_SCHEMA)
        assert ds.x.shape == (11, 4898)

    def test_deterministic(self, tmp_path):
        synthetic_wine_csv(tmp_path / "a.csv", n_samples=50, seed=9)
        synthetic_wine_csv(tmp_path / "b.csv", n_samples=50, seed=9)
        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
