"""Censoring transform, ordinal encoding, and CSV ingestion."""

import numpy as np
import pytest

from cpmfit.data import (
    CensoredDataset,
    OrdinalEncoding,
    RawSample,
    censor_transform,
    encode_ordinal,
    read_csv,
    uncensored_dataset,
    validate_bounds,
)
from cpmfit.exceptions import DegenerateDataError, IngestionError, InvalidBoundsError


def test_censoring_uses_weak_inequalities():
    y = [0.5, 1.0, 2.0, 5.0, 6.0]
    ds = censor_transform(y, bounds=(1.0, 5.0))
    assert ds.left.tolist() == [True, True, False, False, False]
    assert ds.right.tolist() == [False, False, False, True, True]
    assert ds.yprime.tolist() == [1.0, 1.0, 2.0, 5.0, 5.0]
    assert ds.n_left == 2 and ds.n_right == 2


def test_no_bounds_means_no_censoring():
    ds = uncensored_dataset([3.0, 1.0, 2.0])
    assert ds.bounds is None
    assert not ds.left.any() and not ds.right.any()
    assert ds.yprime.tolist() == [3.0, 1.0, 2.0]


def test_raw_samples_are_accepted():
    samples = [RawSample(2.0, (1.0, 0.5)), RawSample(0.5, (0.0, -1.0))]
    ds = censor_transform(samples, bounds=(1.0, 10.0))
    assert ds.yprime.tolist() == [2.0, 1.0]
    assert ds.z.shape == (2, 2)
    assert ds.z[1, 1] == -1.0


def test_validate_bounds_rejects_bad_pairs():
    assert validate_bounds(None) is None
    assert validate_bounds((1, 2.5)) == (1.0, 2.5)
    with pytest.raises(InvalidBoundsError, match="pair"):
        validate_bounds(3.0)
    with pytest.raises(InvalidBoundsError, match="finite"):
        validate_bounds((0.0, np.inf))
    with pytest.raises(InvalidBoundsError, match="L < U"):
        validate_bounds((2.0, 2.0))
    with pytest.raises(InvalidBoundsError, match="L < U"):
        validate_bounds((3.0, 1.0))


def test_encoding_ranks_and_round_trip():
    ds = uncensored_dataset([3.2, 1.1, 3.2])
    enc = encode_ordinal(ds)
    assert enc.cuts.tolist() == [1.1, 3.2]
    assert enc.category.tolist() == [2, 1, 2]
    assert enc.counts.tolist() == [1, 2]
    assert np.array_equal(enc.cuts[enc.category - 1], ds.yprime)
    assert enc.n_categories == 2 and enc.n_alpha == 1


def test_encoding_random_round_trip():
    rng = np.random.default_rng(5)
    y = rng.integers(0, 40, size=200) / 7.0  # plenty of ties
    enc = encode_ordinal(uncensored_dataset(y))
    assert np.all(np.diff(enc.cuts) > 0)
    assert np.array_equal(enc.cuts[enc.category - 1], np.asarray(y))
    assert enc.counts.sum() == 200


def test_censored_categories_hit_first_and_last_cells():
    y = [0.5, 2.0, 3.0, 9.0]
    enc = encode_ordinal(censor_transform(y, bounds=(1.0, 5.0)))
    assert enc.cuts.tolist() == [1.0, 2.0, 3.0, 5.0]
    assert enc.category.tolist() == [1, 2, 3, 4]
    assert enc.left.tolist() == [True, False, False, False]
    assert enc.right.tolist() == [False, False, False, True]


def test_degenerate_data_is_rejected():
    with pytest.raises(DegenerateDataError, match="distinct"):
        encode_ordinal(uncensored_dataset([2.0, 2.0, 2.0]))
    # everything censored: no interior information
    with pytest.raises(DegenerateDataError, match="uncensored"):
        encode_ordinal(censor_transform([0.1, 9.0, 0.2, 8.0], bounds=(1.0, 5.0)))


def test_outcome_validation():
    with pytest.raises(IngestionError, match="position 1"):
        uncensored_dataset([1.0, np.nan, 2.0])
    with pytest.raises(IngestionError, match="one-dimensional"):
        uncensored_dataset(np.ones((2, 2)))


def test_covariate_validation():
    with pytest.raises(IngestionError, match="do not match"):
        censor_transform([1.0, 2.0], z=np.ones((3, 1)))
    with pytest.raises(IngestionError, match="row 1, column 0"):
        censor_transform([1.0, 2.0], z=np.array([[0.0], [np.inf]]))
    with pytest.raises(IngestionError, match="both sides"):
        CensoredDataset(
            yprime=np.array([1.0]),
            left=np.array([True]),
            right=np.array([True]),
            z=np.zeros((1, 0)),
        )


def test_read_csv_round_trip(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("y,x1,x2\n1.5,0,0.25\n2.5,1,-0.5\n")
    y, z, names = read_csv(path, outcome="y", covariates=["x1", "x2"])
    assert y.tolist() == [1.5, 2.5]
    assert z.tolist() == [[0.0, 0.25], [1.0, -0.5]]
    assert names == ("x1", "x2")


def test_read_csv_covariates_only(tmp_path):
    path = tmp_path / "at.csv"
    path.write_text("x1\n0\n1\n")
    y, z, names = read_csv(path, covariates=["x1"])
    assert y is None
    assert z.shape == (2, 1)


def test_read_csv_errors_name_file_line_and_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,x\n1.0,2.0\noops,3.0\n")
    with pytest.raises(IngestionError, match=r"line 3, column 'y'.*'oops'"):
        read_csv(path, outcome="y", covariates=["x"])
    path.write_text("y,x\n1.0,\n")
    with pytest.raises(IngestionError, match=r"line 2, column 'x': empty"):
        read_csv(path, outcome="y", covariates=["x"])
    path.write_text("y,x\n")
    with pytest.raises(IngestionError, match="no data rows"):
        read_csv(path, outcome="y", covariates=["x"])
    path.write_text("a,b\n1,2\n")
    with pytest.raises(IngestionError, match=r"missing column\(s\) 'y'"):
        read_csv(path, outcome="y", covariates=["b"])
    path.write_text("")
    with pytest.raises(IngestionError, match="empty file"):
        read_csv(path, outcome="y")
