import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbest.core import (
    CsvSchema,
    DataError,
    Dataset,
    DiscreteDistribution,
    SeededRngStream,
    StepFunction,
    TimeToEventRecord,
    kfold,
    kfold_indices,
    load_csv,
    split_train_test,
    step_eval,
    write_csv,
)
from gbest.datasets import load_bladder

from conftest import make_dataset


def test_record_validation():
    with pytest.raises(DataError):
        TimeToEventRecord(-1.0, True, (1.0,))
    with pytest.raises(DataError):
        TimeToEventRecord(1.0, True, (1.0,), weight=-0.5)
    assert TimeToEventRecord(0.0, False, [1, 2]).covariates == (1.0, 2.0)


def test_dataset_rejects_bad_shapes():
    with pytest.raises(DataError):
        Dataset([], [], np.zeros((0, 1)), ["x"])
    with pytest.raises(DataError):
        Dataset([1.0], [True], np.zeros((1, 1)), [])
    with pytest.raises(DataError):
        Dataset([1.0, 2.0], [True, True], np.zeros((2, 2)), ["x"])
    with pytest.raises(DataError):
        Dataset.from_records([TimeToEventRecord(1, True, (1, 2))], ["x"])


def test_dataset_is_read_only(toy):
    with pytest.raises(ValueError):
        toy.time[0] = 9.0
    assert toy.n == 3 and toy.p == 1
    assert [r.time for r in toy.records] == [2, 3, 5]
    assert toy.censoring_fraction() == pytest.approx(1 / 3)


def test_from_records_roundtrip(toy):
    again = Dataset.from_records(toy.records, toy.feature_names)
    np.testing.assert_array_equal(again.X, toy.X)
    np.testing.assert_array_equal(again.event, toy.event)


def test_step_eval_examples():
    f = StepFunction([2, 5], [0.6, 0.2], 1.0)
    assert step_eval(f, 1) == 1.0
    assert step_eval(f, 2) == 0.6
    assert step_eval(f, 7) == 0.2
    np.testing.assert_array_equal(f([0, 2, 4.9, 5]), [1, 0.6, 0.6, 0.2])
    with pytest.raises(ValueError):
        f(-0.1)
    assert f.is_survival_curve()


def test_step_function_rejects_unsorted_knots():
    with pytest.raises(ValueError):
        StepFunction([3, 1], [0.5, 0.2])
    with pytest.raises(ValueError):
        StepFunction([1, 1], [0.5, 0.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.floats(0, 20), st.floats(0, 20))
def test_survival_curves_never_increase(drops, t1, t2):
    values = np.cumprod(1 - np.asarray(drops))
    f = StepFunction(np.arange(1, len(drops) + 1, dtype=float), values)
    assert f.is_survival_curve()
    lo, hi = sorted((t1, t2))
    assert f(lo) >= f(hi)


@given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=30).filter(lambda m: sum(m) > 0))
def test_discrete_masses_renormalise(masses):
    g = DiscreteDistribution(np.arange(len(masses), dtype=float), masses)
    assert abs(g.masses.sum() - 1.0) <= 1e-12


def test_discrete_distribution_cdf_and_expectation():
    g = DiscreteDistribution([1.0, 2.0, 4.0], [1, 1, 2])
    np.testing.assert_allclose(g.cdf([0.5, 1, 3, 4]), [0, 0.25, 0.5, 1.0])
    assert g.expect(lambda x: x) == pytest.approx(2.75)
    with pytest.raises(ValueError):
        DiscreteDistribution([2.0, 1.0], [1, 1])


def test_streams_are_reproducible_and_distinct():
    a = SeededRngStream(42, 3).generator().random(5)
    b = SeededRngStream(42, 3).generator().random(5)
    c = SeededRngStream(42, 4).generator().random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    s = SeededRngStream(42).substream(1).substream(2)
    np.testing.assert_array_equal(s.generator().random(3), SeededRngStream(42, 2, (0, 1)).generator().random(3))
    with pytest.raises(ValueError):
        SeededRngStream(-1)


def test_stream_independence_smoke():
    x = SeededRngStream(0, 0).generator().standard_normal(20000)
    y = SeededRngStream(0, 1).generator().standard_normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.03


def test_load_csv_three_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,status,x1\n2,1,0.5\n3,0,1.0\n5,1,2.0\n")
    d = load_csv(p, CsvSchema("time", "status", ("x1",)))
    assert d.n == 3 and d.p == 1
    np.testing.assert_array_equal(d.time, [2, 3, 5])
    np.testing.assert_array_equal(d.event, [True, False, True])
    np.testing.assert_array_equal(d.weight, [1, 1, 1])


@pytest.mark.parametrize("body, fragment", [
    ("time,status,x1\n2,1,0.5\n3,2,1.0\n", "row 3"),
    ("time,status,x1\n2,1,abc\n", "'x1'"),
    ("time,status,x1\n-2,1,0.5\n", "negative time"),
])
def test_load_csv_errors_name_row_and_column(tmp_path, body, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=fragment):
        load_csv(p, CsvSchema())


def test_load_csv_missing_file_and_column(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv", CsvSchema())
    p = tmp_path / "d.csv"
    p.write_text("time,status,x1\n2,1,0.5\n")
    with pytest.raises(DataError, match="unknown column"):
        load_csv(p, {"covariates": ("x2",)})


def test_csv_roundtrip(tmp_path, toy):
    write_csv(toy, tmp_path / "out.csv")
    back = load_csv(tmp_path / "out.csv", CsvSchema())
    np.testing.assert_array_equal(back.time, toy.time)
    np.testing.assert_array_equal(back.X, toy.X)


def test_bladder_counts():
    d = load_bladder()
    assert d.n == 85 and d.p == 3
    assert int(d.event.sum()) == 47 and int((~d.event).sum()) == 38
    assert d.feature_names == ("rx", "number", "size")
    assert np.all(d.time > 0)


@pytest.mark.parametrize("n, sizes", [(50, (25, 25)), (75, (38, 37))])
def test_split_sizes(n, sizes):
    d = make_dataset(np.arange(1, n + 1), np.ones(n, bool))
    tr, te = split_train_test(d, 0.5, SeededRngStream(1))
    assert (tr.n, te.n) == sizes
    assert sorted(np.concatenate([tr.time, te.time]).tolist()) == list(range(1, n + 1))


def test_split_is_deterministic():
    d = make_dataset(np.arange(1, 41), np.ones(40, bool))
    a = split_train_test(d, 0.5, SeededRngStream(9))[0].time
    b = split_train_test(d, 0.5, SeededRngStream(9))[0].time
    np.testing.assert_array_equal(a, b)
    with pytest.raises(DataError):
        split_train_test(make_dataset([1.0], [True]), 0.5, SeededRngStream(0))


def test_kfold_examples():
    folds = kfold_indices(85, 5, SeededRngStream(0))
    assert [te.size for _, te in folds] == [17] * 5
    folds = kfold_indices(10, 2, SeededRngStream(0))
    assert sorted(np.concatenate([te for _, te in folds]).tolist()) == list(range(10))
    with pytest.raises(DataError):
        kfold_indices(10, 11, SeededRngStream(0))
    with pytest.raises(DataError):
        kfold_indices(10, 1, SeededRngStream(0))


@given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 2**32))
def test_kfold_partitions(n, k, seed):
    k = min(k, n)
    folds = kfold_indices(n, k, SeededRngStream(seed))
    tests = [te for _, te in folds]
    assert sorted(np.concatenate(tests).tolist()) == list(range(n))
    sizes = [t.size for t in tests]
    assert max(sizes) - min(sizes) <= 1
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert tr.size + te.size == n
    again = kfold_indices(n, k, SeededRngStream(seed))
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_kfold_returns_datasets(toy):
    pairs = kfold(toy, 3, SeededRngStream(0))
    assert all(te.n == 1 and tr.n == 2 for tr, te in pairs)
