import numpy as np
import pytest

from app.core.errors import ArgumentError, DataError
from app.services.problems import TransformSpec
from app.services.suite import (
    SUITE_SIZE,
    build_suite,
    load_transform_data,
    make_suite,
    random_orthogonal,
    random_partition,
    write_transform_data,
)


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_identity_file(tmp_path):
    path = _write(tmp_path / "t.txt", ["3", "0 0 0", "1 0 0", "0 1 0", "0 0 1"])
    spec = load_transform_data(path, 3)
    assert np.array_equal(spec.rotation, np.eye(3))
    assert np.array_equal(spec.shift, np.zeros(3))
    assert spec.bias == 0.0


def test_load_with_bias(tmp_path):
    path = _write(tmp_path / "t.txt", ["2", "1.5 -2", "0 1", "1 0", "400"])
    spec = load_transform_data(path, 2)
    assert spec.bias == 400.0
    assert np.array_equal(spec.shift, [1.5, -2.0])


def test_load_malformed_row_count(tmp_path):
    path = _write(tmp_path / "t.txt", ["3", "0 0 0", "1 0 0", "0 1 0"])
    with pytest.raises(DataError):
        load_transform_data(path, 3)


def test_load_unparseable(tmp_path):
    path = _write(tmp_path / "t.txt", ["2", "0 x", "1 0", "0 1"])
    with pytest.raises(DataError):
        load_transform_data(path, 2)


def test_load_non_orthogonal(tmp_path):
    path = _write(tmp_path / "t.txt", ["2", "0 0", "1 0.1", "0 1"])
    with pytest.raises(DataError):
        load_transform_data(path, 2)


def test_load_shift_outside_box(tmp_path):
    path = _write(tmp_path / "t.txt", ["2", "0 100.5", "1 0", "0 1"])
    with pytest.raises(DataError, match="search box"):
        load_transform_data(path, 2)
    edge = _write(tmp_path / "edge.txt", ["2", "-100 100", "1 0", "0 1"])
    assert np.array_equal(load_transform_data(edge, 2).shift, [-100.0, 100.0])


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_transform_data(tmp_path / "absent.txt", 2)


def test_write_then_load(tmp_path, rng):
    spec = TransformSpec(rng.uniform(-80, 80, 6), random_orthogonal(rng, 6), bias=123.25)
    loaded = load_transform_data(write_transform_data(spec, tmp_path / "F01_D6.txt"), 6)
    assert np.allclose(loaded.shift, spec.shift, atol=1e-12)
    assert np.allclose(loaded.rotation, spec.rotation, atol=1e-12)
    assert loaded.bias == spec.bias


def test_orthogonal_one_dimension(rng):
    m = random_orthogonal(rng, 1)
    assert m.shape == (1, 1)
    assert abs(abs(m[0, 0]) - 1.0) < 1e-15


def test_orthogonal_fifty_dimensions(rng):
    m = random_orthogonal(rng, 50)
    assert np.max(np.abs(m.T @ m - np.eye(50))) < 1e-10
    x = rng.standard_normal(50)
    assert abs(np.linalg.norm(m @ x) - np.linalg.norm(x)) < 1e-10


def test_partition_covers_every_coordinate(rng):
    groups = random_partition(rng, 10, (0.2, 0.2, 0.3, 0.3))
    assert len(groups) == 4
    assert all(len(g) >= 1 for g in groups)
    assert sorted(i for g in groups for i in g) == list(range(10))


def test_partition_small_dimension(rng):
    groups = random_partition(rng, 4, (0.2, 0.2, 0.3, 0.3))
    assert [len(g) for g in groups] == [1, 1, 1, 1]
    with pytest.raises(ArgumentError):
        random_partition(rng, 3, (0.2, 0.2, 0.3, 0.3))


def test_desk_suite_contents():
    suite = make_suite(10)
    assert len(suite) == SUITE_SIZE == 12
    assert [p.optimum_value for p in suite] == [100.0 * i for i in range(1, 13)]
    assert {p.category for p in suite} == {"unimodal", "basic", "hybrid", "composition"}
    assert suite[0].name == "F01_bent_cigar_D10"


@pytest.mark.parametrize("dim", [4, 10, 20])
def test_optimum_values_at_shift(dim):
    for problem in make_suite(dim):
        assert np.all(np.abs(problem.optimum_position) < 100.0)
        assert problem.evaluate(problem.optimum_position) == pytest.approx(problem.optimum_value, abs=1e-8)


def test_suite_is_reproducible():
    first = make_suite(10, seed=3)
    second = make_suite(10, seed=3)
    for a, b in zip(first, second):
        assert np.array_equal(a.optimum_position, b.optimum_position)
    other = make_suite(10, seed=4)
    assert not np.array_equal(first[0].optimum_position, other[0].optimum_position)


def test_subset_keeps_transforms():
    full = make_suite(10)
    subset = make_suite(10, problems=[4, 11])
    assert [p.name for p in subset] == [full[3].name, full[10].name]
    assert np.array_equal(subset[0].optimum_position, full[3].optimum_position)
    assert np.array_equal(subset[1].optimum_position, full[10].optimum_position)


def test_transform_directory_override(tmp_path):
    spec = TransformSpec(np.full(10, 7.0), np.eye(10), bias=950.0)
    write_transform_data(spec, tmp_path / "F04_D10.txt")
    full = make_suite(10)
    overridden = make_suite(10, transform_dir=tmp_path)
    assert np.array_equal(overridden[3].optimum_position, np.full(10, 7.0))
    assert overridden[3].optimum_value == 950.0
    assert overridden[3].evaluate(np.full(10, 7.0)) == pytest.approx(950.0)
    assert np.array_equal(overridden[4].optimum_position, full[4].optimum_position)
    assert overridden[4].optimum_value == 500.0


def test_override_without_bias_line_keeps_index_bias(tmp_path):
    rows = ["10", " ".join(["-3"] * 10)] + [" ".join("1" if i == j else "0" for j in range(10)) for i in range(10)]
    _write(tmp_path / "F01_D10.txt", rows)
    problem = make_suite(10, problems=[1], transform_dir=tmp_path)[0]
    assert problem.optimum_value == 100.0
    assert problem.evaluate(np.full(10, -3.0)) == pytest.approx(100.0)


def test_hybrid_override_uses_file_bias(tmp_path):
    spec = TransformSpec(np.full(10, -20.0), np.eye(10), bias=-35.5)
    write_transform_data(spec, tmp_path / "F08_D10.txt")
    problem = make_suite(10, problems=[8], transform_dir=tmp_path)[0]
    assert problem.optimum_value == -35.5
    assert problem.evaluate(np.full(10, -20.0)) == pytest.approx(-35.5)


@pytest.mark.parametrize(
    "kwargs",
    [{"dimension": 3}, {"dimension": 10, "problems": [13]}, {"dimension": 10, "seed": -1}],
)
def test_invalid_suite_arguments(kwargs):
    with pytest.raises(ArgumentError):
        make_suite(**kwargs)


def test_unknown_suite_kind():
    with pytest.raises(ArgumentError):
        build_suite("cec2099", 10)
