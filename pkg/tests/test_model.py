import numpy as np
import pytest

from rapidmaxnull import (
    DataMatrix,
    MaxNull,
    PermutationPlan,
    RunConfig,
    UsageError,
    permute_columns,
    relabel,
)


def _matrix(v=5, n1=2, n2=2, seed=0):
    g = np.random.default_rng(seed)
    return DataMatrix(g.standard_normal((v, n1 + n2)), n1, n2)


class TestDataMatrix:
    def test_basic_properties(self):
        x = _matrix(v=7, n1=3, n2=2)
        assert x.voxels == 7 and x.subjects == 5

    def test_rejects_small_groups(self):
        with pytest.raises(UsageError):
            _matrix(n1=1, n2=3)

    def test_rejects_group_size_mismatch(self):
        with pytest.raises(UsageError):
            DataMatrix(np.zeros((3, 5)), 2, 2)

    def test_rejects_nonfinite(self):
        vals = np.zeros((3, 4))
        vals[1, 2] = np.nan
        with pytest.raises(UsageError, match="voxel 1, subject 2"):
            DataMatrix(vals, 2, 2)

    def test_values_are_read_only(self):
        x = _matrix()
        with pytest.raises(ValueError):
            x.values[0, 0] = 1.0


class TestRelabel:
    def test_identity_shuffle_keeps_groups(self):
        x = _matrix(v=3, n1=2, n2=2)
        y = relabel(x, np.arange(4))
        assert np.array_equal(y.values, x.values)

    def test_forced_shuffle_moves_columns_into_pseudo_groups(self):
        # columns c1..c4; shuffle (3,4,1,2) makes pseudo-groups {c3,c4}, {c1,c2}
        vals = np.arange(12, dtype=float).reshape(3, 4)
        x = DataMatrix(vals, 2, 2)
        y = relabel(x, np.array([2, 3, 0, 1]))
        assert np.array_equal(y.values[:, :2], vals[:, [2, 3]])
        assert np.array_equal(y.values[:, 2:], vals[:, [0, 1]])

    def test_rejects_non_bijection(self):
        x = _matrix()
        with pytest.raises(UsageError):
            relabel(x, np.array([0, 0, 1, 2]))


class TestPermutationPlan:
    def test_index_zero_is_identity(self):
        plan = PermutationPlan(99, 10, 6)
        assert np.array_equal(plan.shuffle(0), np.arange(6))

    def test_same_seed_and_index_regenerate_identical_shuffle(self):
        a = PermutationPlan(7, 100, 12).shuffle(33)
        b = PermutationPlan(7, 500, 12).shuffle(33)
        assert np.array_equal(a, b)

    def test_out_of_range_index(self):
        plan = PermutationPlan(7, 10, 4)
        with pytest.raises(UsageError):
            plan.shuffle(10)
        with pytest.raises(UsageError):
            plan.shuffle(-1)

    def test_permute_columns_matches_relabel(self):
        x = _matrix(v=4, n1=3, n2=3, seed=5)
        plan = PermutationPlan(11, 20, 6)
        y = permute_columns(x, plan, 3)
        assert np.array_equal(y.values, relabel(x, plan.shuffle(3)).values)

    def test_permute_columns_checks_subject_count(self):
        x = _matrix(v=4, n1=2, n2=2)
        plan = PermutationPlan(11, 20, 6)
        with pytest.raises(UsageError):
            permute_columns(x, plan, 1)


class TestMaxNull:
    def test_sorted_view_is_sorted_copy(self):
        null = MaxNull(np.array([3.0, 1.0, 2.0]))
        assert np.array_equal(null.sorted_view, [1.0, 2.0, 3.0])
        assert np.array_equal(null.maxima, [3.0, 1.0, 2.0])
        assert len(null) == 3

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(UsageError):
            MaxNull(np.array([]))
        with pytest.raises(UsageError):
            MaxNull(np.array([1.0, np.inf]))


class TestRunConfig:
    def test_defaults_resolve_to_recommended_values(self):
        x = _matrix(v=500, n1=5, n2=5, seed=1)
        cfg = RunConfig(permutations=100, seed=0, engine="rapid").resolve(x)
        assert cfg.training_columns == 10
        assert cfg.rank == 10
        expected_eta = 2 * 10 * np.log(500) / 500
        assert cfg.sample_rate == pytest.approx(expected_eta)

    def test_rejects_bad_engine_and_counts(self):
        with pytest.raises(UsageError):
            RunConfig(permutations=10, seed=0, engine="warp")
        with pytest.raises(UsageError):
            RunConfig(permutations=0, seed=0)

    def test_rank_and_ell_bounds(self):
        x = _matrix(v=100, n1=3, n2=3)
        with pytest.raises(UsageError, match="rank"):
            RunConfig(permutations=50, seed=0, engine="rapid", rank=7).resolve(x)
        with pytest.raises(UsageError, match="identify rank"):
            RunConfig(permutations=50, seed=0, engine="rapid",
                      training_columns=4, rank=6).resolve(x)
        with pytest.raises(UsageError, match="exceed permutation count"):
            RunConfig(permutations=5, seed=0, engine="rapid",
                      training_columns=6).resolve(x)

    def test_sample_floor_must_cover_rank(self):
        x = _matrix(v=100, n1=3, n2=3)
        with pytest.raises(UsageError, match="underdetermined"):
            RunConfig(permutations=50, seed=0, engine="rapid",
                      sample_rate=0.01, rank=4).resolve(x)

    def test_eta_bounds(self):
        x = _matrix(v=100, n1=3, n2=3)
        with pytest.raises(UsageError):
            RunConfig(permutations=50, seed=0, sample_rate=1.5).resolve(x)
