import math

import numpy as np
import pytest

from treelike import (
    SimilaritySpace,
    best_alpha,
    build_tree,
    converse_check,
    gromov_delta_worst_case,
    gromov_product_matrix,
    hyp_exact,
    merge_tree_leaves,
    space_from_tree,
    split_atoms,
    tree_cost,
    validate_tree,
)
from treelike.errors import LeafMismatch, MapMismatch, SplitRequired
from treelike.fixtures import (
    random_fixture,
    tree_scaled_fixture,
    ultrametric_fixture,
)

EPS, M = 1e-12, 16
KAPPA = max(EPS ** (1 / 24), M ** -0.5)


def direct_cost(space, tree, alpha):
    prod = gromov_product_matrix(tree, space.points)
    total = 0.0
    for i in range(space.n):
        for j in range(space.n):
            total += (space.weights[i] * space.weights[j]
                      * abs(space.sim[i, j] - alpha * prod[i, j]))
    return total


class TestBuildTree:
    def test_zero_similarity_space(self):
        n = 18
        space = SimilaritySpace(tuple(f"p{i}" for i in range(n)),
                                np.full(n, 1.0 / n), np.zeros((n, n)), 1.0)
        report = build_tree(space, EPS, M, seed=0)
        validate_tree(report.tree)
        assert report.tree.depth() <= 2
        assert report.best_alpha == 0.0
        assert report.best_cost == 0.0
        assert report.cost == pytest.approx(
            direct_cost(space, report.tree, report.kappa), abs=1e-15)
        assert not report.sandwich_violations

    def test_planted_hierarchy_recovered(self):
        fx = ultrametric_fixture(27, [KAPPA, 2 * KAPPA, 3 * KAPPA], seed=7)
        report = build_tree(fx.space, EPS, M, seed=0)
        validate_tree(report.tree)
        assert report.best_cost <= report.kappa + report.delta0
        assert not report.sandwich_violations
        # the recovered level partitions equal the planted nested blocks
        planted = gromov_product_matrix(fx.tree, fx.space.points)
        built = gromov_product_matrix(report.tree, fx.space.points)
        off = ~np.eye(27, dtype=bool)
        assert np.array_equal(planted[off], built[off])

    def test_products_within_level_range(self):
        fx = tree_scaled_fixture(30, depth=2, alpha=KAPPA, seed=3)
        report = build_tree(fx.space, EPS, M, seed=0)
        prod = gromov_product_matrix(report.tree, fx.space.points)
        n_levels = report.ladder.n_levels
        assert prod.min() >= 0
        assert prod.max() <= n_levels + 1

    def test_levels_nest(self):
        fx = ultrametric_fixture(40, [KAPPA, 2 * KAPPA, 3 * KAPPA], seed=9)
        report = build_tree(fx.space, EPS, M, seed=0)
        for upper, lower in zip(report.levels, report.levels[1:]):
            for cluster in lower:
                members = set(cluster)
                assert any(members <= set(parent) for parent in upper)
        assert all(len(c) == 1 for c in report.levels[-1])

    def test_cost_bound_holds(self):
        for seed in range(3):
            fx = tree_scaled_fixture(24, depth=2, alpha=KAPPA, seed=seed)
            report = build_tree(fx.space, EPS, M, seed=seed)
            assert report.cost_bound_ok
            collision = float((fx.space.weights ** 2).sum())
            bound = (report.kappa + report.delta0
                     + (1.0 + report.kappa)
                     * (report.delta_e_total + collision))
            assert report.cost <= bound + 1e-9

    def test_theory_mode_requires_split(self):
        fx = ultrametric_fixture(12, [KAPPA, 2 * KAPPA], seed=1)
        with pytest.raises(SplitRequired):
            build_tree(fx.space, EPS, M, mode="theory")

    def test_determinism(self):
        fx = ultrametric_fixture(20, [KAPPA, 2 * KAPPA, 3 * KAPPA], seed=4)
        a = build_tree(fx.space, EPS, M, seed=3)
        b = build_tree(fx.space, EPS, M, seed=3)
        assert a.tree == b.tree
        assert a.cost == b.cost
        assert a.levels == b.levels


class TestTreeCost:
    def test_exact_tree_space_zero(self):
        fx = tree_scaled_fixture(14, depth=2, alpha=1.0, seed=5)
        space = space_from_tree(fx.tree, alpha=0.25)
        assert tree_cost(space, fx.tree, 0.25) == 0.0

    def test_alpha_zero_gives_mean_similarity(self):
        fx = tree_scaled_fixture(10, depth=2, alpha=0.3, seed=6)
        sp = fx.space
        expected = float(sp.weights @ sp.sim @ sp.weights)
        assert tree_cost(sp, fx.tree, 0.0) == pytest.approx(expected,
                                                            abs=1e-15)

    def test_matches_direct_sum(self):
        fx = random_fixture(9, seed=2, weights="random")
        base = tree_scaled_fixture(9, depth=2, alpha=0.2, seed=2)
        sp = SimilaritySpace(base.space.points, fx.space.weights,
                             fx.space.sim, 1.0)
        for alpha in (0.0, 0.17, 0.5):
            assert tree_cost(sp, base.tree, alpha) == pytest.approx(
                direct_cost(sp, base.tree, alpha), abs=1e-14)

    def test_convex_in_alpha(self):
        fx = random_fixture(10, seed=8)
        base = tree_scaled_fixture(10, depth=3, alpha=0.2, seed=8)
        sp = SimilaritySpace(base.space.points, fx.space.weights,
                             fx.space.sim, 1.0)
        grid = np.linspace(0.0, 1.0, 101)
        vals = [tree_cost(sp, base.tree, a) for a in grid]
        for k in range(1, 100):
            assert vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12

    def test_leaf_mismatch(self):
        fx = tree_scaled_fixture(8, depth=2, alpha=0.3, seed=1)
        other = random_fixture(9, seed=1)
        with pytest.raises(LeafMismatch):
            tree_cost(other.space, fx.tree, 0.1)


class TestBestAlpha:
    def test_exact_scaled_tree(self):
        fx = tree_scaled_fixture(16, depth=2, alpha=1.0, seed=12)
        space = space_from_tree(fx.tree, alpha=0.37)
        alpha, cost = best_alpha(space, fx.tree)
        assert alpha == pytest.approx(0.37, abs=1e-15)
        assert cost == 0.0

    def test_zero_similarity_gives_zero(self):
        n = 8
        base = tree_scaled_fixture(n, depth=2, alpha=0.3, seed=2)
        space = SimilaritySpace(base.space.points, base.space.weights,
                                np.zeros((n, n)), 1.0)
        alpha, cost = best_alpha(space, base.tree)
        assert alpha == 0.0
        assert cost == 0.0

    def test_beats_grid(self):
        for seed in range(5):
            fx = random_fixture(10, seed=seed, weights="random")
            base = tree_scaled_fixture(10, depth=3, alpha=0.2, seed=seed)
            sp = SimilaritySpace(base.space.points, fx.space.weights,
                                 fx.space.sim, 1.0)
            alpha, cost = best_alpha(sp, base.tree)
            grid = np.linspace(0.0, 2.0, 2001)
            grid_costs = [tree_cost(sp, base.tree, a) for a in grid]
            assert cost <= min(grid_costs) + 1e-12


class TestSplitAtoms:
    def test_arithmetic_example(self):
        space = SimilaritySpace(("a", "b"), np.array([0.9, 0.1]),
                                np.array([[1.0, 0.2], [0.2, 1.0]]), 1.0)
        split, mapping = split_atoms(space, 0.25)
        assert split.n == 5
        counts = {}
        for cp, orig in mapping.items():
            counts[orig] = counts.get(orig, 0) + 1
        assert counts == {"a": 4, "b": 1}
        assert split.weights.max() == pytest.approx(0.225, abs=1e-15)
        assert split.weights.max() < 0.25

    def test_identity_split(self):
        fx = random_fixture(6, seed=1)
        split, mapping = split_atoms(fx.space, 0.5)
        assert split.n == fx.space.n
        assert list(split.points) == list(fx.space.points)

    def test_similarity_inherited_including_diagonal(self):
        fx = random_fixture(5, seed=3)
        split, mapping = split_atoms(fx.space, 0.1)
        orig_index = {p: i for i, p in enumerate(fx.space.points)}
        for i, u in enumerate(split.points):
            for j, v in enumerate(split.points):
                oi, oj = orig_index[mapping[u]], orig_index[mapping[v]]
                assert split.sim[i, j] == fx.space.sim[oi, oj]

    def test_preserves_defects_exactly(self):
        for seed in range(5):
            fx = random_fixture(8, seed=seed, weights="dyadic")
            split, _ = split_atoms(fx.space, 0.07)
            assert hyp_exact(split) == hyp_exact(fx.space)
            assert gromov_delta_worst_case(split) == \
                gromov_delta_worst_case(fx.space)


class TestMergeLeaves:
    def test_identity_split_round_trip(self):
        fx = tree_scaled_fixture(10, depth=2, alpha=0.3, seed=4)
        _, mapping = split_atoms(fx.space, 1.0)  # every k(x) = 1
        merged = merge_tree_leaves(fx.tree, mapping, seed=0)
        assert merged == fx.tree

    def test_deterministic(self):
        fx = tree_scaled_fixture(8, depth=2, alpha=0.3, seed=4)
        split, mapping = split_atoms(fx.space, 0.05)
        report = build_tree(split, EPS, M, seed=0)
        a = merge_tree_leaves(report.tree, mapping, seed=11)
        b = merge_tree_leaves(report.tree, mapping, seed=11)
        assert a == b
        validate_tree(a)
        assert set(a.leaf_points.values()) == set(fx.space.points)

    def test_distances_to_root_unchanged(self):
        fx = tree_scaled_fixture(8, depth=2, alpha=0.3, seed=4)
        split, mapping = split_atoms(fx.space, 0.05)
        report = build_tree(split, EPS, M, seed=0)
        merged = merge_tree_leaves(report.tree, mapping, seed=5)
        for leaf, point in merged.leaf_points.items():
            assert merged.level[leaf] >= 1

    def test_map_mismatch(self):
        fx = tree_scaled_fixture(8, depth=2, alpha=0.3, seed=4)
        with pytest.raises(MapMismatch):
            merge_tree_leaves(fx.tree, {"nope": "p0"}, seed=0)

    def test_expected_cost_matches_split_cost(self):
        # Monte Carlo over representative choices against the exact
        # marginalized cost of the split space
        fx = tree_scaled_fixture(6, depth=2, alpha=KAPPA, seed=2)
        split, mapping = split_atoms(fx.space, 0.08)
        report = build_tree(split, EPS, M, seed=0)
        alpha = report.kappa
        prod = gromov_product_matrix(report.tree, split.points)
        sidx = {p: i for i, p in enumerate(split.points)}
        copies = {}
        for cp, orig in mapping.items():
            copies.setdefault(orig, []).append(cp)
        pts = fx.space.points
        oidx = {p: i for i, p in enumerate(pts)}
        exact = 0.0
        for x in pts:
            for y in pts:
                w = fx.space.weights[oidx[x]] * fx.space.weights[oidx[y]]
                if x == y:
                    terms = [
                        abs(fx.space.sim[oidx[x], oidx[x]]
                            - alpha * prod[sidx[c], sidx[c]])
                        for c in copies[x]
                    ]
                else:
                    terms = [
                        abs(fx.space.sim[oidx[x], oidx[y]]
                            - alpha * prod[sidx[cx], sidx[cy]])
                        for cx in copies[x] for cy in copies[y]
                    ]
                exact += w * sum(terms) / len(terms)
        draws = []
        for seed in range(200):
            merged = merge_tree_leaves(report.tree, mapping, seed=seed)
            draws.append(tree_cost(fx.space, merged, alpha))
        draws = np.array(draws)
        stderr = draws.std(ddof=1) / math.sqrt(len(draws))
        assert abs(draws.mean() - exact) <= 3.0 * stderr + 1e-12


class TestConverse:
    def test_exact_tree_tight_at_zero(self):
        fx = tree_scaled_fixture(12, depth=2, alpha=KAPPA, seed=3)
        space = space_from_tree(fx.tree, alpha=KAPPA)
        rescaled = SimilaritySpace(space.points, space.weights,
                                   space.sim / space.bound, 1.0)
        alpha, _ = best_alpha(rescaled, fx.tree)
        report = converse_check(rescaled, fx.tree, alpha)
        assert report.cost == 0.0
        assert report.hyp == 0.0
        assert report.passed

    def test_noisy_tree_positive_margin(self):
        from treelike.fixtures import noisy_tree_fixture
        fx = noisy_tree_fixture(20, depth=2, alpha=0.3, noise=0.01, seed=6)
        alpha, _ = best_alpha(fx.space, fx.tree)
        report = converse_check(fx.space, fx.tree, alpha)
        assert report.passed
        assert report.margin > 0

    def test_every_build_passes(self):
        for seed in range(3):
            fx = ultrametric_fixture(24, [KAPPA, 2 * KAPPA, 3 * KAPPA],
                                     seed=seed)
            report = build_tree(fx.space, EPS, M, seed=seed)
            out = converse_check(fx.space, report.tree, report.kappa)
            assert out.passed
