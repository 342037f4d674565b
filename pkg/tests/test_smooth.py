import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copgamlss.exceptions import DegenerateInputError, DomainError
from copgamlss.smooth import (
    Adjacency,
    Term,
    assemble,
    build_linear_block,
    build_mrf_block,
    build_random_effect_block,
    build_spline_block,
)
from copgamlss.smooth import _curvature_penalty, _spline_raw


@pytest.fixture
def x():
    return np.random.default_rng(0).uniform(0, 1, 300)


def penalized_ls(Z, D, y, lam):
    X = np.column_stack([np.ones(len(y)), Z])
    S = np.zeros((X.shape[1], X.shape[1]))
    S[1:, 1:] = lam * D
    return X @ np.linalg.solve(X.T @ X + S, X.T @ y)


class TestLinear:
    def test_binary_column(self):
        b = build_linear_block(np.array([0.0, 1.0, 1.0, 0.0]), "x3")
        assert np.array_equal(b.Z[:, 0], [0, 1, 1, 0])
        assert b.D is None

    def test_factor_reference_coding(self):
        b = build_linear_block(np.array(["b", "a", "c", "a"]), "g")
        assert b.Z.shape == (4, 2)
        assert np.array_equal(b.Z, [[1, 0], [0, 0], [0, 1], [0, 0]])

    def test_collinear_warning(self):
        b = build_linear_block(np.full(5, 2.0), "c")
        assert b.warnings

    def test_single_level_factor(self):
        with pytest.raises(DegenerateInputError):
            build_linear_block(np.array(["a", "a"]), "g")

    def test_rebuild_unseen_level(self):
        b = build_linear_block(np.array(["a", "b"]), "g")
        with pytest.raises(DomainError, match="unseen"):
            b.matrix(np.array(["c"]))


class TestRandom:
    def test_indicators(self):
        b = build_random_effect_block(np.array(["a", "b", "a", "b"]), "g")
        assert np.array_equal(b.Z, [[1, 0], [0, 1], [1, 0], [0, 1]])
        assert np.array_equal(b.D, np.eye(2))

    def test_single_level(self):
        with pytest.raises(DegenerateInputError):
            build_random_effect_block(np.array(["a", "a", "a"]), "g")

    def test_infinite_penalty_shrinks_to_zero(self):
        rng = np.random.default_rng(2)
        g = np.repeat(np.array(list("abcde")), 20)
        y = rng.normal(size=100) + np.repeat(rng.normal(size=5) * 3, 20)
        b = build_random_effect_block(g, "g")
        fit = penalized_ls(b.Z, b.D, y, 1e12)
        assert np.allclose(fit, y.mean(), atol=1e-8)


class TestSpline:
    def test_centered_columns(self, x):
        b = build_spline_block(x, 10, "x")
        assert b.Z.shape == (300, 9)
        assert np.allclose(b.Z.mean(axis=0), 0.0, atol=1e-12)

    def test_line_in_null_space(self, x):
        knots = build_spline_block(x, 12, "x").state["knots"]
        B = _spline_raw(knots, x)
        S = _curvature_penalty(knots)
        beta, *_ = np.linalg.lstsq(B, 2.0 - 3.0 * x, rcond=None)
        assert np.allclose(B @ beta, 2.0 - 3.0 * x, atol=1e-10)
        assert abs(beta @ S @ beta) < 1e-10

    def test_centered_penalty_null_space_is_the_line(self, x):
        b = build_spline_block(x, 10, "x")
        w = np.linalg.eigvalsh(b.D)
        assert np.sum(w < 1e-9 * w.max()) == 1
        beta, *_ = np.linalg.lstsq(b.Z, x - x.mean(), rcond=None)
        assert np.allclose(b.Z @ beta, x - x.mean(), atol=1e-10)
        assert abs(beta @ b.D @ beta) < 1e-10

    def test_penalty_is_integrated_curvature(self):
        # for f(x) = x^3 on [0, 1] the integral of f''^2 is 12
        x = np.linspace(0, 1, 200)
        knots = build_spline_block(x, 8, "x").state["knots"]
        B = _spline_raw(knots, x)
        beta, *_ = np.linalg.lstsq(B, x**3, rcond=None)
        assert beta @ _curvature_penalty(knots) @ beta == pytest.approx(12.0, rel=1e-8)

    def test_infinite_penalty_gives_a_line(self, x):
        rng = np.random.default_rng(1)
        y = np.sin(6 * x) + rng.normal(scale=0.3, size=x.size)
        b = build_spline_block(x, 10, "x")
        fit = penalized_ls(b.Z, b.D, y, 1e10)
        grid = np.linspace(0.05, 0.95, 50)
        beta = np.linalg.lstsq(np.column_stack([np.ones(x.size), b.Z]), fit, rcond=None)[0]
        curve = np.column_stack([np.ones(grid.size), b.matrix(grid)]) @ beta
        assert np.max(np.abs(np.diff(curve, 2))) < 1e-6

    def test_linear_extrapolation(self, x):
        b = build_spline_block(x, 10, "x")
        outside = np.array([1.2, 1.4, 1.6, 1.8])
        Zo = b.matrix(outside)
        assert np.allclose(np.diff(Zo, 2, axis=0), 0.0, atol=1e-12)
        # value and slope are continuous at the boundary
        h = 1e-7
        hi = x.max()
        left, right = b.matrix(np.array([hi - h])), b.matrix(np.array([hi + h]))
        assert np.allclose(left, right, atol=1e-5)

    def test_rebuild_matches(self, x):
        b = build_spline_block(x, 10, "x")
        assert np.allclose(b.matrix(x), b.Z)

    def test_too_few_values(self):
        with pytest.raises(DegenerateInputError):
            build_spline_block(np.repeat(np.arange(5.0), 10), 10, "x")

    def test_small_k(self, x):
        with pytest.raises(DomainError):
            build_spline_block(x, 3, "x")

    def test_quantile_knots(self):
        x = np.random.default_rng(4).exponential(size=2000)
        knots = build_spline_block(x, 10, "x").state["knots"]
        interior = knots[4:-4]
        frac = [np.mean(x <= t) for t in interior]
        assert np.allclose(frac, np.linspace(0, 1, 8)[1:-1], atol=0.01)


class TestMRF:
    def test_pair_laplacian(self):
        adj = Adjacency.from_edges([("a", "b")])
        assert np.array_equal(adj.laplacian(), [[1, -1], [-1, 1]])

    def test_isolated_region(self):
        adj = Adjacency.from_edges([("a", "b"), ("b", "c")], regions=["d"])
        L = adj.laplacian()
        assert np.array_equal(L[adj.regions.index("d")], np.zeros(4))
        assert np.array_equal(adj.counts, [1, 2, 1, 0])

    def test_unknown_label(self):
        adj = Adjacency.from_edges([("a", "b")])
        with pytest.raises(DomainError, match="not in the adjacency"):
            build_mrf_block(np.array(["a", "z"]), adj, "r")

    def test_asymmetric(self):
        with pytest.raises(DomainError, match="symmetric"):
            Adjacency({"a": {"b"}, "b": set()})

    def test_block(self):
        adj = Adjacency.from_edges([("a", "b"), ("b", "c"), ("c", "d")])
        regions = np.array(list("aabbbcdd"))
        b = build_mrf_block(regions, adj, "r")
        assert b.Z.shape == (8, 3)
        assert np.allclose(b.Z.sum(axis=0), 0.0, atol=1e-12)
        w = np.linalg.eigvalsh(b.D)
        assert np.all(w > -1e-12)

    def test_read(self, tmp_path):
        p = tmp_path / "adj.txt"
        p.write_text("# regions\na,b\nb,c\nd\n")
        adj = Adjacency.read(p)
        assert adj.regions == ["a", "b", "c", "d"]
        assert adj.edges() == [("a", "b"), ("b", "c")]

    def test_read_malformed(self, tmp_path):
        p = tmp_path / "adj.txt"
        p.write_text("a,b,c\n")
        with pytest.raises(DomainError, match=":1:"):
            Adjacency.read(p)


class TestAssemble:
    def test_intercept_only(self):
        d = assemble([], {"x": np.zeros(7)})
        assert d.Z.shape == (7, 1) and np.all(d.Z == 1)
        assert d.penalties == []

    def test_layout(self, x):
        data = {"x": x, "g": np.where(x > 0.5, "hi", "lo")}
        d = assemble([Term("linear", "g"), Term("spline", "x", 8)], data)
        assert d.n_coef == 1 + 1 + 7
        assert d.slices[1] == slice(2, 9)
        S = d.penalty_matrix([2.0])
        assert np.allclose(S[2:, 2:], 2.0 * d.blocks[1].D)
        assert np.all(S[:2] == 0)
        assert np.allclose(d.matrix(data), d.Z)

    def test_missing_column(self):
        with pytest.raises(DomainError, match="missing column"):
            assemble([Term("linear", "z")], {"x": np.zeros(3)})

    def test_mrf_needs_adjacency(self):
        with pytest.raises(DomainError, match="adjacency"):
            assemble([Term("mrf", "r")], {"r": np.array(["a", "b"])})

    def test_bad_kind(self):
        with pytest.raises(DomainError):
            Term("wiggly", "x")

    def test_term_text(self):
        assert str(Term("spline", "x2", 10)) == "spline(x2, 10)"


@settings(max_examples=30, deadline=None)
@given(k=st.integers(5, 20), seed=st.integers(0, 1000))
def test_spline_penalty_psd(k, seed):
    x = np.random.default_rng(seed).uniform(-3, 3, 100)
    b = build_spline_block(x, k, "x")
    assert b.Z.shape[1] == k - 1
    assert np.allclose(b.D, b.D.T)
    assert np.linalg.eigvalsh(b.D).min() > -1e-9 * np.abs(b.D).max()
