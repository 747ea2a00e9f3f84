import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrsed.mr import (
    GridHierarchy, HybridFluxes, MRState, ThresholdStrategy, adaptive_rhs, add_safety_points,
    compression_rate, decode, empty_mask, encode, enforce_gradedness, full_mask, mask_dump_rows,
    midpoint_stencil, refresh_mask, retained_count, stencil_width, truncate,
)
from mrsed.scheme import Discretization

COMBOS = [(64, 3, 3), (256, 5, 3), (512, 5, 5)]


def max_detail(mr):
    return max(float(np.abs(d).max()) for d in mr.details)


class TestHierarchy:
    def test_sizes(self):
        h = GridHierarchy(256, 5)
        assert [h.size(k) for k in range(6)] == [256, 128, 64, 32, 16, 8]
        assert h.spacing(2) == pytest.approx(4 / 256)
        assert h.detail_positions(1)[0] == pytest.approx(1 / 256)
        assert np.allclose(h.points(5), np.linspace(0, 1, 9))

    def test_divisibility(self):
        with pytest.raises(ValueError):
            GridHierarchy(100, 5)

    def test_even_order_rejected(self):
        with pytest.raises(ValueError):
            stencil_width(4)

    def test_level_tolerance(self):
        s = ThresholdStrategy(1e-3)
        assert s.level_tolerance(5, 5) == 1e-3
        assert s.level_tolerance(1, 5) == pytest.approx(1e-3 / 16)


class TestTransform:
    @pytest.mark.parametrize("n0, L, r", COMBOS)
    def test_round_trip(self, n0, L, r):
        rng = np.random.default_rng(n0 + r)
        h = GridHierarchy(n0, L)
        for _ in range(100):
            u = rng.normal(size=n0 + 1) * rng.uniform(0.1, 10)
            v = decode(encode(u, h, r), h, r)
            assert np.max(np.abs(v - u)) <= 1e-14 * np.max(np.abs(u))

    def test_small_round_trip(self):
        h = GridHierarchy(16, 2)
        u = np.random.default_rng(0).uniform(0, 1, 17)
        assert np.max(np.abs(decode(encode(u, h), h) - u)) <= 1e-14

    @pytest.mark.parametrize("r", [1, 3, 5])
    def test_polynomial_annihilation(self, r):
        h = GridHierarchy(256, 5)
        x = h.points(0)
        rng = np.random.default_rng(r)
        for deg in range(r + 1):
            u = np.polyval(rng.normal(size=deg + 1), x)
            assert max_detail(encode(u, h, r)) <= 1e-12 * np.max(np.abs(u))

    def test_constant_details_exactly_zero(self):
        h = GridHierarchy(64, 3)
        for c in (0.3, 1 / 3, 7.77):
            assert max_detail(encode(np.full(65, c), h)) == 0.0

    def test_coarse_polynomial_reconstruction(self):
        h = GridHierarchy(128, 4)
        p = np.array([0.3, -1.0, 0.5, 0.2])
        mr = MRState(np.polyval(p, h.points(4)), [np.zeros(h.size(k)) for k in range(1, 5)])
        assert np.max(np.abs(decode(mr, h) - np.polyval(p, h.points(0)))) <= 1e-12

    def test_wrong_sizes(self):
        h = GridHierarchy(64, 3)
        with pytest.raises(ValueError):
            encode(np.zeros(64), h)
        with pytest.raises(ValueError):
            decode(encode(np.zeros(65), h), GridHierarchy(64, 2))


class TestThreshold:
    @pytest.fixture(scope="class")
    @staticmethod
    def smooth():
        h = GridHierarchy(256, 5)
        x = h.points(0)
        return h, 0.5 + 0.5 * np.tanh(20 * (x - 0.5))

    def test_zero_keeps_everything(self, smooth):
        h, u = smooth
        t = truncate(encode(u, h), ThresholdStrategy(0.0))
        assert retained_count(t.mask) == h.n0 - h.size(h.levels)
        assert np.array_equal(decode(t, h), decode(encode(u, h), h))

    def test_infinity_keeps_nothing(self, smooth):
        h, u = smooth
        mr = encode(u, h)
        t = truncate(mr, ThresholdStrategy(np.inf))
        assert retained_count(t.mask) == 0
        plain = MRState(mr.coarse, [np.zeros_like(d) for d in mr.details])
        assert np.array_equal(decode(t, h), decode(plain, h))

    def test_error_bounded_by_epsilon(self, smooth):
        h, u = smooth
        mr = encode(u, h)
        for eps in np.logspace(-6, -2, 9):
            err = np.max(np.abs(decode(truncate(mr, ThresholdStrategy(eps)), h) - u))
            assert err <= 10 * eps

    def test_step_details_cluster_at_jump(self):
        h, r = GridHierarchy(256, 5), 3
        x = h.points(0)
        jump = 0.5 + 0.3 / 256
        mr = truncate(encode((x > jump).astype(float), h, r), ThresholdStrategy(1e-3))
        for k in range(1, 6):
            j = np.nonzero(mr.mask[k - 1])[0]
            assert j.size > 0
            assert np.all(np.abs(j - jump / h.spacing(k)) <= r + 1)


class TestSafety:
    def test_empty(self):
        h = GridHierarchy(64, 3)
        out = add_safety_points(empty_mask(h))
        assert retained_count(out) == 0

    def test_single_detail_neighbourhood(self):
        h = GridHierarchy(64, 3)
        mask = empty_mask(h)
        mask[1][5] = True
        out = add_safety_points(mask)
        for k, j in [(2, 5), (2, 4), (2, 6), (1, 10), (1, 11)]:
            assert out[k - 1][j]

    def test_idempotent_grading(self):
        rng = np.random.default_rng(7)
        h = GridHierarchy(256, 5)
        mask = [rng.random(h.size(k)) < 0.05 for k in range(1, 6)]
        out = add_safety_points(mask)
        again = enforce_gradedness(out)
        assert all(np.array_equal(a, b) for a, b in zip(out, again))


def stencil_closed(mask, r):
    s = stencil_width(r)
    for k in range(1, len(mask)):
        idx, _ = midpoint_stencil(mask[k - 1].size + 1, s)
        for j in np.nonzero(mask[k - 1])[0]:
            odd = idx[j][idx[j] % 2 == 1]
            if not np.all(mask[k][(odd - 1) // 2]):
                return False
    return True


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([3, 5]), st.floats(0.0, 0.2))
def test_gradedness_property(seed, r, density):
    rng = np.random.default_rng(seed)
    h = GridHierarchy(128, 4)
    mask = [rng.random(h.size(k)) < density for k in range(1, 5)]
    out = add_safety_points(mask, r)
    assert stencil_closed(out, r)
    assert all(np.all(o[m]) for o, m in zip(out, mask))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(COMBOS))
def test_round_trip_property(seed, combo):
    n0, L, r = combo
    h = GridHierarchy(n0, L)
    u = np.random.default_rng(seed).uniform(-1, 1, n0 + 1)
    assert np.max(np.abs(decode(encode(u, h, r), h, r) - u)) <= 1e-14 * max(np.max(np.abs(u)), 1e-300)


class TestCompressionRate:
    def test_all_significant(self):
        h = GridHierarchy(256, 5)
        assert compression_rate(full_mask(h), h) == 1.0

    def test_none_significant(self):
        h = GridHierarchy(256, 5)
        assert compression_rate(empty_mask(h), h) == 257 / 9


class TestAdaptiveOperator:
    def test_full_mask_equals_reference(self, flocculated_problem):
        h = GridHierarchy(128, 5)
        d = Discretization(flocculated_problem, 128)
        u = d.apply_boundary(np.random.default_rng(1).uniform(0, 0.5, 129), 0.0)
        ref = d.spatial_operator(u, 0.0)
        assert np.max(np.abs(adaptive_rhs(u, full_mask(h), d, h, 0.0) - ref)) <= 1e-14 * np.max(np.abs(ref))

    def test_smooth_state_close_to_reference(self, flocculated_problem):
        h = GridHierarchy(256, 5)
        d = Discretization(flocculated_problem, 256)
        x = d.x
        u = d.apply_boundary(0.15 + 0.1 * np.exp(-((x - 0.3) / 0.15) ** 2), 0.0)
        eps = 1e-3
        _, _, mask = refresh_mask(u, h, ThresholdStrategy(eps))
        ref = d.spatial_operator(u, 0.0)
        diff = np.max(np.abs(adaptive_rhs(u, mask, d, h, 0.0) - ref))
        assert diff <= 10 * eps * (np.max(np.abs(ref)) + 1)

    def test_step_profile_saves_evaluations(self, ideal_problem):
        h = GridHierarchy(256, 5)
        d = Discretization(ideal_problem, 256)
        u = d.apply_boundary(np.where(d.x < 0.6, 0.2, 0.0), 0.0)
        _, sig, mask = refresh_mask(u, h, ThresholdStrategy(1e-4))
        hyb = HybridFluxes(d, h)
        hyb.rhs(u, 0.0, mask)
        assert hyb.exact_count < 256
        assert hyb.exact_count <= retained_count(mask) + h.size(5) + 1 + h.levels

    def test_hybrid_needs_matching_grid(self, ideal_problem):
        with pytest.raises(ValueError):
            HybridFluxes(Discretization(ideal_problem, 128), GridHierarchy(256, 5))

    def test_hybrid_is_conservative(self, ideal_problem):
        h = GridHierarchy(256, 5)
        d = Discretization(ideal_problem, 256)
        u = d.apply_boundary(np.where(d.x < 0.6, 0.2, 0.0), 0.0)
        _, _, mask = refresh_mask(u, h, ThresholdStrategy(1e-2))
        rhs = adaptive_rhs(u, mask, d, h, 0.0)
        assert abs(d.mass(rhs)) <= 1e-15


def test_mask_dump_rows():
    h = GridHierarchy(64, 3)
    u = (h.points(0) > 0.5).astype(float)
    mr, sig, mask = refresh_mask(u, h, ThresholdStrategy(1e-3))
    rows = mask_dump_rows(mr, mask, h)
    assert len(rows) == retained_count(mask)
    assert [r[0] for r in rows] == sorted((r[0] for r in rows), reverse=True)
    for level, j, x, d in rows:
        assert x == pytest.approx(h.detail_positions(level)[j])
        assert d == mr.details[level - 1][j]
