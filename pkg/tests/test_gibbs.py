import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gibbslines.bridge_analytics import sample_bridge_minima
from gibbslines.bridge_sampler import bridge_batch, sample_free_ensemble
from gibbslines.core import (
    MINUS_INF,
    PLUS_INF,
    BoundaryData,
    Curve,
    ExpHamiltonian,
    Grid,
    LineEnsemble,
    OrderedHamiltonian,
    ScaledExpHamiltonian,
    constant_curve,
)
from gibbslines.errors import (
    InvalidInterval,
    LengthMismatch,
    OrderViolationInput,
    RejectionBudgetExhausted,
)
from gibbslines.gibbs import (
    ConditionalSpec,
    coupled_scan_batch,
    estimate_Z,
    first_hitting_domain,
    heat_bath_scan_batch,
    heat_bath_sweep,
    log_boltzmann_weight,
    mcmc_sweep,
    monotone_coupled_sweep,
    run_block_sweeps,
    sample_conditional,
)


def _single_curve_spec(h, lower, x=0.0, y=0.0, interval=(0.0, 1.0)):
    bd = BoundaryData(
        x_vec=np.array([x]), y_vec=np.array([y]), upper=PLUS_INF, lower=lower
    )
    return ConditionalSpec(k1=1, k2=1, interval=interval, boundary=bd, hamiltonian=h)


class TestConditionalSpec:
    def test_boundary_size_must_match_block(self):
        bd = BoundaryData(np.zeros(2), np.zeros(2), PLUS_INF, MINUS_INF)
        with pytest.raises(LengthMismatch):
            ConditionalSpec(k1=1, k2=1, interval=(0, 1), boundary=bd, hamiltonian=ExpHamiltonian())

    def test_degenerate_interval(self):
        bd = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, MINUS_INF)
        with pytest.raises(InvalidInterval):
            ConditionalSpec(k1=1, k2=1, interval=(1, 1), boundary=bd, hamiltonian=ExpHamiltonian())

    def test_window_must_sit_inside(self):
        bd = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, MINUS_INF)
        with pytest.raises(InvalidInterval):
            ConditionalSpec(
                k1=1, k2=1, interval=(0, 1), boundary=bd,
                hamiltonian=ExpHamiltonian(), window=(0.0, 0.5),
            )


class TestLogWeight:
    def test_no_interaction_when_boundaries_infinite(self):
        grid = Grid(0.0, 1.0, 17)
        ens = LineEnsemble(grid, np.random.default_rng(0).normal(size=(1, 17)))
        bd = BoundaryData(np.array([ens.curves[0, 0]]), np.array([ens.curves[0, -1]]),
                          PLUS_INF, MINUS_INF)
        spec = ConditionalSpec(k1=1, k2=1, interval=(0, 1), boundary=bd,
                               hamiltonian=ExpHamiltonian())
        assert log_boltzmann_weight(ens, spec) == 0.0

    def test_constant_gap_closed_form(self):
        # single flat curve over a flat floor c below: integrand is the
        # constant e^(-t^(1/3) c), so the weight is exp(-(b-a) e^(-t^(1/3) c))
        t, c = 8.0, 1.0
        grid = Grid(0.0, 1.0, 129)
        ens = LineEnsemble(grid, np.zeros((1, 129)))
        bd = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, constant_curve(grid, -c))
        spec = ConditionalSpec(k1=1, k2=1, interval=(0, 1), boundary=bd,
                               hamiltonian=ScaledExpHamiltonian(t))
        expected = -math.exp(-t ** (1.0 / 3.0) * c)
        assert log_boltzmann_weight(ens, spec) == pytest.approx(expected, rel=1e-12)

    def test_ordered_indicator_values(self):
        grid = Grid(0.0, 1.0, 9)
        ordered = LineEnsemble(grid, np.vstack([np.ones(9), -np.ones(9)]))
        crossing = LineEnsemble(grid, np.vstack([-np.ones(9), np.ones(9)]))
        bd = BoundaryData(np.array([1.0, -1.0]), np.array([1.0, -1.0]), PLUS_INF, MINUS_INF)
        spec = ConditionalSpec(k1=1, k2=2, interval=(0, 1), boundary=bd,
                               hamiltonian=OrderedHamiltonian())
        assert log_boltzmann_weight(ordered, spec) == 0.0
        assert log_boltzmann_weight(crossing, spec) == -math.inf

    def test_weight_never_positive(self):
        rng = np.random.default_rng(1)
        grid = Grid(0.0, 2.0, 9)
        bd = BoundaryData(np.array([0.5, -0.5]), np.array([0.5, -0.5]), PLUS_INF, MINUS_INF)
        spec = ConditionalSpec(k1=1, k2=2, interval=(0, 2), boundary=bd,
                               hamiltonian=ExpHamiltonian())
        for _ in range(25):
            ens = LineEnsemble(grid, rng.normal(size=(2, 9)))
            assert log_boltzmann_weight(ens, spec) <= 0.0

    def test_off_window_weight_dominates_full(self):
        rng = np.random.default_rng(2)
        grid = Grid(0.0, 1.0, 33)
        bd = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, constant_curve(grid, -0.2))
        full = ConditionalSpec(k1=1, k2=1, interval=(0, 1), boundary=bd,
                               hamiltonian=ExpHamiltonian())
        gapped = ConditionalSpec(k1=1, k2=1, interval=(0, 1), boundary=bd,
                                 hamiltonian=ExpHamiltonian(), window=(0.25, 0.75))
        for _ in range(20):
            ens = LineEnsemble(grid, rng.normal(size=(1, 33)))
            assert log_boltzmann_weight(ens, gapped) >= log_boltzmann_weight(ens, full)

    def test_curve_count_mismatch(self):
        grid = Grid(0.0, 1.0, 5)
        ens = LineEnsemble(grid, np.zeros((2, 5)))
        spec = _single_curve_spec(ExpHamiltonian(), MINUS_INF)
        with pytest.raises(LengthMismatch):
            log_boltzmann_weight(ens, spec)


WALL_Z = 1.0 - math.exp(-2.0)  # P(bridge from 0 to 0 on [0,1] stays above -1)


class TestEstimateZ:
    def test_free_spec_has_unit_weight(self):
        spec = _single_curve_spec(ExpHamiltonian(), MINUS_INF)
        est = estimate_Z(spec, Grid(0.0, 1.0, 17), n=200, seed=0)
        assert est.mean == 1.0
        assert est.stderr == 0.0

    def test_hard_wall_closed_form(self):
        grid = Grid(0.0, 1.0, 33)
        spec = _single_curve_spec(OrderedHamiltonian(), constant_curve(grid, -1.0))
        est = estimate_Z(spec, grid, n=20000, seed=3)
        assert abs(est.mean - WALL_Z) < 4 * est.stderr

    def test_raising_the_floor_lowers_z(self):
        grid = Grid(0.0, 1.0, 33)
        lo = _single_curve_spec(OrderedHamiltonian(), constant_curve(grid, -1.0))
        hi = _single_curve_spec(OrderedHamiltonian(), constant_curve(grid, -0.5))
        z_lo = estimate_Z(lo, grid, n=2000, seed=7)
        z_hi = estimate_Z(hi, grid, n=2000, seed=7)
        assert z_hi.mean < z_lo.mean

    def test_z_at_most_one(self):
        grid = Grid(0.0, 1.0, 17)
        spec = _single_curve_spec(ExpHamiltonian(), constant_curve(grid, -0.5))
        est = estimate_Z(spec, grid, n=3000, seed=9)
        assert 0.0 < est.mean <= 1.0


class TestSampleConditional:
    def test_free_spec_accepts_first_attempt(self):
        spec = _single_curve_spec(ExpHamiltonian(), MINUS_INF)
        ens, attempts = sample_conditional(spec, Grid(0.0, 1.0, 17), np.random.default_rng(0))
        assert attempts == 1
        assert ens.curves[0, 0] == 0.0 and ens.curves[0, -1] == 0.0

    def test_wall_samples_stay_above_and_match_truncated_law(self):
        grid = Grid(0.0, 1.0, 33)
        spec = _single_curve_spec(OrderedHamiltonian(), constant_curve(grid, -1.0))
        rng = np.random.default_rng(5)
        rows = np.empty((800, 33))
        for s in range(800):
            ens, _ = sample_conditional(spec, grid, rng)
            rows[s] = ens.curves[0]
        assert rows.min() > -1.0
        minima = sample_bridge_minima(rows, grid.spacing, rng, barrier=-1.0)

        def trunc_cdf(m):
            m = np.clip(m, -1.0, 0.0)
            return 1.0 - (1.0 - np.exp(-2.0 * m * m)) / WALL_Z

        res = stats.kstest(minima, trunc_cdf)
        assert res.pvalue > 1e-3

    def test_attempts_match_inverse_z(self):
        grid = Grid(0.0, 1.0, 33)
        spec = _single_curve_spec(OrderedHamiltonian(), constant_curve(grid, -1.0))
        rng = np.random.default_rng(6)
        attempts = np.array([sample_conditional(spec, grid, rng)[1] for _ in range(300)])
        # attempts are geometric with mean 1/Z, variance (1-Z)/Z^2
        se = math.sqrt((1.0 - WALL_Z) / WALL_Z**2 / 300)
        assert abs(attempts.mean() - 1.0 / WALL_Z) < 4 * se

    def test_budget_exhaustion(self):
        grid = Grid(0.0, 1.0, 9)
        # entrance and exit pinned below the floor: weight is identically zero
        spec = _single_curve_spec(
            OrderedHamiltonian(), constant_curve(grid, 0.0), x=-1.0, y=-1.0
        )
        with pytest.raises(RejectionBudgetExhausted) as exc:
            sample_conditional(spec, grid, np.random.default_rng(7), budget=64)
        assert exc.value.attempts == 64


class TestMcmcSweep:
    def test_full_block_equals_direct_conditional(self):
        grid = Grid(0.0, 1.0, 17)
        floor = constant_curve(grid, -1.0)
        state = LineEnsemble(grid, np.zeros((1, 17)))
        outer = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, floor)
        swept = mcmc_sweep(state, outer, OrderedHamiltonian(),
                           np.random.default_rng(42), block=(1, 1, 0.0, 1.0))
        spec = _single_curve_spec(OrderedHamiltonian(), floor)
        direct, _ = sample_conditional(spec, grid, np.random.default_rng(42))
        assert np.array_equal(swept.curves[0], direct.curves[0])

    def test_partial_block_touches_only_its_columns(self):
        grid = Grid(0.0, 1.0, 17)
        vals = np.vstack([np.full(17, 2.0), np.full(17, -2.0)])
        state = LineEnsemble(grid, vals)
        outer = BoundaryData(np.array([2.0, -2.0]), np.array([2.0, -2.0]),
                             PLUS_INF, MINUS_INF)
        swept = mcmc_sweep(state, outer, OrderedHamiltonian(),
                           np.random.default_rng(3), block=(1, 2, 0.0, 0.5))
        ia, ib = grid.index_of(0.0), grid.index_of(0.5)
        assert np.array_equal(swept.curves[:, ib:], vals[:, ib:])
        assert np.array_equal(swept.curves[:, ia], vals[:, ia])
        assert not np.array_equal(swept.curves[:, ia + 1 : ib], vals[:, ia + 1 : ib])

    def test_order_preserved_by_sweeps(self):
        grid = Grid(0.0, 1.0, 17)
        vals = np.vstack([np.full(17, 1.0), np.full(17, -1.0)])
        state = LineEnsemble(grid, vals)
        outer = BoundaryData(np.array([1.0, -1.0]), np.array([1.0, -1.0]),
                             PLUS_INF, MINUS_INF)
        blocks = [(1, 1, 0.0, 1.0), (2, 2, 0.0, 1.0), (1, 2, 0.0, 0.5)]
        out = run_block_sweeps(state, outer, OrderedHamiltonian(),
                               np.random.default_rng(8), blocks, n_sweeps=3)
        assert np.all(out.curves[0] > out.curves[1])

    def test_bad_block_range(self):
        grid = Grid(0.0, 1.0, 9)
        state = LineEnsemble(grid, np.zeros((1, 9)))
        outer = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, MINUS_INF)
        with pytest.raises(LengthMismatch):
            mcmc_sweep(state, outer, ExpHamiltonian(), np.random.default_rng(0),
                       block=(1, 2, 0.0, 1.0))


class TestSoftToHardLimit:
    def test_large_t_matches_hard_wall_law(self):
        # with a comfortable gap to the floor the steep soft wall and the hard
        # wall give the same conditional distribution; at rate 10 the soft
        # wall only becomes indistinguishable once sub-floor excursions are
        # already rare (here P ~ e^-4.5), so the gap is set accordingly
        grid = Grid(0.0, 1.0, 17)
        floor = constant_curve(grid, -1.5)
        soft = _single_curve_spec(ScaledExpHamiltonian(1000.0), floor)
        hard = _single_curve_spec(OrderedHamiltonian(), floor)
        rng = np.random.default_rng(11)
        mid = grid.index_of(0.5)
        soft_mid = np.array(
            [sample_conditional(soft, grid, rng)[0].curves[0, mid] for _ in range(1200)]
        )
        hard_mid = np.array(
            [sample_conditional(hard, grid, rng)[0].curves[0, mid] for _ in range(1200)]
        )
        res = stats.ks_2samp(soft_mid, hard_mid)
        assert res.pvalue > 1e-3


def _scan_oracle(pts, vals, level, il0, il1, ir0, ir1):
    left_hits = [j for j in range(il0, il1 + 1) if vals[j] >= level]
    if not left_hits:
        left, hit_left = pts[il0], False
    else:
        left, hit_left = pts[max(left_hits[0] - 1, il0)], True
    right_hits = [j for j in range(ir0, ir1 + 1) if vals[j] >= level]
    if not right_hits:
        right, hit_right = pts[ir1], False
    else:
        right, hit_right = pts[min(right_hits[-1] + 1, ir1)], True
    return left, right, hit_left, hit_right


class TestFirstHittingDomain:
    def test_never_hits_gives_outer_sentinels(self):
        grid = Grid(0.0, 8.0, 33)
        c = constant_curve(grid, 0.0)
        dom = first_hitting_domain(c, 1.0, (0.5, 3.0), (5.0, 7.5))
        assert (dom.left, dom.right) == (0.5, 7.5)
        assert not dom.hit_left and not dom.hit_right

    def test_immediate_hit_pins_to_scan_start(self):
        grid = Grid(0.0, 8.0, 33)
        c = constant_curve(grid, 2.0)
        dom = first_hitting_domain(c, 1.0, (0.5, 3.0), (5.0, 7.5))
        assert (dom.left, dom.right) == (0.5, 7.5)
        assert dom.hit_left and dom.hit_right

    def test_single_crossing_brackets(self):
        grid = Grid(0.0, 8.0, 33)
        vals = np.zeros(33)
        vals[8:25] = 1.5  # rises through 1.0 between index 7 and 8, falls after 24
        dom = first_hitting_domain(Curve(grid, vals), 1.0, (0.5, 3.0), (5.0, 7.5))
        assert dom.left == grid.points[7]
        assert dom.right == grid.points[25]
        assert dom.hit_left and dom.hit_right

    def test_matches_scan_oracle_on_handbuilt_path(self):
        grid = Grid(0.0, 8.0, 33)
        rng = np.random.default_rng(13)
        vals = np.cumsum(rng.normal(scale=0.6, size=33))
        c = Curve(grid, vals)
        for level in (-1.0, 0.0, 0.7, 2.0):
            dom = first_hitting_domain(c, level, (0.25, 3.0), (4.0, 7.75))
            want = _scan_oracle(grid.points, vals, level, 1, 12, 16, 31)
            assert (dom.left, dom.right, dom.hit_left, dom.hit_right) == want

    @settings(deadline=None, max_examples=60)
    @given(
        vals=st.lists(st.floats(-2, 2), min_size=17, max_size=17),
        level=st.floats(-2, 2),
        cuts=st.tuples(
            st.integers(0, 16), st.integers(0, 16), st.integers(0, 16), st.integers(0, 16)
        ),
    )
    def test_matches_scan_oracle_everywhere(self, vals, level, cuts):
        il0, il1, ir0, ir1 = sorted(cuts)
        if not (il0 < il1 <= ir0 < ir1):
            return
        grid = Grid(0.0, 4.0, 17)
        arr = np.array(vals)
        c = Curve(grid, arr)
        pts = grid.points
        dom = first_hitting_domain(
            c, level, (pts[il0], pts[il1]), (pts[ir0], pts[ir1])
        )
        want = _scan_oracle(pts, arr, level, il0, il1, ir0, ir1)
        assert (dom.left, dom.right, dom.hit_left, dom.hit_right) == want

    def test_rejects_misordered_windows(self):
        grid = Grid(0.0, 8.0, 33)
        c = constant_curve(grid, 0.0)
        with pytest.raises(InvalidInterval):
            first_hitting_domain(c, 1.0, (0.5, 4.0), (3.0, 7.5))


class TestHeatBath:
    def test_single_interior_site_matches_rejection_sampler(self):
        # on a 3-point grid the one-site conditional is the full conditional,
        # so one heat-bath refresh must agree with candidate/accept draws
        grid = Grid(0.0, 1.0, 3)
        floor = constant_curve(grid, -0.3)
        h = ScaledExpHamiltonian(8.0)
        outer = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, floor)
        rng = np.random.default_rng(17)
        n = 3000
        start = np.zeros((n, 1, 3))
        u = rng.random((n, 1, 1))
        bath_mid = heat_bath_scan_batch(start, grid, outer, h, u)[:, 0, 1]
        spec = _single_curve_spec(h, floor)
        rej_mid = np.array(
            [sample_conditional(spec, grid, rng)[0].curves[0, 1] for _ in range(n)]
        )
        res = stats.ks_2samp(bath_mid, rej_mid)
        assert res.pvalue > 1e-3

    def test_sweep_pins_endpoints(self):
        grid = Grid(0.0, 1.0, 9)
        vals = np.zeros((1, 9))
        vals[0, 0], vals[0, -1] = 0.7, -0.2
        state = LineEnsemble(grid, vals)
        outer = BoundaryData(np.array([0.7]), np.array([-0.2]), PLUS_INF, MINUS_INF)
        out = heat_bath_sweep(state, outer, ExpHamiltonian(), np.random.default_rng(19))
        assert out.curves[0, 0] == 0.7 and out.curves[0, -1] == -0.2
        assert not np.array_equal(out.curves[0, 1:-1], vals[0, 1:-1])

    def test_hard_wall_respected(self):
        grid = Grid(0.0, 1.0, 17)
        floor = constant_curve(grid, -0.2)
        state = LineEnsemble(grid, np.zeros((1, 17)))
        outer = BoundaryData(np.zeros(1), np.zeros(1), PLUS_INF, floor)
        rng = np.random.default_rng(23)
        for _ in range(5):
            state = heat_bath_sweep(state, outer, OrderedHamiltonian(), rng)
            assert np.all(state.curves[0] >= -0.2)


class TestMonotoneCoupling:
    @staticmethod
    def _pair(shift):
        grid = Grid(0.0, 1.0, 17)
        lo_vals = np.vstack([np.full(17, 0.5), np.full(17, -0.5)])
        hi_vals = lo_vals + shift
        lo = LineEnsemble(grid, lo_vals)
        hi = LineEnsemble(grid, hi_vals)
        outer_lo = BoundaryData(lo_vals[:, 0], lo_vals[:, -1], PLUS_INF, MINUS_INF)
        outer_hi = BoundaryData(hi_vals[:, 0], hi_vals[:, -1], PLUS_INF, MINUS_INF)
        return grid, lo, hi, outer_lo, outer_hi

    def test_identical_inputs_stay_identical(self):
        grid, lo, hi, outer_lo, outer_hi = self._pair(0.0)
        new_lo, new_hi = monotone_coupled_sweep(
            lo, hi, outer_lo, outer_lo, ExpHamiltonian(), np.random.default_rng(29)
        )
        assert np.array_equal(new_lo.curves, new_hi.curves)

    def test_coupled_pair_reduces_to_plain_kernel(self):
        grid, lo, _, outer_lo, _ = self._pair(0.0)
        u = np.random.default_rng(31).random((1, 2, 15))
        plain = heat_bath_scan_batch(lo.curves[None], grid, outer_lo, ExpHamiltonian(), u)
        c_lo, c_hi = coupled_scan_batch(
            lo.curves[None], lo.curves[None], grid, outer_lo, outer_lo,
            ExpHamiltonian(), u,
        )
        assert np.array_equal(c_lo, plain)
        assert np.array_equal(c_hi, plain)

    def test_order_holds_across_sweeps(self):
        grid, lo, hi, outer_lo, outer_hi = self._pair(1.0)
        rng = np.random.default_rng(37)
        for _ in range(20):
            lo, hi = monotone_coupled_sweep(
                lo, hi, outer_lo, outer_hi, ExpHamiltonian(), rng
            )
            assert np.all(lo.curves <= hi.curves)

    def test_unordered_start_rejected(self):
        grid, lo, hi, outer_lo, outer_hi = self._pair(-0.5)
        with pytest.raises(OrderViolationInput):
            monotone_coupled_sweep(lo, hi, outer_lo, outer_hi, ExpHamiltonian(),
                                   np.random.default_rng(0))

    def test_unordered_endpoints_rejected(self):
        grid, lo, hi, outer_lo, outer_hi = self._pair(1.0)
        bad_hi = BoundaryData(outer_hi.x_vec - 5.0, outer_hi.y_vec, PLUS_INF, MINUS_INF)
        with pytest.raises(OrderViolationInput):
            monotone_coupled_sweep(lo, hi, outer_lo, bad_hi, ExpHamiltonian(),
                                   np.random.default_rng(0))

    def test_unordered_floor_rejected(self):
        grid, lo, hi, outer_lo, outer_hi = self._pair(1.0)
        walled_lo = BoundaryData(outer_lo.x_vec, outer_lo.y_vec, PLUS_INF,
                                 constant_curve(grid, -2.0))
        with pytest.raises(OrderViolationInput):
            monotone_coupled_sweep(lo, hi, walled_lo, outer_hi, ExpHamiltonian(),
                                   np.random.default_rng(0))
