from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acmlink.design import (
    DesignSpec,
    InfeasibleCandidate,
    RecursionOverflow,
    constant_objective,
    constant_thresholds,
    continuous_objective,
    design,
    design_constant,
    design_continuous,
    design_discrete,
    design_with_outage_cap,
    discrete_objective,
    next_threshold_constant,
    rounded_result,
    waterfill_kappa,
)
from acmlink.fading import Rayleigh, db_to_linear, linear_to_db
from acmlink.policy import PowerKind, metrics, policy_to_dict, policy_from_dict

R10 = Rayleigh(10.0)


def model(gbar_db):
    return Rayleigh(db_to_linear(gbar_db))


class TestSpec:
    def test_defaults(self):
        assert DesignSpec("constant", 4).n_power_levels == 1
        assert DesignSpec("continuous", 4).n_power_levels == math.inf
        assert DesignSpec("discrete", 4, 4.0).n_power_levels == 4

    @pytest.mark.parametrize(
        "args, kw",
        [
            (("discrete", 4), {}),
            (("discrete", 4, math.inf), {}),
            (("constant", 4, 2), {}),
            (("continuous", 4, 3), {}),
            (("constant", 0), {}),
            (("constant", 2.5), {}),
            (("constant", 2), {"outage_cap": 0.0}),
            (("constant", 2), {"outage_cap": 1.0}),
            (("constant", 2), {"restarts": -1}),
            (("dithered", 2), {}),
        ],
    )
    def test_invalid(self, args, kw):
        with pytest.raises(ValueError):
            DesignSpec(*args, **kw)

    def test_designer_kind_checks(self):
        with pytest.raises(ValueError):
            design_constant(DesignSpec("continuous", 2), R10)
        with pytest.raises(ValueError):
            design_continuous(DesignSpec("constant", 2), R10)
        with pytest.raises(ValueError):
            design_discrete(DesignSpec("constant", 2), R10)
        with pytest.raises(ValueError):
            design_with_outage_cap(DesignSpec("constant", 2), R10)


class TestWaterfill:
    def test_single_region(self):
        kappa, lam = waterfill_kappa([0.6], [0.05])
        assert kappa[0] == pytest.approx(1 / 0.05)
        assert lam == pytest.approx(0.6 / 1.05)

    def test_power_identity(self):
        w, c = np.array([0.2, 0.3, 0.25]), np.array([0.05, 0.03, 0.01])
        kappa, lam = waterfill_kappa(w, c)
        assert np.dot(kappa, c) == pytest.approx(1.0, abs=1e-12)
        assert lam == pytest.approx(w.sum() / (1 + c.sum()))

    def test_infeasible(self):
        with pytest.raises(InfeasibleCandidate) as info:
            waterfill_kappa([0.001, 0.9], [1.0, 0.01])
        assert info.value.kappa[0] <= 0

    def test_nonpositive_inputs(self):
        with pytest.raises(ValueError):
            waterfill_kappa([0.0, 0.5], [0.1, 0.1])

    def test_table_thresholds(self):
        # rate thresholds and power steps of the four-region discrete design
        g = db_to_linear(np.array([
            [2.468, 3.385, 4.323, 5.290],
            [6.296, 7.004, 7.743, 8.523],
            [9.358, 9.997, 10.689, 11.455],
            [12.336, 13.040, 13.896, 15.072],
        ]))
        p = R10.masses(np.append(g.ravel(), np.inf)).reshape(4, 4)
        kappa, _ = waterfill_kappa(p.sum(axis=1), (p / g).sum(axis=1))
        np.testing.assert_allclose(kappa, [2.4, 6.6, 13.9, 29.0], atol=0.3)

    @given(
        st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
        st.floats(0.01, 100.0),
    )
    def test_scaling(self, w, alpha):
        w = np.array(w)
        c = w / np.linspace(20.0, 40.0, w.size)  # well inside the feasible set
        k1, lam1 = waterfill_kappa(w, c)
        # lam scales by alpha (1 + sum c) / (1 + alpha sum c) when both inputs scale
        try:
            _, lam2 = waterfill_kappa(alpha * w, alpha * c)
        except InfeasibleCandidate as exc:  # kappa itself is not scale-free
            lam2 = exc.lam
        assert lam2 == pytest.approx(lam1 * alpha * (1 + c.sum()) / (1 + alpha * c.sum()), rel=1e-12)
        # lam is proportional to sum w, so scaling w alone leaves kappa unchanged
        k3, lam3 = waterfill_kappa(alpha * w, c)
        np.testing.assert_allclose(k3, k1, rtol=1e-9)
        assert lam3 == pytest.approx(alpha * lam1, rel=1e-12)

    def test_underflow_is_infeasible(self):
        with pytest.raises(InfeasibleCandidate):
            waterfill_kappa([0.5, 0.5], [0.2, 1e-320])


class TestObjectives:
    def test_infeasible_scores(self):
        assert continuous_objective([5.0, 3.0], R10) == -math.inf
        assert continuous_objective([0.0, 3.0], R10) == -math.inf
        assert discrete_objective(np.array([[1.0, 2.0], [2.0, 1.5]]), R10) == -math.inf
        assert constant_objective([3.0, 1.0], R10) == -math.inf

    def test_discrete_single_step(self):
        # one power level per code: d_n = w_n / g_n1
        g = np.array([[1.5], [4.0], [9.0]])
        w = R10.masses(np.append(g.ravel(), np.inf))
        kappa, _ = waterfill_kappa(w, w / g.ravel())
        assert discrete_objective(g, R10) == pytest.approx(np.dot(np.log2(1 + kappa), w))

    def test_continuous_at_table(self, designs):
        g = db_to_linear(np.array([1.4, 5.5, 8.9, 12.3]))
        assert designs("continuous", 4).masa >= continuous_objective(g, R10)


class TestConstantRecursion:
    def test_degenerate_region(self):
        assert next_threshold_constant(3.0, 3.0, 1.0, R10) == pytest.approx(3.0, rel=1e-14)

    def test_table_thresholds(self):
        g = constant_thresholds(db_to_linear(4.4), db_to_linear(7.3), 4, R10)
        np.testing.assert_allclose(linear_to_db(g[2:]), [9.8, 12.4], atol=0.1)

    def test_residual(self):
        g1, g2 = db_to_linear(4.4), db_to_linear(7.3)
        g = constant_thresholds(g1, g2, 4, R10)
        a = R10.sf(g1)
        for n in range(1, 3):
            lhs = R10.cdf(g[n + 1]) - R10.cdf(g[n])
            rhs = (a + g[n]) * math.log((a + g[n]) / (a + g[n - 1])) * R10.pdf(g[n])
            assert abs(lhs - rhs) <= 1e-9

    def test_overflow(self):
        with pytest.raises(RecursionOverflow):
            next_threshold_constant(0.01, 60.0, 0.01, R10)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            next_threshold_constant(3.0, 2.0, 1.0, R10)

    def test_stationary(self, designs):
        # the recursion makes the objective flat in every threshold
        g = designs("constant", 4).policy.thresholds[:, 0]
        for i in range(4):
            h = 1e-6 * g[i]
            up, dn = g.copy(), g.copy()
            up[i] += h
            dn[i] -= h
            grad = (constant_objective(up, R10) - constant_objective(dn, R10)) / (2 * h)
            assert abs(grad) <= 1e-5


class TestTableDesigns:
    def test_constant(self, designs):
        r = designs("constant", 4)
        np.testing.assert_allclose(linear_to_db(r.policy.thresholds[:, 0]), [4.4, 7.3, 9.8, 12.4], atol=0.1)
        assert r.lam is None and r.converged

    def test_continuous(self, designs):
        r = designs("continuous", 4)
        np.testing.assert_allclose(linear_to_db(r.policy.thresholds[:, 0]), [1.4, 5.5, 8.9, 12.3], atol=0.1)
        np.testing.assert_allclose(r.policy.kappa, [2.0, 6.0, 13.8, 31.3], atol=0.3)
        np.testing.assert_allclose(r.metrics.se_per_region, [1.6, 2.8, 3.9, 5.0], atol=0.05)

    def test_discrete(self, designs):
        r = designs("discrete", 4, 4)
        np.testing.assert_allclose(linear_to_db(r.policy.thresholds[:, 0]), [2.5, 6.3, 9.4, 12.3], atol=0.1)
        np.testing.assert_allclose(r.policy.kappa, [2.4, 6.6, 13.9, 29.0], atol=0.3)
        np.testing.assert_allclose(r.metrics.se_per_region, [1.8, 2.9, 3.9, 4.9], atol=0.05)

    @pytest.mark.parametrize("case", [("constant", 4, None), ("continuous", 4, None), ("discrete", 4, 4)])
    def test_result_invariants(self, case, designs):
        r = designs(*case)
        assert r.masa == r.metrics.ase >= 0
        assert r.metrics.avg_power == pytest.approx(1.0, abs=1e-6)
        assert np.all(np.diff(r.policy.thresholds.ravel()) > 0)
        assert np.all(np.diff(r.metrics.se_per_region) > 0)
        if r.policy.kappa is not None:
            assert np.all(r.policy.kappa > 0)
            assert np.all(np.diff(r.policy.kappa) > 0)

    def test_deterministic(self):
        a = design(DesignSpec("continuous", 3, seed=5), R10)
        b = design(DesignSpec("continuous", 3, seed=5), R10)
        np.testing.assert_array_equal(a.policy.thresholds, b.policy.thresholds)


class TestSingleRegion:
    def test_constant_grid_oracle(self):
        m = model(5.0)
        grid = np.linspace(1e-4, 20.0, 100_000)
        best = max(constant_objective([g], m) for g in grid)
        r = design(DesignSpec("constant", 1), m)
        assert r.masa == pytest.approx(1.2263, abs=1e-3)
        assert r.masa == pytest.approx(best, abs=1e-4)
        assert r.masa >= best - 1e-12

    def test_truncated_inversion_grid_oracle(self):
        grid = np.linspace(1e-3, 30.0, 20_000)
        w = R10.sf(grid)
        c = np.array([R10.inv_snr_masses(np.array([g, np.inf]))[0] for g in grid])
        best = np.max(np.log2(1 + 1 / c) * w)
        r = design(DesignSpec("continuous", 1), R10)
        assert r.masa == pytest.approx(best, abs=1e-5)
        assert r.policy.kappa[0] == pytest.approx(1 / R10.inv_snr_masses(r.policy.region_edges())[0])


class TestFamilies:
    def test_monotone_in_k(self, designs):
        values = [designs("discrete", 2, k).masa for k in (1, 2, 4, 8)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_monotone_in_n(self, designs):
        values = [designs("constant", n).masa for n in (1, 2, 4, 8)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestOutageCap:
    def test_first_threshold_pinned(self):
        r = design(DesignSpec("constant", 2, outage_cap=1e-3), R10)
        assert r.policy.first_threshold == pytest.approx(-10 * math.log(1 - 1e-3), rel=1e-12)
        assert r.policy.first_threshold == pytest.approx(0.010005, abs=1e-6)
        assert r.metrics.p_no_tx <= 1e-3

    @pytest.mark.parametrize("scheme, k", [("constant", None), ("continuous", None), ("discrete", 2)])
    @pytest.mark.parametrize("cap", [1e-3, 0.05, 0.3])
    def test_cap_is_exact(self, scheme, k, cap):
        r = design_with_outage_cap(DesignSpec(scheme, 3, k, outage_cap=cap, restarts=2), R10)
        assert r.metrics.p_no_tx <= cap
        assert r.metrics.p_no_tx == pytest.approx(cap, rel=1e-12)
        assert r.metrics.avg_power == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("gbar_db", [5.0, 10.0, 20.0])
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_cap_costs_throughput(self, designs, n, gbar_db):
        free = designs("constant", n, None, gbar_db)
        capped = designs("constant", n, None, gbar_db, 1e-3)
        assert capped.masa <= free.masa + 1e-9

    def test_many_codes_absorb_cap(self, designs):
        gap = designs("constant", 8, None, 20.0).masa - designs("constant", 8, None, 20.0, 1e-3).masa
        assert 0 <= gap <= 0.15


class TestRounding:
    @pytest.mark.parametrize("case", [("constant", 4, None), ("continuous", 4, None), ("discrete", 4, 4)])
    def test_round_trip_exact(self, case, designs):
        r = rounded_result(designs(*case), R10)
        back, m = policy_from_dict(policy_to_dict(r.policy, R10))
        assert metrics(back, m).ase == pytest.approx(r.masa, rel=1e-12)
        assert r.metrics.avg_power == pytest.approx(1.0, abs=1e-12)
        assert r.masa == pytest.approx(designs(*case).masa, abs=1e-8)

    def test_rounding_respects_cap(self):
        for cap in np.linspace(0.01, 0.4, 9):
            r = design(DesignSpec("continuous", 2, outage_cap=cap, restarts=0), R10)
            assert rounded_result(r, R10, cap).metrics.p_no_tx <= cap

    def test_kind_preserved(self, designs):
        assert rounded_result(designs("discrete", 4, 4), R10).policy.kind is PowerKind.DISCRETE
