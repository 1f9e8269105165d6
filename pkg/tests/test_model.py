"""Static analysis: equilibrium algebra, corridor, quadrature, predictions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scenario
from traitsim.model import (
    AssumptionWarning,
    EquilibriumPrediction,
    Grid,
    apriori_corridor,
    check_tail_condition,
    closure_mask,
    equilibrium_mass,
    eval_fitness,
    positive_root,
    predict_equilibrium,
    quadrature,
    support_runs,
    trapezoid_weights,
)


class TestGrid:
    def test_nodes_hit_decimal_fractions_exactly(self):
        g = Grid(0.0, 1.0, 10)
        assert g.nodes[3] == 0.3
        assert g.nodes[5] == 0.5
        assert g.nodes[-1] == 1.0
        g2 = Grid(0.0, 1.0, 2000)
        assert g2.nodes[600] == 0.3
        assert g2.nodes[500] == 0.25

    def test_uniform_increasing(self):
        g = Grid(-1.0, 2.0, 7)
        d = np.diff(g.nodes)
        assert np.all(d > 0)
        np.testing.assert_allclose(d, g.dx, rtol=1e-12)
        assert g.n_nodes == 8

    def test_validation(self):
        with pytest.raises(ValueError, match="x_min < x_max"):
            Grid(1.0, 0.0, 10)
        with pytest.raises(ValueError, match="n_cells"):
            Grid(0.0, 1.0, 1)


class TestPositiveRoot:
    def test_anchors_exact(self):
        assert positive_root(2.0) == 1.0
        assert positive_root(6.0) == 2.0
        assert positive_root(0.0) == 0.0

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError, match="kappa"):
            positive_root(-0.5)

    @given(st.floats(min_value=0.0, max_value=100.0))
    def test_defining_identity(self, kappa):
        r = positive_root(kappa)
        assert r >= 0.0
        assert abs(r * (1.0 + r) - kappa) <= 1e-12 * (1.0 + kappa)

    @given(
        st.floats(min_value=0.0, max_value=100.0),
        st.floats(min_value=1e-9, max_value=10.0),
    )
    def test_monotone(self, kappa, gap):
        assert positive_root(kappa) < positive_root(kappa + gap)


class TestEquilibriumMass:
    def test_linear_crowding_root_is_kappa(self):
        assert equilibrium_mass(3.7, 0.0) == 3.7

    def test_matches_positive_root_at_c0_one(self):
        for kappa in (0.0, 0.5, 2.0, 6.0, 55.0):
            assert equilibrium_mass(kappa, 1.0) == pytest.approx(
                positive_root(kappa), rel=1e-15
            )

    @given(
        st.floats(min_value=0.0, max_value=50.0),
        st.floats(min_value=1e-3, max_value=5.0),
    )
    def test_defining_identity_general(self, kappa, c0):
        r = equilibrium_mass(kappa, c0)
        assert abs(r * (1.0 + c0 * r) - kappa) <= 1e-11 * (1.0 + kappa)


class TestFitness:
    def test_goldens(self):
        s = make_scenario(b="2", d="1")
        assert eval_fitness(0.5, 1.0, s) == 0.0
        assert eval_fitness(0.5, 0.0, s) == 2.0
        s2 = make_scenario(b="3", d="2")
        assert eval_fitness(0.1, 0.5, s2) == pytest.approx(1.0, rel=1e-15)

    @given(
        st.floats(min_value=0.0, max_value=0.99),
        st.floats(min_value=1e-6, max_value=5.0),
    )
    def test_strictly_decreasing_in_rho(self, x, drho):
        s = make_scenario(b="2 - (x-0.3)^2", d="1 + x")
        rho = 0.3
        assert eval_fitness(x, rho, s) > eval_fitness(x, rho + drho, s)

    def test_zero_at_predicted_equilibrium(self):
        s = make_scenario(b="2 - (x-0.3)^2", d="1", n_cells=10)
        pred = predict_equilibrium(s)
        assert abs(eval_fitness(pred.x_bar, pred.rho_bar, s)) <= 1e-12

    def test_negative_rho_rejected(self):
        s = make_scenario()
        with pytest.raises(ValueError, match="rho"):
            eval_fitness(0.0, -0.1, s)


class TestQuadrature:
    def test_constant_one(self):
        g = Grid(0.0, 1.0, 10)
        assert quadrature(np.ones(11), g) == pytest.approx(1.0, rel=1e-15)

    def test_exact_on_linear(self):
        g = Grid(0.0, 1.0, 10)
        assert quadrature(g.nodes.copy(), g) == 0.5

    def test_quadratic_derived(self):
        # oracle: analytic integral of x^2 over [0,1] is 1/3
        g = Grid(0.0, 1.0, 1000)
        assert abs(quadrature(g.nodes**2, g) - 1.0 / 3.0) < 1e-6

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25)
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid(0.0, 2.0, 16)
        v = rng.uniform(0.0, 5.0, g.n_nodes)
        w = rng.uniform(0.0, 5.0, g.n_nodes)
        a = float(rng.uniform(0.0, 3.0))
        lhs = quadrature(a * v + w, g)
        rhs = a * quadrature(v, g) + quadrature(w, g)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_rejects_bad_input(self):
        g = Grid(0.0, 1.0, 4)
        with pytest.raises(ValueError, match="non-finite"):
            quadrature(np.array([1.0, np.nan, 1.0, 1.0, 1.0]), g)
        with pytest.raises(ValueError, match="negative"):
            quadrature(np.array([1.0, -1.0, 1.0, 1.0, 1.0]), g)
        with pytest.raises(ValueError, match="expected 5 node values"):
            quadrature(np.ones(4), g)

    def test_weights_sum_to_length(self):
        g = Grid(0.0, 3.0, 12)
        assert trapezoid_weights(g).sum() == pytest.approx(3.0, rel=1e-14)


class TestSupportGeometry:
    def test_runs(self):
        mask = np.array([0, 1, 1, 0, 1, 0, 0, 1, 1, 1], dtype=bool)
        assert support_runs(mask) == [(1, 2), (4, 4), (7, 9)]
        assert support_runs(np.zeros(4, dtype=bool)) == []

    def test_closure_adds_adjacent(self):
        mask = np.array([0, 0, 1, 1, 0, 0], dtype=bool)
        np.testing.assert_array_equal(
            closure_mask(mask), np.array([0, 1, 1, 1, 1, 0], dtype=bool)
        )


class TestPredictEquilibrium:
    def test_interior_maximum(self):
        s = make_scenario(b="2 - (x-0.3)^2", d="1", n_cells=10)
        pred = predict_equilibrium(s)
        assert pred.x_bar == 0.3
        assert pred.rho_bar == 1.0
        assert pred.kappa == 2.0
        assert not pred.x_bar_on_boundary

    def test_boundary_maximum(self):
        s = make_scenario(b="1+x", d="1", n_cells=10)
        pred = predict_equilibrium(s)
        assert pred.x_bar == 1.0
        assert pred.rho_bar == 1.0
        assert pred.x_bar_on_boundary

    def test_corridor_roots_closed_form(self):
        s = make_scenario(b="1+x", d="1", n_cells=10)
        pred = predict_equilibrium(s)
        assert pred.b_m == 1.0 and pred.b_M == 2.0
        assert pred.r_m == pytest.approx((math.sqrt(5.0) - 1.0) / 2.0, abs=1e-12)
        assert pred.r_M == 1.0

    def test_prediction_invariants(self):
        s = make_scenario(b="2 - (x-0.3)^2", d="1 + 0.5*x", n_cells=50)
        pred = predict_equilibrium(s)
        assert abs(pred.rho_bar * (1 + pred.rho_bar) - pred.kappa) <= 1e-12 * (
            1 + pred.kappa
        )
        assert 0.0 < pred.rho_m <= pred.rho_M
        rho0 = s.initial_mass()
        assert pred.rho_m == min(pred.r_m, rho0)
        assert pred.rho_M == max(pred.r_M, rho0)

    def test_tie_break_smallest_x_with_warning(self):
        s = make_scenario(b="1", d="1", n_cells=10)
        with pytest.warns(AssumptionWarning, match="unique-maximizer"):
            pred = predict_equilibrium(s)
        assert pred.x_bar == 0.0
        assert pred.x_bar_on_boundary

    def test_off_support_peak_lands_on_closure_node(self):
        # support [0, 0.4]; b/d still increasing there, so the argmax over
        # the closed support is the node adjacent to the support edge
        s = make_scenario(b="2 - (x-0.8)^2", d="1", u0="ind(0, 0.4)", n_cells=10)
        pred = predict_equilibrium(s)
        assert pred.x_bar == 0.5
        assert pred.x_bar_on_boundary

    def test_scaling_invariance(self):
        base = make_scenario(b="2 - (x-0.3)^2", d="1 + x", n_cells=20)
        scaled = make_scenario(
            b="3.7*(2 - (x-0.3)^2)", d="3.7*(1 + x)", n_cells=20
        )
        p0 = predict_equilibrium(base)
        p1 = predict_equilibrium(scaled)
        assert p1.x_bar == p0.x_bar
        assert p1.rho_bar == pytest.approx(p0.rho_bar, rel=1e-12)

    def test_c0_zero_uses_linear_root(self):
        s = make_scenario(b="2 - (x-0.3)^2", d="1", n_cells=10, c0=0.0)
        pred = predict_equilibrium(s)
        assert pred.rho_bar == 2.0  # b/d at the peak, no quadratic crowding
        assert pred.r_M == 2.0

    def test_empty_support_rejected(self):
        s = make_scenario(u0="0")
        with pytest.raises(ValueError, match="zero initial mass"):
            predict_equilibrium(s)


class TestCorridor:
    def test_spec_examples(self):
        pred = EquilibriumPrediction(
            x_bar=0.0,
            x_bar_index=0,
            rho_bar=1.0,
            kappa=2.0,
            b_m=1.0,
            b_M=2.0,
            d_m=1.0,
            d_M=1.0,
            r_m=0.618,
            r_M=1.0,
            rho_m=0.618,
            rho_M=1.0,
            x_bar_on_boundary=False,
        )
        assert apriori_corridor(pred, 0.8) == (0.618, 1.0)
        assert apriori_corridor(pred, 0.1) == (0.1, 1.0)
        assert apriori_corridor(pred, 5.0) == (0.618, 5.0)

    def test_nonpositive_rho0_rejected(self):
        pred = predict_equilibrium(make_scenario(n_cells=4))
        with pytest.raises(ValueError):
            apriori_corridor(pred, 0.0)


class TestTailCondition:
    def _pred(self, rho_bar):
        return EquilibriumPrediction(
            x_bar=0.0,
            x_bar_index=0,
            rho_bar=rho_bar,
            kappa=rho_bar * (1 + rho_bar),
            b_m=1.0,
            b_M=1.0,
            d_m=1.0,
            d_M=1.0,
            r_m=rho_bar,
            r_M=rho_bar,
            rho_m=rho_bar,
            rho_M=rho_bar,
            x_bar_on_boundary=False,
        )

    def test_vacuous_when_no_tail_nodes(self):
        s = make_scenario(n_cells=10)  # grid inside |x| < 5
        assert check_tail_condition(s, self._pred(1.0), 5.0) is None

    def test_negative_certificate(self):
        s = make_scenario(
            b="1", d="1", u0="ind(-1, 1)", x_min=-10.0, x_max=10.0, n_cells=100
        )
        alpha = check_tail_condition(s, self._pred(1.0), 5.0)
        assert alpha == pytest.approx(-0.5, abs=1e-15)

    def test_positive_tail_detected(self):
        s = make_scenario(
            b="2", d="1", u0="ind(-1, 1)", x_min=-10.0, x_max=10.0, n_cells=100
        )
        alpha = check_tail_condition(s, self._pred(0.5), 5.0)
        assert alpha == pytest.approx(2.0 / 1.5 - 0.5, rel=1e-12)

    def test_failing_certificate_warns_in_prediction(self):
        s = make_scenario(
            b="2",
            d="1",
            u0="ind(-1, 1)",
            x_min=-10.0,
            x_max=10.0,
            n_cells=100,
            tail_R=5.0,
        )
        # constant fitness: G(x, rho_bar) = 0 everywhere, so alpha_R = 0 fails
        with pytest.warns(AssumptionWarning, match="tail certificate failed"):
            pred = predict_equilibrium(s)
        assert pred.alpha_R == pytest.approx(0.0, abs=1e-15)
        assert any("tail" in note for note in pred.notes)


class TestScenarioValidation:
    def test_rejects_nonpositive_b(self):
        with pytest.raises(ValueError, match="b must be positive"):
            make_scenario(b="x").validate()  # b(0) = 0

    def test_rejects_negative_u0(self):
        with pytest.raises(ValueError, match="nonnegative"):
            make_scenario(u0="x - 0.5").validate()

    def test_rejects_bad_dt_and_scheme(self):
        with pytest.raises(ValueError, match="dt"):
            make_scenario(dt=0.0).validate()
        with pytest.raises(ValueError, match="scheme"):
            make_scenario(scheme="euler").validate()
        with pytest.raises(ValueError, match="t_end"):
            make_scenario(t_end=-1.0).validate()
        with pytest.raises(ValueError, match="sample_every"):
            make_scenario(sample_every=0).validate()

    def test_t_end_zero_allowed(self):
        make_scenario(t_end=0.0).validate()

    def test_concentration_epsilon_default(self):
        s = make_scenario(n_cells=100)
        assert s.concentration_epsilon == pytest.approx(5 * 0.01, rel=1e-15)
        assert make_scenario(epsilon=0.2).concentration_epsilon == 0.2
