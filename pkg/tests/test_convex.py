import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dnch import convex as cx
from dnch.errors import ConfigurationError, NumericalError, UnsupportedError

LAMBDAS = (1.0, 0.1, 0.01)


def catalog():
    return [
        cx.ZeroGraph(),
        cx.LinearGraph(2.0),
        cx.SignPlay(1.0),
        cx.ClampGraph(0.5),
        cx.PowerGraph(3.0, 1.5),
        cx.PowerGraph(1.5, 1.0),
        cx.CubicGraph(1.0),
        cx.CustomGraph(np.tanh, lambda r: np.log(np.cosh(r)), lambda r: 1 / np.cosh(r) ** 2, name="tanh", growth_bound=1.0),
    ]


GRAPHS = catalog()
ids = [repr(g) for g in GRAPHS]
reals = st.floats(-50, 50, allow_nan=False)


class TestExamples:
    def test_signplay(self):
        g = cx.SignPlay(1.0)
        assert cx.resolvent(g, 0.5, 2.0) == pytest.approx(1.5, abs=1e-14)
        assert cx.yosida(g, 0.5, 2.0) == pytest.approx(1.0, abs=1e-14)
        assert cx.moreau(g, 0.5, 2.0) == pytest.approx(1.75, abs=1e-14)

    def test_cubic_resolvent_against_bisection(self):
        from scipy.optimize import bisect

        oracle = bisect(lambda x: x + x**3 - 2.0, 0.0, 2.0, xtol=1e-15)
        assert cx.resolvent(cx.CubicGraph(1.0), 1.0, 2.0) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(1.0, abs=1e-12)

    def test_linear(self):
        assert cx.yosida(cx.LinearGraph(1.0), 0.25, 1.0) == pytest.approx(0.8, abs=1e-14)
        assert cx.moreau(cx.LinearGraph(1.0), 1.0, 2.0) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @pytest.mark.parametrize("lam", LAMBDAS)
    def test_zero_is_fixed(self, graph, lam):
        assert cx.resolvent(graph, lam, 0.0) == 0.0
        assert cx.yosida(graph, lam, 0.0) == 0.0
        assert cx.moreau(graph, lam, 0.0) == 0.0

    @pytest.mark.parametrize("lam,r,out", [(0.1, 15, 10), (0.1, -3, -3), (1.0, -7, -1)])
    def test_truncate(self, lam, r, out):
        assert cx.truncate(lam, r) == out

    def test_lambda_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            cx.yosida(cx.SignPlay(), 0.0, 1.0)

    def test_invalid_parameters(self):
        for make in (lambda: cx.LinearGraph(-1), lambda: cx.SignPlay(-1), lambda: cx.ClampGraph(0),
                     lambda: cx.PowerGraph(1.0), lambda: cx.CubicGraph(0.0)):
            with pytest.raises(ConfigurationError):
                make()

    def test_root_finder_reports_bracket(self):
        # a function with no root in the bracket
        with pytest.raises(NumericalError) as info:
            cx._solve_increasing(lambda x: x + 10.0, lambda x: np.ones_like(x), np.array([0.0]),
                                 np.array([0.0]), np.array([1.0]), 1e-12, maxiter=20)
        assert info.value.state


class TestGraphInvariants:
    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    def test_zero_in_graph_and_potential(self, graph):
        lo, hi = graph.bounds(0.0)
        assert lo <= 0.0 <= hi
        assert graph.potential(0.0) == 0.0

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    def test_potential_nonnegative_and_section_monotone(self, graph, rng):
        r = np.sort(rng.uniform(-3, 3, 500))
        assert np.all(graph.potential(r) >= 0)
        sec = graph.minimal_section(r)
        finite = np.isfinite(sec)
        assert np.all(np.diff(sec[finite]) >= -1e-12)


class TestYosidaProperties:
    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=reals, s=reals, lam=st.sampled_from(LAMBDAS))
    def test_resolvent_nonexpansive(self, graph, r, s, lam):
        jr, js = graph.resolvent(lam, r), graph.resolvent(lam, s)
        assert abs(jr - js) <= abs(r - s) + 1e-10

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=reals, lam=st.sampled_from(LAMBDAS))
    def test_resolvent_defect(self, graph, r, lam):
        x = graph.resolvent(lam, r)
        assert graph.distance_to_image(lam, r, x) <= 1e-12 * (1 + abs(r)) * 10

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=reals, s=reals, lam=st.sampled_from(LAMBDAS))
    def test_yosida_monotone_lipschitz(self, graph, r, s, lam):
        yr, ys = graph.yosida(lam, r), graph.yosida(lam, s)
        assert (yr - ys) * (r - s) >= -1e-10
        assert abs(yr - ys) <= abs(r - s) / lam + 1e-9 * (1 + abs(yr) + abs(ys))

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=reals, lam=st.sampled_from(LAMBDAS))
    def test_minimal_section_bound(self, graph, r, lam):
        assert abs(graph.yosida(lam, r)) <= abs(graph.minimal_section(r)) + 1e-10

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=st.floats(-5, 5), lam=st.sampled_from(LAMBDAS))
    def test_envelope_sandwich(self, graph, r, lam):
        env = graph.moreau(lam, r)
        assert -1e-14 <= env <= graph.potential(r) + 1e-10 * (1 + abs(graph.potential(r)))
        assert graph.moreau(lam / 10, r) >= env - 1e-10 * (1 + env)

    @pytest.mark.parametrize("graph", GRAPHS, ids=ids)
    @given(r=st.floats(-5, 5), lam=st.sampled_from(LAMBDAS))
    def test_envelope_derivative_is_yosida(self, graph, r, lam):
        h = 1e-5
        fd = (graph.moreau(lam, r + h) - graph.moreau(lam, r - h)) / (2 * h)
        y = graph.yosida(lam, r)
        # the Yosida map is 1/lam-Lipschitz, which bounds the difference-quotient error by h/lam
        assert abs(fd - y) <= max(1e-6 * (1 + abs(y)), h / lam)

    @pytest.mark.parametrize("graph", [g for g in GRAPHS if g.growth_bound is not None], ids=lambda g: repr(g))
    @given(r=reals, lam=st.sampled_from(LAMBDAS))
    def test_sublinear_bound_inherited(self, graph, r, lam):
        M = graph.growth_bound
        assert abs(graph.yosida(lam, r)) <= M * (1 + abs(r)) + 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_vectorised_matches_scalar(self, seed):
        rng = np.random.default_rng(seed)
        r = rng.uniform(-4, 4, 16)
        for graph in GRAPHS:
            vec = graph.yosida(0.1, r)
            assert np.allclose(vec, [graph.yosida(0.1, x) for x in r], rtol=1e-12, atol=1e-12)


class TestPotentials:
    def test_double_well_gamma(self):
        gam = cx.gamma_from_potential(cx.double_well(1.0))
        r = np.linspace(-3, 3, 61)
        assert gam.x0 == 0.0
        assert np.allclose(gam(r), r**3, atol=1e-12)

    def test_quadratic_gamma_identity(self):
        gam = cx.gamma_from_potential(cx.quadratic(0.0))
        r = np.linspace(-3, 3, 13)
        assert gam.x0 == 0.0 and np.allclose(gam(r), r)

    def test_logarithmic_gamma(self):
        psi = cx.logarithmic(theta=2.0, theta_c=1.0, K=1.0)
        gam = cx.gamma_from_potential(psi)
        lattice = np.linspace(-0.9999, 0.9999, 10_000)
        assert np.all(np.diff(gam(lattice)) >= 0)
        lo, hi = gam(-0.999), gam(0.999)
        assert np.isfinite(lo) and np.isfinite(hi) and lo < 0 < hi
        assert abs(gam(gam.x0)) <= 1e-10

    def test_default_logarithmic_is_nonconvex(self):
        psi = cx.logarithmic()
        assert psi.K == pytest.approx(1.0)
        assert psi.d2psi(0.0) < 0
        from scipy.optimize import minimize_scalar

        well = minimize_scalar(lambda r: float(psi.psi(r)), bounds=(0.1, 0.999), method="bounded", options={"xatol": 1e-12})
        assert well.fun == pytest.approx(0.0, abs=1e-12)
        assert np.min(psi.psi(psi.sample_points())) >= 0.0

    def test_gamma_hat_zero_at_x0(self):
        gam = cx.gamma_from_potential(cx.logarithmic())
        assert gam.gamma_hat(gam.x0) == pytest.approx(0.0, abs=1e-14)
        assert np.all(gam.gamma_hat(np.linspace(-0.99, 0.99, 101)) >= 0)

    def test_wrong_K_rejected(self):
        with pytest.raises(ConfigurationError):
            cx.double_well(0.5)

    def test_negative_potential_rejected(self):
        with pytest.raises(ConfigurationError):
            cx.Potential("bad", lambda r: r - 1.0, lambda r: np.ones_like(r), lambda r: np.zeros_like(r), K=0.0)

    def test_domain_violation(self):
        from dnch.errors import DomainViolation

        psi = cx.logarithmic()
        psi.check_domain(np.array([0.0, 0.99]))
        with pytest.raises(DomainViolation):
            psi.check_domain(np.array([0.0, 1.0 - 1e-8]))

    def test_gamma_resolvent_and_yosida(self):
        gam = cx.gamma_from_potential(cx.double_well(1.0))
        # x + lam x^3 = r with lam = 1, r = 2 -> x = 1
        assert gam.resolvent(1.0, 2.0) == pytest.approx(1.0, abs=1e-12)
        assert gam.yosida(1.0, 2.0) == pytest.approx(1.0, abs=1e-12)

    def test_gamma_resolvent_stays_in_domain(self):
        gam = cx.gamma_from_potential(cx.logarithmic())
        x = gam.resolvent(1e-3, np.array([-50.0, 50.0]))
        assert np.all(np.abs(x) < 1.0)

    def test_config_builders(self):
        assert cx.graph_from_config({"kind": "sign_play", "rho": 2}) == cx.SignPlay(2.0)
        assert cx.potential_from_config({"kind": "double_well", "K": 1}).K == 1.0
        with pytest.raises(ConfigurationError, match="rho"):
            cx.graph_from_config({"kind": "linear", "rho": 1})
        with pytest.raises(ConfigurationError):
            cx.potential_from_config({"kind": "quartic"})


class TestGrowthCheck:
    def test_double_well(self):
        gam = cx.gamma_from_potential(cx.double_well(1.0))
        rep = cx.yosida_derivative_growth_check(gam, 0.1, [0, 1, -1, 3, -3])
        assert rep.passed and rep.C <= 3.0

    def test_identity(self):
        gam = cx.gamma_from_potential(cx.quadratic(0.0))
        rep = cx.yosida_derivative_growth_check(gam, 0.1, np.linspace(-5, 5, 11))
        assert rep.passed and rep.C <= 1.0
        assert np.allclose(rep.derivatives, 1 / 1.1, atol=1e-8)

    def test_zero_sample(self):
        gam = cx.gamma_from_potential(cx.double_well(1.0))
        rep = cx.yosida_derivative_growth_check(gam, 0.1, [0.0])
        assert rep.derivatives[0] >= 0 and rep.passed

    def test_singular_unsupported(self):
        gam = cx.gamma_from_potential(cx.logarithmic())
        with pytest.raises(UnsupportedError):
            cx.yosida_derivative_growth_check(gam, 0.1, [0.0])

    def test_difference_quotient_bound_against_exact_derivative(self):
        gam = cx.gamma_from_potential(cx.double_well(1.0))
        r = np.linspace(-4, 4, 81)
        for lam in LAMBDAS:
            exact = gam.yosida_derivative(lam, r)
            assert np.all(exact <= 3 * r**2 + 1e-9)
            rep = cx.yosida_derivative_growth_check(gam, lam, r)
            assert rep.passed
            assert np.allclose(rep.derivatives, exact, rtol=1e-6, atol=1e-6)
