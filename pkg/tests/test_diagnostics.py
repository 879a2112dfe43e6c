import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnch import convex as cx
from dnch import grid as gr
from dnch.diagnostics import (
    ContdepReport,
    contdep_experiment,
    contdep_rhs,
    dissipation_density,
    dissipation_integral,
    dissipation_potential,
    energy_balance,
    free_energy,
    lambda_sweep,
    linear_oracle_params,
    time_l2,
)
from dnch.elliptic import DirichletSolver
from dnch.errors import ConfigurationError, ContractViolation
from dnch.grid import Grid
from dnch.manufactured import ManufacturedSolution, manufactured_params
from dnch.model import ConstantProfile, CosineProfile, ModelParams, SeparableSource
from dnch.stepper import SolverConfig, Trajectory, run


def signplay_benchmark(T=0.2):
    return ModelParams(cx.double_well(1.0), cx.SignPlay(1.0), u0=CosineProfile(0.0, 0.5, 1),
                       g=SeparableSource(0.5, 2, "sin", 3.0), T=T)


class TestFreeEnergy:
    def test_zero_field(self):
        assert free_energy(Grid.uniform(33), np.zeros(33), cx.double_well(), 1.0) == pytest.approx(0.25, abs=1e-15)

    def test_unit_field(self):
        assert free_energy(Grid.uniform(33), np.ones(33), cx.double_well(), 1.0) == 0.0

    @given(c=st.floats(-2, 2), lx=st.floats(0.5, 2), ly=st.floats(0.5, 2))
    def test_constant(self, c, lx, ly):
        g = Grid.uniform((9, 7), (lx, ly))
        psi = cx.double_well()
        assert free_energy(g, np.full(g.shape, c), psi, 3.0) == pytest.approx(lx * ly * psi.psi(c), rel=1e-12, abs=1e-15)

    def test_gradient_term(self):
        g = Grid.uniform(65)
        u = g.coords[0]
        assert free_energy(g, u, cx.zero_potential(), 2.0) == pytest.approx(1.0, rel=1e-12)


class TestDissipation:
    def test_zero(self):
        g = Grid.uniform(17)
        z = np.zeros(17)
        p = ModelParams(cx.double_well(), cx.SignPlay())
        assert np.all(dissipation_density(g, z, z, z, p) == 0)

    def test_only_gradient(self):
        g = Grid.uniform(33)
        mu = np.sin(np.pi * g.coords[0])
        z = np.zeros(33)
        p = ModelParams(cx.double_well(), cx.SignPlay(), M=2.0)
        d = dissipation_density(g, mu, z, z, p)
        assert np.all(d >= 0)
        assert np.allclose(d, 2.0 * gr.nodal_gradient_sq(g, mu))

    def test_signplay_pairing(self, rng):
        g = Grid.uniform(33)
        graph, lam = cx.SignPlay(0.7), 1e-6
        v = rng.uniform(0.1, 1.0, 33)
        xi = graph.yosida(lam, v)
        assert np.max(np.abs(xi * v - 0.7 * np.abs(v))) <= 1e-12

    def test_printed_viscosity_square(self):
        g = Grid.uniform(9)
        v = np.ones(9)
        z = np.zeros(9)
        p = ModelParams(cx.double_well(), cx.ZeroGraph(), sigma=3.0)
        assert np.allclose(dissipation_density(g, z, v, z, p), 9.0)
        assert dissipation_integral(g, z, v, z, p, 0.5) == pytest.approx(4.5)


class TestEnergyBalance:
    def test_zero_data(self):
        p = ModelParams(cx.double_well(), cx.SignPlay(), T=0.1)
        traj = run(p, SolverConfig(), Grid.uniform(17))
        assert abs(energy_balance(traj, p)) <= 1e-12
        assert all(r.free_energy == pytest.approx(0.25) for r in traj.reports)

    def test_stationary(self):
        lam, tau = 1e-3, 1e-2
        p = ModelParams(cx.double_well(), cx.SignPlay(), u0=ConstantProfile(1.0), T=1.0)
        traj = run(p, SolverConfig(lam=lam, tau=tau), Grid.uniform(33))
        assert abs(energy_balance(traj, p)) <= lam + tau

    def test_manufactured_first_order(self):
        sol = ManufacturedSolution(rate=5.0)
        p = manufactured_params(ModelParams(cx.double_well(), cx.CubicGraph(), T=0.1), sol)
        g = Grid.uniform(65)
        cfg = SolverConfig(regularize_beta=False, regularize_potential=False)
        r1 = energy_balance(run(p, cfg.replace(tau=1e-3), g), p)
        r2 = energy_balance(run(p, cfg.replace(tau=5e-4), g), p)
        assert 1.6 <= r1 / r2 <= 2.4

    def test_structural_errors(self):
        p = ModelParams(cx.double_well(), cx.SignPlay(), T=0.02)
        traj = run(p, SolverConfig(), Grid.uniform(9))
        with pytest.raises(ContractViolation):
            energy_balance(Trajectory(traj.states, traj.reports[:-1], traj.grid), p)
        with pytest.raises(ContractViolation):
            energy_balance(Trajectory(traj.states[::-1], traj.reports, traj.grid), p)
        with pytest.raises(ContractViolation):
            energy_balance(Trajectory([], [], None), p)

    def test_convex_energy_nonincreasing(self):
        p = ModelParams(cx.quadratic(), cx.SignPlay(1.0), u0=CosineProfile(0.0, 0.5, 2), T=0.2)
        traj = run(p, SolverConfig(), Grid.uniform(33))
        F = [r.free_energy for r in traj.reports]
        assert all(b <= a + 1e-10 for a, b in zip(F, F[1:]))


class TestMassLedger:
    def test_corrected_identity(self):
        traj = run(signplay_benchmark(T=0.1), SolverConfig(), Grid.uniform(33))
        for r in traj.reports[1:]:
            assert abs(r.mass_defect - r.boundary_reaction) <= 1e-12

    def test_defect_is_boundary_reaction(self):
        # the literal identity misses the boundary-node part of the mass change
        traj = run(signplay_benchmark(T=0.1), SolverConfig(), Grid.uniform(33))
        assert max(abs(r.mass_defect) for r in traj.reports[1:]) > 1e-10


@pytest.fixture(scope="module")
def setup():
    base = ModelParams(cx.double_well(), cx.CubicGraph(), u0=CosineProfile(0.5, 0.4, 1), T=0.1)
    pert = (SeparableSource(1.0, 2, "sin", 3.0), CosineProfile(0.0, 0.1, 2))
    return base, pert, SolverConfig(), Grid.uniform(17)


class TestContdep:
    def test_zero_scale(self, setup):
        base, pert, cfg, g = setup
        (rep,) = contdep_experiment(base, pert, [0.0], cfg, g)
        assert rep.lhs == 0 and rep.rhs == 0 and math.isnan(rep.ratio)

    def test_monotone_lhs(self, setup):
        base, pert, cfg, g = setup
        reps = contdep_experiment(base, pert, [1.0, 0.5, 0.25], cfg, g, jobs=3)
        lhs = [r.lhs for r in reps]
        assert lhs[0] > lhs[1] > lhs[2] > 0
        assert all(r.confined for r in reps)
        assert all(isinstance(r.parts["xi_v"], float) for r in reps)

    def test_rhs_against_dense_quadrature(self, setup):
        base, pert, cfg, g = setup
        traj = run(base, cfg, g)
        dg, du0 = pert
        vals = [dg(g, s.t) for s in traj.states]
        d0 = du0(g)
        w = np.full(17, 1 / 16)
        w[[0, -1]] = 1 / 32
        l2 = math.sqrt(sum(0.01 * np.dot(w, f * f) for f in vals[1:]))
        v = math.sqrt(np.dot(w, d0 * d0) + np.sum(np.diff(d0) ** 2) * 16)
        assert contdep_rhs(g, traj, vals, d0) == pytest.approx(l2 + v, abs=1e-10)

    def test_bounds_breach_is_reported(self, setup):
        base, pert, cfg, g = setup
        (rep,) = contdep_experiment(base, pert, [1.0], cfg, g, bounds=(0.0, 0.5))
        assert not rep.confined and math.isnan(rep.ratio) and rep.hypothesis_failure


class TestLambdaSweep:
    def test_single_lambda(self):
        rep = lambda_sweep(signplay_benchmark(T=0.05), SolverConfig(), [1e-2], Grid.uniform(17))
        assert rep.d_u == [] and rep.d_xi == [] and rep.monotone

    def test_zero_data(self):
        p = ModelParams(cx.double_well(), cx.SignPlay(), T=0.05)
        rep = lambda_sweep(p, SolverConfig(), [1e-1, 1e-2, 1e-3], Grid.uniform(17))
        assert rep.d_u == [0.0, 0.0] and rep.d_xi == [0.0, 0.0]

    def test_validation(self):
        p = signplay_benchmark()
        with pytest.raises(ConfigurationError):
            lambda_sweep(p, SolverConfig(), [1e-2, 1e-1], Grid.uniform(9))
        with pytest.raises(ConfigurationError, match="λ ∈ \\(0,1\\)"):
            lambda_sweep(p, SolverConfig(), [2.0], Grid.uniform(9))

    def test_linear_oracle(self):
        p = signplay_benchmark(T=0.1).replace(beta=cx.LinearGraph(2.0))
        rep = lambda_sweep(p, SolverConfig(), [1e-2, 1e-3, 1e-4], Grid.uniform(17))
        # a linear graph converges at first order in lambda
        assert 5.0 <= rep.d_u[0] / rep.d_u[1] <= 20.0
        assert rep.oracle_distance <= 1e-10

    def test_linear_oracle_slope(self):
        q = linear_oracle_params(signplay_benchmark().replace(beta=cx.LinearGraph(2.0)), 0.5)
        r = np.linspace(-3, 3, 13)
        assert np.allclose(q.beta.value(r), cx.LinearGraph(2.0).yosida(0.5, r))


class TestDissipationPotential:
    def test_zero(self):
        g = Grid.uniform(17)
        p = ModelParams(cx.double_well(), cx.SignPlay())
        assert dissipation_potential(np.zeros(17), DirichletSolver(g), p.beta, 1e-2, p) == 0.0

    def test_bilinear_oracle(self, rng):
        g = Grid.uniform(17)
        p = ModelParams(cx.double_well(), cx.ZeroGraph())
        v = rng.standard_normal(17)
        G = np.linalg.inv(-gr.dirichlet_matrix(g).toarray())
        gv = np.zeros(17)
        gv[1:-1] = G @ v[1:-1]
        oracle = 0.5 * gr.inner(g, gv, v) + 0.5 * gr.inner(g, v, v)
        R = dissipation_potential(v, DirichletSolver(g), p.beta, 1e-2, p)
        assert R == pytest.approx(oracle, rel=1e-12)
        assert dissipation_potential(2 * v, DirichletSolver(g), p.beta, 1e-2, p) == pytest.approx(4 * R, rel=1e-12)

    @settings(max_examples=25)
    @given(seed=st.integers(0, 10_000))
    def test_nonnegative(self, seed):
        g = Grid.uniform(17)
        p = ModelParams(cx.double_well(), cx.SignPlay(1.0))
        v = np.random.default_rng(seed).standard_normal(17)
        assert dissipation_potential(v, DirichletSolver(g), p.beta, 1e-2, p) >= 0


def test_time_l2_constant():
    p = ModelParams(cx.double_well(), cx.SignPlay(), T=0.1)
    g = Grid.uniform(9)
    traj = run(p, SolverConfig(), g)
    vals = [np.ones(9)] * len(traj.states)
    assert time_l2(g, traj, vals) == pytest.approx(math.sqrt(0.1), rel=1e-12)
