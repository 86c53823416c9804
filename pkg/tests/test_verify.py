import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bondsym import expr as ex
from bondsym.grid import Grid, log_uniform_nodes
from bondsym.model import EquationKind, Params, PdeProblem
from bondsym.solutions import TRANSFORMED, BarrierSpec, Generator, get_case
from bondsym.transforms import identity, reduction_chain
from bondsym.verify import (FlowError, FrameError, ResidualReport, barrier_check, boundary_invariance_check,
                            flow_map, pde_residual_sweep, push_generator, roundtrip_check, sample_region,
                            solution_to_solution_check, surface_residual, terminal_check)

DT = Generator.from_text("0", "1", "0", label="d/dt")


def translation_grid():
    return Grid(np.linspace(0.5, 2.0, 61), 0.3 + 0.005 * np.arange(139))


class TestReports:
    def test_record_fields(self):
        r = ResidualReport("c", "id", 3, 0.5, 1.0)
        assert r.record() == {"check": "c", "case": "id", "n": 3, "max": 0.5, "tol": 1.0, "pass": True}

    def test_negative_control_inverts(self):
        r = ResidualReport("c", "id", 3, 0.5, 0.1)
        assert not r.passed
        assert r.as_negative_control().passed

    def test_nan_fails(self):
        assert not ResidualReport("c", "id", 1, float("nan"), 1.0).passed

    @given(st.floats(1e-14, 1e-2), st.floats(1.0, 1e6))
    def test_monotone_in_tolerance(self, tol, factor):
        c = get_case("T-GammaHalf")
        xs = np.linspace(0.5, 2.0, 50)
        rep = terminal_check(c.solution, c.T, xs, tol)
        if rep.passed:
            assert rep.with_tol(tol * factor).passed
        b = get_case("B-Generic")
        rep = barrier_check(b.solution, b.boundary, np.linspace(0.1, 1, 50), tol)
        if rep.passed:
            assert rep.with_tol(tol * factor).passed


class TestSampling:
    def test_deterministic_and_inside(self):
        c = get_case("T-GammaOne")
        x1, t1 = sample_region(c.region, 200, seed=5)
        x2, t2 = sample_region(c.region, 200, seed=5)
        np.testing.assert_array_equal(x1, x2)
        assert np.all(c.region.allowed(x1, t1))
        assert np.all(np.abs(x1 - 1.0) > 0)

    def test_zero_solution_zero_residual(self):
        prob = PdeProblem.from_text(Params(gamma=0.3), "x*u")
        rep = pde_residual_sweep(prob, ex.ZERO, get_case("T-Generic").region, 50)
        assert rep.max_abs_residual == 0.0 and rep.passed

    def test_terminal_bsm(self):
        rep = terminal_check(ex.parse("exp(0.3*(t-1))"), 1.0, np.linspace(0.5, 2, 10))
        assert rep.max_abs_residual == 0.0

    def test_roundtrip_identity(self):
        rep = roundtrip_check(identity(Params()), (np.ones(3), np.zeros(3), np.ones(3)))
        assert rep.max_abs_residual == 0.0


class TestFlows:
    def test_time_translation_exact(self):
        c = get_case("T-GammaHalf")
        g = translation_grid()
        s = flow_map(DT, c.solution, 0.3, g)
        X, T = g.mesh()
        want = ex.evaluate(c.solution, {"x": X[s.mask], "t": T[s.mask] - 0.3})
        assert np.max(np.abs(s.values[s.mask] - want)) < 1e-6
        # nodes earlier than t0 + 0.3 are not covered
        assert not s.mask[:, 0].any()

    def test_epsilon_zero_is_identity(self):
        c = get_case("T-GammaHalf")
        g = translation_grid()
        s = flow_map(DT, c.solution, 0.0, g)
        X, T = g.mesh()
        np.testing.assert_array_equal(s.values, ex.evaluate(c.solution, {"x": X, "t": T}))

    def test_forward_and_back(self):
        c1 = get_case("T-GammaOne")
        chain = reduction_chain(c1.params)
        phi = chain.push_solution(c1.solution)
        g = Grid(log_uniform_nodes(0.3, 1.5, 0.02), log_uniform_nodes(-0.35, -0.035, 0.02), "geometric")
        scale = c1.generators.generators[1]
        fwd = flow_map(scale, phi, 0.1, g)
        back = flow_map(scale, fwd, -0.1, g)
        X, T = g.mesh()
        direct = ex.evaluate(phi, {"x": X, "t": T})
        m = back.mask
        assert m.sum() > 0.5 * m.size
        assert np.max(np.abs(back.values[m] - direct[m])) < 2e-6

    def test_scaling_preserves_transformed_solution(self):
        c1 = get_case("T-GammaOne")
        chain = reduction_chain(c1.params)
        phi = chain.push_solution(c1.solution)
        heat = PdeProblem(chain.params_out, chain.transform_source(c1.source), EquationKind.HEAT)
        g = Grid(log_uniform_nodes(0.3, 1.5, 0.02), log_uniform_nodes(-0.35, -0.035, 0.02), "geometric")
        rep = solution_to_solution_check(c1.generators.generators[1], heat, phi, [0.1], g, 1e-4)
        assert rep.passed, rep

    def test_fixed_and_co_translated_source(self):
        c = get_case("T-GammaHalf")
        g = translation_grid()
        fixed = solution_to_solution_check(DT, c.problem, c.solution, [0.05, -0.05], g, 1e-4)
        assert fixed.passed
        shifted = get_case("T-GammaHalf", params=c.params.with_(beta=2 / 1.05), T=1.05)
        co = solution_to_solution_check(DT, shifted.problem, c.solution, [0.05], g, 1e-4)
        assert co.max_abs_residual > 1e-2

    def test_non_symmetry_negative_control(self):
        c = get_case("T-GammaHalf")
        g = Grid(np.linspace(0.5, 2.0, 61), np.linspace(0.5, 0.99, 99))
        bad = Generator.from_text("x^2", "1", "0")
        rep = solution_to_solution_check(bad, c.problem, c.solution, [0.1], g, 0.1).as_negative_control()
        assert rep.passed and rep.max_abs_residual > 0.1

    def test_expression_needs_grid(self):
        with pytest.raises(FlowError):
            flow_map(DT, ex.parse("x"), 0.1)

    def test_surface_residual_of_exact_surface(self):
        c = get_case("T-GammaHalf")
        g = translation_grid()
        s = flow_map(DT, c.solution, 0.0, g)
        r, ok = surface_residual(c.problem, s)
        # the difference-stencil floor on this grid, well below the 1e-4 flow tolerance
        assert ok.any() and np.max(np.abs(r[ok])) < 5e-5


class TestBoundaryInvariance:
    def test_gamma_one_combination(self):
        c = get_case("B-GammaOne")
        chain = reduction_chain(c.params)
        gens = c.generators.generators
        rep = boundary_invariance_check(gens, c.boundary, 1e-8, transform=chain)
        assert rep.passed and rep.detail["combination_exists"]
        # no single generator does it
        singles = [boundary_invariance_check(g, c.boundary, 1e-8, transform=chain) for g in gens]
        assert not any(r.passed for r in singles)
        # the found combination breaks when the barrier moves
        moved = boundary_invariance_check(gens, c.boundary.shifted(dH=0.1), 1e-8,
                                          coefficients=rep.detail["coefficients"], transform=chain)
        assert not moved.passed

    def test_frame_covariance(self):
        c = get_case("B-GammaOne")
        chain = reduction_chain(c.params)
        gens = c.generators.generators
        rep_t = boundary_invariance_check(gens, c.boundary, 1e-8, transform=chain)
        pulled = [push_generator(chain.inverse(), g) for g in gens]
        rep_o = boundary_invariance_check(pulled, c.boundary, 1e-8, coefficients=rep_t.detail["coefficients"])
        assert rep_o.passed
        assert abs(rep_o.max_abs_residual - rep_t.max_abs_residual) < 1e-8

    def test_frame_mismatch(self):
        c = get_case("B-GammaOne")
        assert c.generators.frame == TRANSFORMED
        with pytest.raises(FrameError):
            boundary_invariance_check(c.generators.generators, c.boundary)

    def test_constant_barrier_time_translation(self):
        spec = BarrierSpec(ex.const(0.7), ex.const(0.2), 0.0, 0.7, 1.0, 1.0)
        rep = boundary_invariance_check(DT, spec, 1e-12)
        assert rep.max_abs_residual == 0.0
