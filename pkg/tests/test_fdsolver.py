import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bondsym import expr as ex
from bondsym.fdsolver import (BarrierError, SolverConfig, SolverError, convergence_order, make_grid,
                              solve_barrier, solve_terminal, surface_error)
from bondsym.grid import Grid
from bondsym.model import Params, PdeProblem, classical_reduction
from bondsym.solutions import BarrierSpec, get_case

VALIDATION = SolverConfig(far_field="dirichlet", near_field="dirichlet")


def bsm(beta=0.3):
    return classical_reduction("BSM").instantiate(beta=beta, rho=0.5)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"theta": 1.5}, {"far_field": "neumann"}, {"near_field": "x"},
                                    {"barrier": "penalty"}, {"newton_iterations": 0}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_grid_spacing_follows_gamma(self):
        lg = make_grid(Params(gamma=0.5), (0.25, 4), (0, 1), 5, 3)
        np.testing.assert_allclose(np.diff(np.log(lg.x_nodes)), math.log(16) / 4)
        un = make_grid(Params(gamma=0.3), (0.25, 4), (0, 1), 5, 3)
        np.testing.assert_allclose(np.diff(un.x_nodes), 3.75 / 4)
        with pytest.raises(ValueError):
            make_grid(Params(), (0.0, 1.0), (0, 1), 5, 3)


class TestTerminal:
    def test_bsm_constant_solution(self):
        beta = 0.3
        g = make_grid(bsm(beta).params, (0.5, 2.0), (0.0, 1.0), 50, 1001)
        s = solve_terminal(bsm(beta), g, ex.const(1.0))
        X, T = g.mesh()
        assert np.max(np.abs(s.values - np.exp(beta * (T - 1.0)))) < 1e-8

    def test_terminal_slice_is_payoff(self):
        c = get_case("T-Generic")
        g = make_grid(c.params, (0.5, 2.0), (0.5, 1.0), 40, 20)
        pay = ex.parse("exp(-(x-1)^2) + x")
        s = solve_terminal(c.problem, g, pay)
        np.testing.assert_array_equal(s.values[:, -1], ex.evaluate(pay, {"x": g.x_nodes, "t": 1.0}))

    def test_start_at_maturity(self):
        prob = PdeProblem.from_text(Params(gamma=0.5), "0")
        g = Grid(np.linspace(0.5, 2, 9), np.array([1.0]))
        s = solve_terminal(prob, g, ex.const(1.0))
        assert np.all(s.values == 1.0)

    def test_gamma_half_closed_form(self):
        c = get_case("T-GammaHalf")
        g = make_grid(c.params, (0.25, 4.0), (0.5, 1.0), 200, 200)
        s = solve_terminal(c.problem, g, c.solution, VALIDATION, boundary=c.solution)
        assert surface_error(s, c.solution) < 5e-4

    def test_dirichlet_needs_boundary(self):
        c = get_case("T-GammaHalf")
        g = make_grid(c.params, (0.25, 4.0), (0.5, 1.0), 20, 20)
        with pytest.raises(SolverError):
            solve_terminal(c.problem, g, c.solution, VALIDATION)

    def test_default_rules_are_stable(self):
        """The linear far field is a modelling error that does not grow under refinement."""
        c = get_case("T-Generic")
        errs = []
        for n in (50, 100, 200):
            g = make_grid(c.params, (0.5, 2.0), (0.5, 1.0), n, n)
            errs.append(surface_error(solve_terminal(c.problem, g, c.solution), c.solution))
        assert max(errs) < 5e-3
        assert max(errs) / min(errs) < 1.05

    def test_linear_far_field_exact_for_affine_solution(self):
        # u = x + 1 solves u_t + a u_xx + b u_x - f = 0 with f = b(x)
        p = Params(alpha=0.1, beta=0.2, gamma=0.5, rho=0.7)
        prob = PdeProblem.from_text(p, "alpha + beta*x")
        g = make_grid(p, (0.5, 3.0), (0.0, 1.0), 30, 30)
        s = solve_terminal(prob, g, ex.parse("x + 1"))
        X, _ = g.mesh()
        assert np.max(np.abs(s.values - (X + 1))) < 1e-10  # rounding only


class TestConvergence:
    @pytest.mark.parametrize("cid,xr,tr", [
        ("T-Generic", (0.5, 2.0), (0.5, 1.0)),
        ("T-GammaOne", (1.2, 3.0), (0.1, 0.9)),
        ("T-GammaHalf", (0.25, 4.0), (0.5, 1.0)),
        ("T-DeltaChain", (0.5, 2.0), (0.5, 1.0)),
    ])
    def test_second_order_terminal(self, cid, xr, tr):
        c = get_case(cid)
        r = convergence_order(c.problem, c.solution, [(25, 25), (50, 50), (100, 100), (200, 200)],
                              VALIDATION, xr, tr)
        assert r.order >= 1.7 and r.monotone

    @pytest.mark.parametrize("cid", ["B-Generic", "B-GammaOne", "B-GammaHalf", "B-DeltaChain"])
    def test_second_order_barrier(self, cid):
        c = get_case(cid)
        r = convergence_order(c.problem, c.solution, [(25, 25), (50, 50), (100, 100), (200, 200)],
                              SolverConfig(far_field="dirichlet"), (0.3, 2.0), (0.1, 1.0), spec=c.boundary)
        assert r.order >= 1.7 and r.monotone

    def test_implicit_euler_first_order(self):
        c = get_case("T-GammaHalf")
        r = convergence_order(c.problem, c.solution, [(50, 50), (100, 100), (200, 200)],
                              SolverConfig(theta=1.0, far_field="dirichlet", near_field="dirichlet"),
                              (0.25, 4.0), (0.5, 1.0))
        assert abs(r.order - 1.0) < 0.3

    def test_exact_solution_reported_exact(self):
        p = bsm()
        r = convergence_order(p, ex.const(1.0) * ex.parse("exp(0*t)"), [(10, 3), (20, 3), (40, 3)],
                              VALIDATION, (0.5, 2.0), (0.0, 1.0), payoff=ex.const(1.0))
        assert not r.exact  # beta*u source makes u = 1 wrong
        zero = PdeProblem.from_text(Params(gamma=1.0), "0")
        r = convergence_order(zero, ex.const(1.0), [(10, 3), (20, 3), (40, 3)], VALIDATION, (0.5, 2.0), (0.0, 1.0))
        assert r.exact and r.order == math.inf


class TestBarrier:
    def test_boundary_nodes_exact_and_error(self):
        b = get_case("B-Generic")
        g = make_grid(b.params, (0.3, 2.0), (0.1, b.T), 200, 200)
        s = solve_barrier(b.problem, g, b.boundary, b.solution, SolverConfig(far_field="dirichlet"),
                          boundary=b.solution)
        R = ex.evaluate(b.boundary.R, {"t": g.t_nodes})
        assert np.max(np.abs(s.values[0] - R)) <= 1e-15 * max(1.0, np.max(np.abs(R)))
        H = ex.evaluate(b.boundary.H, {"t": g.t_nodes})
        np.testing.assert_allclose(s.x[0], H, rtol=1e-15)
        assert surface_error(s, b.solution) < 1e-3

    def test_constant_barrier_matches_terminal_solve(self):
        c = get_case("T-GammaHalf")
        H = 1.0
        g = make_grid(c.params, (0.25, 4.0), (0.5, 1.0), 201, 201)
        st_ = solve_terminal(c.problem, g, c.solution, VALIDATION, boundary=c.solution)
        above = g.x_nodes >= H - 1e-12
        spec = BarrierSpec(ex.const(H), ex.substitute(c.solution, {"x": ex.const(H)}), 0.0, H, 1.0, 1.0)
        gb = Grid(np.linspace(0.9, 4.0, int(above.sum())), g.t_nodes)
        sb = solve_barrier(c.problem, gb, spec, c.solution, SolverConfig(far_field="dirichlet"),
                           boundary=c.solution)
        np.testing.assert_allclose(sb.x[:, 0], g.x_nodes[above], rtol=1e-14)
        disc = max(surface_error(st_, c.solution), surface_error(sb, c.solution))
        assert np.max(np.abs(sb.values - st_.values[above])) <= 2 * disc

    def test_barrier_outside_grid(self):
        b = get_case("B-Generic")
        g = make_grid(b.params, (0.6, 2.0), (0.1, 1.0), 20, 20)
        with pytest.raises(BarrierError):
            solve_barrier(b.problem, g, b.boundary, b.solution)


@settings(max_examples=20)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.2, 1.5))
def test_maximum_principle_implicit(c, rho):
    """theta = 1, f = 0, no drift: values stay within the payoff range (Dirichlet near field)."""
    p = Params(gamma=0.5, rho=rho)
    prob = PdeProblem.from_text(p, "0")
    pay = ex.parse(f"{c[0]}*sqrt(x) + {c[1]}*exp(-(x-1)^2*{abs(c[2]) + 0.5}) + {c[3]}*x")
    g = make_grid(p, (0.2, 3.0), (0.0, 1.0), 60, 40)
    s = solve_terminal(prob, g, pay, SolverConfig(theta=1.0, near_field="dirichlet"), boundary=pay)
    lo, hi = s.values[:, -1].min(), s.values[:, -1].max()
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    assert s.values.min() >= lo - tol and s.values.max() <= hi + tol


def test_backends_give_same_surface():
    code = ("import numpy as np; from bondsym.solutions import get_case; from bondsym.fdsolver import *;"
            "c=get_case('T-GammaHalf'); g=make_grid(c.params,(0.25,4),(0.5,1),40,40);"
            "s=solve_terminal(c.problem,g,c.solution); print(float(s.values.sum()))")
    out = {}
    for pure in ("0", "1"):
        env = {**os.environ, "BONDSYM_PURE": pure}
        out[pure] = float(subprocess.run([sys.executable, "-c", code], env=env, check=True,
                                         capture_output=True, text=True).stdout)
    assert out["0"] == pytest.approx(out["1"], rel=1e-13)
