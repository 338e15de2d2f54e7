import math

import numpy as np
import pytest

from sinegordon import (NumericalError, Problem, SchemeState, TimeGrid,
                        Boundary, coupling, ep_fds_step, error_vs_exact,
                        get_problem, global_energy_original, init_state,
                        li_leps_first_step, li_leps_step, make_grid,
                        make_grid_1d, run)
from sinegordon.operators import extrapolate_half_step

from oracles import coupled_step_dense


def rest_state(grid):
    return SchemeState(grid, 0.0, np.zeros(grid.shape), np.zeros(grid.shape),
                       np.ones(grid.shape))


def random_state(grid, seed, with_prev=False):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=grid.shape)
    v = rng.normal(size=grid.shape)
    r = rng.normal(size=grid.shape)
    u_prev = rng.normal(size=grid.shape) if with_prev else None
    return SchemeState(grid, 0.0, u, v, r, u_prev=u_prev)


class TestTimeGrid:
    def test_final_time(self):
        tg = TimeGrid(0.01, 500)
        assert tg.T == pytest.approx(5.0, rel=1e-14)

    def test_from_final_time(self):
        tg = TimeGrid.from_final_time(0.01, 1.0)
        assert tg.m == 100

    def test_rejects_non_divisible(self):
        with pytest.raises(ValueError):
            TimeGrid.from_final_time(0.3, 1.0)

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 10)


class TestInitState:
    def test_zero_data_gives_unit_auxiliary(self):
        p = Problem("zero", 0, 1, 0, 1, 2, Boundary.PERIODIC,
                    lambda x, y: np.zeros_like(x), lambda x, y: np.zeros_like(x))
        g = p.grid(8)
        st = init_state(p, g)
        assert np.all(st.u == 0.0)
        assert np.all(st.v == 0.0)
        assert np.all(st.r == 1.0)
        assert st.u_prev is None
        assert st.t == 0.0

    def test_double_pole_velocity_peak(self):
        p = get_problem("double-pole-1d")
        g = p.grid(400)
        st = init_state(p, g)
        j_center = 200  # x = 0
        assert g.x[j_center] == 0.0
        assert st.v[0, j_center] == pytest.approx(4.0, rel=1e-15)

    def test_ring_center_value(self):
        # frozen from an independent scalar evaluation of 4*atan(exp(3))
        p = get_problem("ring")
        g = p.grid(200)
        st = init_state(p, g)
        j = 100  # x = y = 0 up to round-off in the spacing
        assert g.x[j] == pytest.approx(0.0, abs=1e-13)
        assert st.u[j, j] == pytest.approx(6.084201335824178, rel=1e-13)

    def test_rejects_non_finite_sampling(self):
        p = Problem("bad", 0, 1, 0, 1, 2, Boundary.PERIODIC,
                    lambda x, y: np.full_like(x, np.inf),
                    lambda x, y: np.zeros_like(x))
        with pytest.raises(NumericalError):
            init_state(p, p.grid(4))


class TestLiLepsStep:
    def test_rest_state_is_fixed_point(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = rest_state(g)
        st1 = li_leps_first_step(st, 0.05)
        assert np.all(st1.u == 0.0)
        assert np.all(st1.v == 0.0)
        assert np.all(st1.r == 1.0)
        st2 = li_leps_step(st1, 0.05)
        assert np.all(st2.u == 0.0)
        assert np.all(st2.v == 0.0)
        assert np.all(st2.r == 1.0)

    def test_state_machine_contract(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = rest_state(g)
        with pytest.raises(ValueError):
            li_leps_step(st, 0.05)
        st1 = li_leps_first_step(st, 0.05)
        assert st1.u_prev is not None
        with pytest.raises(ValueError):
            li_leps_first_step(st1, 0.05)
        li_leps_step(st1, 0.05)

    def test_time_advances(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st1 = li_leps_first_step(rest_state(g), 0.25)
        assert st1.t == 0.25
        st2 = li_leps_step(st1, 0.25)
        assert st2.t == 0.5

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_coupled_oracle_1d(self, seed):
        g = make_grid_1d(0, 2, 4)
        st = random_state(g, seed, with_prev=True)
        tau = 0.02
        out = li_leps_step(st, tau)
        d = coupling(extrapolate_half_step(st.u, st.u_prev))
        u_o, v_o, r_o = coupled_step_dense(g, st.u, st.v, st.r, d, tau)
        assert np.max(np.abs(out.u - u_o)) <= 1e-12
        assert np.max(np.abs(out.v - v_o)) <= 1e-12
        assert np.max(np.abs(out.r - r_o)) <= 1e-12

    def test_first_step_matches_dense_oracle(self):
        g = make_grid(0, 1, 0, 1, n1=4, n2=4)
        st = random_state(g, 42)
        tau = 0.05
        out = li_leps_first_step(st, tau)
        d = coupling(st.u)
        u_o, v_o, r_o = coupled_step_dense(g, st.u, st.v, st.r, d, tau)
        assert np.max(np.abs(out.u - u_o)) <= 1e-12
        assert np.max(np.abs(out.v - v_o)) <= 1e-12
        assert np.max(np.abs(out.r - r_o)) <= 1e-12

    def test_table_row_h10_tau100(self):
        p = get_problem("double-pole-1d")
        g = p.grid(400)
        result = run(p, g, TimeGrid.from_final_time(1 / 100, 1.0))
        rep = error_vs_exact(result.state, p)
        assert rep.l2 == pytest.approx(1.2515e-03, rel=0.02)
        assert rep.linf == pytest.approx(1.3017e-03, rel=0.02)

    def test_substituting_back_into_coupled_equations(self):
        # the eliminated solve must satisfy all three original equations to
        # within a small multiple of the solver tolerance
        from sinegordon import laplacian, time_average
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = random_state(g, 11, with_prev=True)
        tau = 0.02
        out = li_leps_step(st, tau, cg_tol=1e-14)
        d = coupling(extrapolate_half_step(st.u, st.u_prev))
        res1 = (out.u - st.u) / tau - time_average(out.v, st.v)
        res2 = ((out.v - st.v) / tau - laplacian(g, time_average(out.u, st.u))
                + d * time_average(out.r, st.r))
        res3 = (out.r - st.r) / tau - 0.5 * d * time_average(out.v, st.v)
        scale = 10 * 1e-14 * max(1.0, g.linf(st.u) + g.linf(st.v)) / tau**2
        assert g.linf(res1) <= 1e-12
        assert g.linf(res2) <= scale
        assert g.linf(res3) <= 1e-12

    def test_solvability_on_randomized_states(self):
        # the system operator dominates the identity, so the solve succeeds
        # across step sizes spanning the experimental regimes
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        for i, tau in enumerate((1e-3, 1e-2, 0.1, 0.25)):
            st = random_state(g, 20 + i, with_prev=True)
            out = li_leps_step(st, tau)
            assert np.all(np.isfinite(out.u))

    def test_rejects_nonpositive_tau(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = random_state(g, 30, with_prev=True)
        with pytest.raises(ValueError):
            li_leps_step(st, 0.0)
        with pytest.raises(ValueError):
            ep_fds_step(random_state(g, 31), -0.1)


class TestEpFdsStep:
    def test_rest_state_is_fixed_point(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = rest_state(g)
        st1 = ep_fds_step(st, 0.05)
        assert np.all(st1.u == 0.0)
        assert np.all(st1.v == 0.0)
        assert np.all(st1.r == 1.0)

    def test_self_starting(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = random_state(g, 7)
        out = ep_fds_step(st, 0.01)
        assert out.t == 0.01
        assert out.u_prev is not None

    def test_own_energy_constant_over_random_starts(self):
        # the conserved quantity of this scheme is the original discrete energy
        rng = np.random.default_rng(8)
        g = make_grid(0, 1, 0, 1, n1=12, n2=12)
        for trial in range(5):
            u = rng.normal(size=g.shape)
            v = rng.normal(size=g.shape)
            st = SchemeState(g, 0.0, u, v, np.sqrt(2.0 - np.cos(u)))
            e0 = global_energy_original(st)
            for _ in range(20):
                st = ep_fds_step(st, 0.02)
                assert abs(global_energy_original(st) - e0) / abs(e0) <= 1e-10

    def test_table_row_h10_tau100(self):
        p = get_problem("double-pole-1d")
        g = p.grid(400)
        result = run(p, g, TimeGrid.from_final_time(1 / 100, 1.0), scheme="ep-fds")
        rep = error_vs_exact(result.state, p)
        assert rep.l2 == pytest.approx(1.1112e-03, rel=0.05)
        assert rep.linf == pytest.approx(1.0535e-03, rel=0.05)

    def test_fixed_point_failure_raises(self):
        g = make_grid(0, 1, 0, 1, n1=8, n2=8)
        st = random_state(g, 9)
        with pytest.raises(NumericalError):
            ep_fds_step(st, 0.01, fp_max=0)


class TestRun:
    def test_zero_steps_returns_initial_state(self):
        p = get_problem("double-pole-1d")
        g = p.grid(50)
        result = run(p, g, TimeGrid(0.01, 0))
        st0 = init_state(p, g)
        np.testing.assert_array_equal(result.state.u, st0.u)
        np.testing.assert_array_equal(result.state.v, st0.v)
        assert result.steps == 0

    def test_recorder_cadence(self):
        p = get_problem("double-pole-1d")
        g = p.grid(50)
        seen = []
        run(p, g, TimeGrid(0.02, 5), recorders=(lambda k, st: seen.append((k, st.t)),))
        assert [k for k, _ in seen] == [0, 1, 2, 3, 4, 5]
        assert seen[-1][1] == pytest.approx(0.1, rel=1e-12)

    def test_table_second_row_and_order(self):
        p = get_problem("double-pole-1d")
        g = p.grid(800)
        result = run(p, g, TimeGrid.from_final_time(1 / 200, 1.0))
        rep = error_vs_exact(result.state, p)
        assert rep.l2 == pytest.approx(3.1285e-04, rel=0.02)
        order = math.log2(1.2515e-03 / rep.l2)
        assert order == pytest.approx(2.00, abs=0.05)

    def test_line_kink_dirichlet_row(self):
        p = get_problem("line-kink-2d")
        result = run(p, p.grid(28), TimeGrid.from_final_time(1 / 100, 1.0))
        rep = error_vs_exact(result.state, p)
        assert rep.l2 == pytest.approx(1.2129e-01, rel=0.03)
        assert rep.linf == pytest.approx(2.7812e-02, rel=0.03)

    def test_line_kink_dirichlet_row_ep_fds(self):
        p = get_problem("line-kink-2d")
        result = run(p, p.grid(28), TimeGrid.from_final_time(1 / 100, 1.0),
                     scheme="ep-fds")
        rep = error_vs_exact(result.state, p)
        assert rep.l2 == pytest.approx(1.2132e-01, rel=0.03)
        assert rep.linf == pytest.approx(2.7774e-02, rel=0.03)

    def test_unknown_scheme_rejected(self):
        p = get_problem("double-pole-1d")
        with pytest.raises(ValueError):
            run(p, p.grid(50), TimeGrid(0.01, 1), scheme="leapfrog")
