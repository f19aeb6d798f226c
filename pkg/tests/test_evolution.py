import warnings

import numpy as np
import pytest

from dnls3.errors import FitWindowEmpty, NonFinite
from dnls3.evolution import (
    EvolveConfig,
    coupling_rhs,
    decay_rate_fit,
    evolve,
    gauge_apply,
    h1_perturbation,
    linear_propagator,
    orbit_distance,
    rhs,
    solitary_wave,
    step,
)
from dnls3.functionals import evaluate
from dnls3.grid import Grid, State, norm_h1
from dnls3.params import PhysParams, WaveParams

from tests.conftest import random_state

PHYS = PhysParams(1.0, 1.0, 1.0)
WAVE0 = WaveParams(1.0, (0.0,))


def smooth_state(grid, amp=1.0):
    """Localized smooth three-component data with all couplings active."""
    mesh = grid.meshgrid()
    r2 = sum(X**2 for X in mesh)
    g = amp * np.exp(-r2)
    u = np.zeros((3, grid.d, *grid.shape), dtype=complex)
    u[0, 0] = g * np.exp(1j * mesh[0])
    u[1, 0] = 0.8 * g
    u[2, 0] = -grid.deriv(g.astype(complex), 0) * np.exp(0.5j * mesh[0])
    return State(grid, u)


def fd_deriv(f, h, axis):
    """4th-order centered difference, the independent discretization oracle."""
    return (
        -np.roll(f, -2, axis=axis)
        + 8 * np.roll(f, -1, axis=axis)
        - 8 * np.roll(f, 1, axis=axis)
        + np.roll(f, 2, axis=axis)
    ) / (12 * h)


class TestRhs:
    def test_zero_state(self, grid1d_box):
        assert np.max(np.abs(rhs(State.zeros(grid1d_box), PHYS).u)) == 0.0

    def test_linear_when_uncoupled(self):
        g = Grid(128, 20.0)
        state = smooth_state(g)
        u = state.u.copy()
        u[1] = 0.0
        u[2] = 0.0
        out = rhs(State(g, u), PHYS)
        expected = 1j * PHYS.alpha * g.laplacian(u[0])
        assert np.max(np.abs(out.u[0] - expected)) < 1e-12
        assert np.max(np.abs(out.u[1:])) < 1e-13

    def test_matches_finite_difference_oracle(self):
        def discrepancy(n):
            g = Grid(n, 20.0)
            h = g.spacing[0]
            state = smooth_state(g)
            u1, u2, u3 = state.u1, state.u2, state.u3
            div_u3 = fd_deriv(u3[0], h, -1)
            q = u1[0] * np.conj(u2[0])
            fd = np.zeros_like(state.u)
            lap = lambda f: fd_deriv(fd_deriv(f, h, -1), h, -1)
            fd[0, 0] = 1j * (PHYS.alpha * lap(u1[0]) + div_u3 * u2[0])
            fd[1, 0] = 1j * (PHYS.beta * lap(u2[0]) + np.conj(div_u3) * u1[0])
            fd[2, 0] = 1j * (PHYS.gamma * lap(u3[0]) - fd_deriv(q, h, -1))
            out = rhs(state, PHYS).u
            return np.max(np.abs(out - fd)), h, np.max(np.abs(out))

        err64, h, scale = discrepancy(64)
        err128, _, _ = discrepancy(128)
        # discrepancy is the oracle's own truncation: fourth order in h
        assert err64 < 20 * h**4 * scale
        assert 12 < err64 / err128 < 20


class TestLinearPropagator:
    def test_identity_at_zero_time(self, rng):
        g = Grid(64, 11.0)
        state = random_state(g, rng)
        out = linear_propagator(state, PHYS, 0.0)
        assert np.max(np.abs(out.u - state.u)) < 1e-14

    def test_single_mode_phase(self):
        g = Grid(64, 2 * np.pi)
        xi0 = 3.0
        u = np.zeros((3, 1, 64), dtype=complex)
        u[0, 0] = np.exp(1j * xi0 * g.axes[0])
        out = linear_propagator(State(g, u), PHYS, 0.37)
        expected = np.exp(-1j * PHYS.alpha * xi0**2 * 0.37) * u[0, 0]
        assert np.max(np.abs(out.u[0, 0] - expected)) < 1e-13

    def test_unitarity_and_reversal(self, rng):
        g = Grid(64, 11.0)
        state = random_state(g, rng)
        fwd = linear_propagator(state, PHYS, 0.83)
        mods = np.abs(g.fft(fwd.u))
        assert np.max(np.abs(mods - np.abs(g.fft(state.u)))) < 1e-13
        back = linear_propagator(fwd, PHYS, -0.83)
        assert np.max(np.abs(back.u - state.u)) < 1e-13


class TestStep:
    def test_zero_coupling_is_exact_propagator(self):
        g = Grid(128, 20.0)
        state = smooth_state(g)
        u = state.u.copy()
        u[1] = 0.0
        u[2] = 0.0
        state = State(g, u)
        out = step(state, PHYS, 0.01, "strang")
        exact = linear_propagator(state, PHYS, 0.01)
        assert np.max(np.abs(out.u - exact.u)) < 1e-14

    @pytest.mark.parametrize("scheme,min_slope", [("strang", 2.0), ("if_rk4", 3.9)])
    def test_self_convergence_order(self, scheme, min_slope):
        g = Grid(128, 20.0)
        state = smooth_state(g)
        T = 0.2

        def run(dt):
            U = state
            n = int(round(T / dt))
            for _ in range(n):
                U = step(U, PHYS, dt, scheme)
            return U

        ref = run(1.25e-4)
        dts = np.array([4e-3, 2e-3, 1e-3])
        errs = np.array([norm_h1(State(g, run(dt).u - ref.u)) for dt in dts])
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert slope >= min_slope

    def test_unknown_scheme(self, grid1d_box):
        with pytest.raises(ValueError):
            step(State.zeros(grid1d_box), PHYS, 0.01, "euler")


class TestEvolve:
    def test_zero_stays_zero(self, grid1d_box):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            final, trace = evolve(
                State.zeros(grid1d_box), PHYS, WAVE0, EvolveConfig(dt=1e-2, t_final=0.1)
            )
        assert np.max(np.abs(final.u)) == 0.0
        assert np.all(trace.Q == 0.0)

    def test_zero_time_single_row(self, grid1d_box):
        state = smooth_state(grid1d_box)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            final, trace = evolve(state, PHYS, WAVE0, EvolveConfig(dt=1e-2, t_final=0.0))
        assert len(trace.times) == 1
        rep = evaluate(state, PHYS, WAVE0)
        assert trace.Q[0] == rep.Q
        assert np.array_equal(final.u, state.u)

    def test_short_conservation(self):
        g = Grid(256, 40.0, dealias=True)
        state = smooth_state(g, amp=0.8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, trace = evolve(state, PHYS, WAVE0, EvolveConfig(dt=1e-3, t_final=0.2, record_stride=20))
        assert trace.drift("Q") < 1e-10
        assert trace.drift("P") < 1e-10
        assert trace.drift("E") < 1e-6

    def test_wellposedness_warning(self, grid1d_box):
        # alpha == gamma sits outside the known local theory
        with pytest.warns(UserWarning):
            evolve(
                State.zeros(grid1d_box),
                PhysParams(1.0, 1.0, 1.0),
                WAVE0,
                EvolveConfig(dt=1e-2, t_final=0.01),
            )

    def test_time_reversal_by_conjugation(self):
        # t -> -t with componentwise conjugation is an exact symmetry
        g = Grid(128, 20.0)
        state = smooth_state(g, amp=0.8)
        cfg = EvolveConfig(dt=1e-3, t_final=0.25, record_stride=1000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            U1, _ = evolve(state, PhysParams(1.0, 1.0, 0.5), WAVE0, cfg)
            back, _ = evolve(State(g, np.conj(U1.u)), PhysParams(1.0, 1.0, 0.5), WAVE0, cfg)
            # one-way self-convergence error as the comparison scale
            half = EvolveConfig(dt=5e-4, t_final=0.25, record_stride=1000)
            U1_half, _ = evolve(state, PhysParams(1.0, 1.0, 0.5), WAVE0, half)
        one_way = norm_h1(State(g, U1.u - U1_half.u))
        reversal = norm_h1(State(g, np.conj(back.u) - state.u))
        assert reversal < 10 * max(one_way, 1e-13)

    def test_divergence_event(self):
        g = Grid(64, 10.0)
        state = smooth_state(g, amp=4.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(NonFinite) as excinfo:
                evolve(state, PHYS, WAVE0, EvolveConfig(dt=50.0, t_final=5000.0, record_stride=1))
        err = excinfo.value
        assert err.time > 0
        assert err.trace.divergence_time == err.time
        assert np.all(np.isfinite(err.trace.Q))


class TestGaugeAndSolitaryWave:
    def test_identity(self, rng):
        g = Grid(64, 11.0)
        state = random_state(g, rng)
        out = gauge_apply(state, 0.0)
        assert np.array_equal(out.u, state.u)
        snap = solitary_wave(state, WAVE0, 0.0)
        assert np.max(np.abs(snap.u - state.u)) < 1e-12

    def test_pi_gauge(self, rng):
        g = Grid(64, 11.0)
        state = random_state(g, rng)
        out = gauge_apply(state, np.pi)
        assert np.max(np.abs(out.u1 - state.u1)) < 1e-12
        assert np.max(np.abs(out.u2 + state.u2)) < 1e-12
        assert np.max(np.abs(out.u3 + state.u3)) < 1e-12

    def test_functionals_gauge_invariant(self, rng):
        g = Grid(64, 11.0)
        wave = WaveParams(1.0, (0.4,))
        state = random_state(g, rng)
        rep = evaluate(state, PHYS, wave)
        rep_g = evaluate(gauge_apply(state, 0.73), PHYS, wave)
        for name in ("Q", "L", "N", "S", "K"):
            assert abs(getattr(rep, name) - getattr(rep_g, name)) < 1e-12 * max(
                1.0, abs(getattr(rep, name))
            )


class TestOrbitDistance:
    def test_self_distance_zero(self):
        g = Grid(256, 40.0)
        phi = smooth_state(g)
        od = orbit_distance(phi, phi)
        assert od.distance < 1e-10

    def test_exact_orbit_point_recovery(self):
        g = Grid(256, 40.0)
        phi = smooth_state(g)
        y0 = 16 * g.spacing[0]
        moved = gauge_apply(State(g, g.translate(phi.u, y0)), 0.7)
        od = orbit_distance(moved, phi)
        assert od.distance < 1e-8
        assert abs(od.shift[0] - y0) < 1e-5
        # diagonal gauge: u1 carries twice the phase of u2/u3
        assert abs(od.phase1 - 1.4) < 1e-5
        assert abs(od.phase2 - 0.7) < 1e-5
        assert abs(od.theta - 0.7) < 1e-5

    def test_relative_phase_recovery(self):
        # a state gauged off the diagonal is still on the minimizer orbit
        g = Grid(256, 40.0)
        phi = smooth_state(g)
        u = phi.u.copy()
        u[0] *= np.exp(0.4j)
        u[1] *= np.exp(1.1j)
        u[2] *= np.exp(1j * (0.4 - 1.1))
        od = orbit_distance(State(g, u), phi)
        assert od.distance < 1e-8
        assert abs(od.phase1 - 0.4) < 1e-5
        assert abs(od.phase2 - 1.1) < 1e-5

    def test_noise_upper_bound(self, rng):
        g = Grid(256, 40.0)
        phi = smooth_state(g)
        delta = 1e-3
        noise = h1_perturbation(g, rng)
        od = orbit_distance(State(g, phi.u + delta * noise.u), phi)
        assert od.distance <= delta * (1 + 1e-6)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            orbit_distance(smooth_state(Grid(64, 10.0)), smooth_state(Grid(128, 10.0)))


class TestDecayFit:
    def test_synthetic_exponential(self):
        g = Grid(512, 40.0)
        x = g.axes[0]
        u = np.zeros((3, 1, 512), dtype=complex)
        for j in range(3):
            u[j, 0] = np.exp(-2.0 * np.abs(x))
        rep = decay_rate_fit(State(g, u), PHYS, WAVE0)
        assert np.all(np.abs(rep.rates - 2.0) < 1e-3)
        assert abs(rep.p_max - 2.0) < 1e-12  # sigma0 = 1 at unit coefficients
        assert abs(rep.half_bound - 1.0) < 1e-12

    def test_speed_shrinks_bound(self):
        rep0 = decay_rate_fit(smooth_state(Grid(64, 20.0)), PHYS, WAVE0)
        wave_c = WaveParams(1.0, (0.8,))
        rep_c = decay_rate_fit(smooth_state(Grid(64, 20.0)), PHYS, wave_c)
        factor = 1.0 - np.sqrt(PHYS.sigma / 4.0) * 0.8
        assert abs(rep_c.p_max - rep0.p_max * factor) < 1e-12

    def test_empty_window(self):
        g = Grid(64, 20.0)
        with pytest.raises(FitWindowEmpty):
            decay_rate_fit(smooth_state(g), PHYS, WAVE0, window=(0.95, 0.96))
