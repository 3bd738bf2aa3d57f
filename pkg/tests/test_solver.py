import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solves import solve_scenario
from wte_reach import kernels
from wte_reach.errors import ConfigError, GridMismatchError, NumericalInstabilityError
from wte_reach.grid import GridSpec, ScalarField, trilinear
from wte_reach.hamiltonian import hamiltonian
from wte_reach.levelset import distance_field, terminal_field
from wte_reach.model import WteParams, scenario, reference_params
from wte_reach.solver import SolveConfig, cfl_timestep, llf_numerical_hamiltonian, solve, step

P = reference_params()
FROZEN = WteParams.unchecked(beta=0.0, gamma=0.0, alpha=0.0, alpha_K=0.0, q_max=0.0, I_max=0.0,
                             eta_min=0.0, eta_max=0.0)


def small_spec(n):
    return GridSpec.uniform(P.domain_lo, P.domain_hi, n)


def reference_step(params, V, gD, spec, dt):
    """Per-node loop written without the library's helpers."""
    b, g, mu, a, aK = params.beta, params.gamma, params.mu, params.alpha, params.alpha_K
    qm, Im, e0, e1 = params.q_max, params.I_max, params.eta_min, params.eta_max
    nE, nK, nx = V.shape
    h = spec.spacing
    out = np.empty_like(V)
    for k, j, i in itertools.product(range(nE), range(nK), range(nx)):
        x = spec.mins[0] + i * h[0]
        K = spec.mins[1] + j * h[1]
        E = spec.mins[2] + k * h[2]
        idx = [i, j, k]
        sm, sp = [], []
        for ax, n in enumerate((nx, nK, nE)):
            def val(t):
                c = list(idx)
                c[ax] = t
                return V[c[2], c[1], c[0]]
            def obst(t):
                c = list(idx)
                c[ax] = t
                return gD[c[2], c[1], c[0]]
            here = val(idx[ax])
            left = val(idx[ax] - 1) if idx[ax] > 0 else max(here, obst(idx[ax]) + h[ax])
            right = val(idx[ax] + 1) if idx[ax] < n - 1 else max(here, obst(idx[ax]) + h[ax])
            sm.append((here - left) / h[ax])
            sp.append((right - here) / h[ax])
        px, pK, pE = [(u + w) / 2 for u, w in zip(sm, sp)]
        Hv = (-b * x * px - g * K * pK - (a * E + aK * K) * pE + max(px * e0, px * e1)
              + min(0.0, pK * Im) + min(0.0, (mu * pE - px) * qm * K * x))
        fx = [e - (b + q * K) * x for e in (e0, e1) for q in (0, qm)]
        fK = [I - g * K for I in (0, Im)]
        fE = [mu * q * K * x - a * E - aK * K for q in (0, qm)]
        C = [max(abs(f) for f in fs) for fs in (fx, fK, fE)]
        diss = sum(c * (u - w) for c, u, w in zip(C, sp, sm)) / 2
        out[k, j, i] = max(V[k, j, i] + dt * (Hv + diss), gD[k, j, i])
    return out


class TestCfl:
    def test_single_term(self):
        p = WteParams.unchecked(beta=0.0, gamma=0.0, alpha=0.0, alpha_K=0.0, q_max=0.0, I_max=1.0,
                                eta_min=1.0, eta_max=1.0)
        spec = GridSpec((0, 0, 0), (5, 5, 5), (11, 11, 11))
        assert cfl_timestep(p, spec, 0.9) == pytest.approx(0.9 / (1 / 0.5 + 1 / 0.5))

    def test_default_domain_corner_enumeration(self):
        spec = GridSpec(P.domain_lo, P.domain_hi, (101, 41, 201))
        h = spec.spacing
        best = 0.0
        for z in itertools.product(*zip(P.domain_lo, P.domain_hi)):
            x, K, E = z
            Cx = max(abs(e - (P.beta + q * K) * x) for e in (P.eta_min, P.eta_max) for q in (0, P.q_max))
            CK = max(abs(I - P.gamma * K) for I in (0, P.I_max))
            CE = max(abs(P.mu * q * K * x - P.alpha * E - P.alpha_K * K) for q in (0, P.q_max))
            best = max(best, Cx / h[0] + CK / h[1] + CE / h[2])
        assert cfl_timestep(P, spec, 0.9) == pytest.approx(0.9 / best, rel=1e-12)

    def test_halving_h_halves_dt(self):
        a = cfl_timestep(P, small_spec(11))
        b = cfl_timestep(P, small_spec(21))
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_frozen_is_config_error(self):
        with pytest.raises(ConfigError):
            cfl_timestep(FROZEN, small_spec(5))

    def test_config_validation(self):
        for kw in (dict(cfl_safety=0.0), dict(cfl_safety=1.5), dict(snapshot_stride=0),
                   dict(steady_tol=-1.0), dict(horizon=-1.0)):
            with pytest.raises(ConfigError):
                SolveConfig(**kw)


state = st.tuples(st.floats(0, 50), st.floats(0, 20), st.floats(0, 100))
slope = st.tuples(*[st.floats(-5, 5)] * 3)


class TestNumericalHamiltonian:
    def test_zero(self):
        assert llf_numerical_hamiltonian(P, (10, 5, 50), (0, 0, 0), (0, 0, 0)) == 0

    @given(state, slope)
    def test_consistency(self, z, p):
        assert llf_numerical_hamiltonian(P, z, p, p) == hamiltonian(P, z, p)
        assert llf_numerical_hamiltonian(P, z, p, p, backward=True) == -hamiltonian(P, z, p)

    @given(state, slope, slope, st.integers(0, 2), st.floats(1e-3, 1.0), st.booleans())
    def test_monotone_in_slopes(self, z, pm, pp, ax, delta, backward):
        base = llf_numerical_hamiltonian(P, z, pm, pp, backward)
        up = list(pp)
        up[ax] += delta
        down = list(pm)
        down[ax] -= delta
        tol = 1e-9 * (1 + abs(base))
        assert llf_numerical_hamiltonian(P, z, pm, up, backward) <= base + tol
        assert llf_numerical_hamiltonian(P, z, down, pp, backward) <= base + tol


def _random_field(spec, seed, scale=5.0):
    rng = np.random.default_rng(seed)
    return ScalarField(spec, rng.normal(scale=scale, size=spec.size), 30.0)


class TestStep:
    def test_reference_loop_oracle(self):
        params = scenario(2).params
        spec = small_spec(8)
        V = _random_field(spec, 11)
        gD = distance_field(spec, params.domain_box)
        dt = cfl_timestep(params, spec)
        got = step(params, V, gD, dt).storage
        want = reference_step(params, V.storage, gD.storage, spec, dt)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_frozen_constant_unchanged(self):
        spec = small_spec(6)
        V = ScalarField(spec, np.full(spec.size, 1.0))
        gD = distance_field(spec, P.domain_box)
        out = step(FROZEN, V, gD, 0.1)
        np.testing.assert_array_equal(out.values, V.values)

    def test_obstacle_pinned(self):
        # where the reference candidate falls below the obstacle the node stays on it
        params = scenario(1).params
        spec = small_spec(9)
        gD = distance_field(spec, params.domain_box)
        dt = cfl_timestep(params, spec)
        out = step(params, gD, gD, dt).storage
        assert np.all(out >= gD.storage)
        want = reference_step(params, gD.storage, gD.storage, spec, dt)
        np.testing.assert_allclose(out, want, atol=1e-12, rtol=0)

    def test_time_label_decreases(self):
        spec = small_spec(5)
        gD = distance_field(spec, P.domain_box)
        dt = cfl_timestep(P, spec)
        assert step(P, _random_field(spec, 0), gD, dt).time_label == pytest.approx(30.0 - dt)

    def test_grid_mismatch(self):
        gD = distance_field(small_spec(6), P.domain_box)
        with pytest.raises(GridMismatchError):
            step(P, _random_field(small_spec(5), 0), gD, 1e-4)

    def test_cfl_violation(self):
        spec = small_spec(5)
        gD = distance_field(spec, P.domain_box)
        with pytest.raises(ConfigError):
            step(P, _random_field(spec, 0), gD, 2 * cfl_timestep(P, spec, 1.0))

    def test_nan_names_node(self):
        spec = small_spec(5)
        vals = np.zeros(spec.size)
        vals[spec.flat_index((2, 3, 1))] = np.nan
        gD = distance_field(spec, P.domain_box)
        with pytest.raises(NumericalInstabilityError, match=r"node \(\d, \d, \d\)"):
            step(P, ScalarField(spec, vals), gD, cfl_timestep(P, spec))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
    def test_monotone(self, seed, bump):
        params = scenario(2).params
        spec = small_spec(6)
        rng = np.random.default_rng(seed)
        a = rng.normal(scale=5.0, size=spec.size)
        b = a + rng.random(spec.size) * bump
        gD = distance_field(spec, params.domain_box)
        dt = cfl_timestep(params, spec)
        sa = step(params, ScalarField(spec, a), gD, dt).values
        sb = step(params, ScalarField(spec, b), gD, dt).values
        assert np.all(sa <= sb + 1e-10)


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled backend not built")
class TestBackends:
    def test_compiled_matches_numpy_bitwise(self):
        params = scenario(2).params
        spec = GridSpec(params.domain_lo, params.domain_hi, (13, 9, 11))
        gD = distance_field(spec, params.domain_box)
        dt = cfl_timestep(params, spec)
        for seed in range(5):
            V = _random_field(spec, seed)
            a = step(params, V, gD, dt, backend="compiled")
            b = step(params, V, gD, dt, backend="numpy")
            assert a.values.tobytes() == b.values.tobytes()

    def test_thread_count_does_not_matter(self):
        params = scenario(1).params
        spec = small_spec(17)
        cfg = dict(horizon=0.5, backend="compiled")
        one = solve(params, spec, SolveConfig(threads=1, **cfg))
        many = solve(params, spec, SolveConfig(threads=4, **cfg))
        assert one.final_field.values.tobytes() == many.final_field.values.tobytes()


class TestSolve:
    def test_zero_horizon(self):
        spec = small_spec(6)
        res = solve(P, spec, SolveConfig(horizon=0.0))
        want = terminal_field(spec, P.target_box, P.domain_box)
        np.testing.assert_array_equal(res.final_field.values, want.values)
        assert res.steps_taken == 0 and res.final_field.time_label == 0.0

    def test_frozen_dynamics(self):
        spec = small_spec(6)
        res = solve(FROZEN, spec, SolveConfig(horizon=30.0))
        want = terminal_field(spec, FROZEN.target_box, FROZEN.domain_box)
        np.testing.assert_array_equal(res.final_field.values, want.values)

    def test_snapshots_and_obstacle(self):
        params = scenario(2).params
        spec = small_spec(9)
        res = solve(params, spec, SolveConfig(horizon=2.0, snapshot_stride=7))
        labels = [t for t, _ in res.snapshots]
        assert labels[0] == 2.0 and labels[-1] == 0.0
        assert all(a > b for a, b in zip(labels, labels[1:]))
        gD = distance_field(spec, params.domain_box).values
        for t, f in res.snapshots:
            assert f.time_label == t
            assert np.all(f.values >= gD)
        assert res.dt_used * res.steps_taken == pytest.approx(2.0)
        assert res.dt_used <= cfl_timestep(params, spec) * (1 + 1e-12)
        assert res.final_field is res.snapshots[-1][1]

    def test_snapshots_do_not_alias(self):
        res = solve(P, small_spec(5), SolveConfig(horizon=1.0, snapshot_stride=1))
        blobs = [f.values.tobytes() for _, f in res.snapshots[-3:]]
        assert len(set(blobs)) == 3

    def test_steady_stop(self):
        res = solve(P, small_spec(5), SolveConfig(horizon=30.0, steady_tol=1e3))
        assert res.steps_taken == 1 and res.final_field.time_label == 0.0

    def test_max_steps(self):
        with pytest.raises(ConfigError):
            solve(P, small_spec(9), SolveConfig(max_steps=10))

    def test_progress_hook(self):
        seen = []
        solve(P, small_spec(5), SolveConfig(horizon=0.2), progress=lambda s, n, c: seen.append((s, n)))
        assert seen[0][0] == 1 and seen[-1][0] == seen[-1][1]

    def test_instability_detected(self, monkeypatch):
        real = kernels.llf_update

        def growing(V, gD, *args):
            bad = real(V, gD, *args)
            args[3][...] *= 1.5  # out
            return bad
        monkeypatch.setattr(kernels, "llf_update", growing)
        with pytest.raises(NumericalInstabilityError, match="exceeds 10x"):
            solve(scenario(2).params, small_spec(9), SolveConfig(horizon=30.0))

    def test_scenario1_reference_state_reachable(self):
        res = solve_scenario(1, 26)
        assert trilinear(res.final_field, (10, 5, 50)) <= 0.0


@settings(max_examples=5, deadline=None)
@given(st.floats(0.0, 2.5), st.floats(0.0, 2.5))
def test_contraction_property(lo_pad, hi_pad):
    base = scenario(1).params
    spec = small_spec(9)
    cfg = SolveConfig(horizon=3.0)
    narrow = solve(base, spec, cfg).final_field.values
    wide = solve(base.with_inflow(25 - lo_pad, 25 + hi_pad), spec, cfg).final_field.values
    assert np.all(wide >= narrow - 1e-9)
