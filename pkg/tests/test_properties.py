import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mlip.gains import dlqr, invariant_box
from mlip.model import GaitParams, a_ct, mat_exp_closed, mat_exp_series
from mlip.orbits import fixed_point_residual, p1_orbit
from mlip.s2s import chain_step, compose_s2s, compose_s2s_at_fa_end, validate_structure
from mlip.simulator import VelocityProfile

import oracles

durations = st.one_of(st.just(0.0), st.floats(0.02, 0.4))
params_st = st.builds(
    GaitParams,
    z0=st.floats(0.5, 1.2),
    rho=st.floats(0.0, 0.25),
    T_FA=durations,
    T_UA=st.floats(0.05, 0.5),
    T_OA=durations,
    mode=st.sampled_from(["heel-to-toe", "toe-to-heel", "flat-footed"]),
)
settings.register_profile("mlip", max_examples=60, deadline=None)
settings.load_profile("mlip")


@given(params_st)
def test_structure_holds(p):
    assert all(c.passed for c in validate_structure(compose_s2s(p)))
    assert all(c.passed for c in validate_structure(compose_s2s_at_fa_end(p)))


@given(params_st, st.floats(-0.5, 0.5), st.floats(-1.5, 1.5), st.floats(-0.6, 0.6))
def test_composition_equals_chain(p, p0, L0, u):
    xi = np.array([p0, L0, 0.0])
    dyn = compose_s2s(p)
    composed = dyn.A_xi @ xi + dyn.B_xi * u + dyn.C_xi
    np.testing.assert_allclose(composed, chain_step(p, xi, u), atol=1e-10)
    np.testing.assert_allclose(composed, oracles.step(p, xi, u), atol=1e-9)


@given(st.floats(0.5, 1.2), st.floats(0.0, 1.0))
def test_expm_paths_agree(z0, t):
    p = GaitParams(z0=z0)
    np.testing.assert_allclose(mat_exp_closed(p, t), mat_exp_series(a_ct(p), t), rtol=1e-12, atol=1e-12)


@given(params_st, st.floats(-2.0, 2.0))
def test_p1_orbit_fixed(p, v):
    dyn = compose_s2s(p)
    orbit = p1_orbit(dyn, v)
    scale = max(1.0, float(np.abs(orbit.x_star).max()))
    assert fixed_point_residual(dyn, orbit) <= 1e-10 * scale


@given(params_st)
def test_lqr_stabilizes(p):
    dyn = compose_s2s(p)
    g = dlqr(dyn.A_M, dyn.B_M)
    assert g.rho_cl < 1


@given(params_st, st.floats(0.0, 0.1), st.floats(0.0, 0.1))
def test_box_bounds_worst_case_orbit(p, w0, w1):
    # an error sequence driven by any admissible w stays inside the invariant box
    dyn = compose_s2s(p)
    A_cl = dlqr(dyn.A_M, dyn.B_M).closed_loop(dyn.A_M, dyn.B_M)
    w_max = np.array([w0, w1])
    box = invariant_box(A_cl, w_max)
    rng = np.random.default_rng(0)
    e = np.zeros(2)
    for _ in range(40):
        e = A_cl @ e + rng.choice([-1.0, 1.0], 2) * w_max
        assert box.contains(e, inflate=1e-9, atol=1e-12)


@given(st.lists(st.tuples(st.floats(0, 20), st.floats(-2, 2)), min_size=1, max_size=6), st.floats(-5, 30))
def test_velocity_profile_bounded(knots, t):
    knots = sorted(knots, key=lambda k: k[0])
    prof = VelocityProfile(tuple(knots))
    vs = [v for _, v in knots]
    assert min(vs) - 1e-12 <= prof(t) <= max(vs) + 1e-12
