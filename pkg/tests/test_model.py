import math

import numpy as np
import pytest
from scipy.integrate import quad_vec

from mlip.model import (
    GaitParams,
    WalkingMode,
    a_ct,
    domain_map,
    flow_closed,
    flow_input_column,
    mat_exp_closed,
    mat_exp_series,
    reset_map,
    zmp_rate,
    zmp_travel,
)

from conftest import random_params


def test_defaults_are_reference_gait(gait):
    assert (gait.z0, gait.rho, gait.T_FA, gait.T_UA, gait.T_OA) == (0.8, 0.16, 0.2, 0.2, 0.1)
    assert gait.T == pytest.approx(0.5)
    assert gait.lam == pytest.approx(math.sqrt(9.81 / 0.8))


@pytest.mark.parametrize("mode, sign", [("heel-to-toe", 1), ("toe-to-heel", -1), ("flat-footed", 0)])
def test_zmp_travel_sign(mode, sign):
    assert zmp_travel(mode, 0.16) == sign * 0.16


def test_mode_aliases():
    assert WalkingMode.parse("HeelToToe") is WalkingMode.HEEL_TO_TOE
    assert WalkingMode.parse("flat") is WalkingMode.FLAT_FOOTED
    with pytest.raises(ValueError):
        WalkingMode.parse("moonwalk")


@pytest.mark.parametrize(
    "change",
    [{"z0": 0.0}, {"z0": -1.0}, {"rho": -0.1}, {"T_FA": -0.1}, {"T_FA": 0, "T_UA": 0, "T_OA": 0}, {"z0": float("nan")}],
)
def test_invalid_params_rejected(change):
    with pytest.raises(ValueError):
        GaitParams().replace(**change)


def test_from_dict_rejects_unknown_key():
    with pytest.raises(KeyError, match="zz"):
        GaitParams.from_dict({"zz": 1.0})


def test_params_round_trip(gait):
    assert GaitParams.from_dict(gait.to_dict()) == gait


def test_closed_form_matches_expm(rng):
    for _ in range(200):
        p = GaitParams(z0=rng.uniform(0.5, 1.2))
        t = rng.uniform(0, 1)
        np.testing.assert_allclose(mat_exp_closed(p, t), mat_exp_series(a_ct(p), t), rtol=1e-12, atol=1e-12)


def test_expm_at_zero_is_identity(gait):
    np.testing.assert_array_equal(mat_exp_closed(gait, 0.0), np.eye(3))


def test_series_rejects_bad_input():
    with pytest.raises(ValueError):
        mat_exp_series(np.ones((2, 3)))
    with pytest.raises(ValueError):
        mat_exp_series(np.full((2, 2), np.nan))


def test_input_column_is_integral_of_flow(gait):
    for T in (0.05, 0.2, 0.7):
        integral, _ = quad_vec(lambda s: mat_exp_closed(gait, s)[:, 2], 0.0, T, epsabs=1e-14)
        np.testing.assert_allclose(flow_input_column(gait, T), integral, atol=1e-12)


def test_domain_map_zero_duration_is_identity(gait):
    m = domain_map(gait.replace(T_FA=0.0), "FA")
    np.testing.assert_array_equal(m.A, np.eye(3))
    np.testing.assert_array_equal(m.B, np.zeros(3))


def test_domain_map_moves_zmp_by_input(gait):
    xi = np.array([0.1, 0.3, 0.0])
    out = domain_map(gait, "OA").apply(xi, 0.4)
    assert out[2] == pytest.approx(0.4, abs=1e-15)


def test_flow_closed_matches_ode(gait):
    from scipy.integrate import solve_ivp

    xi0 = np.array([-0.1, 0.25, 0.0])
    rate = 1.3

    def f(t, x):
        return a_ct(gait) @ x + np.array([0, 0, rate])

    sol = solve_ivp(f, (0, 0.3), xi0, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(flow_closed(gait, xi0, rate, 0.3), sol.y[:, -1], atol=1e-9)


def test_reset_remark_zero_oa(gait):
    r = reset_map(gait.replace(T_OA=0.0), "OA->FA")
    assert r.B_delta[2] == 0.0
    r = reset_map(gait, "OA->FA")
    np.testing.assert_array_equal(r.B_delta, [-1.0, 0.0, -1.0])
    np.testing.assert_allclose(r.C_delta, [-gait.l, 0.0, -gait.l])


def test_identity_resets(gait):
    for edge in ("UA->OA", "FA->UA"):
        r = reset_map(gait, edge)
        np.testing.assert_array_equal(r.apply(np.array([1.0, 2.0, 3.0]), 0.5), [1.0, 2.0, 3.0])


def test_zmp_rates(gait):
    assert zmp_rate(gait, "OA", 0.5) == pytest.approx(0.5 / 0.1)
    assert zmp_rate(gait, "FA", 0.5) == pytest.approx(0.16 / 0.2)
    assert zmp_rate(gait, "UA", 0.5) == 0.0


def test_random_params_valid(rng):
    for _ in range(50):
        p = random_params(rng)
        assert p.T > 0
