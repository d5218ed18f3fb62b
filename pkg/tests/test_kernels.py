import numpy as np
import pytest

from mlip import _kernels
from mlip.model import domain_map, zmp_rate


def _run(fn, x0, n=300, h=1e-3, rate=0.8, z0=0.8, g=9.81, lag=0.0, limit=np.inf, forces=None):
    forces = np.zeros((0, 3)) if forces is None else np.asarray(forces, float)
    samples = np.empty((n, 5))
    x = fn(np.asarray(x0, float), 0.0, h, n, rate, z0, g, lag, limit, forces, samples)
    return x, samples


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("lag, limit", [(0.0, np.inf), (0.03, np.inf), (0.0, 0.5)])
def test_jit_matches_numpy(lag, limit):
    x0 = [0.05, -0.2, 0.01, 0.0]
    forces = [[0.1, 0.05, 1.5]]
    a = _run(_kernels.integrate_domain_numpy, x0, lag=lag, limit=limit, forces=forces)
    b = _run(_kernels.integrate_domain_jit, x0, lag=lag, limit=limit, forces=forces)
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-14)
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-14)


@pytest.mark.parametrize("domain", ["FA", "UA", "OA"])
def test_exact_plant_matches_closed_form(gait, domain):
    T = gait.duration(domain)
    n = int(round(T / 1e-3))
    u = 0.35
    xi0 = np.array([0.04, 0.3, 0.0])
    rate = zmp_rate(gait, domain, u)
    x, samples = _kernels.integrate_domain_raw(np.r_[xi0, 0.0], 0.0, T / n, n, rate, gait.z0, gait.g)
    d = gait.l if domain == "FA" else (u if domain == "OA" else 0.0)
    np.testing.assert_allclose(x[:3], domain_map(gait, domain).apply(xi0, d), atol=1e-8)
    assert samples[-1, 0] == pytest.approx(T)


def test_force_impulse_without_gravity(gait):
    # g -> 0 decouples L from p; a force a at CoM height adds moment z0 * a
    a, T, n = 1.5, 0.2, 200
    x0 = np.array([0.0, 0.1, 0.0, 0.0])
    g = 1e-300
    free, _ = _kernels.integrate_domain_raw(x0, 0.0, T / n, n, 0.0, gait.z0, g)
    pushed, _ = _kernels.integrate_domain_raw(x0, 0.0, T / n, n, 0.0, gait.z0, g, forces=[[0.0, T + 1.0, a]])
    assert pushed[1] - free[1] == pytest.approx(gait.z0 * a * T, abs=1e-12)


def test_rate_limit_falls_short(gait):
    n, T = 100, 0.1
    rate = 4.0  # would move 0.4 m
    x, _ = _kernels.integrate_domain_raw(np.zeros(4), 0.0, T / n, n, rate, gait.z0, gait.g, rate_limit=1.0)
    assert x[2] == pytest.approx(0.1, abs=1e-12)
    assert x[3] == pytest.approx(0.4, abs=1e-12)


def test_lag_tracks_reference(gait):
    n, T = 2000, 2.0
    x, s = _kernels.integrate_domain_raw(np.array([0, 0, 0, 0.3]), 0.0, T / n, n, 0.0, gait.z0, gait.g, lag=0.05)
    assert x[2] == pytest.approx(0.3, abs=1e-6)
    assert np.all(np.diff(s[:, 4]) == 0.0)


def test_kernel_selection_flag():
    assert _kernels.USE_NUMBA == (_kernels.integrate_domain_kernel is _kernels.integrate_domain_jit)
