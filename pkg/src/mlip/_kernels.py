"""RK4 inner loops for the plant integration.

The kernels are written in the numba-compatible subset of Python/numpy. The
module-level functions are the plain numpy variant; compiled copies of the
same code are made with ``numba.njit``. ``integrate_domain_kernel`` is the compiled variant
unless numba is missing or ``MLIP_DISABLE_NUMBA`` is set to a truthy value.
"""

import os
import types

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_DISABLED = os.environ.get("MLIP_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = HAVE_NUMBA and not _DISABLED

# catch-up time constant of the plant ZMP when it has fallen behind its
# reference and no explicit lag is configured [s]
CATCHUP_TAU = 0.02


def _force(t, forces):
    total = 0.0
    for j in range(forces.shape[0]):
        if forces[j, 0] <= t < forces[j, 0] + forces[j, 1]:
            total += forces[j, 2]
    return total


def _deriv(x, t, rate, z0, g, lag, rate_limit, forces, out):
    # x = [p, L, p_zmp, zmp_ref]
    out[0] = x[1] / z0
    # a horizontal force at CoM height has moment z0 * a about the pivot
    out[1] = g * x[0] - g * x[2] + z0 * _force(t, forces)
    if lag > 0.0:
        dz = (x[3] - x[2]) / lag
    else:
        dz = rate + (x[3] - x[2]) / CATCHUP_TAU
    if dz > rate_limit:
        dz = rate_limit
    elif dz < -rate_limit:
        dz = -rate_limit
    out[2] = dz
    out[3] = rate


def integrate_domain_numpy(x0, t0, h, n, rate, z0, g, lag, rate_limit, forces, samples):
    """Integrate ``n`` RK4 steps of size ``h`` from ``x0 = [p, L, p_zmp, zmp_ref]``.

    Writes ``t, p, L, p_zmp, zmp_ref`` after each step into the ``(n, 5)``
    array ``samples`` and returns the final state.
    """
    x = x0.copy()
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    for i in range(n):
        t = t0 + i * h
        _deriv(x, t, rate, z0, g, lag, rate_limit, forces, k1)
        for j in range(4):
            tmp[j] = x[j] + 0.5 * h * k1[j]
        _deriv(tmp, t + 0.5 * h, rate, z0, g, lag, rate_limit, forces, k2)
        for j in range(4):
            tmp[j] = x[j] + 0.5 * h * k2[j]
        _deriv(tmp, t + 0.5 * h, rate, z0, g, lag, rate_limit, forces, k3)
        for j in range(4):
            tmp[j] = x[j] + h * k3[j]
        _deriv(tmp, t + h, rate, z0, g, lag, rate_limit, forces, k4)
        for j in range(4):
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        samples[i, 0] = t0 + (i + 1) * h
        samples[i, 1] = x[0]
        samples[i, 2] = x[1]
        samples[i, 3] = x[2]
        samples[i, 4] = x[3]
    return x


def _jit_all():
    # compiled copies see compiled helpers through their own globals
    scope = dict(globals())
    for name in ("_force", "_deriv", "integrate_domain_numpy"):
        fn = globals()[name]
        copy = types.FunctionType(fn.__code__, scope, fn.__name__, fn.__defaults__)
        copy.__qualname__ = fn.__qualname__ + "_jit"
        scope[name] = njit(cache=True)(copy)
    return scope["integrate_domain_numpy"]


integrate_domain_jit = _jit_all() if HAVE_NUMBA else None
integrate_domain_kernel = integrate_domain_jit if USE_NUMBA else integrate_domain_numpy


def integrate_domain_raw(x0, t0, h, n, rate, z0, g, lag=0.0, rate_limit=np.inf, forces=None):
    """Convenience wrapper allocating the sample buffer."""
    forces = np.zeros((0, 3)) if forces is None else np.asarray(forces, dtype=np.float64).reshape(-1, 3)
    samples = np.empty((n, 5))
    x = integrate_domain_kernel(
        np.asarray(x0, dtype=np.float64), float(t0), float(h), int(n), float(rate),
        float(z0), float(g), float(lag), float(rate_limit), forces, samples,
    )
    return x, samples
