"""Independent reference implementations used by the tests.

Nothing here calls the closed-form maps from ``mlip.model``: flows come from
scipy's expm on an augmented system with the ZMP rate as a constant state.
"""

import numpy as np
import scipy.linalg


def ct_matrix(z0: float, g: float) -> np.ndarray:
    return np.array([[0.0, 1.0 / z0, 0.0], [g, 0.0, -g], [0.0, 0.0, 0.0]])


def flow(z0: float, g: float, xi, rate: float, t: float) -> np.ndarray:
    """Exact flow of ``xi' = A xi + (0, 0, rate)`` via a 4x4 augmented expm."""
    M = np.zeros((4, 4))
    M[:3, :3] = ct_matrix(z0, g)
    M[2, 3] = 1.0
    E = scipy.linalg.expm(M * t)
    return E[:3, :3] @ np.asarray(xi, float) + E[:3, 3] * rate


def step(params, xi, u: float) -> np.ndarray:
    """UA^- -> OA(u) -> leg switch -> FA(l) -> UA -> UA^-, written out by hand."""
    z0, g = params.z0, params.g
    l = {"heel-to-toe": params.rho, "toe-to-heel": -params.rho, "flat-footed": 0.0}[params.mode.value]
    xi = np.array(xi, float)
    if params.T_OA > 0:
        xi = flow(z0, g, xi, u / params.T_OA, params.T_OA)
    else:
        xi[2] += u  # handed over at the switch
    # new pivot sits u + l ahead; ZMP coordinate shifts with it
    xi = xi - np.array([u + l, 0.0, u + l])
    if params.T_FA > 0:
        xi = flow(z0, g, xi, l / params.T_FA, params.T_FA)
    else:
        xi[2] += l
    return flow(z0, g, xi, 0.0, params.T_UA)


def orbit_by_iteration(params, u: float, n: int = 200) -> np.ndarray:
    """Fixed point of the step map at constant u by Newton on the affine map."""
    x0 = np.zeros(3)
    f0 = step(params, x0, u)
    J = np.column_stack([step(params, e, u) - f0 for e in np.eye(3)])
    # only the (p, L) block is contracting/expanding; ZMP row is identity
    A = J[:2, :2]
    return np.linalg.solve(np.eye(2) - A, f0[:2])
