"""Reference trajectories: FA-phase CoM Bezier, foot-pitch blends, ZMP ramps."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .model import ZERO_DURATION, GaitParams, reset_map, zmp_rate

DEFAULT_DEGREE = 5


def bernstein_row(n: int, s: float) -> np.ndarray:
    k = np.arange(n + 1)
    binom = np.array([comb(n, int(i)) for i in k], dtype=float)
    return binom * s**k * (1.0 - s) ** (n - k)


def bernstein_deriv_row(n: int, s: float, T: float = 1.0) -> np.ndarray:
    """Row ``r`` such that ``r @ alpha`` is the time derivative at phase ``s``."""
    row = np.zeros(n + 1)
    lower = bernstein_row(n - 1, s)
    row[1:] += n * lower
    row[:-1] -= n * lower
    return row / T


@dataclass(frozen=True)
class BezierCurve:
    alpha: np.ndarray
    T: float = 1.0

    @property
    def degree(self) -> int:
        return len(self.alpha) - 1

    def __call__(self, s) -> float:
        return bezier_eval(self, s)


def bezier_eval(curve: BezierCurve, s: float) -> float:
    return float(bernstein_row(curve.degree, s) @ curve.alpha)


def bezier_deriv(curve: BezierCurve, s: float) -> float:
    """Time derivative ``d/dt`` at phase ``s``, with ``s = t / T``."""
    return float(bernstein_deriv_row(curve.degree, s, curve.T) @ curve.alpha)


def fit_fa_com(x_a: float, v_a: float, target, z0: float, T_FA: float, n_b: int = DEFAULT_DEGREE) -> BezierCurve:
    """CoM position curve over the FA domain.

    Starts at the measured position/velocity ``(x_a, v_a)`` and ends at the
    FA^- target ``(p, L)``, whose momentum is converted to velocity as
    ``L / z0``. With ``n_b > 3`` the interior coefficients stay as close as
    possible (least squares) to the straight chord between the end values.
    """
    if n_b < 3:
        raise ValueError("Bezier degree must be at least 3")
    if T_FA < ZERO_DURATION:
        raise ValueError("FA duration must be positive")
    p_t, L_t = float(target[0]), float(target[1])
    M = np.vstack(
        [
            bernstein_row(n_b, 0.0),
            bernstein_deriv_row(n_b, 0.0, T_FA),
            bernstein_row(n_b, 1.0),
            bernstein_deriv_row(n_b, 1.0, T_FA),
        ]
    )
    b = np.array([x_a, v_a, p_t, L_t / z0])

    # minimize |S (alpha - chord)|^2 subject to M alpha = b
    chord = np.linspace(x_a, p_t, n_b + 1)
    S = np.eye(n_b + 1)[1:-1]
    H = S.T @ S
    kkt = np.block([[H, M.T], [M, np.zeros((4, 4))]])
    rhs = np.concatenate([H @ chord, b])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return BezierCurve(sol[: n_b + 1], T_FA)


def blend_coefficients(degree: int) -> np.ndarray:
    """0 -> 1 blend with flat ends: ``(0, 0, ..., 1, 1)``."""
    if degree < 3:
        raise ValueError("blend degree must be at least 3 for zero end slopes")
    half = (degree + 1) // 2
    return np.array([0.0] * half + [1.0] * (degree + 1 - half))


@dataclass(frozen=True)
class FootPitchProfile:
    theta_start: float
    theta_target: float
    blend: BezierCurve

    def __call__(self, s: float) -> float:
        b = bezier_eval(self.blend, s)
        return (1.0 - b) * self.theta_start + b * self.theta_target


def foot_pitch_profile(theta_start: float, theta_target: float, blend_degree: int = DEFAULT_DEGREE) -> FootPitchProfile:
    return FootPitchProfile(float(theta_start), float(theta_target), BezierCurve(blend_coefficients(blend_degree)))


# end-of-domain foot pitch targets [rad]; heel-to-toe lifts the stance heel in UA
HEEL_LIFT = 0.2


def pitch_targets(params: GaitParams) -> dict[str, tuple[float, float]]:
    """``(stance, swing)`` pitch targets at the end of each domain."""
    mode = params.mode.value
    lift = {"heel-to-toe": HEEL_LIFT, "toe-to-heel": -HEEL_LIFT, "flat-footed": 0.0}[mode]
    return {"FA": (0.0, 0.0), "UA": (lift, 0.0), "OA": (0.0, 0.0)}


def zmp_reference(params: GaitParams, t_in_step: float, u: float, domain: str | None = None) -> tuple[float, float]:
    """ZMP position (relative to the current stance pivot) and rate.

    A step starts at the UA^- section with the ZMP at the pivot, ramps over
    ``u`` during OA, jumps back by the leg switch, and ramps over ``l``
    during FA to land on the new pivot before UA. Domain boundaries belong
    to the domain that ends there unless ``domain`` says otherwise.
    """
    T = params.T
    if not -1e-12 <= t_in_step <= T + 1e-12:
        raise ValueError(f"t_in_step must lie in [0, {T}]")
    switch = reset_map(params, "OA->FA")
    pos = 0.0
    t = t_in_step
    for name in ("OA", "FA", "UA"):
        T_i = params.duration(name)
        rate = zmp_rate(params, name, u)
        here = name == domain if domain is not None else t <= T_i
        if T_i >= ZERO_DURATION and here:
            return pos + rate * t, rate
        pos += rate * T_i
        t -= T_i
        if name == "OA":
            pos += switch.B_delta[2] * u + switch.C_delta[2]
    return pos, 0.0


def reference_rows(params: GaitParams, com: BezierCurve, u: float, theta_a: tuple[float, float] = (0.0, 0.0), n: int = 50):
    """Rows ``(t, x_com_ref, v_com_ref, p_zmp_ref, theta_st_ref, theta_sw_ref)`` for one step.

    The CoM curve covers the FA domain only; other domains report NaN for it.
    """
    targets = pitch_targets(params)
    rows = []
    t0 = 0.0
    theta = tuple(theta_a)
    for name in ("OA", "FA", "UA"):
        T_i = params.duration(name)
        if T_i < ZERO_DURATION:
            continue
        st = foot_pitch_profile(theta[0], targets[name][0])
        sw = foot_pitch_profile(theta[1], targets[name][1])
        for j in range(n):
            s = j / n
            t = t0 + s * T_i
            x_ref = v_ref = float("nan")
            if name == "FA":
                x_ref, v_ref = bezier_eval(com, s), bezier_deriv(com, s)
            rows.append((t, x_ref, v_ref, zmp_reference(params, t, u, name)[0], st(s), sw(s)))
        theta = targets[name]
        t0 += T_i
    return rows
