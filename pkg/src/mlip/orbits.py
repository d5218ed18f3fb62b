"""Period-1 and period-2 orbits of the step-to-step map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .model import ZERO_DURATION, flow_closed, reset_map, zmp_rate
from .s2s import S2SDynamics, s2s_step

# condition number above which (I - A) is treated as singular
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class OrbitSpec:
    """Desired pre-impact state(s) and step size(s).

    For ``kind == "P1"``, ``u_star`` has one entry and ``x_star`` one row.
    For ``"P2"`` they hold the left/right pair, in that order.
    """

    kind: str
    u_star: tuple[float, ...]
    x_star: np.ndarray
    v_d: float
    T: float

    def state_for_step(self, k: int) -> tuple[float, np.ndarray]:
        i = 0 if self.kind == "P1" else k % 2
        return self.u_star[i], self.x_star[i]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "u_star": list(self.u_star),
            "x_star": self.x_star.tolist(),
            "v_d": self.v_d,
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrbitSpec":
        unknown = set(data) - {"kind", "u_star", "x_star", "v_d", "T"}
        if unknown:
            raise KeyError(f"unknown orbit key: {sorted(unknown)[0]!r}")
        return cls(
            kind=data["kind"],
            u_star=tuple(float(u) for u in data["u_star"]),
            x_star=np.array(data["x_star"], dtype=float).reshape(-1, 2),
            v_d=float(data["v_d"]),
            T=float(data["T"]),
        )


def _solve(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularSystemError(f"{what} is singular (condition number {cond:.3g})")
    return np.linalg.solve(M, rhs)


def p1_orbit(dyn: S2SDynamics, v_d: float) -> OrbitSpec:
    T = dyn.params.T
    u = v_d * T
    x = _solve(np.eye(2) - dyn.A_M, dyn.B_M * u + dyn.C_M, "I - A_M")
    return OrbitSpec("P1", (u,), x.reshape(1, 2), float(v_d), T)


def p2_orbit(dyn: S2SDynamics, v_d: float, u_L_star: float) -> OrbitSpec:
    """Period-2 orbit alternating step sizes ``u_L*`` and ``u_R*``.

    ``x_L*`` is the pre-impact state at which ``u_L*`` is applied.
    """
    T = dyn.params.T
    u_L = float(u_L_star)
    u_R = 2.0 * v_d * T - u_L
    A, B, C = dyn.A_M, dyn.B_M, dyn.C_M
    M = np.eye(2) - A @ A
    x_L = _solve(M, A @ B * u_L + B * u_R + A @ C + C, "I - A_M^2")
    x_R = _solve(M, A @ B * u_R + B * u_L + A @ C + C, "I - A_M^2")
    return OrbitSpec("P2", (u_L, u_R), np.vstack([x_L, x_R]), float(v_d), T)


def p2_orbit_from_width(dyn: S2SDynamics, v_d: float, width: float) -> OrbitSpec:
    """P2 orbit parameterized by nominal step width: ``u_L/R = +/-w + v_d T``."""
    return p2_orbit(dyn, v_d, width + v_d * dyn.params.T)


def lateral_adapter(p_y: float, L_x: float) -> np.ndarray:
    """Map lateral (p_y, L_x) into the sagittal sign convention; self-inverse."""
    return np.array([p_y, -L_x])


def fixed_point_residual(dyn: S2SDynamics, orbit: OrbitSpec) -> float:
    if orbit.kind == "P1":
        x = orbit.x_star[0]
        return float(np.linalg.norm(s2s_step(dyn, x, orbit.u_star[0]) - x))
    x_L, x_R = orbit.x_star
    u_L, u_R = orbit.u_star
    mid = s2s_step(dyn, x_L, u_L)
    return float(max(np.linalg.norm(mid - x_R), np.linalg.norm(s2s_step(dyn, mid, u_R) - x_L)))


def phase_portrait(dyn: S2SDynamics, orbit: OrbitSpec, samples_per_domain: int = 50) -> list[tuple]:
    """Rows ``(t, domain, p, L, p_zmp)`` over one orbit period.

    Uses the closed-form flows from the UA^- section, so the rows are exact
    points on the model orbit.
    """
    if dyn.section != "UA_end":
        raise ValueError("phase portraits start from the UA_end section")
    params = dyn.params
    switch = reset_map(params, "OA->FA")
    rows = []
    t0 = 0.0
    n_steps = 1 if orbit.kind == "P1" else 2
    for k in range(n_steps):
        u, x = orbit.state_for_step(k)
        xi = np.array([x[0], x[1], 0.0])
        if k == 0:
            rows.append((t0, "UA", *xi))
        for domain in ("OA", "FA", "UA"):
            T_i = params.duration(domain)
            rate = zmp_rate(params, domain, u)
            if T_i >= ZERO_DURATION:
                for j in range(1, samples_per_domain + 1):
                    t = T_i * j / samples_per_domain
                    rows.append((t0 + t, domain, *flow_closed(params, xi, rate, t)))
                xi = flow_closed(params, xi, rate, T_i)
            t0 += T_i
            if domain == "OA":
                xi = switch.apply(xi, u)
    return rows
