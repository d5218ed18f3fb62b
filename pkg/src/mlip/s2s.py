"""Step-to-step (Poincare) dynamics of the multi-domain pendulum.

Two sections are supported: the end of the under-actuated domain (the
default pre-impact section) and the end of the fully-actuated domain, which
the FA-phase CoM Bezier targets are planned against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GaitParams, domain_map, reset_map

SECTIONS = ("UA_end", "FA_end")


@dataclass(frozen=True)
class S2SDynamics:
    A_xi: np.ndarray
    B_xi: np.ndarray
    C_xi: np.ndarray
    section: str
    params: GaitParams

    @property
    def A_M(self) -> np.ndarray:
        return self.A_xi[:2, :2]

    @property
    def B_M(self) -> np.ndarray:
        return self.B_xi[:2]

    @property
    def C_M(self) -> np.ndarray:
        return self.C_xi[:2]

    def to_dict(self) -> dict:
        return {
            "section": self.section,
            "params": self.params.to_dict(),
            "A_xi": self.A_xi.tolist(),
            "B_xi": self.B_xi.tolist(),
            "C_xi": self.C_xi.tolist(),
            "A_M": self.A_M.tolist(),
            "B_M": self.B_M.tolist(),
            "C_M": self.C_M.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "S2SDynamics":
        allowed = {"section", "params", "A_xi", "B_xi", "C_xi", "A_M", "B_M", "C_M"}
        unknown = set(data) - allowed
        if unknown:
            raise KeyError(f"unknown S2S key: {sorted(unknown)[0]!r}")
        if data["section"] not in SECTIONS:
            raise ValueError(f"unknown section {data['section']!r}")
        return cls(
            A_xi=np.array(data["A_xi"], dtype=float),
            B_xi=np.array(data["B_xi"], dtype=float),
            C_xi=np.array(data["C_xi"], dtype=float),
            section=data["section"],
            params=GaitParams.from_dict(data["params"]),
        )


def _maps(params: GaitParams):
    return (
        domain_map(params, "FA"),
        domain_map(params, "UA"),
        domain_map(params, "OA"),
        reset_map(params, "OA->FA"),
    )


def compose_s2s(params: GaitParams) -> S2SDynamics:
    """Full-cycle map sampled at the end of the UA domain.

    One step runs UA^- -> OA flow (input u) -> leg switch -> FA flow (input
    l) -> UA flow, giving ``xi_{k+1} = A xi_k + B u_k + C``.
    """
    fa, ua, oa, switch = _maps(params)
    l = params.l
    A = ua.A @ fa.A @ oa.A
    B = ua.A @ fa.A @ (oa.B + switch.B_delta)
    C = ua.A @ (fa.A @ switch.C_delta + fa.B * l)
    return S2SDynamics(A, B, C, "UA_end", params)


def compose_s2s_at_fa_end(params: GaitParams) -> S2SDynamics:
    """Full-cycle map sampled at the end of the FA domain.

    Cycle order from FA^-: UA flow, OA flow (u), leg switch, FA flow (l).
    """
    fa, ua, oa, switch = _maps(params)
    l = params.l
    A = fa.A @ oa.A @ ua.A
    B = fa.A @ (oa.B + switch.B_delta)
    C = fa.A @ switch.C_delta + fa.B * l
    return S2SDynamics(A, B, C, "FA_end", params)


def s2s_step(dyn: S2SDynamics, x, u: float) -> np.ndarray:
    """``x_{k+1} = A_M x_k + B_M u_k + C_M`` on the reduced [p, L] state."""
    return dyn.A_M @ np.asarray(x, dtype=float) + dyn.B_M * u + dyn.C_M


def chain_step(params: GaitParams, xi, u: float) -> np.ndarray:
    """One step by chaining the individual domain and reset maps.

    Independent of the composed matrices; used to check them.
    """
    fa, ua, oa, _ = _maps(params)
    xi = np.asarray(xi, dtype=float)
    xi = reset_map(params, "UA->OA").apply(xi, u)
    xi = oa.apply(xi, u)
    xi = reset_map(params, "OA->FA").apply(xi, u)
    xi = fa.apply(xi, params.l)
    xi = reset_map(params, "FA->UA").apply(xi, u)
    return ua.apply(xi, 0.0)


@dataclass(frozen=True)
class StructureCheck:
    name: str
    value: float
    expected: float
    residual: float
    passed: bool


def validate_structure(dyn: S2SDynamics, tol: float = 1e-12) -> list[StructureCheck]:
    """Check the ZMP-row identities A(3,3) = 1, B(3) = 0, C(3) = 0."""
    checks = []
    for name, value, expected in (
        ("A_xi[2,2]", dyn.A_xi[2, 2], 1.0),
        ("B_xi[2]", dyn.B_xi[2], 0.0),
        ("C_xi[2]", dyn.C_xi[2], 0.0),
    ):
        residual = abs(float(value) - expected)
        checks.append(StructureCheck(name, float(value), expected, residual, residual <= tol))
    return checks


def structure_report(dyn: S2SDynamics, tol: float = 1e-12) -> dict:
    checks = validate_structure(dyn, tol)
    return {
        "passed": all(c.passed for c in checks),
        "tolerance": tol,
        "checks": [c.__dict__ for c in checks],
    }
