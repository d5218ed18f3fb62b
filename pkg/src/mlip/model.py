"""Multi-domain linear inverted pendulum: parameters, flow maps and reset maps.

State ordering everywhere is ``xi = [p, L, p_zmp]``: CoM position relative to
the stance pivot, mass-normalized angular momentum about the pivot, and ZMP
position relative to the pivot.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

# durations shorter than this take the degenerate (zero-length domain) branch
ZERO_DURATION = 1e-9

DOMAINS = ("FA", "UA", "OA")
EDGES = ("UA->OA", "OA->FA", "FA->UA")


class WalkingMode(enum.Enum):
    HEEL_TO_TOE = "heel-to-toe"
    TOE_TO_HEEL = "toe-to-heel"
    FLAT_FOOTED = "flat-footed"

    @classmethod
    def parse(cls, value: "WalkingMode | str") -> "WalkingMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "heeltotoe": "heel-to-toe",
            "toetoheel": "toe-to-heel",
            "flatfooted": "flat-footed",
            "flat": "flat-footed",
        }
        key = aliases.get(key.replace("-", ""), key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown walking mode {value!r}") from None


def zmp_travel(mode: WalkingMode | str, rho: float) -> float:
    """Signed ZMP travel ``l`` over the fully-actuated domain."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    mode = WalkingMode.parse(mode)
    if mode is WalkingMode.HEEL_TO_TOE:
        return rho
    if mode is WalkingMode.TOE_TO_HEEL:
        return -rho
    return 0.0


@dataclass(frozen=True)
class GaitParams:
    """Physical and timing parameters of the pendulum model.

    Durations are in seconds; ``z0`` and ``rho`` in metres.
    """

    z0: float = 0.8
    rho: float = 0.16
    T_FA: float = 0.2
    T_UA: float = 0.2
    T_OA: float = 0.1
    g: float = 9.81
    mode: WalkingMode = WalkingMode.HEEL_TO_TOE

    def __post_init__(self):
        object.__setattr__(self, "mode", WalkingMode.parse(self.mode))
        for name in ("z0", "rho", "T_FA", "T_UA", "T_OA", "g"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.z0 <= 0:
            raise ValueError(f"z0 must be positive, got {self.z0}")
        if self.g <= 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.rho < 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")
        if min(self.T_FA, self.T_UA, self.T_OA) < 0:
            raise ValueError("domain durations must be non-negative")
        if self.T_FA + self.T_UA + self.T_OA <= 0:
            raise ValueError("total step duration must be positive")

    @property
    def lam(self) -> float:
        """Pendulum natural frequency sqrt(g / z0)."""
        return math.sqrt(self.g / self.z0)

    @property
    def T(self) -> float:
        return self.T_FA + self.T_UA + self.T_OA

    @property
    def l(self) -> float:  # noqa: E743
        return zmp_travel(self.mode, self.rho)

    def duration(self, domain: str) -> float:
        return {"FA": self.T_FA, "UA": self.T_UA, "OA": self.T_OA}[_check_domain(domain)]

    def replace(self, **changes) -> "GaitParams":
        data = self.to_dict()
        data.update(changes)
        return GaitParams.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "GaitParams":
        allowed = {"z0", "rho", "T_FA", "T_UA", "T_OA", "g", "mode"}
        unknown = set(data) - allowed
        if unknown:
            raise KeyError(f"unknown gait parameter key: {sorted(unknown)[0]!r}")
        return cls(**data)


@dataclass(frozen=True)
class ContinuousState:
    p: float
    L: float
    p_zmp: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.p, self.L, self.p_zmp)):
            raise ValueError("state entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.L, self.p_zmp])

    @classmethod
    def from_array(cls, xi) -> "ContinuousState":
        return cls(float(xi[0]), float(xi[1]), float(xi[2]))


@dataclass(frozen=True)
class DomainMap:
    """Affine end-of-domain map ``xi^- = A xi^+ + B d``."""

    domain: str
    A: np.ndarray
    B: np.ndarray
    duration: float

    def apply(self, xi, d: float) -> np.ndarray:
        return self.A @ np.asarray(xi, dtype=float) + self.B * d


@dataclass(frozen=True)
class ResetMap:
    """Affine leg-switch map ``xi^+ = xi^- + B_delta u + C_delta``."""

    edge: str
    B_delta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    C_delta: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def apply(self, xi, u: float) -> np.ndarray:
        return np.asarray(xi, dtype=float) + self.B_delta * u + self.C_delta


def _check_domain(domain: str) -> str:
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    return domain


def a_ct(params: GaitParams) -> np.ndarray:
    """Continuous-time system matrix acting on ``[p, L, p_zmp]``."""
    return np.array(
        [
            [0.0, 1.0 / params.z0, 0.0],
            [params.g, 0.0, -params.g],
            [0.0, 0.0, 0.0],
        ]
    )


def mat_exp_closed(params: GaitParams, t: float) -> np.ndarray:
    """Exact ``expm(a_ct(params) * t)`` via the hyperbolic closed form."""
    if t < 0:
        raise ValueError("t must be non-negative")
    lam = params.lam
    ch, sh = math.cosh(lam * t), math.sinh(lam * t)
    return np.array(
        [
            [ch, sh / (lam * params.z0), 1.0 - ch],
            [params.z0 * lam * sh, ch, -params.z0 * lam * sh],
            [0.0, 0.0, 1.0],
        ]
    )


def mat_exp_series(M, t: float = 1.0) -> np.ndarray:
    """Generic scaling-and-squaring matrix exponential of ``M * t``.

    Used as a numerical oracle for :func:`mat_exp_closed`.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if not np.all(np.isfinite(M)) or not math.isfinite(t):
        raise ValueError("non-finite input to matrix exponential")
    return scipy.linalg.expm(M * t)


def flow_input_column(params: GaitParams, t: float) -> np.ndarray:
    """``int_0^t expm(A_ct s) ds @ B_ct``, the response to a unit ZMP rate."""
    lam = params.lam
    ch, sh = math.cosh(lam * t), math.sinh(lam * t)
    return np.array([t - sh / lam, -params.z0 * (ch - 1.0), t])


def flow_closed(params: GaitParams, xi, zmp_rate: float, t: float) -> np.ndarray:
    """State after flowing ``t`` seconds with constant ZMP rate."""
    return mat_exp_closed(params, t) @ np.asarray(xi, dtype=float) + flow_input_column(params, t) * zmp_rate


def domain_map(params: GaitParams, domain: str) -> DomainMap:
    T = params.duration(domain)
    if T < ZERO_DURATION:
        return DomainMap(domain, np.eye(3), np.zeros(3), 0.0)
    return DomainMap(domain, mat_exp_closed(params, T), flow_input_column(params, T) / T, T)


def reset_map(params: GaitParams, edge: str) -> ResetMap:
    """Reset map for one edge of the domain cycle.

    Only the OA->FA leg switch moves the state: the new pivot sits ``u + l``
    ahead of the old one. A zero-length OA domain hands the ZMP over at the
    switch (no ``-u`` on p_zmp); likewise a zero-length FA domain, which
    has no time to carry the ZMP over ``l``, drops the ``-l`` on p_zmp.
    """
    if edge not in EDGES:
        raise ValueError(f"unknown edge {edge!r}; expected one of {EDGES}")
    if edge != "OA->FA":
        return ResetMap(edge)
    l = params.l
    zmp_u = 0.0 if params.T_OA < ZERO_DURATION else -1.0
    zmp_l = 0.0 if params.T_FA < ZERO_DURATION else -l
    return ResetMap(edge, np.array([-1.0, 0.0, zmp_u]), np.array([-l, 0.0, zmp_l]))


def domain_input(params: GaitParams, domain: str, u: float) -> float:
    """ZMP travel ``d_i`` commanded over a domain for step size ``u``."""
    return {"FA": params.l, "UA": 0.0, "OA": u}[_check_domain(domain)]


def zmp_rate(params: GaitParams, domain: str, u: float) -> float:
    T = params.duration(domain)
    if T < ZERO_DURATION:
        return 0.0
    return domain_input(params, domain, u) / T
