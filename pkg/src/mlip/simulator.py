"""Closed-loop hybrid simulation of the pendulum under step-placement control.

The plant is integrated with RK4 (see ``_kernels``); the controller only sees
the pre-impact state at the end of each UA domain and picks the next step
size with ``u = u* + K (x - x*)``.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SchemaError
from .gains import GainSpec, deadbeat_gain, dlqr
from .model import ZERO_DURATION, GaitParams, reset_map, zmp_rate
from .orbits import OrbitSpec, p1_orbit, p2_orbit_from_width
from .s2s import compose_s2s, s2s_step

log = logging.getLogger(__name__)

DOMAIN_CODES = {"FA": 0, "UA": 1, "OA": 2}
DOMAIN_NAMES = {v: k for k, v in DOMAIN_CODES.items()}

P_LIMIT = 10.0
L_LIMIT = 100.0
MAX_SATURATED_STEPS = 5


def _reject_unknown(data: dict, allowed: set, what: str):
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"unknown {what} key: {sorted(unknown)[0]!r}")


@dataclass(frozen=True)
class PlantSpec:
    """Plant used for integration.

    ``exact`` integrates the controller's own model. ``mismatched`` may use a
    different CoM height and imperfect ZMP tracking (rate limit and/or a
    first-order lag), which is where nonzero residuals ``w`` come from.
    """

    kind: str = "exact"
    plant_z0: float | None = None
    zmp_rate_limit: float | None = None
    zmp_lag: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exact", "mismatched"):
            raise SchemaError(f"plant kind must be 'exact' or 'mismatched', got {self.kind!r}")
        if self.kind == "exact" and (self.zmp_rate_limit is not None or self.zmp_lag):
            raise SchemaError("an exact plant cannot have ZMP rate limits or lag")
        if self.plant_z0 is not None and self.plant_z0 <= 0:
            raise SchemaError("plant_z0 must be positive")
        if self.zmp_rate_limit is not None and self.zmp_rate_limit <= 0:
            raise SchemaError("zmp_rate_limit must be positive")
        if self.zmp_lag < 0:
            raise SchemaError("zmp_lag must be non-negative")

    def z0_for(self, params: GaitParams) -> float:
        if self.kind == "exact" or self.plant_z0 is None:
            return params.z0
        return self.plant_z0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "plant_z0": self.plant_z0,
            "zmp_rate_limit": self.zmp_rate_limit,
            "zmp_lag": self.zmp_lag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlantSpec":
        _reject_unknown(data, {"kind", "plant_z0", "zmp_rate_limit", "zmp_lag"}, "plant")
        return cls(**data)


@dataclass(frozen=True)
class ForceEvent:
    """Horizontal push as a mass-normalized force [m/s^2]."""

    t_start: float
    duration: float
    magnitude: float

    def __post_init__(self):
        if not self.duration > 0:
            raise SchemaError("force duration must be positive")

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "duration": self.duration, "magnitude": self.magnitude}

    @classmethod
    def from_dict(cls, data: dict) -> "ForceEvent":
        _reject_unknown(data, {"t_start", "duration", "magnitude"}, "disturbance")
        return cls(float(data["t_start"]), float(data["duration"]), float(data["magnitude"]))


@dataclass(frozen=True)
class VelocityProfile:
    """Commanded speed through knots ``(t, v)``.

    Linear between knots with increasing times, a jump where two knots share
    a time, and held constant outside the knot range.
    """

    knots: tuple[tuple[float, float], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        knots = tuple((float(t), float(v)) for t, v in self.knots)
        if not knots:
            raise SchemaError("velocity profile needs at least one knot")
        if any(b[0] < a[0] for a, b in zip(knots, knots[1:])):
            raise SchemaError("velocity knots must be sorted by time")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def constant(cls, v: float) -> "VelocityProfile":
        return cls(((0.0, v),))

    @classmethod
    def preamble_ramp(cls, v: float, preamble: float = 5.0, ramp: float = 2.0, v0: float = 0.0) -> "VelocityProfile":
        """Hold ``v0`` for ``preamble`` seconds, then ramp linearly to ``v``."""
        return cls(((0.0, v0), (preamble, v0), (preamble + ramp, v)))

    def __call__(self, t: float) -> float:
        times = [k[0] for k in self.knots]
        i = bisect.bisect_right(times, t) - 1
        if i < 0:
            return self.knots[0][1]
        if i == len(self.knots) - 1:
            return self.knots[-1][1]
        (t0, v0), (t1, v1) = self.knots[i], self.knots[i + 1]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def to_list(self) -> list:
        return [{"t": t, "v": v} for t, v in self.knots]

    @classmethod
    def from_list(cls, items: list) -> "VelocityProfile":
        knots = []
        for item in items:
            _reject_unknown(item, {"t", "v"}, "command")
            knots.append((item["t"], item["v"]))
        return cls(tuple(knots))


def resolve_gains(params: GaitParams, spec: dict | GainSpec | None) -> GainSpec:
    """Build a gain from a JSON-style spec: explicit ``K`` or a method name."""
    if isinstance(spec, GainSpec):
        return spec
    spec = dict(spec or {"method": "lqr"})
    if "K" in spec:
        return GainSpec.from_dict(spec)
    _reject_unknown(spec, {"method", "Q", "R"}, "gains")
    method = str(spec.get("method", "lqr")).lower()
    dyn = compose_s2s(params)
    if method == "lqr":
        return dlqr(dyn.A_M, dyn.B_M, spec.get("Q"), spec.get("R", 1.0))
    if method == "deadbeat":
        return deadbeat_gain(dyn.A_M, dyn.B_M)
    raise SchemaError(f"unknown gain method {method!r}")


@dataclass(frozen=True)
class Scenario:
    params: GaitParams
    gains: GainSpec
    plant: PlantSpec = PlantSpec()
    command: VelocityProfile = VelocityProfile()
    disturbances: tuple[ForceEvent, ...] = ()
    n_steps: int = 40
    step_size_limit: float | None = None
    seed: int = 0
    dt: float = 1e-3
    orbit: str = "P1"
    step_width: float = 0.0
    initial_error: tuple[float, float] = (0.0, 0.0)
    initial_error_scale: float = 0.0

    def __post_init__(self):
        if self.n_steps < 1:
            raise SchemaError("n_steps must be at least 1")
        if not self.dt > 0:
            raise SchemaError("dt must be positive")
        if self.orbit not in ("P1", "P2"):
            raise SchemaError(f"orbit must be 'P1' or 'P2', got {self.orbit!r}")
        if self.step_size_limit is not None and not self.step_size_limit > 0:
            raise SchemaError("step_size_limit must be positive")
        object.__setattr__(self, "disturbances", tuple(self.disturbances))
        object.__setattr__(self, "initial_error", tuple(float(e) for e in self.initial_error))

    def replace(self, **changes) -> "Scenario":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return Scenario(**data)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "plant": self.plant.to_dict(),
            "gains": self.gains.to_dict(),
            "command": self.command.to_list(),
            "disturbances": [d.to_dict() for d in self.disturbances],
            "n_steps": self.n_steps,
            "step_size_limit": self.step_size_limit,
            "seed": self.seed,
            "dt": self.dt,
            "orbit": self.orbit,
            "step_width": self.step_width,
            "initial_error": list(self.initial_error),
            "initial_error_scale": self.initial_error_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        allowed = set(cls.__dataclass_fields__)
        _reject_unknown(data, allowed, "scenario")
        if "params" not in data:
            raise SchemaError("scenario needs 'params'")
        try:
            params = GaitParams.from_dict(data["params"])
        except KeyError as exc:
            raise SchemaError(str(exc.args[0])) from None
        kwargs = {k: v for k, v in data.items() if k not in ("params", "plant", "gains", "command", "disturbances")}
        if "n_steps" in kwargs:
            kwargs["n_steps"] = int(kwargs["n_steps"])
        try:
            gains = resolve_gains(params, data.get("gains"))
        except KeyError as exc:
            raise SchemaError(str(exc.args[0])) from None
        return cls(
            params=params,
            gains=gains,
            plant=PlantSpec.from_dict(data.get("plant", {})),
            command=VelocityProfile.from_list(data.get("command", [{"t": 0.0, "v": 0.0}])),
            disturbances=tuple(ForceEvent.from_dict(d) for d in data.get("disturbances", [])),
            **kwargs,
        )


@dataclass
class StepTrace:
    """Everything recorded during one run.

    Sample arrays have one entry per integration step plus the initial
    section state. Step arrays are indexed by step ``k``; ``x`` has one extra
    row holding the final section state.
    """

    t: np.ndarray
    domain: np.ndarray
    p: np.ndarray
    L: np.ndarray
    p_zmp: np.ndarray
    u_cmd: np.ndarray
    x: np.ndarray
    u: np.ndarray
    u_star: np.ndarray
    x_star: np.ndarray
    v_d: np.ndarray
    w: np.ndarray
    clipped: np.ndarray
    T: float
    l: float
    status: str = "ok"
    message: str = ""
    events: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.u)

    @property
    def diverged(self) -> bool:
        return self.status != "ok"

    @property
    def errors(self) -> np.ndarray:
        """Tracking error ``x_k - x*_k`` at each section where a step was taken."""
        return self.x[: self.n_steps] - self.x_star

    def step_rows(self):
        for k in range(self.n_steps):
            yield (k, self.x[k, 0], self.x[k, 1], self.u[k], self.w[k, 0], self.w[k, 1])

    def sample_rows(self, start: int = 0, stop: int | None = None):
        stop = len(self.t) if stop is None else stop
        for i in range(start, stop):
            yield (self.t[i], DOMAIN_NAMES[int(self.domain[i])], self.p[i], self.L[i], self.p_zmp[i], self.u_cmd[i])

    def last_step_slice(self) -> slice:
        """Sample indices covering the last completed step, both section ends included."""
        if self.n_steps == 0:
            return slice(0, 1)
        t_start = (self.n_steps - 1) * self.T
        i0 = int(np.searchsorted(self.t, t_start - 1e-9))
        return slice(i0, len(self.t))


def _domain_steps(T_i: float, dt: float) -> tuple[int, float]:
    n = max(1, int(round(T_i / dt)))
    return n, T_i / n


def simulate(scenario: Scenario) -> StepTrace:
    params = scenario.params
    plant = scenario.plant
    dyn = compose_s2s(params)
    K = np.asarray(scenario.gains.K, dtype=float)
    T = params.T
    l = params.l
    z0_plant = plant.z0_for(params)
    lag = float(plant.zmp_lag)
    rate_limit = np.inf if plant.zmp_rate_limit is None else float(plant.zmp_rate_limit)
    u_limit = np.inf if scenario.step_size_limit is None else float(scenario.step_size_limit)
    forces = np.array([[d.t_start, d.duration, d.magnitude] for d in scenario.disturbances], dtype=np.float64).reshape(-1, 3)
    switch = reset_map(params, "OA->FA")

    # (name, duration, substeps, substep size); zero-length domains have 0 substeps
    domains = []
    for name in ("OA", "FA", "UA"):
        T_i = params.duration(name)
        if T_i >= ZERO_DURATION:
            domains.append((name, T_i) + _domain_steps(T_i, scenario.dt))
        else:
            domains.append((name, 0.0, 0, 0.0))
    per_step = sum(d[2] for d in domains)
    n = scenario.n_steps
    total = n * per_step + 1

    samples = np.empty((total, 5))
    dom_codes = np.empty(total, dtype=np.int8)
    u_cmd = np.empty(total)
    x = np.empty((n + 1, 2))
    u_log = np.empty(n)
    u_star_log = np.empty(n)
    x_star_log = np.empty((n, 2))
    v_log = np.empty(n)
    w_log = np.empty((n, 2))
    clipped = np.zeros(n, dtype=bool)
    events = [(d.t_start, "push_start", d.magnitude) for d in scenario.disturbances]
    events += [(d.t_end, "push_end", d.magnitude) for d in scenario.disturbances]

    def orbit_at(v: float) -> OrbitSpec:
        if scenario.orbit == "P1":
            return p1_orbit(dyn, v)
        return p2_orbit_from_width(dyn, v, scenario.step_width)

    rng = np.random.default_rng(scenario.seed)
    e0 = np.asarray(scenario.initial_error, dtype=float)
    if scenario.initial_error_scale > 0:
        e0 = e0 + rng.uniform(-1.0, 1.0, size=2) * scenario.initial_error_scale
    x[0] = orbit_at(scenario.command(0.0)).state_for_step(0)[1] + e0

    state = np.array([x[0, 0], x[0, 1], 0.0, 0.0])
    samples[0] = (0.0, state[0], state[1], state[2], state[3])
    dom_codes[0] = DOMAIN_CODES["UA"]
    u_cmd[0] = np.nan
    idx = 1
    status, message = "ok", ""
    saturated_run = 0
    steps_done = 0

    for k in range(n):
        t_k = k * T
        v = scenario.command(t_k)
        u_star, x_star = orbit_at(v).state_for_step(k)
        u = u_star + float(K @ (x[k] - x_star))
        if abs(u) > u_limit:
            u = math.copysign(u_limit, u)
            clipped[k] = True
        u_log[k], u_star_log[k], x_star_log[k], v_log[k] = u, u_star, x_star, v

        # the model ZMP reference is zero at every section
        state[3] = 0.0
        t0 = t_k
        for name, T_i, n_i, h in domains:
            if n_i:
                block = samples[idx : idx + n_i]
                state = _kernels.integrate_domain_kernel(
                    state, t0, h, n_i, zmp_rate(params, name, u), z0_plant, params.g, lag, rate_limit, forces, block
                )
                dom_codes[idx : idx + n_i] = DOMAIN_CODES[name]
                u_cmd[idx : idx + n_i] = u
                idx += n_i
                t0 += T_i
                events.append((t0, "domain_end", name))
            if name == "OA":
                state = _apply_switch(state, switch, u)

        x[k + 1] = state[:2]
        w_log[k] = x[k + 1] - s2s_step(dyn, x[k], u)
        steps_done = k + 1

        if not (np.all(np.isfinite(state)) and abs(state[0]) <= P_LIMIT and abs(state[1]) <= L_LIMIT):
            status = "diverged"
            message = f"state left bounds at step {k} (p={state[0]:.4g}, L={state[1]:.4g})"
            break
        saturated_run = saturated_run + 1 if clipped[k] else 0
        if saturated_run > MAX_SATURATED_STEPS:
            status = "saturated"
            message = f"step size clipped for {saturated_run} consecutive steps ending at step {k}"
            break

    if status != "ok":
        log.info("simulation stopped: %s", message)
    m = steps_done
    events.sort(key=lambda e: e[0])
    return StepTrace(
        t=samples[:idx, 0].copy(),
        domain=dom_codes[:idx].copy(),
        p=samples[:idx, 1].copy(),
        L=samples[:idx, 2].copy(),
        p_zmp=samples[:idx, 3].copy(),
        u_cmd=u_cmd[:idx].copy(),
        x=x[: m + 1].copy(),
        u=u_log[:m].copy(),
        u_star=u_star_log[:m].copy(),
        x_star=x_star_log[:m].copy(),
        v_d=v_log[:m].copy(),
        w=w_log[:m].copy(),
        clipped=clipped[:m].copy(),
        T=T,
        l=l,
        status=status,
        message=message,
        events=events,
    )


def _apply_switch(state: np.ndarray, switch, u: float) -> np.ndarray:
    out = state.copy()
    out[:3] = switch.apply(state[:3], u)
    # the plant's ZMP reference jumps with the model ZMP
    out[3] = state[3] + switch.B_delta[2] * u + switch.C_delta[2]
    return out
