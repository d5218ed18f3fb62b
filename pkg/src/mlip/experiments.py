"""Walking experiments built on :func:`simulate`: speed sweeps, pushes, top speed."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import MLIPError
from .gains import InvariantBox, invariant_box
from .model import WalkingMode
from .s2s import compose_s2s
from .simulator import ForceEvent, Scenario, StepTrace, VelocityProfile, resolve_gains, simulate

log = logging.getLogger(__name__)

SWEEP_SPEEDS = (2.0, 1.0, 0.5, 0.0, -0.75, -1.5)
STEADY_WINDOW = 10


def steady_metrics(trace: StepTrace, window: int = STEADY_WINDOW) -> dict:
    u = trace.u[-window:]
    e = trace.errors
    return {
        "status": trace.status,
        "n_steps": trace.n_steps,
        "mean_velocity": float(np.mean(u) / trace.T),
        "ground_speed": float((np.mean(u) + trace.l) / trace.T),
        "terminal_error": float(np.linalg.norm(e[-1])) if len(e) else float("nan"),
        "max_abs_w": np.max(np.abs(trace.w), axis=0).tolist() if len(trace.w) else [0.0, 0.0],
    }


def _sweep_scenario(base: Scenario, v: float, preamble: float, ramp: float) -> Scenario:
    return base.replace(command=VelocityProfile.preamble_ramp(v, preamble, ramp))


def velocity_sweep(
    base: Scenario,
    speeds=SWEEP_SPEEDS,
    preamble: float = 5.0,
    ramp: float = 2.0,
    workers: int = 1,
) -> list[dict]:
    """Step in place for ``preamble`` s, ramp to each speed, report steady state.

    Each entry holds the metrics plus the raw ``trace``. ``velocity_band`` is
    the bound on the steady-state velocity offset implied by the error box:
    the offset is ``K e / T`` and ``|K e| <= |K| e_max``.
    """
    speeds = [float(v) for v in speeds]
    if not all(math.isfinite(v) for v in speeds):
        raise ValueError("speeds must be finite")
    scenarios = [_sweep_scenario(base, v, preamble, ramp) for v in speeds]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            traces = list(pool.map(simulate, scenarios))
    else:
        traces = [simulate(s) for s in scenarios]

    dyn = compose_s2s(base.params)
    A_cl = base.gains.closed_loop(dyn.A_M, dyn.B_M)
    results = []
    for v, trace in zip(speeds, traces):
        metrics = steady_metrics(trace)
        box = invariant_box(A_cl, np.max(np.abs(trace.w), axis=0))
        metrics.update(
            v_cmd=v,
            box=box.to_dict(),
            velocity_band=float(np.abs(base.gains.K) @ box.e_max / trace.T),
            trace=trace,
        )
        results.append(metrics)
    return results


def recovery_steps(trace: StepTrace, box: InvariantBox, push: ForceEvent, inflate: float = 0.1, atol: float = 1e-6):
    """Steps after ``push`` ends until the error is back inside the inflated box.

    Returns None if the error never re-enters the box.
    """
    k_end = int(math.ceil(push.t_end / trace.T - 1e-9))
    errors = trace.errors
    for k in range(k_end, len(errors)):
        if box.contains(errors[k], inflate=inflate, atol=atol):
            return k - k_end
    return None


def push_experiment(base: Scenario, pushes, inflate: float = 0.1, atol: float = 1e-6) -> dict:
    """Run with and without ``pushes`` and measure recovery.

    The error box comes from the residuals of the unpushed run; ``atol``
    absorbs integration noise when that box is (numerically) empty.
    """
    pushes = tuple(pushes)
    t_end = base.n_steps * base.params.T
    for push in pushes:
        if push.t_start < 0 or push.t_end > t_end:
            raise ValueError(f"push at t={push.t_start} falls outside the {t_end:.3g} s run")
    baseline = simulate(base.replace(disturbances=()))
    dyn = compose_s2s(base.params)
    A_cl = base.gains.closed_loop(dyn.A_M, dyn.B_M)
    box = invariant_box(A_cl, np.max(np.abs(baseline.w), axis=0))
    trace = simulate(base.replace(disturbances=base.disturbances + pushes))

    recoveries = []
    for push in pushes:
        steps = None if trace.diverged else recovery_steps(trace, box, push, inflate, atol)
        recoveries.append({"push": push.to_dict(), "steps_to_recovery": steps})
    return {
        "trace": trace,
        "baseline": baseline,
        "box": box,
        "recovered": (not trace.diverged) and all(r["steps_to_recovery"] is not None for r in recoveries),
        "recoveries": recoveries,
        "status": trace.status,
        "message": trace.message,
    }


def _probe_scenario(base: Scenario, mode: WalkingMode, ground_speed: float, u_limit: float, n_steps: int, ramp: float):
    params = base.params.replace(mode=mode.value)
    v_d = ground_speed - params.l / params.T
    return base.replace(
        params=params,
        gains=resolve_gains(params, base.gains),
        command=VelocityProfile(((0.0, 0.0), (ramp, v_d))),
        step_size_limit=None if math.isinf(u_limit) else u_limit,
        n_steps=n_steps,
        disturbances=(),
    )


def probe_stable(base: Scenario, mode, ground_speed: float, u_limit: float, n_steps: int = 50, ramp: float = 2.0) -> bool:
    """Whether walking at ``ground_speed`` settles without clipping.

    Ground speed is the stance-pivot advance per step over the step period,
    ``(u + l) / T``; the orbit is commanded with ``v_d = ground_speed - l/T``.
    The run starts on the step-in-place orbit and ramps the command up.
    """
    trace = simulate(_probe_scenario(base, WalkingMode.parse(mode), ground_speed, u_limit, n_steps, ramp))
    return (not trace.diverged) and trace.n_steps == n_steps and not trace.clipped[-STEADY_WINDOW:].any()


def max_speed_search(
    base: Scenario,
    modes=(WalkingMode.HEEL_TO_TOE, WalkingMode.FLAT_FOOTED),
    u_limit: float = 0.8,
    resolution: float = 0.01,
    n_steps: int = 50,
    direction: int = 1,
    v_cap: float = 50.0,
) -> dict:
    """Largest stable ground speed per walking mode under a common step limit.

    Bisection between the step-in-place speed (must be stable) and the first
    unstable speed found by doubling. ``direction=-1`` searches backwards.
    An infinite limit returns ``inf`` without searching.
    """
    if not u_limit > 0:
        raise ValueError("u_limit must be positive")
    out = {}
    for mode in modes:
        mode = WalkingMode.parse(mode)
        params = base.params.replace(mode=mode.value)
        if math.isinf(u_limit):
            out[mode.value] = {"max_ground_speed": direction * math.inf, "max_command": direction * math.inf, "probes": 0}
            continue

        def stable(speed: float) -> bool:
            return probe_stable(base, mode, direction * speed, u_limit, n_steps)

        lo = max(0.0, direction * params.l / params.T)
        if not stable(lo):
            raise MLIPError(f"no stable speed found for {mode.value} under step limit {u_limit}")
        probes = 1
        step = 0.5
        hi = lo + step
        while stable(hi):
            probes += 1
            lo, step = hi, step * 2
            hi = lo + step
            if hi > v_cap:
                raise MLIPError(f"{mode.value} still stable at {hi:.3g} m/s; is the step limit binding?")
        probes += 1
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if stable(mid):
                lo = mid
            else:
                hi = mid
            probes += 1
        speed = direction * lo
        out[mode.value] = {
            "max_ground_speed": speed,
            "max_command": speed - params.l / params.T,
            "probes": probes,
        }
        log.info("%s: max ground speed %.3f m/s (%d probes)", mode.value, speed, probes)
    return out


def default_push_events(magnitude: float = 1.5) -> tuple[ForceEvent, ForceEvent]:
    """+/- pushes of 0.5 s at 15 s and 20 s."""
    return (ForceEvent(15.0, 0.5, magnitude), ForceEvent(20.0, 0.5, -magnitude))

