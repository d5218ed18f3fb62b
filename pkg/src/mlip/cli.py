"""Command-line entry point: ``mlip <command> [options]``.

Exit codes: 0 success, 1 input/schema error, 2 numerical failure
(singular system, non-convergence, divergence). Errors are also reported as
a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import figures
from .errors import MLIPError, SchemaError
from .experiments import SWEEP_SPEEDS, default_push_events, max_speed_search, push_experiment, steady_metrics, velocity_sweep
from .gains import invariant_box
from .io import PHASE_HEADER, STEP_HEADER, TRACE_HEADER, csv_text, json_text, load_json, packaged_config, write_artifacts
from .model import WalkingMode
from .orbits import fixed_point_residual, p1_orbit, p2_orbit, p2_orbit_from_width, phase_portrait
from .s2s import compose_s2s, compose_s2s_at_fa_end, structure_report
from .simulator import ForceEvent, PlantSpec, Scenario, VelocityProfile, simulate

log = logging.getLogger("mlip")

COMMANDS = ("matrices", "orbit", "gains", "simulate", "sweep", "push", "maxspeed", "figure")
RECOVERY_STEPS = 20
EXPERIMENT_KEYS = {"speeds", "pushes", "u_limit", "modes", "w_max", "direction"}


class NumericalFailure(Exception):
    """Raised for a run that finished but diverged."""


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys reach into nested objects."""
    for item in overrides or ():
        if "=" not in item:
            raise SchemaError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        target = doc
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise SchemaError(f"override {key!r} does not name an object field")
        target[parts[-1]] = _parse_value(value)
    return doc


def load_document(args) -> tuple[dict, dict]:
    """Scenario document and experiment options from ``--input`` plus overrides."""
    if args.input:
        try:
            doc = load_json(args.input)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{args.input}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise SchemaError(f"{args.input}: {exc.strerror}") from None
    else:
        doc = packaged_config("default.json")
    if not isinstance(doc, dict):
        raise SchemaError("input document must be a JSON object")
    doc = apply_overrides(doc, args.set)
    if args.seed is not None:
        doc["seed"] = args.seed
    experiment = doc.pop("experiment", {}) or {}
    unknown = set(experiment) - EXPERIMENT_KEYS
    if unknown:
        raise SchemaError(f"unknown experiment key: {sorted(unknown)[0]!r}")
    return doc, experiment


def _scenario(doc: dict) -> Scenario:
    try:
        return Scenario.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise SchemaError(str(exc)) from None


def cmd_matrices(args, doc, exp) -> tuple[dict, dict]:
    scenario = _scenario(doc)
    dyn = compose_s2s(scenario.params)
    report = structure_report(dyn)
    result = {
        "ua_end": dyn.to_dict(),
        "fa_end": compose_s2s_at_fa_end(scenario.params).to_dict(),
        "structure": report,
        "eigenvalues_A_M": [complex(v).real for v in np.linalg.eigvals(dyn.A_M)],
    }
    if not report["passed"]:
        raise MLIPError("structure identities failed")
    return result, {"matrices.json": json_text(result)}


def cmd_orbit(args, doc, exp):
    if args.mode:
        doc.setdefault("params", {})["mode"] = WalkingMode.parse(args.mode).value
    scenario = _scenario(doc)
    dyn = compose_s2s(scenario.params)
    v = args.v if args.v is not None else scenario.command(0.0)
    if args.kind == "P1":
        orbit = p1_orbit(dyn, v)
    elif args.u_left is not None:
        orbit = p2_orbit(dyn, v, args.u_left)
    else:
        orbit = p2_orbit_from_width(dyn, v, args.width if args.width is not None else scenario.step_width)
    result = {"orbit": orbit.to_dict(), "residual": fixed_point_residual(dyn, orbit), "params": scenario.params.to_dict()}
    return result, {
        "orbit.json": json_text(result),
        "orbit_phase.csv": csv_text(PHASE_HEADER, phase_portrait(dyn, orbit)),
    }


def _default_w_max(scenario: Scenario) -> np.ndarray:
    # residuals of a 0.78 m plant walking at 1 m/s: a stand-in for model error
    probe = scenario.replace(plant=PlantSpec("mismatched", 0.78), command=VelocityProfile.constant(1.0), n_steps=40, disturbances=())
    return np.max(np.abs(simulate(probe).w), axis=0)


def cmd_gains(args, doc, exp):
    scenario = _scenario(doc)
    dyn = compose_s2s(scenario.params)
    w_max = np.asarray(exp["w_max"], dtype=float) if "w_max" in exp else _default_w_max(scenario)
    box = invariant_box(scenario.gains.closed_loop(dyn.A_M, dyn.B_M), w_max)
    result = {"gain": scenario.gains.to_dict(), "box": box.to_dict()}
    return result, {"gains.json": json_text(result)}


def _trace_artifacts(prefix: str, trace) -> dict:
    return {
        f"{prefix}trace.csv": csv_text(TRACE_HEADER, trace.sample_rows()),
        f"{prefix}steps.csv": csv_text(STEP_HEADER, trace.step_rows()),
    }


def cmd_simulate(args, doc, exp):
    trace = simulate(_scenario(doc))
    metrics = steady_metrics(trace)
    metrics["message"] = trace.message
    artifacts = _trace_artifacts("", trace)
    artifacts["metrics.json"] = json_text(metrics)
    if trace.diverged:
        write_artifacts(args.out, artifacts)
        raise NumericalFailure(trace.message)
    return metrics, artifacts


def cmd_sweep(args, doc, exp):
    base = _scenario(doc)
    results = velocity_sweep(base, exp.get("speeds", SWEEP_SPEEDS))
    artifacts = {}
    summary = []
    for r in results:
        trace = r.pop("trace")
        tag = f"sweep_v{r['v_cmd']:+.3f}_"
        artifacts.update(_trace_artifacts(tag, trace))
        sl = trace.last_step_slice()
        artifacts[f"{tag}phase.csv"] = csv_text(TRACE_HEADER, trace.sample_rows(sl.start, sl.stop))
        summary.append(r)
    artifacts["sweep.json"] = json_text(summary)
    if any(r["status"] != "ok" for r in summary):
        write_artifacts(args.out, artifacts)
        raise NumericalFailure("a sweep run diverged")
    return summary, artifacts


def cmd_push(args, doc, exp):
    base = _scenario(doc)
    if "pushes" in exp:
        pushes = tuple(ForceEvent.from_dict(p) for p in exp["pushes"])
    else:
        pushes = default_push_events()
    if not pushes:
        raise SchemaError("experiment.pushes must list at least one push")
    # leave room to recover after the last push
    needed = math.ceil(max(p.t_end for p in pushes) / base.params.T) + RECOVERY_STEPS
    if base.n_steps < needed:
        log.info("extending run from %d to %d steps to cover the pushes", base.n_steps, needed)
        base = base.replace(n_steps=needed)
    res = push_experiment(base, pushes)
    result = {
        "recovered": res["recovered"],
        "recoveries": res["recoveries"],
        "box": res["box"].to_dict(),
        "status": res["status"],
        "message": res["message"],
    }
    artifacts = _trace_artifacts("push_", res["trace"])
    artifacts["push.json"] = json_text(result)
    if not res["recovered"]:
        write_artifacts(args.out, artifacts)
        raise NumericalFailure("push recovery failed: " + (res["message"] or "error never re-entered the box"))
    return result, artifacts


def cmd_maxspeed(args, doc, exp):
    base = _scenario(doc)
    u_limit = exp.get("u_limit", base.step_size_limit)
    if args.u_limit is not None:
        u_limit = args.u_limit
    u_limit = math.inf if u_limit is None else float(u_limit)
    modes = exp.get("modes", ["heel-to-toe", "flat-footed"])
    res = max_speed_search(base, modes, u_limit, direction=int(exp.get("direction", 1)))
    result = {"u_limit": u_limit, "modes": res}
    return result, {"maxspeed.json": json_text(result)}


def cmd_figure(args, doc, exp):
    base = _scenario(doc) if args.input else None
    artifacts = figures.all_figures(base)
    return {"files": sorted(artifacts)}, artifacts


HANDLERS = {
    "matrices": cmd_matrices,
    "orbit": cmd_orbit,
    "gains": cmd_gains,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "push": cmd_push,
    "maxspeed": cmd_maxspeed,
    "figure": cmd_figure,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlip", description="Multi-domain LIP walking toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="scenario JSON (defaults to the packaged gait config)")
    parser.add_argument("--out", default="mlip_out", help="directory for CSV/JSON artifacts")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a field; dotted keys allowed")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--quiet", action="store_true", help="do not echo the result JSON")
    orbit = parser.add_argument_group("orbit")
    orbit.add_argument("--v", type=float, help="desired velocity [m/s]")
    orbit.add_argument("--mode", help="heel-to-toe | toe-to-heel | flat-footed")
    orbit.add_argument("--kind", choices=("P1", "P2"), default="P1")
    orbit.add_argument("--width", type=float, help="P2 nominal step width [m]")
    orbit.add_argument("--u-left", type=float, help="P2 left step size [m]")
    parser.add_argument("--u-limit", type=float, help="step-size limit for maxspeed [m]")
    return parser


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MLIP_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        doc, exp = load_document(args)
        result, artifacts = HANDLERS[args.command](args, doc, exp)
    except (SchemaError, KeyError, TypeError, ValueError) as exc:
        return _error("schema", str(exc.args[0]) if exc.args else repr(exc), 1)
    except (MLIPError, NumericalFailure, np.linalg.LinAlgError) as exc:
        return _error("numerical", str(exc), 2)
    paths = write_artifacts(args.out, artifacts)
    log.info("wrote %d artifacts to %s", len(paths), Path(args.out).resolve())
    if not args.quiet:
        sys.stdout.write(json_text(result))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
