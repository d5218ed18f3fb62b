"""CSV bundles behind the phase-portrait, sweep, push and top-speed figures."""

from __future__ import annotations

from .experiments import default_push_events, max_speed_search, push_experiment, velocity_sweep
from .io import PHASE_HEADER, STEP_HEADER, TRACE_HEADER, csv_text, json_text, packaged_config
from .model import GaitParams
from .orbits import p1_orbit, p2_orbit_from_width, phase_portrait
from .s2s import compose_s2s
from .simulator import PlantSpec, Scenario, VelocityProfile, simulate


def _tag(v: float) -> str:
    return f"{v:+.2f}".replace("+", "p").replace("-", "m").replace(".", "_")


def _phase_csv(params: GaitParams, orbit) -> str:
    return csv_text(PHASE_HEADER, phase_portrait(compose_s2s(params), orbit))


def fig4(base: Scenario, cfg: dict) -> dict[str, str]:
    out = {}
    h2t = base.params.replace(mode="heel-to-toe")
    dyn = compose_s2s(h2t)
    for v in cfg["heel_to_toe_speeds"]:
        out[f"fig4a_h2t_v{_tag(v)}.csv"] = _phase_csv(h2t, p1_orbit(dyn, v))
    v = cfg["mode_comparison_speed"]
    for mode in ("heel-to-toe", "flat-footed"):
        params = base.params.replace(mode=mode)
        out[f"fig4b_{mode}_v{_tag(v)}.csv"] = _phase_csv(params, p1_orbit(compose_s2s(params), v))
    v = cfg["toe_to_heel_speed"]
    for T in cfg["toe_to_heel_step_times"]:
        # keep the 40/40/20 domain split
        params = base.params.replace(mode="toe-to-heel", T_FA=0.4 * T, T_UA=0.4 * T, T_OA=0.2 * T)
        out[f"fig4c_t2h_T{_tag(T)}.csv"] = _phase_csv(params, p1_orbit(compose_s2s(params), v))
    lateral = GaitParams.from_dict(packaged_config("lateral.json")["params"])
    dyn = compose_s2s(lateral)
    for w in cfg["p2_widths"]:
        out[f"fig4d_p2_w{_tag(w)}.csv"] = _phase_csv(lateral, p2_orbit_from_width(dyn, 0.0, w))
    return out


def _trace_csvs(prefix: str, trace) -> dict[str, str]:
    return {
        f"{prefix}_trace.csv": csv_text(TRACE_HEADER, trace.sample_rows()),
        f"{prefix}_steps.csv": csv_text(STEP_HEADER, trace.step_rows()),
    }


def fig5(base: Scenario, cfg: dict) -> dict[str, str]:
    sag = base.replace(
        params=base.params.replace(mode="heel-to-toe"),
        command=VelocityProfile.constant(cfg["sagittal_speed"]),
        n_steps=cfg["n_steps"],
    )
    trace = simulate(sag)
    out = _trace_csvs("fig5_sagittal", trace)
    sl = trace.last_step_slice()
    out["fig5c_phase.csv"] = csv_text(TRACE_HEADER, trace.sample_rows(sl.start, sl.stop))

    lat_doc = packaged_config("lateral.json")
    lat_doc["n_steps"] = cfg["n_steps"]
    out.update(_trace_csvs("fig5d_lateral", simulate(Scenario.from_dict(lat_doc))))
    return out


def fig6(base: Scenario, cfg: dict) -> dict[str, str]:
    out = {}
    summary = []
    for plant_name, plant in (("exact", PlantSpec()), ("mismatched", PlantSpec("mismatched", cfg["mismatched_z0"]))):
        results = velocity_sweep(base.replace(plant=plant, n_steps=cfg["n_steps"]), cfg["speeds"])
        for r in results:
            trace = r.pop("trace")
            tag = f"fig6_{plant_name}_v{_tag(r['v_cmd'])}"
            out[f"{tag}_steps.csv"] = csv_text(
                ("k", "t", "v_d", "v_step", "p_R", "L_R", "u_R"),
                ((k, k * trace.T, trace.v_d[k], trace.u[k] / trace.T, trace.x[k, 0], trace.x[k, 1], trace.u[k]) for k in range(trace.n_steps)),
            )
            sl = trace.last_step_slice()
            out[f"{tag}_phase.csv"] = csv_text(TRACE_HEADER, trace.sample_rows(sl.start, sl.stop))
            summary.append({"plant": plant_name, **r})
    out["fig6_summary.json"] = json_text(summary)
    return out


def fig7(base: Scenario, cfg: dict) -> dict[str, str]:
    out = {}
    summary = []
    plant = PlantSpec("mismatched", cfg["mismatched_z0"])
    for v in cfg["speeds"]:
        scenario = base.replace(plant=plant, command=VelocityProfile.preamble_ramp(v), n_steps=cfg["n_steps"])
        res = push_experiment(scenario, default_push_events(cfg["magnitude"]))
        trace = res["trace"]
        tag = f"fig7_v{_tag(v)}"
        out[f"{tag}_steps.csv"] = csv_text(
            ("k", "t", "v_d", "v_step", "e_p", "e_L", "u_R"),
            ((k, k * trace.T, trace.v_d[k], trace.u[k] / trace.T, *trace.errors[k], trace.u[k]) for k in range(trace.n_steps)),
        )
        summary.append({"v_cmd": v, "recovered": res["recovered"], "recoveries": res["recoveries"], "box": res["box"].to_dict()})
    out["fig7_summary.json"] = json_text(summary)
    return out


def fig8(base: Scenario, cfg: dict) -> dict[str, str]:
    res = max_speed_search(base, u_limit=cfg["u_limit"], n_steps=cfg["n_steps"])
    out = {"fig8_maxspeed.json": json_text({"u_limit": cfg["u_limit"], "modes": res})}
    for mode, r in res.items():
        params = base.params.replace(mode=mode)
        scenario = base.replace(
            params=params,
            command=VelocityProfile(((0.0, 0.0), (2.0, r["max_command"]))),
            step_size_limit=cfg["u_limit"],
            n_steps=cfg["n_steps"],
        )
        trace = simulate(scenario)
        out[f"fig8_{mode}_steps.csv"] = csv_text(STEP_HEADER, trace.step_rows())
        sl = trace.last_step_slice()
        out[f"fig8_{mode}_phase.csv"] = csv_text(TRACE_HEADER, trace.sample_rows(sl.start, sl.stop))
    return out


def all_figures(base: Scenario | None = None, config: dict | None = None) -> dict[str, str]:
    config = packaged_config("figures.json") if config is None else config
    base = Scenario.from_dict(packaged_config("default.json")) if base is None else base
    out = {}
    for name, fn in (("fig4", fig4), ("fig5", fig5), ("fig6", fig6), ("fig7", fig7), ("fig8", fig8)):
        out.update(fn(base, config[name]))
    return out


__all__ = ["all_figures", "fig4", "fig5", "fig6", "fig7", "fig8"]
