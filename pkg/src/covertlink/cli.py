"""Experiment configuration, presets and the command-line entry point.

A single JSON document configures a run; command-line ``--set`` flags
override file fields.  Presets ``fig3`` .. ``fig10`` reproduce the
standard experiment sweeps (DEP validation curves, covert-rate vs
warden count / array size / noise uncertainty / CSI error), each with a
desk-scale variant for quick runs.  All powers cross the dBm/watts
boundary here and nowhere else.

Exit codes: 0 all audits passed, 2 audit failure, 1 execution error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ArrayConfig, CsiErrorBound, rng_stream
from .covert_analysis import CovertSpec, dep, dep_floor, dep_lb, min_dep_lb, warden_stats
from .geometry import NodeGeometry, geo_satellite_position
from .optimizer import (
    RobustSpec,
    evaluate_solution,
    mrt_baseline,
    solve_jo_ba_imperfect,
    solve_jo_ba_perfect,
    solve_ob_imperfect,
    solve_ob_perfect,
    zf_baseline,
)
from .scenario import Scenario, build_geometry, dbm_to_watts
from .simkit import McConfig, empirical_min_dep, simulate_dep_curve, write_dep_curve_csv

PRESETS = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10")
DESIGNS = ("OB", "JO-BA", "MRT", "ZF")

AUDIT_MARGIN_TOL = -1e-6


class ConfigError(ValueError):
    pass


def _parse_array(text) -> ArrayConfig:
    if isinstance(text, (list, tuple)):
        mx, mz = int(text[0]), int(text[1])
    else:
        parts = str(text).lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"array spec must look like '8x8', got {text!r}")
        mx, mz = int(parts[0]), int(parts[1])
    return ArrayConfig(mx, mz)


_SCALAR_KEYS = {
    "freq_hz": float,
    "rho": float,
    "k_factor": float,
    "epsilon_w": float,
    "epsilon_b": float,
    "p_max_dbm": float,
    "noise_dbm": float,
    "alice_lat_deg": float,
    "alice_lon_deg": float,
    "bob_lon_deg": float,
    "theta0_deg": float,
    "seed": int,
}

SWEEPABLE = sorted(_SCALAR_KEYS.keys() - {"seed"}) + ["m_a", "m_sat", "n_w", "delta"]


def apply_overrides(sc: Scenario, overrides: dict) -> Scenario:
    """Typed application of override keys onto a scenario."""
    kwargs = {}
    covert = sc.covert
    for key, raw in overrides.items():
        if key == "m_a":
            kwargs["alice_array"] = _parse_array(raw)
        elif key == "m_sat":
            kwargs["sat_array"] = _parse_array(raw)
        elif key == "warden_lons_deg":
            kwargs["warden_lons_deg"] = tuple(float(v) for v in raw)
        elif key == "p_max_dbm":
            kwargs["p_max_w"] = dbm_to_watts(float(raw))
        elif key == "noise_dbm":
            kwargs["noise_nominal_w"] = dbm_to_watts(float(raw))
        elif key == "epsilon_w":
            covert = CovertSpec(float(raw), covert.epsilon_b)
        elif key == "epsilon_b":
            covert = CovertSpec(covert.epsilon_w, float(raw))
        elif key == "theta0_deg":
            kwargs["es_pattern"] = dataclasses.replace(sc.es_pattern, theta0_deg=float(raw))
        elif key in _SCALAR_KEYS:
            kwargs[key] = _SCALAR_KEYS[key](raw)
        else:
            raise ConfigError(
                f"unknown override {key!r}; valid keys: {', '.join(sorted(set(_SCALAR_KEYS) | {'m_a', 'm_sat', 'warden_lons_deg'}))}"
            )
    kwargs["covert"] = covert
    try:
        return sc.with_overrides(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class ExperimentConfig:
    preset: str | None = None
    design: tuple = ("OB",)
    csi: str = "perfect"  # "perfect" | "imperfect"
    deltas: tuple = (0.05,)
    sweep: tuple | None = None  # (variable, values)
    overrides: dict = field(default_factory=dict)
    mc: McConfig = McConfig(n_trials=100_000, seed=0)
    avg_seeds: int = 20
    out: str = "results"
    desk_scale: bool = False

    def scenario(self) -> Scenario:
        return apply_overrides(Scenario(), self.overrides)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration."""
    with open(path) as fh:
        raw = json.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    errors = []
    cfg = ExperimentConfig()
    if "preset" in raw and raw["preset"] is not None:
        if raw["preset"] not in PRESETS:
            errors.append(f"unknown preset {raw['preset']!r}; valid: {', '.join(PRESETS)}")
        else:
            cfg.preset = raw["preset"]
    if "design" in raw:
        designs = raw["design"] if isinstance(raw["design"], list) else [raw["design"]]
        for d in designs:
            if d not in DESIGNS:
                errors.append(f"unknown design {d!r}; valid: {', '.join(DESIGNS)}")
        cfg.design = tuple(designs)
    if "csi" in raw:
        if isinstance(raw["csi"], dict):
            cfg.csi = "imperfect"
            cfg.deltas = tuple(float(v) for v in raw["csi"].get("delta", [0.05]))
        elif raw["csi"] in ("perfect", "imperfect"):
            cfg.csi = raw["csi"]
        else:
            errors.append(f"csi must be 'perfect' or an imperfect spec, got {raw['csi']!r}")
    if "sweep" in raw and raw["sweep"] is not None:
        var = raw["sweep"].get("variable")
        vals = raw["sweep"].get("values", [])
        if var not in SWEEPABLE:
            errors.append(f"unknown sweep variable {var!r}; valid: {', '.join(SWEEPABLE)}")
        else:
            cfg.sweep = (var, list(vals))
    if "mc" in raw:
        cfg.mc = McConfig(
            n_trials=int(raw["mc"].get("n_trials", 100_000)),
            seed=int(raw["mc"].get("seed", 0)),
            batch=int(raw["mc"].get("batch", 200_000)),
        )
    cfg.avg_seeds = int(raw.get("avg_seeds", cfg.avg_seeds))
    cfg.out = raw.get("out", cfg.out)
    cfg.overrides = dict(raw.get("overrides", {}))
    if "rho" in cfg.overrides and float(cfg.overrides["rho"]) <= 1.0:
        errors.append(f"rho must exceed 1, got {cfg.overrides['rho']}")
    for eps_key in ("epsilon_w", "epsilon_b"):
        if eps_key in cfg.overrides and not 0.0 < float(cfg.overrides[eps_key]) < 1.0:
            errors.append(f"{eps_key} must lie in (0, 1), got {cfg.overrides[eps_key]}")
    if not errors:
        try:
            cfg.scenario()
        except ConfigError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(errors))
    return cfg


def scenario_to_dict(sc: Scenario) -> dict:
    d = dataclasses.asdict(sc)
    return d


def generate_wardens(
    n_w: int,
    longitude_range: tuple = (88.0, 92.0),
    seed: int | None = 0,
    d_sat: float = 6378e3 + 36000e3,
    alice_position: np.ndarray | None = None,
) -> list[NodeGeometry]:
    """Warden nodes on the GEO arc; uniform longitudes, or the fixed 1-degree
    comb around the arc center when ``seed`` is None."""
    if n_w < 1:
        raise ValueError("need at least one warden")
    lo, hi = longitude_range
    if seed is None:
        center = (lo + hi) / 2.0
        half = (n_w + 1) // 2
        offsets = [i for i in range(1, half + 1)]
        lons = []
        for o in offsets:
            lons.extend([center + o, center - o])
        lons = sorted(lons[:n_w], reverse=True)
    else:
        rng = rng_stream(seed, 7)
        lons = list(rng.uniform(lo, hi, size=n_w))
    if alice_position is None:
        alice_position = np.array([0.0, 6378e3, 0.0])
    nodes = []
    for lon in lons:
        q = geo_satellite_position(lon, d_sat)
        b = alice_position - q
        nodes.append(NodeGeometry(position=q, boresight=b / np.linalg.norm(b)))
    return nodes


def warden_longitudes(n_w: int, longitude_range=(88.0, 92.0), seed: int | None = 0) -> tuple:
    return tuple(
        float(np.degrees(np.arctan2(n.position[1], n.position[0])))
        for n in generate_wardens(n_w, longitude_range, seed)
    )


def _solve_design(design: str, geom, h, delta: float | None):
    if delta is None:
        if design == "OB":
            return solve_ob_perfect(geom, h)
        if design == "JO-BA":
            return solve_jo_ba_perfect(geom, h)
        if design == "MRT":
            return mrt_baseline(geom, h)
        if design == "ZF":
            return zf_baseline(geom, h)
    else:
        robust = RobustSpec(CsiErrorBound(delta_b=delta, delta_w=(delta,) * geom.n_wardens))
        if design == "OB":
            return solve_ob_imperfect(geom, h, robust)
        if design == "JO-BA":
            return solve_jo_ba_imperfect(geom, h, robust)
    raise ConfigError(f"design {design!r} does not support csi mode")


def run_point(task: dict) -> dict:
    """One sweep point: build, solve every requested design, audit."""
    sc: Scenario = task["scenario"]
    geom = build_geometry(sc)
    h = geom.sample_bob_channel(task.get("channel_trial", 0)).h
    row = dict(task["labels"])
    audits_ok = True
    for design in task["designs"]:
        delta = task.get("delta")
        try:
            sol = _solve_design(design, geom, h, delta)
            report = evaluate_solution(geom, sol, h)
            ok = report.covert_ok and report.top_value <= sc.covert.epsilon_b + 1e-6
            audits_ok &= ok
            row[f"R_{design}"] = sol.rate
        except Exception as exc:  # per-point failures recorded, run continues
            row[f"R_{design}"] = float("nan")
            row["error"] = f"{design}: {exc}"
            audits_ok = False
    row["audit_ok"] = audits_ok
    return row


def _fig3_fig4(cfg: ExperimentConfig, out_dir: Path) -> tuple[list[dict], bool]:
    """DEP validation curves (fig3) and minimum-DEP validation (fig4)."""
    sc = cfg.scenario()
    rows = []
    ok = True
    if cfg.preset == "fig3":
        for rho in (1.2, 1.5):
            sc_r = sc.with_overrides(rho=rho)
            geom = build_geometry(sc_r)
            h = geom.sample_bob_channel(0).h
            sol = mrt_baseline(geom, h)
            p_a = sc_r.p_max_w
            noise = geom.noise_warden
            taus = np.linspace(0.5 * noise.lb, 2.0 * noise.ub, 20)
            curve = simulate_dep_curve(geom, sol.w, p_a, 0, taus, cfg.mc)
            stats = warden_stats(
                geom.link_warden(0), geom.los_wardens[0], geom.combiner_wardens[0],
                sol.w, p_a, sc_r.k_factor,
            )
            xa = [dep(stats, noise, t) for t in taus]
            xl = dep_lb(stats, noise, taus)
            write_dep_curve_csv(out_dir / f"fig3_rho{rho}.csv", taus, curve.xi_emp, curve.se, xa, xl)
            for t, e, s, a, l in zip(taus, curve.xi_emp, curve.se, xa, xl):
                ok &= abs(a - e) <= max(0.02, 3 * s)
                rows.append({"rho": rho, "tau": t, "xi_emp": e, "se": s, "xi_analytic": a, "xi_lb": l})
    else:  # fig4
        sweeps = [("p_dbm", [30.0, 35.0, 40.0, 45.0, 50.0]), ("rho", [1.1, 1.3, 1.5, 1.7, 2.0])]
        for var, values in sweeps:
            for v in values:
                sc_v = sc.with_overrides(rho=v) if var == "rho" else sc
                p_a = sc_v.p_max_w if var == "rho" else dbm_to_watts(v)
                geom = build_geometry(sc_v)
                h = geom.sample_bob_channel(0).h
                sol = mrt_baseline(geom, h)
                stats = warden_stats(
                    geom.link_warden(0), geom.los_wardens[0], geom.combiner_wardens[0],
                    sol.w, p_a, sc_v.k_factor,
                )
                tau_hat, xi_hat, se = empirical_min_dep(geom, sol.w, p_a, 0, cfg.mc)
                row = {
                    "variable": var, "value": v,
                    "xi_emp_min": xi_hat, "se": se,
                    "xi_check_min": min_dep_lb(stats, geom.noise_warden),
                    "xi_floor": dep_floor(stats, geom.noise_warden),
                }
                ok &= row["xi_floor"] <= row["xi_check_min"] <= xi_hat + 3 * se + 0.01
                rows.append(row)
    return rows, ok


def build_tasks(cfg: ExperimentConfig) -> list[dict]:
    """Expand a rate-sweep preset or a generic sweep into point tasks."""
    sc = cfg.scenario()
    desk = cfg.desk_scale
    tasks = []

    def task(labels, scenario, designs, delta=None, trial=0):
        return {
            "labels": labels, "scenario": scenario, "designs": tuple(designs),
            "delta": delta, "channel_trial": trial,
        }

    if cfg.preset == "fig5":
        n_ws = [1, 2, 4, 6, 8] if desk else [1, 2, 4, 6, 8, 12]
        n_seeds = 3 if desk else cfg.avg_seeds
        base = sc.with_overrides(alice_array=ArrayConfig(4, 4)) if desk else sc
        for n_w in n_ws:
            for s in range(n_seeds):
                lons = warden_longitudes(n_w, seed=1000 + s)
                tasks.append(
                    task({"n_w": n_w, "placement_seed": s},
                         base.with_overrides(warden_lons_deg=lons, seed=s),
                         ("OB", "JO-BA", "MRT", "ZF"), trial=s)
                )
    elif cfg.preset == "fig6":
        m_as = ["2x2", "4x4", "6x6"] if desk else ["2x2", "4x4", "6x6", "8x8"]
        m_sats = ["2x2", "4x4"] if desk else ["2x2", "4x4", "8x8"]
        for m_sat in m_sats:
            for m_a in m_as:
                tasks.append(
                    task({"m_a": m_a, "m_sat": m_sat},
                         apply_overrides(sc, {"m_a": m_a, "m_sat": m_sat}),
                         ("JO-BA",))
                )
    elif cfg.preset == "fig7":
        rhos = [1.1, 1.3, 1.5, 2.0, 3.0]
        p_dbms = [40.0, 50.0] if desk else [30.0, 40.0, 50.0]
        base = sc.with_overrides(alice_array=ArrayConfig(4, 4)) if desk else sc
        for p_dbm in p_dbms:
            for rho in rhos:
                tasks.append(
                    task({"rho": rho, "p_dbm": p_dbm},
                         apply_overrides(base, {"rho": rho, "p_max_dbm": p_dbm}),
                         ("JO-BA",))
                )
    elif cfg.preset == "fig8":
        base = sc.with_overrides(alice_array=ArrayConfig(4, 4)) if desk else sc
        for delta in [0.0, 0.01, 0.02, 0.05]:
            tasks.append(task({"delta": delta}, base, ("OB", "JO-BA"), delta=delta))
    elif cfg.preset == "fig9":
        m_as = ["2x2", "4x4"] if desk else ["2x2", "4x4", "6x6", "8x8"]
        m_sats = ["2x2"] if desk else ["2x2", "8x8"]
        for m_sat in m_sats:
            for m_a in m_as:
                for delta in [0.0, 0.05]:
                    tasks.append(
                        task({"m_a": m_a, "m_sat": m_sat, "delta": delta},
                             apply_overrides(sc, {"m_a": m_a, "m_sat": m_sat}),
                             ("JO-BA",), delta=delta)
                    )
    elif cfg.preset == "fig10":
        rhos = [1.1, 1.5, 2.0] if desk else [1.1, 1.3, 1.5, 2.0, 3.0]
        p_dbms = [50.0] if desk else [30.0, 50.0]
        base = sc.with_overrides(alice_array=ArrayConfig(4, 4)) if desk else sc
        for p_dbm in p_dbms:
            for rho in rhos:
                for delta in [0.0, 0.05]:
                    tasks.append(
                        task({"rho": rho, "p_dbm": p_dbm, "delta": delta},
                             apply_overrides(base, {"rho": rho, "p_max_dbm": p_dbm}),
                             ("JO-BA",), delta=delta)
                    )
    elif cfg.sweep is not None:
        var, values = cfg.sweep
        for v in values:
            if var == "n_w":
                lons = warden_longitudes(int(v), seed=sc.seed)
                sc_v = sc.with_overrides(warden_lons_deg=lons)
                delta = None
            elif var == "delta":
                sc_v, delta = sc, float(v)
            else:
                sc_v = apply_overrides(sc, {var: v})
                delta = None
            if delta is None and cfg.csi == "imperfect":
                delta = cfg.deltas[0]
            tasks.append(task({var: v}, sc_v, cfg.design, delta=delta))
    else:
        delta = cfg.deltas[0] if cfg.csi == "imperfect" else None
        tasks.append(task({}, sc, cfg.design, delta=delta))
    return tasks


def _average_rows(rows: list[dict]) -> list[dict]:
    """Average rate columns over placement seeds, preserving sweep order."""
    if not rows or "placement_seed" not in rows[0]:
        return rows
    grouped: dict = {}
    order = []
    for r in rows:
        key = tuple((k, v) for k, v in r.items() if k not in ("placement_seed",) and not k.startswith("R_") and k not in ("audit_ok", "error"))
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(r)
    out = []
    for key in order:
        bunch = grouped[key]
        row = dict(key)
        for col in bunch[0]:
            if col.startswith("R_"):
                row[col] = float(np.mean([b[col] for b in bunch]))
        row["audit_ok"] = all(b.get("audit_ok", True) for b in bunch)
        row["n_seeds"] = len(bunch)
        out.append(row)
    return out


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> tuple[list[dict], dict]:
    """Execute a configured experiment; returns (rows, metadata)."""
    t0 = time.time()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.preset in ("fig3", "fig4"):
        rows, ok = _fig3_fig4(cfg, out_dir)
    else:
        tasks = build_tasks(cfg)
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                raw_rows = list(pool.map(run_point, tasks))
        else:
            raw_rows = [run_point(t) for t in tasks]
        rows = _average_rows(raw_rows)
        ok = all(r.get("audit_ok", True) for r in rows)

    name = cfg.preset or "sweep"
    csv_path = out_dir / f"{name}.csv"
    if rows:
        cols = list(rows[0].keys())
        with csv_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)

    meta = {
        "preset": cfg.preset,
        "design": list(cfg.design),
        "csi": cfg.csi,
        "deltas": list(cfg.deltas),
        "sweep": list(cfg.sweep) if cfg.sweep else None,
        "overrides": cfg.overrides,
        "mc": {"n_trials": cfg.mc.n_trials, "seed": cfg.mc.seed, "batch": cfg.mc.batch},
        "avg_seeds": cfg.avg_seeds,
        "desk_scale": cfg.desk_scale,
        "scenario": scenario_to_dict(cfg.scenario()),
        "audits_passed": ok,
        "wall_time_s": time.time() - t0,
        "solver": "clarabel/scs via cvxpy",
    }
    with (out_dir / f"{name}_meta.json").open("w") as fh:
        json.dump(meta, fh, indent=2, default=str)
    return rows, meta


def _parse_set_flags(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="covertlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment preset or config")
    run_p.add_argument("--preset", choices=PRESETS)
    run_p.add_argument("--config", type=Path)
    run_p.add_argument("--out", default="results")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    run_p.add_argument("--desk-scale", action="store_true")
    run_p.add_argument("--workers", type=int, default=1)
    run_p.add_argument("--echo-config", action="store_true")

    val_p = sub.add_parser("validate", help="validate a configuration file")
    val_p.add_argument("--config", type=Path, required=True)

    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(json.dumps(scenario_to_dict(cfg.scenario()), indent=2, default=str))
            print("configuration valid")
            return 0

        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.preset:
            cfg.preset = args.preset
        if args.out:
            cfg.out = args.out
        if args.seed is not None:
            cfg.overrides["seed"] = args.seed
            cfg.mc = McConfig(n_trials=cfg.mc.n_trials, seed=args.seed, batch=cfg.mc.batch)
        cfg.desk_scale = cfg.desk_scale or args.desk_scale
        if cfg.desk_scale and cfg.preset == "fig3":
            cfg.mc = McConfig(n_trials=min(cfg.mc.n_trials, 100_000), seed=cfg.mc.seed, batch=cfg.mc.batch)
        cfg.overrides.update(_parse_set_flags(args.set))
        cfg.scenario()  # validate overrides early

        if args.echo_config:
            echo = {
                "preset": cfg.preset, "design": list(cfg.design), "csi": cfg.csi,
                "out": cfg.out, "desk_scale": cfg.desk_scale,
                "mc": {"n_trials": cfg.mc.n_trials, "seed": cfg.mc.seed},
                "scenario": scenario_to_dict(cfg.scenario()),
            }
            print(json.dumps(echo, indent=2, default=str))

        if cfg.preset is None and cfg.sweep is None:
            print("nothing to run: give --preset or a config with a sweep", file=sys.stderr)
            return 1
        rows, meta = run_experiment(cfg, workers=args.workers)
        print(f"{len(rows)} rows -> {cfg.out}; audits {'passed' if meta['audits_passed'] else 'FAILED'}")
        return 0 if meta["audits_passed"] else 2
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"execution error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
