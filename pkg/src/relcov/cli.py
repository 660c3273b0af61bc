"""Command-line front end: ``relcov <subcommand> [options]``.

Every run writes its data files plus ``manifest.json`` into ``--out-dir``. Passing
that manifest back through ``--config`` reproduces the outputs bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .allocate import (
    LocalizationModel,
    build_rate_map,
    check_requirements,
    conservative_rate,
    rate_map_from_thresholds,
)
from .config import Scenario, _merge, apply_overrides, load_scenario, preset, scenario_from_dict
from .dimensioning import (
    SweepSpec,
    critical_bandwidths,
    deployment_seed,
    density_comparison,
    min_bandwidth,
    run_sweep,
    trace_stream,
)
from .errors import ConfigError, RelcovError, TargetInfeasible
from .evt import (
    MeasurementSet,
    OutageMap,
    TailProbe,
    build_outage_map,
    coverage_from_outage,
    measurement_layout,
    simulate_tails,
    simulated_outage_maps,
)
from .reliability import reliability_coverage, reliability_map
from .scenario import (
    Deployment,
    Location,
    build_grid,
    derive_seed,
    generate_bpp_deployment,
)
from .sinr import sinr_threshold

log = logging.getLogger("relcov")

COMMANDS = ("dimension", "sweep", "relmap", "evtmap", "allocate")


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    version: str = __version__
    duration_s: float = 0.0
    outputs: dict = field(default_factory=dict)  # file name -> sha256

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1)


class Outputs:
    """Collects the files a run writes, for the manifest digests."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=1, default=_jsonable)

    def digests(self) -> dict:
        return {n: hashlib.sha256((self.dir / n).read_bytes()).hexdigest() for n in self.files}


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _gtag(g: float) -> str:
    return f"{g:g}".replace("-", "m")


# -- scenario plumbing ---------------------------------------------------------

def resolve_scenario(args) -> Scenario:
    base = preset(args.figure).to_dict() if args.figure else Scenario().to_dict()
    if args.config:
        loaded = load_scenario(args.config)
        if args.figure:
            base = _merge(base, _raw_config(args.config))
        else:
            base = loaded.to_dict()
    scn = scenario_from_dict(base)
    scn = apply_overrides(scn, args.set)
    if args.seed is not None:
        scn = replace(scn, simulation=replace(scn.simulation, seed=int(args.seed)))
    if getattr(args, "radius", None) is not None:
        scn = apply_overrides(scn, [f"allocate.error_radius_m={args.radius}"])
    if getattr(args, "layout", None):
        scn = apply_overrides(scn, [f"evt.layout={args.layout}"])
    if getattr(args, "measurements", None):
        scn = apply_overrides(scn, [f"evt.measurements={args.measurements}"])
    if getattr(args, "outage_map", None):
        scn = apply_overrides(scn, [f"allocate.outage_map={args.outage_map}"])
    return scn


def _raw_config(path) -> dict:
    data = yaml.safe_load(Path(path).read_text()) or {}
    if "subcommand" in data and "config" in data:
        data = data["config"]
    return data


def deployments(scn: Scenario):
    """(index, deployment) pairs; explicit AP locations give a single deployment."""
    seed = scn.simulation.seed
    if scn.simulation.ap_locations:
        yield 0, Deployment.from_coords(scn.simulation.ap_locations, seed)
        return
    n = scn.resources.n_aps
    for k in range(scn.simulation.n_deployments):
        yield k, generate_bpp_deployment(scn.area, n, deployment_seed(seed, n, k))


def _alpha_levels(scn: Scenario) -> list[float]:
    return [float(a) for a in (scn.evt.alpha_stars or [scn.requirements.alpha_star])]


def _gammas(scn: Scenario) -> list[float]:
    return [float(g) for g in (scn.evt.gammas or [scn.requirements.gamma_latency])]


def _spread(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "min": float(v.min()), "max": float(v.max()), "values": v.tolist()}


def _config_for(scn: Scenario, dep: Deployment):
    return replace(scn.resources, n_aps=len(dep))


# -- gnuplot -------------------------------------------------------------------

def _gnuplot_map(csv_name: str, column: int, title: str) -> str:
    return (f"set datafile separator ','\nset title '{title}'\nset size ratio -1\n"
            "set xlabel 'x [m]'\nset ylabel 'y [m]'\nset palette rgbformulae 33,13,10\n"
            f"plot '{csv_name}' every ::1 using 1:2:{column} with image notitle\n")


def _gnuplot_sweep(csv_name: str, table) -> str:
    lines = ["set datafile separator ','", "set logscale x", "set key bottom right",
             "set xlabel 'bandwidth [Hz]'", "set ylabel 'reliability coverage'", "set yrange [0:1.02]"]
    series = sorted({(r.n_aps, r.alpha_star) for r in table.rows})
    plots = [f"'{csv_name}' every ::1 using ($2=={n} && abs($3-{a!r})<1e-12 ? $1 : 1/0):4 "
             f"with linespoints title 'n={n}, alpha={a:g}'" for n, a in series]
    return "\n".join(lines) + "\nplot " + ", \\\n     ".join(plots) + "\n"


# -- subcommands ---------------------------------------------------------------

def cmd_relmap(scn: Scenario, out: Outputs, args) -> int:
    grid = build_grid(scn.area, scn.simulation.grid_spacing)
    alphas = _alpha_levels(scn)
    summary = {"eta": {}, "undersampled": {}}
    for k, dep in deployments(scn):
        config = _config_for(scn, dep)
        rmap = reliability_map(grid, dep, config, scn.requirements, scn.simulation.n_trials,
                               scn.simulation.seed, scn.channel, args.workers,
                               stream_key=trace_stream(len(dep), k))
        name = f"relmap_k{k}"
        rmap.to_csv(out.path(name + ".csv"), log10_outage=True)
        rmap.to_json(out.path(name + ".json"))
        for a in alphas:
            summary["eta"].setdefault(f"{a:g}", []).append(reliability_coverage(rmap, a).eta)
            n_under = int(np.count_nonzero(rmap.undersampled(a)))
            summary["undersampled"].setdefault(f"{a:g}", []).append(n_under)
            if n_under:
                log.warning("deployment %d: %d points undersampled for alpha*=%g", k, n_under, a)
        if args.gnuplot:
            out.path(name + ".gp").write_text(_gnuplot_map(name + ".csv", 6, "log10 outage"))
    summary["eta"] = {a: _spread(v) for a, v in summary["eta"].items()}
    out.write_json("relmap_summary.json", summary)
    return 0


def _measured_outage_maps(scn: Scenario) -> dict:
    grid = build_grid(scn.area, scn.simulation.grid_spacing)
    loader = MeasurementSet.from_json if scn.evt.measurements.endswith(".json") else MeasurementSet.from_csv
    ms = loader(scn.evt.measurements, scn.evt.min_samples)
    maps = {}
    for g in _gammas(scn):
        req = replace(scn.requirements, gamma_latency=g)
        maps[g] = build_outage_map(ms, grid, req, scn.resources, scn.evt.interp_spec(),
                                   scn.evt.tail_fraction, scn.evt.domain, scn.evt.estimator)
    return maps


def _layout_seed(seed: int, n: int, k: int) -> int:
    return derive_seed(seed, 4, n, k)


def _simulated_tails(scn: Scenario, k: int, dep: Deployment, thresholds, epsilons, workers):
    grid = build_grid(scn.area, scn.simulation.grid_spacing)
    config = _config_for(scn, dep)
    seed = scn.simulation.seed
    idx = measurement_layout(grid, scn.evt.layout, _layout_seed(seed, len(dep), k))
    probe = TailProbe([config.noise_power_w()], [thresholds], epsilons, scn.evt.tail_fraction,
                      scn.evt.domain)
    res = simulate_tails(grid, idx, dep, config, scn.channel, scn.simulation.n_trials, seed, probe,
                         trace_stream(len(dep), k), workers)
    return grid, idx, [r[0] for r in res]


def cmd_evtmap(scn: Scenario, out: Outputs, args) -> int:
    gammas = _gammas(scn)
    alphas = _alpha_levels(scn)
    if scn.evt.measurements:
        runs = [(0, _measured_outage_maps(scn))]
    else:
        grid = build_grid(scn.area, scn.simulation.grid_spacing)
        seed = scn.simulation.seed
        runs = []
        for k, dep in deployments(scn):
            maps = simulated_outage_maps(
                grid, dep, _config_for(scn, dep), scn.channel, scn.requirements.payload_bits, gammas,
                scn.simulation.n_trials, seed, scn.evt.layout, scn.evt.interp_spec(),
                scn.evt.tail_fraction, scn.evt.domain, scn.evt.estimator, trace_stream(len(dep), k),
                args.workers, _layout_seed(seed, len(dep), k))
            runs.append((k, maps))
    eta = {}
    failed = []
    for k, maps in runs:
        for g, omap in maps.items():
            name = f"outage_k{k}_g{_gtag(g)}"
            omap.to_csv(out.path(name + ".csv"))
            omap.to_json(out.path(name + ".json"))
            if args.gnuplot:
                out.path(name + ".gp").write_text(_gnuplot_map(name + ".csv", 4, "log10 outage"))
            for a in alphas:
                eta.setdefault(f"gamma={g:g}", {}).setdefault(f"{a:g}", []).append(
                    coverage_from_outage(omap, a, g).eta)
        failed.append(int(next(iter(maps.values())).meta.get("failed_fits", 0)))
    summary = {"eta": {g: {a: _spread(v) for a, v in d.items()} for g, d in eta.items()},
               "failed_fits": failed, "layout": scn.evt.layout}
    out.write_json("evtmap_summary.json", summary)
    return 0


def _write_conservative(out: Outputs, name: str, scn: Scenario, rmap) -> None:
    locs = scn.allocate.reported_locations or []
    model = LocalizationModel(scn.allocate.error_radius_m)
    with open(out.path(name), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "error_radius_m", "rate_bps", "nearest_rate_bps"])
        for x, y in locs:
            loc = Location(float(x), float(y))
            if not scn.area.contains(loc.x, loc.y):
                raise ConfigError(f"scenario.allocate.reported_locations: ({x}, {y}) is outside the area")
            rate = conservative_rate(loc, model, rmap)
            near = conservative_rate(loc, LocalizationModel(0.0), rmap)
            w.writerow([f"{x:.6g}", f"{y:.6g}", f"{model.error_radius:.6g}", f"{rate:.10g}", f"{near:.10g}"])


def cmd_allocate(scn: Scenario, out: Outputs, args) -> int:
    req = scn.requirements
    eps = req.outage_target if scn.allocate.epsilon is None else float(scn.allocate.epsilon)
    levels = scn.allocate.rate_levels
    verdicts = []
    if scn.allocate.outage_map:
        omap = OutageMap.from_json(scn.allocate.outage_map)
        v = check_requirements(omap, req, scn.resources)
        verdicts.append({"deployment": None, "source": "outage_map", **v.to_dict()})
    elif scn.evt.measurements:
        grid = build_grid(scn.area, scn.simulation.grid_spacing)
        loader = MeasurementSet.from_json if scn.evt.measurements.endswith(".json") else MeasurementSet.from_csv
        ms = loader(scn.evt.measurements, scn.evt.min_samples)
        rmap = build_rate_map(ms, grid, eps, scn.resources.bandwidth_hz, scn.evt.interp_spec(),
                              scn.evt.tail_fraction, scn.evt.domain, levels)
        rmap.to_csv(out.path("rates_k0.csv"))
        rmap.to_json(out.path("rates_k0.json"))
        _write_conservative(out, "conservative_k0.csv", scn, rmap)
        v = check_requirements(rmap, req, scn.resources, eps)
        verdicts.append({"deployment": 0, "source": "measurements", **v.to_dict()})
    else:
        t = sinr_threshold(req.payload_bits, scn.resources.bandwidth_hz, req.gamma_latency)
        for k, dep in deployments(scn):
            grid, idx, summ = _simulated_tails(scn, k, dep, [t], [eps], args.workers)
            stars = [s.sinr_star[0] for s in summ]
            meta = {"domain": scn.evt.domain, "tail_fraction": scn.evt.tail_fraction,
                    "layout": scn.evt.layout, "failed_fits": int(sum(s.fit is None for s in summ))}
            rmap = rate_map_from_thresholds(grid, grid.coords[idx], stars, eps, scn.resources.bandwidth_hz,
                                            scn.evt.interp_spec(), levels, meta)
            rmap.to_csv(out.path(f"rates_k{k}.csv"))
            rmap.to_json(out.path(f"rates_k{k}.json"))
            if args.gnuplot:
                out.path(f"rates_k{k}.gp").write_text(_gnuplot_map(f"rates_k{k}.csv", 3, "rate [bit/s]"))
            _write_conservative(out, f"conservative_k{k}.csv", scn, rmap)
            v = check_requirements(rmap, req, scn.resources, eps)
            verdicts.append({"deployment": k, "source": "simulation", **v.to_dict()})
    out.write_json("verdict.json", {"verdicts": verdicts,
                                    "pass": all(v["pass"] for v in verdicts)})
    return 0


def _sweep_spec(scn: Scenario) -> SweepSpec:
    s = scn.sweep
    return SweepSpec(tuple(float(w) for w in s.bandwidths_hz), tuple(int(n) for n in s.densities),
                     tuple(float(a) for a in s.alpha_stars), s.n_deployments, s.n_trials,
                     s.grid_spacing, scn.simulation.seed, scn.evt.estimator, scn.evt.tail_fraction,
                     scn.evt.domain)


def _emit_sweep(scn: Scenario, out: Outputs, args) -> None:
    table = run_sweep(_sweep_spec(scn), scn, args.workers)
    table.to_csv(out.path("dimensioning.csv"))
    table.to_json(out.path("dimensioning.json"))
    if args.gnuplot:
        out.path("dimensioning.gp").write_text(_gnuplot_sweep("dimensioning.csv", table))
    report = {}
    for a in sorted({r.alpha_star for r in table.rows}):
        for probe in sorted({scn.requirements.eta_star, 0.5}):
            report[f"alpha={a:g},eta={probe:g}"] = [asdict(d) for d in density_comparison(table, probe, a)]
    out.write_json("density_comparison.json", report)


def cmd_sweep(scn: Scenario, out: Outputs, args) -> int:
    _emit_sweep(scn, out, args)
    return 0


def cmd_dimension(scn: Scenario, out: Outputs, args) -> int:
    d = scn.dimension
    if d.run_sweep:
        _emit_sweep(scn, out, args)
    if not d.search:
        return 0
    eta_star = scn.requirements.eta_star if d.eta_star is None else d.eta_star
    alpha_star = scn.requirements.alpha_star if d.alpha_star is None else d.alpha_star
    n = scn.resources.n_aps if d.n_aps is None else d.n_aps
    s = scn.sweep
    result = {"eta_star": eta_star, "alpha_star": alpha_star, "n_aps": n, "w_lo": d.w_lo,
              "w_hi": d.w_hi, "rel_tol": d.rel_tol}
    crit = critical_bandwidths(scn, n, alpha_star, d.w_lo, d.w_hi, d.rel_tol, s.n_deployments,
                               s.n_trials, s.grid_spacing, scn.simulation.seed, scn.evt.estimator,
                               scn.evt.tail_fraction, scn.evt.domain, args.workers)
    try:
        w = min_bandwidth(eta_star, alpha_star, n, d.w_lo, d.w_hi, d.rel_tol, scn, critical=crit)
    except TargetInfeasible as exc:
        result.update(feasible=False, eta_at_w_hi=exc.eta_at_upper, message=str(exc))
        out.write_json("min_bandwidth.json", result)
        raise
    result.update(feasible=True, min_bandwidth_hz=w, eta_at_result=_spread(crit.eta_per_deployment(w)))
    out.write_json("min_bandwidth.json", result)
    return 0


HANDLERS = {"dimension": cmd_dimension, "sweep": cmd_sweep, "relmap": cmd_relmap,
            "evtmap": cmd_evtmap, "allocate": cmd_allocate}


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario YAML (or a run manifest to replay)")
    common.add_argument("--figure", choices=["fig3", "fig4", "fig5", "fig6"],
                        help="start from a figure preset")
    common.add_argument("--seed", type=int, help="master seed (overrides simulation.seed)")
    common.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    common.add_argument("--out-dir", default="relcov-out", help="output directory")
    common.add_argument("--dump-params", action="store_true",
                        help="print the resolved scenario as YAML and exit")
    common.add_argument("--gnuplot", action="store_true", help="also write gnuplot scripts")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
                        help="override one scenario field (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="relcov", description="Reliability coverage toolkit.")
    p.add_argument("--version", action="version", version=f"relcov {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("dimension", parents=[common], help="coverage sweep and minimal-bandwidth search")
    sub.add_parser("sweep", parents=[common], help="coverage over bandwidth x density x alpha*")
    sub.add_parser("relmap", parents=[common], help="Monte Carlo reliability maps")
    ev = sub.add_parser("evtmap", parents=[common], help="EVT outage maps")
    ev.add_argument("--layout", help="full-grid | subgrid:k | random:m")
    ev.add_argument("--measurements", help="measurement CSV/JSON instead of simulation")
    al = sub.add_parser("allocate", parents=[common], help="rate maps and requirement verdicts")
    al.add_argument("--radius", type=float, help="localization error radius in meters")
    al.add_argument("--layout", help="full-grid | subgrid:k | random:m")
    al.add_argument("--measurements", help="measurement CSV/JSON instead of simulation")
    al.add_argument("--outage-map", help="check an existing outage-map JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        scn = resolve_scenario(args)
        if args.dump_params:
            sys.stdout.write(scn.dump())
            return 0
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        out = Outputs(Path(args.out_dir))
        start = time.perf_counter()
        try:
            code = HANDLERS[args.command](scn, out, args)
        finally:
            manifest = RunManifest(args.command, scn.to_dict(), scn.simulation.seed,
                                   duration_s=round(time.perf_counter() - start, 3),
                                   outputs=out.digests())
            manifest.to_json(out.dir / "manifest.json")
        return code
    except RelcovError as exc:
        print(f"relcov: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"relcov: numeric failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())

