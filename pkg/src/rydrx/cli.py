"""Command-line front end.

Each subcommand resolves a scenario (defaults, optional JSON file, ``--set``
overrides), runs one campaign, and writes into ``--out``:

* one or more CSV files,
* ``manifest.json`` with the full effective config, its hash, seeds and results,
* a standalone plot script and the PNG it renders.

Exit status is 0 on success, 2 on configuration errors and 1 on runtime
errors; failures print a JSON error record on stderr.
"""

import argparse
import datetime as _dt
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import config as cfgmod
from . import characterize as ch
from . import dsp, io, modem, plotting, readout, spectro
from .errors import ConfigError, RydrxError, InputError

SUBCOMMANDS = ("spectrum", "calibrate", "sensitivity", "noise-floors", "bandwidth",
               "constellation", "evm-sweep")
TWO_PI = 2.0 * math.pi


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x


# --------------------------------------------------------------------------
# subcommand bodies: each returns (results dict, [(kind, [csv paths])])
# --------------------------------------------------------------------------

def run_spectrum(cfg, out, args):
    s = cfg.sweep
    scan = np.linspace(-s.spectrum_span / 2, s.spectrum_span / 2, s.spectrum_points)
    system = cfg.system()
    e = float(readout.field_from_power(s.spectrum_rf_power, cfg.readout.c_cal))
    split = float(spectro.field_to_splitting(e, cfg.dipole))
    files = []
    for label, rf in (("rf_off", 0.0), ("rf_on", TWO_PI * split)):
        curve = spectro.transmission_spectrum(system.replace(omega_rf=rf), scan, include_d32=True)
        path = os.path.join(out, f"spectrum_{label}.csv")
        meta = dict(curve.metadata, label=label.replace("_", " "))
        curve.to_csv(path, parameters=meta)
        files.append(path)
    return {"rf_field_vm": e, "at_splitting_hz": split}, [("spectrum", files)]


def _bundled_rows():
    ref = resources.files("rydrx") / "data" / "at_calibration.csv"
    with resources.as_file(ref) as p:
        _, _, data = io.read_csv(p)
    return list(zip(data["power_dbm"], data["splitting_hz"], data["splitting_stderr_hz"]))


def _dataset_rows(source):
    if source == "bundled":
        return _bundled_rows()
    if not os.path.exists(source):
        raise ConfigError(f"calibration dataset not found: {source}", field="sweep.cal_dataset")
    _, cols, data = io.read_csv(source)
    for name in ("power_dbm", "splitting_hz"):
        if name not in cols:
            raise InputError(f"{source}: missing column '{name}'")
    se = data.get("splitting_stderr_hz", [None] * len(data["power_dbm"]))
    return list(zip(data["power_dbm"], data["splitting_hz"], se))


def run_calibrate(cfg, out, args):
    s = cfg.sweep
    if s.cal_dataset:
        rows = _dataset_rows(s.cal_dataset)
        source = s.cal_dataset
    else:
        rows = []
        for p, curve in ch.simulate_at_spectra(cfg):
            fit = ch.fit_double_gaussian(curve)
            rows.append((p, fit.splitting, fit.stderr))
        source = "simulated"
    fit = ch.calibrate_ccal(rows, cfg.dipole)
    cal_path = os.path.join(out, "calibration.csv")
    table = [(x, e, fit.c_cal * x, r[0], r[1]) for (x, e), r in zip(fit.points, rows)]
    io.write_csv(cal_path, ["sqrt_power_mw", "field_vm", "fit_vm", "power_dbm", "splitting_hz"],
                 table, {"c_cal": fit.c_cal, "c_cal_stderr": fit.slope_stderr,
                         "r_squared": fit.r_squared, "source": source})
    scan = ch.simulate_axis_scan(cfg)
    axis = ch.calibrate_frequency_axis(scan)
    hz = (scan.axis - scan.axis[0]) * axis.scale
    axis_path = os.path.join(out, "axis_calibration.csv")
    spectro.SpectrumCurve(hz, scan.values, metadata={}).to_csv(
        axis_path, parameters={"scale_hz_per_unit": axis.scale, "label": "rescaled scan"})
    results = {"c_cal": fit.c_cal, "c_cal_stderr": fit.slope_stderr, "c_cal_ci95": fit.ci95,
               "r_squared": fit.r_squared, "source": source,
               "axis_scale_hz_per_unit": axis.scale, "axis_scale_stderr": axis.stderr,
               "reference_separation_hz": ch.D32_SEPARATION,
               "rescaled_separation_hz": axis.separation_raw * axis.scale}
    return results, [("calibration", [cal_path]), ("spectrum", [axis_path])]


def run_sensitivity(cfg, out, args):
    res = ch.measure_sensitivity(cfg)
    path = os.path.join(out, "sensitivity_sweep.csv")
    io.write_csv(path, ["sig_power_dbm", "snr_db"], res.points,
                 {"fit_slope": res.fit_slope, "fit_intercept": res.fit_intercept,
                  "beatnote_hz": res.beatnote, "rbw_hz": cfg.readout.rbw})
    results = {"sensitivity_vm_rthz": res.sensitivity, "repeat_std": res.repeat_std,
               "repetitions": res.repetitions, "fit_stderr": res.stderr,
               "extrapolated_floor_dbm": res.extrapolated_floor_power,
               "beatnote_hz": res.beatnote, "rbw_hz": cfg.readout.rbw}
    return results, [("sensitivity", [path])]


def noise_floor_table(cfg):
    """Measured noise spectrum per source, reduced to log-spaced display bins."""
    s = cfg.sweep
    fs = 2.5 * s.noise_f_max
    nper = dsp.segment_length(fs, s.noise_rbw)
    n = nper * (s.noise_averages + 1) // 2
    grid = np.geomspace(s.noise_f_min, s.noise_f_max, s.noise_display_points + 1)
    centres = np.sqrt(grid[:-1] * grid[1:])
    cols = {}
    sources = (("total", cfg.noise), ("probe_laser", cfg.noise.only("probe_laser")),
               ("shot", cfg.noise.only("shot")), ("detector", cfg.noise.only("detector")))
    for j, (name, model) in enumerate(sources):
        rng = np.random.default_rng(ch.seed_for(cfg.seed, 700, j))
        x = readout.colored_noise(n, fs, lambda f: readout.psd_mw_to_v2(model.psd(f)), rng)
        spec = dsp.periodogram([readout.TimeTrace(x, fs, n / fs)], s.noise_rbw)
        idx = np.searchsorted(grid, spec.axis, side="right") - 1
        vals = np.full(centres.size, np.nan)
        lin = spec.linear
        for k in np.unique(idx[(idx >= 0) & (idx < centres.size)]):
            vals[k] = np.mean(lin[idx == k])
        cols[name] = vals
    keep = np.all(np.isfinite(np.column_stack(list(cols.values()))), axis=1)
    rows = zip(centres[keep].tolist(),
               *[readout.mw_to_dbm(cols[k][keep]).tolist() for k in cols])
    return list(rows), fs


def run_noise_floors(cfg, out, args):
    rows, fs = noise_floor_table(cfg)
    path = os.path.join(out, "noise_floors.csv")
    io.write_csv(path, ["frequency_hz", "total_dbm", "probe_laser_dbm", "shot_dbm", "detector_dbm"],
                 rows, {"rbw": cfg.sweep.noise_rbw, "n_averages": cfg.sweep.noise_averages,
                        "sample_rate": fs})
    mid = rows[len(rows) // 2] if rows else None
    results = {"n_display_points": len(rows), "rbw_hz": cfg.sweep.noise_rbw,
               "total_dbm_at_mid": mid[1] if mid else None,
               "mid_frequency_hz": mid[0] if mid else None}
    return results, [("noise-floors", [path])]


def run_bandwidth(cfg, out, args):
    curve = ch.sensitivity_vs_beatnote(cfg)
    bw = ch.extract_bandwidth(curve)
    path = os.path.join(out, "bandwidth.csv")
    rows = [(c.beatnote, c.sensitivity, c.repeat_std / math.sqrt(c.repetitions)) for c in curve]
    io.write_csv(path, ["beatnote_hz", "sensitivity_vm_rthz", "stderr_vm_rthz"], rows,
                 {"f_3db_hz": bw.f_3db, "rbw_hz": cfg.sweep.bandwidth_rbw})
    corner = ch.build_receiver(cfg).bandwidth.corner
    results = {"f_3db_hz": bw.f_3db, "s_low_vm_rthz": bw.s_low,
               "f_amplitude_3db_hz": _finite(bw.f_amplitude_3db),
               "sensor_corner_hz": corner, "method": bw.method}
    return results, [("bandwidth", [path])]


def run_constellation(cfg, out, args):
    m = cfg.modem
    receiver = ch.build_receiver(cfg)
    channel = args.channel or "atomic"
    report, const = ch.evm_run(cfg, receiver, channel, m.beatnote, m.symbol_rate, (600,))
    path = os.path.join(out, "constellation.csv")
    const.to_csv(path, {"evm_rms_percent": report.evm_rms, "channel": channel,
                        "beatnote_hz": m.beatnote, "symbol_rate_hz": m.symbol_rate})
    return dict(report.record(), channel=channel), [("constellation", [path])]


def run_evm_sweep(cfg, out, args):
    channel = args.channel or "atomic"
    points = ch.evm_campaign(cfg, channel=channel)
    path = os.path.join(out, f"evm_sweep_{channel}.csv")
    n = len(points[0].evms) if points else 0
    rows = [(p.x, p.mean, p.stderr, *p.evms) for p in points]
    io.write_csv(path, ["x", "evm_mean", "evm_stderr", *[f"seed_{j}" for j in range(n)]], rows,
                 {"sweep": cfg.modem.sweep, "channel": channel, "label": channel})
    results = {"channel": channel, "sweep": cfg.modem.sweep,
               "x": [p.x for p in points], "evm_mean": [p.mean for p in points]}
    try:
        if cfg.modem.sweep == "beatnote":
            results["evm_doubling_beatnote_hz"] = ch.modulated_bandwidth(points)
    except RydrxError:
        results["evm_doubling_beatnote_hz"] = None
    return results, [("evm-sweep", [path])]


RUNNERS = {
    "spectrum": run_spectrum,
    "calibrate": run_calibrate,
    "sensitivity": run_sensitivity,
    "noise-floors": run_noise_floors,
    "bandwidth": run_bandwidth,
    "constellation": run_constellation,
    "evm-sweep": run_evm_sweep,
}


# --------------------------------------------------------------------------
# plumbing
# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="rydrx", description="Rydberg-atom RF receiver simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON scenario file")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--out", help="output directory (default: scenario 'output')")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario value, e.g. readout.rbw=100")
        if name in ("evm-sweep", "constellation"):
            sp.add_argument("--channel", choices=("atomic", "mixer"), default="atomic")
    return p


def resolve_config(args):
    if args.config:
        data = cfgmod.load(args.config)
    else:
        data = cfgmod.default_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    data = cfgmod.apply_overrides(data, args.set)
    return cfgmod.from_dict(data)


def _error(kind, exc, status):
    record = {"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "field", None):
        record["field"] = exc.field
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return status


def run(argv=None):
    args = build_parser().parse_args(argv)
    if not hasattr(args, "channel"):
        args.channel = None
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _error("validation", exc, 2)
    out = args.out or cfg.output
    try:
        os.makedirs(out, exist_ok=True)
        results, figs = RUNNERS[args.command](cfg, out, args)
        artifacts = []
        for kind, paths in figs:
            stem = kind.replace("-", "_")
            script = os.path.join(out, f"plot_{stem}.py")
            plotting.emit_plot_script(paths, kind, script)
            png = os.path.join(out, f"plot_{stem}.png")
            plotting.render_png(paths, kind, png)
            artifacts.append({"kind": kind, "csv": [os.path.basename(p) for p in paths],
                              "script": os.path.basename(script), "png": os.path.basename(png)})
    except ConfigError as exc:
        return _error("validation", exc, 2)
    except RydrxError as exc:
        return _error("runtime", exc, 1)
    manifest = {
        "command": args.command,
        "status": "ok",
        "results": results,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "channel": args.channel,
        "artifacts": artifacts,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    print(json.dumps({"status": "ok", "command": args.command, "out": out}))
    return 0


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
