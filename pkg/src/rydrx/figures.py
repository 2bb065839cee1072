"""Figure renderers that read only CSV files.

This module depends on numpy and matplotlib alone; ``plotting`` copies its
source into standalone scripts, so nothing here may import from the package.
"""

import csv
import json

import numpy as np

SCHEMAS = {
    "spectrum": ("frequency_hz", "value"),
    "calibration": ("sqrt_power_mw", "field_vm", "fit_vm"),
    "sensitivity": ("sig_power_dbm", "snr_db"),
    "noise-floors": ("frequency_hz", "total_dbm", "probe_laser_dbm", "shot_dbm", "detector_dbm"),
    "bandwidth": ("beatnote_hz", "sensitivity_vm_rthz", "stderr_vm_rthz"),
    "constellation": ("symbol_index", "label", "i_meas", "q_meas", "i_nom", "q_nom"),
    "evm-sweep": ("x", "evm_mean", "evm_stderr"),
}

SYMBOL_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red")


class SchemaError(ValueError):
    pass


def read_table(path):
    """Return (metadata, {column: float array}) from a commented CSV."""
    meta, lines = {}, []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                try:
                    meta[key.strip()] = json.loads(value)
                except ValueError:
                    meta[key.strip()] = value.strip()
            elif line.strip():
                lines.append(line)
    if not lines:
        return meta, {}
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in body]
        try:
            cols[name] = np.array(vals, dtype=float)
        except ValueError:
            cols[name] = np.array(vals, dtype=object)
    return meta, cols


def check_schema(kind, cols, path="<csv>"):
    """Raise SchemaError naming the first missing column (empty files pass)."""
    if not cols:
        return
    for name in SCHEMAS[kind]:
        if name not in cols:
            raise SchemaError(f"{path}: column '{name}' required for {kind} figures")


def _load(kind, paths):
    out = []
    for p in paths:
        meta, cols = read_table(p)
        check_schema(kind, cols, p)
        out.append((p, meta, cols))
    return out


def _label(path, meta):
    return meta.get("label") or path.rsplit("/", 1)[-1].rsplit(".", 1)[0]


def plot_spectrum(ax, tables):
    for path, meta, c in tables:
        if c:
            ax.plot(c["frequency_hz"] / 1e6, c["value"], lw=1, label=_label(path, meta))
    ax.set_xlabel("coupling detuning (MHz)")
    ax.set_ylabel("probe transmission")


def plot_calibration(ax, tables):
    for path, meta, c in tables:
        if not c:
            continue
        ax.plot(c["sqrt_power_mw"], c["field_vm"], "o", ms=4, label=_label(path, meta))
        ax.plot(c["sqrt_power_mw"], c["fit_vm"], "-", lw=1,
                label=f"fit, C_cal = {meta.get('c_cal', float('nan')):.4f}")
    ax.set_xlabel(r"$\sqrt{P}$ ($\sqrt{\mathrm{mW}}$)")
    ax.set_ylabel("|E| (V/m)")


def plot_sensitivity(ax, tables):
    for path, meta, c in tables:
        if not c:
            continue
        ax.plot(c["sig_power_dbm"], c["snr_db"], "o", ms=4, label=_label(path, meta))
        a, b = meta.get("fit_slope"), meta.get("fit_intercept")
        if a is not None and b is not None:
            p = np.linspace(min(-b / a, c["sig_power_dbm"].min()), c["sig_power_dbm"].max(), 50)
            ax.plot(p, a * p + b, "--", lw=1)
    ax.axhline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("RF signal power (dBm)")
    ax.set_ylabel("SNR (dB)")


def plot_noise_floors(ax, tables):
    names = ("total_dbm", "probe_laser_dbm", "shot_dbm", "detector_dbm")
    for path, meta, c in tables:
        if not c:
            continue
        for name in names:
            ax.plot(c["frequency_hz"], c[name], lw=1, label=name[:-4].replace("_", " "))
    ax.set_xscale("log")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel(f"power (dBm / {tables[0][1].get('rbw', '?')} Hz)" if tables else "power (dBm)")


def plot_bandwidth(ax, tables, inset=True):
    for path, meta, c in tables:
        if not c:
            continue
        ax.errorbar(c["beatnote_hz"], c["sensitivity_vm_rthz"] * 1e6, c["stderr_vm_rthz"] * 1e6,
                    fmt="o-", ms=4, lw=1, label=_label(path, meta))
        if "f_3db_hz" in meta:
            ax.axvline(meta["f_3db_hz"], color="0.5", ls="--", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("beatnote (Hz)")
    ax.set_ylabel(r"sensitivity ($\mu$V/m/$\sqrt{\mathrm{Hz}}$)")
    if inset:
        sub = ax.inset_axes([0.12, 0.5, 0.38, 0.4])
        for path, meta, c in tables:
            if not c:
                continue
            m = (c["beatnote_hz"] >= 1e6) & (c["beatnote_hz"] <= 10e6)
            sub.plot(c["beatnote_hz"][m] / 1e6, c["sensitivity_vm_rthz"][m] * 1e6, "o-", ms=3, lw=1)
        sub.set_xlim(1, 10)
        sub.set_xlabel("MHz", fontsize=7)
        sub.tick_params(labelsize=7)


def plot_constellation(ax, tables):
    for path, meta, c in tables:
        if not c:
            continue
        lab = c["label"].astype(int)
        for k in range(4):
            m = lab == k
            ax.plot(c["i_meas"][m], c["q_meas"][m], ".", ms=3, color=SYMBOL_COLORS[k],
                    label=f"symbol {k}")
        ax.plot(c["i_nom"], c["q_nom"], "o", ms=9, mfc="none", mec="k", mew=1.5)
        if "evm_rms_percent" in meta:
            ax.set_title(f"EVM {meta['evm_rms_percent']:.2f} %")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("I")
    ax.set_ylabel("Q")


def plot_evm_sweep(ax, tables):
    for path, meta, c in tables:
        if not c:
            continue
        scale = 1e6 if meta.get("sweep") == "beatnote" else 1e3
        ax.errorbar(c["x"] / scale, c["evm_mean"], c["evm_stderr"], fmt="o-", ms=4, lw=1,
                    label=_label(path, meta))
    sweep = tables[0][1].get("sweep") if tables else None
    ax.set_xlabel("beatnote (MHz)" if sweep == "beatnote" else "symbol rate (kHz)")
    ax.set_ylabel("EVM (%)")


PLOTTERS = {
    "spectrum": plot_spectrum,
    "calibration": plot_calibration,
    "sensitivity": plot_sensitivity,
    "noise-floors": plot_noise_floors,
    "bandwidth": plot_bandwidth,
    "constellation": plot_constellation,
    "evm-sweep": plot_evm_sweep,
}


def render(kind, paths, out):
    """Draw ``kind`` from CSV ``paths`` into image file ``out``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if kind not in PLOTTERS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    tables = _load(kind, paths)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    PLOTTERS[kind](ax, tables)
    if any(c for _, _, c in tables) and ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(out, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return out
