"""Regenerate the bundled AT calibration dataset (C_cal = 0.58, seed 58)."""

import os

from rydrx import config, characterize as ch, io

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "src", "rydrx", "data", "at_calibration.csv")


def main():
    cfg = config.from_dict({"seed": 58, "sweep": {"cal_c_cal_true": 0.58}})
    rows = []
    for p, curve in ch.simulate_at_spectra(cfg):
        fit = ch.fit_double_gaussian(curve)
        rows.append((p, fit.splitting, fit.stderr))
    io.write_csv(OUT, ["power_dbm", "splitting_hz", "splitting_stderr_hz"], rows,
                 {"c_cal_true": 0.58, "dipole_moment_au": cfg.atomic["dipole_moment_au"],
                  "seed": 58})
    print(OUT, ch.calibrate_ccal(rows, cfg.dipole))


if __name__ == "__main__":
    main()
