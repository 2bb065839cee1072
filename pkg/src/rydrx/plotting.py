"""Standalone plot-script emission.

A script bundles the source of ``rydrx.figures`` with the CSV paths it
plots, so it regenerates the figure with numpy and matplotlib alone. Paths
are stored relative to the script's directory when possible, making the
file content independent of where the output tree lives.
"""

import inspect
import os

from . import figures
from .errors import InputError

KINDS = tuple(figures.SCHEMAS)

_TEMPLATE = '''#!/usr/bin/env python3
"""Regenerate the {kind} figure from CSV data (numpy + matplotlib only).

Usage: python {name} [output.png]
"""
# ---- renderer (bundled) ----------------------------------------------------
{source}
# ---- inputs ----------------------------------------------------------------
import os as _os
import sys as _sys

KIND = {kind!r}
CSV_FILES = {paths!r}

if __name__ == "__main__":
    _here = _os.path.dirname(_os.path.abspath(__file__))
    _paths = [p if _os.path.isabs(p) else _os.path.join(_here, p) for p in CSV_FILES]
    _out = _sys.argv[1] if len(_sys.argv) > 1 else _os.path.join(_here, {png!r})
    render(KIND, _paths, _out)
'''


def _relative(path, base):
    try:
        return os.path.relpath(os.path.abspath(path), base).replace(os.sep, "/")
    except ValueError:
        return os.path.abspath(path)


def emit_plot_script(csv_paths, kind, out):
    """Write a self-contained script that plots ``csv_paths`` as ``kind``.

    Each CSV is schema-checked first; a missing column raises InputError
    naming it. Empty CSVs are accepted and give empty axes.

    Returns the script path.
    """
    if kind not in figures.SCHEMAS:
        raise InputError(f"unknown figure kind {kind!r}; choose from {', '.join(KINDS)}")
    paths = [os.fspath(p) for p in csv_paths]
    for p in paths:
        if not os.path.exists(p):
            raise InputError(f"CSV not found: {p}")
        _, cols = figures.read_table(p)
        try:
            figures.check_schema(kind, cols, os.path.basename(p))
        except figures.SchemaError as exc:
            raise InputError(str(exc)) from exc
    base = os.path.dirname(os.path.abspath(out))
    rel = [_relative(p, base) for p in paths]
    name = os.path.basename(out)
    png = os.path.splitext(name)[0] + ".png"
    text = _TEMPLATE.format(kind=kind, name=name, source=inspect.getsource(figures).rstrip(),
                            paths=rel, png=png)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return out


def render_png(csv_paths, kind, out):
    """Render the figure directly (same code path as the emitted script)."""
    return figures.render(kind, [os.fspath(p) for p in csv_paths], out)
