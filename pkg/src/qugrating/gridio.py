"""CSV persistence for spectrum grids.

Layout: `# key = value` metadata lines, one `delta_mhz,control,signal` header,
then one data row per grid point in row-major order (control outer, delta
inner).  Floats are written with the shortest representation that re-parses
to the identical double, so read(emit(grid)) reproduces the grid exactly.
"""
from __future__ import annotations

import numpy as np

from .sweep import SpectrumGrid

_HEADER = "delta_mhz,control,signal"


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_csv(grid: SpectrumGrid, path) -> None:
    """Write the grid with full metadata; failures surface with the path."""
    meta = dict(grid.meta)
    meta.setdefault("control_kind", grid.control_kind)
    meta.setdefault("delta_count", repr(int(grid.delta_mhz.size)))
    meta.setdefault("control_count", repr(int(grid.control.size)))
    lines = [f"# {key} = {meta[key]}" for key in sorted(meta)]
    lines.append(_HEADER)
    for i in range(grid.control.size):
        c = _fmt(grid.control[i])
        for j in range(grid.delta_mhz.size):
            lines.append(f"{_fmt(grid.delta_mhz[j])},{c},{_fmt(grid.values[i, j])}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write grid to {path!r}: {exc}") from exc


def read_csv(path) -> SpectrumGrid:
    """Re-read an emitted grid; the result compares equal to the original."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read grid from {path!r}: {exc}") from exc

    meta: dict = {}
    body_start = None
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip() == _HEADER:
            body_start = i + 1
            break
        elif line.strip():
            raise ValueError(f"{path!r}: expected metadata or {_HEADER!r}, got {line!r}")
    if body_start is None:
        raise ValueError(f"{path!r}: missing column header {_HEADER!r}")
    for key in ("delta_count", "control_count", "control_kind"):
        if key not in meta:
            raise ValueError(f"{path!r}: metadata lacks {key!r}")
    n_delta = int(meta["delta_count"])
    n_control = int(meta["control_count"])
    rows = [line for line in lines[body_start:] if line.strip()]
    if len(rows) != n_delta * n_control:
        raise ValueError(
            f"{path!r}: expected {n_delta * n_control} data rows, found {len(rows)}"
        )
    deltas = np.empty(n_delta)
    controls = np.empty(n_control)
    values = np.empty((n_control, n_delta))
    for k, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path!r}: malformed data row {line!r}")
        i, j = divmod(k, n_delta)
        d, c, v = (float(p) for p in parts)
        if i == 0:
            deltas[j] = d
        elif deltas[j] != d and not (np.isnan(deltas[j]) and np.isnan(d)):
            raise ValueError(f"{path!r}: inconsistent delta axis at row {k}")
        if j == 0:
            controls[i] = c
        values[i, j] = v
    return SpectrumGrid(
        delta_mhz=deltas,
        control=controls,
        control_kind=meta["control_kind"],
        values=values,
        meta=meta,
    )
