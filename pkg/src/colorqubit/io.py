"""Plain-text exports and imports for figure data, joint spectra and modes."""
import json
from pathlib import Path

import numpy as np

from .errors import TableParseError
from .spectra import JointAmplitude, SpectralGrid
from .units import rad_per_ps_to_thz

FLOAT = "%.12g"


def _write_columns(path, header, columns, fmt=FLOAT):
    path = Path(path)
    data = np.column_stack([np.asarray(c) for c in columns]) if columns else np.empty((0, len(header)))
    np.savetxt(path, data, fmt=fmt, header=" ".join(header), comments="# ")
    return path


def write_contour(path, contours):
    """Columns ``process lambda1_um lambdas_um segment_id``."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# process lambda1_um lambdas_um segment_id\n")
        for process in ("sfwm", "dfg"):
            for seg, line in enumerate(contours.get(process, [])):
                for x, y in line:
                    fh.write(f"{process.upper()} {x:.12g} {y:.12g} {seg}\n")
    return path


def write_objective_surface(path, rows):
    """Columns ``h_um w_sfwm_um w_dfg_um fobj``; ``rows`` is an iterable of 4-tuples."""
    rows = np.asarray(list(rows), dtype=float).reshape(-1, 4)
    return _write_columns(path, ["h_um", "w_sfwm_um", "w_dfg_um", "fobj"], list(rows.T))


def objective_surface_rows(height, w_sfwm, w_dfg, surface):
    ws, wd = np.meshgrid(w_sfwm, w_dfg, indexing="ij")
    return np.column_stack([np.full(ws.size, height), ws.ravel(), wd.ravel(), np.asarray(surface).ravel()])


def write_jsa(path, joint: JointAmplitude, labels=("omega_s", "omega_i")):
    """Columns ``omega_a omega_b re im`` (rad/ps) plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    a, b = np.meshgrid(joint.grid.axis_a, joint.grid.axis_b, indexing="ij")
    v = joint.values
    _write_columns(path, [labels[0], labels[1], "re", "im"], [a.ravel(), b.ravel(), v.real.ravel(), v.imag.ravel()])
    g = joint.grid
    meta = {"format": "joint-amplitude v1", "axes": list(labels), "units": "rad/ps",
            "center_a": g.center_a, "center_b": g.center_b, "half_span_a": g.half_span_a,
            "half_span_b": g.half_span_b, "points_a": g.points_a, "points_b": g.points_b,
            "normalized": joint.normalized, "raw_norm": joint.raw_norm, "order": "row-major, axis a outer"}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_jsa(path) -> JointAmplitude:
    """Inverse of :func:`write_jsa`; requires the sidecar."""
    path = Path(path)
    side = Path(str(path) + ".json")
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise TableParseError(f"{side}: cannot read sidecar ({exc})", line=1) from None
    grid = SpectralGrid(meta["center_a"], meta["center_b"], meta["half_span_a"], meta["half_span_b"],
                        int(meta["points_a"]), int(meta["points_b"]))
    data = _load_numeric(path, 4)
    if data.shape[0] != grid.points_a * grid.points_b:
        raise TableParseError(f"{path}: expected {grid.points_a * grid.points_b} rows, got {data.shape[0]}",
                              line=data.shape[0] + 1)
    values = (data[:, 2] + 1j * data[:, 3]).reshape(grid.points_a, grid.points_b)
    return JointAmplitude(grid, values, bool(meta.get("normalized", True)), float(meta.get("raw_norm", 1.0)))


def write_intensity(path, joint: JointAmplitude):
    """Columns ``domega_s_THz domega_i_THz intensity_normalized`` (unit peak)."""
    g = joint.grid
    da = rad_per_ps_to_thz(g.axis_a - g.center_a)
    db = rad_per_ps_to_thz(g.axis_b - g.center_b)
    a, b = np.meshgrid(da, db, indexing="ij")
    return _write_columns(path, ["domega_s_THz", "domega_i_THz", "intensity_normalized"],
                          [a.ravel(), b.ravel(), joint.intensity().ravel()])


def write_modes(directory, stem, modes, axis, center, count=3):
    """One file per mode, columns ``domega_THz re im``, scaled by the fundamental's peak."""
    directory = Path(directory)
    scale = float(np.max(np.abs(modes[0])))
    d = rad_per_ps_to_thz(np.asarray(axis) - center)
    paths = []
    for m in range(min(count, modes.shape[0])):
        f = modes[m] / scale
        paths.append(_write_columns(directory / f"{stem}_{m + 1}.dat", ["domega_THz", "re", "im"],
                                    [d, f.real, f.imag]))
    return paths


def write_coefficients(path, coefficients):
    c = np.asarray(coefficients, dtype=float)
    return _write_columns(path, ["index", "coefficient"], [np.arange(1, c.size + 1), c])


def _load_numeric(path, ncols):
    rows = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise TableParseError(f"{path}: {exc.strerror}", line=0) from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != ncols:
                raise TableParseError(f"{path}: expected {ncols} columns, found {len(parts)}", line=lineno)
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise TableParseError(f"{path}: non-numeric entry", line=lineno) from None
            if not all(np.isfinite(row)):
                raise TableParseError(f"{path}: non-finite entry", line=lineno)
            rows.append(row)
    if not rows:
        raise TableParseError(f"{path}: no data rows", line=0)
    return np.asarray(rows)


def read_amplitude(path, axis):
    """Spectral amplitude file (``omega re im``, rad/ps, ascending) resampled onto ``axis``.

    Linear interpolation, zero outside the sampled range, then normalized to
    unit integral of |h|^2 on ``axis``.
    """
    data = _load_numeric(path, 3)
    om = data[:, 0]
    if np.any(np.diff(om) <= 0):
        bad = int(np.argmax(np.diff(om) <= 0)) + 2
        raise TableParseError(f"{path}: frequencies must increase strictly", line=bad)
    axis = np.asarray(axis, dtype=float)
    h = (np.interp(axis, om, data[:, 1], left=0.0, right=0.0)
         + 1j * np.interp(axis, om, data[:, 2], left=0.0, right=0.0))
    norm = float(np.sum(np.abs(h) ** 2) * (axis[1] - axis[0]))
    if norm == 0.0:
        raise TableParseError(f"{path}: amplitude vanishes on the signal axis", line=0)
    return h / np.sqrt(norm)


def write_amplitude(path, axis, h):
    h = np.asarray(h, dtype=complex)
    return _write_columns(path, ["omega", "re", "im"], [np.asarray(axis), h.real, h.imag])
