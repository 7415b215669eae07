"""CSV and JSON files for data, profiles and reports.

Numbers are written with 17 significant digits so doubles survive a
round trip exactly. Every file is written to a temporary sibling first and
moved into place, so readers never see a partial file.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .forward import FullSphereData, SphereGrid
from .numerics import Grid1D, SampledFn

NUMBER_FORMAT = "{:.17g}"


class DataError(ValueError):
    """A data file is missing, malformed or does not match the expected schema."""


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _rows_text(header: list[str], columns) -> str:
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(NUMBER_FORMAT.format(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_samples(path, s: SampledFn, axis: str = "t") -> Path:
    """``t,value`` for data, ``r,value`` for profiles."""
    return atomic_write_text(path, _rows_text([axis, "value"], [s.points, s.values]))


def write_columns(path, header: list[str], columns) -> Path:
    return atomic_write_text(path, _rows_text(header, columns))


def write_full_sphere(path, data: FullSphereData) -> Path:
    """``theta,phi,t,value`` with one row per (angular node, t), node-major."""
    sph = data.sphere
    nt = len(data.tgrid)
    theta = np.repeat(sph.theta, nt)
    phi = np.repeat(sph.phi, nt)
    t = np.tile(data.tgrid.points, sph.size)
    return atomic_write_text(path, _rows_text(["theta", "phi", "t", "value"],
                                              [theta, phi, t, data.values.ravel()]))


def _read_table(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataError(f"{path}: no data rows")
    try:
        table = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from exc
    if table.ndim != 2 or table.shape[1] != len(header):
        raise DataError(f"{path}: rows do not match the header {header}")
    if not np.all(np.isfinite(table)):
        raise DataError(f"{path}: non-finite values")
    return header, table


def read_samples(path, axis: str = "t") -> SampledFn:
    header, table = _read_table(path)
    if header != [axis, "value"]:
        raise DataError(f"{path}: expected header '{axis},value', got '{','.join(header)}'")
    try:
        grid = Grid1D(table[:, 0])
    except ValueError as exc:
        raise DataError(f"{path}: invalid {axis} column: {exc}") from exc
    return SampledFn(grid, table[:, 1], Path(path).stem)


def read_full_sphere(path) -> FullSphereData:
    """Inverse of :func:`write_full_sphere`; the angular grid is recovered from the nodes."""
    header, table = _read_table(path)
    if header != ["theta", "phi", "t", "value"]:
        raise DataError(f"{path}: expected header 'theta,phi,t,value', got '{','.join(header)}'")
    t_all = table[:, 2]
    t = np.unique(t_all)
    nt = t.size
    if table.shape[0] % nt:
        raise DataError(f"{path}: row count is not a multiple of the number of t values")
    nodes = table[::nt, :2]
    n_theta = np.unique(np.round(nodes[:, 0], 12)).size
    n_phi = np.unique(np.round(nodes[:, 1], 12)).size
    try:
        sphere = SphereGrid(n_theta, n_phi)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if (sphere.size != nodes.shape[0]
            or not np.allclose(nodes[:, 0], sphere.theta, atol=1e-12)
            or not np.allclose(nodes[:, 1], sphere.phi, atol=1e-12)
            or not np.allclose(t_all, np.tile(t, sphere.size), atol=0)):
        raise DataError(f"{path}: angular nodes do not form a {n_theta}x{n_phi} product grid")
    try:
        grid = Grid1D(t)
    except ValueError as exc:
        raise DataError(f"{path}: invalid t column: {exc}") from exc
    return FullSphereData(sphere, grid, table[:, 3].reshape(sphere.size, nt))


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))
