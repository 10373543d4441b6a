"""Plain-text input formats and atomic artifact writers.

System file::

    matrix = 2 1 1 1
    seed = 7

Metric file (one line per potential mode; ``base`` is optional)::

    base yau            # or: base euclidean
    mode 1 0 1 0 0.002

Disc map file (``radius`` optional)::

    deg 2
    radius 1.0
    0  0 0  0 0
    1  1 0  0 0
    2  0 0  0.5 0

Surface file: 27 lines ``i j k value``.

Blank lines and ``#`` comments are ignored everywhere.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .brody import DiscMap
from .cocycle import MetricField
from .hermspace import HermitianForm
from .torus import KummerSystem
from .wehler import WehlerSurface


class FormatError(ValueError):
    pass


def _lines(path):
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line


def read_key_values(path, allowed=None) -> dict:
    """``key = value`` pairs; keys outside ``allowed`` are rejected."""
    out = {}
    for n, line in _lines(path):
        if "=" not in line:
            raise FormatError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if allowed is not None and key not in allowed:
            raise FormatError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def parse_matrix(text) -> np.ndarray:
    vals = text.split() if isinstance(text, str) else list(text)
    if len(vals) != 4:
        raise FormatError(f"matrix needs 4 integers, got {vals!r}")
    try:
        return np.array([int(v) for v in vals], dtype=np.int64).reshape(2, 2)
    except ValueError as exc:
        raise FormatError(f"matrix entries must be integers: {vals!r}") from exc


def read_system(path) -> dict:
    kv = read_key_values(path, allowed={"matrix", "seed"})
    out = {}
    if "matrix" in kv:
        out["matrix"] = parse_matrix(kv["matrix"])
    if "seed" in kv:
        out["seed"] = int(kv["seed"])
    return out


def read_metric(path, system: KummerSystem) -> MetricField:
    modes, coeffs, base = [], [], None
    for n, line in _lines(path):
        parts = line.split()
        if parts[0] == "mode" and len(parts) == 6:
            try:
                modes.append([int(v) for v in parts[1:5]])
                coeffs.append(float(parts[5]))
            except ValueError as exc:
                raise FormatError(f"{path}:{n}: bad mode line") from exc
        elif parts[0] == "base" and len(parts) == 2 and parts[1] in ("yau", "euclidean"):
            base = HermitianForm.identity() if parts[1] == "euclidean" else None
        else:
            raise FormatError(f"{path}:{n}: expected 'mode m1 m2 m3 m4 coeff'")
    return MetricField(system, modes, coeffs, base=base)


def write_metric(path, field: MetricField):
    rows = [f"mode {' '.join(str(int(v)) for v in m)} {float(c)!r}" for m, c in zip(field.modes, field.coeffs)]
    b = field.base
    if float(b.a) == 1.0 and float(b.d) == 1.0 and complex(b.b) == 0:
        rows.insert(0, "base euclidean")
    atomic_write(path, "\n".join(rows) + "\n")


def read_disc_map(path) -> DiscMap:
    deg, radius, rows = None, 1.0, {}
    for n, line in _lines(path):
        parts = line.split()
        try:
            if parts[0] == "deg":
                deg = int(parts[1])
            elif parts[0] == "radius":
                radius = float(parts[1])
            elif len(parts) == 5:
                k = int(parts[0])
                re1, im1, re2, im2 = (float(v) for v in parts[1:])
                rows[k] = (complex(re1, im1), complex(re2, im2))
            else:
                raise ValueError
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{path}:{n}: cannot parse {line!r}") from exc
    if deg is None:
        raise FormatError(f"{path}: missing 'deg n' line")
    if any(k < 0 or k > deg for k in rows):
        raise FormatError(f"{path}: coefficient index outside 0..{deg}")
    coeffs = np.zeros((deg + 1, 2), dtype=complex)
    for k, v in rows.items():
        coeffs[k] = v
    return DiscMap(coeffs, radius)


def write_disc_map(path, xi: DiscMap):
    lines = [f"deg {xi.degree}", f"radius {float(xi.radius)!r}"]
    for k, (c1, c2) in enumerate(xi.coeffs):
        vals = (float(c1.real), float(c1.imag), float(c2.real), float(c2.imag))
        lines.append(f"{k} " + " ".join(repr(v) for v in vals))
    atomic_write(path, "\n".join(lines) + "\n")


def read_surface(path) -> WehlerSurface:
    c = np.full((3, 3, 3), np.nan)
    for n, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"{path}:{n}: expected 'i j k value'")
        try:
            i, j, k = (int(v) for v in parts[:3])
            c[i, j, k] = float(parts[3])
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{path}:{n}: bad coefficient line") from exc
    if np.isnan(c).any():
        raise FormatError(f"{path}: all 27 coefficients are required")
    return WehlerSurface(c)


def write_surface(path, surface: WehlerSurface):
    lines = [f"{i} {j} {k} {float(surface.coeffs[i, j, k])!r}"
             for i in range(3) for j in range(3) for k in range(3)]
    atomic_write(path, "\n".join(lines) + "\n")


def atomic_write(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def json_text(record: dict) -> str:
    return json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"
