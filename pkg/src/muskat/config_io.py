"""Configuration files, binary snapshots and time-series output.

Config syntax
-------------
One ``key = value`` pair per line.  ``#`` starts a comment, blank lines are
ignored, keys are case-sensitive.  Numbers may be written as ``pi``,
``2pi`` or ``2*pi``.  Booleans accept ``true/false/yes/no/1/0``.

Snapshot layout (little-endian)
-------------------------------
========  =======  ==============================================
offset    type     content
========  =======  ==============================================
0         4 bytes  magic ``b"MSKT"``
4         u16      major version (currently 1)
6         u16      minor version
8         u32      n_points
12        f64      length
20        f64      time
28        f64      sigma
36        f64      g_rho
44        f64      cp0_prefactor
52        u32      byte length ``J`` of a UTF-8 JSON object with extra metadata
56        J bytes  JSON
56+J      8n       field values, f64
end-8     u64      checksum: BLAKE2b (8-byte digest) of all preceding bytes
========  =======  ==============================================
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
import struct
from pathlib import Path

import numpy as np

from .grid_spectral import PeriodicGrid, ScalarField
from .quadrature import QuadratureSpec
from .rhs_muskat import PhysicalParams
from .timestepper import SimConfig

__all__ = [
    "ConfigError",
    "SnapshotError",
    "load_config",
    "parse_config",
    "parse_field",
    "save_snapshot",
    "load_snapshot",
    "write_timeseries",
    "read_timeseries",
    "COLUMNS",
]

log = logging.getLogger(__name__)

COLUMNS = (
    "time", "l2", "h32", "h3", "h52", "h4", "b1_inf_1", "lip", "smallness",
    "ddt_e", "dissip3", "dissip32", "K_required",
)

MAGIC = b"MSKT"
VERSION = (1, 0)
_HEAD = struct.Struct("<4sHHIdddddI")


class ConfigError(ValueError):
    pass


class SnapshotError(ValueError):
    pass


# --- config ------------------------------------------------------------------

_PI = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi$")


def _number(text: str) -> float:
    t = text.strip().lower()
    m = _PI.match(t)
    if m:
        return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
    return float(t)


def _integer(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _boolean(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _optional_number(text: str):
    return None if text.strip().lower() in ("", "none") else _number(text)


_KEYS = {
    # key: (parser, default)
    "sigma": (_number, 1.0),
    "g_rho": (_number, 0.0),
    "cp0_prefactor": (_number, 1.0 / math.pi),
    "n": (_integer, 256),
    "length": (_number, 2 * math.pi),
    "dt": (_number, 1e-3),
    "t_end": (_number, 1.0),
    "formulation": (str.strip, "cp1"),
    "report_every": (_integer, 1),
    "seed": (_integer, 0),
    "c_stab": (_number, None),
    "c_g": (_number, 1.0),
    "smallness_C": (_number, 12.0),
    "halt_on_smallness": (_boolean, True),
    "alpha_min": (_optional_number, None),
    "alpha_max": (_optional_number, None),
    "n_alpha": (_integer, 256),
    "inner_order": (_integer, 16),
    "laplace_mode": (str.strip, "closed_form"),
    "laguerre_order": (_integer, 64),
    "init": (str.strip, "zero"),
    "init_smallness": (_optional_number, None),
    "snapshot_every": (_integer, 0),
}

_ERROR_KEYS = {
    "sigma": "sigma", "g_rho": "g_rho", "cp0_prefactor": "cp0_prefactor",
    "n_points": "n", "length": "length", "dt": "dt", "t_end": "t_end",
    "formulation": "formulation", "report_every": "report_every",
    "c_stab": "c_stab", "c_g": "c_g", "alpha_min": "alpha_min",
    "alpha_max": "alpha_max", "n_alpha": "n_alpha", "inner_order": "inner_order",
    "laplace_mode": "laplace_mode", "laguerre_order": "laguerre_order",
    "snapshot_every": "snapshot_every",
}


def parse_config(text: str, source: str = "<config>", warnings: list | None = None) -> SimConfig:
    """Parse config text; see the module docstring for the syntax."""
    values: dict = {}
    warn = [] if warnings is None else warnings
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        if key not in _KEYS:
            msg = f"{source}:{lineno}: unknown key {key!r} ignored"
            warn.append(msg)
            log.warning(msg)
            continue
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _KEYS[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: invalid value for {key}: {exc}") from None
    cfg = {k: values.get(k, d) for k, (_, d) in _KEYS.items()}
    return _build(cfg, source)


def _build(c: dict, source: str) -> SimConfig:
    try:
        params = PhysicalParams(c["sigma"], c["g_rho"], c["cp0_prefactor"])
        grid = PeriodicGrid(c["n"], c["length"])
        quad_kw = {k: c[k] for k in ("n_alpha", "inner_order", "laplace_mode", "laguerre_order")}
        for k in ("alpha_min", "alpha_max"):
            if c[k] is not None:
                quad_kw[k] = c[k]
        quad = QuadratureSpec.for_grid(grid, **quad_kw)
        extra = {} if c["c_stab"] is None else {"c_stab": c["c_stab"]}
        return SimConfig(
            params=params, grid=grid, quad=quad, dt=c["dt"], t_end=c["t_end"],
            formulation=c["formulation"], report_every=c["report_every"],
            seed=c["seed"], c_g=c["c_g"], smallness_C=c["smallness_C"],
            halt_on_smallness=c["halt_on_smallness"], init=c["init"],
            init_smallness=c["init_smallness"], snapshot_every=c["snapshot_every"],
            **extra,
        )
    except ValueError as exc:
        msg = str(exc)
        key = next((v for k, v in _ERROR_KEYS.items() if msg.startswith(k)), None)
        prefix = f"{source}: {key}: " if key else f"{source}: "
        raise ConfigError(prefix + msg) from None


def load_config(path, warnings: list | None = None) -> SimConfig:
    """Read a config file.  Unknown keys are appended to ``warnings``."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from None
    return parse_config(text, str(p), warnings)


# --- field specifications ------------------------------------------------------

_TERM = re.compile(
    r"\s*([-+])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*"
    r"(sin|cos)\(\s*((?:\d+\.?\d*|\.\d+))?\s*\*?\s*x\s*\)\s*"
)


def parse_field(spec: str, grid: PeriodicGrid, seed: int = 0) -> ScalarField:
    """Build a field from a short text description.

    Accepted forms: ``zero``; a sum such as ``0.2 sin(x) + 0.05*sin(3x) - cos(2*x)``
    (the ``k`` inside is a wavenumber in units of ``2 pi / L``); and
    ``random`` or ``random:MODES`` for a seeded random trigonometric
    polynomial with coefficients decaying like ``1/k^2``.
    """
    s = spec.strip().lower()
    x = grid.x
    base = 2 * math.pi / grid.length
    if s in ("zero", "0", ""):
        return ScalarField.zeros(grid)
    if s.startswith("random"):
        _, _, modes = s.partition(":")
        nm = int(modes) if modes else 20
        if not 1 <= nm < grid.n_points // 2:
            raise ValueError("random field mode count out of range")
        rng = np.random.default_rng(seed)
        kk = np.arange(1, nm + 1)
        a, b = rng.standard_normal((2, nm)) / kk**2
        v = a @ np.cos(np.outer(kk, base * x)) + b @ np.sin(np.outer(kk, base * x))
        return ScalarField(grid, v)
    pos, total = 0, np.zeros_like(x)
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (not first and m.group(1) is None):
            raise ValueError(f"cannot parse field spec {spec!r} near {s[pos:]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        k = float(m.group(4)) if m.group(4) else 1.0
        fn = np.sin if m.group(3) == "sin" else np.cos
        total = total + sign * coef * fn(k * base * x)
        pos, first = m.end(), False
    return ScalarField(grid, total)


# --- snapshots -----------------------------------------------------------------

def _digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def save_snapshot(f: ScalarField, meta: dict | None, path) -> None:
    """Write ``f`` and ``meta`` (``time``, ``params``, anything JSON-able)."""
    meta = dict(meta or {})
    time = float(meta.pop("time", 0.0))
    params = meta.pop("params", None) or PhysicalParams()
    extra = json.dumps(meta, sort_keys=True).encode("utf-8")
    head = _HEAD.pack(
        MAGIC, VERSION[0], VERSION[1], f.grid.n_points, f.grid.length, time,
        params.sigma, params.g_rho, params.cp0_prefactor, len(extra),
    )
    body = head + extra + f.values.astype("<f8").tobytes()
    Path(path).write_bytes(body + _digest(body))


def load_snapshot(path) -> tuple[ScalarField, dict]:
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size + 8 or data[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    major, minor = struct.unpack_from("<HH", data, 4)
    if major > VERSION[0]:
        raise SnapshotError(
            f"{path}: snapshot format version {major}.{minor} is newer than the "
            f"supported version {VERSION[0]}.{VERSION[1]}; refusing to read it"
        )
    body, check = data[:-8], data[-8:]
    if _digest(body) != check:
        raise SnapshotError(f"{path}: checksum mismatch (file is corrupted)")
    _, _, _, n, length, time, sigma, g_rho, pref, jlen = _HEAD.unpack_from(body, 0)
    off = _HEAD.size
    extra = json.loads(body[off: off + jlen].decode("utf-8")) if jlen else {}
    off += jlen
    if len(body) - off != 8 * n:
        raise SnapshotError(f"{path}: payload holds {(len(body) - off) // 8} values, header says {n}")
    values = np.frombuffer(body, dtype="<f8", count=n, offset=off).astype(float)
    grid = PeriodicGrid(n, length)
    meta = dict(extra)
    meta.update(time=time, params=PhysicalParams(sigma, g_rho, pref))
    return ScalarField(grid, values), meta


# --- time series -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


def _rows(traj) -> list[dict]:
    recs = traj.records() if hasattr(traj, "records") else list(traj)
    return [{c: float(r[c]) for c in COLUMNS} for r in recs]


def write_timeseries(traj, path, format: str = "csv") -> None:
    """Write one record per report, columns :data:`COLUMNS`, 17 significant digits."""
    rows = _rows(traj)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in rows:
                w.writerow([_fmt(r[c]) for c in COLUMNS])
    elif format == "json":
        def num(v):
            return _fmt(v) if math.isfinite(v) else json.dumps(_fmt(v))

        lines = [
            "  {" + ", ".join(f'"{c}": {num(r[c])}' for c in COLUMNS) + "}" for r in rows
        ]
        body = "[\n" + ",\n".join(lines) + ("\n" if lines else "") + "]\n"
        Path(path).write_text(body, encoding="utf-8")
    else:
        raise ValueError("format must be 'csv' or 'json'")


def read_timeseries(path) -> list[dict]:
    """Read a CSV or JSON series written by :func:`write_timeseries`."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        recs = json.loads(text)
        return [{k: float(v) for k, v in r.items()} for r in recs]
    reader = csv.DictReader(text.splitlines())
    missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"{p}: missing columns {missing}")
    return [{k: float(v) for k, v in row.items()} for row in reader]
