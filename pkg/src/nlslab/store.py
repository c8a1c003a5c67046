"""Field snapshots, config text, trajectory/curve tables, run manifests.

Everything here is plumbing with one promise: determinism.  Snapshots
are bit-exact; CSV cells use shortest round-trip float text; manifests
serialize canonically (sorted keys) so serialize -> parse -> serialize
is byte-identical; all writes go through a temp-then-rename so readers
never see a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError, FormatError, NonFiniteData, ParseError, \
    VersionError
from .functionals import ModelParams
from .grid import RadialField, RadialGrid, require_finite

SNAPSHOT_MAGIC = b"NLSR"
SNAPSHOT_VERSION = 1
# magic, version, d, n, r_max -- little-endian, then n (re, im) f64 pairs
_HEADER = struct.Struct("<4sIIQd")


# -- atomic writes -----------------------------------------------------------

def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename; readers never see a
    partial file and a crashed writer leaves the old content intact."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- field snapshots ---------------------------------------------------------

def write_snapshot(field: RadialField, path: str) -> None:
    """Write the bit-exact binary snapshot of a radial field."""
    require_finite(field)
    grid = field.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.d,
                          grid.n, grid.r_max)
    payload = np.ascontiguousarray(field.values,
                                   dtype="<c16").tobytes()
    atomic_write_bytes(path, header + payload)


def read_snapshot(path: str) -> RadialField:
    """Read a snapshot back; validates magic, version, length, finiteness."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header "
                          f"({len(blob)} < {_HEADER.size} bytes)")
    magic, version, d, n, r_max = _HEADER.unpack_from(blob)
    if magic != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise VersionError(f"{path}: snapshot version {version}, this "
                           f"reader supports version {SNAPSHOT_VERSION}")
    expected = _HEADER.size + 16 * n
    if len(blob) != expected:
        raise FormatError(f"{path}: {len(blob)} bytes, expected {expected} "
                          f"for n = {n}")
    values = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size,
                           count=n).astype(np.complex128)
    grid = RadialGrid(int(d), int(n), float(r_max))
    field = RadialField(grid, values)
    require_finite(field)
    return field


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class Config:
    """Fully resolved run parameters; every key has a documented default.

    r_max resolution: when the config sets omega without r_max, r_max is
    raised to max(40, 12/sqrt(omega)) -- the truncation-error scale of
    the exponentially decaying profiles; an explicit r_max always wins,
    and a config that sets neither keeps the plain default grid.
    """

    d: int = 4
    p: float = 2.5
    omega: float = 0.05
    n: int = 4096
    r_max: float = 40.0
    dt: float = 1e-3
    t_max: float = 3.0
    t_far: float = 16.0
    stride: int = 10
    seed: int = 0
    strict: bool = False
    inits: tuple = ()

    def params(self) -> ModelParams:
        return ModelParams(self.d, self.p, self.omega)

    def grid(self) -> RadialGrid:
        return RadialGrid(self.d, self.n, self.r_max)


_INT_KEYS = ("d", "n", "stride", "seed")
_FLOAT_KEYS = ("p", "omega", "r_max", "dt", "t_max", "t_far")
_BOOL_KEYS = ("strict",)
_LIST_KEYS = ("inits",)
_CONFIG_KEYS = _INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS + _LIST_KEYS


def decay_r_max(omega: float) -> float:
    """Box size at which profile truncation is negligible: 12/sqrt(omega),
    never below the default 40."""
    return max(40.0, 12.0 / math.sqrt(omega))


def parse_config(text: str) -> Config:
    """Parse `key = value` lines into a Config.

    `#` starts a comment (full-line or trailing); blank lines are
    skipped; keys may appear once.  Unknown keys, malformed lines, and
    unconvertible values raise ParseError with the line number; an
    inadmissible parameter combination raises DomainError.
    """
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"line {lineno}: expected `key = value`, "
                             f"got {stripped!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                raw[key] = int(value)
            elif key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _BOOL_KEYS:
                if value not in ("true", "false"):
                    raise ValueError(value)
                raw[key] = value == "true"
            else:
                # Whitespace-separated: init specs carry their own commas
                # (gaussian:A,SIGMA), so commas cannot delimit the list.
                raw[key] = tuple(value.split())
        except ValueError:
            raise ParseError(f"line {lineno}: cannot read {value!r} "
                             f"as a {key} value") from None
    if "omega" in raw and "r_max" not in raw:
        raw["r_max"] = decay_r_max(raw["omega"])
    cfg = Config(**raw)
    validate_config(cfg)
    return cfg


def validate_config(cfg: Config) -> None:
    """DomainError unless the resolved values are admissible."""
    cfg.params()  # admissibility of (d, p) and omega finiteness
    for name, value in (("n", cfg.n), ("r_max", cfg.r_max), ("dt", cfg.dt),
                        ("t_max", cfg.t_max), ("t_far", cfg.t_far),
                        ("stride", cfg.stride)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def config_from_parameters(parameters: dict) -> Config:
    """Rebuild a Config from a manifest's resolved parameter set.

    Keys beyond the config vocabulary (calibrated thresholds, tool
    name) are recomputed on the next run, so they are ignored here;
    r_max arrives resolved, so no decay-rule resolution reapplies.
    """
    raw = {}
    for f in fields(Config):
        if f.name in parameters:
            value = parameters[f.name]
            raw[f.name] = tuple(value) if f.name == "inits" else value
    cfg = Config(**raw)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> Config:
    """Read a config file: `key = value` text, or a run manifest whose
    resolved parameters seed the new run."""
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text ({exc})") from None
    if text.lstrip().startswith("{"):
        return config_from_parameters(read_manifest(path).parameters)
    return parse_config(text)


# -- run manifests -----------------------------------------------------------

_MANIFEST_KEYS = ("tool_version", "parameters", "digests", "counters")


@dataclass(frozen=True)
class RunManifest:
    """What a CLI run was: tool version, the fully resolved parameters
    (including measured thresholds), input/output digests, counters."""

    tool_version: str
    parameters: dict
    digests: dict
    counters: dict

    def to_json(self) -> str:
        body = {key: getattr(self, key) for key in _MANIFEST_KEYS}
        return json.dumps(body, sort_keys=True, indent=2,
                          allow_nan=False) + "\n"


def manifest_from_json(text: str) -> RunManifest:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(body, dict) or set(body) != set(_MANIFEST_KEYS):
        raise ParseError(f"manifest must have exactly the keys "
                         f"{sorted(_MANIFEST_KEYS)}")
    return RunManifest(**body)


def manifest_path(out_path: str) -> str:
    """The manifest sits adjacent to the run's primary output."""
    return f"{out_path}.manifest.json"


def write_manifest(manifest: RunManifest, path: str) -> None:
    atomic_write_text(path, manifest.to_json())


def read_manifest(path: str) -> RunManifest:
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text ({exc})") from None
    return manifest_from_json(text)


# -- tables ------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("t", "mass", "hamiltonian", "K", "grad_norm",
                      "second_moment", "d_omega", "d_tilde", "lambda_plus",
                      "lambda_minus", "theta")
MCURVE_COLUMNS = ("omega", "m", "mass", "phi0", "residual")
INDEX_COLUMNS = ("init_spec", "forward", "backward", "scenario", "S_omega",
                 "mass", "epsilon_omega")


def _cell(x) -> str:
    """Shortest round-trip text for one CSV cell."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(columns: dict, path: str, *, order: tuple) -> None:
    """Write named columns as CSV in the given column order.

    Cells containing commas (init specs like gaussian:A,SIGMA) get
    standard CSV quoting, so commas never leak into the row structure.
    """
    arrays = [np.asarray(columns[name]) for name in order]
    n = arrays[0].shape[0]
    if any(a.shape != (n,) for a in arrays):
        raise DomainError("table columns must be 1-d and equally long")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(order)
    for i in range(n):
        w.writerow([_cell(a[i]) for a in arrays])
    atomic_write_text(path, buf.getvalue())


def read_table(path: str, *, order: tuple) -> dict:
    """Read a CSV written by write_table; the header must match exactly."""
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text ({exc})") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != list(order):
        got = ",".join(header) if header else "<empty>"
        raise FormatError(f"{path}: header {got!r} does not match "
                          f"{','.join(order)!r}")
    rows = []
    for lineno, parts in enumerate(reader, start=2):
        if not parts:
            continue
        if len(parts) != len(order):
            raise FormatError(f"{path}: line {lineno} has {len(parts)} "
                              f"cells, expected {len(order)}")
        rows.append(parts)
    out = {}
    for j, name in enumerate(order):
        try:
            out[name] = np.array([float(r[j]) if r[j] else float("nan")
                                  for r in rows])
        except ValueError:
            out[name] = np.array([r[j] for r in rows], dtype=object)
    return out


def write_trajectory(record, path: str) -> None:
    """Trajectory CSV with exactly the eleven diagnostic columns."""
    write_table(record.columns(), path, order=TRAJECTORY_COLUMNS)


def read_trajectory(path: str) -> dict:
    return read_table(path, order=TRAJECTORY_COLUMNS)


def write_mcurve(mcurve, path: str) -> None:
    cols = {name: getattr(mcurve, name) for name in MCURVE_COLUMNS}
    write_table(cols, path, order=MCURVE_COLUMNS)


def read_mcurve(path: str) -> dict:
    return read_table(path, order=MCURVE_COLUMNS)


# -- JSON records -------------------------------------------------------------

def jsonable(obj):
    """Recursively convert numpy scalars and non-finite floats (-> None)
    into canonical JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json_record(record: dict, path: str) -> None:
    atomic_write_text(path, json.dumps(jsonable(record), sort_keys=True,
                                       indent=2, allow_nan=False) + "\n")


def read_json_record(path: str) -> dict:
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        return json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
