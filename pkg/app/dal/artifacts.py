"""Artifact files: raw records, grid and plane dumps, CSV tables, scenario documents.

Raw files start with ``key=value`` text lines closed by ``END`` and continue
with little-endian float32 arrays in the order the header lists them.
Complex arrays store interleaved (real, imag) pairs.
"""

import csv
import io
import json
import os
import sys
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from app.core.errors import InvalidInputError
from app.schemas.geometry import GridRegion
from app.schemas.scenario import Scenario
from app.schemas.simulation import Axis
from app.services.geometry import DielectricGrid
from app.services.solver.ringdown import FieldSnapshot, RingdownRecord

RECORD_FORMAT = "nanobeam-record-1"
GRID_FORMAT = "nanobeam-grid-1"
PLANE_FORMAT = "nanobeam-plane-1"
_FLOAT = np.dtype("<f4")


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    """Write ``data`` next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def _header(entries: Sequence[tuple[str, object]]) -> bytes:
    return ("".join(f"{key}={value}\n" for key, value in entries) + "END\n").encode("utf-8")


def _split_header(raw: bytes, expected_format: str) -> tuple[list[tuple[str, str]], bytes]:
    marker = b"END\n"
    end = raw.find(b"\n" + marker)
    if not raw.startswith(b"format=") or end < 0:
        raise InvalidInputError("not an artifact file")
    lines = raw[:end].decode("utf-8").split("\n")
    entries = [tuple(line.split("=", 1)) for line in lines]
    if entries[0][1] != expected_format:
        raise InvalidInputError(f"expected {expected_format}, found {entries[0][1]}")
    return entries, raw[end + 1 + len(marker):]  # type: ignore[return-value]


def _pack(array: np.ndarray) -> bytes:
    if np.iscomplexobj(array):
        array = np.stack([array.real, array.imag], axis=-1)
    return np.ascontiguousarray(array, dtype=_FLOAT).tobytes()


def _unpack(payload: memoryview, offset: int, count: int, complex_values: bool) -> tuple[np.ndarray, int]:
    width = 2 * count if complex_values else count
    values = np.frombuffer(payload, dtype=_FLOAT, count=width, offset=offset).astype(float)
    if complex_values:
        values = values[0::2] + 1j * values[1::2]
    return values, offset + width * _FLOAT.itemsize


def encode_record(record: RingdownRecord) -> bytes:
    """Serialize a ringdown record (DFT fields are not part of the file)."""
    complex_values = any(np.iscomplexobj(s) for s in record.probes.values())
    entries: list[tuple[str, object]] = [
        ("format", RECORD_FORMAT),
        ("config_hash", record.config_hash),
        ("cell_size_nm", repr(record.cell_size_nm)),
        ("shape", ",".join(str(n) for n in record.shape)),
        ("dt", repr(record.dt)),
        ("dt_seconds", repr(record.dt_seconds)),
        ("steps", record.steps),
        ("shutoff_step", record.shutoff_step),
        ("complex", int(complex_values)),
    ]
    entries += [("probe", label) for label in record.probes]
    entries += [("flux", name) for name in record.flux]
    body = b"".join(_pack(s) for s in record.probes.values())
    body += b"".join(_pack(s) for s in record.flux.values())
    return _header(entries) + body


def decode_record(raw: bytes) -> RingdownRecord:
    entries, payload = _split_header(raw, RECORD_FORMAT)
    meta = {k: v for k, v in entries if k not in ("probe", "flux")}
    steps = int(meta["steps"])
    complex_values = meta["complex"] == "1"
    view = memoryview(payload)
    offset = 0
    probes, flux = {}, {}
    for label in (v for k, v in entries if k == "probe"):
        probes[label], offset = _unpack(view, offset, steps, complex_values)
    for name in (v for k, v in entries if k == "flux"):
        flux[name], offset = _unpack(view, offset, steps, False)
    return RingdownRecord(
        config_hash=meta["config_hash"],
        cell_size_nm=float(meta["cell_size_nm"]),
        shape=tuple(int(n) for n in meta["shape"].split(",")),  # type: ignore[arg-type]
        dt=float(meta["dt"]),
        dt_seconds=float(meta["dt_seconds"]),
        steps=steps,
        shutoff_step=int(meta["shutoff_step"]),
        probes=probes,
        flux=flux,
    )


def write_record(path: Path, record: RingdownRecord) -> Path:
    return atomic_write_bytes(path, encode_record(record))


def read_record(path: Path) -> RingdownRecord:
    return decode_record(Path(path).read_bytes())


def write_grid(path: Path, grid: DielectricGrid, config_hash: str) -> Path:
    """Dump the three permittivity arrays of a grid."""
    entries = [
        ("format", GRID_FORMAT),
        ("config_hash", config_hash),
        ("cell_size_nm", repr(grid.cell_size_nm)),
        ("origin_nm", ",".join(repr(float(v)) for v in grid.origin_nm)),
        ("shape", ",".join(str(n) for n in grid.shape)),
        ("region", grid.region.value),
        ("refractive_index", repr(grid.refractive_index)),
        ("arrays", "eps_x,eps_y,eps_z"),
    ]
    body = _pack(grid.eps_x) + _pack(grid.eps_y) + _pack(grid.eps_z)
    return atomic_write_bytes(path, _header(entries) + body)


def read_grid(path: Path) -> DielectricGrid:
    entries, payload = _split_header(Path(path).read_bytes(), GRID_FORMAT)
    meta = dict(entries)
    shape = tuple(int(n) for n in meta["shape"].split(","))
    count = int(np.prod(shape))
    view, offset, arrays = memoryview(payload), 0, []
    for _ in range(3):
        values, offset = _unpack(view, offset, count, False)
        arrays.append(values.reshape(shape))
    return DielectricGrid(
        cell_size_nm=float(meta["cell_size_nm"]),
        origin_nm=tuple(float(v) for v in meta["origin_nm"].split(",")),  # type: ignore[arg-type]
        eps_x=arrays[0],
        eps_y=arrays[1],
        eps_z=arrays[2],
        region=GridRegion(meta["region"]),
        refractive_index=float(meta["refractive_index"]),
    )


def write_plane(path: Path, snapshot: FieldSnapshot, config_hash: str, extra: dict[str, np.ndarray] | None = None) -> Path:
    """Dump a plane snapshot: coordinates, then fields, then permittivity, then ``extra``."""
    arrays = {
        **{f"field:{k}": v for k, v in snapshot.fields.items()},
        **{f"eps:{k}": v for k, v in snapshot.eps.items()},
        **{f"extra:{k}": v for k, v in (extra or {}).items()},
    }
    complex_values = any(np.iscomplexobj(v) for v in arrays.values())
    first, second = snapshot.coordinates
    entries: list[tuple[str, object]] = [
        ("format", PLANE_FORMAT),
        ("config_hash", config_hash),
        ("axis", snapshot.axis.value),
        ("index", snapshot.index),
        ("position_nm", repr(float(snapshot.position_nm))),
        ("shape", f"{first.size},{second.size}"),
        ("complex", int(complex_values)),
    ]
    entries += [("array", name) for name in arrays]
    body = _pack(first) + _pack(second)
    for values in arrays.values():
        body += _pack(values.astype(complex) if complex_values else values)
    return atomic_write_bytes(path, _header(entries) + body)


def read_plane(path: Path) -> FieldSnapshot:
    entries, payload = _split_header(Path(path).read_bytes(), PLANE_FORMAT)
    meta = {k: v for k, v in entries if k != "array"}
    rows, cols = (int(n) for n in meta["shape"].split(","))
    complex_values = meta["complex"] == "1"
    view = memoryview(payload)
    first, offset = _unpack(view, 0, rows, False)
    second, offset = _unpack(view, offset, cols, False)
    fields, eps = {}, {}
    for name in (v for k, v in entries if k == "array"):
        values, offset = _unpack(view, offset, rows * cols, complex_values)
        kind, key = name.split(":", 1)
        if kind == "field":
            fields[key] = values.reshape(rows, cols)
        elif kind == "eps":
            eps[key] = values.real.reshape(rows, cols)
    return FieldSnapshot(
        axis=Axis(meta["axis"]),
        index=int(meta["index"]),
        position_nm=float(meta["position_nm"]),
        coordinates=(first, second),
        fields=fields,
        eps=eps,
    )


def _cell(value: object) -> object:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[object]], config_hash: str | None = None) -> Path:
    """Write a UTF-8 CSV with an optional ``# config_hash=`` comment line."""
    buffer = io.StringIO()
    if config_hash is not None:
        buffer.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return atomic_write_text(path, buffer.getvalue())


def read_csv(path: Path) -> list[dict[str, str]]:
    """Rows of a CSV written by :func:`write_csv`, comment lines skipped."""
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def read_spectrum_csv(path: Path) -> np.ndarray:
    """Numeric rows (wavelength_nm, intensity[, position_um]) of a spectrum file."""
    try:
        rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as e:
        raise InvalidInputError(f"cannot parse spectrum file {path}: {e}") from e
    if rows.shape[1] not in (2, 3):
        raise InvalidInputError(f"{path} must have two or three columns, found {rows.shape[1]}")
    return rows


def write_json(path: Path, payload: dict) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_scenario(path: Path) -> Scenario:
    """Read a TOML or JSON scenario file.

    Raises:
        pydantic.ValidationError: On schema violations.
        InvalidInputError: On unknown extensions or unparseable files.
    """
    path = Path(path)
    if path.suffix == ".toml":
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise InvalidInputError(f"cannot parse {path}: {e}") from e
        return Scenario.model_validate(data)
    if path.suffix == ".json":
        return Scenario.model_validate_json(path.read_text(encoding="utf-8"))
    raise InvalidInputError(f"scenario files must be .toml or .json, got {path.name}")
