"""Bit-exact file I/O: event CSV, binary event cache, calibration JSON, flow binary.

Formats
-------
* Event CSV: one ``t,x,y,p`` record per line (t seconds, p in {-1,0,1}; 0 is
  coerced to -1). Lines starting with ``#`` and blank lines are ignored.
* Binary event cache: magic ``EVT1``, u32 width, u32 height, u64 count, then
  packed little-endian records of (f64 t, u16 x, u16 y, i8 p).
* Calibration JSON: object with fx, fy, cx, cy, width, height and an optional
  5-element ``dist`` array (defaults to zeros).
* Flow binary: Middlebury-style container — float32 magic 202021.25, int32
  width, int32 height, then row-major interleaved float32 (u, v) samples.
  Invalid pixels are stored as u = v = 1e9.
"""

import json
import struct

import numpy as np

from .errors import FormatError, ValidationError
from .types import CameraModel, EventSet, FlowField

FLOW_MAGIC = 202021.25
FLOW_INVALID = 1e9
_EVT_MAGIC = b"EVT1"
_EVT_DTYPE = np.dtype([("t", "<f8"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1")])


def read_events_csv(path, sensor_size) -> EventSet:
    """Parse a ``t,x,y,p`` CSV into a sorted, bounds-checked EventSet."""
    ts, xs, ys, ps = [], [], [], []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FormatError(f"{path}: line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                t = float(parts[0])
                x = int(parts[1])
                y = int(parts[2])
                p = int(parts[3])
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from None
            if p not in (-1, 0, 1):
                raise FormatError(f"{path}: line {lineno}: polarity must be -1, 0, or 1")
            w, h = sensor_size
            if not (0 <= x < w and 0 <= y < h):
                raise ValidationError(
                    f"{path}: line {lineno}: event (t={t}, x={x}, y={y}) outside "
                    f"sensor {w}x{h}")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(-1 if p == 0 else p)
    if not ts:
        raise FormatError(f"{path}: no events found")
    t = np.asarray(ts, dtype=np.float64)
    order = np.argsort(t, kind="stable")
    return EventSet(t[order], np.asarray(xs, dtype=np.int32)[order],
                    np.asarray(ys, dtype=np.int32)[order],
                    np.asarray(ps, dtype=np.int8)[order], sensor_size)


def write_events_csv(path, events: EventSet):
    with open(path, "w") as fh:
        fh.write("# t,x,y,p\n")
        for k in range(len(events)):
            fh.write(f"{events.t[k]:.9f},{events.x[k]},{events.y[k]},{events.p[k]}\n")


def read_events_bin(path) -> EventSet:
    """Read the ``EVT1`` binary event cache."""
    with open(path, "rb") as fh:
        head = fh.read(20)
        if len(head) < 20 or head[:4] != _EVT_MAGIC:
            raise FormatError(f"{path}: not an EVT1 event cache")
        w, h, count = struct.unpack("<IIQ", head[4:20])
        payload = fh.read()
    rec = np.frombuffer(payload, dtype=_EVT_DTYPE)
    if rec.size != count:
        raise FormatError(f"{path}: truncated payload ({rec.size} of {count} records)")
    return EventSet(rec["t"], rec["x"].astype(np.int32), rec["y"].astype(np.int32),
                    rec["p"], (w, h))


def write_events_bin(path, events: EventSet):
    w, h = events.sensor_size
    rec = np.empty(len(events), dtype=_EVT_DTYPE)
    rec["t"] = events.t
    rec["x"] = events.x.astype(np.uint16)
    rec["y"] = events.y.astype(np.uint16)
    rec["p"] = events.p
    with open(path, "wb") as fh:
        fh.write(_EVT_MAGIC)
        fh.write(struct.pack("<IIQ", w, h, len(events)))
        fh.write(rec.tobytes())


def read_events(path, sensor_size=None) -> EventSet:
    """Dispatch on file content: EVT1 cache or CSV (which needs sensor_size)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == _EVT_MAGIC:
        return read_events_bin(path)
    if sensor_size is None:
        raise ValidationError(f"{path}: CSV events need an explicit sensor size")
    return read_events_csv(path, sensor_size)


def read_calibration(path) -> CameraModel:
    """Load a calibration JSON file into a validated CameraModel."""
    with open(path, "r") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from None
    for key in ("fx", "fy", "cx", "cy", "width", "height"):
        if key not in obj:
            raise FormatError(f"{path}: missing calibration key '{key}'")
    dist = obj.get("dist", [0.0] * 5)
    if len(dist) != 5:
        raise FormatError(f"{path}: 'dist' must have 5 coefficients, got {len(dist)}")
    return CameraModel(fx=float(obj["fx"]), fy=float(obj["fy"]),
                       cx=float(obj["cx"]), cy=float(obj["cy"]),
                       sensor_size=(int(obj["width"]), int(obj["height"])),
                       dist=tuple(float(d) for d in dist))


def write_calibration(path, cam: CameraModel):
    w, h = cam.sensor_size
    obj = {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
           "width": w, "height": h, "dist": list(cam.dist)}
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_flow(path, flow: FlowField):
    """Write a flow field to the Middlebury binary container."""
    h, w = flow.u.shape
    u = flow.u.astype(np.float32)
    v = flow.v.astype(np.float32)
    invalid = ~flow.valid
    u[invalid] = FLOW_INVALID
    v[invalid] = FLOW_INVALID
    data = np.empty((h, w, 2), dtype="<f4")
    data[..., 0] = u
    data[..., 1] = v
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLOW_MAGIC))
        fh.write(struct.pack("<ii", w, h))
        fh.write(data.tobytes())


def read_flow(path) -> FlowField:
    """Read a Middlebury flow binary; exact inverse of write_flow."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12:
            raise FormatError(f"{path}: truncated flow header")
        (magic,) = struct.unpack("<f", head[:4])
        if magic != FLOW_MAGIC:
            raise FormatError(f"{path}: bad flow magic {magic!r}")
        w, h = struct.unpack("<ii", head[4:12])
        if w <= 0 or h <= 0:
            raise FormatError(f"{path}: bad flow dimensions {w}x{h}")
        payload = fh.read()
    expected = 2 * w * h * 4
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(h, w, 2)
    u = data[..., 0].astype(np.float64)
    v = data[..., 1].astype(np.float64)
    valid = ~((u == FLOW_INVALID) & (v == FLOW_INVALID))
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return FlowField(u=u, v=v, valid=valid)
