"""Core domain types: events, camera model, velocity samples, flow fields.

All types are immutable values after construction and safe to share across
workers. Pixel coordinates follow image convention: x is the column, y is
the row, origin at the top-left pixel center. ``sensor_size`` tuples are
always ``(width, height)`` while dense arrays are row-major ``(height, width)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Event:
    """A single brightness-change spike.

    t is an absolute timestamp in seconds, (x, y) the integer pixel of the
    triggering photosite, p the polarity (-1 or +1). Polarity is preserved
    for format fidelity but ignored when accumulating warped events.
    """

    t: float
    x: int
    y: int
    p: int


class EventSet:
    """A time-ordered batch of events on a fixed sensor.

    Events are stored column-wise as numpy arrays (``t`` float64, ``x``/``y``
    int32, ``p`` int8) for vectorized processing. ``t_start``/``t_end`` bound
    the observation window and need not coincide with the first/last event.
    """

    __slots__ = ("t", "x", "y", "p", "sensor_size", "t_start", "t_end")

    def __init__(self, t, x, y, p, sensor_size, t_start=None, t_end=None):
        t = np.ascontiguousarray(t, dtype=np.float64)
        x = np.ascontiguousarray(x, dtype=np.int32)
        y = np.ascontiguousarray(y, dtype=np.int32)
        p = np.ascontiguousarray(p, dtype=np.int8)
        if not (t.shape == x.shape == y.shape == p.shape) or t.ndim != 1:
            raise ValidationError("event columns must be 1-d arrays of equal length")
        w, h = int(sensor_size[0]), int(sensor_size[1])
        if w <= 0 or h <= 0:
            raise ValidationError(f"invalid sensor size {sensor_size}")
        if t.size:
            if np.any(np.diff(t) < 0):
                raise ValidationError("event timestamps must be non-decreasing")
            bad = np.flatnonzero((x < 0) | (x >= w) | (y < 0) | (y >= h))
            if bad.size:
                k = bad[0]
                raise ValidationError(
                    f"event {k} at t={t[k]:.9f} has pixel ({x[k]},{y[k]}) "
                    f"outside sensor {w}x{h}"
                )
            if not np.all(np.isin(p, (-1, 1))):
                raise ValidationError("event polarity must be -1 or +1")
        self.t = t
        self.x = x
        self.y = y
        self.p = p
        self.sensor_size = (w, h)
        if t_start is None:
            t_start = t[0] if t.size else 0.0
        if t_end is None:
            t_end = t[-1] if t.size else 0.0
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        if t.size and (t[0] < self.t_start or t[-1] > self.t_end):
            raise ValidationError(
                f"events span [{t[0]}, {t[-1]}] outside window "
                f"[{self.t_start}, {self.t_end}]"
            )

    def __len__(self):
        return self.t.size

    def __getitem__(self, k) -> Event:
        return Event(float(self.t[k]), int(self.x[k]), int(self.y[k]), int(self.p[k]))

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def window(self):
        return (self.t_start, self.t_end)

    def require_nonempty(self, what="operation"):
        if len(self) == 0:
            raise ValidationError(f"{what} requires a non-empty event set")
        return self

    def between(self, t0, t1):
        """Sub-set of events with t0 <= t <= t1; the window becomes [t0, t1]."""
        if not t0 < t1:
            raise ValidationError(f"empty window [{t0}, {t1}]")
        i0 = int(np.searchsorted(self.t, t0, side="left"))
        i1 = int(np.searchsorted(self.t, t1, side="right"))
        sl = slice(i0, i1)
        return EventSet(self.t[sl], self.x[sl], self.y[sl], self.p[sl],
                        self.sensor_size, t_start=t0, t_end=t1)

    def take_count(self, t0, count):
        """First ``count`` events at or after t0; the window ends at the last one."""
        if count < 1:
            raise ValidationError("event count must be >= 1")
        i0 = int(np.searchsorted(self.t, t0, side="left"))
        i1 = min(i0 + int(count), len(self))
        if i1 <= i0:
            raise ValidationError(f"no events at or after t={t0}")
        sl = slice(i0, i1)
        return EventSet(self.t[sl], self.x[sl], self.y[sl], self.p[sl],
                        self.sensor_size, t_start=t0, t_end=float(self.t[i1 - 1]))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics with 5-coefficient radial-tangential distortion.

    dist holds (k1, k2, p1, p2, k3); the all-zero default is an ideal pinhole.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    sensor_size: tuple
    dist: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        w, h = self.sensor_size
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not (0 <= self.cx < w and 0 <= self.cy < h):
            raise ValidationError(
                f"principal point ({self.cx}, {self.cy}) outside sensor {w}x{h}")
        if len(self.dist) != 5:
            raise ValidationError(f"expected 5 distortion coefficients, got {len(self.dist)}")
        object.__setattr__(self, "sensor_size", (int(w), int(h)))
        object.__setattr__(self, "dist", tuple(float(d) for d in self.dist))

    @property
    def has_distortion(self):
        return any(d != 0.0 for d in self.dist)

    def normalize(self, pts_px):
        """Pixel coordinates -> normalized (unit-focal) coordinates."""
        pts = np.asarray(pts_px, dtype=np.float64)
        out = np.empty_like(pts)
        out[..., 0] = (pts[..., 0] - self.cx) / self.fx
        out[..., 1] = (pts[..., 1] - self.cy) / self.fy
        return out

    def to_pixels(self, pts_norm):
        """Normalized coordinates -> pixel coordinates."""
        pts = np.asarray(pts_norm, dtype=np.float64)
        out = np.empty_like(pts)
        out[..., 0] = pts[..., 0] * self.fx + self.cx
        out[..., 1] = pts[..., 1] * self.fy + self.cy
        return out


def distort_point(cam: CameraModel, x_u):
    """Forward radial-tangential distortion of normalized points.

    Accepts a single (x, y) pair or an (..., 2) array. Total function:
    x_d = x (1 + k1 r^2 + k2 r^4 + k3 r^6) + 2 p1 x y + p2 (r^2 + 2 x^2)
    y_d = y (1 + k1 r^2 + k2 r^4 + k3 r^6) + p1 (r^2 + 2 y^2) + 2 p2 x y
    """
    k1, k2, p1, p2, k3 = cam.dist
    pts = np.asarray(x_u, dtype=np.float64)
    x, y = pts[..., 0], pts[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    out = np.empty_like(pts)
    out[..., 0] = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    out[..., 1] = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return out


@dataclass(frozen=True)
class VelocitySample:
    """Timestamped 3D camera velocity: v linear (m/s), w angular (rad/s)."""

    t: float
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64).reshape(3)
        w = np.asarray(self.w, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValidationError("velocity components must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class FlowField:
    """Dense per-pixel flow displacement in pixels over an evaluation interval."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise ValidationError("flow channels must be equal-shape 2-d arrays")
        valid = self.valid
        if valid is None:
            valid = np.ones(u.shape, dtype=bool)
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != u.shape:
                raise ValidationError("validity mask shape must match flow channels")
        if not (np.all(np.isfinite(u[valid])) and np.all(np.isfinite(v[valid]))):
            raise ValidationError("flow must be finite on valid pixels")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "valid", valid)

    @property
    def sensor_size(self):
        return (self.u.shape[1], self.u.shape[0])


def pixel_grid(sensor_size):
    """Float pixel-center coordinate arrays X, Y of shape (height, width)."""
    w, h = sensor_size
    return np.meshgrid(np.arange(w, dtype=np.float64),
                       np.arange(h, dtype=np.float64))
