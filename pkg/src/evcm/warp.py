"""Event warping along linear trajectories and accumulation into an IWE.

A MotionField is a coarse per-tile velocity grid (pixels/second). Tile (i, j)
of a (gh, gw) grid is centered at sensor coordinates
``((j + 0.5) * W / gw - 0.5, (i + 0.5) * H / gh - 0.5)``; sampling between
tile centers is bilinear and clamps to the center lattice outside it. Events
are transported to a reference time with the velocity sampled at their source
pixel, and each warped point deposits a truncated discrete Gaussian onto the
image of warped events (IWE). Deposits that fall off the sensor are dropped,
which keeps the contrast objective sensitive to events leaving the frame.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .types import EventSet, pixel_grid

_SPLAT_CHUNK = 131072


@dataclass(frozen=True)
class MotionField:
    """Per-tile 2D velocity grid in pixels/second at a pyramid resolution."""

    grid: np.ndarray
    sensor_size: tuple

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 3 or grid.shape[2] != 2:
            raise ValidationError(f"motion grid must have shape (gh, gw, 2), got {grid.shape}")
        if grid.shape[0] < 1 or grid.shape[1] < 1:
            raise ValidationError("motion grid needs at least one tile")
        if not np.all(np.isfinite(grid)):
            raise ValidationError("motion grid entries must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "sensor_size", (int(self.sensor_size[0]), int(self.sensor_size[1])))

    @property
    def grid_shape(self):
        return self.grid.shape[:2]

    @staticmethod
    def zero(grid_shape, sensor_size):
        gh, gw = grid_shape
        return MotionField(np.zeros((gh, gw, 2)), sensor_size)


@dataclass(frozen=True)
class Iwe:
    """Image of warped events: non-negative accumulation of Gaussian deposits."""

    pixels: np.ndarray
    t_ref: float
    n_events: int


def grid_sample_weights(grid_shape, sensor_size, px, py):
    """Bilinear gather structure for sampling a tile grid at sensor coordinates.

    Returns (idx, wts): flattened tile indices of shape (n, 4) and matching
    weights summing to 1 per sample. Sampling is linear in the grid values,
    so the same structure serves both interpolation and its adjoint.
    """
    gh, gw = grid_shape
    w, h = sensor_size
    gx = np.clip((np.asarray(px, dtype=np.float64).ravel() + 0.5) * (gw / w) - 0.5, 0.0, gw - 1.0)
    gy = np.clip((np.asarray(py, dtype=np.float64).ravel() + 0.5) * (gh / h) - 0.5, 0.0, gh - 1.0)
    x0 = np.clip(np.floor(gx).astype(np.int64), 0, max(gw - 2, 0))
    y0 = np.clip(np.floor(gy).astype(np.int64), 0, max(gh - 2, 0))
    x1 = np.minimum(x0 + 1, gw - 1)
    y1 = np.minimum(y0 + 1, gh - 1)
    fx = gx - x0
    fy = gy - y0
    idx = np.stack([y0 * gw + x0, y0 * gw + x1, y1 * gw + x0, y1 * gw + x1], axis=1)
    wts = np.stack([(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx], axis=1)
    return idx, wts


def sample_field(field: MotionField, px, py):
    """Velocity of the upsampled field at (possibly fractional) sensor coordinates."""
    px = np.asarray(px, dtype=np.float64)
    idx, wts = grid_sample_weights(field.grid_shape, field.sensor_size, px, py)
    flat = field.grid.reshape(-1, 2)
    vals = np.einsum("nk,nkc->nc", wts, flat[idx])
    return vals.reshape(px.shape + (2,))


def upsample_bilinear(field: MotionField):
    """Dense (height, width, 2) per-pixel velocity array at sensor resolution."""
    px, py = pixel_grid(field.sensor_size)
    return sample_field(field, px, py)


def resample_field(field: MotionField, grid_shape) -> MotionField:
    """Field resampled onto another tile grid (used for pyramid handover)."""
    gh, gw = grid_shape
    w, h = field.sensor_size
    cx = (np.arange(gw) + 0.5) * (w / gw) - 0.5
    cy = (np.arange(gh) + 0.5) * (h / gh) - 0.5
    px, py = np.meshgrid(cx, cy)
    return MotionField(sample_field(field, px, py), field.sensor_size)


def warp_events(events: EventSet, field: MotionField, t_ref):
    """Warped coordinates of every event at t_ref: x' = x + theta(x) (t_ref - t).

    The velocity is sampled at the event's source pixel. Warped coordinates
    may leave the sensor; they are kept unclipped.
    """
    events.require_nonempty("warping")
    if not np.isfinite(t_ref):
        raise ValidationError("reference time must be finite")
    theta = sample_field(field, events.x.astype(np.float64), events.y.astype(np.float64))
    dt = (float(t_ref) - events.t)[:, None]
    xy = np.stack([events.x, events.y], axis=1).astype(np.float64)
    return xy + theta * dt


def splat_gaussian(img, points, sigma, scale=1.0):
    """Accumulate unit-mass truncated Gaussian deposits into img, in place.

    Each point deposits onto the (2R+1)^2 window of integer pixels anchored at
    its rounded location, R = ceil(3 sigma). Kernel weights are normalized to
    unit mass over the window before sensor-border truncation, so interior
    deposits conserve mass exactly. ``scale`` multiplies every deposit (use
    -1.0 to remove previously added points).
    """
    h, w = img.shape
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    radius = int(np.ceil(3.0 * sigma))
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    for lo in range(0, pts.shape[0], _SPLAT_CHUNK):
        chunk = pts[lo:lo + _SPLAT_CHUNK]
        cx = np.rint(chunk[:, 0])
        cy = np.rint(chunk[:, 1])
        px = cx[:, None] + offs[None, :]
        py = cy[:, None] + offs[None, :]
        wx = np.exp(-((px - chunk[:, 0:1]) ** 2) * inv2s2)
        wy = np.exp(-((py - chunk[:, 1:2]) ** 2) * inv2s2)
        norm = wx.sum(axis=1) * wy.sum(axis=1)
        w2 = (wy[:, :, None] * wx[:, None, :]) * (scale / norm)[:, None, None]
        okx = (px >= 0) & (px < w)
        oky = (py >= 0) & (py < h)
        ok = oky[:, :, None] & okx[:, None, :]
        if not ok.any():
            continue
        lin = (py[:, :, None] * w + px[:, None, :]).astype(np.int64)
        img += np.bincount(lin[ok], weights=w2[ok], minlength=h * w).reshape(h, w)
    return img


def build_iwe(warped, sensor_size, sigma=1.0, t_ref=0.0) -> Iwe:
    """IWE from warped point coordinates with Gaussian smoothing of width sigma."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    w, h = sensor_size
    pts = np.asarray(warped, dtype=np.float64).reshape(-1, 2)
    img = np.zeros((h, w), dtype=np.float64)
    splat_gaussian(img, pts, sigma)
    return Iwe(pixels=img, t_ref=float(t_ref), n_events=pts.shape[0])


def iwe_of(events: EventSet, field: MotionField, t_ref, sigma=1.0) -> Iwe:
    """Convenience composition: warp the event set and accumulate its IWE."""
    warped = warp_events(events, field, t_ref)
    return build_iwe(warped, events.sensor_size, sigma=sigma, t_ref=t_ref)
