"""Contrast objectives over the IWE.

Two sharpness measures are provided: the spatial variance and the mean
squared gradient magnitude. The estimator optimizes the gradient-magnitude
measure; variance is kept for evaluation (it also defines the flow warp
loss). Relative contrast divides the sharpness of the warped IWE by the
sharpness of the identity-warp IWE of the same event set, and the final
contrast score is a Gaussian-weighted mean of relative contrasts computed at
several reference times spread over the event window.

Reference times are given as fractions of the window; fraction ``s`` maps to
the absolute time ``t0 + s * (t1 - t0)``. The weight of fraction ``s`` is the
normal density N(s; weight_mean, weight_sigma^2), so the window midpoint
dominates by default. Weighted sums run in listed t_ref order; this fixed
reduction order is part of the determinism contract.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .types import EventSet
from .warp import Iwe, MotionField, iwe_of

DEFAULT_T_REFS = (0.0, 0.25, 0.5, 0.75, 1.0)

# Identity IWEs with variance below this are treated as carrying no contrast
# signal at all (empty or single-position event sets).
DEGENERATE_VARIANCE = 1e-12


@dataclass(frozen=True)
class ContrastConfig:
    """Parameters of the multi-reference contrast score."""

    sigma: float = 1.0
    t_refs: tuple = DEFAULT_T_REFS
    weight_mean: float = 0.5
    weight_sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        t_refs = tuple(float(s) for s in self.t_refs)
        if not t_refs:
            raise ValidationError("at least one reference time is required")
        if any(s < 0.0 or s > 1.0 for s in t_refs):
            raise ValidationError(f"reference fractions must lie in [0, 1], got {t_refs}")
        if self.weight_sigma <= 0:
            raise ValidationError("weight_sigma must be positive")
        object.__setattr__(self, "t_refs", t_refs)

    def weights(self):
        """Unnormalized Gaussian weights of the reference fractions."""
        s = np.asarray(self.t_refs)
        z = (s - self.weight_mean) / self.weight_sigma
        return np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * self.weight_sigma)


def _image_of(iwe):
    return iwe.pixels if isinstance(iwe, Iwe) else np.asarray(iwe, dtype=np.float64)


def variance(iwe):
    """Spatial variance of the IWE over the full sensor domain."""
    img = _image_of(iwe)
    if img.size == 0:
        raise ValidationError("variance of an empty image is undefined")
    return float(np.var(img))


def gradient_magnitude(iwe):
    """Mean squared gradient magnitude of the IWE.

    The gradient uses central differences in the interior and one-sided
    differences at the borders.
    """
    img = _image_of(iwe)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValidationError(f"gradient magnitude needs at least a 3x3 image, got {img.shape}")
    gy, gx = np.gradient(img)
    return float(np.mean(gx * gx + gy * gy))


def identity_contrast(events: EventSet, cfg: ContrastConfig = ContrastConfig()):
    """Sharpness of the identity-warp IWE, the denominator of relative contrast.

    Independent of the reference time because a zero warp moves nothing.
    Raises NumericalError when the identity IWE carries no contrast signal.
    """
    events.require_nonempty("contrast")
    zero = MotionField.zero((1, 1), events.sensor_size)
    iwe0 = iwe_of(events, zero, events.t_start, sigma=cfg.sigma)
    if variance(iwe0) < DEGENERATE_VARIANCE:
        raise NumericalError("identity IWE is constant; contrast denominator is degenerate")
    g0 = gradient_magnitude(iwe0)
    if not g0 > 0.0:
        raise NumericalError("identity IWE has zero gradient energy; relative contrast undefined")
    return g0


def relative_contrast(events: EventSet, field: MotionField, t_ref,
                      cfg: ContrastConfig = ContrastConfig(), denominator=None):
    """Sharpness of the warped IWE at t_ref divided by the identity sharpness.

    Equals 1 exactly for a zero motion field. ``denominator`` lets callers
    reuse a cached identity_contrast value.
    """
    if denominator is None:
        denominator = identity_contrast(events, cfg)
    iwe = iwe_of(events, field, t_ref, sigma=cfg.sigma)
    return gradient_magnitude(iwe) / denominator


def multi_ref_contrast(events: EventSet, field: MotionField, window=None,
                       cfg: ContrastConfig = ContrastConfig(), denominator=None):
    """Gaussian-weighted mean of relative contrasts over the reference times."""
    t0, t1 = window if window is not None else events.window
    if not t0 < t1:
        raise ValidationError(f"window must satisfy t0 < t1, got [{t0}, {t1}]")
    if denominator is None:
        denominator = identity_contrast(events, cfg)
    wts = cfg.weights()
    total = 0.0
    wsum = 0.0
    for s, wt in zip(cfg.t_refs, wts):
        t_ref = t0 + s * (t1 - t0)
        total += wt * relative_contrast(events, field, t_ref, cfg, denominator=denominator)
        wsum += wt
    return total / wsum
