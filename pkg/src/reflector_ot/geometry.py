"""Optical configuration, transport cost and the reflector transforms.

Directions on the unit sphere are arrays of shape ``(..., 3)`` holding
``(mx, my, mz)``; points of the output plane are arrays of shape
``(..., 2)``.  All functions broadcast over leading dimensions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveCost, NonpositiveRadius, OutOfRange, PoleSingularity

POLE_TOL = 1e-14


@dataclass(frozen=True)
class OpticalConfig:
    """Reduced optical path length ``ell = L - d`` of the two-reflector system."""

    ell: float

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell}")


def as_direction(m):
    """Return ``m`` as a float array of unit vectors, checking the norm."""
    m = np.asarray(m, dtype=float)
    if m.shape[-1] != 3:
        raise ValueError("directions need three components")
    norm2 = np.einsum("...k,...k->...", m, m)
    if np.any(np.abs(norm2 - 1.0) > 1e-12):
        raise ValueError("direction is not a unit vector")
    return m


def lift(mxy):
    """Map planar coordinates to the lower hemisphere, ``mz = -sqrt(1 - |mxy|^2)``."""
    mxy = np.asarray(mxy, dtype=float)
    r2 = np.einsum("...k,...k->...", mxy, mxy)
    if np.any(r2 >= 1.0):
        raise ValueError("planar coordinates must lie inside the unit disk")
    mz = -np.sqrt(1.0 - r2)
    return np.concatenate([mxy, mz[..., None]], axis=-1)


def _check_pole(mz):
    if np.any(1.0 + mz <= POLE_TOL):
        raise PoleSingularity("direction at or too close to (0, 0, -1)")


def _plane_denominator(cfg, x):
    x = np.asarray(x, dtype=float)
    den = cfg.ell**2 - np.einsum("...k,...k->...", x, x)
    if np.any(den <= 0.0):
        raise OutOfRange(f"|x| must be smaller than ell = {cfg.ell}")
    return den


def cost_K(cfg, m, x):
    """Transport cost ``K(m, x)`` coupling a source direction and an output point.

    ``K = (ell - <mx, x>) / (2 ell (ell^2 - |x|^2)(1 + mz)) - 1 / (4 ell^2)``
    """
    m = np.asarray(m, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_pole(m[..., 2])
    den = _plane_denominator(cfg, x)
    ell = cfg.ell
    dot = np.einsum("...k,...k->...", m[..., :2], x)
    return (ell - dot) / (2.0 * ell * den * (1.0 + m[..., 2])) - 1.0 / (4.0 * ell**2)


def log_cost(cfg, m, x):
    """Natural log of :func:`cost_K`; raises :class:`NonpositiveCost` if ``K <= 0``."""
    k = cost_K(cfg, m, x)
    if np.any(k <= 0.0):
        raise NonpositiveCost("cost K is not positive for some (m, x) pair")
    return np.log(k)


def z_tilde(cfg, z_value, x):
    """Transform of the second reflector height, ``1/(2 ell) - z / (ell^2 - |x|^2)``."""
    den = _plane_denominator(cfg, x)
    return 1.0 / (2.0 * cfg.ell) - np.asarray(z_value, dtype=float) / den


def inverse_z_tilde(cfg, zt, x):
    """Height ``z`` whose :func:`z_tilde` equals ``zt``."""
    den = _plane_denominator(cfg, x)
    return (1.0 / (2.0 * cfg.ell) - np.asarray(zt, dtype=float)) * den


def rho_tilde(cfg, rho_value, m):
    """Transform of the first reflector radius, ``-1/(2 ell) + 1/(2 rho (mz + 1))``."""
    rho_value = np.asarray(rho_value, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_pole(m[..., 2])
    if np.any(rho_value <= 0.0):
        raise NonpositiveRadius("rho must be positive")
    return -1.0 / (2.0 * cfg.ell) + 1.0 / (2.0 * rho_value * (m[..., 2] + 1.0))


def inverse_rho_tilde(cfg, rt, m):
    """Radius ``rho`` whose :func:`rho_tilde` equals ``rt``.

    Requires ``rt > -1/(2 ell)`` so that the radius is positive and finite.
    """
    rt = np.asarray(rt, dtype=float)
    m = np.asarray(m, dtype=float)
    _check_pole(m[..., 2])
    shifted = rt + 1.0 / (2.0 * cfg.ell)
    if np.any(shifted <= 0.0):
        raise NonpositiveRadius("rho_tilde must exceed -1/(2 ell)")
    return 1.0 / (2.0 * shifted * (m[..., 2] + 1.0))
