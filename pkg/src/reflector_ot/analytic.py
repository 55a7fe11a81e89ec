"""Closed-form ellipsoid/paraboloid reflector pair and the synthetic test dataset.

The first reflector is a spheroid with foci at the origin and at ``a`` whose
focal distances sum to ``R``; the second is a paraboloid with focus ``a``,
axis along ``-z`` and focal parameter ``2 alpha``.  Every ray leaving the
origin is sent to ``a`` by the first mirror and then straight down by the
second, so the pair gives a ground truth for the inverse solver.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateRay
from .geometry import OpticalConfig, lift

# Input intensity numerator as printed for the reference dataset.
INTENSITY_NUMERATOR = 14.2716049383


@dataclass(frozen=True)
class EllipsoidParaboloidPair:
    """Reflector pair parameters: second focus ``a``, string length ``R``, ``alpha``."""

    a: tuple = (0.0, 0.0, -0.4)
    R: float = 1.3
    alpha: float = 1.0

    def __post_init__(self):
        if not self.R > np.linalg.norm(self.a):
            raise ValueError("R must exceed |a|")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def ell(self):
        """Reduced optical path length ``R + 2 alpha + c``.

        A ray travels ``R`` to the second focus via the first mirror, then
        ``2 alpha - (z - c)`` to the paraboloid and ``z + d`` down to the
        output plane; the sum minus ``d`` is ``R + 2 alpha + c``.
        """
        return self.R + 2.0 * self.alpha + self.a[2]

    @property
    def config(self):
        return OpticalConfig(self.ell)


def rho_exact(pair, m):
    """Polar radius of the spheroid, ``(R^2 - |a|^2) / (2 (R - m.a))``."""
    m = np.asarray(m, dtype=float)
    a = np.asarray(pair.a, dtype=float)
    return (pair.R**2 - a @ a) / (2.0 * (pair.R - m @ a))


def z_exact(pair, x):
    """Height of the paraboloid over the output plane point ``x``."""
    x = np.asarray(x, dtype=float)
    a, b, c = pair.a
    p2 = (x[..., 0] - a) ** 2 + (x[..., 1] - b) ** 2
    return c + pair.alpha - p2 / (4.0 * pair.alpha)


def gamma(pair, m):
    """Ray tracing map: the output point reached by the ray leaving along ``m``."""
    m = np.asarray(m, dtype=float)
    ab = np.asarray(pair.a[:2], dtype=float)
    c = pair.a[2]
    rho = rho_exact(pair, m)
    den = pair.R + c - rho * (1.0 + m[..., 2])
    if np.any(den <= 1e-12):
        raise DegenerateRay("ray tracing denominator vanishes")
    lam = 2.0 * pair.alpha / den
    return ab + lam[..., None] * (ab - rho[..., None] * m[..., :2])


def gamma_planar(pair, mxy):
    """The ray tracing map composed with the lift to the lower hemisphere."""
    return gamma(pair, lift(mxy))


def jacobian(pair, mxy):
    """Closed-form ``|det D(gamma o lift)|`` at planar coordinates ``mxy``."""
    mxy = np.asarray(mxy, dtype=float)
    mz = lift(mxy)[..., 2]
    a = np.asarray(pair.a, dtype=float)
    ab = a[:2]
    c, R = a[2], pair.R
    num = 4.0 * pair.alpha**2 * (a @ a - R**2) ** 2
    inner = (
        2.0 * (c + R) * (mxy @ ab)
        - (1.0 + mz) * (ab @ ab)
        - (c + R) ** 2 * (1.0 - mz)
    )
    return num / (-mz * inner**2)


def input_intensity(pair, L, m):
    """Source intensity making the pair transport ``I dsigma`` onto ``L dx``.

    Evaluates ``|mz| * L(gamma(m)) * J`` at directions in the lower hemisphere.
    """
    m = np.asarray(m, dtype=float)
    return np.abs(m[..., 2]) * L(gamma(pair, m)) * jacobian(pair, m[..., :2])


def _unit_output(x):
    return np.ones(np.shape(x)[:-1])


def _reference_input(m):
    m = np.asarray(m, dtype=float)
    return INTENSITY_NUMERATOR / (1.0 - m[..., 2]) ** 2


@dataclass(frozen=True)
class SyntheticDataset:
    """Apertures, intensities and the exact reflector pair of a test problem."""

    pair: EllipsoidParaboloidPair
    cap_planar_radius: float
    disk_radius: float
    I: Callable = field(repr=False)
    L: Callable = field(repr=False)
    name: str = "custom"

    @property
    def ell(self):
        return self.pair.ell

    @property
    def config(self):
        return self.pair.config

    def input_energy_exact(self):
        """``int I dsigma`` over the cap, when ``I`` is the reference closed form."""
        mz_rim = -np.sqrt(1.0 - self.cap_planar_radius**2)
        return 2.0 * np.pi * INTENSITY_NUMERATOR * (1.0 / (1.0 - mz_rim) - 0.5)

    def output_energy_exact(self):
        """``int L dx`` over the disk, for constant ``L = 1``."""
        return np.pi * self.disk_radius**2


def default_dataset():
    """The reference problem: ``a = (0, 0, -0.4)``, ``R = 1.3``, ``alpha = 1``.

    Input aperture is the polar cap ``|mxy| <= 0.8, mz < 0``; the output
    aperture is the disk of radius 17/9 with ``L = 1``; ``ell = 2.9``.
    """
    return SyntheticDataset(
        pair=EllipsoidParaboloidPair((0.0, 0.0, -0.4), 1.3, 1.0),
        cap_planar_radius=0.8,
        disk_radius=17.0 / 9.0,
        I=_reference_input,
        L=_unit_output,
        name="section4.2",
    )
