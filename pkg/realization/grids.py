"""Sample grids shared by the analytics and the command reports."""
from __future__ import annotations

import numpy as np

DISK_RADII = (0.3, 0.6, 0.9)
DISK_ANGLES = (np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4)
EXTERIOR_POINTS = (1.5j, -1.5j, 2.0 + 0.5j, -2.0 - 0.5j)
BETA_ANGLES = (np.pi / 6, np.pi / 4, np.pi / 3)
CERTIFICATE_RADII = (0.5, 1.0, 1.8)
CERTIFICATE_ANGLES = (np.pi / 3, 2 * np.pi / 3)
XI_POINTS = (2j, -2j, 1.5 + 0.5j, -1.5 - 0.5j, 0.5 + 1j, 3.0)


def disk_grid() -> tuple[complex, ...]:
    """12 points inside the unit disk, off the real axis."""
    return tuple(complex(r * np.exp(1j * theta)) for r in DISK_RADII for theta in DISK_ANGLES)


def sample_grid() -> tuple[complex, ...]:
    """The disk grid plus four points of the cut plane outside the disk."""
    return disk_grid() + EXTERIOR_POINTS


def real_grid(count: int = 8, edge: float = 0.95) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(-edge, edge, count))


def beta_circle(beta: float, sign: int) -> tuple[complex, ...]:
    """Four points with |z sin(beta) + sign * i cos(beta)| = 1, away from z = +-1."""
    if sign not in (1, -1):
        raise ValueError('sign must be +1 or -1')
    angles = (np.pi / 8, 5 * np.pi / 8, 9 * np.pi / 8, 13 * np.pi / 8)
    return tuple(
        complex((np.exp(1j * theta) - sign * 1j * np.cos(beta)) / np.sin(beta)) for theta in angles
    )


def certificate_grid() -> tuple[tuple[complex, ...], tuple[complex, ...]]:
    """Six upper and six lower half-plane points; kernels are assembled per half."""
    upper = tuple(complex(r * np.exp(1j * theta)) for r in CERTIFICATE_RADII for theta in CERTIFICATE_ANGLES)
    return upper, tuple(z.conjugate() for z in upper)


def xi_grid() -> tuple[complex, ...]:
    return tuple(complex(xi) for xi in XI_POINTS)


def moebius_point(z: complex, a: float) -> complex:
    return (z + a) / (1 + a * z)
