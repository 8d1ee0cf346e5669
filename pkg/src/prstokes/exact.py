"""Singular Stokes solution on the L-shaped domain with a reentrant corner.

The velocity is ``r**gamma * F(phi)`` built from the corner stream function
``psi``; the pressure ``p0`` balances the viscous term exactly, and a smooth
pressure ``sin(pi x y)`` is added whose gradient is the forcing.
"""

import numpy as np
from scipy.optimize import brentq

from .errors import SingularityError

OMEGA = 1.5 * np.pi
TABULATED_GAMMA = 856399 / 1572864
R_MIN = 1e-14


def _psi_derivs(phi, gamma, omega=OMEGA):
    """psi and its first three derivatives (closed form)."""
    a, b = gamma + 1.0, gamma - 1.0
    cw = np.cos(gamma * omega)
    sa, ca = np.sin(a * phi), np.cos(a * phi)
    sb, cb = np.sin(b * phi), np.cos(b * phi)
    psi = sa * cw / a - ca - sb * cw / b + cb
    d1 = ca * cw + a * sa - cb * cw - b * sb
    d2 = -a * sa * cw + a**2 * ca + b * sb * cw - b**2 * cb
    d3 = -a**2 * ca * cw - a**3 * sa + b**2 * cb * cw + b**3 * sb
    return psi, d1, d2, d3


def corner_exponent(omega=OMEGA, bracket=(0.52, 0.56)):
    """Root gamma of ``psi(omega; gamma) = 0`` (no-slip on the second leg)."""
    return brentq(lambda g: _psi_derivs(omega, g, omega)[0], *bracket,
                  xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


def polar(points):
    """Radius and angle in [0, 2 pi) measured counterclockwise from +x."""
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    phi = np.arctan2(y, x)
    phi = np.where(phi < 0, phi + 2 * np.pi, phi)
    return np.hypot(x, y), phi


class SingularSolution:
    """Exact velocity, pressures and forcing of the corner benchmark.

    Parameters
    ----------
    nu : float
        Viscosity; only the singular pressure ``p0`` depends on it.
    gamma : float, optional
        Singular exponent. Defaults to the exact corner eigenvalue; pass
        ``TABULATED_GAMMA`` for the tabulated rational approximation.
    """

    def __init__(self, nu=1.0, gamma=None):
        self.nu = float(nu)
        self.gamma = corner_exponent() if gamma is None else float(gamma)
        self.omega = OMEGA

    def psi(self, phi, derivative=0):
        return _psi_derivs(np.asarray(phi, dtype=float), self.gamma, self.omega)[derivative]

    def _angular(self, phi):
        g = self.gamma
        psi, d1, d2, _ = _psi_derivs(phi, g, self.omega)
        s, c = np.sin(phi), np.cos(phi)
        F = np.stack([(g + 1) * s * psi + c * d1,
                      -(g + 1) * c * psi + s * d1], axis=-1)
        dF = np.stack([(g + 1) * c * psi + g * s * d1 + c * d2,
                       (g + 1) * s * psi - g * c * d1 + s * d2], axis=-1)
        return F, dF

    def velocity(self, points):
        r, phi = polar(points)
        F, _ = self._angular(phi)
        return r[..., None] ** self.gamma * F

    def velocity_gradient(self, points):
        """Jacobian ``G[..., i, j] = d v_i / d x_j``."""
        r, phi = polar(points)
        if np.any(r < R_MIN):
            raise SingularityError("velocity gradient is singular at the corner")
        F, dF = self._angular(phi)
        g = self.gamma
        s, c = np.sin(phi)[..., None], np.cos(phi)[..., None]
        rg = r[..., None] ** (g - 1.0)
        dx = rg * (g * c * F - s * dF)
        dy = rg * (g * s * F + c * dF)
        return np.stack([dx, dy], axis=-1)

    def divergence(self, points):
        G = self.velocity_gradient(points)
        return G[..., 0, 0] + G[..., 1, 1]

    def pressure0(self, points):
        r, phi = polar(points)
        if np.any(r < R_MIN):
            raise SingularityError("singular pressure is unbounded at the corner")
        g = self.gamma
        _, d1, _, d3 = _psi_derivs(phi, g, self.omega)
        # denominator (gamma - 1): the sign that balances -nu lap v for this v
        return self.nu * r ** (g - 1.0) * ((1 + g) ** 2 * d1 + d3) / (g - 1)

    @staticmethod
    def pressure_plus(points):
        points = np.asarray(points, dtype=float)
        return np.sin(np.pi * points[..., 0] * points[..., 1])

    def pressure(self, points):
        return self.pressure0(points) + self.pressure_plus(points)

    @staticmethod
    def forcing(points):
        """``grad sin(pi x y)``."""
        points = np.asarray(points, dtype=float)
        x, y = points[..., 0], points[..., 1]
        c = np.pi * np.cos(np.pi * x * y)
        return np.stack([y * c, x * c], axis=-1)

    @staticmethod
    def forcing_divergence_free_part(points):
        """Helmholtz-Hodge part of the forcing: zero, the forcing is a gradient."""
        return np.zeros(np.shape(points)[:-1] + (2,))
