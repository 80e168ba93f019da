"""First-order surrogates used by the SCA subproblems.

Each kernel comes in two forms: a point evaluator (``psi``, ``gamma_lin``, ...)
and a ``*_coeffs`` extractor returning the affine coefficients in terms of
the relevant linear form, which the conic builders consume directly.  The
evaluators are written on top of the extractors so both share one algebra.

All five lower-bound their targets and are tangent at the expansion point.
"""
from __future__ import annotations

import numpy as np

LN2 = np.log(2.0)


def psi_coeffs(h, u_prev, x_prev):
    """``Psi = Re{w * (h^H u)} + cx * x`` around ``(u_prev, x_prev)``.

    Surrogate for the quadratic-over-linear ``|h^H u|^2 / x``.
    """
    if not x_prev > 0:
        raise ValueError(f"expansion denominator must be positive (got {x_prev})")
    z0 = np.vdot(h, u_prev)
    return 2 * np.conj(z0) / x_prev, -abs(z0) ** 2 / x_prev**2


def psi(u, x, h, u_prev, x_prev) -> float:
    w, cx = psi_coeffs(h, u_prev, x_prev)
    return float((w * np.vdot(h, u)).real + cx * x)


def gamma_coeffs(x_prev):
    """``Gamma = slope * x + intercept``, tangent to ``2**x``."""
    base = 2.0**x_prev
    return base * LN2, base * (1 - LN2 * x_prev)


def gamma_lin(x, x_prev) -> float:
    slope, intercept = gamma_coeffs(x_prev)
    return slope * x + intercept


def phi_coeffs(a, b_prev):
    """``Phi = Re{w * (a^H b)} + const``, tangent to ``|a^H b|^2`` at ``b_prev``."""
    z0 = np.vdot(a, b_prev)
    return 2 * np.conj(z0), -abs(z0) ** 2


def phi_quad(a, b, b_prev) -> float:
    w, const = phi_coeffs(a, b_prev)
    return float((w * np.vdot(a, b)).real + const)


def vartheta_coeffs(c, t, s_prev):
    """``theta = Re{w * (t^H s)} + const``, tangent to ``|c + t^H s|^2`` at ``s_prev``."""
    z0 = c + np.vdot(t, s_prev)
    w = 2 * np.conj(z0)
    return w, float((w * c).real - abs(z0) ** 2)


def vartheta_quad(c, t, s, s_prev) -> float:
    w, const = vartheta_coeffs(c, t, s_prev)
    return float((w * np.vdot(t, s)).real + const)


def theta_coeffs(x_prev, y_prev):
    """``Theta = lin * (x + y) + const - (x - y)**2 / 4``; concave lower bound of ``x*y``."""
    total = x_prev + y_prev
    return 0.5 * total, -0.25 * total**2


def theta_prod(x, y, x_prev, y_prev) -> float:
    lin, const = theta_coeffs(x_prev, y_prev)
    return lin * (x + y) + const - 0.25 * (x - y) ** 2
