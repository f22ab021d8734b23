"""Linear response of the Bloch vector to a coherently phase-modulated rotation.

With the LO phase ``phi(t) = phi_R + beta * sin(2 pi f_m t + alpha_m)`` the
special-case deflection (phi_R = 0, J_i = x) obeys a driven, undamped
oscillator equation in the rotation angle ``psi``::

    d j_perp / d psi + i j_perp = -beta * sin(x psi + alpha_m),
    j_perp = j_z + i j_y,  x = f_m / f_R,  j_perp(0) = 0.

Away from resonance the closed form has a ``1 / (1 - x^2)`` prefactor. Near
``x = 1`` that form cancels catastrophically, so inside ``|x - 1| < RESONANCE_WINDOW``
the solution is evaluated from the equivalent integral representation

    j_perp = -beta e^{-i psi} / (2i) [e^{i alpha} E(1 + x) - e^{-i alpha} E(1 - x)],
    E(k)   = int_0^psi e^{i k s} ds = psi e^{i k psi / 2} sinc(k psi / 2),

which is exact and smooth through ``x = 1`` (at ``x = 1`` it reduces to the
resonant limit, including the overall factor ``beta``).
"""

import numpy as np

from .rotations import rotate_axis_xy, small_rotation

__all__ = [
    "RESONANCE_WINDOW",
    "deflection_special",
    "deflection_resonant",
    "deflection_integral_form",
    "deflect_general",
]

RESONANCE_WINDOW = 1e-4


def _exp_integral(k, psi):
    # np.sinc is normalized: sinc(u) = sin(pi u) / (pi u)
    return psi * np.exp(0.5j * k * psi) * np.sinc(k * psi / (2.0 * np.pi))


def deflection_integral_form(psi, x, beta, alpha_m):
    """(jy, jz) from the integral representation; valid for every ``x >= 0``."""
    psi = np.asarray(psi, dtype=float)
    x = np.asarray(x, dtype=float)
    j_perp = (-beta * np.exp(-1j * psi) / 2j) * (
        np.exp(1j * alpha_m) * _exp_integral(1.0 + x, psi)
        - np.exp(-1j * alpha_m) * _exp_integral(1.0 - x, psi)
    )
    return j_perp.imag, j_perp.real


def deflection_resonant(psi, beta, alpha_m):
    """On-resonance (x = 1) deflection, carrying the overall factor ``beta``."""
    jy = -0.5 * beta * (psi * np.cos(psi + alpha_m) - np.cos(alpha_m) * np.sin(psi))
    jz = -0.5 * beta * (psi * np.sin(psi + alpha_m) + np.sin(alpha_m) * np.sin(psi))
    return jy, jz


def _deflection_offresonant(psi, x, beta, alpha_m):
    pre = beta / (1.0 - x * x)
    ca, sa = np.cos(alpha_m), np.sin(alpha_m)
    jy = pre * (-x * ca * np.sin(psi) - sa * np.cos(psi) + np.sin(x * psi + alpha_m))
    jz = pre * (x * ca * np.cos(psi) - sa * np.sin(psi) - x * np.cos(x * psi + alpha_m))
    return jy, jz


def deflection_special(psi, x, beta, alpha_m):
    """Special-case deflection components ``(jy_tilde, jz_tilde)``.

    Parameters
    ----------
    psi : float or array
        Rotation angle in radians, ``psi >= 0``.
    x : float or array
        Modulation-to-Rabi frequency ratio ``f_m / f_R``, ``x >= 0``.
    beta : float
        Phase modulation amplitude in radians (linear response, ``|beta| << 1``).
    alpha_m : float
        Modulation phase in radians.

    Returns
    -------
    tuple of float or ndarray
        ``(jy_tilde, jz_tilde)``, broadcast over ``psi`` and ``x``.
    """
    psi_a, x_a = np.broadcast_arrays(np.asarray(psi, dtype=float),
                                     np.asarray(x, dtype=float))
    near = np.abs(x_a - 1.0) < RESONANCE_WINDOW
    # keep the off-resonant formula away from its pole on the masked entries
    x_safe = np.where(near, 0.0, x_a)
    jy, jz = _deflection_offresonant(psi_a, x_safe, beta, alpha_m)
    if np.any(near):
        jy_r, jz_r = deflection_integral_form(psi_a, x_a, beta, alpha_m)
        jy = np.where(near, jy_r, jy)
        jz = np.where(near, jz_r, jz)
    if jy.ndim == 0:
        return float(jy), float(jz)
    return jy, jz


def deflect_general(J_i, phi_R, psi, beta, x, alpha_m):
    """Deflected final vector for an arbitrary initial vector and axis azimuth.

    Returns ``(J_f, j_f)`` with ``J_f = J_f_ideal + j_f`` and
    ``j_f = (r(phi_R) - I) J_f_ideal`` evaluated to first order in ``beta``.
    """
    J_i = np.asarray(J_i, dtype=float)
    scalars = np.array([phi_R, psi, beta, x, alpha_m], dtype=float)
    if not (np.all(np.isfinite(J_i)) and np.all(np.isfinite(scalars))):
        raise ValueError("deflect_general requires finite inputs")
    if J_i.shape != (3,) or abs(np.linalg.norm(J_i) - 1.0) > 1e-9:
        raise ValueError("J_i must be a unit 3-vector")
    J_ideal = rotate_axis_xy(phi_R, psi) @ J_i
    jy, jz = deflection_special(psi, x, beta, alpha_m)
    j_f = (small_rotation(phi_R, jy, jz) - np.eye(3)) @ J_ideal
    return J_ideal + j_f, j_f
