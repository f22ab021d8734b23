"""Covariance transfer matrices and covariance noise matrices for one rotation.

The special-case transfer matrix ``T~(psi, x)`` (phi_R = 0, J_i = x) maps SSB
phase noise at ``f_m = x f_R`` onto second moments of the (0, jy, jz)
deflection; integrating it against ``L(f_m)`` gives the noise matrix ``V~``.
General geometries follow from ``D V~ D^T``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .deflection import RESONANCE_WINDOW, deflection_integral_form
from .rotations import d_matrix
from .spectra import PowerLaw, Tabulated, Tones, White, ssb_value

__all__ = [
    "NoiseModelWarning",
    "TransferIntegral",
    "transfer_tilde",
    "transfer_tail_mean",
    "transform_covariance",
    "neb_matrix",
    "integrate_transfer",
    "noise_matrix_tilde",
    "noise_matrix_large_psi",
    "project_variance",
    "is_psd",
    "X_MAX_DEFAULT",
]

X_MAX_DEFAULT = 200.0


class NoiseModelWarning(UserWarning):
    """An approximation was requested that the spectrum cannot support."""


def _transfer_closed(psi, x):
    cp, sp = np.cos(psi), np.sin(psi)
    cx, sx = np.cos(x * psi), np.sin(x * psi)
    den = 1.0 - x * x
    tyy = 2.0 / den**2 * ((cp - cx) ** 2 + (x * sp - sx) ** 2)
    tzz = 2.0 / den**2 * (x * x * (cp - cx) ** 2 + (sp - x * sx) ** 2)
    tyz = 2.0 / den * (cp - cx) * sp
    return tyy, tzz, tyz


def _transfer_from_quadratures(psi, x):
    # T~ = 2 (u u^T + v v^T), u, v the unit-beta responses at alpha_m = 0, pi/2
    uy, uz = deflection_integral_form(psi, x, 1.0, 0.0)
    vy, vz = deflection_integral_form(psi, x, 1.0, 0.5 * np.pi)
    return 2.0 * (uy**2 + vy**2), 2.0 * (uz**2 + vz**2), 2.0 * (uy * uz + vy * vz)


def transfer_tilde(psi, x):
    """Special-case covariance transfer matrix ``T~(psi, x)``.

    Broadcasts over ``psi`` and ``x``; the result has shape ``(..., 3, 3)``
    with a zero first row and column. The removable singularity at ``x = 1``
    is evaluated through the exact integral form of the deflection.
    """
    psi_a, x_a = np.broadcast_arrays(np.asarray(psi, dtype=float),
                                     np.asarray(x, dtype=float))
    near = np.abs(x_a - 1.0) < RESONANCE_WINDOW
    tyy, tzz, tyz = _transfer_closed(psi_a, np.where(near, 0.0, x_a))
    if np.any(near):
        ryy, rzz, ryz = _transfer_from_quadratures(psi_a, x_a)
        tyy = np.where(near, ryy, tyy)
        tzz = np.where(near, rzz, tzz)
        tyz = np.where(near, ryz, tyz)
    out = np.zeros(psi_a.shape + (3, 3))
    out[..., 1, 1] = tyy
    out[..., 2, 2] = tzz
    out[..., 1, 2] = tyz
    out[..., 2, 1] = tyz
    return out


def transfer_tail_mean(psi):
    """Large-x average of ``x^2 T~(psi, x)``: the coefficient of its 1/x^2 decay."""
    m = np.zeros((3, 3))
    m[1, 1] = 2.0 * np.sin(psi) ** 2
    m[2, 2] = 2.0 * (1.0 + np.cos(psi) ** 2)
    m[1, 2] = m[2, 1] = -np.sin(2.0 * psi)
    return m


def _tail_envelope(x_max):
    # |T~_ij(x)| <= c / x^2 for x >= x_max >= 2
    return 2.0 * (5.0 + 2.0 / x_max + 1.0 / x_max**2) / (1.0 - 1.0 / x_max**2) ** 2


def transform_covariance(M_tilde, phi_R, J_f_ideal):
    """Special-case matrix -> general geometry: ``D M~ D^T``."""
    M_tilde = np.asarray(M_tilde, dtype=float)
    scale = max(np.abs(M_tilde).max(), 1e-300)
    if np.abs(M_tilde[0, :]).max() > 1e-12 * scale or np.abs(M_tilde[:, 0]).max() > 1e-12 * scale:
        raise ValueError("special-case matrix must have zero first row and column")
    D = d_matrix(phi_R, J_f_ideal)
    return D @ M_tilde @ D.T


def neb_matrix(psi, f_R):
    """Noise-equivalent-bandwidth matrix (Hz) for white SSB phase noise."""
    if not f_R > 0:
        raise ValueError("f_R must be > 0")
    s2 = np.sin(psi) ** 2
    half = 0.5 * np.sin(2.0 * psi)
    m = np.array([[0.0, 0.0, 0.0],
                  [0.0, psi - half, -s2],
                  [0.0, -s2, psi + half]])
    return np.pi * f_R * np.sign(psi) * m


@dataclass(frozen=True)
class TransferIntegral:
    """Truncated spectrum integral of ``T~`` and what lies beyond the truncation.

    ``matrix`` is the quadrature over ``[f_low, min(f_high, x_max f_R)]``;
    ``tail_estimate`` is the averaged 1/x^2 tail from there to the end of the
    band (zero when the band ends first) and ``tail_bound`` an entrywise
    upper bound on that tail's magnitude.
    """

    matrix: np.ndarray
    tail_estimate: np.ndarray
    tail_bound: float
    x_range: tuple

    @property
    def total(self):
        return self.matrix + self.tail_estimate


def _tail_weight(spec, f_R, x_a, x_b, extrapolate):
    """``int_{x_a}^{x_b} L(x f_R) f_R x^-2 dx``: weight of the 1/x^2 tail of ``T~``."""
    if x_b <= x_a:
        return 0.0
    if isinstance(spec, (White, PowerLaw)):
        terms = [(0, spec.l0)] if isinstance(spec, White) else spec.terms
        w = 0.0
        for k, lk in terms:
            c = lk * f_R ** (1 - k)
            if k == -1:
                w += c * math.log(x_b / x_a)
            else:
                upper = 0.0 if math.isinf(x_b) else x_b ** (-1 - k)
                w += c * (x_a ** (-1 - k) - upper) / (1 + k)
        return w
    # tabulated: smooth, non-oscillatory integrand; flat continuation past the table
    s_hi = spec.support[1] / f_R
    b = min(x_b, s_hi)
    w = 0.0
    if b > x_a:
        val, _ = integrate.quad(lambda u: float(spec.evaluate(math.exp(u) * f_R)[0]) * f_R
                                * math.exp(-u), math.log(x_a), math.log(b),
                                epsabs=0.0, epsrel=1e-10, limit=200)
        w += val
    if extrapolate and x_b > s_hi:
        a = max(x_a, s_hi)
        w += float(spec.l[-1]) * f_R * (1.0 / a - (0.0 if math.isinf(x_b) else 1.0 / x_b))
    return w


def _quad_matrix(fun, a, b, psi):
    if b <= a:
        return np.zeros(3)
    # break at integers (transfer nulls/resonance) and keep pieces short
    # relative to the x-oscillation period 2 pi / psi
    period = 2.0 * np.pi / max(abs(psi), 1e-12)
    step = min(1.0, 4.0 * period)
    edges = np.unique(np.concatenate(([a, b], np.arange(math.ceil(a), b, 1.0),
                                      np.arange(a, b, step))))
    edges = edges[(edges >= a) & (edges <= b)]
    total = np.zeros(3)
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(fun, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    return total


def integrate_transfer(spec, psi, f_R, *, f_low=0.0, f_high=None, x_max=X_MAX_DEFAULT,
                       extrapolate=False):
    """Numerically integrate ``T~(psi, f/f_R) L(f) df`` over the requested band.

    Parameters
    ----------
    spec : White, PowerLaw, Tones or Tabulated
    psi : float
        Rotation angle (rad).
    f_R : float
        Rabi frequency (Hz).
    f_low, f_high : float
        Band edges in Hz; ``f_high=None`` means unbounded (truncated at
        ``x_max f_R`` with the tail reported separately).
    x_max : float
        Truncation of the numerical integral in units of ``f_R``.
    extrapolate : bool
        Tabulated spectra only: extend flat beyond the table instead of
        integrating over its support alone.

    Raises
    ------
    ValueError
        If the integral diverges at low (``1/f^k``, ``k >= 1`` with no
        ``f_low``) or high (``k <= -1`` with no ``f_high``) frequencies.
    """
    if not f_R > 0:
        raise ValueError("f_R must be > 0")
    if psi < 0:
        raise ValueError("psi must be >= 0")
    if f_low < 0 or (f_high is not None and f_high <= f_low):
        raise ValueError("need 0 <= f_low < f_high")
    zero = np.zeros((3, 3))
    if isinstance(spec, Tones):
        acc = np.zeros((3, 3))
        hi = math.inf if f_high is None else f_high
        for f0, b2 in spec.tones:
            if f_low <= f0 <= hi:
                acc += 0.25 * b2 * transfer_tilde(psi, f0 / f_R)
        return TransferIntegral(acc, zero, 0.0, (f_low / f_R, hi / f_R))

    if isinstance(spec, PowerLaw):
        if f_low <= 0 and any(k >= 1 and lk > 0 for k, lk in spec.terms):
            raise ValueError("phase noise integral diverges at low frequency for 1/f^k "
                             "terms with k >= 1; set a low-frequency cutoff f_low > 0")
        if f_high is None and any(k <= -1 and lk > 0 for k, lk in spec.terms):
            raise ValueError("phase noise integral diverges at high frequency for f^|k| "
                             "terms; set a high-frequency cutoff f_high")

    x_lo = f_low / f_R
    x_end = math.inf if f_high is None else f_high / f_R
    if isinstance(spec, Tabulated) and not extrapolate:
        lo, hi = spec.support
        x_lo = max(x_lo, lo / f_R)
        x_end = min(x_end, hi / f_R)
    x_hi = min(x_end, x_max)

    def density(xv):
        if isinstance(spec, Tabulated):
            return float(spec.evaluate(xv * f_R)[0])
        if xv <= 0:
            return spec.l0 if isinstance(spec, White) else sum(
                lk for k, lk in spec.terms if k == 0)
        return ssb_value(spec, xv * f_R)

    def fun(xv):
        t = transfer_tilde(psi, xv)
        return np.array([t[1, 1], t[2, 2], t[1, 2]]) * density(xv) * f_R

    yy, zz, yz = _quad_matrix(fun, x_lo, x_hi, psi)
    mat = np.array([[0.0, 0.0, 0.0], [0.0, yy, yz], [0.0, yz, zz]])

    # beyond x_max: x^2 T~ is replaced by its x-average, exact up to the oscillation
    tail = np.zeros((3, 3))
    bound = 0.0
    tail_from = max(x_hi, x_lo)
    if x_end > tail_from:
        w = _tail_weight(spec, f_R, tail_from, x_end, extrapolate)
        tail = transfer_tail_mean(psi) * w
        bound = _tail_envelope(tail_from) * w
    return TransferIntegral(mat, tail, bound, (x_lo, x_hi))


def noise_matrix_tilde(spec, psi, f_R, **kwargs):
    """Special-case covariance noise matrix ``V~(psi)`` in rad^2.

    White noise uses the closed-form NEB matrix; tones are summed exactly;
    other spectra go through :func:`integrate_transfer` with the analytic tail
    added back. Keyword arguments are forwarded to :func:`integrate_transfer`.
    """
    if psi < 0:
        raise ValueError("psi must be >= 0")
    if psi == 0:
        return np.zeros((3, 3))
    if isinstance(spec, White) and not kwargs:
        return spec.l0 * neb_matrix(psi, f_R)
    return integrate_transfer(spec, psi, f_R, **kwargs).total


def noise_matrix_large_psi(spec, psi, f_R):
    """Delta-function approximation ``pi f_R |psi| L(f_R) diag(0, 1, 1)``.

    For tones, only a tone sitting at ``f_R`` contributes; it grows as psi^2
    (``<beta^2>/4 * psi^2/2`` per diagonal entry). Without one a zero matrix is
    returned with a :class:`NoiseModelWarning`.
    """
    if not f_R > 0:
        raise ValueError("f_R must be > 0")
    diag = np.diag([0.0, 1.0, 1.0])
    if isinstance(spec, Tones):
        hits = [b2 for f0, b2 in spec.tones if abs(f0 - f_R) <= 1e-9 * f_R]
        if not hits:
            warnings.warn("no tone at f_R; large-psi noise matrix is zero",
                          NoiseModelWarning, stacklevel=2)
            return np.zeros((3, 3))
        return sum(hits) * 0.25 * 0.5 * psi**2 * diag
    return np.pi * f_R * abs(psi) * ssb_value(spec, f_R) * diag


def project_variance(V, n):
    """Variance of the deflection projected on unit vector ``n``: ``n^T V n``."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("projection axis must be a unit 3-vector")
    return float(n @ np.asarray(V, dtype=float) @ n)


def is_psd(M, rtol=1e-12):
    """Symmetric and eigenvalues >= -rtol * trace."""
    M = np.asarray(M, dtype=float)
    scale = max(abs(np.trace(M)), np.abs(M).max(), 1e-300)
    if np.abs(M - M.T).max() > rtol * scale:
        return False
    return bool(np.linalg.eigvalsh(M).min() >= -rtol * scale)
