"""Single-sideband phase-noise spectra and unit conversions.

All densities are SSB values L(f_m) = S_phi(f_m) / 2 in rad^2/Hz. A discrete
tone of mean-square modulation amplitude <beta^2> carries the weight
L(f_m) = <beta^2>/4 * delta(f_m - f_0).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import integrate

__all__ = [
    "White",
    "PowerLaw",
    "Tones",
    "Tabulated",
    "PhaseNoiseSpectrum",
    "ExtrapolationWarning",
    "ssb_value",
    "dbc_to_linear",
    "linear_to_dbc",
    "integrated_phase_variance",
    "quad_phase_variance",
    "detuning_tone_to_phase_tone",
    "read_datasheet",
    "write_linear_csv",
]


class ExtrapolationWarning(UserWarning):
    """A tabulated spectrum was evaluated outside its knots (flat extrapolation)."""


@dataclass(frozen=True)
class White:
    l0: float

    def __post_init__(self):
        if not (math.isfinite(self.l0) and self.l0 >= 0):
            raise ValueError("white level l0 must be finite and >= 0")


@dataclass(frozen=True)
class PowerLaw:
    """Sum of ``l_k / f^k`` terms, given as ``((k, l_k), ...)``."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((int(k), float(lk)) for k, lk in self.terms)
        if not terms:
            raise ValueError("power-law spectrum needs at least one term")
        if any(lk < 0 or not math.isfinite(lk) for _, lk in terms):
            raise ValueError("power-law coefficients must be finite and >= 0")
        object.__setattr__(self, "terms", terms)


@dataclass(frozen=True)
class Tones:
    """Discrete tones ``((f0_hz, beta_sq), ...)``; ``beta_sq`` is <beta^2> in rad^2."""

    tones: tuple

    def __post_init__(self):
        tones = tuple((float(f0), float(b2)) for f0, b2 in self.tones)
        if any(f0 <= 0 or b2 < 0 for f0, b2 in tones):
            raise ValueError("tones need f0 > 0 and beta_sq >= 0")
        object.__setattr__(self, "tones", tones)


@dataclass(frozen=True)
class Tabulated:
    """Datasheet points, interpolated linearly in log f vs log L."""

    f: np.ndarray = field(repr=False)
    l: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        l = np.asarray(self.l, dtype=float)
        if f.ndim != 1 or f.shape != l.shape or f.size < 1:
            raise ValueError("tabulated spectrum needs matching 1-D f and l arrays")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("tabulated frequencies must be > 0 and strictly increasing")
        if np.any(l < 0) or not np.all(np.isfinite(l)):
            raise ValueError("tabulated densities must be finite and >= 0")
        f.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "l", l)

    @property
    def support(self):
        return float(self.f[0]), float(self.f[-1])

    def evaluate(self, f_m):
        """Return ``(density, extrapolated_mask)`` at ``f_m``."""
        f_m = np.asarray(f_m, dtype=float)
        outside = (f_m < self.f[0]) | (f_m > self.f[-1])
        if self.f.size == 1:
            return np.full_like(f_m, self.l[0]), outside
        # zero densities interpolate to zero on adjacent intervals
        with np.errstate(divide="ignore"):
            logl = np.log(self.l)
        logf = np.log(self.f)
        fc = np.clip(f_m, self.f[0], self.f[-1])
        vals = np.exp(np.interp(np.log(fc), logf, logl))
        return vals, outside


PhaseNoiseSpectrum = Union[White, PowerLaw, Tones, Tabulated]


def ssb_value(spec, f_m):
    """SSB density ``L(f_m)`` in rad^2/Hz.

    Tabulated spectra are extrapolated flat past their end points and an
    :class:`ExtrapolationWarning` is issued. Discrete tones have no density.
    """
    f_arr = np.asarray(f_m, dtype=float)
    if np.any(f_arr <= 0):
        raise ValueError("f_m must be > 0")
    if isinstance(spec, White):
        out = np.full_like(f_arr, spec.l0)
    elif isinstance(spec, PowerLaw):
        out = sum(lk * f_arr ** (-k) for k, lk in spec.terms)
        out = np.asarray(out, dtype=float) * np.ones_like(f_arr)
    elif isinstance(spec, Tabulated):
        out, outside = spec.evaluate(f_arr)
        if np.any(outside):
            warnings.warn("tabulated spectrum evaluated outside its support; "
                          "using flat extrapolation", ExtrapolationWarning, stacklevel=2)
    elif isinstance(spec, Tones):
        raise ValueError("discrete spectrum has no density")
    else:
        raise TypeError(f"unknown spectrum type {type(spec).__name__}")
    return float(out) if out.ndim == 0 else out


def dbc_to_linear(l_dbc):
    l_dbc = np.asarray(l_dbc, dtype=float)
    if not np.all(np.isfinite(l_dbc)):
        raise ValueError("dBc/Hz value must be finite")
    out = 10.0 ** (l_dbc / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_dbc(l_lin):
    l_lin = np.asarray(l_lin, dtype=float)
    if np.any(l_lin <= 0) or not np.all(np.isfinite(l_lin)):
        raise ValueError("linear density must be finite and > 0 to express in dBc/Hz")
    out = 10.0 * np.log10(l_lin)
    return float(out) if out.ndim == 0 else out


def _tabulated_band_integral(spec, f_l, f_h):
    # exact integral of the piecewise power law between knots
    knots = spec.f
    pts = np.concatenate(([f_l], knots[(knots > f_l) & (knots < f_h)], [f_h]))
    vals, _ = spec.evaluate(pts)
    total = 0.0
    for a, b, la, lb in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
        if la == 0.0 or lb == 0.0:
            continue
        slope = math.log(lb / la) / math.log(b / a)
        if abs(slope + 1.0) < 1e-12:
            total += la * a * math.log(b / a)
        else:
            total += la * a / (slope + 1.0) * ((b / a) ** (slope + 1.0) - 1.0)
    return total


def integrated_phase_variance(spec, f_l, f_h):
    """Mean-square phase ``2 * int_{f_l}^{f_h} L(f) df`` in rad^2.

    Tones inside ``[f_l, f_h]`` contribute ``<beta^2>/2`` each. Tabulated
    spectra are extrapolated flat outside their knots (with a warning).
    """
    if not (0 < f_l < f_h) or not math.isfinite(f_h):
        raise ValueError("need 0 < f_l < f_h < inf")
    if isinstance(spec, White):
        return 2.0 * spec.l0 * (f_h - f_l)
    if isinstance(spec, PowerLaw):
        total = 0.0
        for k, lk in spec.terms:
            if k == 1:
                total += lk * math.log(f_h / f_l)
            else:
                total += lk * (f_h ** (1 - k) - f_l ** (1 - k)) / (1 - k)
        return 2.0 * total
    if isinstance(spec, Tones):
        return sum(0.5 * b2 for f0, b2 in spec.tones if f_l <= f0 <= f_h)
    if isinstance(spec, Tabulated):
        lo, hi = spec.support
        if f_l < lo or f_h > hi:
            warnings.warn("integration band extends past tabulated support; "
                          "using flat extrapolation", ExtrapolationWarning, stacklevel=2)
        return 2.0 * _tabulated_band_integral(spec, f_l, f_h)
    raise TypeError(f"unknown spectrum type {type(spec).__name__}")


def quad_phase_variance(spec, f_l, f_h):
    """Quadrature cross-check of :func:`integrated_phase_variance` (densities only)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        val, _ = integrate.quad(lambda u: ssb_value(spec, math.exp(u)) * math.exp(u),
                                math.log(f_l), math.log(f_h), epsabs=0.0,
                                epsrel=1e-12, limit=200)
    return 2.0 * val


def detuning_tone_to_phase_tone(f0, delta_sq):
    """Frequency-modulation tone <Delta^2> at ``f0`` as an equivalent phase tone."""
    if not f0 > 0:
        raise ValueError("f0 must be > 0")
    return float(f0), float(delta_sq) / float(f0) ** 2


def read_datasheet(path):
    """Read a ``f_hz,l_dbc_hz`` CSV (``#`` comment lines allowed) as :class:`Tabulated`."""
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line in csv.reader(r for r in fh if r.strip() and not r.lstrip().startswith("#")):
            cells = [c.strip() for c in line]
            if header is None:
                header = cells
                if header[:2] != ["f_hz", "l_dbc_hz"]:
                    raise ValueError(f"{path}: expected header 'f_hz,l_dbc_hz', got {line!r}")
                continue
            rows.append((float(cells[0]), float(cells[1])))
    if header is None or not rows:
        raise ValueError(f"{path}: no datasheet rows")
    f, l_dbc = np.array(rows).T
    return Tabulated(f, dbc_to_linear(l_dbc))


def write_linear_csv(spec, path, comments=()):
    """Write a tabulated spectrum as ``f_hz,l_rad2_hz``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_hz", "l_rad2_hz"])
        for f, l in zip(spec.f, spec.l):
            w.writerow([repr(float(f)), repr(float(l))])
