"""Closed-form sum rules for annuli and circular sectors.

The annulus of inner radius r_min and outer radius 1 is the image of the
rectangle [log(r_min)/2, -log(r_min)/2] x [-pi, pi] under
z -> exp(z + log(r_min)/2); the Helmholtz problem on it becomes a problem
on the rectangle with density r_min exp(2x). Dirichlet (or Neumann) edges
of the annulus are the x-edges; the y-edges are identified (periodic).

The two series forms of the annulus Z_2 lose digits to cancellation
(the dilogarithm series pieces grow like r_min^{-2j} while their sum
decays like r_min^{2j}), so both are evaluated with mpmath.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import special as sp

from .errors import DomainError, OrderError
from .specialfn import ZETA3


class ValidityWarning(UserWarning):
    """An asymptotic formula was evaluated outside its range of validity."""


@dataclass(frozen=True)
class AnnulusGeom:
    r_min: float

    def __post_init__(self):
        if not 0 < self.r_min < 1:
            raise DomainError(f"r_min must lie in (0, 1), got {self.r_min}")

    @property
    def half_width(self) -> float:
        """Half the x-extent of the mapped rectangle, -log(r_min)/2."""
        return -0.5 * math.log(self.r_min)


@dataclass(frozen=True)
class SectorGeom:
    phi: float

    def __post_init__(self):
        if not 0 < self.phi <= math.pi:
            raise DomainError(f"phi must lie in (0, pi], got {self.phi}")


@dataclass(frozen=True)
class RadialPower:
    """Radial density rho(r) proportional to r^b, normalised to the uniform mass."""

    b: float

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise DomainError("the density exponent must be finite")


def _geom(g) -> AnnulusGeom:
    return g if isinstance(g, AnnulusGeom) else AnnulusGeom(float(g))


# --- densities --------------------------------------------------------------------


def annulus_density(geom, x: float) -> float:
    """Conformal density r_min exp(2x) on the mapped rectangle."""
    geom = _geom(geom)
    if abs(x) > geom.half_width * (1 + 1e-12):
        raise DomainError(f"x={x} lies outside the mapped rectangle")
    return geom.r_min * math.exp(2 * x)


def annulus_density_array(r_min: float, x):
    x = np.asarray(x, dtype=float)
    return r_min * np.exp(2 * x)


def radial_power_density(b: float, r_min: float, r):
    """rho(r) = (b+2)(r_min^2 - 1) r^b / (2 (r_min^{b+2} - 1)); b = -2 by its limit."""
    r = np.asarray(r, dtype=float)
    beta = b + 2
    L = math.log(r_min)
    if beta == 0:
        pref = (r_min ** 2 - 1) / (2 * L)
    else:
        # beta / (r^beta - 1) written through expm1 so that small beta is accurate
        pref = (r_min ** 2 - 1) / 2 * beta / math.expm1(beta * L)
    return pref * r ** b


def power_annulus_density_array(b: float, r_min: float, x):
    """Mapped density r_min e^{2x} rho(sqrt(r_min) e^x) on the rectangle."""
    x = np.asarray(x, dtype=float)
    return r_min * np.exp(2 * x) * radial_power_density(b, r_min, math.sqrt(r_min) * np.exp(x))


# --- annulus Z_2 with Dirichlet edges ----------------------------------------------


def _dp_series_terms(r_min: float, tol_exp: int = 30) -> int:
    return int(math.ceil(tol_exp * math.log(10) / (-2 * math.log(r_min)))) + 8


def annulus_z2_dp_series(geom, N_terms: int | None = None) -> float:
    """Z_2 of the Dirichlet annulus as a closed block plus an n >= 3 series.

    The sum over angular orders n of the per-order traces is split into
    the n = 0, 1, 2 orders (elementary in r_min and log r_min), the purely
    algebraic part of the n >= 3 orders (summed to pi^2 and rationals) and
    a remainder whose terms decay like r_min^{2n}. The default ``N_terms``
    makes the neglected remainder smaller than 1e-30 relative.
    """
    geom = _geom(geom)
    if N_terms is None:
        N_terms = _dp_series_terms(geom.r_min)
    with mp.workdps(40):
        R = mp.mpf(geom.r_min)
        l = mp.log(R)
        low = (26 * R ** 12 * l ** 2 + 36 * R ** 12 - 84 * R ** 10 * l ** 2 - 72 * R ** 10
               + 288 * R ** 8 * l ** 4 - 144 * R ** 8 * l ** 3 + 102 * R ** 8 * l ** 2 - 36 * R ** 8
               + 576 * R ** 6 * l ** 4 - 88 * R ** 6 * l ** 2 + 144 * R ** 6
               + 288 * R ** 4 * l ** 4 + 144 * R ** 4 * l ** 3 + 102 * R ** 4 * l ** 2 - 36 * R ** 4
               - 84 * R ** 2 * l ** 2 - 72 * R ** 2 + 26 * l ** 2 + 36
               + 45 * l * (1 - R ** 4) ** 3) / (576 * (R ** 4 - 1) ** 2 * l ** 2)
        algebraic = R ** 4 * (mp.pi ** 2 / 48 - mp.mpf(1) / 4) + mp.pi ** 2 / 48 - mp.mpf(29) / 144
        s = mp.mpf(0)
        for n in range(3, int(N_terms) + 3):
            Q = R ** (2 * n)
            s += (n * (n * n + 5) * (1 - R ** 4) * Q / (4 * (n * n - 1) ** 2 * (n * n - 4) * (1 - Q))
                  + n * n * (1 - R ** 2) ** 2 * Q / (2 * (n * n - 1) ** 2 * (1 - Q) ** 2))
        return float(low + algebraic + s)


def annulus_z2_dp_series_uncorrected(geom, N_terms: int | None = None) -> float:
    """An algebraic rearrangement of the n-series that omits the per-order corrections.

    Kept for comparison only: it does not reproduce the per-order traces
    and differs from :func:`annulus_z2_dp_series` by about 1e-3 at r_min = 0.5.
    """
    geom = _geom(geom)
    if N_terms is None:
        N_terms = _dp_series_terms(geom.r_min)
    with mp.workdps(40):
        r = mp.mpf(geom.r_min)
        L = mp.log(r)
        r2, r4 = r ** 2, r ** 4
        val = (r4 * L ** 4 / (4 - 4 * r4)
               - mp.mpf(5) / 64 * (r4 - 1) * L ** 2
               + mp.mpf(1) / 16 * (r2 - 1) ** 2 * L
               + r4 * L ** 5 / (2 * (r2 - 1) ** 2)
               - L ** 3 / (144 * (r2 + 1) ** 2)
               * (26 * r ** 8 + 73 * r ** 6 + 62 * r4 + 73 * r2
                  - 3 * mp.pi ** 2 * (r2 + 1) ** 2 * (r4 + 1) + 26))
        s = mp.mpf(0)
        for n in range(3, int(N_terms) + 3):
            rn2 = r ** (2 * n)
            den = (rn2 - 1) ** 2
            s += (n * (n * n + 5) * (r4 - 1) * rn2 ** 2 / (8 * (n * n - 4) * (n * n - 1) ** 2 * den)
                  + n * n * (r2 - 1) ** 2 * rn2 / (2 * (n * n - 1) ** 2 * den))
        return float(val + s)


def annulus_z2_dp_polylog(geom, N_terms: int | None = None) -> float:
    """Z_2 of the Dirichlet annulus from the dilogarithm-resummed series.

    The j-summand is a sum of pieces of size r_min^{-2j} that cancel down
    to r_min^{2j}; the working precision grows with the number of terms so
    that the cancellation is harmless.
    """
    geom = _geom(geom)
    if N_terms is None:
        N_terms = _dp_series_terms(geom.r_min, 25)
    extra = int(math.ceil(-(4 * N_terms + 12) * math.log10(geom.r_min)))
    with mp.workdps(30 + extra):
        r = mp.mpf(geom.r_min)
        L = mp.log(r)
        r2, r4 = r ** 2, r ** 4
        li2 = lambda z: mp.polylog(2, z)
        val = (-(r4 - 1) ** 2 * (r4 + 1) * li2(r4) / (16 * r4)
               + (r2 - 1) ** 2 * (r4 + 1) * li2(r2) / (8 * r2)
               + r4 * L / (4 * (1 - r4))
               - 5 * (r4 - 1) / (64 * L)
               + (r2 - 1) ** 2 / (16 * L ** 2)
               - (r2 - 1) ** 3 * (r2 + 1) * mp.log(1 - r2) / (8 * r2)
               - (r4 - 1) ** 3 * (r ** 8 + r4 + 1) * mp.log(1 - r4) / (16 * r ** 8)
               + r4 * L ** 2 / (2 * (r2 - 1) ** 2)
               + (71 * r ** 12 - 202 * r ** 8 + 274 * r ** 6 - 297 * r4
                  + 12 * mp.pi ** 2 * (r4 + 1) + 36 / r4 - 66 * r2
                  + 4 * (5 * r4 - 54 * r2 - 27) / (r2 + 1) ** 2) / 576)
        s = mp.mpf(0)
        for j in range(1, int(N_terms) + 1):
            a = r ** (2 * j)          # r^{2j}
            b = a * r4                # r^{2j+4}
            c = a * r2                # r^{2j+2}
            term = ((r4 - 1) * (a * a - 1) / a * li2(a) / 16
                    - (r4 - 1) * (b * b - 1) / b * li2(b) / 16
                    + (r2 - 1) ** 2 * (c * c + 1) / c * li2(c) / 8
                    + (r4 - 1) * (a - 1) ** 2 * (a + a * a + 1) / (a * a) * mp.log(1 - a) / 16
                    - (r4 - 1) * (b - 1) ** 2 * (b + b * b + 1) / (b * b) * mp.log(1 - b) / 16
                    - (r2 - 1) ** 2 * (c * c - 1) / c * mp.log(1 - c) / 8
                    + (-3 * (r2 - 1) ** 2 * (r4 - 4 * r2 + 1) * a * a * r4
                       + (r2 - 1) ** 2 * (71 * r ** 8 + 142 * r ** 6 + 14 * r4 + 142 * r2 + 71)
                       * a ** 3 * r4
                       + 36 * (r4 - 1) ** 2) / (576 * b))
            s += (j + 1) * term
        return float(val + s)


# --- small-hole expansions ---------------------------------------------------------

SMALL_HOLE_CASES = ("DP2", "DP3", "DP4", "NP2", "NDP2", "NDP3", "NDP4", "DNP2")

DISK_Z2 = math.pi ** 2 / 48 - 5 / 32
DISK_Z3 = ZETA3 / 32 + 35 / 768 - math.pi ** 2 / 128
DISK_Z4 = -ZETA3 / 64 - 3491 / 110592 + 5 * math.pi ** 2 / 1152 + math.pi ** 4 / 11520


def annulus_small_hole(case: str, geom) -> float:
    """Truncated small-r_min expansion of the annulus sum rule ``case``.

    ``case`` names the boundary assembly (inner edge first for the mixed
    ones: ``NDP`` is Neumann on the hole and Dirichlet outside) followed by
    the order.
    """
    geom = _geom(geom)
    case = case.upper()
    if case not in SMALL_HOLE_CASES:
        raise ValueError(f"unknown small-hole case {case!r}; expected one of {SMALL_HOLE_CASES}")
    if geom.r_min >= 0.2:
        warnings.warn(f"small-hole expansion evaluated at r_min={geom.r_min} >= 0.2",
                      ValidityWarning, stacklevel=2)
    r = geom.r_min
    l = math.log(r)
    z3, pi2 = ZETA3, math.pi ** 2
    r2, r4, r6 = r * r, r ** 4, r ** 6
    if case == "DP2":
        return DISK_Z2 + (1 / (16 * l * l) + 5 / (64 * l)) - r2 * (1 / (8 * l * l) + 7 / 48)
    if case == "DP3":
        return (DISK_Z3 + (1 / (64 * l ** 3) + 15 / (512 * l * l) + 23 / (1152 * l))
                - r2 * (3 / (64 * l ** 3) + 15 / (512 * l * l) + 19 / 1536))
    if case == "DP4":
        return (DISK_Z4
                + (1 / (256 * l ** 4) + 5 / (512 * l ** 3) + 2147 / (221184 * l * l)
                   + 677 / (147456 * l))
                - r2 * (1 / (64 * l ** 4) + 5 / (256 * l ** 3) + 23 / (3456 * l * l) + 149 / 138240))
    if case == "NP2":
        return ((l * l / 36 + l / 8) + (5 * pi2 / 48 - 49 / 96)
                + (7 / (32 * l * l) + 25 / (64 * l))
                + r2 * (77 / 48 - l * l / 72 - 7 / (16 * l * l)))
    if case == "NDP2":
        return (DISK_Z2 - 5 * r2 / 48 + r4 * (5 * pi2 / 48 - 143 / 288)
                + r4 * l * (0.75 * l + 11 / 8)
                - 6377 * r6 / 2880 - r6 * l * (l + 4))
    if case == "NDP3":
        return (DISK_Z3 - 71 * r2 / 1536 - 1781 * r4 / 23040 - 19 / 64 * r4 * l
                + r6 * (-7 * z3 / 32 - 19 * pi2 / 128 + 162319 / 92160)
                - r6 * l * (l * l / 8 + 57 * l / 32 + 85 / 64))
    if case == "NDP4":
        return (DISK_Z4 - 1691 * r2 / 138240 + 40489 * r4 / 829440 - 109 * r4 * l / 2304
                + 13140797 * r6 / 116121600 - 5 / 96 * r6 * l * l + 571 * r6 * l / 1152)
    # DNP2
    return (l * l / 4 + 3 * l / 8) + (5 * pi2 / 48 - 19 / 32) - 85 * r2 / 48


# --- circular sector ----------------------------------------------------------------


def _sector(g) -> SectorGeom:
    return g if isinstance(g, SectorGeom) else SectorGeom(float(g))


def sector_zeta(geom, p: int) -> float:
    """Dirichlet sum rule of order p in {2, 3, 4} for the sector of half-angle phi."""
    phi = _sector(geom).phi
    if p not in (2, 3, 4):
        raise OrderError(f"sector sum rules are available for p in (2, 3, 4), got {p}")
    # psi^(m) at 2x+1 nearly cancels against the psi(4x+1) ... terms, so work in mpmath
    with mp.workdps(30):
        x = mp.mpf(phi) / mp.pi
        a2, a4, a6, a8 = 2 * x + 1, 4 * x + 1, 6 * x + 1, 8 * x + 1
        ps = mp.psi
        if p == 2:
            v = x * x / 4 * ps(1, a2) + x / 8 * ps(0, a2) - x / 8 * ps(0, a4)
        elif p == 3:
            v = (-x ** 3 / 16 * ps(2, a2) - 3 * x * x / 32 * ps(1, a2) - 7 * x / 128 * ps(0, a2)
                 + x / 16 * ps(0, a4) - x / 128 * ps(0, a6))
        else:
            v = (x ** 4 / 96 * ps(3, a2) + x ** 3 / 32 * ps(2, a2) + 17 * x * x / 384 * ps(1, a2)
                 + x * x / 128 * ps(1, a4) + 127 * x / 4608 * ps(0, a2) - 15 * x / 512 * ps(0, a4)
                 + x / 512 * ps(0, a6) - x / 4608 * ps(0, a8))
        return float(v)


def rayleigh_sum(nu: float, s: int) -> float:
    """sum_k j_{nu,k}^{-2s} over the positive zeros of J_nu, for s in 1..4."""
    if s == 1:
        return 1 / (4 * (nu + 1))
    if s == 2:
        return 1 / (16 * (nu + 1) ** 2 * (nu + 2))
    if s == 3:
        return 1 / (32 * (nu + 1) ** 3 * (nu + 2) * (nu + 3))
    if s == 4:
        return (5 * nu + 11) / (256 * (nu + 1) ** 4 * (nu + 2) ** 2 * (nu + 3) * (nu + 4))
    raise OrderError(f"Rayleigh sums are tabulated for s in 1..4, got {s}")


def sector_zeta_series(geom, p: int, n_terms: int = 100_000) -> float:
    """Sector sum rule from its defining series over angular orders.

    The n-th term is the Rayleigh sum of order p for nu = n pi / (2 phi);
    the remainder is estimated from the leading n^{1-2p} behaviour.
    """
    phi = _sector(geom).phi
    if p not in (2, 3, 4):
        raise OrderError(f"sector sum rules are available for p in (2, 3, 4), got {p}")
    n = np.arange(1, n_terms + 1, dtype=float)
    nu = n * math.pi / (2 * phi)
    terms = rayleigh_sum(nu, p)
    lead = {2: 1 / 16, 3: 1 / 32, 4: 5 / 256}[p]
    c = math.pi / (2 * phi)
    s = 2 * p - 1
    tail = lead * c ** (-s) * sp.zeta(s, n_terms + 1)
    return float(np.sum(terms[::-1]) + tail)


def sector_exact_value(phi_over_pi: str, p: int) -> float:
    """Exact constants for the sector at phi in {pi/4, pi/2, 3pi/4, pi}."""
    if (phi_over_pi, p) not in _SECTOR_EXACT:
        raise ValueError(f"no tabulated value for phi = {phi_over_pi} pi, p = {p}")
    # the parts are up to 1e4 times the result, so evaluate in mpmath
    with mp.workdps(30):
        return float(_SECTOR_EXACT[(phi_over_pi, p)](mp.zeta(3), mp.pi ** 2, mp.pi ** 4, mp.log(4), mp.mpf))


_SECTOR_EXACT = {
    ("1/4", 2): lambda z3, pi2, pi4, l4, F: -F(1)/32 + pi2/128 - l4/32,
    ("1/2", 2): lambda z3, pi2, pi4, l4, F: pi2/96 - F(3)/32,
    ("3/4", 2): lambda z3, pi2, pi4, l4, F: -F(35)/64 + 9*pi2/128 - 3*l4/32,
    ("1", 2): lambda z3, pi2, pi4, l4, F: pi2/24 - F(37)/96,
    ("1/4", 3): lambda z3, pi2, pi4, l4, F: 7*z3/512 - F(7)/768 - 3*pi2/1024 + l4/64,
    ("1/2", 3): lambda z3, pi2, pi4, l4, F: z3/64 + F(31)/1536 - pi2/256,
    ("3/4", 3): lambda z3, pi2, pi4, l4, F: 189*z3/512 - F(6653)/26880 - 27*pi2/1024 + 3*l4/64,
    ("1", 3): lambda z3, pi2, pi4, l4, F: z3/8 + F(43)/7680 - pi2/64,
    ("1/4", 4): lambda z3, pi2, pi4, l4, F: -7*z3/1024 + F(1)/36864 + 3*pi2/2048 + pi4/24576 - 17*l4/2304,
    ("1/2", 4): lambda z3, pi2, pi4, l4, F: -z3/128 - F(1795)/110592 + 5*pi2/2304 + pi4/23040,
    ("3/4", 4): lambda z3, pi2, pi4, l4, F: -189*z3/1024 - F(256171)/1290240 + 27*pi2/2048 + 27*pi4/8192 - 17*l4/768,
    ("1", 4): lambda z3, pi2, pi4, l4, F: -z3/16 - F(33569)/430080 + 5*pi2/576 + pi4/1440,
}


SECTOR_EXACT_ANGLES = {"1/4": math.pi / 4, "1/2": math.pi / 2, "3/4": 3 * math.pi / 4, "1": math.pi}


# --- annulus with radial power density --------------------------------------------


def _inhom_prefactor(beta: mp.mpf, r: mp.mpf) -> mp.mpf:
    L = mp.log(r)
    if beta == 0:
        return L ** 2 * (r * r - 1) ** 2 / 360
    rb = r ** beta
    return ((r * r - 1) ** 2 / (8 * beta ** 4 * (rb - 1) ** 2 * L ** 2)
            * (8 * (rb - 1) ** 2 + beta * L * (-5 * rb ** 2 + beta * (rb ** 2 + 1) * L + 5)))


def _inhom_term(n: int, beta, r):
    """N_n / D_n with numerator and denominator multiplied by r^{2n}.

    Works for floats and mpmath numbers; beta = 0 uses the analytic limit.
    """
    lib = mp if isinstance(r, mp.mpf) else np
    R2 = (r * r - 1) ** 2
    q2 = r ** (2 * n)
    if beta == 0:
        L = lib.log(r)
        return (R2 * (4 * L * L * n * n * q2 + L * n * (q2 * q2 - 1) - 2 * (q2 - 1) ** 2)
                / (8 * L * L * n ** 4 * (q2 - 1) ** 2))
    rb = r ** beta
    bb = beta * beta
    num = (-R2 * (-32 * n * n * (n * n - bb) * rb + (bb - 4 * n * n) ** 2 * (rb * rb + 1)) * q2
           + beta / 2 * R2 * ((beta + n) * (beta + 2 * n) ** 2 * rb * rb
                              + (beta - 2 * n) ** 2 * (beta - n))
           + beta / 2 * R2 * q2 * q2 * ((beta - 2 * n) ** 2 * (beta - n) * rb * rb
                                        + (beta + n) * (beta + 2 * n) ** 2))
    den = 2 * (bb - 4 * n * n) ** 2 * (bb - n * n) * (rb - 1) ** 2 * (1 - q2) ** 2
    return num / den


def _inhom_rational_tail(beta: float, r: float, N0: int) -> float:
    """sum_{n > N0} of the n -> infinity limit of N_n/D_n (dropping r^{2n} terms).

    For beta != 0 the limit is
    beta (r^2-1)^2 / (4 (r^beta-1)^2) [r^{2 beta} f_{-beta}(n) - ... ] written
    with partial fractions of 1/((2n + beta)^2 (n + beta)).
    """
    R2 = (r * r - 1) ** 2
    m = N0 + 1
    if beta == 0:
        L = math.log(r)
        return R2 / (8 * L * L) * (-L * sp.zeta(3, m) - 2 * sp.zeta(4, m))

    def g_sum(bt):
        # sum_{n >= m} 1/((2n + bt)^2 (n + bt))
        return ((sp.digamma(m + bt / 2) - sp.digamma(m + bt)) / bt ** 2
                + sp.polygamma(1, m + bt / 2) / (2 * bt))

    C = beta * R2 / (4 * math.expm1(beta * math.log(r)) ** 2)
    rb2 = r ** (2 * beta)
    # (beta+n)(beta+2n)^2 / B-part -> 1/((beta-2n)^2 (beta-n)) = -1/((2n-beta)^2 (n-beta))
    return C * (-rb2 * g_sum(-beta) + g_sum(beta))


def _inhom_rational_tail_mp(beta: mp.mpf, r: mp.mpf, N0: int) -> mp.mpf:
    """Multiprecision twin of :func:`_inhom_rational_tail` for small |beta|."""
    R2 = (r * r - 1) ** 2
    m = N0 + 1
    if beta == 0:
        L = mp.log(r)
        return R2 / (8 * L * L) * (-L * mp.zeta(3, m) - 2 * mp.zeta(4, m))

    def g_sum(bt):
        return ((mp.psi(0, m + bt / 2) - mp.psi(0, m + bt)) / bt ** 2
                + mp.psi(1, m + bt / 2) / (2 * bt))

    C = beta * R2 / (4 * (r ** beta - 1) ** 2)
    return C * (-r ** (2 * beta) * g_sum(-beta) + g_sum(beta))


def _singular_distance(beta: float, n: int) -> float:
    """Relative distance of beta^2 from the removable singularities n^2 and 4 n^2."""
    return min(abs(beta * beta - n * n) / (n * n), abs(beta * beta - 4 * n * n) / (4 * n * n))


NEAR_SINGULAR = 0.25


SMALL_BETA = 0.1


def inhom_annulus_z2(geom, pw, N_terms: int | None = None) -> float:
    """Z_2 of the Dirichlet annulus with radial density proportional to r^b.

    Terms are summed directly up to ``N_terms`` (by default until the
    r_min^{2n} corrections are negligible) and the remaining algebraic
    n^{-3} tail is added in closed form with digamma functions. Terms at a
    removable singularity (b+2)^2 in {n^2, 4 n^2} are taken as the average
    of b +- 1e-20 in 60-digit arithmetic, and terms within 25% of one are
    evaluated in mpmath. For 0 < |b+2| < 0.1 the whole sum
    is done in mpmath, since prefactor, terms and tail all cancel to order
    (b+2)^4 there.
    """
    geom = _geom(geom)
    b = pw.b if isinstance(pw, RadialPower) else float(pw)
    r = geom.r_min
    beta = b + 2.0
    if N_terms is None:
        N_terms = max(_dp_series_terms(r, 20), int(abs(beta)) + 8)
    N0 = int(N_terms)
    if N0 <= abs(beta):
        raise ValueError("N_terms must exceed |b + 2| so the closed tail is regular")
    if beta != 0 and abs(beta) < SMALL_BETA:
        dps = 30 + int(math.ceil(-4 * math.log10(abs(beta))))
        with mp.workdps(dps):
            B, R = mp.mpf(beta), mp.mpf(r)
            tot = _inhom_prefactor(B, R) + _inhom_rational_tail_mp(B, R, N0)
            tot += mp.fsum(_inhom_term(k, B, R) for k in range(1, N0 + 1))
            return float(tot)
    with mp.workdps(40):
        pref = float(_inhom_prefactor(mp.mpf(beta), mp.mpf(r)))
    n = np.arange(1, N0 + 1)
    dist = np.array([_singular_distance(beta, int(k)) for k in n])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = _inhom_term(n.astype(float), beta, r)
    # near a singularity the squared denominator amplifies rounding by 1/dist^2
    for k in np.flatnonzero(dist < NEAR_SINGULAR):
        nn = int(n[k])
        if dist[k] == 0:
            with mp.workdps(60):
                d = mp.mpf("1e-20")
                v = (_inhom_term(nn, mp.mpf(beta) + d, mp.mpf(r))
                     + _inhom_term(nn, mp.mpf(beta) - d, mp.mpf(r))) / 2
        else:
            with mp.workdps(30 + int(math.ceil(-2 * math.log10(dist[k])))):
                v = _inhom_term(nn, mp.mpf(beta), mp.mpf(r))
        terms[k] = float(v)
    tail = _inhom_rational_tail(beta, r, N0)
    return float(pref + np.sum(terms[::-1]) + tail)


def inhom_annulus_z2_asym(geom) -> float:
    """Small-r_min behaviour of Z_2 for b = -2 (density proportional to r^-2)."""
    geom = _geom(geom)
    if geom.r_min >= 0.1:
        warnings.warn(f"b=-2 asymptotic formula evaluated at r_min={geom.r_min} >= 0.1",
                      ValidityWarning, stacklevel=2)
    L = math.log(geom.r_min)
    return L * L / 360 - ZETA3 / (8 * L) - math.pi ** 4 / (360 * L * L)
