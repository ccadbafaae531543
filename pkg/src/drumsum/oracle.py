"""Brute-force spectra and spectral sums, independent of the Green's-function engine.

Spectra are enumerated from closed-form or root-found eigenvalues below a
truncation energy Lambda; the sum beyond Lambda is estimated from the Weyl
law. Each spectrum carries a completeness certificate: its counting
function at Lambda must agree with the two-term Weyl estimate, and for the
Bessel spectra every angular order is audited against its WKB root count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .basis1d import KernelFamily
from .closedforms import rayleigh_sum
from .errors import DomainError, IncompleteSpectrumError, OrderError
from .green2d import BCPair, Rect
from .specialfn import bessel_j_zeros, cross_bessel_zeros
from .sumrule import SumRuleResult

TAIL_KINDS = ("weyl_integral", "geometric", "none")
WEYL_SLACK = 20.0
ORDER_AUDIT_SLACK = 1.25


@dataclass(frozen=True)
class Spectrum:
    """Positive eigenvalues below ``truncation_energy`` with multiplicities.

    ``perimeter`` is the length of the true (non-periodic) boundary and
    enters the Weyl estimates only.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    domain_area: float
    truncation_energy: float
    perimeter: float = 0.0
    label: str = ""

    def __post_init__(self):
        E = np.asarray(self.eigenvalues, dtype=float)
        m = np.asarray(self.multiplicities, dtype=np.int64)
        if E.shape != m.shape:
            raise ValueError("eigenvalues and multiplicities must have the same length")
        if E.size and (np.any(E <= 0) or np.any(np.diff(E) < 0)):
            raise ValueError("eigenvalues must be positive and sorted ascending")
        if np.any(m < 1):
            raise ValueError("multiplicities must be positive")
        object.__setattr__(self, "eigenvalues", E)
        object.__setattr__(self, "multiplicities", m)

    @property
    def count(self) -> int:
        """Number of eigenvalues counted with multiplicity."""
        return int(self.multiplicities.sum())

    def counting(self, lam: float) -> int:
        """N(lam): eigenvalues <= lam with multiplicity."""
        k = np.searchsorted(self.eigenvalues, lam, side="right")
        return int(self.multiplicities[:k].sum())


@dataclass(frozen=True)
class TailModel:
    """Estimate of sum_{E > Lambda} E^{-p}.

    ``area`` and ``perimeter`` default to the spectrum's own values.
    """

    kind: str = "weyl_integral"
    area: float | None = None
    perimeter: float | None = None

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise ValueError(f"tail kind must be one of {TAIL_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class WeylCertificate:
    energy: float
    count: int
    weyl_area: float
    bound: float

    @property
    def ok(self) -> bool:
        return abs(self.count - self.weyl_area) <= self.bound


# --- certificates ------------------------------------------------------------------


def weyl_certificate(spec: Spectrum, lam: float | None = None) -> WeylCertificate:
    """|N(lam) - A lam / 4pi| <= P sqrt(lam) / 4pi + 20 + lam^{1/4}.

    The lam^{1/4} allowance covers the counting-function fluctuations of
    integrable shapes (rectangles, disks, annuli), which grow at that rate.
    """
    lam = spec.truncation_energy if lam is None else float(lam)
    na = spec.domain_area * lam / (4 * math.pi)
    bound = spec.perimeter * math.sqrt(lam) / (4 * math.pi) + WEYL_SLACK + lam ** 0.25
    return WeylCertificate(lam, spec.counting(lam), na, bound)


def _certify(spec: Spectrum) -> Spectrum:
    cert = weyl_certificate(spec)
    if not cert.ok:
        raise IncompleteSpectrumError(
            f"{spec.label}: N({cert.energy:g}) = {cert.count} but the Weyl estimate is "
            f"{cert.weyl_area:.1f} +- {cert.bound:.1f}")
    return spec


def _merge(E: np.ndarray, m: np.ndarray, rel: float = 1e-12):
    """Sort and merge eigenvalues equal to relative ``rel``."""
    order = np.argsort(E, kind="stable")
    E, m = E[order], m[order]
    if E.size == 0:
        return E, m
    new = np.empty(E.size, dtype=bool)
    new[0] = True
    new[1:] = np.diff(E) > rel * E[1:]
    starts = np.flatnonzero(new)
    return E[starts], np.add.reduceat(m, starts)


def _wkb_count(x: float, outer: float, inner: float, m: float) -> float:
    """(1/pi) int_inner^outer sqrt(x^2 - m^2/r^2) dr over the classically allowed part."""
    def F(r):
        if x * r <= m:
            return 0.0
        return math.sqrt(x * x * r * r - m * m) - m * math.acos(m / (x * r))
    return (F(outer) - F(inner)) / math.pi


# --- spectra -----------------------------------------------------------------------


def _spectrum_1d(family: KernelFamily, L: float, E_max: float):
    """Closed-form 1D eigenvalues <= E_max (zero mode included) with multiplicities."""
    if family is KernelFamily.PERIODIC:
        n = np.arange(0, int(math.floor(L * math.sqrt(E_max) / (2 * math.pi))) + 1)
        return (2 * math.pi * n / L) ** 2, np.where(n == 0, 1, 2)
    if family is KernelFamily.NEUMANN:
        n = np.arange(0, int(math.floor(L * math.sqrt(E_max) / math.pi)) + 1)
    elif family is KernelFamily.DIRICHLET:
        n = np.arange(1, int(math.floor(L * math.sqrt(E_max) / math.pi)) + 1)
    else:
        n = np.arange(1, int(math.floor(L * math.sqrt(E_max) / math.pi + 0.5)) + 1) - 0.5
    E = (math.pi * n / L) ** 2
    keep = E <= E_max
    return E[keep], np.ones(int(keep.sum()), dtype=np.int64)


def _edge_length(family: KernelFamily, other_side: float) -> float:
    return 0.0 if family is KernelFamily.PERIODIC else 2 * other_side


def rectangle_spectrum(bc, rect: Rect, E_max: float) -> Spectrum:
    """All eps_i + eta_j <= E_max for the product spectrum of a boundary assembly.

    The E = 0 mode of NN/NP/PP is excluded.
    """
    bc = BCPair.parse(bc)
    fx, fy = bc.families
    ex, mx = _spectrum_1d(fx, rect.a, E_max)
    ey, my = _spectrum_1d(fy, rect.b, E_max)
    if ex.size == 0 or ey.size == 0 or ex[0] + ey[0] > E_max:
        raise DomainError(f"E_max={E_max} lies below the first eigenvalue")
    Es, ms = [], []
    for e, m in zip(ex, mx):
        k = np.searchsorted(ey, E_max - e, side="right")
        Es.append(e + ey[:k])
        ms.append(m * my[:k])
    E, mult = _merge(np.concatenate(Es), np.concatenate(ms).astype(np.int64))
    keep = E > 0
    perim = _edge_length(fx, rect.b) + _edge_length(fy, rect.a)
    spec = Spectrum(E[keep], mult[keep], rect.area, float(E_max), perim,
                    f"rectangle {bc.value} {rect.a:g}x{rect.b:g}")
    return _certify(spec)


ANNULUS_EDGES = ("DD", "NN", "ND", "DN")


def annulus_spectrum(edge_bc: str, r_min: float, E_max: float, m_max: int | None = None) -> Spectrum:
    """Annulus eigenvalues kappa^2 <= E_max from the cross-product Bessel roots.

    ``edge_bc`` names the inner edge then the outer one. Order m = 0 has
    multiplicity 1, m >= 1 multiplicity 2 (cos and sin). Every root exceeds
    m, so orders above sqrt(E_max) contribute nothing.
    """
    edge_bc = edge_bc.upper()
    if edge_bc not in ANNULUS_EDGES:
        raise ValueError(f"edge_bc must be one of {ANNULUS_EDGES}, got {edge_bc!r}")
    if not 0 < r_min < 1:
        raise DomainError(f"r_min must lie in (0, 1), got {r_min}")
    kmax = math.sqrt(E_max)
    need = int(math.floor(kmax))
    if m_max is None:
        m_max = need + 1
    if m_max < need:
        raise IncompleteSpectrumError(f"m_max={m_max} is below sqrt(E_max)={kmax:.3f}; "
                                      "orders up to that value can have roots")
    Es, ms = [], []
    for m in range(0, need + 1):
        roots = cross_bessel_zeros(edge_bc, m, r_min, kappa_max=kmax)
        if edge_bc == "NN" and m == 0:
            roots = roots[roots > 1e-6]        # the constant mode
        expected = _wkb_count(kmax, 1.0, r_min, m)
        if abs(roots.size - expected) > ORDER_AUDIT_SLACK:
            raise IncompleteSpectrumError(
                f"annulus {edge_bc} order {m}: {roots.size} roots below {kmax:.4g}, "
                f"WKB count {expected:.2f}")
        Es.append(roots ** 2)
        ms.append(np.full(roots.size, 1 if m == 0 else 2, dtype=np.int64))
    E, mult = _merge(np.concatenate(Es), np.concatenate(ms))
    spec = Spectrum(E, mult, math.pi * (1 - r_min ** 2), float(E_max),
                    2 * math.pi * (1 + r_min), f"annulus {edge_bc} r_min={r_min:g}")
    return _certify(spec)


def _sector_phi(geom) -> float:
    phi = float(getattr(geom, "phi", geom))
    if not 0 < phi <= math.pi:
        raise DomainError(f"phi must lie in (0, pi], got {phi}")
    return phi


def sector_orders(phi: float, n_max: int) -> np.ndarray:
    """Bessel orders nu_n = n pi / (2 phi), n = 1..n_max, of the Dirichlet sector."""
    return np.arange(1, n_max + 1) * math.pi / (2 * phi)


def sector_spectrum(geom, E_max: float, n_max: int | None = None) -> Spectrum:
    """Dirichlet sector (opening angle 2 phi, unit radius): alpha_{nk}^2 <= E_max."""
    phi = _sector_phi(geom)
    xmax = math.sqrt(E_max)
    need = int(math.floor(2 * phi * xmax / math.pi))
    if n_max is None:
        n_max = need + 1
    if n_max < need:
        raise IncompleteSpectrumError(f"n_max={n_max} is below 2 phi sqrt(E_max)/pi={need}")
    Es = []
    for nu in sector_orders(phi, need):
        z = bessel_j_zeros(float(nu), x_max=xmax)
        expected = _wkb_count(xmax, 1.0, 0.0, float(nu))
        if abs(z.size - expected) > ORDER_AUDIT_SLACK:
            raise IncompleteSpectrumError(
                f"sector order nu={nu:.4g}: {z.size} zeros below {xmax:.4g}, WKB count {expected:.2f}")
        Es.append(z ** 2)
    E = np.concatenate(Es) if Es else np.empty(0)
    E, mult = _merge(E, np.ones(E.size, dtype=np.int64))
    spec = Spectrum(E, mult, phi, float(E_max), 2 + 2 * phi, f"sector phi={phi:g}")
    return _certify(spec)


# --- sums --------------------------------------------------------------------------


def _window_mismatch(spec: Spectrum, area: float, lam: float) -> float:
    """max |N(E) - area E / 4 pi| just below and at each eigenvalue in (lam/2, lam], and at lam."""
    E, m = spec.eigenvalues, spec.multiplicities
    N = np.cumsum(m)
    sel = (E > lam / 2) & (E <= lam)
    weyl = area * E[sel] / (4 * math.pi)
    after = np.abs(N[sel] - weyl)
    before = np.abs(N[sel] - m[sel] - weyl)
    at_lam = abs(spec.counting(lam) - area * lam / (4 * math.pi))
    return float(max(at_lam, after.max(initial=0.0), before.max(initial=0.0)))


def _tail(spec: Spectrum, p: int, model: TailModel) -> tuple[float, float]:
    """(tail estimate, error bar) for sum over E > Lambda of E^{-p}."""
    lam = spec.truncation_energy
    A = spec.domain_area if model.area is None else model.area
    P = spec.perimeter if model.perimeter is None else model.perimeter
    area_tail = A * lam ** (1 - p) / (4 * math.pi * (p - 1))
    perim = P * lam ** (0.5 - p) / (8 * math.pi * (p - 0.5))
    # the counting mismatch shifts the tail by about R Lambda^{-p}; R oscillates, so use
    # its largest size over (Lambda/2, Lambda] rather than the value at Lambda alone
    mismatch = _window_mismatch(spec, A, lam) + P * math.sqrt(lam) / (4 * math.pi)
    fluct = mismatch * lam ** (-p)
    if model.kind == "weyl_integral":
        return area_tail, perim + fluct
    if model.kind == "none":
        return 0.0, area_tail + perim + fluct
    # geometric: ratio of the sums over the shells (L/4, L/2] and (L/2, L]
    E, m = spec.eigenvalues, spec.multiplicities
    w = m * E ** (-float(p))
    s_hi = float(w[(E > lam / 2) & (E <= lam)].sum())
    s_lo = float(w[(E > lam / 4) & (E <= lam / 2)].sum())
    if s_lo <= 0 or not 0 < s_hi / s_lo < 1:
        return area_tail, area_tail + perim + fluct
    q = s_hi / s_lo
    tail = s_hi * q / (1 - q)
    return tail, abs(tail - area_tail) + perim + fluct


def zeta_bruteforce(spec: Spectrum, p: int, tail: TailModel | None = None) -> SumRuleResult:
    """sum multiplicity / E^p over the spectrum plus a tail estimate beyond Lambda.

    With the Weyl tail the error bar is the perimeter term of the Weyl law
    (which the estimate leaves out) plus the counting mismatch at Lambda.
    """
    if int(p) != p or p < 2:
        raise OrderError(f"sum rules need an integer order p >= 2, got {p}")
    p = int(p)
    tail = tail or TailModel()
    E, m = spec.eigenvalues, spec.multiplicities
    head = float(np.sum((m * E ** (-float(p)))[::-1]))
    t, err = _tail(spec, p, tail)
    value = head + t
    err += 4 * np.finfo(float).eps * abs(value) * math.sqrt(max(E.size, 1))
    return SumRuleResult(value, float(err), spec.count, int(E.size),
                         {"head": head, "tail": t, "tail_kind": tail.kind,
                          "truncation_energy": spec.truncation_energy})


def bessel_zero_power_sum(nu: float, s: int, K: int) -> tuple[float, float]:
    """sum_k j_{nu,k}^{-2s} from the first K zeros plus a McMahon tail.

    The tail uses j ~ b - (mu - 1)/(8 b), b = (k + nu/2 - 1/4) pi, expanded
    to first order in 1/b^2 and summed with Hurwitz zeta; the error bar is
    the size of that first-order correction times (mu + 1)/b_K^2.
    """
    z = bessel_j_zeros(float(nu), count=int(K))
    head = float(np.sum(z[::-1] ** (-2.0 * s)))
    a = K + 1 + nu / 2 - 0.25
    mu = 4 * nu * nu
    lead = math.pi ** (-2 * s) * sp.zeta(2 * s, a)
    corr = 2 * s * (mu - 1) / 8 * math.pi ** (-2 * s - 2) * sp.zeta(2 * s + 2, a)
    bK = a * math.pi
    # zeros carry a few ulp each, amplified 2s-fold by the power
    err = abs(corr) * (mu + 1) / bK ** 2 + 8 * s * np.finfo(float).eps * head
    return head + lead + corr, err


def sector_zeta_rayleigh(geom, p: int, E_max: float) -> SumRuleResult:
    """Sector sum rule from its enumerated spectrum, accelerated order by order.

    For every angular order the zeros below sqrt(E_max) are summed and the
    remainder of that order is the Rayleigh closed form minus the partial
    sum; orders with no zero below sqrt(E_max) enter through their Rayleigh
    sums, with the order tail estimated from the leading nu^{1-2p} term.
    ``details["deficits"]`` holds the per-order remainders, which must be
    positive and below the next zero's contribution bound.
    """
    if p not in (1, 2, 3, 4):
        raise OrderError(f"Rayleigh sums are tabulated for p in 1..4, got {p}")
    phi = _sector_phi(geom)
    spec = sector_spectrum(phi, E_max)
    xmax = math.sqrt(E_max)
    need = int(math.floor(2 * phi * xmax / math.pi))
    total, deficits = 0.0, []
    c = math.pi / (2 * phi)
    n_far = max(need + 1, 2000)
    for n, nu in enumerate(sector_orders(phi, n_far), start=1):
        full = rayleigh_sum(float(nu), p)
        if n <= need:
            z = bessel_j_zeros(float(nu), x_max=xmax)
            part = float(np.sum(z[::-1] ** (-2.0 * p)))
            deficits.append(full - part)
        total += full
    lead = {1: 1 / 4, 2: 1 / 16, 3: 1 / 32, 4: 5 / 256}[p]
    far_tail = lead * c ** (1 - 2 * p) * sp.zeta(2 * p - 1, n_far + 1)
    value = total + far_tail
    err = abs(far_tail) * 3 * (1 + 1 / c) / (n_far + 1) + 1e-15 * abs(value)
    return SumRuleResult(value, float(err), spec.count, int(spec.eigenvalues.size),
                         {"deficits": np.array(deficits), "orders": n_far})


# --- export ------------------------------------------------------------------------


def spectrum_to_csv(spec: Spectrum, path) -> None:
    """Write the spectrum as CSV with columns E, multiplicity (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {spec.label}; area={spec.domain_area!r}; perimeter={spec.perimeter!r}; "
                 f"truncation_energy={spec.truncation_energy!r}\n")
        w = csv.writer(fh)
        w.writerow(["E", "multiplicity"])
        for e, m in zip(spec.eigenvalues, spec.multiplicities):
            w.writerow([f"{e:.17g}", int(m)])
