"""Special functions: polygamma, dilogarithm, Bessel J/Y and their zeros.

Function values are delegated to :mod:`scipy.special`; the zero finders
(ordinary Bessel zeros of arbitrary real order and the cross-product zeros
that give annulus eigenvalues) are implemented here with a sign-change scan
followed by a vectorised Illinois refinement.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

from .errors import BracketError, DomainError

ZETA3 = 1.2020569031595942853997381615114
EULER_GAMMA = 0.57721566490153286060651209008240

MAX_POLYGAMMA_ORDER = 8

CROSS_KINDS = ("DD", "NN", "ND", "DN")


def polygamma(m: int, z: float) -> float:
    """Polygamma function psi^(m)(z) for real z > 0."""
    if int(m) != m or m < 0 or m > MAX_POLYGAMMA_ORDER:
        raise DomainError(f"polygamma order must be an integer in [0, {MAX_POLYGAMMA_ORDER}], got {m}")
    if not z > 0:
        raise DomainError(f"polygamma argument must be positive, got {z}")
    if m == 0:
        return float(sp.digamma(z))
    return float(sp.polygamma(int(m), z))


def polylog2(z: float) -> float:
    """Dilogarithm Li_2(z) for real |z| <= 1."""
    if not abs(z) <= 1.0:
        raise DomainError(f"polylog2 needs |z| <= 1, got {z}")
    # scipy's spence(x) is Li_2(1 - x)
    return float(sp.spence(1.0 - z))


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x), nu >= 0, x >= 0."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j needs x >= 0")
    out = sp.jv(nu, x)
    return float(out) if out.ndim == 0 else out


TINY_ORDER = 1e-8


def bessel_y(nu: float, x):
    """Bessel function of the second kind Y_nu(x), nu >= 0, x > 0."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("bessel_y needs x > 0")
    if nu < TINY_ORDER:
        # scipy's reflection formula underflows to 0 for subnormal orders;
        # dY_nu/dnu at nu = 0 is -(pi/2) J_0 and the nu^2 term is below rounding
        out = sp.y0(x) - nu * (math.pi / 2) * sp.j0(x)
    else:
        out = sp.yv(nu, x)
    return float(out) if np.ndim(out) == 0 else out


def _check_order(nu: float) -> None:
    if not (np.isfinite(nu) and nu >= 0):
        raise DomainError(f"Bessel order must be finite and >= 0, got {nu}")


def mcmahon_zero(nu: float, k: int) -> float:
    """McMahon asymptotic estimate of the k-th positive zero of J_nu."""
    beta = (k + 0.5 * nu - 0.25) * math.pi
    mu = 4.0 * nu * nu
    b8 = 8.0 * beta
    return (beta - (mu - 1) / b8
            - 4 * (mu - 1) * (7 * mu - 31) / (3 * b8**3)
            - 32 * (mu - 1) * (83 * mu**2 - 982 * mu + 3779) / (15 * b8**5))


def refine_brackets(f, a, b, fa=None, fb=None, rtol=1e-15, maxiter=200):
    """Vectorised Illinois iteration on brackets ``[a, b]`` with sign change.

    ``f`` must accept and return arrays of the bracket shape. Returns the
    root estimates; every iterate stays inside its bracket.
    """
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    fa = f(a) if fa is None else np.array(fa, dtype=float, copy=True)
    fb = f(b) if fb is None else np.array(fb, dtype=float, copy=True)
    if a.size == 0:
        return a
    if np.any(np.sign(fa) * np.sign(fb) > 0):
        raise BracketError("refine_brackets called on an interval without sign change")
    done = (fa == 0) | (fb == 0)
    root = np.where(fa == 0, a, b)
    for it in range(maxiter):
        active = ~done
        if not active.any():
            break
        aa, bb, ffa, ffb = a[active], b[active], fa[active], fb[active]
        c = bb - ffb * (bb - aa) / (ffb - ffa)
        # fall back to bisection when the secant point is poor
        bad = ~np.isfinite(c) | (c <= np.minimum(aa, bb)) | (c >= np.maximum(aa, bb))
        if it % 4 == 3:
            bad[:] = True
        c = np.where(bad, 0.5 * (aa + bb), c)
        fc = np.asarray(f(c), dtype=float)
        flip = np.sign(fc) * np.sign(ffb) < 0
        na = np.where(flip, bb, aa)
        nfa = np.where(flip, ffb, np.where(bad, ffa, 0.5 * ffa))
        a[active], fa[active] = na, nfa
        b[active], fb[active] = c, fc
        width = np.abs(c - na)
        conv = (fc == 0) | (width <= rtol * np.abs(c) + 1e-300)
        idx = np.flatnonzero(active)
        root[idx] = c
        done[idx[conv]] = True
    return root


def _scan_sign_changes(f, grid):
    vals = f(grid)
    s = np.sign(vals)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    exact = np.flatnonzero(vals == 0)
    return idx, vals, exact


def bessel_j_zeros(nu: float, count: int | None = None, x_max: float | None = None) -> np.ndarray:
    """Positive zeros of J_nu, either the first ``count`` or all below ``x_max``.

    The scan starts at x = nu (no zero of J_nu lies below its order) and uses
    a step of 1/2, well under the minimal zero spacing.
    """
    _check_order(nu)
    if (count is None) == (x_max is None):
        raise ValueError("give exactly one of count or x_max")
    step = 0.5
    start = max(float(nu), 1e-12)
    if count is not None:
        if count < 1:
            return np.empty(0)
        end = max(mcmahon_zero(nu, count), nu + count * math.pi) + 2 * math.pi
    else:
        end = float(x_max)
        if end <= start:
            return np.empty(0)
    fun = lambda x: sp.jv(nu, x)
    while True:
        n = max(2, int(math.ceil((end - start) / step)) + 1)
        grid = np.linspace(start, end, n)
        idx, vals, exact = _scan_sign_changes(fun, grid)
        roots = refine_brackets(fun, grid[idx], grid[idx + 1], vals[idx], vals[idx + 1])
        if exact.size:
            roots = np.sort(np.concatenate([roots, grid[exact]]))
        if count is None:
            return roots[roots < x_max]
        if roots.size >= count:
            return roots[:count]
        end = start + 1.5 * (end - start)


def bessel_j_zero(nu: float, k: int) -> float:
    """The k-th positive zero of J_nu (k >= 1)."""
    if int(k) != k or k < 1:
        raise DomainError(f"zero index must be a positive integer, got {k}")
    return float(bessel_j_zeros(nu, count=int(k))[-1])


def _edge_pair(m, z, neumann: bool):
    if neumann:
        return sp.jvp(m, z), sp.yvp(m, z)
    return sp.jv(m, z), sp.yv(m, z)


def cross_product(kind: str, m: float, r_min: float, kappa):
    """Normalised cross-product function whose roots are annulus eigenvalues.

    ``kind`` gives the condition at the inner edge r_min then at the outer
    edge 1 (``"ND"`` is Neumann inside, Dirichlet outside). The value is
    divided by the modulus of the inner-edge pair so that large orders do
    not overflow; the modulus is positive, so roots and signs are kept.
    """
    if kind not in CROSS_KINDS:
        raise ValueError(f"unknown cross-product kind {kind!r}")
    kappa = np.asarray(kappa, dtype=float)
    ja, ya = _edge_pair(m, kappa * r_min, kind[0] == "N")
    jb, yb = _edge_pair(m, kappa, kind[1] == "N")
    with np.errstate(invalid="ignore", over="ignore"):
        big = ~np.isfinite(ya)
        mod = np.hypot(ja, np.where(big, 1.0, ya))
        ja_n = np.where(big, 0.0, ja / mod)
        ya_n = np.where(big, -1.0 if kind[0] == "D" else 1.0, ya / mod)
    return ja_n * yb - jb * ya_n


def cross_bessel_zeros(kind: str, m: float, r_min: float, count: int | None = None,
                       kappa_max: float | None = None, max_extend: int = 60) -> np.ndarray:
    """Roots of the annulus cross-product equation for angular order m.

    All roots exceed m (the angular term alone bounds the Rayleigh quotient
    from below), so the scan starts there with step pi*(1 - r_min)/8.
    """
    if not 0 < r_min < 1:
        raise DomainError(f"r_min must lie in (0, 1), got {r_min}")
    if (count is None) == (kappa_max is None):
        raise ValueError("give exactly one of count or kappa_max")
    step = math.pi * (1.0 - r_min) / 8.0
    start = max(float(m), 1e-6)
    spacing = math.pi / (1.0 - r_min)
    if count is not None:
        end = start + (count + 2) * spacing
    else:
        end = float(kappa_max)
        if end <= start:
            return np.empty(0)
    fun = lambda k: cross_product(kind, m, r_min, k)
    for _ in range(max_extend):
        n = max(2, int(math.ceil((end - start) / step)) + 1)
        grid = np.linspace(start, end, n)
        idx, vals, exact = _scan_sign_changes(fun, grid)
        roots = refine_brackets(fun, grid[idx], grid[idx + 1], vals[idx], vals[idx + 1])
        if exact.size:
            roots = np.sort(np.concatenate([roots, grid[exact]]))
        if count is None:
            return roots[roots < kappa_max]
        if roots.size >= count:
            return roots[:count]
        end = start + 1.5 * (end - start)
    raise BracketError(f"cross-product scan found too few roots for kind={kind} m={m} "
                       f"r_min={r_min}; widen the window")


def cross_bessel_zero(kind: str, m: float, r_min: float, k: int) -> float:
    """k-th positive root of the cross-product equation (see :func:`cross_product`)."""
    if int(k) != k or k < 1:
        raise DomainError(f"root index must be a positive integer, got {k}")
    return float(cross_bessel_zeros(kind, m, r_min, count=int(k))[-1])
