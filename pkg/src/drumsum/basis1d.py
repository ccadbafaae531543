"""One-dimensional eigenbases and transverse Green's kernels.

Intervals are centred at the origin, ``(-L/2, L/2)``. A transverse kernel
``g(y, y'; kappa2)`` is the Green's function of ``-d^2/dy^2 + kappa2`` with
the boundary conditions of its family. For ``kappa2 = 0`` the Neumann and
periodic operators are singular; their pseudo-inverse kernels (constant
mode projected out) are only returned with ``zero_mode=True``.

Note on the Neumann index set: the sine branch (``u=2``) of the Neumann
basis is indexed from ``n = 1`` with eigenvalue ``(2n-1)^2 pi^2 / L^2``.
A listing that starts that branch at ``n = 0`` would produce the function
``sin(-pi x / L)``, a duplicate of ``n = 1`` up to sign, so it is rejected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidIndexError


class KernelFamily(str, enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"
    PERIODIC = "P"
    NEUMANN_DIRICHLET = "ND"  # Neumann at -L/2, Dirichlet at +L/2
    DIRICHLET_NEUMANN = "DN"  # Dirichlet at -L/2, Neumann at +L/2

    @classmethod
    def parse(cls, value) -> "KernelFamily":
        if isinstance(value, cls):
            return value
        aliases = {"dirichlet": "D", "neumann": "N", "periodic": "P",
                   "neumanndirichlet": "ND", "dirichletneumann": "DN"}
        key = str(value)
        key = aliases.get(key.lower().replace("_", "").replace("-", ""), key.upper())
        return cls(key)

    @property
    def has_zero_mode(self) -> bool:
        return self in (KernelFamily.NEUMANN, KernelFamily.PERIODIC)


@dataclass(frozen=True)
class ModeIndex:
    n: int
    u: int = 1


def _check_length(L: float) -> float:
    L = float(L)
    if not (L > 0 and math.isfinite(L)):
        raise DomainError(f"interval length must be positive and finite, got {L}")
    return L


def _check_index(family: KernelFamily, idx: ModeIndex) -> None:
    n, u = idx.n, idx.u
    if family in (KernelFamily.DIRICHLET, KernelFamily.NEUMANN_DIRICHLET,
                  KernelFamily.DIRICHLET_NEUMANN):
        ok = u == 1 and n >= 1
    else:
        ok = (n == 0 and u == 1) or (n >= 1 and u in (1, 2))
    if not ok or int(n) != n:
        raise InvalidIndexError(f"mode {idx} is not valid for family {family.value}")


def eigenvalue_1d(family, L: float, idx: ModeIndex) -> float:
    """Eigenvalue of -d^2/dx^2 on (-L/2, L/2) for the given mode."""
    family = KernelFamily.parse(family)
    L = _check_length(L)
    _check_index(family, idx)
    n, u = idx.n, idx.u
    if family is KernelFamily.DIRICHLET:
        return (n * math.pi / L) ** 2
    if family is KernelFamily.NEUMANN:
        if u == 1:
            return (2 * n * math.pi / L) ** 2
        return ((2 * n - 1) * math.pi / L) ** 2
    if family is KernelFamily.PERIODIC:
        return (2 * n * math.pi / L) ** 2
    return ((2 * n - 1) * math.pi / (2 * L)) ** 2


def eigenfunction_1d(family, L: float, idx: ModeIndex, x):
    """L2-normalised eigenfunction on (-L/2, L/2); vectorised over x."""
    family = KernelFamily.parse(family)
    L = _check_length(L)
    _check_index(family, idx)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > L / 2 * (1 + 1e-12)):
        raise DomainError("eigenfunction evaluated outside the interval")
    n, u = idx.n, idx.u
    c = math.sqrt(2.0 / L)
    if family is KernelFamily.DIRICHLET:
        out = c * np.sin(n * math.pi * (x + L / 2) / L)
    elif family is KernelFamily.NEUMANN:
        if n == 0:
            out = np.full_like(x, math.sqrt(1.0 / L))
        elif u == 1:
            out = c * np.cos(2 * n * math.pi * x / L)
        else:
            out = c * np.sin((2 * n - 1) * math.pi * x / L)
    elif family is KernelFamily.PERIODIC:
        if n == 0:
            out = np.full_like(x, math.sqrt(1.0 / L))
        elif u == 1:
            out = c * np.cos(2 * n * math.pi * x / L)
        else:
            out = c * np.sin(2 * n * math.pi * x / L)
    else:
        xs = x if family is KernelFamily.NEUMANN_DIRICHLET else -x
        out = c * np.sin(math.pi * (2 * n - 1) * (3 * L + 2 * xs) / (4 * L))
    return float(out) if out.ndim == 0 else out


def mode_indices(family, count: int) -> list[ModeIndex]:
    """The first ``count`` longitudinal mode numbers n >= 1 (all branches),
    preceded by the zero mode for Neumann/periodic families."""
    family = KernelFamily.parse(family)
    out = []
    if family.has_zero_mode:
        out.append(ModeIndex(0, 1))
        for n in range(1, count + 1):
            out.extend([ModeIndex(n, 1), ModeIndex(n, 2)])
    else:
        out.extend(ModeIndex(n, 1) for n in range(1, count + 1))
    return out


# --- transverse kernels ---------------------------------------------------


@dataclass(frozen=True)
class KernelTerm:
    """One separable piece ``weight * exp(-rate*(t> - t<)) * lower(t<) * upper(t>)``.

    ``lower`` and ``upper`` are bounded on the interval for every rate, which
    is what keeps ordered integrals finite for large kappa.
    """
    weight: float
    rate: float
    lower: Callable[[np.ndarray], np.ndarray]
    upper: Callable[[np.ndarray], np.ndarray]


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def kernel_terms(family, L: float, kappa2: float, zero_mode: bool = False) -> list[KernelTerm]:
    """Separable decomposition of the transverse kernel."""
    family = KernelFamily.parse(family)
    L = _check_length(L)
    kappa2 = float(kappa2)
    if kappa2 < 0:
        raise DomainError("kappa2 must be nonnegative")
    h = L / 2
    if kappa2 == 0:
        if family.has_zero_mode and not zero_mode:
            raise DomainError(f"the kappa2=0 {family.value} kernel is a pseudo-inverse; "
                              "pass zero_mode=True to request it")
        if family is KernelFamily.DIRICHLET:
            return [KernelTerm(1.0 / L, 0.0, lambda t: t + h, lambda t: h - t)]
        if family is KernelFamily.NEUMANN_DIRICHLET:
            return [KernelTerm(1.0, 0.0, _one, lambda t: h - t)]
        if family is KernelFamily.DIRICHLET_NEUMANN:
            return [KernelTerm(1.0, 0.0, lambda t: t + h, _one)]
        sq = lambda t: np.asarray(t, dtype=float) ** 2
        ident = lambda t: np.asarray(t, dtype=float)
        terms = [KernelTerm(L / 12, 0.0, _one, _one),
                 KernelTerm(-0.5, 0.0, _one, ident),
                 KernelTerm(0.5, 0.0, ident, _one),
                 KernelTerm(0.5 / L, 0.0, _one, sq),
                 KernelTerm(0.5 / L, 0.0, sq, _one)]
        if family is KernelFamily.PERIODIC:
            terms.append(KernelTerm(-1.0 / L, 0.0, ident, ident))
        return terms
    if zero_mode:
        raise DomainError("zero_mode=True is only meaningful for kappa2 = 0")
    k = math.sqrt(kappa2)
    minus = lambda s: -np.expm1(-2 * k * s)
    plus = lambda s: 1.0 + np.exp(-2 * k * s)
    if family is KernelFamily.PERIODIC:
        w = 1.0 / (2 * k * -math.expm1(-k * L))
        return [KernelTerm(w, k, _one, _one),
                KernelTerm(w, 0.0, lambda t: np.exp(-k * (t + h)), lambda t: np.exp(-k * (h - t)))]
    left, right = {
        KernelFamily.DIRICHLET: (minus, minus),
        KernelFamily.NEUMANN: (plus, plus),
        KernelFamily.NEUMANN_DIRICHLET: (plus, minus),
        KernelFamily.DIRICHLET_NEUMANN: (minus, plus),
    }[family]
    mixed = family in (KernelFamily.NEUMANN_DIRICHLET, KernelFamily.DIRICHLET_NEUMANN)
    denom = 1.0 + math.exp(-2 * k * L) if mixed else -math.expm1(-2 * k * L)
    w = 1.0 / (2 * k * denom)
    return [KernelTerm(w, k, lambda t: left(t + h), lambda t: right(h - t))]


def transverse_kernel(family, L: float, kappa2: float, y, yp, zero_mode: bool = False):
    """Closed-form transverse kernel g(y, y'; kappa2), vectorised over y, y'.

    Evaluated through :func:`kernel_terms`, i.e. as decaying exponentials,
    so kappa*L far beyond the overflow threshold of sinh is fine.
    """
    family = KernelFamily.parse(family)
    L = _check_length(L)
    y = np.asarray(y, dtype=float)
    yp = np.asarray(yp, dtype=float)
    tol = L / 2 * (1 + 1e-12)
    if np.any(np.abs(y) > tol) or np.any(np.abs(yp) > tol):
        raise DomainError("kernel evaluated outside the interval")
    lo = np.minimum(y, yp)
    hi = np.maximum(y, yp)
    out = np.zeros(np.broadcast(lo, hi).shape)
    for term in kernel_terms(family, L, kappa2, zero_mode):
        out = out + term.weight * np.exp(-term.rate * (hi - lo)) * term.lower(lo) * term.upper(hi)
    return float(out) if out.ndim == 0 else out


def kernel_mode_sum(family, L: float, kappa2: float, y, yp, n_terms: int) -> float:
    """Truncated eigen-sum sum_j phi_j(y) phi_j(y') / (kappa2 + e_j)."""
    family = KernelFamily.parse(family)
    total = 0.0
    for idx in mode_indices(family, n_terms):
        e = eigenvalue_1d(family, L, idx)
        if kappa2 + e == 0:
            continue
        total += (eigenfunction_1d(family, L, idx, y) * eigenfunction_1d(family, L, idx, yp)
                  / (kappa2 + e))
    return float(total)


def kernel_mode_sum_residual(family, L: float, kappa2: float, y, yp, n_terms: int) -> float:
    """Closed-form kernel minus its truncated eigen-sum (kappa2 > 0)."""
    if not kappa2 > 0:
        raise DomainError("kernel_mode_sum_residual needs kappa2 > 0")
    return float(transverse_kernel(family, L, kappa2, y, yp)
                 - kernel_mode_sum(family, L, kappa2, y, yp, n_terms))


def kernel_many(family, L: float, kappa2, y: float, yp: float) -> np.ndarray:
    """Transverse kernel at fixed (y, y') for an array of kappa2 > 0."""
    family = KernelFamily.parse(family)
    k = np.sqrt(np.asarray(kappa2, dtype=float))
    lo, hi = min(y, yp), max(y, yp)
    h = L / 2
    d = hi - lo
    s1, s2 = lo + h, h - hi
    if family is KernelFamily.PERIODIC:
        return (np.exp(-k * d) + np.exp(-k * (L - d))) / (2 * k * -np.expm1(-k * L))
    minus = lambda s: -np.expm1(-2 * k * s)
    plus = lambda s: 1.0 + np.exp(-2 * k * s)
    left, right = {
        KernelFamily.DIRICHLET: (minus, minus),
        KernelFamily.NEUMANN: (plus, plus),
        KernelFamily.NEUMANN_DIRICHLET: (plus, minus),
        KernelFamily.DIRICHLET_NEUMANN: (minus, plus),
    }[family]
    if family in (KernelFamily.NEUMANN_DIRICHLET, KernelFamily.DIRICHLET_NEUMANN):
        denom = 1.0 + np.exp(-2 * k * L)
    else:
        denom = -np.expm1(-2 * k * L)
    return np.exp(-k * d) * left(s1) * right(s2) / (2 * k * denom)


def mode_block(family, L: float, x: float, xp: float, n_lo: int, n_hi: int):
    """Eigenvalues and products phi(x) phi(x') for mode numbers n_lo <= n < n_hi.

    The zero mode is never included (use n_lo >= 1); both branches are
    returned for Neumann and periodic families.
    """
    family = KernelFamily.parse(family)
    n = np.arange(max(n_lo, 1), n_hi, dtype=float)
    c = 2.0 / L
    pi = math.pi
    if family is KernelFamily.DIRICHLET:
        ev = (n * pi / L) ** 2
        pr = c * np.sin(n * pi * (x + L / 2) / L) * np.sin(n * pi * (xp + L / 2) / L)
    elif family is KernelFamily.NEUMANN:
        ev = np.concatenate([(2 * n * pi / L) ** 2, ((2 * n - 1) * pi / L) ** 2])
        pr = c * np.concatenate([np.cos(2 * n * pi * x / L) * np.cos(2 * n * pi * xp / L),
                                 np.sin((2 * n - 1) * pi * x / L) * np.sin((2 * n - 1) * pi * xp / L)])
    elif family is KernelFamily.PERIODIC:
        ev = np.concatenate([(2 * n * pi / L) ** 2] * 2)
        pr = c * np.concatenate([np.cos(2 * n * pi * x / L) * np.cos(2 * n * pi * xp / L),
                                 np.sin(2 * n * pi * x / L) * np.sin(2 * n * pi * xp / L)])
    else:
        sx, sxp = (x, xp) if family is KernelFamily.NEUMANN_DIRICHLET else (-x, -xp)
        ev = ((2 * n - 1) * pi / (2 * L)) ** 2
        arg = lambda z: pi * (2 * n - 1) * (3 * L + 2 * z) / (4 * L)
        pr = c * np.sin(arg(sx)) * np.sin(arg(sxp))
    return ev, pr


def mode_ladder(family, L: float):
    """(kappa of mode n=1, kappa step per n, modes per n) for tail bounds."""
    family = KernelFamily.parse(family)
    pi = math.pi
    return {
        KernelFamily.DIRICHLET: (pi / L, pi / L, 1),
        KernelFamily.NEUMANN: (pi / L, 2 * pi / L, 2),
        KernelFamily.PERIODIC: (2 * pi / L, 2 * pi / L, 2),
        KernelFamily.NEUMANN_DIRICHLET: (pi / (2 * L), pi / L, 1),
        KernelFamily.DIRICHLET_NEUMANN: (pi / (2 * L), pi / L, 1),
    }[family]
