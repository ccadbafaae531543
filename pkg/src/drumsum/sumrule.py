"""Sum rules Z(p) = sum_n E_n^{-p} for -Laplace psi = E Sigma psi on rectangles.

The p-th sum rule is the trace of (G Sigma)^p. Restricting the p-fold
integral to the ordered simplex t_1 > t_2 > ... > t_p turns it into a sum
over cycle diagrams, each weighted by 2p (2 for p = 2).

Every transverse kernel is a short sum of terms
``w * exp(-c (t_> - t_<)) * lower(t_<) * upper(t_>)`` with bounded factors
(see :func:`drumsum.basis1d.kernel_terms`). For one diagram and one choice
of term per edge the exponentials telescope over the gaps of the ordered
points, so the simplex integral reduces to p - 1 nested causal
convolutions, each evaluated on a composite Gauss-Legendre grid whose
panels are narrow compared with 1/c. No step ever forms an exponentially
large number.

For a density depending on one coordinate only, the other coordinate
contributes independent modes kappa_m and Z(p) = sum_m T(kappa_m). The
per-mode trace behaves like kappa^{1-2p} times a power series in
1/kappa, so the modes above a cutoff are summed from a polynomial fit in
1/kappa combined with Hurwitz zeta values (Epstein sums for the 3D box).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import legendre as npleg
from scipy import special as sp

from . import basis1d
from .basis1d import KernelFamily
from .errors import DomainError, NonConvergenceError, OrderError
from .green2d import BCPair, Rect, TruncationPolicy

log = logging.getLogger(__name__)

MAX_DIAGRAM_ORDER = 9
MAX_SIMPLEX_DIM = 6


# --- diagrams ---------------------------------------------------------------


@dataclass(frozen=True)
class Diagram:
    """A Hamiltonian cycle through the ordered points 0 .. n-1.

    ``cycle`` is the lexicographically smallest of the 2n rotations and
    reflections of the vertex sequence; ``edges`` lists (i, j) with i < j,
    so t_i > t_j on the ordered simplex.
    """

    n: int
    cycle: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def weight(self) -> int:
        # a 2-cycle has a single traversal direction
        return 2 if self.n == 2 else 2 * self.n


def enumerate_diagrams(n: int) -> list[Diagram]:
    """All max(1, (n-1)!/2) inequivalent cycle diagrams of order n."""
    if int(n) != n or n < 2:
        raise OrderError(f"diagram order must be an integer >= 2, got {n}")
    if n > MAX_DIAGRAM_ORDER:
        raise OrderError(f"diagram order {n} exceeds {MAX_DIAGRAM_ORDER}")
    n = int(n)
    if n == 2:
        return [Diagram(2, (0, 1), ((0, 1), (0, 1)))]
    out = []
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue  # reflection of a cycle already listed
        cyc = (0,) + perm
        edges = tuple(sorted(tuple(sorted((cyc[k], cyc[(k + 1) % n]))) for k in range(n)))
        out.append(Diagram(n, cyc, edges))
    return out


# --- densities and policies --------------------------------------------------


@dataclass(frozen=True)
class Density2:
    """Mass density Sigma(x, y) on a centred rectangle.

    ``profile`` is the one-variable function when ``separable_axis`` is
    ``x_only`` or ``y_only``; ``constant`` is set for uniform densities.
    """

    evaluator: Callable
    separable_axis: str = "none"
    profile: Callable | None = None
    constant: float | None = None
    label: str = "custom"

    def __post_init__(self):
        if self.separable_axis not in ("none", "x_only", "y_only"):
            raise ValueError(f"bad separable_axis {self.separable_axis!r}")
        if self.separable_axis != "none" and self.profile is None:
            raise ValueError("separable densities need a profile")

    def __call__(self, x, y):
        return self.evaluator(x, y)

    @classmethod
    def const(cls, c: float = 1.0) -> "Density2":
        c = float(c)
        if not c > 0:
            raise DomainError(f"density must be positive, got {c}")
        prof = lambda t: np.full_like(np.asarray(t, dtype=float), c)
        return cls(lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c),
                   "y_only", prof, c, f"const:{c:g}")

    @classmethod
    def along(cls, axis: str, profile: Callable, label: str = "custom") -> "Density2":
        if axis == "x":
            ev = lambda x, y: profile(np.asarray(x, float)) * np.ones_like(np.asarray(y, float))
            return cls(ev, "x_only", profile, None, label)
        if axis == "y":
            ev = lambda x, y: profile(np.asarray(y, float)) * np.ones_like(np.asarray(x, float))
            return cls(ev, "y_only", profile, None, label)
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    @classmethod
    def conformal_annulus(cls, r_min: float) -> "Density2":
        """Sigma = r_min exp(2x): the annulus (inner radius r_min) mapped to a rectangle."""
        from .closedforms import annulus_density_array
        return cls.along("x", lambda x: annulus_density_array(r_min, x),
                         f"conformal-annulus:{r_min:g}")

    @classmethod
    def power_annulus(cls, b: float, r_min: float) -> "Density2":
        """Mapped annulus whose radial density is the normalised power r^b."""
        from .closedforms import power_annulus_density_array
        return cls.along("x", lambda x: power_annulus_density_array(b, r_min, x),
                         f"power-annulus:{b:g},{r_min:g}")

    def scaled(self, c: float) -> "Density2":
        c = float(c)
        ev, prof = self.evaluator, self.profile
        return Density2(lambda x, y: c * ev(x, y), self.separable_axis,
                        None if prof is None else (lambda t: c * prof(t)),
                        None if self.constant is None else c * self.constant,
                        f"{c:g}*{self.label}")


@dataclass(frozen=True)
class QuadPolicy:
    points_per_axis: int = 16
    subdivisions: int = 4
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not 4 <= self.points_per_axis <= 128:
            raise ValueError("points_per_axis must lie in [4, 128]")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class SumRuleResult:
    value: float
    abs_error: float
    modes_used: int
    quad_evals: int
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NonConvergenceError("sum rule evaluated to a non-finite value")
        if not self.abs_error >= 0:
            raise ValueError("abs_error must be nonnegative")


# --- ordered integral on the simplex (general integrands) --------------------


def ordered_integral(n: int, f: Callable, interval: tuple[float, float],
                     quad: QuadPolicy | None = None) -> float:
    """Integral of f(t_1, ..., t_n) over hi > t_1 > t_2 > ... > t_n > lo.

    The simplex is mapped to the unit cube by t_1 = lo + (hi-lo) u_1,
    t_k = lo + (t_{k-1} - lo) u_k, and integrated with a tensor Gauss-Legendre
    rule. ``f`` receives n broadcastable arrays.
    """
    quad = quad or QuadPolicy()
    if int(n) != n or n < 1 or n > MAX_SIMPLEX_DIM:
        raise OrderError(f"ordered_integral supports 1 <= n <= {MAX_SIMPLEX_DIM}, got {n}")
    lo, hi = map(float, interval)
    x, w = npleg.leggauss(quad.points_per_axis)
    # composite rule on (0, 1)
    m = quad.subdivisions
    u = ((x[None, :] + 1) / 2 + np.arange(m)[:, None]).ravel() / m
    wu = np.tile(w / (2 * m), m)
    grids = np.meshgrid(*([u] * n), indexing="ij", sparse=True)
    wgrid = np.meshgrid(*([wu] * n), indexing="ij", sparse=True)
    t_prev = hi
    ts = []
    jac = 1.0
    weight = 1.0
    for k in range(n):
        span = t_prev - lo
        jac = jac * span
        t_k = lo + span * grids[k]
        ts.append(t_k)
        weight = weight * wgrid[k]
        t_prev = t_k
    vals = np.asarray(f(*ts), dtype=float)
    return float(np.sum(np.broadcast_to(vals * jac * weight, np.broadcast(*ts).shape)))


# --- the causal-convolution engine -----------------------------------------


@lru_cache(maxsize=16)
def _gl_panel(m: int):
    """Nodes, weights and cumulative-integration matrix on (-1, 1)."""
    x, w = npleg.leggauss(m)
    V = npleg.legvander(x, m - 1)
    W = np.empty((m, m))
    for k in range(m):
        c = np.zeros(m)
        c[k] = 1.0
        W[:, k] = npleg.legval(x, npleg.legint(c, lbnd=-1))
    S = np.linalg.solve(V.T, W.T).T  # S = W V^{-1}
    return x, w, S


@dataclass(frozen=True)
class _Grid:
    lo: float
    h: float
    panels: int
    m: int
    t: np.ndarray        # (panels * m,)
    w: np.ndarray        # (panels * m,)
    offs: np.ndarray     # node offsets inside a panel, (m,)
    S: np.ndarray        # cumulative matrix scaled to the panel, (m, m)
    wp: np.ndarray       # panel weights, (m,)


def _make_grid(lo: float, hi: float, rate_max: float, quad: QuadPolicy, theta: float = 1.0):
    m = quad.points_per_axis
    L = hi - lo
    panels = max(quad.subdivisions, int(math.ceil(L * rate_max / theta)))
    h = L / panels
    x, w, S = _gl_panel(m)
    offs = (x + 1) * h / 2
    t = (lo + h * np.arange(panels)[:, None] + offs[None, :]).ravel()
    wp = w * h / 2
    return _Grid(lo, h, panels, m, t, np.tile(wp, panels), offs, S * h / 2, wp)


def _causal(grid: _Grid, c: np.ndarray, q: np.ndarray) -> np.ndarray:
    """F(t) = int_lo^t exp(-c (t - s)) q(s) ds at every grid node.

    ``c`` has shape (rows,), ``q`` shape (rows, nodes).
    """
    rows = q.shape[0]
    P, m = grid.panels, grid.m
    q3 = q.reshape(rows, P, m)
    e_up = np.exp(c[:, None] * grid.offs[None, :])      # <= exp(c h)
    e_dn = np.exp(-c[:, None] * grid.offs[None, :])
    g = q3 * e_up[:, None, :]
    inner = g @ grid.S.T                                 # (rows, P, m)
    total = g @ grid.wp                                  # (rows, P)
    decay = np.exp(-c * grid.h)
    carry = np.empty((rows, P))
    acc = np.zeros(rows)
    for p in range(P):
        carry[:, p] = acc
        acc = decay * (acc + total[:, p])
    return (e_dn[:, None, :] * (carry[:, :, None] + inner)).reshape(rows, P * m)


def _chain(grid: _Grid, rates: np.ndarray, factors: list[np.ndarray]) -> np.ndarray:
    """Ordered integral of prod_k factors[k](t_k) prod_k exp(-rates[:, k] (t_k - t_{k+1}))."""
    H = factors[-1]
    for k in range(len(factors) - 2, -1, -1):
        H = factors[k] * _causal(grid, rates[:, k], H)
    return H @ grid.w


@dataclass
class _Channel:
    """One kernel term, tabulated on a grid for a batch of rows."""

    weight: np.ndarray   # (rows,)
    rate: np.ndarray     # (rows,)
    lower: np.ndarray    # (rows, nodes)
    upper: np.ndarray    # (rows, nodes)


def _channels(family: KernelFamily, L: float, kappa: np.ndarray, t: np.ndarray) -> list[_Channel]:
    """Kernel terms for positive kappa, vectorised over kappa."""
    k = kappa[:, None]
    h = L / 2
    rows = kappa.size
    ones = np.ones((rows, t.size))
    if family is KernelFamily.PERIODIC:
        w = 1.0 / (2 * kappa * -np.expm1(-kappa * L))
        return [_Channel(w, kappa.copy(), ones, ones),
                _Channel(w, np.zeros(rows), np.exp(-k * (t + h)), np.exp(-k * (h - t)))]
    minus = lambda s: -np.expm1(-2 * k * s)
    plus = lambda s: 1.0 + np.exp(-2 * k * s)
    left, right = {
        KernelFamily.DIRICHLET: (minus, minus),
        KernelFamily.NEUMANN: (plus, plus),
        KernelFamily.NEUMANN_DIRICHLET: (plus, minus),
        KernelFamily.DIRICHLET_NEUMANN: (minus, plus),
    }[family]
    if family in (KernelFamily.NEUMANN_DIRICHLET, KernelFamily.DIRICHLET_NEUMANN):
        denom = 1.0 + np.exp(-2 * kappa * L)
    else:
        denom = -np.expm1(-2 * kappa * L)
    return [_Channel(1.0 / (2 * kappa * denom), kappa.copy(), left(t + h), right(h - t))]


def _zero_channels(family: KernelFamily, L: float, t: np.ndarray) -> list[_Channel]:
    """The kappa = 0 kernel (pseudo-inverse for Neumann/periodic) as channels."""
    out = []
    for term in basis1d.kernel_terms(family, L, 0.0, zero_mode=family.has_zero_mode):
        lo = np.broadcast_to(np.asarray(term.lower(t), dtype=float), t.shape)
        up = np.broadcast_to(np.asarray(term.upper(t), dtype=float), t.shape)
        out.append(_Channel(np.array([term.weight]), np.array([term.rate]),
                            lo[None, :], up[None, :]))
    return out


def _apply_kernel(grid: _Grid, chans: list[_Channel], f: np.ndarray) -> np.ndarray:
    """int g(t, s) f(s) ds at the grid nodes for a single-row channel list."""
    out = np.zeros(grid.t.size)
    for ch in chans:
        below = _causal(grid, ch.rate, ch.lower * f[None, :])[0]
        # the grid is symmetric, so reversing the nodes turns t into -t
        above = _causal(grid, ch.rate, (ch.upper * f[None, :])[:, ::-1])[0][::-1]
        out += ch.weight[0] * (ch.upper[0] * below + ch.lower[0] * above)
    return out


def _weighted_zero_channels(family: KernelFamily, L: float, grid: _Grid,
                            sigma: np.ndarray) -> list[_Channel]:
    """kappa = 0 kernel whose range is Sigma-orthogonal to the constants.

    The standard pseudo-inverse removes the constant mode in the unweighted
    inner product; with a non-uniform density the excluded E = 0 mode must
    be removed in the Sigma-weighted one:
    g_S(t, s) = g_0 - u(t) - u(s) + c, u = (1/M) int g_0 Sigma, c = (1/M) int Sigma u.
    """
    base = _zero_channels(family, L, grid.t)
    if not family.has_zero_mode:
        return base
    mass = float(sigma @ grid.w)
    u = _apply_kernel(grid, base, sigma) / mass
    c = float((sigma * u) @ grid.w) / mass
    if np.max(np.abs(u)) <= 1e-14 * L * L:
        return base
    one = np.ones((1, grid.t.size))
    return base + [_Channel(np.array([-1.0]), np.zeros(1), u[None, :], one),
                   _Channel(np.array([-1.0]), np.zeros(1), one, u[None, :]),
                   _Channel(np.array([c]), np.zeros(1), one, one)]


def _diagram_sum(p: int, grid: _Grid, sigma: np.ndarray, chans: list[_Channel]) -> tuple[np.ndarray, int]:
    """sum over diagrams and channel choices of weight * ordered integral.

    All channels share the same rows (one row per kappa). Returns the
    per-row trace and the number of integrand evaluations.
    """
    rows = chans[0].weight.size
    total = np.zeros(rows)
    evals = 0
    for diag in enumerate_diagrams(p):
        for choice in itertools.product(range(len(chans)), repeat=len(diag.edges)):
            w = np.full(rows, float(diag.weight))
            factors = [np.broadcast_to(sigma, (rows, sigma.size)).copy() for _ in range(p)]
            rates = np.zeros((rows, p - 1))
            for (i, j), ci in zip(diag.edges, choice):
                ch = chans[ci]
                w = w * ch.weight
                factors[i] = factors[i] * ch.upper
                factors[j] = factors[j] * ch.lower
                rates[:, i:j] += ch.rate[:, None]
            total += w * _chain(grid, rates, factors)
            evals += rows * grid.t.size * p
    return total, evals


# --- separable reduction -------------------------------------------------------


@dataclass(frozen=True)
class _Ladder:
    """kappa_m = step (m + offset), m >= 1, each with ``mult`` modes."""

    step: float
    offset: float
    mult: int
    zero: bool

    def kappa(self, m):
        return self.step * (np.asarray(m, dtype=float) + self.offset)


def _ladder(family: KernelFamily, L: float) -> _Ladder:
    pi = math.pi
    if family is KernelFamily.DIRICHLET:
        return _Ladder(pi / L, 0.0, 1, False)
    if family is KernelFamily.NEUMANN:
        return _Ladder(pi / L, 0.0, 1, True)
    if family is KernelFamily.PERIODIC:
        return _Ladder(2 * pi / L, 0.0, 2, True)
    return _Ladder(pi / L, -0.5, 1, False)


class _TraceEvaluator:
    """Per-mode trace T(kappa) = Tr (g_kappa Sigma)^p along the ordered axis."""

    def __init__(self, p, family, L, profile, quad, chunk=48):
        self.p, self.family, self.L, self.quad, self.chunk = p, family, L, quad, chunk
        self.lo, self.hi = -L / 2, L / 2
        self.profile = profile
        self.evals = 0
        # rate scale of the density itself
        tt = np.linspace(self.lo, self.hi, 513)
        s = np.asarray(profile(tt), dtype=float)
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise DomainError("density profile must be finite and positive")
        self.log_slope = float(np.max(np.abs(np.gradient(np.log(s), tt))))

    def _grid(self, kmax):
        rate = max(self.p * kmax, 2 * kmax, 8 * self.log_slope / self.quad.points_per_axis)
        return _make_grid(self.lo, self.hi, rate, self.quad)

    def zero(self, weighted: bool = True) -> float:
        grid = self._grid(0.0)
        sigma = np.asarray(self.profile(grid.t), dtype=float)
        if weighted:
            chans = _weighted_zero_channels(self.family, self.L, grid, sigma)
        else:
            chans = _zero_channels(self.family, self.L, grid.t)
        val, ev = _diagram_sum(self.p, grid, sigma, chans)
        self.evals += ev
        return float(val[0])

    def __call__(self, kappa) -> np.ndarray:
        kappa = np.asarray(kappa, dtype=float)
        out = np.empty(kappa.size)
        order = np.argsort(kappa)
        for s in range(0, kappa.size, self.chunk):
            idx = order[s:s + self.chunk]
            kc = kappa[idx]
            grid = self._grid(float(kc.max()))
            sigma = np.asarray(self.profile(grid.t), dtype=float)
            val, ev = _diagram_sum(self.p, grid, sigma, _channels(self.family, self.L, kc, grid.t))
            self.evals += ev
            out[idx] = val
        return out


def _fit_tail(T: _TraceEvaluator, p: int, K: float, degree: int = 7, samples: int = 16):
    """Fit T(kappa) kappa^{2p-1} as a polynomial in u = 1/kappa on kappa in [K, 8K].

    Returns (coefficient lists for degree and degree - 2, fit residual).
    """
    u_max = 1.0 / K
    a, b = u_max / 8, u_max
    j = np.arange(samples)
    u = (a + b) / 2 + (b - a) / 2 * np.cos(np.pi * (j + 0.5) / samples)
    y = T(1.0 / u) * u ** (1 - 2 * p)
    fits = []
    for deg in (degree, degree - 2):
        cheb = Chebyshev.fit(u, y, deg, domain=[0.0, u_max])
        fits.append(cheb.convert(kind=Polynomial).coef)
    cheb = Chebyshev.fit(u, y, degree, domain=[0.0, u_max])
    resid = float(np.max(np.abs(cheb(u) - y)))
    return fits, resid


def _hurwitz_tail(coef, p, ladder: _Ladder, m_first: int) -> float:
    """sum_{m >= m_first} mult * sum_j coef_j kappa_m^{-(2p-1+j)}."""
    total = 0.0
    for jj, a in enumerate(coef):
        s = 2 * p - 1 + jj
        total += a * ladder.step ** (-s) * sp.zeta(s, m_first + ladder.offset)
    return ladder.mult * total


def _cutoff(L_t: float, kappa_first: float, log_slope: float) -> float:
    return max(30.0 / L_t, 30.0 * (log_slope + 1.0), 3.0 * kappa_first)


def zeta_separable(p: int, bc, rect: Rect, profile: Callable, axis: str,
                   trunc: TruncationPolicy | None = None,
                   quad: QuadPolicy | None = None,
                   zero_mode: str = "spectral") -> SumRuleResult:
    """Sum rule for a density that depends on one coordinate only.

    ``axis`` is ``"x_only"`` or ``"y_only"``: the coordinate on which the
    density ``profile`` depends. That coordinate becomes the ordered
    integration axis; the other one supplies the longitudinal modes.
    ``zero_mode`` is described in :func:`zeta_general`.
    """
    _check_order(p)
    _check_zero_mode(zero_mode)
    bc = BCPair.parse(bc)
    trunc = trunc or TruncationPolicy()
    quad = quad or QuadPolicy()
    fx, fy = bc.families
    if axis in ("x_only", "x"):
        fam_t, L_t, fam_h, L_h = fx, rect.a, fy, rect.b
    elif axis in ("y_only", "y"):
        fam_t, L_t, fam_h, L_h = fy, rect.b, fx, rect.a
    else:
        raise ValueError(f"axis must be x_only or y_only, got {axis!r}")
    T = _TraceEvaluator(p, fam_t, L_t, profile, quad)
    ladder = _ladder(fam_h, L_h)
    k1 = float(ladder.kappa(1))
    K = _cutoff(L_t, k1, T.log_slope)
    # explicit modes: kappa_m <= K
    m_last = max(1, int(math.floor(K / ladder.step - ladder.offset)))
    if m_last * ladder.mult > trunc.max_modes:
        raise NonConvergenceError(f"needs {m_last * ladder.mult} explicit modes "
                                  f"(> max_modes={trunc.max_modes})")
    K = float(ladder.kappa(m_last))
    ms = np.arange(1, m_last + 1)
    explicit_terms = T(ladder.kappa(ms))
    explicit = ladder.mult * float(np.sum(explicit_terms[::-1]))
    modes = m_last * ladder.mult
    zero_val = 0.0
    if ladder.zero:
        zero_val = T.zero(weighted=zero_mode == "spectral")
        modes += 1
    # quadrature check: recompute the first and last explicit modes on finer panels
    fine = _TraceEvaluator(p, fam_t, L_t, profile,
                           QuadPolicy(min(quad.points_per_axis + 8, 128), quad.subdivisions * 2,
                                      quad.rel_tol))
    kk = ladder.kappa(np.array([1, m_last]))
    quad_err = float(np.max(np.abs(fine(kk) - explicit_terms[[0, -1]]))) * modes
    # asymptotic tail beyond K
    (coef_a, coef_b), resid = _fit_tail(T, p, K)
    tail = _hurwitz_tail(coef_a, p, ladder, m_last + 1)
    tail_b = _hurwitz_tail(coef_b, p, ladder, m_last + 1)
    envelope = ladder.mult * ladder.step ** (1 - 2 * p) * sp.zeta(2 * p - 1, m_last + 1 + ladder.offset)
    tail_err = abs(tail - tail_b) + resid * envelope
    if trunc.tail_model == "none":
        tail_used, tail_err = 0.0, abs(tail) + tail_err
    else:
        tail_used = tail
    value = zero_val + explicit + tail_used
    err = quad_err + tail_err + 4 * np.finfo(float).eps * abs(value) * math.sqrt(modes)
    if err > trunc.rel_tol * abs(value) and err > quad.rel_tol * abs(value):
        log.info("sum rule p=%d: error estimate %.3g exceeds requested tolerance", p, err)
    return SumRuleResult(float(value), float(err), int(modes), int(T.evals + fine.evals),
                         {"cutoff": K, "tail": tail, "quad_error": quad_err,
                          "tail_error": tail_err, "zero_mode": zero_val})


ZERO_MODE_CHOICES = ("spectral", "unweighted")


def _check_zero_mode(zero_mode):
    if zero_mode not in ZERO_MODE_CHOICES:
        raise ValueError(f"zero_mode must be one of {ZERO_MODE_CHOICES}, got {zero_mode!r}")


def _check_order(p):
    if int(p) != p or p < 2:
        raise OrderError(f"sum rules need an integer order p >= 2, got {p}")
    if p > MAX_DIAGRAM_ORDER:
        raise OrderError(f"order {p} exceeds {MAX_DIAGRAM_ORDER}")


# --- non-separable densities ---------------------------------------------------


def _x_modes(family: KernelFamily, a: float, M: int):
    """The M + (zero mode) lowest x-modes as (ModeIndex, kappa) pairs."""
    idx = basis1d.mode_indices(family, M)
    pairs = [(i, math.sqrt(basis1d.eigenvalue_1d(family, a, i))) for i in idx]
    pairs.sort(key=lambda z: z[1])
    zero = [z for z in pairs if z[1] == 0]
    rest = [z for z in pairs if z[1] > 0][:M]
    return zero + rest


def _expansion_value(p, bc: BCPair, rect: Rect, sigma: Density2, M: int, quad: QuadPolicy,
                     weighted: bool = True):
    fx, fy = bc.families
    modes = _x_modes(fx, rect.a, M)
    kap = np.array([k for _, k in modes])
    nm = len(modes)
    # x-integrals S_qr(y) = int psi_q psi_r Sigma dx on a composite rule
    xp = max(8, nm // 2)
    xg = _make_grid(-rect.a / 2, rect.a / 2, 0.0, QuadPolicy(16, xp))
    psi = np.array([basis1d.eigenfunction_1d(fx, rect.a, i, xg.t) for i, _ in modes])  # (nm, nx)
    grid = _make_grid(-rect.b / 2, rect.b / 2, p * max(kap.max(), 1e-12), quad)
    X, Y = np.meshgrid(xg.t, grid.t, indexing="ij")
    sig = np.asarray(sigma(X, Y), dtype=float)                  # (nx, ny)
    if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
        raise DomainError("density must be finite and positive")
    Sxy = np.einsum("qi,ri,i,iy->qry", psi, psi, xg.w, sig)     # (nm, nm, ny)
    # channels: (mode at the upper end, mode at the lower end, kernel term)
    chan_hi, chan_lo, chans = [], [], []
    per_mode = []
    for q, k in enumerate(kap):
        if k == 0:
            cs = _zero_channels(fy, rect.b, grid.t)
        else:
            cs = _channels(fy, rect.b, np.array([k]), grid.t)
        per_mode.append(cs)
        for c in cs:
            chan_hi.append(q)
            chan_lo.append(q)
            chans.append(c)
    if weighted and fx.has_zero_mode and fy.has_zero_mode and sigma.constant is None:
        # project the E = 0 mode out in the Sigma-weighted inner product:
        # G_S = G_0 - U(R) - U(R') + C with U = (1/M) int G_0 Sigma
        ra = math.sqrt(rect.a)
        mass = rect.a * float(Sxy[0, 0] @ grid.w)
        one = np.ones((1, grid.t.size))
        us = [ra * _apply_kernel(grid, per_mode[q], ra * Sxy[q, 0]) / mass for q in range(nm)]
        cval = sum(float((u * ra * Sxy[q, 0]) @ grid.w) for q, u in enumerate(us)) / mass
        for q, u in enumerate(us):
            chan_hi += [q, 0]
            chan_lo += [0, q]
            chans += [_Channel(np.array([-1.0]), np.zeros(1), one, ra * u[None, :]),
                      _Channel(np.array([-1.0]), np.zeros(1), ra * u[None, :], one)]
        chan_hi.append(0)
        chan_lo.append(0)
        chans.append(_Channel(np.array([cval * rect.a]), np.zeros(1), one, one))
    chan_hi = np.array(chan_hi)
    chan_lo = np.array(chan_lo)
    C = len(chans)
    W = np.array([c.weight[0] for c in chans])
    R = np.array([c.rate[0] for c in chans])
    LO = np.vstack([c.lower for c in chans])
    UP = np.vstack([c.upper for c in chans])
    total = 0.0
    evals = 0
    block = max(1, 200_000 // grid.t.size)
    for diag in enumerate_diagrams(p):
        ne = len(diag.edges)
        # the two edges meeting at each vertex
        inc = [[e for e, ed in enumerate(diag.edges) if v in ed] for v in range(p)]
        n_rows = C ** ne
        for start in range(0, n_rows, block):
            rid = np.arange(start, min(n_rows, start + block))
            pick = np.array(np.unravel_index(rid, (C,) * ne))      # (ne, rows)
            w = np.full(rid.size, float(diag.weight))
            rates = np.zeros((rid.size, p - 1))
            factors = [np.ones((rid.size, grid.t.size)) for _ in range(p)]
            for e, (i, j) in enumerate(diag.edges):
                ce = pick[e]
                w = w * W[ce]
                factors[i] = factors[i] * UP[ce]
                factors[j] = factors[j] * LO[ce]
                rates[:, i:j] += R[ce][:, None]
            for v in range(p):
                qs = [chan_hi[pick[e]] if diag.edges[e][0] == v else chan_lo[pick[e]]
                      for e in inc[v]]
                factors[v] = factors[v] * Sxy[qs[0], qs[1]]
            total += float(np.sum(w * _chain(grid, rates, factors)))
            evals += rid.size * grid.t.size * p
    return total, evals, nm


def zeta_general(p: int, bc, rect: Rect, sigma: Density2,
                 trunc: TruncationPolicy | None = None, quad: QuadPolicy | None = None,
                 method: str = "auto", x_modes: int = 16,
                 zero_mode: str = "spectral") -> SumRuleResult:
    """Sum rule Z(p) for a density on the rectangle.

    With ``method="auto"`` a density that depends on one coordinate only is
    passed to :func:`zeta_separable`. Otherwise (or with
    ``method="expansion"``) the Green's function is expanded over
    ``x_modes`` x-modes; the x-integrals of mode pairs against Sigma become
    vertex factors of a mode-labelled cycle, and the result is extrapolated
    in the mode count using the algebraic M^{2-2p} decay of the remainder.

    For NN, NP and PP the E = 0 mode is excluded. With
    ``zero_mode="spectral"`` it is projected out in the Sigma-weighted inner
    product, so the result is the sum over the actual nonzero spectrum.
    ``zero_mode="unweighted"`` keeps the unweighted pseudo-inverse kernel
    unchanged; for a non-uniform density this is not a spectral sum (for
    the Neumann annulus it grows like log^2 r_min as the hole shrinks). The
    two agree when Sigma is constant.
    """
    _check_order(p)
    _check_zero_mode(zero_mode)
    bc = BCPair.parse(bc)
    quad = quad or QuadPolicy()
    if method not in ("auto", "expansion"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and sigma.separable_axis != "none":
        return zeta_separable(p, bc, rect, sigma.profile, sigma.separable_axis, trunc, quad,
                              zero_mode)
    if x_modes < 3:
        raise ValueError("x_modes must be >= 3")
    M1, M2 = int(x_modes), max(2, (2 * int(x_modes)) // 3)
    weighted = zero_mode == "spectral"
    z1, ev1, used = _expansion_value(p, bc, rect, sigma, M1, quad, weighted)
    z2, ev2, _ = _expansion_value(p, bc, rect, sigma, M2, quad, weighted)
    alpha = 2 * p - 2
    tail = (z1 - z2) * M1 ** (-alpha) / (M2 ** (-alpha) - M1 ** (-alpha))
    value = z1 + tail
    err = abs(tail) + 1e-14 * abs(value)
    return SumRuleResult(float(value), float(err), int(used), int(ev1 + ev2),
                         {"unextrapolated": z1, "coarse": z2})


# --- three-dimensional Dirichlet box ------------------------------------------


def _epstein(s: float, q1: float, q2: float, bessel_terms: int = 40) -> float:
    """sum_{n1, n2 >= 1} ((q1 n1)^2 + (q2 n2)^2)^{-s/2} by the Chowla-Selberg formula.

    The inner sum over n2 at fixed c = q1 n1 is
    1/2 [ (sqrt(pi) Gamma(nu-1/2) / (q2 Gamma(nu))) c^{1-2nu} - c^{-2nu}
          + (4 sqrt(pi) / (q2 Gamma(nu))) sum_k (pi k / (q2 c))^{nu-1/2} K_{nu-1/2}(2 pi k c / q2) ]
    with nu = s/2; the outer sums of the first two terms are Riemann zeta values.
    """
    nu = s / 2
    if q1 < q2:
        q1, q2 = q2, q1  # Bessel terms decay like exp(-2 pi k n1 q1 / q2)
    g = math.gamma(nu)
    first = math.sqrt(math.pi) * math.gamma(nu - 0.5) / (q2 * g) * q1 ** (1 - 2 * nu) * sp.zeta(2 * nu - 1)
    second = -q1 ** (-2 * nu) * sp.zeta(2 * nu)
    n1 = np.arange(1, bessel_terms + 1, dtype=float)[:, None]
    k = np.arange(1, bessel_terms + 1, dtype=float)[None, :]
    c = q1 * n1
    arg = 2 * math.pi * k * c / q2
    bes = (math.pi * k / (q2 * c)) ** (nu - 0.5) * sp.kv(nu - 0.5, arg)
    third = 4 * math.sqrt(math.pi) / (q2 * g) * float(np.sum(bes))
    return 0.5 * (first + second + third)


def zeta_box3_separable(p: int, dims, profile: Callable | None = None,
                        trunc: TruncationPolicy | None = None,
                        quad: QuadPolicy | None = None) -> SumRuleResult:
    """Dirichlet sum rule of a box whose density varies along axis 3 only.

    Double series over the transverse modes (n1, n2) with
    kappa^2 = (n1 pi/a1)^2 + (n2 pi/a2)^2; modes with kappa above a cutoff
    are summed from the fitted per-mode asymptotics with Epstein sums.
    """
    _check_order(p)
    trunc = trunc or TruncationPolicy()
    quad = quad or QuadPolicy()
    dims = tuple(float(d) for d in dims)
    if len(dims) != 3 or min(dims) <= 0:
        raise DomainError("dims must be three positive lengths")
    a1, a2, a3 = dims
    if profile is None:
        profile = lambda t: np.ones_like(np.asarray(t, dtype=float))
    T = _TraceEvaluator(p, KernelFamily.DIRICHLET, a3, profile, quad)
    q1, q2 = math.pi / a1, math.pi / a2
    K = _cutoff(a3, math.hypot(q1, q2), T.log_slope)
    n1 = np.arange(1, int(K / q1) + 2)[:, None]
    n2 = np.arange(1, int(K / q2) + 2)[None, :]
    gam = (q1 * n1) ** 2 + (q2 * n2) ** 2
    gam = gam[gam <= K * K]
    if gam.size > trunc.max_modes:
        raise NonConvergenceError(f"needs {gam.size} explicit modes (> max_modes)")
    uniq, counts = np.unique(np.round(gam, 10), return_counts=True)
    kap = np.sqrt(uniq)
    vals = T(kap)
    explicit = float(np.sum((counts * vals)[::-1]))
    (coef_a, coef_b), resid = _fit_tail(T, p, K)

    def tail_of(coef):
        tot = 0.0
        for jj, a in enumerate(coef):
            s = 2 * p - 1 + jj
            tot += a * (_epstein(s, q1, q2) - float(np.sum(counts * kap ** (-s))))
        return tot

    tail, tail_b = tail_of(coef_a), tail_of(coef_b)
    envelope = _epstein(2 * p - 1, q1, q2) - float(np.sum(counts * kap ** (1 - 2 * p)))
    tail_err = abs(tail - tail_b) + resid * abs(envelope)
    if trunc.tail_model == "none":
        value, tail_err = explicit, abs(tail) + tail_err
    else:
        value = explicit + tail
    err = tail_err + 8 * np.finfo(float).eps * abs(value) * math.sqrt(gam.size)
    return SumRuleResult(float(value), float(err), int(gam.size), int(T.evals),
                         {"cutoff": K, "tail": tail})
