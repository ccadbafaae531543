"""Green's functions of the negative Laplacian on rectangles and boxes.

Each 2D Green's function is assembled as a longitudinal mode sum over one
axis with the closed-form transverse kernel along the other axis. The
eight boundary assemblies are named by the x-axis family followed by the
y-axis family (``NDP``: Neumann at x=-a/2, Dirichlet at x=+a/2, periodic
in y).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import basis1d
from .basis1d import KernelFamily
from .errors import DiagonalPointError, DomainError, NonConvergenceError


class BCPair(str, enum.Enum):
    DD = "DD"
    NN = "NN"
    DN = "DN"
    PP = "PP"
    DP = "DP"
    NP = "NP"
    NDP = "NDP"
    DNP = "DNP"

    @classmethod
    def parse(cls, value) -> "BCPair":
        return value if isinstance(value, cls) else cls(str(value).upper())

    @property
    def families(self) -> tuple[KernelFamily, KernelFamily]:
        """(x-axis family, y-axis family)."""
        F = KernelFamily
        return {
            "DD": (F.DIRICHLET, F.DIRICHLET),
            "NN": (F.NEUMANN, F.NEUMANN),
            "DN": (F.DIRICHLET, F.NEUMANN),
            "PP": (F.PERIODIC, F.PERIODIC),
            "DP": (F.DIRICHLET, F.PERIODIC),
            "NP": (F.NEUMANN, F.PERIODIC),
            "NDP": (F.NEUMANN_DIRICHLET, F.PERIODIC),
            "DNP": (F.DIRICHLET_NEUMANN, F.PERIODIC),
        }[self.value]

    @property
    def has_zero_mode(self) -> bool:
        fx, fy = self.families
        return fx.has_zero_mode and fy.has_zero_mode


@dataclass(frozen=True)
class Rect:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError(f"rectangle sides must be positive, got {self.a} x {self.b}")

    @property
    def area(self) -> float:
        return self.a * self.b


@dataclass(frozen=True)
class TruncationPolicy:
    max_modes: int = 200_000
    rel_tol: float = 1e-13
    tail_model: str = "geometric"

    def __post_init__(self):
        if not 1e-15 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (1e-15, 1)")
        if not 0 < self.max_modes <= 10**7:
            raise ValueError("max_modes must lie in [1, 1e7]")
        if self.tail_model not in ("geometric", "none"):
            raise ValueError(f"unknown tail model {self.tail_model!r}")


@dataclass(frozen=True)
class GreenValue:
    value: float
    tail_bound: float
    modes_used: int
    axis: str


def _inside(rect: Rect, p) -> None:
    x, y = p
    tol = 1e-12
    if abs(x) > rect.a / 2 * (1 + tol) or abs(y) > rect.b / 2 * (1 + tol):
        raise DomainError(f"point {p} outside the rectangle {rect.a} x {rect.b}")


def _separation(family: KernelFamily, L: float, u: float, v: float) -> float:
    d = abs(u - v)
    if family is KernelFamily.PERIODIC:
        d = min(d, L - d)
    return d


def _mode_sum(mode_family, L_mode, kern_family, L_kern, u, up, v, vp, trunc: TruncationPolicy):
    """Sum over modes of ``mode_family`` in coordinate u, kernel along v."""
    delta = _separation(kern_family, L_kern, v, vp)
    total = 0.0
    used = 0
    if mode_family.has_zero_mode:
        zero = kern_family.has_zero_mode
        g0 = basis1d.transverse_kernel(kern_family, L_kern, 0.0, v, vp, zero_mode=zero)
        total += g0 / L_mode
        used += 1
    k1, step, per_n = basis1d.mode_ladder(mode_family, L_mode)
    n_lo, block = 1, 64
    tail = math.inf
    while True:
        n_hi = n_lo + block
        ev, pr = basis1d.mode_block(mode_family, L_mode, u, up, n_lo, n_hi)
        g = basis1d.kernel_many(kern_family, L_kern, ev, v, vp)
        total += float(np.sum(pr * g))
        used += ev.size
        # remaining modes: |phi phi'| <= 2/L, kernel <= 4 exp(-kappa delta)/(2 kappa (1-exp(-kappa L)))
        k_next = k1 + step * (n_hi - 1)
        if delta > 0:
            denom = -math.expm1(-k_next * L_kern)
            geo = -math.expm1(-step * delta)
            tail = (per_n * (2 / L_mode) * 4 * 2 * math.exp(-k_next * delta)
                    / (2 * k_next * denom * geo))
        if tail <= trunc.rel_tol * max(abs(total), 1e-300):
            return total, tail, used
        if used >= trunc.max_modes:
            raise NonConvergenceError(f"Green's mode sum not converged after {used} modes "
                                      f"(tail bound {tail:.3g})")
        n_lo = n_hi
        block = min(2 * block, 8192)


def green_with_error(bc, rect: Rect, R, Rp, trunc: TruncationPolicy | None = None,
                     axis: str | None = None) -> GreenValue:
    """Green's function value together with its truncation bound.

    ``axis`` names the axis whose eigenmodes are summed (``"x"`` or ``"y"``).
    By default the x-modes are summed when a <= b, unless the separation
    along the kernel axis is too small to give geometric decay, in which case
    the axis with the faster per-mode decay is used.
    """
    bc = BCPair.parse(bc)
    trunc = trunc or TruncationPolicy()
    _inside(rect, R)
    _inside(rect, Rp)
    fx, fy = bc.families
    (x, y), (xp, yp) = R, Rp
    dx = _separation(fx, rect.a, x, xp)
    dy = _separation(fy, rect.b, y, yp)
    if dx == 0 and dy == 0:
        raise DiagonalPointError("Green's function diverges logarithmically at coincident points")
    if axis is None:
        default = "x" if rect.a <= rect.b else "y"
        # decay per mode: exp(-pi * separation / mode-axis length)
        rate_x = dy / rect.a
        rate_y = dx / rect.b
        axis = default
        best = "x" if rate_x >= rate_y else "y"
        if (rate_x if default == "x" else rate_y) < 0.5 * max(rate_x, rate_y):
            axis = best
    if axis == "x":
        if dy == 0:
            raise NonConvergenceError("x-mode expansion needs distinct y coordinates")
        val, tail, used = _mode_sum(fx, rect.a, fy, rect.b, x, xp, y, yp, trunc)
    elif axis == "y":
        if dx == 0:
            raise NonConvergenceError("y-mode expansion needs distinct x coordinates")
        val, tail, used = _mode_sum(fy, rect.b, fx, rect.a, y, yp, x, xp, trunc)
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return GreenValue(val, tail, used, axis)


def green(bc, rect: Rect, R, Rp, trunc: TruncationPolicy | None = None,
          axis: str | None = None) -> float:
    """2D Green's function G(R, R') for boundary assembly ``bc``.

    Symmetric under ``R <-> R'`` by construction: the mode products and the
    transverse kernel (which sorts its arguments) are both symmetric.
    """
    return green_with_error(bc, rect, R, Rp, trunc, axis).value


def green_dirichlet_product(rect: Rect, R, Rp, J_terms: int = 4) -> float:
    """Dirichlet Green's function from the image-sum log-product form.

    Each factor j contributes ``log(Omega_j / Theta_j) / (4 pi)``; successive
    factors approach 1 like ``exp(-2 pi b j / a)``.
    """
    _inside(rect, R)
    _inside(rect, Rp)
    a, b = rect.a, rect.b
    (x1, y1), (x2, y2) = R, Rp
    if x1 == x2 and y1 == y2:
        raise DiagonalPointError("Theta_0 vanishes at coincident points")
    xm, xp_ = x1 - x2, x1 + x2
    ym, yp_ = abs(y1 - y2), y1 + y2
    cm = math.cos(math.pi * xm / a)
    cp = math.cos(math.pi * xp_ / a)
    total = 0.0
    for j in range(J_terms):
        args = (math.pi * (2 * b * j + b - yp_) / a,
                math.pi * (2 * b * j + b + yp_) / a,
                math.pi * (2 * b * (j + 1) - ym) / a,
                math.pi * (ym + 2 * b * j) / a)
        # log((cosh A - c1)/(cosh A + c2)) evaluated without overflow
        total += (_log_cosh_shift(args[0], -cm) - _log_cosh_shift(args[0], cp)
                  + _log_cosh_shift(args[1], -cm) - _log_cosh_shift(args[1], cp)
                  + _log_cosh_shift(args[2], cp) - _log_cosh_shift(args[2], -cm)
                  + _log_cosh_shift(args[3], cp) - _log_cosh_shift(args[3], -cm))
    return total / (4 * math.pi)


def _log_cosh_shift(A: float, c: float) -> float:
    """log(cosh A + c) for A >= 0 and |c| <= 1."""
    A = abs(A)
    if A < 20:
        v = math.cosh(A) + c
        if v <= 0:
            return -math.inf
        return math.log(v)
    # cosh A + c = e^A/2 * (1 + e^{-2A} + 2 c e^{-A})
    return A - math.log(2) + math.log1p(math.exp(-2 * A) + 2 * c * math.exp(-A))


# --- three-dimensional Dirichlet box --------------------------------------


def green3_dirichlet(dims, R, Rp, trunc: TruncationPolicy | None = None) -> float:
    """Dirichlet Green's function of the box ``prod (-a_i/2, a_i/2)``.

    Double mode sum over the two axes transverse to the axis with the largest
    separation, with the Dirichlet kernel along that axis at
    ``kappa2 = Gamma = (n1 pi/a1)^2 + (n2 pi/a2)^2``. Modes are taken in
    shells of increasing Gamma.
    """
    trunc = trunc or TruncationPolicy()
    dims = tuple(float(d) for d in dims)
    if len(dims) != 3 or min(dims) <= 0:
        raise DomainError("dims must be three positive lengths")
    R = tuple(map(float, R))
    Rp = tuple(map(float, Rp))
    for p in (R, Rp):
        for c, a in zip(p, dims):
            if abs(c) > a / 2 * (1 + 1e-12):
                raise DomainError(f"point {p} outside the box")
    seps = [abs(R[i] - Rp[i]) for i in range(3)]
    if max(seps) == 0:
        raise DiagonalPointError("Green's function diverges at coincident points")
    k_ax = int(np.argmax(seps))
    t_ax = [i for i in range(3) if i != k_ax]
    a1, a2 = dims[t_ax[0]], dims[t_ax[1]]
    a3 = dims[k_ax]
    delta = seps[k_ax]
    # shell radius for the requested tail: (2/pi) exp(-K delta) / delta < tol
    tol = trunc.rel_tol
    scale = 1.0 / (4 * math.pi * max(math.sqrt(sum(s * s for s in seps)), 1e-300))
    K = max(10.0, math.log(2 / (math.pi * delta * tol * scale)) / delta)
    n1max = int(K * a1 / math.pi) + 1
    n2max = int(K * a2 / math.pi) + 1
    if n1max * n2max > trunc.max_modes:
        raise NonConvergenceError(f"3D Green's sum needs {n1max * n2max} modes "
                                  f"(> max_modes={trunc.max_modes})")
    n1 = np.arange(1, n1max + 1)[:, None]
    n2 = np.arange(1, n2max + 1)[None, :]
    gam = (n1 * math.pi / a1) ** 2 + (n2 * math.pi / a2) ** 2
    inside = gam <= K * K
    p1 = (2 / a1) * np.sin(n1 * math.pi * (R[t_ax[0]] + a1 / 2) / a1) \
        * np.sin(n1 * math.pi * (Rp[t_ax[0]] + a1 / 2) / a1)
    p2 = (2 / a2) * np.sin(n2 * math.pi * (R[t_ax[1]] + a2 / 2) / a2) \
        * np.sin(n2 * math.pi * (Rp[t_ax[1]] + a2 / 2) / a2)
    g = basis1d.kernel_many(KernelFamily.DIRICHLET, a3, gam[inside], R[k_ax], Rp[k_ax])
    terms = (p1 * p2)[inside] * g
    order = np.argsort(gam[inside], kind="stable")
    return float(np.sum(terms[order]))
