"""Sum rules (spectral zeta values at integer order) for inhomogeneous drums.

Modules: :mod:`specialfn` (special functions and Bessel zeros),
:mod:`basis1d` (1D eigenbases and transverse kernels), :mod:`green2d`
(rectangle Green's functions), :mod:`sumrule` (the sum-rule engine),
:mod:`closedforms` (annulus and sector closed forms), :mod:`oracle`
(brute-force spectra) and :mod:`cli`.
"""

from __future__ import annotations

from .closedforms import (AnnulusGeom, RadialPower, SectorGeom, annulus_small_hole,
                          annulus_z2_dp_polylog, annulus_z2_dp_series, inhom_annulus_z2,
                          inhom_annulus_z2_asym, sector_zeta)
from .green2d import BCPair, Rect, TruncationPolicy, green, green_with_error
from .oracle import (Spectrum, TailModel, annulus_spectrum, rectangle_spectrum, sector_spectrum,
                     zeta_bruteforce)
from .sumrule import (Density2, QuadPolicy, SumRuleResult, enumerate_diagrams, zeta_box3_separable,
                      zeta_general, zeta_separable)

__version__ = "0.1.0"

__all__ = [
    "AnnulusGeom", "BCPair", "Density2", "QuadPolicy", "RadialPower", "Rect", "SectorGeom",
    "Spectrum", "SumRuleResult", "TailModel", "TruncationPolicy", "annulus_small_hole",
    "annulus_spectrum", "annulus_z2_dp_polylog", "annulus_z2_dp_series", "enumerate_diagrams",
    "green", "green_with_error", "inhom_annulus_z2", "inhom_annulus_z2_asym",
    "rectangle_spectrum", "sector_spectrum", "sector_zeta", "zeta_box3_separable",
    "zeta_bruteforce", "zeta_general", "zeta_separable",
]
