from __future__ import annotations

import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drumsum.closedforms import (DISK_Z2, DISK_Z3, DISK_Z4, SECTOR_EXACT_ANGLES, AnnulusGeom,
                                 RadialPower, SectorGeom, ValidityWarning, annulus_small_hole,
                                 annulus_z2_dp_polylog, annulus_z2_dp_series,
                                 annulus_z2_dp_series_uncorrected, inhom_annulus_z2,
                                 inhom_annulus_z2_asym, sector_zeta, sector_zeta_series,
                                 sector_exact_value)
from drumsum.errors import DomainError, OrderError
from drumsum.green2d import Rect
from drumsum.sumrule import Density2, zeta_general


def engine_annulus(bc, r, p, zero_mode="spectral", density=None):
    rect = Rect(-math.log(r), 2 * math.pi)
    return zeta_general(p, bc, rect, density or Density2.conformal_annulus(r), zero_mode=zero_mode)


def small_hole(case, r):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        return annulus_small_hole(case, r)


@pytest.mark.parametrize("frac", ["1/4", "1/2", "3/4", "1"])
@pytest.mark.parametrize("p", [2, 3, 4])
def test_sector_matches_exact_constants(frac, p):
    phi = SECTOR_EXACT_ANGLES[frac]
    assert sector_zeta(phi, p) == pytest.approx(sector_exact_value(frac, p), rel=1e-12)


@pytest.mark.parametrize("p", [2, 3, 4])
@pytest.mark.parametrize("phi", [0.3, math.pi / 2, 2.5])
def test_sector_matches_order_series(phi, p):
    assert sector_zeta(phi, p) == pytest.approx(sector_zeta_series(phi, p), rel=1e-10)


def test_quarter_disk_value():
    assert sector_zeta(SectorGeom(math.pi / 2), 2) == pytest.approx(math.pi ** 2 / 96 - 3 / 32, rel=1e-13)


def test_sector_validation():
    with pytest.raises(OrderError):
        sector_zeta(1.0, 5)
    with pytest.raises(DomainError):
        SectorGeom(-1.0)
    with pytest.raises(ValueError):
        sector_exact_value("1/3", 2)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_dual_forms_agree(r):
    assert abs(annulus_z2_dp_series(r) - annulus_z2_dp_polylog(r)) < 1e-10


def test_uncorrected_n_series_is_inconsistent():
    # the literal form misses the per-order traces by about 1e-3
    d = annulus_z2_dp_series_uncorrected(0.5) - annulus_z2_dp_series(0.5)
    assert 5e-4 < abs(d) < 5e-3


@pytest.mark.parametrize("r", [0.3, 0.5])
def test_engine_matches_dirichlet_series(r):
    assert engine_annulus("DP", r, 2).value == pytest.approx(annulus_z2_dp_series(r), abs=1e-8)


def test_polylog_small_hole_limit():
    r = 1e-6
    l = math.log(r)
    assert abs(annulus_z2_dp_polylog(r) - (DISK_Z2 + 1 / (16 * l * l) + 5 / (64 * l))) < 1e-8


def test_disk_constants():
    assert DISK_Z2 == pytest.approx(0.04936675836, abs=1e-10)
    assert DISK_Z3 == pytest.approx(0.006030910507, abs=1e-10)
    assert DISK_Z4 == pytest.approx(0.0009438572210, abs=1e-10)


CASES = [("DP2", "DP", 2, "spectral", 2), ("DP3", "DP", 3, "spectral", 2),
         ("DP4", "DP", 4, "spectral", 2), ("NDP2", "NDP", 2, "spectral", 4),
         ("NDP3", "NDP", 3, "spectral", 4), ("NDP4", "NDP", 4, "spectral", 4),
         ("DNP2", "DNP", 2, "spectral", 2), ("NP2", "NP", 2, "unweighted", 2)]


@pytest.mark.parametrize("case,bc,p,zero_mode,k", CASES)
def test_small_hole_expansions_match_engine(case, bc, p, zero_mode, k):
    """The remainder is O(r^{2k} log^2 r) with k = 2 (k = 4 for a Neumann hole)."""
    diffs = []
    for r in (0.05, 0.01):
        d = abs(engine_annulus(bc, r, p, zero_mode).value - small_hole(case, r))
        bound = 4 * r ** (2 * k) * abs(math.log(r)) ** (3 if k == 4 else 2)
        assert d <= bound + 1e-13
        diffs.append(d)
    if diffs[0] > 1e-12:
        assert diffs[1] < diffs[0]


def test_neumann_hole_spectral_limit_is_disk():
    # the spectral Neumann-hole value tends to the Dirichlet disk as r -> 0
    assert engine_annulus("NDP", 0.002, 2).value == pytest.approx(DISK_Z2, abs=1e-4)


def test_small_hole_validity_warning():
    with pytest.warns(ValidityWarning):
        annulus_small_hole("DP2", 0.3)
    with pytest.raises(ValueError):
        annulus_small_hole("XX2", 0.01)


@pytest.mark.parametrize("b", [-1.0, 0.0, 1.0, 2.0])
@pytest.mark.parametrize("r", [0.2, 0.5])
def test_isospectral_pairs(b, r):
    assert inhom_annulus_z2(r, b) == pytest.approx(inhom_annulus_z2(r, -4 - b), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(b=st.floats(-6.0, 2.0), r=st.floats(0.1, 0.8))
def test_isospectral_property(b, r):
    assert inhom_annulus_z2(r, b) == pytest.approx(inhom_annulus_z2(r, -4 - b), rel=1e-10, abs=1e-13)


def test_uniform_density_is_homogeneous_annulus():
    assert inhom_annulus_z2(AnnulusGeom(0.5), RadialPower(0.0)) == pytest.approx(
        annulus_z2_dp_series(0.5), abs=1e-14)


@pytest.mark.parametrize("b", [-2.0, -1.0, 0.5, 1.0])
def test_inhom_matches_engine(b):
    e = engine_annulus("DP", 0.5, 2, density=Density2.power_annulus(b, 0.5)).value
    assert e == pytest.approx(inhom_annulus_z2(0.5, b), abs=1e-10)


def test_inhom_smooth_near_b_minus_two():
    vals = [inhom_annulus_z2(0.4, -2 + d) for d in (-1e-3, -1e-6, 0.0, 1e-6, 1e-3)]
    assert vals[2] == pytest.approx(vals[1], abs=1e-11)
    assert vals[2] == pytest.approx(vals[3], abs=1e-11)
    assert vals[0] == pytest.approx(vals[4], abs=1e-12)


@pytest.mark.parametrize("b", [-1.0, 0.0, -3.0, -1 + 1e-7, 1e-6, -0.95, 0.05, -3 - 1e-9, 2.0 - 1e-8])
def test_inhom_near_removable_singularities(b):
    # (b + 2)^2 in {n^2, 4 n^2}: exact points use symmetric limits, nearby ones extra precision
    e = engine_annulus("DP", 0.5, 2, density=Density2.power_annulus(b, 0.5)).value
    assert inhom_annulus_z2(0.5, b) == pytest.approx(e, abs=1e-13)


def test_b_minus_two_asymptotics_residual_shrinks():
    res = [abs(inhom_annulus_z2(r, -2.0) - inhom_annulus_z2_asym(r)) for r in (1e-3, 1e-4, 1e-5)]
    assert res[0] > res[1] > res[2]
    assert res[2] < 1e-9
