from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drumsum.errors import OrderError
from drumsum.green2d import Rect
from drumsum.oracle import rectangle_spectrum, zeta_bruteforce
from drumsum.sumrule import (Density2, QuadPolicy, enumerate_diagrams, ordered_integral,
                             zeta_box3_separable, zeta_general, zeta_separable)

# frozen from tests/oracle_scripts/derive_constants.py (theta-function Mellin integrals)
SQUARE_DD = {2: 0.00435667525183772901197, 3: 0.000153304554390091765852,
             4: 6.98530772479353255764e-6}
RECT_1X2_DD_P2 = 0.0138300600961974364171
CUBE_DD = {2: 0.00634671157287856366401, 3: 6.88120772861133779e-5}
BOX_112_DD_P2 = 0.01485609676548824004

ALL_BC = ["DD", "NN", "PP", "DN", "DP", "NP", "NDP", "DNP"]


@pytest.mark.parametrize("n,count", [(2, 1), (3, 1), (4, 3), (5, 12), (6, 60), (7, 360)])
def test_diagram_counts(n, count):
    diags = enumerate_diagrams(n)
    assert len(diags) == count
    assert len({d.cycle for d in diags}) == count
    # weights times diagrams give all (n-1)! orderings of a closed cycle, or 1 pair for n = 2
    assert sum(d.weight for d in diags) == (2 if n == 2 else 2 * n * count)


def test_diagram_edges_cover_each_vertex_twice():
    for d in enumerate_diagrams(6):
        deg = np.zeros(6, int)
        for i, j in d.edges:
            assert i < j
            deg[i] += 1
            deg[j] += 1
        assert np.all(deg == 2)


@pytest.mark.parametrize("n", [1, 10, 2.5])
def test_diagram_order_rejected(n):
    with pytest.raises(OrderError):
        enumerate_diagrams(n)


def test_ordered_integral_examples():
    assert ordered_integral(3, lambda a, b, c: a * b * c, (0.0, 1.0)) == pytest.approx(1 / 48, rel=1e-13)
    assert ordered_integral(4, lambda *t: np.ones_like(t[-1]), (-1.0, 1.0)) == pytest.approx(16 / 24, rel=1e-13)
    v = ordered_integral(2, lambda a, b: np.exp(a - b), (0.0, 1.0), QuadPolicy(24, 2))
    assert v == pytest.approx(math.e - 2, rel=1e-13)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_unit_square_dirichlet_frozen(p):
    res = zeta_general(p, "DD", Rect(1.0, 1.0), Density2.const())
    assert res.value == pytest.approx(SQUARE_DD[p], rel=1e-10)
    assert res.abs_error < 1e-10 * res.value


def test_rectangle_1x2_dirichlet_frozen():
    for rect in (Rect(1.0, 2.0), Rect(2.0, 1.0)):
        assert zeta_general(2, "DD", rect, Density2.const()).value == pytest.approx(
            RECT_1X2_DD_P2, rel=1e-10)


@pytest.mark.parametrize("bc", ALL_BC)
@pytest.mark.parametrize("p", [2, 3])
def test_constant_density_matches_lattice_spectrum(bc, p):
    rect = Rect(1.0, 1.3)
    eng = zeta_general(p, bc, rect, Density2.const())
    ora = zeta_bruteforce(rectangle_spectrum(bc, rect, 4e5), p)
    assert abs(eng.value - ora.value) <= eng.abs_error + ora.abs_error + 1e-14 * ora.value


@settings(max_examples=8, deadline=None)
@given(c=st.floats(0.05, 20.0), p=st.integers(2, 4), bc=st.sampled_from(["DD", "DN", "NP"]))
def test_density_scaling_law(c, p, bc):
    rect = Rect(1.0, 1.4)
    sig = Density2.along("y", lambda y: 1 + 0.4 * np.sin(3 * np.asarray(y)))
    base = zeta_general(p, bc, rect, sig).value
    scaled = zeta_general(p, bc, rect, sig.scaled(c)).value
    assert scaled == pytest.approx(c ** p * base, rel=1e-12)


@pytest.mark.parametrize("bc,p,M", [("DD", 2, 12), ("NN", 2, 12), ("NP", 2, 12), ("DD", 3, 8)])
def test_expansion_agrees_with_separable(bc, p, M):
    rect = Rect(1.0, 1.0)
    sig = Density2.along("y", lambda y: 1 + 0.5 * np.asarray(y))
    sep = zeta_general(p, bc, rect, sig)
    exp = zeta_general(p, bc, rect, sig, method="expansion", x_modes=M)
    assert abs(sep.value - exp.value) <= exp.abs_error + sep.abs_error


def test_separable_axis_choice_is_immaterial():
    prof = lambda t: 1 + 0.3 * np.cos(np.asarray(t))
    a = zeta_separable(2, "DD", Rect(1.0, 1.5), prof, "y_only").value
    b = zeta_separable(2, "DD", Rect(1.5, 1.0), prof, "x_only").value
    assert a == pytest.approx(b, rel=1e-12)


def test_zero_mode_choices():
    rect = Rect(1.0, 1.0)
    const = Density2.const(2.0)
    for bc in ("NN", "NP", "PP"):
        assert zeta_general(2, bc, rect, const).value == pytest.approx(
            zeta_general(2, bc, rect, const, zero_mode="unweighted").value, rel=1e-14)
    sig = Density2.conformal_annulus(0.5)
    a = zeta_general(2, "NP", Rect(-math.log(0.5), 2 * math.pi), sig)
    b = zeta_general(2, "NP", Rect(-math.log(0.5), 2 * math.pi), sig, zero_mode="unweighted")
    # the unweighted projection is not a spectral sum and differs visibly
    assert abs(a.value - b.value) > 1e-5
    with pytest.raises(ValueError):
        zeta_general(2, "NN", rect, const, zero_mode="other")


@pytest.mark.parametrize("p", [1, 10])
def test_order_validation(p):
    with pytest.raises(OrderError):
        zeta_general(p, "DD", Rect(1.0, 1.0), Density2.const())


@pytest.mark.parametrize("bc", ALL_BC)
def test_positive_and_decreasing_in_order(bc):
    rect = Rect(1.0, 1.0)
    sig = Density2.along("y", lambda y: 2 + np.asarray(y))
    vals = [zeta_general(p, bc, rect, sig).value for p in (2, 3, 4)]
    assert all(v > 0 for v in vals)
    # Z(p+1) <= Z(p) / E_1 and E_1 > 1 here, so values shrink
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("p", [2, 3])
def test_unit_cube_frozen(p):
    res = zeta_box3_separable(p, (1.0, 1.0, 1.0))
    assert res.value == pytest.approx(CUBE_DD[p], rel=1e-10)


def test_box_112_frozen():
    assert zeta_box3_separable(2, (1.0, 1.0, 2.0)).value == pytest.approx(BOX_112_DD_P2, rel=1e-10)
    assert zeta_box3_separable(2, (2.0, 1.0, 1.0)).value == pytest.approx(BOX_112_DD_P2, rel=1e-10)


def test_density_validation():
    with pytest.raises(ValueError):
        Density2.const(-1.0)
    with pytest.raises(ValueError):
        Density2.along("z", lambda t: t)
