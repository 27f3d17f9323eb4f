import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reslab import billiard as B
from reslab import schottky as S
from reslab import xfer
from reslab import zeros as Z
from reslab.errors import BoundaryZero, EmptyWindow, InsufficientWindows

UNIT = Z.SearchRectangle.from_bounds(-1, 1, -1, 1)


def poly(roots):
    roots = np.asarray(roots, dtype=complex)
    return lambda z: complex(np.prod(z - roots))


def test_rectangle_validation():
    with pytest.raises(ValueError):
        Z.SearchRectangle.from_bounds(1, 1, 0, 1)
    with pytest.raises(ValueError):
        Z.SearchRectangle.from_bounds(0, 1, 2, 1)
    # sampling density never drops below 16 points per unit perimeter
    assert Z.ZeroFinder(lambda z: z, density=8.0).density == 16.0


def test_count_examples():
    assert Z.count_zeros(lambda z: z, UNIT) == 1
    assert Z.count_zeros(lambda z: z * z + 1e-3, UNIT) == 2
    assert Z.count_zeros(lambda z: np.exp(z), UNIT) == 0


def test_boundary_zero_is_reported():
    with pytest.raises(BoundaryZero):
        Z.count_zeros(lambda z: z - 1.0, UNIT)


def test_cylinder_count_around_first_zero():
    op = xfer.operator(S.cylinder_group(2.0), 24)
    s0 = 2j * math.pi / 2.0
    box = Z.SearchRectangle(s0 - (0.2 + 0.2j), s0 + (0.2 + 0.2j))
    # both orientations of the one geodesic are classes, so the closed-form zero is double
    assert Z.count_zeros(op.det, box) == 2


def test_locate_simple_and_multiple():
    res = Z.locate_zeros(poly([0.3 + 0.1j, -0.5j]), UNIT)
    assert res.total == 2
    assert np.allclose(np.sort_complex(res.locations), np.sort_complex([-0.5j, 0.3 + 0.1j]), atol=1e-10)
    res = Z.locate_zeros(poly([0.1, 0.1, -0.3j]), UNIT)
    by_loc = {complex(round(z.location.real, 8), round(z.location.imag, 8)): z.multiplicity
              for z in res.zeros}
    assert by_loc == {0.1 + 0j: 2, -0.3j: 1}
    for z in res.zeros:
        assert z.residual < 1e-10 * z.scale


def _grouped(locations, mults, targets, radius=1e-6):
    """Multiplicity and mean location of the zeros within ``radius`` of each target."""
    out = []
    for t in targets:
        sel = np.abs(locations - t) < radius
        out.append((int(mults[sel].sum()), complex(np.mean(locations[sel])) if sel.any() else None))
    return out


def test_locate_cylinder_closed_form():
    ell = 2.0
    op = xfer.operator(S.cylinder_group(ell), 24)
    top = 3 * 2 * math.pi / ell
    res = Z.locate_zeros(op.det, Z.SearchRectangle.from_bounds(-0.5, 0.5, -0.1, top + 0.1))
    targets = [2j * math.pi * k / ell for k in range(4)]
    assert res.total == 8
    # a double zero may come back as a close pair; its mean is still accurate
    for (mult, mean), t in zip(_grouped(res.locations, res.multiplicities, targets), targets):
        assert mult == 2
        assert abs(mean - t) < 1e-9
    assert all(z.residual < 1e-10 * z.scale for z in res.zeros)


def test_two_disk_first_lattice_zero():
    sys2 = B.two_disk(6.0)
    orbits = B.enumerate_orbits(sys2, 8)
    model = B.ZetaModel(orbits, 8, m_max=1)
    k0 = B.lattice_point(orbits[0], 0, 1)
    box = Z.SearchRectangle(k0 - (0.2 + 0.1j), k0 + (0.2 + 0.1j))
    res = Z.locate_zeros(model, box, plane="k")
    assert res.total == 1
    assert abs(res.locations[0] - k0) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(0.2, 0.8))
def test_partition_conservation(fx, fy):
    rng = np.random.default_rng(7)
    roots = rng.uniform(-0.9, 0.9, 12) + 1j * rng.uniform(-0.9, 0.9, 12)
    F = poly(roots)
    finder = Z.ZeroFinder(F)
    total = finder.count(UNIT)
    try:
        parts = [finder.count(b) for b in UNIT.split(fx, fy)]
    except BoundaryZero:
        return  # a cut passes through a zero; the caller must move it
    assert total == 12 == sum(parts)


def test_partition_conservation_on_determinant():
    op = xfer.operator(S.pants_group(6.0), 24)
    finder = Z.ZeroFinder(op.det)
    rect = Z.SearchRectangle.from_bounds(-0.2, 0.7, 0.0123, 12.0)
    total = finder.count(rect)
    kids = rect.split(0.37, 0.61)
    grandkids = [g for k in kids for g in k.split(0.53, 0.44)]
    assert total > 0
    assert total == sum(finder.count(k) for k in kids) == sum(finder.count(g) for g in grandkids)


def test_locate_is_idempotent(tmp_path):
    op = xfer.operator(S.pants_group(6.0), 24)
    rect = Z.SearchRectangle.from_bounds(-0.2, 0.7, 0.0123, 8.0)
    a, b = Z.locate_zeros(op.det, rect), Z.locate_zeros(op.det, rect)
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.total == Z.count_zeros(op.det, rect)


def test_conjugate_pairs_schottky():
    op = xfer.operator(S.pants_group(6.0), 24)
    res = Z.locate_zeros(op.det, Z.SearchRectangle.from_bounds(-0.2, 0.7, -6.0123, 6.0123))
    loc, mult = res.locations, res.multiplicities
    for z, m in zip(loc, mult):
        partner = np.abs(loc - z.conjugate()) < 1e-10
        assert mult[partner].sum() == m


def test_symmetric_pairs_billiard():
    sys2 = B.two_disk(6.0)
    model = B.ZetaModel(B.enumerate_orbits(sys2, 6), 6, m_max=1)
    res = Z.locate_zeros(model, Z.SearchRectangle.from_bounds(-2.01, 2.03, -1.0, -0.05), plane="k")
    loc = res.locations
    assert len(loc) > 0
    for k in loc:
        assert np.min(np.abs(loc + k.conjugate())) < 1e-10


def test_dictionary():
    f, d = Z.strip_coordinates([0.2 + 5j], "s")
    assert f[0] == 5 and d[0] == pytest.approx(0.3)
    f, d = Z.strip_coordinates([3 - 0.4j], "k")
    assert f[0] == 3 and d[0] == pytest.approx(0.4)
    assert Z.pressure_line(-0.1, "s") == pytest.approx(0.4)
    assert Z.pressure_line(-0.1, "k") == pytest.approx(-0.1)


def _synthetic(counts_at, depth=0.1):
    zs = []
    for T, n in counts_at.items():
        for j in range(n):
            zs.append(Z.Zero(complex(0.5 - depth, T + 0.01 * j), 1, 0.0, 1.0))

    return Z.ResonanceSet(zs)


def test_weyl_fit_synthetic():
    # log-spaced and high enough that rounding T^0.4 barely moves the slope
    centers = np.round(np.geomspace(200.0, 5000.0, 10))
    res = _synthetic({T: int(round(T ** 0.4)) for T in centers})
    fit = Z.weyl_fit(res, 0.5, 1.0, centers)
    assert fit.exponent == pytest.approx(0.40, abs=0.02)
    assert fit.points == sum(fit.counts)


def test_weyl_fit_two_disk_lattice_is_flat():
    orbit = B.enumerate_orbits(B.two_disk(6.0), 2)[0]
    pts = [B.lattice_point(orbit, m, q) for m in range(3) for q in range(1, 200)]
    res = Z.ResonanceSet([Z.Zero(k, 1, 0.0, 1.0) for k in pts], plane="k")
    fit = Z.weyl_fit(res, 1.0, 2.0, np.linspace(10, 100, 8))
    assert abs(fit.exponent) < 0.05


def test_weyl_fit_errors():
    res = _synthetic({10.0: 1, 20.0: 1, 30.0: 1})
    with pytest.raises(InsufficientWindows):
        Z.weyl_fit(res, 1.0, 1.0, [10, 20, 30])
    with pytest.raises(EmptyWindow):
        Z.weyl_fit(res, 1.0, 1.0, [10, 20, 30, 40])


def test_gap_report_cylinder():
    op = xfer.operator(S.cylinder_group(2.0), 24)
    res = Z.locate_zeros(op.det, Z.SearchRectangle.from_bounds(-0.5, 0.5, -0.1, 4.0))
    rep = Z.gap_report(res, delta=0.0)
    assert abs(rep["max_re_s"]) < 1e-9
    assert abs(rep["margin_vs_delta"]) < 1e-9
    assert rep["jakobson_naud"]["conjecture_probe"] is True


def test_gap_report_two_disk():
    sys2 = B.two_disk(6.0)
    orbits = B.enumerate_orbits(sys2, 8)
    model = B.ZetaModel(orbits, 8, m_max=1)
    res = Z.locate_zeros(model, Z.SearchRectangle.from_bounds(0.05, 5.0, -1.0, -0.05), plane="k")
    lam = math.log(orbits[0].jacobian) / orbits[0].period
    rep = Z.gap_report(res, pressure_half=-lam / 2)
    assert rep["observed_gap"] == pytest.approx(lam / 2, abs=1e-6)
    assert abs(rep["margin_vs_pressure"]) < 1e-6


def test_gap_report_rejects_empty():
    with pytest.raises(ValueError):
        Z.gap_report(Z.ResonanceSet([]))
