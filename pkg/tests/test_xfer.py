import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cylinder_zeta
from reslab import schottky as S
from reslab import xfer

DELTA = 0.22910432689432642  # eigenvalue root at M = 32, frozen


@pytest.fixture(scope="module")
def pants():
    return S.pants_group(6.0)


@pytest.fixture(scope="module")
def cyl():
    return S.cylinder_group(2.0)


def test_rank_one_block_structure(cyl):
    A = xfer.assemble_transfer(cyl, 0.3 + 1j, 8).matrix
    assert A.shape == (16, 16)
    # disk i may only be fed by branches of letter i itself (j != partner(i))
    assert np.all(A[:8, 8:] == 0) and np.all(A[8:, :8] == 0)
    assert np.any(A[:8, :8] != 0) and np.any(A[8:, 8:] != 0)


def test_a0_row_sums_count_branches(pants, cyl):
    for g in (pants, cyl):
        A = xfer.assemble_transfer(g, 0.0, 12).matrix
        assert np.allclose(A @ np.ones(len(A)), 2 * g.rank - 1, atol=1e-12)


def test_det_refinement_at_half(pants):
    a = abs(xfer.zeta_det(pants, 0.5, 16).value)
    b = abs(xfer.zeta_det(pants, 0.5, 24).value)
    assert abs(a - b) < 1e-8


def test_det_refinement_decays(pants):
    s = 0.3 + 12j
    dets = [xfer.operator(pants, M).det(s) for M in (8, 12, 16, 20)]
    diffs = np.abs(np.diff(dets))
    logs = np.log10(diffs)
    # each refinement step gains at least a factor of two in digits until the floor
    assert logs[1] < logs[0] and logs[2] < logs[1]
    assert diffs[-1] < 1e-9


def test_det_matches_euler_product_deep(pants):
    s = 30.0
    det = xfer.zeta_det(pants, s, 16).value
    prod = xfer.zeta_cycle(pants, s, 8, m_max=5).value
    assert abs(det - prod) < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cylinder_det_vanishes_on_lattice(cyl, k):
    s = 2j * math.pi * k / 2.0
    assert abs(xfer.zeta_det(cyl, s, 24).value) < 1e-10


@pytest.mark.parametrize("s", [0.5, 0.2 + 3j, -0.4 + 1.1j, 2.0 - 5j])
def test_cylinder_closed_form(cyl, s):
    exact = cylinder_zeta(s, 2.0)
    det = xfer.zeta_det(cyl, s, 24).value
    # every factor has word length 1, so the order must cover the elementary symmetric terms
    cyc = xfer.zeta_cycle(cyl, s, 14, m_max=200).value
    assert abs(cyc - exact) < 1e-12
    assert abs(det - exact) < 1e-10 * max(1.0, abs(exact))


def test_det_vanishes_at_delta(pants):
    assert abs(xfer.zeta_det(pants, DELTA, 24).value) < 1e-6


def test_cycle_tends_to_one():
    g = S.pants_group(6.0)
    assert abs(xfer.zeta_cycle(g, 50.0, 6, m_max=2).value - 1) < 1e-12


def test_cycle_argument_checks(pants):
    with pytest.raises(ValueError):
        xfer.zeta_cycle(pants, 0.5, 0)
    with pytest.raises(ValueError):
        xfer.zeta_cycle(pants, 0.5, 4, m_max=-1)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 1.5), st.floats(-20, 20))
def test_reality_symmetry(x, y):
    g = S.pants_group(6.0)
    s = complex(x, y)
    d1, d2 = xfer.operator(g, 16).det(s), xfer.operator(g, 16).det(s.conjugate())
    assert abs(d1 - d2.conjugate()) <= 1e-12 * max(1.0, abs(d1))
    c1 = xfer.zeta_cycle(g, s, 6).value
    c2 = xfer.zeta_cycle(g, s.conjugate(), 6).value
    assert abs(c1 - c2.conjugate()) <= 1e-12 * max(1.0, abs(c1))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 15.0))
def test_method_agreement_within_error_estimates(x, y):
    g = S.pants_group(6.0)
    s = complex(x, y)
    det = xfer.zeta_det(g, s, 24)
    cyc = xfer.zeta_cycle(g, s, 10)
    bound = max(det.error_estimate, cyc.error_estimate)
    assert abs(det.value - cyc.value) <= max(bound, 1e-12)


def test_leading_eigenvalue(pants):
    assert xfer.leading_eigenvalue(pants, DELTA, 24) == pytest.approx(1.0, abs=1e-6)
    lam0 = xfer.leading_eigenvalue(pants, 0.0, 24)
    assert 1.0 <= lam0 <= 3.0
    assert xfer.leading_eigenvalue(pants, 2.0, 24) < 1.0
    grid = [xfer.leading_eigenvalue(pants, s, 16) for s in np.linspace(0, 1.5, 7)]
    assert np.all(np.diff(grid) < 0)


def test_eigenvalue_root_and_first_zero_agree(pants):
    a = xfer.eigenvalue_root(pants, 32)
    b = xfer.first_real_zero(pants, 32)
    assert a == pytest.approx(DELTA, abs=1e-12)
    assert b == pytest.approx(a, abs=1e-9)


def test_choose_m_returns_converged(pants):
    M = xfer.choose_M(pants, [0.5, 0.5 + 10j], tol=1e-10)
    d1 = xfer.operator(pants, M).det(0.5 + 10j)
    d2 = xfer.operator(pants, M + 8).det(0.5 + 10j)
    assert abs(d1 - d2) < 1e-9 * max(1, abs(d2))
