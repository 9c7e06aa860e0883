from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vankalfa.fem import cell_layout, reference_element

DISCS = ("P2P1", "Q2Q1")
fracs = st.fractions(min_value=0, max_value=1, max_denominator=12)


@pytest.mark.parametrize("disc", DISCS)
def test_nodal_basis_is_kronecker(disc):
    ref = reference_element(disc)
    for basis, nodes in ((ref.vbasis, ref.vnodes), (ref.pbasis, ref.pnodes)):
        for i, phi in enumerate(basis):
            for j, node in enumerate(nodes):
                assert phi(*node) == (1 if i == j else 0)


@pytest.mark.parametrize("disc", DISCS)
@given(x=fracs, y=fracs)
def test_partition_of_unity(disc, x, y):
    ref = reference_element(disc)
    if ref.shape == "triangle" and x + y > 1:
        return
    assert sum(phi(x, y) for phi in ref.vbasis) == 1
    assert sum(phi(x, y) for phi in ref.pbasis) == 1


@pytest.mark.parametrize("disc", DISCS)
def test_stiffness_rows_sum_to_zero(disc):
    A = reference_element(disc).stiff_array()
    lap = A[0, 0] + A[1, 1]
    assert abs(lap.sum(axis=1)).max() < 1e-13
    assert abs(lap - lap.T).max() < 1e-13


def test_layout_counts():
    assert len(cell_layout("P2P1")) == 2
    assert len(cell_layout("Q2Q1")) == 1


def test_unknown_discretization():
    with pytest.raises(ValueError):
        reference_element("P3P2")


def test_exact_rational_entries():
    A = reference_element("P2P1").stiff
    assert all(isinstance(v, Fraction) for blk in A for ra in blk for row in ra for v in row)


@pytest.mark.parametrize("disc", DISCS)
def test_divergence_of_constant_pressure(disc):
    # sum_i q_i = 1, so the mixed rows sum to the integral of each basis derivative
    ref = reference_element(disc)
    B = ref.mixed_array()
    assert B.shape == (2, ref.np_, ref.nv)
    assert abs(B.sum(axis=(1, 2))).max() < 1e-13
