from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vankalfa.patches import (PatchSpec, SingularPatch, WeightScheme, assemble_patch_matrix,
                              build_patch, duplication_matrix, relative_fourier_matrix,
                              vanka_symbol)
from vankalfa.stencils import DofType, assemble_element_matrices

KINDS = [("P2P1", "VKI", 39), ("P2P1", "VKE", 27), ("Q2Q1", "VKI", 51), ("Q2Q1", "VKE", 35)]
angle = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False)


@pytest.mark.parametrize("disc,kind,size", KINDS)
def test_patch_sizes(disc, kind, size):
    p = build_patch(disc, kind)
    assert len(p) == size
    assert p.sites[-1].field == "p"
    nodal = p.counts()[("u1", DofType.N)]
    assert nodal == 1 if kind == "VKE" else nodal > 1


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_patch("P2P1", "VKX")


@pytest.mark.parametrize("disc,kind,size", KINDS)
def test_json_roundtrip(disc, kind, size):
    p = build_patch(disc, kind)
    assert PatchSpec.from_json(p.to_json()) == p


@pytest.mark.parametrize("disc,kind,size", KINDS)
def test_geometric_weights_partition_unity(disc, kind, size):
    p = build_patch(disc, kind)
    V = duplication_matrix(p)
    d = WeightScheme("geometric").diagonal(p)
    assert np.allclose((V.T * d) @ V, np.eye(9))


@pytest.mark.parametrize("disc,kind,size", KINDS)
@given(a=angle, b=angle)
def test_phase_matrix_unitary(disc, kind, size, a, b):
    phi = relative_fourier_matrix(build_patch(disc, kind), np.array([a, b]))
    Phi = np.diag(phi)
    assert np.allclose(Phi.conj().T @ Phi, np.eye(size))


@pytest.mark.parametrize("disc,kind", [("P2P1", "VKI"), ("Q2Q1", "VKE")])
@given(a=angle, b=angle, ax=st.integers(-3, 3), ay=st.integers(-3, 3))
def test_vanka_symbol_anchor_invariant(disc, kind, a, b, ax, ay):
    p = build_patch(disc, kind)
    stn = assemble_element_matrices(disc)
    th = np.array([a, b])
    ref = vanka_symbol(p, "none", stn, th)
    moved = vanka_symbol(p, "none", stn, th, anchor=(Fraction(ax, 2), Fraction(ay, 2)))
    assert np.allclose(ref, moved, atol=1e-10)


def test_vanka_symbol_hermitian_without_weights():
    stn = assemble_element_matrices("P2P1")
    M = vanka_symbol(build_patch("P2P1", "VKI"), "none", stn, np.array([0.2, 1.1]))
    assert np.allclose(M, M.conj().T, atol=1e-12)


def test_patch_matrix_symmetric_and_nonsingular():
    Ki = assemble_patch_matrix(assemble_element_matrices("Q2Q1"), build_patch("Q2Q1", "VKI"))
    assert np.allclose(Ki, Ki.T)
    assert np.linalg.matrix_rank(Ki) == len(Ki)


def test_mismatched_discretization():
    with pytest.raises(ValueError):
        assemble_patch_matrix(assemble_element_matrices("Q2Q1"), build_patch("P2P1", "VKI"))


def test_three_and_five_weight_layout():
    p = build_patch("P2P1", "VKI")
    d3 = WeightScheme("three", (0.1, 0.2, 0.3)).diagonal(p)
    d5 = WeightScheme("five", (1, 2, 3, 4, 5)).diagonal(p)
    for s, v3, v5 in zip(p.sites, d3, d5):
        if s.field == "p":
            assert (v3, v5) == (0.3, 5)
        else:
            assert v3 == (0.1 if s.dof_type is DofType.N else 0.2)
            assert v5 == {"N": 1, "X": 2, "Y": 3, "C": 4}[s.dof_type.name]


@pytest.mark.parametrize("spec,variant", [("none", "none"), ("GEOMETRIC", "geometric"),
                                          ([1, 2, 3], "three"), ((1, 2, 3, 4, 5), "five"),
                                          ({"variant": "three", "values": [1, 1, 1]}, "three")])
def test_weight_parsing(spec, variant):
    assert WeightScheme.parse(spec).variant == variant
    assert WeightScheme.parse(WeightScheme.parse(spec).to_dict()) == WeightScheme.parse(spec)


@pytest.mark.parametrize("bad", ["bogus", [1, 2], [1, 2, 3, 4]])
def test_invalid_weights(bad):
    with pytest.raises(ValueError):
        WeightScheme.parse(bad)


def test_singular_patch_is_reported(monkeypatch):
    import vankalfa.patches as patches
    monkeypatch.setattr(patches, "assemble_patch_matrix", lambda *a, **k: np.zeros((27, 27)))
    with pytest.raises(SingularPatch):
        vanka_symbol(build_patch("P2P1", "VKE"), "none", assemble_element_matrices("P2P1"),
                     np.array([0.1, 0.1]))
