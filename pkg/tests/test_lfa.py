import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from vankalfa import lfa
from vankalfa.analysis import TwoGridLFA, get_model
from vankalfa.patches import build_patch, vanka_symbol
from vankalfa.relaxation import RelaxConfig
from vankalfa.sim import MeshConfig, assemble, extract_patches
from vankalfa.stencils import assemble_element_matrices

low = st.floats(min_value=-np.pi / 2, max_value=np.pi / 2 - 1e-6, allow_nan=False)


def matched_distance(a, b):
    D = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(D)
    return D[r, c].max()


def mesh_frequencies(n):
    m = np.arange(n)
    return np.array([(2 * np.pi * a / n, 2 * np.pi * b / n) for b in m for a in m])


@pytest.mark.parametrize("disc", ["P2P1", "Q2Q1"])
def test_symbol_matches_periodic_matrix(disc):
    n = 8
    system = assemble(MeshConfig(disc, n, "periodic"))
    K = system.K.toarray()
    stn = assemble_element_matrices(disc)
    th = mesh_frequencies(n)
    Ks = lfa.stokes_symbol(stn, th, 1.0 / n)
    assert matched_distance(np.linalg.eigvalsh(K), np.linalg.eigvals(Ks).ravel()) < 1e-8
    M = extract_patches(system, "VKE").additive_operator.toarray()
    Ms = vanka_symbol(build_patch(disc, "VKE"), "none", stn, th, 1.0 / n)
    assert matched_distance(np.linalg.eigvals(M @ K),
                            np.linalg.eigvals(Ms @ Ks).ravel()) < 1e-8


def test_eigvals_against_mpmath():
    stn = assemble_element_matrices("P2P1")
    th = np.array([0.3, -0.7])
    T = vanka_symbol(build_patch("P2P1", "VKI"), "none", stn, th) @ lfa.stokes_symbol(stn, th)
    ev = np.linalg.eigvals(T)
    ref = mpmath.eig(mpmath.matrix(T.tolist()), left=False, right=False)
    ref = np.array([complex(v) for v in ref])
    assert matched_distance(ev, ref) < 1e-10


def test_harmonics_reject_high_frequencies():
    with pytest.raises(ValueError):
        lfa.harmonics(np.array([np.pi / 2, 0.0]))
    h = lfa.harmonics(np.array([0.1, -0.2]))
    assert h.shape == (4, 2)
    assert np.allclose(h[3], [0.1 + np.pi, -0.2 + np.pi])


def test_sampling_grid_is_cell_centred():
    g = lfa.SamplingGrid(4)
    assert np.allclose(g.axis(), [-3 * np.pi / 8, -np.pi / 8, np.pi / 8, 3 * np.pi / 8])
    assert g.thetas().shape == (16, 2)
    assert not np.any(np.all(g.thetas() == 0, axis=1))
    with pytest.raises(ValueError):
        lfa.SamplingGrid(0)


def test_singular_coarse_symbol_at_zero():
    stn = assemble_element_matrices("P2P1")
    with pytest.raises(lfa.SingularCoarseSymbol):
        lfa.cgc_symbol(stn, np.array([[0.0, 0.0]]))


@pytest.mark.parametrize("disc", ["P2P1", "Q2Q1"])
@given(a=low, b=low)
def test_coarse_correction_is_projection(disc, a, b):
    # rediscretised and Galerkin coarse symbols agree, so I - P KH^-1 R K is idempotent
    if abs(a) < 1e-3 and abs(b) < 1e-3:
        return
    stn = assemble_element_matrices(disc)
    th = np.array([[a, b]])
    C = lfa.cgc_symbol(stn, th, eps_sing=0.0)[0]
    G = lfa.cgc_symbol(stn, th, eps_sing=0.0, galerkin=True)[0]
    assert np.allclose(C, G, atol=1e-8)
    assert np.allclose(C @ C, C, atol=1e-8)


def test_interpolation_is_scaled_adjoint():
    stn = assemble_element_matrices("Q2Q1")
    th = np.array([0.4, 0.1])
    R = lfa.restriction_symbol(stn, th)
    P = lfa.interpolation_symbol(stn, th)
    assert np.allclose(P, 0.25 * R.conj().T)


def test_reduced_radii_match_full_error_symbol():
    model = get_model("P2P1", "VKI", 8)
    cfg = RelaxConfig("chebyshev", 2, (0.9, 7.8))
    direct = lfa.spectral_radius(model.error_symbol(cfg))
    assert np.allclose(model.radii(cfg), direct, atol=1e-10)


def test_twogrid_symbol_matches_model():
    stn = assemble_element_matrices("P2P1")
    patch = build_patch("P2P1", "VKE")
    cfg = RelaxConfig("richardson", nu1=1, nu2=1, omega1=0.6, omega2=0.6)
    model = TwoGridLFA("P2P1", "VKE", lfa.SamplingGrid(4), symmetric=False)

    def smoother(thh, Kb):
        S = np.eye(9) - 0.6 * vanka_symbol(patch, "none", stn, thh) @ Kb
        return S, S

    E = lfa.twogrid_symbol(stn, smoother, model.thetas).E
    assert np.allclose(lfa.spectral_radius(E), model.radii(cfg), atol=1e-10)


def test_symmetric_sampling_matches_full_grid():
    cfg = RelaxConfig("chebyshev", 1, (0.3, 6.0))
    full = TwoGridLFA("P2P1", "VKE", lfa.SamplingGrid(8), symmetric=False)
    half = TwoGridLFA("P2P1", "VKE", lfa.SamplingGrid(8), symmetric=True)
    assert half.n == full.n // 2
    _, mirrored = half.full_grid(half.radii(cfg))
    assert np.allclose(mirrored, full.radii(cfg), atol=1e-10)


def test_sampling_refinement_is_stable():
    cfg = RelaxConfig("chebyshev", 1, (0.1, 8.3))
    coarse = TwoGridLFA("P2P1", "VKI", lfa.SamplingGrid(16)).rho(cfg).rho
    fine = TwoGridLFA("P2P1", "VKI", lfa.SamplingGrid(64)).rho(cfg).rho
    assert abs(coarse - fine) < 0.01


def test_result_fields_and_csv(tmp_path):
    model = get_model("P2P1", "VKI")
    res = model.rho(RelaxConfig("chebyshev", 1, (0.1, 8.3)))
    assert abs(res.rho - 0.672) < 0.005
    assert res.excluded == 0
    th, radii = model.full_grid(res.radii)
    lfa.write_radius_csv(tmp_path / "r.csv", th, radii)
    data = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    assert data.shape == (32 * 32, 3)
    assert np.isclose(np.nanmax(data[:, 2]), res.rho)
    lfa.write_eigenvalue_csv(tmp_path / "e.csv", model.eigenvalues_T()[:3])
    assert np.loadtxt(tmp_path / "e.csv", delimiter=",", skiprows=1).shape == (3 * 4 * 9, 2)


def test_symbol_matrix_labels():
    data = np.zeros((2, 9, 9))
    sm = lfa.SymbolMatrix(data, lfa.LABELS, lfa.LABELS)
    assert sm.block(lfa.LABELS[:2], lfa.LABELS[-1:]).shape == (2, 2, 1)
    with pytest.raises(ValueError):
        lfa.SymbolMatrix(data, lfa.LABELS[:3], lfa.LABELS)
