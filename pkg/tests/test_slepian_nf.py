import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from array_core import DomainError, FocusPoint, field_bounds, nf_steering_fresnel
from metrics import hpbd_limits, hpbw_analytic
from slepian_nf import (
    ConcentrationPair,
    GridSpec,
    build_A,
    build_B,
    clear_matrix_cache,
    concentration_J,
    design_slepian,
    fix_phase,
    generalized_herm_eig,
    mainlobe_region,
    midpoint_nodes,
    random_j_bound,
    slepian_taper,
    total_region,
)
from windows import hamming, hamming_prototype, nf_transform, uniform


def test_mainlobe_region_unit_scale(small_config, small_focus):
    region = mainlobe_region(small_config, small_focus)
    half = 0.5 * math.sin(hpbw_analytic(small_config, 0.0) / 2)
    r_min, r_max = hpbd_limits(small_config, small_focus)
    assert region.omega_min == pytest.approx(-half, rel=1e-12)
    assert region.omega_max == pytest.approx(half, rel=1e-12)
    assert region.r_lo == pytest.approx(r_min, rel=1e-12)
    assert region.r_hi == pytest.approx(r_max, rel=1e-12)
    assert region.clamped == ()


def test_mainlobe_region_steered(small_config):
    focus = FocusPoint(theta_u=0.3, r_f=0.5)
    region = mainlobe_region(small_config, focus)
    assert (region.omega_min + region.omega_max) / 2 == pytest.approx(0.5 * math.sin(0.3), abs=1e-12)


def test_mainlobe_region_clamps_to_wavelength(reference_config, reference_focus):
    region = mainlobe_region(reference_config, reference_focus, k_angle=5, k_range=50)
    assert "r_lo" in region.clamped
    assert region.r_lo == reference_config.wavelength
    assert region.r_hi > reference_focus.r_f


def test_mainlobe_region_enlarges_in_inverse_range(reference_config, reference_focus):
    r_min, r_max = hpbd_limits(reference_config, reference_focus)
    inner = 1 / r_min - 1 / reference_focus.r_f
    assert 1 / reference_focus.r_f - 1 / r_max == pytest.approx(inner, rel=1e-9)
    unit = mainlobe_region(reference_config, reference_focus, enlargement="inverse-range")
    assert (unit.r_lo, unit.r_hi) == (r_min, r_max)

    double = mainlobe_region(reference_config, reference_focus, k_range=2, enlargement="inverse-range")
    assert 1 / double.r_lo - 1 / reference_focus.r_f == pytest.approx(2 * inner, rel=1e-9)
    assert 1 / reference_focus.r_f - 1 / double.r_hi == pytest.approx(2 * inner, rel=1e-9)

    wide = mainlobe_region(reference_config, reference_focus, k_angle=5, k_range=50, enlargement="inverse-range")
    assert wide.clamped == ("r_hi",)
    assert wide.r_hi == field_bounds(reference_config).rayleigh_distance
    assert 1 / wide.r_lo - 1 / reference_focus.r_f == pytest.approx(50 * inner, rel=1e-9)
    assert reference_config.wavelength < wide.r_lo < r_min


def test_inverse_range_enlargement_clamps_to_wavelength(small_config, small_focus):
    region = mainlobe_region(small_config, small_focus, k_range=100, enlargement="inverse-range")
    assert "r_lo" in region.clamped
    assert region.r_lo == small_config.wavelength
    assert "r_lo" not in mainlobe_region(small_config, small_focus, k_range=50, enlargement="inverse-range").clamped


def test_mainlobe_region_errors(small_config, small_focus):
    with pytest.raises(ValueError):
        mainlobe_region(small_config, small_focus, k_angle=0.5)
    with pytest.raises(ValueError):
        mainlobe_region(small_config, small_focus, enlargement="symmetric")
    rayleigh = field_bounds(small_config).rayleigh_distance
    with pytest.raises(DomainError):
        mainlobe_region(small_config, FocusPoint(theta_u=0.0, r_f=rayleigh))


def test_total_region_floor(small_config, small_focus):
    mainlobe = mainlobe_region(small_config, small_focus)
    bounds = field_bounds(small_config)

    adjusted = total_region(small_config, mainlobe)
    assert adjusted.adjusted
    assert adjusted.r_lo == mainlobe.r_lo
    assert adjusted.r_lo == pytest.approx(0.380, abs=0.005)

    strict = total_region(small_config, mainlobe, strict_paper=True)
    assert not strict.adjusted
    assert strict.r_lo == bounds.fresnel_inner
    assert strict.r_lo == pytest.approx(0.756, abs=0.005)

    for region in (adjusted, strict):
        assert (region.omega_min, region.omega_max) == (-0.5, 0.5)
        assert region.r_hi == bounds.rayleigh_distance


def test_midpoint_nodes():
    nodes, widths = midpoint_nodes(0.0, 1.0, 4)
    assert_allclose(nodes, [0.125, 0.375, 0.625, 0.875])
    assert_allclose(widths, 0.25)

    nodes, widths = midpoint_nodes(1.0, 100.0, 50, "logarithmic")
    assert widths.sum() == pytest.approx(99.0, rel=1e-12)
    assert np.all(np.diff(widths) > 0)
    assert np.all(nodes > 1.0) and np.all(nodes < 100.0)
    with pytest.raises(ValueError):
        midpoint_nodes(0.0, 1.0, 4, "cubic")


def test_gram_diagonal_and_symmetry(small_config, small_focus, small_grids):
    grid_a, grid_b = small_grids
    region = mainlobe_region(small_config, small_focus)
    A = build_A(small_config, region, grid_a)
    assert_allclose(np.diag(A).real, region.area / 32, rtol=1e-10)
    assert_array_equal(A, A.conj().T)

    total = total_region(small_config, region)
    B = build_B(small_config, total, grid_b)
    assert_allclose(np.diag(B).real, total.area / 32, rtol=1e-9)
    assert_array_equal(B, B.conj().T)


def test_build_A_and_B_agree_on_same_grid(small_config, small_focus, small_grids):
    grid_a, _ = small_grids
    region = mainlobe_region(small_config, small_focus)
    assert_array_equal(build_A(small_config, region, grid_a), build_B(small_config, region, grid_a))


def test_generalized_eig_diagonal():
    pair = ConcentrationPair(np.diag([2.0, 1.0]), np.diag([1.0, 4.0]))
    result = generalized_herm_eig(pair)
    assert_allclose(result.eigenvalues, [2.0, 0.25], rtol=1e-14)
    lam, v = result.dominant
    assert lam == pytest.approx(2.0)
    assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-14)
    assert result.shift == 0.0


def test_generalized_eig_identity_b():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    A = X @ X.conj().T
    A = (A + A.conj().T) / 2
    result = generalized_herm_eig(ConcentrationPair(A, np.eye(6)))
    assert_allclose(result.eigenvalues, np.linalg.eigvalsh(A)[::-1], rtol=1e-10, atol=1e-10)


def test_singular_b_is_regularized():
    result = generalized_herm_eig(ConcentrationPair(np.eye(2), np.diag([1.0, 0.0])))
    assert result.shift == pytest.approx(0.5e-10)
    assert result.b_matrix[1, 1] == pytest.approx(0.5e-10)
    assert result.eigenvalues[0] > result.eigenvalues[1]


def test_pair_validation():
    with pytest.raises(ValueError):
        ConcentrationPair(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(2))
    with pytest.raises(ValueError):
        ConcentrationPair(np.eye(2), np.eye(3))


def test_fix_phase():
    assert_allclose(fix_phase(np.array([1j, 2j, 1j])), [1.0, 2.0, 1.0], atol=1e-15)
    assert_allclose(fix_phase(np.array([1j, 0.0, 3j])), [1.0, 0.0, 3.0], atol=1e-15)


def test_design_eigen_properties(small_design):
    result = small_design.result
    A = small_design.pair.A
    assert np.all(result.residuals <= 1e-8 * np.linalg.norm(A, 2))
    V = result.eigenvectors
    assert_allclose(V.conj().T @ result.b_matrix @ V, np.eye(32), atol=1e-8)
    assert np.all(np.diff(result.eigenvalues) <= 0)
    lam, _ = result.dominant
    assert 0 < lam <= 1
    assert small_design.spectrum_head.shape == (8,)
    assert small_design.max_residual == result.residuals.max()


def test_concentration_equals_dominant_eigenvalue(small_design):
    lam, _ = small_design.result.dominant
    assert small_design.concentration == pytest.approx(lam, rel=1e-8)
    scaled = concentration_J((2 - 3j) * small_design.vector, small_design.pair)
    assert scaled == pytest.approx(small_design.concentration, rel=1e-12)
    with pytest.raises(ValueError):
        concentration_J(np.zeros(32), small_design.pair)


def test_slepian_dominates(small_config, small_focus, small_design):
    J = small_design.concentration
    assert random_j_bound(small_design.pair, count=100, seed=0) <= J * (1 + 1e-10)
    focus_vector = nf_steering_fresnel(small_config, small_focus.theta_u, small_focus.r_f)
    for taper in (uniform(32), hamming(32), nf_transform(hamming_prototype, 32)):
        assert concentration_J(taper.weights * focus_vector, small_design.pair) <= J * (1 + 1e-10)


def test_random_bound_is_seeded(small_design):
    assert random_j_bound(small_design.pair, 20, seed=5) == random_j_bound(small_design.pair, 20, seed=5)


def test_grid_convergence(small_config, small_focus, small_grids, small_design):
    grid_a, grid_b = small_grids
    finer = design_slepian(small_config, small_focus, grid_a=grid_a.doubled(), grid_b=grid_b.doubled(), use_cache=False)
    assert finer.concentration == pytest.approx(small_design.concentration, rel=0.01)
    assert np.linalg.norm(finer.pair.A) == pytest.approx(np.linalg.norm(small_design.pair.A), rel=0.005)


def test_taper_shape(small_design):
    w = small_design.taper.weights
    assert w.max() == 1.0
    assert_allclose(w, w[::-1], atol=1e-6)
    assert math.isfinite(small_design.phase_rms) and small_design.phase_rms >= 0


def test_slepian_taper_matches_design(small_config, small_focus, small_grids, small_design):
    clear_matrix_cache()
    grid_a, grid_b = small_grids
    taper, J = slepian_taper(small_config, small_focus, grid_a=grid_a, grid_b=grid_b)
    assert_allclose(taper.weights, small_design.taper.weights, atol=1e-12)
    assert J == pytest.approx(small_design.concentration, rel=1e-12)
    clear_matrix_cache()


def test_wide_regions_share_total_matrix(small_config, small_focus, small_grids):
    clear_matrix_cache()
    grid_a, grid_b = small_grids
    wide = design_slepian(small_config, small_focus, 5, 50, grid_a, grid_b)
    wider = design_slepian(small_config, small_focus, 10, 100, grid_a, grid_b)
    assert wide.mainlobe.r_lo == small_config.wavelength
    assert wide.total == wider.total
    assert wide.pair.B is wider.pair.B
    assert not wide.pair.B.flags.writeable
    assert wider.concentration > 0
    clear_matrix_cache()


def test_grid_spec_bounds():
    with pytest.raises(ValueError):
        GridSpec(n_omega=32, n_r=64)
    assert GridSpec(n_omega=64, n_r=128).doubled() == GridSpec(n_omega=128, n_r=256)
