import pytest

from array_core import ArrayConfig, FocusPoint, field_bounds
from pattern_engine import angle_cut, range_cut
from slepian_nf import GridSpec, design_slepian
from windows import hamming, nf_transform, hamming_prototype, uniform


@pytest.fixture(scope="session")
def reference_config():
    """128 elements at 15 GHz, half-wavelength spacing."""
    return ArrayConfig.half_wavelength(128, 15e9)


@pytest.fixture(scope="session")
def reference_focus(reference_config):
    return FocusPoint(theta_u=0.0, r_f=field_bounds(reference_config).rayleigh_distance / 100)


@pytest.fixture(scope="session")
def small_config():
    return ArrayConfig.half_wavelength(32, 15e9)


@pytest.fixture(scope="session")
def small_focus(small_config):
    return FocusPoint(theta_u=0.0, r_f=field_bounds(small_config).rayleigh_distance / 20)


@pytest.fixture(scope="session")
def small_grids():
    return (
        GridSpec(n_omega=64, n_r=64, r_spacing="linear"),
        GridSpec(n_omega=256, n_r=256, r_spacing="logarithmic"),
    )


@pytest.fixture(scope="session")
def small_design(small_config, small_focus, small_grids):
    grid_a, grid_b = small_grids
    return design_slepian(small_config, small_focus, grid_a=grid_a, grid_b=grid_b, use_cache=False)


@pytest.fixture(scope="session")
def reference_cuts(reference_config, reference_focus):
    """(angle cut, range cut) for uniform, hamming and nf-hamming tapers."""
    N = reference_config.element_count
    tapers = {
        "uniform": uniform(N),
        "hamming": hamming(N),
        "nf-hamming": nf_transform(hamming_prototype, N),
    }
    return {
        name: (angle_cut(reference_config, taper, reference_focus), range_cut(reference_config, taper, reference_focus))
        for name, taper in tapers.items()
    }
