import math

import numpy as np
import pytest

from src.errors import DomainError
from src.model_core import InitialState, SystemConfig
from src.oracle_dynamics import evolve
from src.scattering import (
    default_k_grid,
    reflection_amplitude,
    resonance_width,
    spectrum,
    spectrum_frame,
    transmission_amplitude,
    transmitted_probability,
)


@pytest.fixture
def fig3b_config():
    return SystemConfig.from_dimensionless(0.0, 0.5 / (1.13 * math.sqrt(2)), MA=1, MB=2, dx=1)


def test_flux_conservation_on_dense_grid(fig3b_config):
    k = default_k_grid(10_000)
    r = reflection_amplitude(k, fig3b_config)
    t = transmission_amplitude(k, fig3b_config)
    assert np.max(np.abs(np.abs(r) ** 2 + np.abs(t) ** 2 - 1.0)) < 1e-12


def test_full_reflection_at_resonance(fig3b_config):
    k_res = math.acos(fig3b_config.delta_B / fig3b_config.two_J)
    assert reflection_amplitude(k_res, fig3b_config) == pytest.approx(-1.0, abs=1e-12)
    detuned = SystemConfig.from_dimensionless(0.0, 0.2, MA=1, MB=1, dx=1, DeltaB_over_2J=0.4)
    k_detuned = math.acos(0.4)
    assert reflection_amplitude(k_detuned, detuned) == pytest.approx(-1.0, abs=1e-12)


def test_no_scatterer_means_full_transmission():
    config = SystemConfig.from_dimensionless(0.08, 0.0, MA=1, MB=0, dx=0)
    points = spectrum(config, default_k_grid(11))
    assert all(point.R == 0.0 and point.T == 1.0 for point in points)


def test_k_grid_excludes_zero_velocity_points():
    grid = default_k_grid(5)
    assert grid.size == 5
    assert grid[0] > 0.0 and grid[-1] < math.pi


def test_spectrum_frame_columns(fig3b_config):
    points = spectrum(fig3b_config, default_k_grid(101))
    frame = spectrum_frame(fig3b_config, points)
    assert list(frame.columns) == ["k", "omega_2J", "re_r", "im_r", "R", "T"]
    assert frame["omega_2J"].max() < 1.0
    assert np.allclose(frame["R"] + frame["T"], 1.0)


def test_zero_velocity_points_are_flagged(fig3b_config):
    points = spectrum(fig3b_config, [0.0, math.pi / 2])
    assert points[0].zero_group_velocity
    assert points[0].r == pytest.approx(-1.0)
    assert not points[1].zero_group_velocity


def test_breit_wigner_width_matches_measured_fwhm():
    config = SystemConfig.from_dimensionless(0.0, 0.2, MA=1, MB=1, dx=1)
    width = resonance_width(config)
    assert width.k_resonance == pytest.approx(math.pi / 2)
    assert width.k0[0] < width.k_resonance < width.k0[1]
    assert width.relative_gap < 0.05


def test_resonance_outside_band_is_rejected():
    config = SystemConfig.from_dimensionless(0.0, 0.2, MA=1, MB=1, dx=1, DeltaB_over_2J=3.0)
    with pytest.raises(DomainError):
        resonance_width(config)


def test_transmitted_probability_of_plane_wave_packet(fig3b_config):
    sites = np.arange(400)
    packet = np.exp(-((sites - 200) / 40.0) ** 2) * np.exp(1j * math.pi / 2 * sites)
    packet /= np.linalg.norm(packet)
    # paquet étroit en k centré sur la résonance: presque entièrement réfléchi
    assert transmitted_probability(packet, fig3b_config) < 0.05
    free = SystemConfig.from_dimensionless(0.0, 0.0, MA=1, MB=0, dx=0)
    assert transmitted_probability(packet, free) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.slow
def test_transmission_agrees_with_exact_dynamics():
    config = SystemConfig.from_dimensionless(0.2, 0.2, MA=1, MB=1, dx=60)
    t_max = 150.0
    with_scatterer = evolve(config, InitialState.single(0), t_max)
    free = evolve(config.without_scatterers(), InitialState.single(0), t_max)
    x1 = with_scatterer.config.emitters.position
    x2 = with_scatterer.config.scatterers.position
    assert free.config.emitters.position == x1

    sites = with_scatterer.field_sites
    transmitted = np.sum(np.abs(with_scatterer.amp_field[-1][sites > x2]) ** 2)
    incident = free.amp_field[-1][free.field_sites > x1]
    predicted = transmitted_probability(incident, config)
    assert transmitted == pytest.approx(predicted, rel=0.05)


def test_reflection_is_symmetric_about_the_band_centre(fig3b_config):
    k = np.random.default_rng(5).uniform(0.01, math.pi - 0.01, 25)
    R = np.abs(reflection_amplitude(k, fig3b_config)) ** 2
    mirrored = np.abs(reflection_amplitude(math.pi - k, fig3b_config)) ** 2
    assert np.allclose(R, mirrored, atol=1e-14)


def test_scatterers_enter_only_through_the_collective_coupling():
    k = default_k_grid(201)
    pair = SystemConfig.from_dimensionless(0.0, 0.3, MA=1, MB=2, dx=1, DeltaB_over_2J=0.2)
    single = SystemConfig.from_dimensionless(0.0, 0.3 * math.sqrt(2), MA=1, MB=1, dx=1, DeltaB_over_2J=0.2)
    assert np.allclose(reflection_amplitude(k, pair), reflection_amplitude(k, single), atol=1e-14)
