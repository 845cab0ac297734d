import numpy as np
import pytest

from src.errors import ConfigurationError, DomainError
from src.model_core import InitialState, SystemConfig
from src.oracle_dynamics import (
    diagonalize,
    ensure_lattice,
    evolve,
    excited_population,
    field_frame,
    field_profile,
    initial_vector,
    long_time_population,
    momentum_amplitudes,
    out_of_band_energies,
    output_grid,
    propagate,
    required_sites,
    spectral_cache,
)


def _decay_rate(trajectory, window):
    t = trajectory.t_2J
    mask = (t >= window[0]) & (t <= window[1])
    slope, _ = np.polyfit(t[mask], np.log(trajectory.emitter_population[mask]), 1)
    return -slope


def test_output_grid_ends_on_t_max():
    grid = output_grid(1.0, 0.3)
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(1.0)
    assert grid.size == 5


def test_lattice_is_enlarged_when_needed():
    config = SystemConfig.from_dimensionless(0.08, 1.8, MA=1, MB=2, dx=7, n_sites=51)
    enlarged = ensure_lattice(config, 100.0)
    assert enlarged.waveguide.n_sites == required_sites(config, 100.0)
    assert enlarged.dx == 7
    assert ensure_lattice(enlarged, 100.0) is enlarged


def test_norm_is_conserved(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 20.0)
    assert np.max(np.abs(trajectory.norm - 1.0)) < 1e-10
    assert trajectory.emitter_population[0] == pytest.approx(1.0)
    assert trajectory.t_2J[-1] == pytest.approx(20.0)


def test_invalid_arguments(fig2a_config):
    with pytest.raises(DomainError):
        evolve(fig2a_config, InitialState.single(0), 0.0)
    with pytest.raises(ConfigurationError):
        evolve(fig2a_config, InitialState.single(0), 1.0, method="rk4")
    with pytest.raises(ConfigurationError):
        evolve(fig2a_config, InitialState.single(1), 1.0)


def test_normal_decay_rate(free_emitter):
    trajectory = evolve(free_emitter, InitialState.single(0), 60.0, store_field=False)
    gamma_2J = free_emitter.V_A ** 2 / free_emitter.J / free_emitter.two_J
    assert _decay_rate(trajectory, (5.0, 60.0)) == pytest.approx(gamma_2J, rel=0.05)


@pytest.mark.parametrize("M_A", [2, 5])
def test_dicke_scaling(M_A):
    config = SystemConfig.from_dimensionless(0.08, 0.0, MA=M_A, MB=0, dx=0)
    trajectory = evolve(config, InitialState.uniform(M_A), 40.0, store_field=False)
    expected = M_A * config.V_A ** 2 / config.J / config.two_J
    assert _decay_rate(trajectory, (5.0, 40.0)) == pytest.approx(expected, rel=0.05)


def test_dark_state_does_not_decay():
    config = SystemConfig.from_dimensionless(0.08, 0.0, MA=2, MB=0, dx=0)
    trajectory = evolve(config, InitialState.antisymmetric_pair(), 100.0, store_field=False)
    assert np.max(np.abs(trajectory.emitter_population - 1.0)) < 1e-10
    assert np.allclose(excited_population(trajectory, 1), 0.5, atol=1e-10)


def test_krylov_matches_eigh(fig2a_config):
    reference = evolve(fig2a_config, InitialState.single(0), 10.0, store_field=False)
    krylov = evolve(fig2a_config, InitialState.single(0), 10.0, method="krylov", store_field=False)
    assert np.max(np.abs(reference.amp_A - krylov.amp_A)) < 1e-8


def test_negative_times_give_conjugate_state(fig2a_config):
    psi0 = initial_vector(fig2a_config, InitialState.single(0))
    states = propagate(fig2a_config, psi0, np.array([-3.0, 3.0]))
    assert np.allclose(states[0], np.conj(states[1]), atol=1e-12)


def test_spectral_cache_reuses_diagonalization(fig2a_config):
    first = diagonalize(fig2a_config)
    second = diagonalize(fig2a_config)
    assert first[0] is second[0]
    assert spectral_cache.stats()["hits"] >= 1


def test_trajectory_is_read_only(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 2.0)
    with pytest.raises(ValueError):
        trajectory.amp_A[0, 0] = 0.0


def test_field_accessors(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 5.0)
    profile = field_profile(trajectory, 5.0)
    assert len(profile) == trajectory.config.waveguide.n_sites
    assert profile[0][0] == 1
    frame = field_frame(trajectory)
    assert list(frame.columns) == ["t_2J", "x", "density"]
    assert len(frame) == trajectory.time_grid.size * trajectory.config.waveguide.n_sites
    with pytest.raises(DomainError):
        field_profile(trajectory, 1.2345)


def test_field_requires_storage(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 2.0, store_field=False)
    with pytest.raises(DomainError):
        field_profile(trajectory, 2.0)
    with pytest.raises(ConfigurationError):
        excited_population(trajectory, 3)


def test_momentum_amplitudes_preserve_field_weight(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 10.0)
    k, amplitudes = momentum_amplitudes(trajectory, -1)
    assert k.size == trajectory.config.waveguide.n_sites
    field_weight = np.sum(np.abs(trajectory.amp_field[-1]) ** 2)
    assert np.sum(np.abs(amplitudes) ** 2) == pytest.approx(field_weight, rel=1e-10)


@pytest.mark.slow
def test_population_trapping_with_even_separation():
    config = SystemConfig.from_dimensionless(0.04, 1.0, MA=5, MB=2, dx=4)
    init = InitialState.uniform(5)
    trapped = long_time_population(config, init)
    baseline = long_time_population(config.without_scatterers(), init)
    assert trapped.mean > 10.0 * baseline.mean


def test_out_of_band_energies_drop_dark_copies():
    config = SystemConfig.from_dimensionless(VA_over_2J=0.05, VB_over_2J=0.0, MA=3, MB=0, dx=0,
                                             DeltaA_over_2J=3.0, n_sites=101)
    raw, _ = diagonalize(config)
    assert np.sum(np.isclose(raw, config.delta_A, atol=1e-9)) == 2
    energies = out_of_band_energies(config)
    assert not np.any(np.isclose(energies, config.delta_A, atol=1e-9))
    assert np.any(energies > config.delta_A)


def test_uncoupled_photon_spectrum_lies_in_the_band():
    config = SystemConfig.from_dimensionless(0.0, 0.0, MA=1, MB=0, dx=0, n_sites=81, J2=0.7, omega_c=3.0)
    energies, _ = diagonalize(config)
    lower, upper = config.waveguide.band_edges
    assert energies.min() >= lower - 1e-12
    assert energies.max() <= upper + 1e-12
    assert out_of_band_energies(config).size == 0


def test_doubling_the_lattice_leaves_the_population_unchanged(fig2a_config):
    init = InitialState.single(0)
    reference = evolve(fig2a_config, init, 30.0, dt_out=0.5, store_field=False)
    doubled_config = reference.config.resized(2 * reference.config.waveguide.n_sites + 1)
    doubled = evolve(doubled_config, init, 30.0, dt_out=0.5, store_field=False)
    assert np.max(np.abs(doubled.emitter_population - reference.emitter_population)) < 1e-8


def test_backward_propagation_restores_the_initial_state(fig3c_config):
    psi0 = initial_vector(fig3c_config, InitialState.symmetric_pair())
    forward = propagate(fig3c_config, psi0, np.array([7.5]))[0]
    restored = propagate(fig3c_config, forward, np.array([-7.5]))[0]
    assert np.allclose(restored, psi0, atol=1e-12)


def test_field_weight_complements_atomic_populations(fig2a_config):
    trajectory = evolve(fig2a_config, InitialState.single(0), 12.0, dt_out=1.0)
    for t in trajectory.time_grid:
        field_weight = sum(density for _, density in field_profile(trajectory, t))
        index = trajectory.time_index(t)
        assert field_weight == pytest.approx(1.0 - trajectory.atomic_population[index], abs=1e-10)
