import math

import numpy as np
import pytest

from src import resolvent_solver
from src.errors import ConfigurationError, DegenerateRootError, DomainError
from src.model_core import InitialState, SystemConfig
from src.oracle_dynamics import evolve
from src.resolvent_solver import (
    F,
    ResolventContext,
    adaptive_gauss_legendre,
    amplitude,
    branch_cut_integrand,
    cross_check_bound_states,
    decompose_amplitude,
    emitter_amplitudes,
    emitter_population,
    f_pm,
    find_bound_states,
    find_continuum_resonances,
    structure_functions,
)


def test_green_function_decays_with_distance():
    values = [abs(F(2.0, x, 0.5)) for x in (0, 1, 3, 10)]
    assert values == sorted(values, reverse=True)


def test_green_function_large_s_asymptote():
    s = 1e4
    assert F(s, 0, 0.5) * (1j * s) == pytest.approx(1.0, rel=1e-6)


def test_green_function_rejects_the_cut():
    with pytest.raises(DomainError):
        F(-0.5j, 0, 0.5)
    with pytest.raises(DomainError):
        F(0.0, 0, 0.5)


@pytest.mark.parametrize("x", [0, 3, 8])
def test_f_minus_is_the_retarded_limit(x):
    J = 0.5
    y = 0.3
    energy = -2.0 * J * y
    s = -1j * (energy + 1e-10j)
    assert F(s, x, J) == pytest.approx(f_pm(y, x, -1, J), abs=1e-6)
    s_adv = -1j * (energy - 1e-10j)
    assert F(s_adv, x, J) == pytest.approx(f_pm(y, x, 1, J), abs=1e-6)


def test_structure_functions_relation(fig2a_config):
    values = structure_functions(0.3 + 0.7j, fig2a_config)
    assert values.G == pytest.approx(values.L1 - values.L2)


def test_branch_cut_domain(fig2a_config):
    with pytest.raises(DomainError):
        branch_cut_integrand(1.0, 1, fig2a_config)
    with pytest.raises(DomainError):
        branch_cut_integrand(0.2, 0, fig2a_config)
    Q1, Q2 = branch_cut_integrand(0.2, -1, fig2a_config)
    assert isinstance(Q1, complex) and isinstance(Q2, complex)


def test_adaptive_quadrature_on_vector_integrand():
    value, panels = adaptive_gauss_legendre(lambda x: np.stack([np.sin(x), np.cos(x) ** 2], axis=1), 0.0, math.pi)
    assert value[0] == pytest.approx(2.0, abs=1e-12)
    assert value[1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert panels >= 2


def test_single_emitter_bound_states_solve_the_pole_equation(free_emitter):
    states = find_bound_states(free_emitter)
    assert len(states) == 2
    energies = [state.energy for state in states]
    assert energies[0] == pytest.approx(-energies[1], rel=1e-9)
    V2 = free_emitter.V_A ** 2
    for energy in energies:
        # E = V_A²/R(E) hors de la bande
        assert abs(energy) * math.sqrt(energy ** 2 - 1.0) == pytest.approx(V2, rel=1e-6)


@pytest.mark.parametrize("VA, VB, dx", [(0.5, 1.0, 3), (0.08, 1.8, 7)])
def test_bound_states_match_finite_lattice(VA, VB, dx):
    config = SystemConfig.from_dimensionless(VA, VB, MA=1, MB=2, dx=dx)
    report = cross_check_bound_states(config)
    assert report["n_analytic"] == report["n_finite"]
    assert report["max_deviation"] < 1e-6
    assert report["consistent"]


def test_context_limits_excited_emitters():
    config = SystemConfig.from_dimensionless(0.04, 1.0, MA=5, MB=2, dx=3)
    with pytest.raises(ConfigurationError):
        ResolventContext.create(config, InitialState.uniform(5))
    context = ResolventContext.create(config, InitialState.symmetric_pair())
    assert context.regime == "pole-on-cut"
    assert context.coefficients(0) == pytest.approx((1 / math.sqrt(2), 1 / math.sqrt(2)))


def test_decomposition_sums_to_amplitude(fig2a_config):
    t = np.linspace(0.0, 10.0, 11)
    parts = decompose_amplitude(fig2a_config, InitialState.single(0), t)
    assert np.allclose(parts.total, amplitude(fig2a_config, InitialState.single(0), t))
    assert parts.regime == "pole-on-cut"
    assert parts.n_panels >= 4
    assert abs(parts.total[0]) == pytest.approx(1.0, abs=1e-6)


def test_negative_times_are_rejected(fig2a_config):
    with pytest.raises(DomainError):
        emitter_population(fig2a_config, InitialState.single(0), [-1.0, 1.0])


def test_free_emitter_matches_oracle(free_emitter):
    trajectory = evolve(free_emitter, InitialState.single(0), 30.0, dt_out=0.5, store_field=False)
    population = emitter_population(free_emitter, InitialState.single(0), trajectory.time_grid)
    assert np.max(np.abs(population - trajectory.emitter_population)) < 1e-3


def test_antisymmetric_pair_is_a_pure_pole():
    config = SystemConfig.from_dimensionless(0.08, 0.0, MA=2, MB=0, dx=0)
    amplitudes = emitter_amplitudes(config, InitialState.antisymmetric_pair(), np.linspace(0.0, 50.0, 26))
    assert amplitudes.shape == (26, 2)
    assert np.allclose(np.abs(amplitudes) ** 2, 0.5, atol=1e-8)


def _trapped_weight(config):
    """Poids r = M_BV_B² / (M_BV_B² + M_AV_A² + ΔxM_AM_BV_A²V_B²/(2J²)) de l'état lié en E = 0"""
    MB_VB2 = config.M_B * config.V_B ** 2
    MA_VA2 = config.M_A * config.V_A ** 2
    return MB_VB2 / (MB_VB2 + MA_VA2 + config.dx * MA_VA2 * MB_VB2 / (2.0 * config.J ** 2))


def test_bound_state_in_the_continuum_is_found(fig2b_config):
    trapped = [resonance for resonance in find_continuum_resonances(fig2b_config) if resonance.trapped]
    assert len(trapped) == 1
    assert trapped[0].energy_2J == pytest.approx(0.0, abs=1e-12)
    assert trapped[0].residue.imag == 0.0
    assert trapped[0].residue.real == pytest.approx(_trapped_weight(fig2b_config), rel=1e-9)


def test_odd_separation_has_no_trapped_state(fig2a_config):
    assert not any(resonance.trapped for resonance in find_continuum_resonances(fig2a_config))


def test_trapped_population_matches_oracle(fig2b_config):
    init = InitialState.single(0)
    trajectory = evolve(fig2b_config, init, 40.0, dt_out=0.25, store_field=False)
    parts = decompose_amplitude(fig2b_config, init, trajectory.time_grid)
    population = np.abs(parts.total) ** 2
    assert np.max(np.abs(population - trajectory.emitter_population)) < 1e-4
    assert population[-1] == pytest.approx(_trapped_weight(fig2b_config) ** 2, abs=1e-3)


@pytest.mark.parametrize("detuning", [1e-8, 1e-5, 1e-4, 1e-3])
def test_narrow_resonance_near_the_trapped_state_matches_oracle(detuning):
    config = SystemConfig.from_dimensionless(0.08, 1.8, MA=1, MB=2, dx=8, DeltaB_over_2J=detuning)
    init = InitialState.single(0)
    trajectory = evolve(config, init, 40.0, dt_out=0.25, store_field=False)
    population = emitter_population(config, init, trajectory.time_grid)
    assert population[0] == pytest.approx(1.0, abs=1e-6)
    assert np.max(np.abs(population - trajectory.emitter_population)) < 1e-4


def test_missing_resonance_breaks_the_sum_rule(monkeypatch):
    config = SystemConfig.from_dimensionless(0.08, 1.8, MA=1, MB=2, dx=8, DeltaB_over_2J=1e-8)
    monkeypatch.setattr(resolvent_solver, "_resonance_poles", lambda config: [])
    with pytest.raises(DegenerateRootError) as excinfo:
        emitter_population(config, InitialState.single(0), [0.0, 1.0])
    assert excinfo.value.context["defect"] > 1e-6


@pytest.mark.parametrize("fixture, init", [("fig2a_config", InitialState.single(0)),
                                           ("fig3c_config", InitialState.symmetric_pair())])
def test_resolvent_matches_oracle(request, fixture, init):
    config = request.getfixturevalue(fixture)
    trajectory = evolve(config, init, 40.0, dt_out=0.1, store_field=False)
    population = emitter_population(config, init, trajectory.time_grid)
    assert np.max(np.abs(population - trajectory.emitter_population)) < 2e-2


@pytest.mark.parametrize("x", [0, 1, 3])
def test_green_function_matches_momentum_sum(x):
    J = 0.5
    rng = np.random.default_rng(3)
    k = np.linspace(-math.pi, math.pi, 4096, endpoint=False)
    for _ in range(5):
        z = complex(rng.uniform(-2.0, 2.0), rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.5))
        direct = np.mean(np.exp(1j * k * x) / (z - 2.0 * J * np.cos(k)))
        assert F(-1j * z, x, J) == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("x", [0, 2, 5])
def test_cut_discontinuity_matches_the_jump_of_F(x):
    J = 0.5
    eta = 1e-10
    for y in np.random.default_rng(9).uniform(-0.95, 0.95, 10):
        energy = -2.0 * J * y
        jump = F(-1j * (energy + 1j * eta), x, J) - F(-1j * (energy - 1j * eta), x, J)
        assert jump == pytest.approx(f_pm(y, x, -1, J) - f_pm(y, x, 1, J), abs=1e-6)


def _random_configs(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        M_A = int(rng.integers(1, 3))
        M_B = int(rng.integers(0, 3))
        dx = int(rng.integers(1, 10)) if M_B else 0
        config = SystemConfig.from_dimensionless(
            VA_over_2J=float(rng.uniform(0.03, 0.2)),
            VB_over_2J=float(rng.uniform(0.2, 1.8)) if M_B else 0.0,
            MA=M_A,
            MB=M_B,
            dx=dx,
            DeltaA_over_2J=float(rng.uniform(-0.4, 0.4)),
            DeltaB_over_2J=float(rng.uniform(-0.4, 0.4)) if M_B else 0.0,
        )
        init = InitialState.symmetric_pair() if M_A == 2 else InitialState.single(0)
        yield config, init


def test_amplitudes_start_from_the_initial_state():
    for config, init in _random_configs(17, 20):
        amplitudes = emitter_amplitudes(config, init, [0.0])[0]
        assert np.allclose(amplitudes, init.as_vector(config.M_A), atol=1e-6)


def test_resolvent_matches_oracle_on_random_configurations():
    for config, init in _random_configs(23, 10):
        trajectory = evolve(config, init, 40.0, dt_out=0.5, store_field=False)
        population = emitter_population(config, init, trajectory.time_grid)
        assert np.max(np.abs(population - trajectory.emitter_population)) < 2e-2, config.to_dict()
