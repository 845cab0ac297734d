"""
Oracle de référence : évolution exacte du secteur à une excitation sur réseau fini
Chemin de référence par diagonalisation complète, chemin rapide par expm_multiply
"""
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.sparse.linalg import expm_multiply

from .errors import ConfigurationError, DomainError
from .logger_config import LoggerConfig
from .model_core import InitialState, SystemConfig, build_hamiltonian, to_2J_units
from .settings import get_settings

logger = logging.getLogger(__name__)

TIME_CHUNK = 256
LONG_RUN_FACTOR = 10.0
LONG_RUN_SAMPLES = 4000


class SpectralCache:
    """Cache des diagonalisations (énergies, vecteurs propres) indexé par empreinte"""

    def __init__(self, max_entries: int = 4):
        self.max_entries = max_entries
        self._entries: "OrderedDict[str, Tuple[np.ndarray, np.ndarray]]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
                LoggerConfig.log_cache_miss(key)
                return None
            self._entries.move_to_end(key)
            self.hits += 1
        LoggerConfig.log_cache_hit(key, source="eigh")
        return entry

    def set(self, key: str, energies: np.ndarray, vectors: np.ndarray):
        if self.max_entries == 0:
            return
        with self._lock:
            self._entries[key] = (energies, vectors)
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                self._entries.popitem(last=False)
        logger.debug(f"💾 Diagonalisation mise en cache: {key[:12]}")

    def clear(self):
        with self._lock:
            self._entries.clear()
            self.hits = 0
            self.misses = 0
        logger.info("🗑️ Cache spectral vidé")

    def stats(self) -> Dict[str, int]:
        with self._lock:
            return {
                'total_entries': len(self._entries),
                'hits': self.hits,
                'misses': self.misses,
                'max_entries': self.max_entries,
            }


spectral_cache = SpectralCache(max_entries=get_settings().eigen_cache_size)


def diagonalize(config: SystemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Énergies propres et vecteurs propres (colonnes) du hamiltonien, avec cache"""
    key = config.fingerprint()
    cached = spectral_cache.get(key)
    if cached is not None:
        return cached
    hamiltonian = build_hamiltonian(config).toarray()
    energies, vectors = linalg.eigh(hamiltonian)
    energies.setflags(write=False)
    vectors.setflags(write=False)
    spectral_cache.set(key, energies, vectors)
    return energies, vectors


@dataclass(frozen=True)
class Trajectory:
    """Amplitudes C_j^A(t), C_j^B(t), C_x(t) sur une grille temporelle (temps absolus)"""

    time_grid: np.ndarray
    amp_A: np.ndarray
    amp_B: np.ndarray
    amp_field: Optional[np.ndarray]
    field_sites: np.ndarray
    norm: np.ndarray
    config: SystemConfig
    method: str = "eigh"

    @property
    def t_2J(self) -> np.ndarray:
        return to_2J_units(self.time_grid, self.config)

    @property
    def populations(self) -> np.ndarray:
        """P_e(t) par émetteur, tableau (n_t, M_A)"""
        return np.abs(self.amp_A) ** 2

    @property
    def emitter_population(self) -> np.ndarray:
        """Population excitée totale Σ_j |C_j^A(t)|²"""
        return self.populations.sum(axis=1)

    @property
    def atomic_population(self) -> np.ndarray:
        return self.emitter_population + (np.abs(self.amp_B) ** 2).sum(axis=1)

    def time_index(self, t: float) -> int:
        """Indice de l'instant t (absolu) dans la grille, sinon DomainError"""
        tolerance = 1e-9 * max(1.0, abs(self.time_grid[-1]))
        matches = np.flatnonzero(np.abs(self.time_grid - t) <= tolerance)
        if matches.size == 0:
            raise DomainError(f"Instant t={t} absent de la grille de sortie", {"t": t})
        return int(matches[0])


def required_sites(config: SystemConfig, t_max: float) -> int:
    """Taille minimale du réseau: 2⌈2J t_max⌉ + 2Δx + 20"""
    return 2 * math.ceil(config.two_J * t_max) + 2 * config.dx + 20


def ensure_lattice(config: SystemConfig, t_max: float) -> SystemConfig:
    """Agrandit le réseau si le front d'onde peut atteindre les bords avant t_max"""
    needed = required_sites(config, t_max)
    if config.waveguide.n_sites >= needed:
        return config
    logger.warning(f"⚠️ Réseau agrandi de {config.waveguide.n_sites} à {needed} sites (pas de réflexion aux bords)")
    return config.resized(needed)


def output_grid(t_max: float, dt_out: float) -> np.ndarray:
    """Grille 0, dt_out, ..., t_max (dernier point ajusté sur t_max)"""
    steps = max(1, int(math.ceil(t_max / dt_out - 1e-9)))
    return np.linspace(0.0, t_max, steps + 1)


def initial_vector(config: SystemConfig, init: InitialState) -> np.ndarray:
    psi0 = np.zeros(config.dimension, dtype=complex)
    psi0[: config.M_A] = init.as_vector(config.M_A)
    return psi0


def propagate(config: SystemConfig, psi: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    ψ(t) = Σ_n e^{−iE_n t} ⟨n|ψ⟩ |n⟩ pour chaque instant (temps négatifs autorisés)

    Returns:
        Tableau (n_t, dimension) des états
    """
    energies, vectors = diagonalize(config)
    coefficients = vectors.T @ psi
    times = np.atleast_1d(np.asarray(times, dtype=float))
    states = np.empty((times.size, config.dimension), dtype=complex)
    for start in range(0, times.size, TIME_CHUNK):
        chunk = times[start:start + TIME_CHUNK]
        phases = np.exp(-1j * np.outer(chunk, energies))
        states[start:start + TIME_CHUNK] = (phases * coefficients) @ vectors.T
    return states


def _propagate_krylov(config: SystemConfig, psi: np.ndarray, times: np.ndarray) -> np.ndarray:
    generator = (-1j * build_hamiltonian(config)).tocsr()
    if times.size == 1:
        return expm_multiply(generator * times[0], psi)[np.newaxis, :]
    return expm_multiply(generator, psi, start=times[0], stop=times[-1], num=times.size, endpoint=True)


def evolve(
    config: SystemConfig,
    init: InitialState,
    t_max: float,
    dt_out: Optional[float] = None,
    method: str = "eigh",
    store_field: bool = True,
    field_stride: int = 1,
) -> Trajectory:
    """
    Résout i∂_t ψ = Hψ pour l'état initial donné

    Args:
        config: configuration (le réseau est agrandi si nécessaire)
        init: amplitudes initiales des émetteurs
        t_max: instant final (temps absolu, > 0)
        dt_out: pas de sortie (défaut 0.1/(2J))
        method: "eigh" (référence) ou "krylov" (expm_multiply)
        store_field: conserver C_x(t)
        field_stride: sous-échantillonnage spatial du champ stocké

    Returns:
        Trajectory immuable
    """
    if not t_max > 0:
        raise DomainError("t_max doit être strictement positif", {"t_max": t_max})
    if method not in ("eigh", "krylov"):
        raise ConfigurationError(f"Méthode de propagation inconnue: {method}", {"method": method})
    init.validate_for(config.M_A)
    norm0 = sum(abs(c) ** 2 for _, c in init.amplitudes)
    if abs(norm0 - 1.0) > 1e-12:
        raise ConfigurationError("État initial non normalisé", {"norm": norm0})

    config = ensure_lattice(config, t_max)
    dt_out = dt_out if dt_out is not None else 0.1 / config.two_J
    times = output_grid(t_max, dt_out)
    psi0 = initial_vector(config, init)

    if method == "eigh":
        states = propagate(config, psi0, times)
    else:
        states = _propagate_krylov(config, psi0, times)

    M_A, M_B = config.M_A, config.M_B
    norm = (np.abs(states) ** 2).sum(axis=1)
    field = states[:, M_A + M_B:]
    sites = np.arange(1, config.waveguide.n_sites + 1)
    if store_field:
        amp_field = field[:, ::field_stride].copy()
        field_sites = sites[::field_stride]
    else:
        amp_field = None
        field_sites = np.empty(0, dtype=int)

    trajectory = Trajectory(
        time_grid=times,
        amp_A=states[:, :M_A].copy(),
        amp_B=states[:, M_A:M_A + M_B].copy(),
        amp_field=amp_field,
        field_sites=field_sites,
        norm=norm,
        config=config,
        method=method,
    )
    for array in (trajectory.time_grid, trajectory.amp_A, trajectory.amp_B, trajectory.norm):
        array.setflags(write=False)
    if amp_field is not None:
        amp_field.setflags(write=False)

    drift = float(np.max(np.abs(norm - 1.0)))
    if drift > 1e-10:
        logger.warning(f"⚠️ Dérive de norme {drift:.2e} ({method})")
    LoggerConfig.log_solver_run("oracle", config.fingerprint(), config.dimension,
                                {"method": method, "n_times": int(times.size), "norm_drift": drift})
    return trajectory


def excited_population(traj: Trajectory, j: int) -> np.ndarray:
    """P_e(t) = |C_j^A(t)|² de l'émetteur j"""
    if not 0 <= j < traj.config.M_A:
        raise ConfigurationError(f"Émetteur {j} inexistant (M_A={traj.config.M_A})", {"index": j})
    return traj.populations[:, j]


def field_profile(traj: Trajectory, t: float) -> List[Tuple[int, float]]:
    """Densité |C_x(t)|² sur les sites stockés à l'instant t (temps absolu)"""
    if traj.amp_field is None:
        raise DomainError("Le champ n'a pas été conservé (store_field=False)")
    index = traj.time_index(t)
    density = np.abs(traj.amp_field[index]) ** 2
    return [(int(x), float(p)) for x, p in zip(traj.field_sites, density)]


def field_frame(traj: Trajectory) -> pd.DataFrame:
    """Champ au format long: t_2J, x, density"""
    if traj.amp_field is None:
        raise DomainError("Le champ n'a pas été conservé (store_field=False)")
    density = np.abs(traj.amp_field) ** 2
    n_t, n_x = density.shape
    return pd.DataFrame({
        "t_2J": np.repeat(traj.t_2J, n_x),
        "x": np.tile(traj.field_sites, n_t),
        "density": density.ravel(),
    })


def momentum_amplitudes(traj: Trajectory, index: int) -> Tuple[np.ndarray, np.ndarray]:
    """C_k = Σ_x e^{−ikx} C_x / √n à l'indice temporel donné (champ complet requis)"""
    if traj.amp_field is None or traj.field_sites.size != traj.config.waveguide.n_sites:
        raise DomainError("Le champ complet (field_stride=1) est requis")
    n = traj.config.waveguide.n_sites
    amplitudes = np.fft.fftshift(np.fft.fft(traj.amp_field[index])) / math.sqrt(n)
    k = np.fft.fftshift(np.fft.fftfreq(n)) * 2.0 * math.pi
    return k, amplitudes


def out_of_band_energies(config: SystemConfig, tol: float = 1e-9) -> np.ndarray:
    """
    Valeurs propres du réseau fini hors de [ω_c − 2J, ω_c + 2J], mesurées depuis ω_c,
    sans les états noirs (M_A − 1 copies en Δ_A, M_B − 1 en Δ_B)
    """
    energies, _ = diagonalize(config)
    relative = energies - config.waveguide.omega_c
    outside = sorted(relative[np.abs(relative) > config.two_J])
    dark = []
    if abs(config.delta_A) > config.two_J:
        dark += [config.delta_A] * (config.M_A - 1)
    if config.M_B > 0 and abs(config.delta_B) > config.two_J:
        dark += [config.delta_B] * (config.M_B - 1)
    for energy in dark:
        for i, value in enumerate(outside):
            if abs(value - energy) <= tol * config.two_J:
                outside.pop(i)
                break
    return np.array(outside)


@dataclass(frozen=True)
class PopulationAsymptote:
    mean: float
    std: float
    t_max: float


def long_time_population(
    config: SystemConfig,
    init: InitialState,
    t_max: Optional[float] = None,
    tail_fraction: float = 0.2,
) -> PopulationAsymptote:
    """
    Moyenne (et écart-type) de la population excitée totale sur les derniers 20% d'un long run

    La durée par défaut est 10/Γ_brillant avec Γ_brillant = M_A V_A²/J.
    """
    if t_max is None:
        bright_rate = config.M_A * config.V_A ** 2 / config.J
        t_max = LONG_RUN_FACTOR / bright_rate if bright_rate > 0 else 100.0 / config.two_J
    dt_out = max(0.1 / config.two_J, t_max / LONG_RUN_SAMPLES)
    trajectory = evolve(config, init, t_max, dt_out=dt_out, store_field=False)
    population = trajectory.emitter_population
    tail = population[trajectory.time_grid >= (1.0 - tail_fraction) * t_max]
    logger.info(f"✅ Population asymptotique {tail.mean():.4e} ± {tail.std():.1e}")
    return PopulationAsymptote(mean=float(tail.mean()), std=float(tail.std()), t_max=float(t_max))
