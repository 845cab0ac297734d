"""
Diffusion d'un photon unique par les M_B diffuseurs
r_k = −iM_BV_B² / (2J|sin k|(ω_k − Ω_B) + iM_BV_B²), t_k = 1 + r_k
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import bisect

from .errors import DomainError
from .model_core import SystemConfig, dispersion

logger = logging.getLogger(__name__)

ZERO_VELOCITY_TOL = 1e-12
FWHM_SAMPLES = 200001


@dataclass(frozen=True)
class SpectrumPoint:
    k: float
    omega_k: float
    r: complex
    t: complex
    zero_group_velocity: bool = False

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def T(self) -> float:
        return abs(self.t) ** 2


def _collective_coupling(config: SystemConfig) -> float:
    """Les diffuseurs n'interviennent qu'à travers M_B V_B²"""
    return config.M_B * config.V_B ** 2


def reflection_amplitude(k, config: SystemConfig):
    """
    Amplitude de réflexion r_k (scalaire ou tableau)

    En k = 0 et k = π la vitesse de groupe s'annule et r_k = −1 par continuité.
    """
    gamma = _collective_coupling(config)
    k_arr = np.asarray(k, dtype=float)
    if gamma == 0:
        result = np.zeros(k_arr.shape, dtype=complex)
    else:
        detuning = dispersion(k_arr, config.waveguide) - config.scatterers.omega
        speed = config.two_J * np.abs(np.sin(k_arr))
        result = -1j * gamma / (speed * detuning + 1j * gamma)
    return result if result.ndim else complex(result)


def transmission_amplitude(k, config: SystemConfig):
    """t_k = 1 + r_k"""
    return 1.0 + reflection_amplitude(k, config)


def default_k_grid(n_points: int) -> np.ndarray:
    """n_points valeurs équidistantes strictement dans (0, π)"""
    return np.linspace(0.0, math.pi, n_points + 2)[1:-1]


def spectrum(config: SystemConfig, k_grid) -> List[SpectrumPoint]:
    """Spectres R(k), T(k) évalués point par point"""
    k_grid = np.asarray(k_grid, dtype=float)
    r = np.atleast_1d(reflection_amplitude(k_grid, config))
    omega = np.atleast_1d(dispersion(k_grid, config.waveguide))
    flat = np.abs(np.sin(k_grid)) <= ZERO_VELOCITY_TOL
    if np.any(flat):
        logger.info("ℹ️ Points k = 0 ou π inclus: vitesse de groupe nulle, sans rôle dans l'auto-interférence")
    return [
        SpectrumPoint(k=float(k), omega_k=float(w), r=complex(rk), t=complex(1.0 + rk), zero_group_velocity=bool(z))
        for k, w, rk, z in zip(np.atleast_1d(k_grid), omega, r, np.atleast_1d(flat))
    ]


def spectrum_frame(config: SystemConfig, points: List[SpectrumPoint]) -> pd.DataFrame:
    """Export CSV: k, omega_2J (mesuré depuis ω_c), Re(r), Im(r), R, T"""
    return pd.DataFrame({
        "k": [p.k for p in points],
        "omega_2J": [(p.omega_k - config.waveguide.omega_c) / config.two_J for p in points],
        "re_r": [p.r.real for p in points],
        "im_r": [p.r.imag for p in points],
        "R": [p.R for p in points],
        "T": [p.T for p in points],
    })


@dataclass(frozen=True)
class ResonanceWidth:
    """Largeur de Breit–Wigner (formule) et largeur à mi-hauteur mesurée, en énergie"""

    k_resonance: float
    k0: Tuple[float, float]
    breit_wigner: float
    measured_fwhm: float

    @property
    def relative_gap(self) -> float:
        if self.breit_wigner == 0:
            return 0.0
        return abs(self.measured_fwhm - self.breit_wigner) / self.breit_wigner


def _width_relation(k: float, config: SystemConfig, gamma: float) -> float:
    """h(k) = 2J sin(k)|ω_k − Ω_B| − M_BV_B²"""
    detuning = float(dispersion(k, config.waveguide)) - config.scatterers.omega
    return config.two_J * math.sin(k) * abs(detuning) - gamma


def _outward_root(config: SystemConfig, gamma: float, start: float, stop: float, n_steps: int = 20000) -> Optional[float]:
    """Premier changement de signe de h en partant de la résonance vers stop"""
    grid = np.linspace(start, stop, n_steps)
    previous = _width_relation(grid[0], config, gamma)
    for left, right in zip(grid[:-1], grid[1:]):
        current = _width_relation(right, config, gamma)
        if previous < 0 <= current:
            return bisect(_width_relation, min(left, right), max(left, right), args=(config, gamma), xtol=1e-14)
        previous = current
    return None


def measured_fwhm(config: SystemConfig, n_samples: int = FWHM_SAMPLES) -> float:
    """Largeur à mi-hauteur de R(ω) autour de la résonance, par interpolation linéaire"""
    k = np.linspace(0.0, math.pi, n_samples)[1:-1]
    omega = np.asarray(dispersion(k, config.waveguide))
    reflectance = np.abs(np.asarray(reflection_amplitude(k, config))) ** 2
    order = np.argsort(omega)
    omega, reflectance = omega[order], reflectance[order]
    peak = int(np.argmin(np.abs(omega - config.scatterers.omega)))
    half = 0.5
    left = peak
    while left > 0 and reflectance[left] >= half:
        left -= 1
    right = peak
    while right < omega.size - 1 and reflectance[right] >= half:
        right += 1
    if reflectance[left] >= half or reflectance[right] >= half:
        raise DomainError("La mi-hauteur n'est pas atteinte dans la bande")
    omega_left = np.interp(half, [reflectance[left], reflectance[left + 1]], [omega[left], omega[left + 1]])
    omega_right = np.interp(half, [reflectance[right], reflectance[right - 1]], [omega[right], omega[right - 1]])
    return float(omega_right - omega_left)


def resonance_width(config: SystemConfig) -> ResonanceWidth:
    """
    Largeur de Breit–Wigner M_BV_B²/|J sin k₀| avec k₀ solution de
    4J²sin²(k)(ω_k − Ω_B)² = M_B²V_B⁴ de part et d'autre de la résonance

    La formule est moyennée sur les deux solutions k₀; la largeur mesurée est la
    largeur à mi-hauteur numérique de R(ω).
    """
    gamma = _collective_coupling(config)
    cos_resonance = config.delta_B / config.two_J
    if abs(cos_resonance) >= 1.0:
        raise DomainError("Résonance des diffuseurs hors de la bande", {"DeltaB": config.delta_B})
    k_res = math.acos(cos_resonance)
    if gamma == 0:
        return ResonanceWidth(k_res, (k_res, k_res), 0.0, 0.0)
    lower = _outward_root(config, gamma, k_res, 0.0)
    upper = _outward_root(config, gamma, k_res, math.pi)
    if lower is None or upper is None:
        raise DomainError("Pas de solution k₀ dans la bande (couplage trop fort)", {"gamma": gamma})
    widths = [gamma / abs(config.J * math.sin(k0)) for k0 in (lower, upper)]
    breit_wigner = 0.5 * sum(widths)
    fwhm = measured_fwhm(config)
    logger.info(f"✅ Largeur Breit–Wigner {breit_wigner:.4e}, mi-hauteur mesurée {fwhm:.4e}")
    return ResonanceWidth(k_res, (min(lower, upper), max(lower, upper)), breit_wigner, fwhm)


def transmitted_probability(field: np.ndarray, config: SystemConfig, padding: int = 16384) -> float:
    """
    Probabilité transmise prédite Σ_k T(k)|φ(k)|² pour un paquet d'onde incident

    Args:
        field: amplitudes C_x du paquet incident (sites consécutifs)
        config: configuration portant les diffuseurs
        padding: taille de la FFT (complétée par des zéros)
    """
    field = np.asarray(field, dtype=complex)
    size = max(padding, field.size)
    phi = np.fft.fft(field, n=size)
    k = 2.0 * math.pi * np.fft.fftfreq(size)
    transmission = np.abs(np.atleast_1d(transmission_amplitude(k, config))) ** 2
    # Parseval: Σ_x |C_x|² = Σ_k |φ(k)|² / N
    return float(np.sum(transmission * np.abs(phi) ** 2) / size)
