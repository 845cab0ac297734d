"""
Formules fermées : taux de décroissance et amplitudes approchées
Toutes les grandeurs sont absolues; rate_2J donne le taux en unités de 2J
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import DomainError, RegimeViolationError
from .model_core import InitialState, SystemConfig, round_trip_time

logger = logging.getLogger(__name__)

WEAK_EMITTER_MAX = 0.1
STRONG_SCATTERER_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class RatePrediction:
    """Taux prédit, préfacteur et conditions de validité évaluées pour la configuration"""

    name: str
    rate: float
    prefactor: float
    two_J: float
    validity_flags: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        if self.rate < 0:
            raise RegimeViolationError(f"Taux négatif prédit par {self.name}", {"rate": self.rate})

    @property
    def rate_2J(self) -> float:
        return self.rate / self.two_J

    @property
    def valid(self) -> bool:
        return all(self.validity_flags.values())

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "rate_2J": self.rate_2J,
            "prefactor": self.prefactor,
            "validity_flags": dict(sorted(self.validity_flags.items())),
        }


def validity_flags(config: SystemConfig) -> Dict[str, bool]:
    """Conditions de régime des formules fermées, calculées (jamais supposées)"""
    two_J = config.two_J
    collective = math.sqrt(config.M_B) * config.V_B / two_J
    low, high = STRONG_SCATTERER_RANGE
    return {
        "weak_emitter": config.V_A <= WEAK_EMITTER_MAX * two_J,
        "strong_scatterer": low <= collective <= high,
        "small_dx": config.dx < 0.5 * config.coherence_length(),
        "resonant_emitter": abs(config.delta_A) <= 1e-12 * two_J,
        "resonant_scatterer": abs(config.delta_B) <= 1e-12 * two_J,
        "odd_dx": config.dx % 2 == 1,
    }


def predicted_parity(dx: int) -> str:
    """Δx impair: interférence constructive (exaltée), Δx pair: supprimée"""
    return "enhanced" if dx % 2 == 1 else "suppressed"


def normal_rate(config: SystemConfig) -> float:
    """Γ₁ = V_A²/J"""
    return config.V_A ** 2 / config.J


def density_of_states(delta_A: float, J: float = 0.5) -> float:
    """D(Δ_A) = 1/(π√(4J² − Δ_A²)) à l'intérieur de la bande"""
    if abs(delta_A) >= 2.0 * J:
        raise DomainError("Δ_A hors de la bande: densité d'états nulle ou singulière", {"DeltaA": delta_A})
    return 1.0 / (math.pi * math.sqrt(4.0 * J ** 2 - delta_A ** 2))


def markovian_rate(delta_A: float, V_A: float, J: float = 0.5) -> float:
    """Γ_s(Δ_A) = 4πV_A²D(Δ_A); Γ_s(0) = 2V_A²/J"""
    return 4.0 * math.pi * V_A ** 2 * density_of_states(delta_A, J)


def dicke_rate(M_A: int, V_A: float, J: float = 0.5) -> float:
    """Γ_s = M_A V_A²/J (superradiance de Dicke)"""
    return M_A * V_A ** 2 / J


def bright_rate(config: SystemConfig) -> float:
    """Taux du mode brillant sans diffuseur: M_A·Γ_s(Δ_A)/2"""
    return config.M_A * markovian_rate(config.delta_A, config.V_A, config.J) / 2.0


def enhanced_alpha(V_A: float, J: float, dx: int) -> float:
    """α₁ = V_A²/(J² − ΔxV_A²/2)"""
    denominator = J ** 2 - dx * V_A ** 2 / 2.0
    if denominator <= 0:
        raise RegimeViolationError("J² − ΔxV_A²/2 ≤ 0: Δx trop grand pour α₁", {"dx": dx})
    return V_A ** 2 / denominator


def enhanced_rate(V_A: float, J: float, dx: int) -> float:
    """Taux exalté 2Jα₁ (tend vers 2Γ₁ quand Δx → 0)"""
    return 2.0 * J * enhanced_alpha(V_A, J, dx)


def enhanced_beta(config: SystemConfig) -> float:
    """β₁ = {[2J²M_BV_B² − ΔxM_BV_A²V_B²]/(8J⁴)}² − M_BV_A²V_B²/(2J⁴)"""
    J, dx = config.J, config.dx
    MB_VB2 = config.M_B * config.V_B ** 2
    VA2 = config.V_A ** 2
    first = (2.0 * J ** 2 * MB_VB2 - dx * MB_VB2 * VA2) / (8.0 * J ** 4)
    return first ** 2 - MB_VB2 * VA2 / (2.0 * J ** 4)


def enhanced_single_prediction(config: SystemConfig) -> RatePrediction:
    """Décroissance exaltée d'un émetteur unique après t₀"""
    beta = enhanced_beta(config)
    if beta <= 0:
        raise RegimeViolationError("β₁ ≤ 0: formule de décroissance exaltée inapplicable", {"beta1": beta})
    alpha = enhanced_alpha(config.V_A, config.J, config.dx)
    prefactor = (config.M_B * config.V_B ** 2 / (4.0 * config.J ** 2) - alpha / 2.0) ** 2 / beta
    flags = validity_flags(config)
    if not flags["odd_dx"]:
        logger.warning(f"⚠️ Formule exaltée évaluée pour Δx={config.dx} pair (hors régime)")
    return RatePrediction("enhanced_single", 2.0 * config.J * alpha, prefactor, config.two_J, flags)


def enhanced_single(config: SystemConfig, t) -> np.ndarray:
    """P_e(t) ≈ [M_BV_B²/(4J²) − α₁/2]² e^{−2Jα₁t}/β₁ (t absolu, pertinent pour t > t₀)"""
    prediction = enhanced_single_prediction(config)
    return prediction.prefactor * np.exp(-prediction.rate * np.asarray(t, dtype=float))


def hyperradiance_rate(V_A: float, J: float, dx: int) -> float:
    """Γ_h = 4JV_A²/(J² − ΔxV_A²)"""
    denominator = J ** 2 - dx * V_A ** 2
    if denominator <= 0:
        raise RegimeViolationError("J² − ΔxV_A² ≤ 0: Γ_h non défini", {"dx": dx})
    return 4.0 * J * V_A ** 2 / denominator


def hyperradiance_chi(config: SystemConfig) -> float:
    """χ = M_BV_B² − ΔxM_BV_A²V_B²/J²"""
    MB_VB2 = config.M_B * config.V_B ** 2
    return MB_VB2 - config.dx * MB_VB2 * config.V_A ** 2 / config.J ** 2


def hyperradiance_prediction(config: SystemConfig) -> RatePrediction:
    """Hyperradiance de la paire symétrique: taux Γ_h et amplitude C₂(0)"""
    J = config.J
    MB_VB2 = config.M_B * config.V_B ** 2
    gamma_h = hyperradiance_rate(config.V_A, J, config.dx)
    discriminant = hyperradiance_chi(config) ** 2 - 16.0 * MB_VB2 * config.V_A ** 2
    if discriminant <= 0:
        raise RegimeViolationError("χ² ≤ 16M_BV_A²V_B²: hyperradiance inapplicable", {"discriminant": discriminant})
    prefactor = (MB_VB2 - J * gamma_h) / math.sqrt(2.0 * discriminant)
    return RatePrediction("hyperradiance", gamma_h, prefactor, config.two_J, validity_flags(config))


def hyperradiance(config: SystemConfig, t) -> np.ndarray:
    """C₂(t) ≈ (M_BV_B² − JΓ_h) e^{−Γ_h t/2} / √(2(χ² − 16M_BV_A²V_B²)); 2|C₂|² = population totale"""
    prediction = hyperradiance_prediction(config)
    return prediction.prefactor * np.exp(-0.5 * prediction.rate * np.asarray(t, dtype=float))


def _is_symmetric_pair(init: InitialState, M_A: int) -> bool:
    vector = init.as_vector(M_A)
    return M_A == 2 and np.allclose(vector, vector[0]) and abs(vector[0]) > 0


def predict_curve(config: SystemConfig, init: InitialState, t) -> Tuple[np.ndarray, RatePrediction]:
    """
    Courbe de population excitée totale prédite par les formules fermées

    - sans diffuseur: décroissance du mode brillant, le poids noir restant piégé
    - un émetteur: e^{−Γ₁t} avant t₀, décroissance exaltée ensuite
    - paire symétrique: e^{−Γ_s t} avant t₀, 2|C₂(t)|² ensuite

    Returns:
        (courbe, prédiction utilisée après t₀)
    """
    t = np.asarray(t, dtype=float)
    if config.M_B == 0:
        weight = abs(init.bright_amplitude(config.M_A)) ** 2
        if abs(config.delta_A) < config.two_J:
            rate = bright_rate(config)
        else:
            rate = 0.0
        prediction = RatePrediction("bright_mode", rate, weight, config.two_J, validity_flags(config))
        return (1.0 - weight) + weight * np.exp(-rate * t), prediction

    t0 = round_trip_time(config)
    if config.M_A == 1:
        prediction = enhanced_single_prediction(config)
        before = np.exp(-normal_rate(config) * t)
        after = prediction.prefactor * np.exp(-prediction.rate * t)
        return np.where(t < t0, before, after), prediction

    if _is_symmetric_pair(init, config.M_A):
        prediction = hyperradiance_prediction(config)
        before = np.exp(-dicke_rate(2, config.V_A, config.J) * t)
        after = 2.0 * (prediction.prefactor * np.exp(-0.5 * prediction.rate * t)) ** 2
        return np.where(t < t0, before, after), prediction

    raise RegimeViolationError(
        f"Aucune formule fermée pour M_A={config.M_A} avec diffuseurs et cet état initial",
        {"MA": config.M_A, "MB": config.M_B},
    )
