"""
Ajustement des taux de décroissance avant/après l'arrivée du photon réfléchi
et détection du point de rupture de pente de log P_e
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .closed_forms import normal_rate, predicted_parity
from .errors import UnfittableSeriesError
from .model_core import InitialState, SystemConfig, kinematic_delay
from .oracle_dynamics import evolve

logger = logging.getLogger(__name__)

POPULATION_FLOOR = 1e-12
CURVATURE_FLOOR = 1e-6
SMOOTHING_SAMPLES = 5
BEFORE_WINDOW = (0.1, 0.9)
AFTER_WINDOW = (1.2, 3.0)
CHANGE_SEARCH = (0.5, 1.5)


@dataclass(frozen=True)
class WindowFit:
    window: Tuple[float, float]
    rate: float
    half_width: float
    residual_rms: float
    n_points: int


@dataclass(frozen=True)
class RateFit:
    """Taux ajustés (mêmes unités inverses que la grille temporelle fournie)"""

    t0: float
    t_change: Optional[float]
    before: WindowFit
    after: WindowFit
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def rate_before(self) -> float:
        return self.before.rate

    @property
    def rate_after(self) -> float:
        return self.after.rate

    @property
    def change_detected(self) -> bool:
        return self.t_change is not None

    def to_dict(self) -> Dict:
        def window(fit: WindowFit) -> Dict:
            return {
                "window": list(fit.window),
                "rate": fit.rate,
                "half_width_95": fit.half_width,
                "residual_rms": fit.residual_rms,
                "n_points": fit.n_points,
            }

        return {
            "t0": self.t0,
            "t_change": self.t_change if self.t_change is not None else "undetected",
            "before": window(self.before),
            "after": window(self.after),
        }


def _log_population(population: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(population, 1e-300))


def _fit_window(t: np.ndarray, population: np.ndarray, window: Tuple[float, float]) -> WindowFit:
    """Régression linéaire de log P_e sur la fenêtre, raccourcie là où P_e < 1e−12"""
    start, stop = window
    indices = np.flatnonzero((t >= start) & (t <= stop))
    usable = population[indices] > POPULATION_FLOOR
    if indices.size and not usable.all():
        first_bad = int(np.argmin(usable))
        indices = indices[:first_bad]
        if indices.size:
            logger.warning(f"⚠️ Fenêtre [{start:.3g}, {stop:.3g}] raccourcie à {t[indices[-1]]:.3g} (P_e < 1e−12)")
    if indices.size < 3:
        raise UnfittableSeriesError(
            f"Moins de 3 points exploitables dans la fenêtre [{start:.4g}, {stop:.4g}]",
            {"window": [start, stop], "n_points": int(indices.size)},
        )
    x = t[indices]
    y = _log_population(population[indices])
    regression = stats.linregress(x, y)
    residuals = y - (regression.intercept + regression.slope * x)
    dof = indices.size - 2
    half_width = float(stats.t.ppf(0.975, dof) * regression.stderr) if dof > 0 else math.inf
    return WindowFit(
        window=(float(x[0]), float(x[-1])),
        rate=float(-regression.slope),
        half_width=half_width,
        residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
        n_points=int(indices.size),
    )


def detect_change_point(t: np.ndarray, population: np.ndarray, t0: float) -> Tuple[Optional[float], float]:
    """
    Argmax de |Δ² log P_e| lissé sur 5 échantillons dans [0.5·t₀, 1.5·t₀]

    Returns:
        (instant détecté ou None, courbure maximale)
    """
    if t.size < SMOOTHING_SAMPLES + 2 or t0 <= 0:
        return None, 0.0
    smoothed = pd.Series(_log_population(population)).rolling(
        SMOOTHING_SAMPLES, center=True, min_periods=1).mean().to_numpy()
    dt = float(np.mean(np.diff(t)))
    curvature = np.abs(np.diff(smoothed, 2)) / dt ** 2
    centres = t[1:-1]
    low, high = CHANGE_SEARCH
    region = np.flatnonzero((centres >= low * t0) & (centres <= high * t0))
    if region.size == 0:
        return None, 0.0
    best = region[int(np.argmax(curvature[region]))]
    peak = float(curvature[best])
    if peak < CURVATURE_FLOOR:
        return None, peak
    return float(centres[best]), peak


def fit_rates(
    t,
    population,
    t0: float,
    before_window: Optional[Tuple[float, float]] = None,
    after_window: Optional[Tuple[float, float]] = None,
) -> RateFit:
    """
    Ajuste les taux avant et après t₀ sur log P_e

    Args:
        t: grille temporelle (croissante)
        population: P_e(t)
        t0: temps d'aller-retour cinématique (indice)
        before_window: fenêtre avant, défaut [0.1·t₀, 0.9·t₀]
        after_window: fenêtre après, défaut [1.2·t₀, min(3·t₀, fin)]

    Returns:
        RateFit avec t_change détecté (None si aucune rupture)
    """
    t = np.asarray(t, dtype=float)
    population = np.asarray(population, dtype=float)
    if t.shape != population.shape:
        raise UnfittableSeriesError("Grille temporelle et série de tailles différentes")
    end = float(t[-1])
    before_window = before_window or (BEFORE_WINDOW[0] * t0, BEFORE_WINDOW[1] * t0)
    after_window = after_window or (AFTER_WINDOW[0] * t0, min(AFTER_WINDOW[1] * t0, end))
    if before_window[1] >= after_window[0]:
        raise UnfittableSeriesError("Les fenêtres d'ajustement se chevauchent",
                                    {"before": list(before_window), "after": list(after_window)})
    before = _fit_window(t, population, before_window)
    after = _fit_window(t, population, after_window)
    t_change, curvature = detect_change_point(t, population, t0)
    if t_change is None:
        logger.info("ℹ️ Aucune rupture de pente détectée")
    return RateFit(t0=t0, t_change=t_change, before=before, after=after,
                   diagnostics={"max_curvature": curvature})


def log_rms_deviation(t, reference, approximation, window: Tuple[float, float]) -> float:
    """Écart quadratique moyen entre log(reference) et log(approximation) sur la fenêtre"""
    t = np.asarray(t, dtype=float)
    mask = (t >= window[0]) & (t <= window[1])
    if mask.sum() == 0:
        raise UnfittableSeriesError("Fenêtre de comparaison vide", {"window": list(window)})
    difference = _log_population(np.asarray(reference)[mask]) - _log_population(np.asarray(approximation)[mask])
    return float(np.sqrt(np.mean(difference ** 2)))


def parity_sweep(base: SystemConfig, dx_values: Iterable[int], t_max_factor: float = 3.5) -> pd.DataFrame:
    """
    Rapport rate_after/Γ₁ en fonction de Δx (un émetteur excité, oracle exact)

    Returns:
        DataFrame (dx, parity, predicted_parity, rate_before, rate_after, ratio, t_change), temps en unités de 2J
    """
    if abs(base.delta_B) > 1e-12 * base.two_J:
        logger.warning("⚠️ Balayage de parité avec Δ_B ≠ 0: la règle de parité ne s'applique pas")
    gamma_2J = normal_rate(base) / base.two_J
    rows = []
    for dx in dx_values:
        config = base.with_separation(int(dx))
        t0_2J = kinematic_delay(int(dx), config.J) * config.two_J
        t_max = (t_max_factor * t0_2J + 10.0) / config.two_J
        trajectory = evolve(config, InitialState.single(0), t_max, store_field=False)
        fit = fit_rates(trajectory.t_2J, trajectory.emitter_population, t0_2J)
        rows.append({
            "dx": int(dx),
            "parity": "odd" if dx % 2 else "even",
            "predicted_parity": predicted_parity(int(dx)),
            "rate_before": fit.rate_before,
            "rate_after": fit.rate_after,
            "ratio": fit.rate_after / gamma_2J if gamma_2J > 0 else math.nan,
            "t_change": fit.t_change if fit.t_change is not None else math.nan,
        })
        logger.info(f"✅ Δx={dx}: rapport {rows[-1]['ratio']:.3f}")
    return pd.DataFrame(rows)
