"""
Solution semi-analytique par transformée de Laplace

Contributions à l'amplitude d'un émetteur:
  (i)   pôle en s = −iΩ_A (poids hors du mode brillant),
  (ii)  résidus aux états liés x_m = −iE_m, racines de G(s) = 0,
  (iii) intégrale le long de la coupure de bande y ∈ (−1, 1),
  (iv)  partie polaire des zéros de G₋ sur ou tout près de la coupure
        (états liés dans le continuum, résonances étroites), intégrée
        analytiquement et retirée de (iii).

Convention interne: z = i·s est l'énergie mesurée depuis ω_c, et
R(z) = √(z − 2J)·√(z + 2J) (racines principales) n'a de coupure que sur
[−2J, 2J] avec R ~ z à l'infini. ξ = (z − R)/(2J) vérifie |ξ| < 1 hors coupure.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import bisect

from .errors import ConfigurationError, DegenerateRootError, DomainError
from .logger_config import LoggerConfig
from .model_core import InitialState, SystemConfig

logger = logging.getLogger(__name__)

QUADRATURE_ORDER = 24
PANEL_TOL = 1e-9
MAX_DEPTH = 30
SCAN_STEP = 1e-3
EDGE_DECADES = range(3, 15)
ROOT_XTOL = 1e-12
DEGENERATE_TOL = 1e-12
MAX_EXCITED = 2
RESONANCE_GRID = 4001
RESONANCE_WIDTH = 1e-4
NEWTON_STEPS = 60
REAL_AXIS_TOL = 1e-13
SUM_RULE_TOL = 1e-6
BOUND_STATE_MATCH = 1e-6

_NODES, _WEIGHTS = leggauss(QUADRATURE_ORDER)


# ---------------------------------------------------------------------------
# Fonction de Green du réseau
# ---------------------------------------------------------------------------

def _disc_root(z, J: float):
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - 2.0 * J) * np.sqrt(z + 2.0 * J)


def _green(z, x: int, J: float):
    """ξ^{|x|}/R sans contrôle de domaine"""
    root = _disc_root(z, J)
    xi = (np.asarray(z, dtype=complex) - root) / (2.0 * J)
    return xi ** abs(x) / root


def _green_derivative(z, x: int, J: float):
    """d/dz (ξ^n/R) = −(ξ^n/R²)(n + z/R)"""
    z = np.asarray(z, dtype=complex)
    root = _disc_root(z, J)
    xi = (z - root) / (2.0 * J)
    n = abs(x)
    return -(xi ** n / root ** 2) * (n + z / root)


def _check_off_cut(z, J: float):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise DomainError("F(s, x) n'est pas défini en s = 0")
    on_cut = (np.abs(z.imag) <= 1e-14 * (1.0 + np.abs(z))) & (np.abs(z.real) <= 2.0 * J)
    if np.any(on_cut):
        raise DomainError("s sur la coupure [−2iJ, 2iJ]: utiliser f± (branch_cut_integrand)",
                          {"s": [complex(v) for v in (-1j * z[on_cut])[:3]]})


def F(s, x: int, J: float):
    """
    Fonction de Green du réseau dans le domaine de Laplace

    F(s, x) = ξ^{|x|}/R avec z = i·s; décroît en |x| et F(s, 0) ~ 1/(is) à l'infini.

    Args:
        s: variable de Laplace (scalaire ou tableau complexe)
        x: distance en sites
        J: constante de saut

    Returns:
        Valeur(s) complexe(s)
    """
    z = 1j * np.asarray(s, dtype=complex)
    _check_off_cut(z, J)
    value = _green(z, x, J)
    return value if value.ndim else complex(value)


class StructureFunctions(NamedTuple):
    K_A: complex
    K_B: complex
    L1: complex
    L2: complex
    G: complex


def _structure_z(z, config: SystemConfig, reduced: bool = False) -> StructureFunctions:
    """K_A(M_A), K_B, L₁, L₂, G en fonction de z = i·s"""
    J = config.J
    z = np.asarray(z, dtype=complex)
    g0 = _green(z, 0, J)
    gdx = _green(z, config.dx, J)
    M_A, M_B = config.M_A, config.M_B
    VA2, VB2 = config.V_A ** 2, config.V_B ** 2
    if reduced:
        # Sans diffuseur, le facteur commun (z − Δ_B) est retiré de L₁, L₂ et G
        K_B = np.ones_like(z)
    else:
        K_B = z - config.delta_B - M_B * VB2 * g0
    cross = M_B * VA2 * VB2 * gdx ** 2
    K_A = z - config.delta_A - M_A * VA2 * g0
    K_A_minus = z - config.delta_A - (M_A - 1) * VA2 * g0
    L1 = K_A_minus * K_B - (M_A - 1) * cross
    L2 = K_B * VA2 * g0 + cross
    return StructureFunctions(K_A, K_B, L1, L2, L1 - L2)


def structure_functions(s, config: SystemConfig) -> StructureFunctions:
    """
    Fonctions de structure de la résolvante en s (hors coupure)

    K_i(s, M_i) = is − Ω_i − M_i V_i² F(s, 0)
    L₁ = K_A(s, M_A − 1) K_B − (M_A − 1) M_B (V_A V_B F(s, Δx))²
    L₂ = K_B V_A² F(s, 0) + M_B (V_A V_B F(s, Δx))²
    G  = L₁ − L₂
    """
    z = 1j * np.asarray(s, dtype=complex)
    _check_off_cut(z, config.J)
    values = _structure_z(z, config)
    if np.ndim(values.G) == 0:
        return StructureFunctions(*(complex(v) for v in values))
    return values


def _G_derivative_z(z, config: SystemConfig, reduced: bool = False):
    """dG/dz (dG/ds = i·dG/dz)"""
    J = config.J
    g0 = _green(z, 0, J)
    g0p = _green_derivative(z, 0, J)
    VA2, VB2 = config.V_A ** 2, config.V_B ** 2
    M_A, M_B = config.M_A, config.M_B
    K_A = z - config.delta_A - M_A * VA2 * g0
    dK_A = 1.0 - M_A * VA2 * g0p
    if reduced:
        return dK_A
    gdx = _green(z, config.dx, J)
    gdxp = _green_derivative(z, config.dx, J)
    K_B = z - config.delta_B - M_B * VB2 * g0
    dK_B = 1.0 - M_B * VB2 * g0p
    return dK_A * K_B + K_A * dK_B - 2.0 * M_A * M_B * VA2 * VB2 * gdx * gdxp


# ---------------------------------------------------------------------------
# Valeurs au bord de la coupure
# ---------------------------------------------------------------------------

def f_pm(y, x: int, alpha: int, J: float):
    """
    f_±(y, x) = ±i(−y ± i√(1 − y²))^{|x|} / (2J√(1 − y²))

    f₋ est la valeur retardée de F en E + i0 (E = −2Jy), f₊ la valeur avancée.
    """
    y = np.asarray(y, dtype=float)
    root = np.sqrt(1.0 - y ** 2)
    return alpha * 1j * (-y + alpha * 1j * root) ** abs(x) / (2.0 * J * root)


def _cut_Q(y, alpha: int, config: SystemConfig, reduced: bool = False):
    J = config.J
    f0 = f_pm(y, 0, alpha, J)
    fdx = f_pm(y, config.dx, alpha, J)
    energy = -2.0 * J * np.asarray(y, dtype=float)
    VA2, VB2 = config.V_A ** 2, config.V_B ** 2
    M_A, M_B = config.M_A, config.M_B
    U_A_minus = energy - config.delta_A - (M_A - 1) * VA2 * f0
    U_B = np.ones_like(f0) if reduced else energy - config.delta_B - M_B * VB2 * f0
    cross = M_B * VA2 * VB2 * fdx ** 2
    Q1 = U_A_minus * U_B - (M_A - 1) * cross
    Q2 = U_B * VA2 * f0 + cross
    return Q1, Q2


def branch_cut_integrand(y, alpha: int, config: SystemConfig):
    """
    (Q₁^α, Q₂^α) sur la coupure, avec U_i^α(y, M) = −2Jy − Δ_i − M V_i² f_α(y, 0)

    Q₁^α = U_A^α(M_A − 1) U_B^α − (M_A − 1) M_B V_A² V_B² f_α(y, Δx)²
    Q₂^α = U_B^α V_A² f_α(y, 0) + M_B V_A² V_B² f_α(y, Δx)²
    """
    if alpha not in (-1, 1):
        raise DomainError("α doit valoir ±1", {"alpha": alpha})
    y_arr = np.asarray(y, dtype=float)
    if np.any(np.abs(y_arr) >= 1.0):
        raise DomainError("y doit vérifier |y| < 1", {"y": float(np.max(np.abs(y_arr)))})
    Q1, Q2 = _cut_Q(y_arr, alpha, config)
    if np.ndim(Q1) == 0:
        return complex(Q1), complex(Q2)
    return Q1, Q2


def _cut_weight(y: np.ndarray, config: SystemConfig, reduced: bool) -> np.ndarray:
    """
    Poids de coupure, commun à c_self et c_other: −(iJ/πM_A) Σ_α α U_B^α/G^α

    Les termes en 1/(y + Δ_A/2J) de Q₁/G et Q₂/G s'annulent dans la somme sur α.
    """
    J = config.J
    energy = -2.0 * J * np.asarray(y, dtype=float)
    total = np.zeros_like(energy, dtype=complex)
    for alpha in (-1, 1):
        Q1, Q2 = _cut_Q(y, alpha, config, reduced)
        if reduced:
            U_B = np.ones_like(Q1)
        else:
            U_B = energy - config.delta_B - config.M_B * config.V_B ** 2 * f_pm(y, 0, alpha, J)
        total += alpha * U_B / (Q1 - Q2)
    return -1j * J / (math.pi * config.M_A) * total


# ---------------------------------------------------------------------------
# Quadrature adaptative
# ---------------------------------------------------------------------------

def _panel(function: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> np.ndarray:
    nodes = 0.5 * (b - a) * _NODES + 0.5 * (b + a)
    return 0.5 * (b - a) * (_WEIGHTS @ function(nodes))


def adaptive_gauss_legendre(
    function: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = PANEL_TOL,
    max_depth: int = MAX_DEPTH,
) -> Tuple[np.ndarray, int]:
    """
    Intègre une fonction vectorielle par panneaux de Gauss–Legendre

    Un panneau est accepté quand ses deux moitiés reproduisent l'estimation grossière
    à tol près sur toutes les composantes. Ordre de sommation fixe (gauche à droite).

    Returns:
        (intégrale, nombre de panneaux acceptés)
    """
    def refine(left: float, right: float, coarse: np.ndarray, depth: int) -> Tuple[np.ndarray, int]:
        middle = 0.5 * (left + right)
        first = _panel(function, left, middle)
        second = _panel(function, middle, right)
        fine = first + second
        if depth >= max_depth or np.max(np.abs(fine - coarse)) <= tol:
            if depth >= max_depth:
                logger.warning(f"⚠️ Profondeur maximale atteinte sur [{left:.3e}, {right:.3e}]")
            return fine, 2
        sum_left, n_left = refine(left, middle, first, depth + 1)
        sum_right, n_right = refine(middle, right, second, depth + 1)
        return sum_left + sum_right, n_left + n_right

    return refine(a, b, _panel(function, a, b), 0)


# ---------------------------------------------------------------------------
# États liés
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundState:
    """Racine x_m = −iE_m de G (E_m mesurée depuis ω_c)"""

    energy: float
    g_prime: complex
    field_decay_length: float

    @property
    def laplace_root(self) -> complex:
        return -1j * self.energy


def scan_limit(config: SystemConfig) -> float:
    """E_max = 4J + 4·max(M_A V_A², M_B V_B²)^{1/2} + max(|Δ_A|, |Δ_B|)"""
    coupling = max(config.M_A * config.V_A ** 2, config.M_B * config.V_B ** 2)
    return 2.0 * config.two_J + 4.0 * math.sqrt(coupling) + max(abs(config.delta_A), abs(config.delta_B))


def _scan_grid(config: SystemConfig) -> np.ndarray:
    two_J = config.two_J
    e_max = scan_limit(config)
    near_edge = two_J * (1.0 + 10.0 ** -np.array(sorted(EDGE_DECADES, reverse=True), dtype=float))
    regular = np.arange(two_J * (1.0 + SCAN_STEP), e_max, SCAN_STEP * two_J)
    positive = np.unique(np.concatenate([near_edge, regular, [e_max]]))
    return positive


@lru_cache(maxsize=64)
def _bound_states_cached(config: SystemConfig) -> Tuple[BoundState, ...]:
    reduced = config.M_B == 0
    two_J = config.two_J

    def real_G(energy: float) -> float:
        return float(np.real(_structure_z(energy + 0j, config, reduced).G))

    states: List[BoundState] = []
    for side in (-1.0, 1.0):
        grid = side * _scan_grid(config)
        if side < 0:
            grid = grid[::-1]
        values = np.real(_structure_z(grid.astype(complex), config, reduced).G)
        roots = [float(grid[i]) for i in np.flatnonzero(values == 0.0)]
        signs = np.sign(values)
        for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
            roots.append(bisect(real_G, grid[i], grid[i + 1], xtol=ROOT_XTOL * two_J))
        for energy in sorted(roots):
            if abs(energy - config.delta_A) <= 1e-9 * two_J:
                continue
            g_prime = complex(1j * _G_derivative_z(energy + 0j, config, reduced))
            if abs(g_prime) < DEGENERATE_TOL:
                raise DegenerateRootError(f"Racine non simple de G en E={energy:.12g}",
                                          {"energy": energy, "g_prime": abs(g_prime)})
            root = _disc_root(energy + 0j, config.J)
            xi = abs(complex((energy - root) / two_J))
            decay = -1.0 / math.log(xi) if 0.0 < xi < 1.0 else math.inf
            states.append(BoundState(energy=energy, g_prime=g_prime, field_decay_length=decay))
    states.sort(key=lambda state: state.energy)
    logger.info(f"✅ {len(states)} état(s) lié(s) trouvé(s)")
    return tuple(states)


def find_bound_states(config: SystemConfig) -> List[BoundState]:
    """
    Racines réelles E de G(−iE) = 0 avec 2J < |E| ≤ E_max

    Balayage des changements de signe (pas 1e−3·2J, plus une grille logarithmique
    près des bords de bande) puis bissection à 1e−12·2J. Sans diffuseur, la racine
    parasite E = Δ_B est écartée.
    """
    return list(_bound_states_cached(config))


def cross_check_bound_states(config: SystemConfig) -> Dict[str, Any]:
    """
    Compare les états liés aux valeurs propres hors bande du réseau fini

    Returns:
        {"n_analytic", "n_finite", "max_deviation", "consistent"}; max_deviation vaut
        None quand les deux comptes diffèrent
    """
    from .oracle_dynamics import out_of_band_energies

    analytic = np.array([state.energy for state in find_bound_states(config)])
    finite = out_of_band_energies(config)
    report: Dict[str, Any] = {"n_analytic": int(analytic.size), "n_finite": int(finite.size),
                              "max_deviation": None, "consistent": False}
    if analytic.size != finite.size:
        logger.warning(f"⚠️ {analytic.size} racine(s) de G contre {finite.size} valeur(s) propre(s) hors bande")
        return report
    deviation = float(np.max(np.abs(np.sort(analytic) - np.sort(finite)))) if analytic.size else 0.0
    report["max_deviation"] = deviation
    report["consistent"] = deviation <= BOUND_STATE_MATCH * config.two_J
    if not report["consistent"]:
        logger.warning(f"⚠️ États liés décalés de {deviation:.2e} par rapport au réseau fini")
    return report


# ---------------------------------------------------------------------------
# Résonances dans la bande (états liés dans le continuum et quasi-liés étroits)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuumResonance:
    """
    Zéro de G₋ (prolongée analytiquement) au voisinage de la bande

    y = −E/(2J) avec Im y ≥ 0; width_2J = 0 pour un état lié dans le continuum.
    residue est le résidu K_B/(dG/dE) du mode brillant.
    """

    y: complex
    residue: complex

    @property
    def energy_2J(self) -> float:
        return -self.y.real

    @property
    def width_2J(self) -> float:
        return self.y.imag

    @property
    def trapped(self) -> bool:
        return self.y.imag == 0.0


def _retarded_bright(y, config: SystemConfig, reduced: bool):
    """U_B, G et dG/dy sur la branche retardée (α = −1), y complexe près de (−1, 1)"""
    J = config.J
    y = np.asarray(y, dtype=complex)
    root = np.sqrt(1.0 - y ** 2)
    n = config.dx
    f0 = -1j / (2.0 * J * root)
    fdx = -1j * (-y - 1j * root) ** n / (2.0 * J * root)
    d_f0 = f0 * y / root ** 2
    d_fdx = fdx * (-1j * n / root + y / root ** 2)
    VA2, VB2 = config.V_A ** 2, config.V_B ** 2
    M_A, M_B = config.M_A, config.M_B
    energy = -2.0 * J * y
    U_A = energy - config.delta_A - M_A * VA2 * f0
    d_U_A = -2.0 * J - M_A * VA2 * d_f0
    if reduced:
        return np.ones_like(y), U_A, d_U_A
    U_B = energy - config.delta_B - M_B * VB2 * f0
    d_U_B = -2.0 * J - M_B * VB2 * d_f0
    G = U_A * U_B - M_A * M_B * VA2 * VB2 * fdx ** 2
    d_G = d_U_A * U_B + U_A * d_U_B - 2.0 * M_A * M_B * VA2 * VB2 * fdx * d_fdx
    return U_B, G, d_G


def _newton_root(start: complex, config: SystemConfig, reduced: bool) -> Optional[complex]:
    y = complex(start)
    step = math.inf
    for _ in range(NEWTON_STEPS):
        _, G, d_G = _retarded_bright(y, config, reduced)
        if G == 0:
            return y
        if d_G == 0:
            return None
        step = abs(complex(G / d_G))
        y -= complex(G / d_G)
        if abs(y.real) >= 1.0:
            return None
        if step <= 1e-15 * (1.0 + abs(y)):
            return y
    # bruit d'arrondi sur G: convergence acceptée au niveau 1e−12
    return y if step <= 1e-12 else None


@lru_cache(maxsize=64)
def _resonances_cached(config: SystemConfig) -> Tuple[ContinuumResonance, ...]:
    if config.V_A == 0:
        return ()
    reduced = config.M_B == 0
    theta = np.linspace(0.0, math.pi, RESONANCE_GRID)[1:-1]
    grid = np.cos(theta)
    magnitude = np.abs(_retarded_bright(grid, config, reduced)[1])
    minima = np.flatnonzero((magnitude[1:-1] <= magnitude[:-2]) & (magnitude[1:-1] <= magnitude[2:])) + 1
    starts = [float(grid[i]) for i in minima]
    if abs(config.delta_A) < config.two_J:
        starts.append(-config.delta_A / config.two_J)

    found: List[ContinuumResonance] = []
    for start in starts:
        y = _newton_root(start, config, reduced)
        if y is None or abs(y.real) >= 1.0 - 1e-9 or not -REAL_AXIS_TOL <= y.imag <= RESONANCE_WIDTH:
            continue
        if abs(y.imag) <= REAL_AXIS_TOL:
            y = complex(y.real, 0.0)
        if any(abs(y - other.y) <= 1e-10 for other in found):
            continue
        U_B, _, d_G = _retarded_bright(y, config, reduced)
        residue = complex(-config.two_J * U_B / d_G)
        if y.imag == 0.0:
            # Le résidu d'un état propre plongé dans la bande est réel
            residue = complex(residue.real, 0.0)
        found.append(ContinuumResonance(y=y, residue=residue))
    found.sort(key=lambda resonance: resonance.y.real)
    if found:
        logger.info(f"ℹ️ {len(found)} résonance(s) étroite(s) dans la bande, dont "
                    f"{sum(r.trapped for r in found)} état(s) lié(s) dans le continuum")
    return tuple(found)


def find_continuum_resonances(config: SystemConfig) -> List[ContinuumResonance]:
    """
    Zéros réels ou quasi réels de G₋ dans la bande (largeur en y ≤ 1e−4)

    Un zéro réel est un état lié dans le continuum (Δ_A = Δ_B et Δx pair par exemple);
    un zéro proche de l'axe est une résonance quasi liée trop étroite pour la quadrature.
    Leur partie polaire est retirée de l'intégrande de coupure et intégrée analytiquement.
    """
    return list(_resonances_cached(config))


def _log_integral(c: complex, upper: bool) -> complex:
    """∫_{−1}^{1} dy/(y − c), c approché par Im c > 0 (upper) ou Im c < 0"""
    imag = -abs(c.imag) if upper else abs(c.imag)
    right = complex(1.0 - c.real, imag)
    left = complex(-1.0 - c.real, imag)
    return complex(math.log(abs(right) / abs(left)),
                   math.atan2(right.imag, right.real) - math.atan2(left.imag, left.real))


def _resonance_poles(config: SystemConfig) -> List[Tuple[complex, complex, bool]]:
    """(pôle en y, coefficient, côté) des parties polaires de l'intégrande de coupure"""
    poles = []
    scale = 1j * config.J / (math.pi * config.M_A)
    for resonance in find_continuum_resonances(config):
        # residue = −2J ρ avec ρ le résidu de U_B/G₋ en y
        rho = -resonance.residue / config.two_J
        poles.append((resonance.y, scale * rho, True))
        poles.append((resonance.y.conjugate(), -scale * rho.conjugate(), False))
    return poles


# ---------------------------------------------------------------------------
# Amplitudes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolventContext:
    """Configuration validée pour le chemin de la résolvante (≤ 2 émetteurs excités)"""

    config: SystemConfig
    init: InitialState
    branch: str = "principal-sqrt"
    constants: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def create(cls, config: SystemConfig, init: InitialState) -> "ResolventContext":
        init.validate_for(config.M_A)
        excited = init.excited_indices
        if len(excited) > MAX_EXCITED:
            raise ConfigurationError(
                f"La résolvante ne traite que {MAX_EXCITED} émetteurs excités ({len(excited)} demandés)",
                {"excited": excited},
            )
        constants = {
            "two_J": config.two_J,
            "pole_shift": config.delta_A / config.two_J,
            "scan_limit": scan_limit(config),
        }
        return cls(config=config, init=init, constants=constants)

    @property
    def regime(self) -> str:
        return "pole-on-cut" if abs(self.config.delta_A) < self.config.two_J else "pole-off-cut"

    def coefficients(self, j: int) -> Tuple[complex, complex]:
        """(c_self, c_other) pour l'émetteur cible j"""
        vector = self.init.as_vector(self.config.M_A)
        c_self = complex(vector[j])
        return c_self, complex(vector.sum() - c_self)


@dataclass(frozen=True)
class AmplitudeDecomposition:
    """
    Contributions pour C_j^A(t) (temps absolus)

    resonance regroupe la partie polaire retirée de la coupure autour des zéros
    de G₋ proches de l'axe réel; pour un état lié dans le continuum c'est le
    poids piégé r·e^{−iE*t}/M_A.
    """

    t: np.ndarray
    pole: np.ndarray
    bound: np.ndarray
    resonance: np.ndarray
    cut: np.ndarray
    regime: str
    n_panels: int

    @property
    def total(self) -> np.ndarray:
        return self.pole + self.bound + self.resonance + self.cut


def _kernels(context: ResolventContext, t: np.ndarray) -> Tuple[Dict[str, Tuple[np.ndarray, np.ndarray]], int]:
    """
    Noyaux (coefficient de c_self, coefficient de c_other) de chaque contribution

    Raises:
        DegenerateRootError: si la règle de somme à t = 0 n'est pas respectée à 1e−6
    """
    config = context.config
    reduced = config.M_B == 0
    M_A = config.M_A
    t = np.concatenate([[0.0], t])
    phase = np.exp(-1j * config.delta_A * t)

    if config.V_A == 0:
        pole = (phase, np.zeros_like(phase))
    else:
        pole = ((M_A - 1) / M_A * phase, -phase / M_A)

    bound = np.zeros_like(phase)
    for state in find_bound_states(config):
        energy = state.energy
        functions = _structure_z(energy + 0j, config, reduced)
        derivative = _G_derivative_z(energy + 0j, config, reduced)
        residue = complex(functions.L2 / ((energy - config.delta_A) * derivative))
        bound = bound + residue * np.exp(-1j * energy * t)

    two_J = config.two_J
    poles = _resonance_poles(config)

    def integrand(theta: np.ndarray) -> np.ndarray:
        y = np.cos(theta)
        weight = _cut_weight(y, config, reduced) * np.sin(theta)
        values = weight[:, None] * np.exp(1j * two_J * np.outer(y, t))
        for center, coefficient, _ in poles:
            values -= (coefficient * np.sin(theta) / (y - center))[:, None] * np.exp(1j * two_J * center * t)
        return values

    breakpoints = {0.0, math.pi}
    if abs(config.delta_A) < two_J:
        breakpoints.add(math.acos(-config.delta_A / two_J))
    breakpoints.update(math.acos(center.real) for center, _, _ in poles)
    breakpoints = sorted(breakpoints)
    cut = np.zeros(t.size, dtype=complex)
    n_panels = 0
    for left, right in zip(breakpoints[:-1], breakpoints[1:]):
        value, panels = adaptive_gauss_legendre(integrand, left, right)
        cut += value
        n_panels += panels

    resonance = np.zeros(t.size, dtype=complex)
    for center, coefficient, upper in poles:
        resonance += coefficient * _log_integral(center, upper) * np.exp(1j * two_J * center * t)

    kernels = {
        "pole": pole,
        "bound": (bound, bound),
        "resonance": (resonance, resonance),
        "cut": (cut, cut),
    }
    at_zero = (sum(pair[0][0] for pair in kernels.values()), sum(pair[1][0] for pair in kernels.values()))
    defect = abs(at_zero[0] - 1.0) + abs(at_zero[1])
    if defect > SUM_RULE_TOL:
        raise DegenerateRootError(
            "Règle de somme violée à t = 0: racine de G mal résolue près de la bande",
            {"defect": float(defect), "dx": config.dx, "DeltaA": config.delta_A, "DeltaB": config.delta_B,
             "resonances": len(poles) // 2},
        )
    return {name: (k_self[1:], k_other[1:]) for name, (k_self, k_other) in kernels.items()}, n_panels


def _absolute_times(t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise DomainError("Les instants doivent être positifs", {"t_min": float(t.min())})
    return t


def decompose_amplitude(config: SystemConfig, init: InitialState, t, index: Optional[int] = None) -> AmplitudeDecomposition:
    """
    Décompose C_j^A(t) en pôle, résidus d'états liés, résonances et intégrale de coupure

    Args:
        config: configuration
        init: état initial (au plus deux émetteurs excités)
        t: instants (temps absolus)
        index: émetteur cible (défaut: premier émetteur excité)
    """
    context = ResolventContext.create(config, init)
    t = _absolute_times(t)
    j = context.init.excited_indices[0] if index is None else index
    if not 0 <= j < config.M_A:
        raise ConfigurationError(f"Émetteur {j} inexistant (M_A={config.M_A})", {"index": j})
    c_self, c_other = context.coefficients(j)
    kernels, n_panels = _kernels(context, t)
    carrier = np.exp(-1j * config.waveguide.omega_c * t)
    parts = {name: carrier * (k_self * c_self + k_other * c_other) for name, (k_self, k_other) in kernels.items()}
    return AmplitudeDecomposition(t=t, pole=parts["pole"], bound=parts["bound"], resonance=parts["resonance"],
                                  cut=parts["cut"], regime=context.regime, n_panels=n_panels)


def amplitude(config: SystemConfig, init: InitialState, t, index: Optional[int] = None) -> np.ndarray:
    """C_j^A(t) complexe; l'émetteur j₂ s'obtient en échangeant les rôles de c_self et c_other"""
    return decompose_amplitude(config, init, t, index).total


def emitter_amplitudes(config: SystemConfig, init: InitialState, t) -> np.ndarray:
    """Amplitudes de tous les émetteurs, tableau (n_t, M_A), noyaux calculés une seule fois"""
    started = time.perf_counter()
    context = ResolventContext.create(config, init)
    t = _absolute_times(t)
    kernels, n_panels = _kernels(context, t)
    k_self = sum(pair[0] for pair in kernels.values())
    k_other = sum(pair[1] for pair in kernels.values())
    carrier = np.exp(-1j * config.waveguide.omega_c * t)
    result = np.empty((t.size, config.M_A), dtype=complex)
    for j in range(config.M_A):
        c_self, c_other = context.coefficients(j)
        result[:, j] = carrier * (k_self * c_self + k_other * c_other)
    LoggerConfig.log_solver_run("resolvent", config.fingerprint(), config.M_A,
                                {"regime": context.regime, "n_panels": n_panels,
                                 "resonances": len(find_continuum_resonances(config)),
                                 "duration_seconds": round(time.perf_counter() - started, 4)})
    return result


def emitter_population(config: SystemConfig, init: InitialState, t) -> np.ndarray:
    """Population excitée totale Σ_j |C_j^A(t)|² par la résolvante"""
    return (np.abs(emitter_amplitudes(config, init, t)) ** 2).sum(axis=1)
