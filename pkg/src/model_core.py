"""
Modèle physique : guide d'onde en liaisons fortes, émetteurs (A) et diffuseurs (B)

Conventions:
- base du secteur à une excitation: [émetteurs 1..M_A, diffuseurs 1..M_B, sites 1..n_sites]
- sites numérotés à partir de 1, émetteurs et diffuseurs indexés à partir de 0 en Python
- toutes les énergies sont absolues; le document JSON les exprime en unités de 2J
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy import sparse

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12


class EnsembleKind(str, Enum):
    EMITTER = "A"
    SCATTERER = "B"


@dataclass(frozen=True)
class WaveguideParams:
    """Réseau de cavités couplées: ω_k = ω_c + 2J cos(k), pas du réseau fixé à 1"""

    J: float = 0.5
    omega_c: float = 0.0
    n_sites: int = 201
    lattice_constant: float = 1.0

    def __post_init__(self):
        if not self.J > 0:
            raise ConfigurationError("J doit être strictement positif", {"J": self.J})
        if self.n_sites < 3:
            raise ConfigurationError("n_sites doit être ≥ 3", {"n_sites": self.n_sites})
        if self.lattice_constant != 1.0:
            raise ConfigurationError("Le pas du réseau est fixé à 1", {"lattice_constant": self.lattice_constant})

    @property
    def two_J(self) -> float:
        return 2.0 * self.J

    @property
    def band_edges(self) -> Tuple[float, float]:
        return self.omega_c - self.two_J, self.omega_c + self.two_J


@dataclass(frozen=True)
class Ensemble:
    """Collection d'atomes identiques couplés au même site"""

    kind: EnsembleKind
    position: int
    count: int
    omega: float
    coupling: float

    def __post_init__(self):
        if self.count < 0:
            raise ConfigurationError(f"Nombre d'atomes négatif pour l'ensemble {self.kind.value}", {"count": self.count})
        if self.kind is EnsembleKind.EMITTER and self.count < 1:
            raise ConfigurationError("Il faut au moins un émetteur (M_A ≥ 1)", {"MA": self.count})
        if self.coupling < 0:
            raise ConfigurationError(f"Couplage négatif pour l'ensemble {self.kind.value}", {"coupling": self.coupling})


def place_ensembles(n_sites: int, dx: int) -> Tuple[int, int]:
    """Positions (x1, x2) centrées dans le réseau: x1 = ⌈n/2⌉ − ⌈Δx/2⌉, x2 = x1 + Δx"""
    x1 = math.ceil(n_sites / 2) - math.ceil(dx / 2)
    return x1, x1 + dx


@dataclass(frozen=True)
class SystemConfig:
    """Spécification physique complète (guide, émetteurs, diffuseurs)"""

    waveguide: WaveguideParams
    emitters: Ensemble
    scatterers: Ensemble

    def __post_init__(self):
        n = self.waveguide.n_sites
        for ensemble in (self.emitters, self.scatterers):
            if not 1 <= ensemble.position <= n:
                raise ConfigurationError(
                    f"Position {ensemble.position} de l'ensemble {ensemble.kind.value} hors de [1, {n}]",
                    {"position": ensemble.position, "n_sites": n},
                )
        if self.scatterers.count > 0 and self.emitters.position == self.scatterers.position:
            raise ConfigurationError("x1 et x2 doivent différer lorsque M_B > 0", {"x1": self.emitters.position})

    # Accesseurs dérivés
    @property
    def J(self) -> float:
        return self.waveguide.J

    @property
    def two_J(self) -> float:
        return self.waveguide.two_J

    @property
    def dx(self) -> int:
        return abs(self.scatterers.position - self.emitters.position)

    @property
    def delta_A(self) -> float:
        return self.emitters.omega - self.waveguide.omega_c

    @property
    def delta_B(self) -> float:
        return self.scatterers.omega - self.waveguide.omega_c

    @property
    def M_A(self) -> int:
        return self.emitters.count

    @property
    def M_B(self) -> int:
        return self.scatterers.count

    @property
    def V_A(self) -> float:
        return self.emitters.coupling

    @property
    def V_B(self) -> float:
        return self.scatterers.coupling

    @property
    def dimension(self) -> int:
        return self.M_A + self.M_B + self.waveguide.n_sites

    def emitter_index(self, j: int) -> int:
        return j

    def scatterer_index(self, j: int) -> int:
        return self.M_A + j

    def site_index(self, x: int) -> int:
        return self.M_A + self.M_B + x - 1

    @classmethod
    def from_dimensionless(
        cls,
        VA_over_2J: float,
        VB_over_2J: float,
        MA: int,
        MB: int,
        dx: int,
        DeltaA_over_2J: float = 0.0,
        DeltaB_over_2J: float = 0.0,
        n_sites: int = 201,
        J2: float = 1.0,
        omega_c: float = 0.0,
    ) -> "SystemConfig":
        """Construit une configuration à partir des paramètres exprimés en unités de 2J"""
        if J2 <= 0:
            raise ConfigurationError("J2 (valeur de 2J) doit être strictement positif", {"J2": J2})
        if dx < 0:
            raise ConfigurationError("Δx doit être positif ou nul", {"dx": dx})
        x1, x2 = place_ensembles(n_sites, dx)
        waveguide = WaveguideParams(J=J2 / 2.0, omega_c=omega_c, n_sites=n_sites)
        emitters = Ensemble(EnsembleKind.EMITTER, x1, MA, omega_c + DeltaA_over_2J * J2, VA_over_2J * J2)
        scatterers = Ensemble(EnsembleKind.SCATTERER, x2, MB, omega_c + DeltaB_over_2J * J2, VB_over_2J * J2)
        return cls(waveguide, emitters, scatterers)

    def resized(self, n_sites: int) -> "SystemConfig":
        """Même système sur un réseau de n_sites, ensembles recentrés"""
        x1, x2 = place_ensembles(n_sites, self.dx)
        return SystemConfig(
            replace(self.waveguide, n_sites=n_sites),
            replace(self.emitters, position=x1),
            replace(self.scatterers, position=x2),
        )

    def with_separation(self, dx: int) -> "SystemConfig":
        """Même système avec une distance Δx différente (ensembles recentrés)"""
        x1, x2 = place_ensembles(self.waveguide.n_sites, dx)
        return SystemConfig(
            self.waveguide,
            replace(self.emitters, position=x1),
            replace(self.scatterers, position=x2),
        )

    def without_scatterers(self) -> "SystemConfig":
        """Configuration de référence M_B = 0 (mêmes positions)"""
        return replace(self, scatterers=replace(self.scatterers, count=0))

    def to_dict(self) -> Dict[str, float]:
        """Dictionnaire canonique (unités absolues) servant à l'empreinte"""
        return {
            "J": self.J,
            "omega_c": self.waveguide.omega_c,
            "n_sites": self.waveguide.n_sites,
            "x1": self.emitters.position,
            "x2": self.scatterers.position,
            "MA": self.M_A,
            "MB": self.M_B,
            "Omega_A": self.emitters.omega,
            "Omega_B": self.scatterers.omega,
            "V_A": self.V_A,
            "V_B": self.V_B,
        }

    def fingerprint(self) -> str:
        """Empreinte sha256 du JSON canonique de la configuration"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def coherence_length(self) -> float:
        """Longueur de cohérence v_g^m / Γ₁ (infinie sans couplage)"""
        if self.V_A == 0:
            return math.inf
        return self.two_J / (self.V_A ** 2 / self.J)

    def check_coherence(self) -> bool:
        """Avertit si Δx dépasse la moitié de la longueur de cohérence (sans lever d'erreur)"""
        if self.M_B == 0:
            return True
        half = 0.5 * self.coherence_length()
        if self.dx >= half:
            logger.warning(f"⚠️ Δx={self.dx} dépasse la moitié de la longueur de cohérence ({half:.1f} sites)")
            return False
        return True


@dataclass(frozen=True)
class InitialState:
    """Amplitudes initiales non nulles des émetteurs; diffuseurs et champ vides"""

    amplitudes: Tuple[Tuple[int, complex], ...]

    def __post_init__(self):
        if not self.amplitudes:
            raise ConfigurationError("État initial vide")
        indices = [j for j, _ in self.amplitudes]
        if len(set(indices)) != len(indices) or min(indices) < 0:
            raise ConfigurationError("Indices d'émetteurs invalides ou dupliqués", {"indices": indices})
        norm = sum(abs(c) ** 2 for _, c in self.amplitudes)
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise ConfigurationError("État initial non normalisé", {"norm": norm})

    @classmethod
    def single(cls, j: int = 0) -> "InitialState":
        return cls(((j, 1.0 + 0j),))

    @classmethod
    def symmetric_pair(cls, j1: int = 0, j2: int = 1) -> "InitialState":
        c = 1.0 / math.sqrt(2.0)
        return cls(((j1, c + 0j), (j2, c + 0j)))

    @classmethod
    def antisymmetric_pair(cls, j1: int = 0, j2: int = 1) -> "InitialState":
        c = 1.0 / math.sqrt(2.0)
        return cls(((j1, c + 0j), (j2, -c + 0j)))

    @classmethod
    def uniform(cls, M_A: int) -> "InitialState":
        c = 1.0 / math.sqrt(M_A)
        return cls(tuple((j, c + 0j) for j in range(M_A)))

    @property
    def excited_indices(self) -> List[int]:
        return [j for j, c in self.amplitudes if c != 0]

    def amplitude(self, j: int) -> complex:
        return dict(self.amplitudes).get(j, 0j)

    def validate_for(self, M_A: int):
        """Vérifie que tous les indices existent pour M_A émetteurs"""
        too_large = [j for j, _ in self.amplitudes if j >= M_A]
        if too_large:
            raise ConfigurationError(
                f"Émetteur(s) {too_large} inexistant(s) pour M_A={M_A}",
                {"indices": too_large, "MA": M_A},
            )

    def as_vector(self, M_A: int) -> np.ndarray:
        self.validate_for(M_A)
        vector = np.zeros(M_A, dtype=complex)
        for j, c in self.amplitudes:
            vector[j] = c
        return vector

    def bright_amplitude(self, M_A: int) -> complex:
        """Projection sur le mode symétrique (brillant) des émetteurs"""
        return complex(self.as_vector(M_A).sum() / math.sqrt(M_A))

    def dark_weight(self, M_A: int) -> float:
        """Poids hors du mode brillant (reste piégé sans couplage au guide)"""
        return max(0.0, 1.0 - abs(self.bright_amplitude(M_A)) ** 2)


# ---------------------------------------------------------------------------
# Document JSON d'une configuration
# ---------------------------------------------------------------------------

class InitialSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    type: Literal["single", "sym_pair", "antisym_pair", "uniform"] = "single"
    indices: Tuple[int, ...] = (0, 1)

    def build(self, M_A: int) -> InitialState:
        if self.type == "single":
            return InitialState.single(self.indices[0])
        if self.type == "sym_pair":
            return InitialState.symmetric_pair(*self.indices[:2])
        if self.type == "antisym_pair":
            return InitialState.antisymmetric_pair(*self.indices[:2])
        return InitialState.uniform(M_A)


class ConfigDocument(BaseModel):
    """Schéma JSON d'une configuration (énergies en unités de 2J)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    J2: float = Field(gt=0)
    omega_c: float = 0.0
    VA_over_2J: float = Field(ge=0)
    VB_over_2J: float = Field(ge=0)
    DeltaA_over_2J: float = 0.0
    DeltaB_over_2J: float = 0.0
    MA: int = Field(ge=1)
    MB: int = Field(ge=0)
    dx: int = Field(ge=0)
    n_sites: int = Field(default=201, ge=3)
    initial: InitialSpec = InitialSpec()

    def to_system_config(self) -> SystemConfig:
        return SystemConfig.from_dimensionless(
            VA_over_2J=self.VA_over_2J,
            VB_over_2J=self.VB_over_2J,
            MA=self.MA,
            MB=self.MB,
            dx=self.dx,
            DeltaA_over_2J=self.DeltaA_over_2J,
            DeltaB_over_2J=self.DeltaB_over_2J,
            n_sites=self.n_sites,
            J2=self.J2,
            omega_c=self.omega_c,
        )

    def initial_state(self) -> InitialState:
        state = self.initial.build(self.MA)
        state.validate_for(self.MA)
        return state

    def with_parameter(self, name: str, value) -> "ConfigDocument":
        """Copie validée avec un paramètre modifié (utilisé par les balayages)"""
        data = self.model_dump()
        if name not in data or name == "initial":
            raise ConfigurationError(f"Paramètre de balayage inconnu: {name}", {"parameter": name})
        data[name] = value
        return parse_config_document(data)


def format_validation_error(error: ValidationError) -> List[str]:
    """Messages d'erreur pydantic au format 'champ: message'"""
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<racine>"
        messages.append(f"{location}: {item['msg']}")
    return messages


def parse_config_document(data: dict) -> ConfigDocument:
    """Valide un dictionnaire de configuration avec messages par champ"""
    try:
        return ConfigDocument.model_validate(data)
    except ValidationError as exc:
        fields = format_validation_error(exc)
        raise ConfigurationError("Configuration invalide: " + "; ".join(fields), {"fields": fields}) from exc


# ---------------------------------------------------------------------------
# Hamiltonien et cinématique
# ---------------------------------------------------------------------------

def build_hamiltonian(config: SystemConfig) -> sparse.csr_matrix:
    """
    Construit le hamiltonien réel symétrique du secteur à une excitation

    Args:
        config: configuration du système

    Returns:
        Matrice creuse CSR de dimension M_A + M_B + n_sites
    """
    n = config.waveguide.n_sites
    M_A, M_B = config.M_A, config.M_B
    dim = config.dimension

    rows: List[int] = []
    cols: List[int] = []
    values: List[float] = []

    def couple(i: int, j: int, value: float):
        # Chaque terme hors diagonale est inscrit deux fois: symétrie exacte bit à bit
        if value == 0.0:
            return
        rows.extend((i, j))
        cols.extend((j, i))
        values.extend((value, value))

    diagonal = np.empty(dim)
    diagonal[:M_A] = config.emitters.omega
    diagonal[M_A:M_A + M_B] = config.scatterers.omega
    diagonal[M_A + M_B:] = config.waveguide.omega_c

    for x in range(1, n):
        couple(config.site_index(x), config.site_index(x + 1), config.J)
    site_A = config.site_index(config.emitters.position)
    for j in range(M_A):
        couple(config.emitter_index(j), site_A, config.V_A)
    site_B = config.site_index(config.scatterers.position)
    for j in range(M_B):
        couple(config.scatterer_index(j), site_B, config.V_B)

    nonzero = np.flatnonzero(diagonal)
    rows.extend(nonzero.tolist())
    cols.extend(nonzero.tolist())
    values.extend(diagonal[nonzero].tolist())

    return sparse.csr_matrix((values, (rows, cols)), shape=(dim, dim), dtype=float)


def dispersion(k, params: WaveguideParams):
    """ω_k = ω_c + 2J cos(k)"""
    return params.omega_c + params.two_J * np.cos(k)


def group_velocity(k, params: WaveguideParams):
    """v_g(k) = dω_k/dk = −2J sin(k), maximale en |k| = π/2"""
    return -params.two_J * np.sin(k)


def kinematic_delay(dx: int, J: float) -> float:
    """Temps d'aller-retour 2Δx / (2J) à la vitesse de groupe maximale"""
    return dx / J


def round_trip_time(config: SystemConfig) -> float:
    """Instant t₀ = Δx/J d'arrivée du photon réfléchi par les diffuseurs"""
    if config.M_B == 0:
        raise ConfigurationError("t₀ n'est pas défini sans diffuseur (M_B = 0)", {"MB": 0})
    return kinematic_delay(config.dx, config.J)


def to_2J_units(values, config: SystemConfig):
    """Convertit des temps absolus en unités de 1/(2J)"""
    return np.asarray(values) * config.two_J


def sweep_configs(document: ConfigDocument, parameter: Optional[str], values: Iterable) -> List[ConfigDocument]:
    """Documents d'un balayage, dans l'ordre des valeurs"""
    if parameter is None:
        return [document]
    return [document.with_parameter(parameter, value) for value in values]
