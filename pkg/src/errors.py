"""
Hiérarchie d'erreurs du simulateur de guide d'onde
Chaque erreur se sérialise en JSON pour la sortie stderr de la CLI
"""
from typing import Any, Dict, Optional


class WaveguideError(ValueError):
    """Erreur de base : configuration ou calcul invalide"""

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def with_context(self, **extra) -> "WaveguideError":
        """Ajoute des informations de contexte (ex: coordonnée de balayage)"""
        self.context.update(extra)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "context": self.context,
        }


class ConfigurationError(WaveguideError):
    """Paramètres physiques ou état initial invalides"""


class DomainError(WaveguideError):
    """Argument hors du domaine de définition (coupure, bande, grille)"""


class DegenerateRootError(WaveguideError):
    """Racine de G non simple ou état lié dans le continuum"""


class RegimeViolationError(WaveguideError):
    """Formule fermée utilisée hors de son régime de validité"""


class UnfittableSeriesError(WaveguideError):
    """Série temporelle inexploitable pour un ajustement exponentiel"""


class ScenarioError(WaveguideError):
    """Fichier de scénario invalide (schéma, balayage, solveurs)"""
