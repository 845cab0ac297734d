"""
Paramètres d'exécution lus depuis l'environnement (fichier .env supporté)
"""
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def get_setting(key: str, default: str = "") -> str:
    """Récupère un paramètre depuis os.environ (après chargement du .env)"""
    value = os.environ.get(key)
    if value is None or value.strip() == "":
        return default
    return value.strip()


@dataclass(frozen=True)
class Settings:
    """Configuration du simulateur (dossiers, pool de threads, cache spectral)"""

    log_dir: Path
    log_level: str
    output_dir: Path
    max_workers: int
    eigen_cache_size: int

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_dir=Path(get_setting("WAVEGUIDE_LOG_DIR", "logs")),
            log_level=get_setting("WAVEGUIDE_LOG_LEVEL", "INFO").upper(),
            output_dir=Path(get_setting("WAVEGUIDE_OUTPUT_DIR", "output")),
            max_workers=max(1, int(get_setting("WAVEGUIDE_MAX_WORKERS", "1"))),
            eigen_cache_size=max(0, int(get_setting("WAVEGUIDE_EIGEN_CACHE_SIZE", "4"))),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Instance partagée des paramètres"""
    return Settings.from_env()
