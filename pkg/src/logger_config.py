"""
Configuration centralisée du logging du simulateur
Support: fichier local avec rotation, console, entrées JSON structurées
"""
import json
import logging
import logging.handlers
from datetime import datetime
from pathlib import Path
from typing import Optional

from .settings import get_settings


class LoggerConfig:
    """Gestionnaire centralisé des logs (instancié par le point d'entrée)"""

    _instance = None
    LOG_DIR = Path("logs")
    LOG_FILE = LOG_DIR / "waveguide.log"

    def __new__(cls, log_dir: Optional[Path] = None, level: Optional[str] = None):
        if cls._instance is None:
            cls._instance = super(LoggerConfig, cls).__new__(cls)
            cls._instance._setup_logging(log_dir, level)
        return cls._instance

    def _setup_logging(self, log_dir: Optional[Path], level: Optional[str]):
        """Configure le logging avec rotation et formatage"""
        settings = get_settings()
        LoggerConfig.LOG_DIR = Path(log_dir or settings.log_dir)
        LoggerConfig.LOG_FILE = LoggerConfig.LOG_DIR / f"waveguide_{datetime.now().strftime('%Y%m%d')}.log"
        LoggerConfig.LOG_DIR.mkdir(parents=True, exist_ok=True)
        log_level = getattr(logging, (level or settings.log_level).upper(), logging.INFO)

        file_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        console_formatter = logging.Formatter('%(levelname)s - %(name)s - %(message)s')

        # Rotation: 10MB par fichier, 7 fichiers
        file_handler = logging.handlers.RotatingFileHandler(
            LoggerConfig.LOG_FILE,
            maxBytes=10 * 1024 * 1024,
            backupCount=7,
            encoding="utf-8",
        )
        file_handler.setFormatter(file_formatter)
        file_handler.setLevel(log_level)

        # La console va sur stderr, stdout reste réservé aux résultats JSON
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(console_formatter)
        console_handler.setLevel(log_level)

        root_logger = logging.getLogger()
        root_logger.setLevel(log_level)
        root_logger.addHandler(file_handler)
        root_logger.addHandler(console_handler)

        root_logger.info("=" * 80)
        root_logger.info(f"🚀 Simulateur démarré - {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        root_logger.info(f"📁 Logs: {LoggerConfig.LOG_FILE}")
        root_logger.info("=" * 80)

    @staticmethod
    def log_performance(function_name: str, duration_seconds: float, success: bool, details: dict = None):
        """Log les métriques de performance d'un calcul"""
        logger = logging.getLogger("PERFORMANCE")
        status = "✅ SUCCESS" if success else "❌ FAILED"
        log_entry = {
            'timestamp': datetime.now().isoformat(),
            'function': function_name,
            'duration_seconds': round(duration_seconds, 6),
            'status': status,
            'details': details or {}
        }
        logger.info(json.dumps(log_entry, ensure_ascii=False, default=str))

    @staticmethod
    def log_solver_run(solver: str, config_hash: str, n_states: int, details: dict = None):
        """Log un appel de solveur (oracle, résolvante, formule fermée)"""
        logger = logging.getLogger("SOLVERS")
        log_entry = {
            'timestamp': datetime.now().isoformat(),
            'solver': solver,
            'config_hash': config_hash[:12],
            'n_states': n_states,
            'details': details or {}
        }
        logger.info(json.dumps(log_entry, ensure_ascii=False, default=str))

    @staticmethod
    def log_cache_hit(cache_key: str, source: str = "unknown"):
        """Log un hit de cache"""
        logger = logging.getLogger("CACHE")
        logger.debug(f"✅ CACHE HIT: {cache_key[:12]} (source: {source})")

    @staticmethod
    def log_cache_miss(cache_key: str):
        """Log un miss de cache"""
        logger = logging.getLogger("CACHE")
        logger.debug(f"❌ CACHE MISS: {cache_key[:12]}")

    @staticmethod
    def log_error(error_type: str, message: str, traceback_str: str = None, context: dict = None):
        """Log une erreur avec contexte complet"""
        logger = logging.getLogger("ERRORS")
        error_entry = {
            'timestamp': datetime.now().isoformat(),
            'error_type': error_type,
            'message': message,
            'context': context or {},
            'traceback': traceback_str
        }
        logger.error(json.dumps(error_entry, ensure_ascii=False, default=str))
