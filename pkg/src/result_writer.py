"""
Écriture des résultats : un CSV par courbe, un manifeste JSON par run
Sorties déterministes (format numérique fixe, clés triées, aucun horodatage)
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .errors import UnfittableSeriesError
from .oracle_dynamics import Trajectory
from .scenarios import RunBundle

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17e"
LINE_TERMINATOR = "\n"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """CSV en double précision, notation scientifique, indépendant de la locale"""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator=LINE_TERMINATOR)
    return path


def write_json(data: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline=LINE_TERMINATOR) as handle:
        handle.write(json.dumps(_plain(data), sort_keys=True, indent=2, ensure_ascii=False))
        handle.write(LINE_TERMINATOR)
    return path


def _plain(value: Any) -> Any:
    """Convertit les scalaires/tableaux numpy en types JSON natifs"""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def curve_filename(name: str, index: int, solver: str) -> str:
    return f"{name}__{index:02d}__{solver}.csv"


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Colonnes t_2J, Pe_1..Pe_MA, norm"""
    data = {"t_2J": trajectory.t_2J}
    populations = trajectory.populations
    for j in range(populations.shape[1]):
        data[f"Pe_{j + 1}"] = populations[:, j]
    data["norm"] = trajectory.norm
    return pd.DataFrame(data)


def write_bundle(bundle: RunBundle, output_dir: Path) -> List[Path]:
    """
    Écrit toutes les sorties d'un run dans l'ordre du balayage

    Args:
        bundle: résultats de scenarios.run
        output_dir: dossier de sortie (créé si besoin)

    Returns:
        Liste des fichiers écrits (manifeste en dernier)
    """
    name = bundle.scenario.name
    output_dir = Path(output_dir)
    written: List[Path] = []

    curve_files: Dict[int, Dict[str, str]] = {}
    for curve in bundle.curves:
        filename = curve_filename(name, curve.sweep_index, curve.solver)
        written.append(write_csv(curve.frame(), output_dir / filename))
        curve_files.setdefault(curve.sweep_index, {})[curve.solver] = filename

    for result in bundle.spectra:
        filename = curve_filename(name, result.sweep_index, "spectrum")
        written.append(write_csv(result.frame, output_dir / filename))
        curve_files.setdefault(result.sweep_index, {})["spectrum"] = filename

    for index, frame in bundle.fields:
        filename = curve_filename(name, index, "field")
        written.append(write_csv(frame, output_dir / filename))
        curve_files.setdefault(index, {})["field"] = filename

    for index, trajectory in bundle.trajectories:
        filename = curve_filename(name, index, "trajectory")
        written.append(write_csv(trajectory_frame(trajectory), output_dir / filename))
        curve_files.setdefault(index, {})["trajectory"] = filename

    manifest = bundle.manifest()
    for point in manifest["points"]:
        point["files"] = dict(sorted(curve_files.get(point["index"], {}).items()))
    written.append(write_json(manifest, output_dir / f"{name}__manifest.json"))
    logger.info(f"💾 {len(written)} fichier(s) écrit(s) dans {output_dir}")
    return written


def read_curve(path: Path, solver: Optional[str] = None) -> pd.DataFrame:
    """Relit un CSV de courbe (t_2J, value, solver), filtré sur un solveur si demandé"""
    frame = pd.read_csv(path)
    missing = {"t_2J", "value"} - set(frame.columns)
    if missing:
        raise UnfittableSeriesError(f"Colonnes manquantes dans {path}: {', '.join(sorted(missing))}",
                                    {"path": str(path)})
    if solver is not None and "solver" in frame.columns:
        frame = frame[frame["solver"] == solver]
    return frame.reset_index(drop=True)
