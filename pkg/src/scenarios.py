"""
Scénarios : préréglages des figures, chargement JSON validé et exécution des balayages
"""
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import closed_forms, oracle_dynamics, resolvent_solver, scattering
from .errors import ScenarioError, UnfittableSeriesError, WaveguideError
from .logger_config import LoggerConfig
from .model_core import ConfigDocument, InitialState, SystemConfig, format_validation_error, kinematic_delay
from .rate_fitting import fit_rates
from .settings import get_settings

logger = logging.getLogger(__name__)

SOLVERS = ("oracle", "resolvent", "closed_form")
SWEEPABLE = ("VA_over_2J", "VB_over_2J", "DeltaA_over_2J", "DeltaB_over_2J", "MA", "MB", "dx", "n_sites")


class SweepAxis(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    parameter: str
    values: Tuple[float, ...] = ()

    @field_validator("parameter")
    @classmethod
    def _known_parameter(cls, value: str) -> str:
        if value not in SWEEPABLE:
            raise ValueError(f"paramètre non balayable (attendu: {', '.join(SWEEPABLE)})")
        return value


class ScenarioDocument(ConfigDocument):
    """Document de scénario: configuration + clés d'exécution (temps en unités de 2J)"""

    name: str = "scenario"
    kind: Literal["dynamics", "spectrum"] = "dynamics"
    t_max: float = Field(default=100.0, gt=0)
    dt_out: float = Field(default=0.1, gt=0)
    sweep: Optional[SweepAxis] = None
    solvers: Tuple[Literal["oracle", "resolvent", "closed_form"], ...] = ("oracle",)
    k_points: int = Field(default=1001, ge=3)

    @model_validator(mode="after")
    def _at_least_one_solver(self) -> "ScenarioDocument":
        if not self.solvers:
            raise ValueError("au moins un solveur doit être sélectionné")
        return self

    def config_document(self) -> ConfigDocument:
        return ConfigDocument.model_validate(self.model_dump(include=set(ConfigDocument.model_fields)))


@dataclass(frozen=True)
class Scenario:
    """Scénario validé prêt à être exécuté"""

    name: str
    config: SystemConfig
    init: InitialState
    t_max: float
    sweep: Optional[SweepAxis]
    solvers: Tuple[str, ...]
    kind: str
    dt_out: float
    k_points: int
    document: ScenarioDocument
    source_hash: str

    def sweep_points(self) -> List[Tuple[Optional[float], ConfigDocument]]:
        """(valeur balayée, document) dans l'ordre du balayage; balayage vide → point unique"""
        base = self.document.config_document()
        if self.sweep is None or not self.sweep.values:
            return [(None, base)]
        return [(value, base.with_parameter(self.sweep.parameter, value)) for value in self.sweep.values]


# ---------------------------------------------------------------------------
# Préréglages (valeurs de balayage des détunings et des Δx choisies pour l'implémentation)
# ---------------------------------------------------------------------------

_FIG2_BASE = {
    "J2": 1.0, "omega_c": 0.0, "VA_over_2J": 0.08, "VB_over_2J": 1.8,
    "DeltaA_over_2J": 0.0, "DeltaB_over_2J": 0.0, "MA": 1, "MB": 2,
    "initial": {"type": "single"}, "t_max": 100.0, "dt_out": 0.1,
    "sweep": {"parameter": "DeltaB_over_2J", "values": [0.0, 0.4, -0.4, 0.8, -0.8, 1.0, 3.0]},
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "fig2a": {**_FIG2_BASE, "name": "fig2a", "dx": 7, "solvers": ["oracle", "resolvent", "closed_form"]},
    "fig2b": {**_FIG2_BASE, "name": "fig2b", "dx": 8, "solvers": ["oracle", "resolvent", "closed_form"]},
    "fig3a": {
        "name": "fig3a", "J2": 1.0, "VA_over_2J": 0.09, "VB_over_2J": 0.07, "DeltaA_over_2J": 0.0,
        "DeltaB_over_2J": 0.0, "MA": 1, "MB": 2, "dx": 10, "initial": {"type": "single"},
        "t_max": 150.0, "dt_out": 0.1, "solvers": ["oracle"],
        "sweep": {"parameter": "dx", "values": [10, 11, 20, 21, 30, 31, 40, 41]},
    },
    "fig3b": {
        "name": "fig3b", "kind": "spectrum", "J2": 1.0, "VA_over_2J": 0.0,
        "VB_over_2J": 0.5 / (1.13 * 2 ** 0.5), "DeltaA_over_2J": 0.0, "DeltaB_over_2J": 0.0,
        "MA": 1, "MB": 2, "dx": 1, "k_points": 1001, "solvers": ["closed_form"],
    },
    "fig3c": {
        "name": "fig3c", "J2": 1.0, "VA_over_2J": 0.08, "VB_over_2J": 1.27, "DeltaA_over_2J": 0.0,
        "DeltaB_over_2J": 0.0, "MA": 2, "MB": 2, "dx": 1, "initial": {"type": "sym_pair"},
        "t_max": 60.0, "dt_out": 0.1, "solvers": ["oracle", "resolvent", "closed_form"],
        "sweep": {"parameter": "dx", "values": [1, 2, 3, 4, 5, 6, 7, 8]},
    },
    "fig3d": {
        "name": "fig3d", "J2": 1.0, "VA_over_2J": 0.04, "VB_over_2J": 1.0, "DeltaA_over_2J": 0.0,
        "DeltaB_over_2J": 0.0, "MA": 5, "MB": 2, "dx": 3, "initial": {"type": "uniform"},
        "t_max": 200.0, "dt_out": 0.1, "solvers": ["oracle"],
        "sweep": {"parameter": "dx", "values": [3, 5, 7, 4, 6, 8]},
    },
    "sm1": {
        "name": "sm1", "J2": 1.0, "VA_over_2J": 0.07, "VB_over_2J": 1.8, "DeltaA_over_2J": 0.0,
        "DeltaB_over_2J": 0.0, "MA": 1, "MB": 2, "dx": 1, "initial": {"type": "single"},
        "t_max": 130.0, "dt_out": 0.1, "solvers": ["oracle", "closed_form"],
        "sweep": {"parameter": "dx", "values": [1, 5, 9, 13, 17, 21]},
    },
}


def git_blob_hash(content: bytes) -> str:
    """Empreinte de contenu au format git (sha1 de 'blob <taille>\\0<contenu>')"""
    header = f"blob {len(content)}\0".encode("utf-8")
    return hashlib.sha1(header + content).hexdigest()


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False)


def _build_scenario(data: Dict[str, Any], source_hash: str) -> Scenario:
    try:
        document = ScenarioDocument.model_validate(data)
    except ValidationError as exc:
        fields = format_validation_error(exc)
        raise ScenarioError("Scénario invalide: " + "; ".join(fields), {"fields": fields}) from exc

    try:
        config = document.config_document().to_system_config()
        init = document.config_document().initial_state()
        if document.sweep is not None:
            base = document.config_document()
            for value in document.sweep.values:
                swept = base.with_parameter(document.sweep.parameter, value)
                swept.to_system_config()
                swept.initial_state()
    except WaveguideError as exc:
        raise ScenarioError(f"Scénario invalide: {exc.message}", exc.context) from exc

    return Scenario(
        name=document.name,
        config=config,
        init=init,
        t_max=document.t_max,
        sweep=document.sweep,
        solvers=tuple(document.solvers),
        kind=document.kind,
        dt_out=document.dt_out,
        k_points=document.k_points,
        document=document,
        source_hash=source_hash,
    )


def load_scenario(source: Union[str, Path]) -> Scenario:
    """
    Charge un scénario depuis un fichier JSON ou un nom de préréglage

    Args:
        source: chemin du fichier ou nom parmi PRESETS

    Returns:
        Scenario validé
    """
    path = Path(source)
    if path.exists():
        content = path.read_bytes()
        try:
            data = json.loads(content.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"JSON illisible: {exc}", {"path": str(path)}) from exc
        if not isinstance(data, dict):
            raise ScenarioError("Le scénario doit être un objet JSON", {"path": str(path)})
        data.setdefault("name", path.stem)
        logger.info(f"📂 Scénario chargé: {path}")
        return _build_scenario(data, git_blob_hash(content))
    if str(source) in PRESETS:
        data = PRESETS[str(source)]
        return _build_scenario(data, git_blob_hash(canonical_json(data).encode("utf-8")))
    raise ScenarioError(f"Scénario introuvable: {source}", {"source": str(source), "presets": sorted(PRESETS)})


# ---------------------------------------------------------------------------
# Exécution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    """Courbe de population excitée totale (temps en unités de 2J)"""

    sweep_index: int
    sweep_value: Optional[float]
    solver: str
    t_2J: np.ndarray
    value: np.ndarray
    config_hash: str

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t_2J": self.t_2J, "value": self.value, "solver": self.solver})


@dataclass(frozen=True)
class SpectrumResult:
    sweep_index: int
    sweep_value: Optional[float]
    frame: pd.DataFrame
    width: Optional[Dict[str, float]]
    config_hash: str


@dataclass
class RunBundle:
    """Résultats d'un run: courbes, spectres, ajustements et manifeste"""

    scenario: Scenario
    curves: List[Curve] = field(default_factory=list)
    spectra: List[SpectrumResult] = field(default_factory=list)
    points: List[Dict[str, Any]] = field(default_factory=list)
    fields: List[Tuple[int, pd.DataFrame]] = field(default_factory=list)
    trajectories: List[Tuple[int, oracle_dynamics.Trajectory]] = field(default_factory=list)

    def manifest(self) -> Dict[str, Any]:
        scenario = self.scenario
        return {
            "scenario": scenario.name,
            "kind": scenario.kind,
            "scenario_hash": scenario.source_hash,
            "parameters": scenario.document.model_dump(mode="json"),
            "sweep": scenario.sweep.model_dump(mode="json") if scenario.sweep else None,
            "solvers": list(scenario.solvers),
            "points": self.points,
        }


def ordered_map(function: Callable, items: Sequence, max_workers: int) -> List:
    """Applique function en parallèle (threads) en conservant l'ordre des entrées"""
    if max_workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(function, items))


def _dynamics_point(scenario: Scenario, index: int, value: Optional[float], document: ConfigDocument,
                    include_field: bool = False, include_trajectory: bool = False):
    config = document.to_system_config()
    init = document.initial_state()
    t_max = scenario.t_max / config.two_J
    config = oracle_dynamics.ensure_lattice(config, t_max)
    config_hash = config.fingerprint()
    curves: List[Curve] = []
    info: Dict[str, Any] = {"index": index, "sweep_value": value, "config_hash": config_hash}

    started = time.perf_counter()
    trajectory = oracle_dynamics.evolve(config, init, t_max, dt_out=scenario.dt_out / config.two_J,
                                        store_field=include_field)
    oracle_curve = trajectory.emitter_population
    curves.append(Curve(index, value, "oracle", trajectory.t_2J, oracle_curve, config_hash))
    LoggerConfig.log_performance("oracle.evolve", time.perf_counter() - started, True,
                                 {"scenario": scenario.name, "index": index})
    info["norm_drift"] = float(np.max(np.abs(trajectory.norm - 1.0)))

    if config.M_B > 0:
        t0 = kinematic_delay(config.dx, config.J) * config.two_J
        info["t0_2J"] = t0
        info["coherent"] = config.check_coherence()
        try:
            info["fit"] = fit_rates(trajectory.t_2J, oracle_curve, t0).to_dict()
        except UnfittableSeriesError as exc:
            logger.warning(f"⚠️ Ajustement impossible (point {index}): {exc.message}")
            info["fit"] = {"status": "unfittable", "message": exc.message}

    if "resolvent" in scenario.solvers:
        started = time.perf_counter()
        population = resolvent_solver.emitter_population(config, init, trajectory.time_grid)
        curves.append(Curve(index, value, "resolvent", trajectory.t_2J, population, config_hash))
        info["bound_states"] = [state.energy / config.two_J for state in resolvent_solver.find_bound_states(config)]
        info["regime"] = resolvent_solver.ResolventContext.create(config, init).regime
        info["bound_state_check"] = resolvent_solver.cross_check_bound_states(config)
        info["continuum_resonances"] = [
            {"energy_2J": resonance.energy_2J, "width_2J": resonance.width_2J, "residue": resonance.residue}
            for resonance in resolvent_solver.find_continuum_resonances(config)
        ]
        LoggerConfig.log_performance("resolvent.emitter_population", time.perf_counter() - started, True,
                                     {"scenario": scenario.name, "index": index})

    if "closed_form" in scenario.solvers:
        prediction_curve, prediction = closed_forms.predict_curve(config, init, trajectory.time_grid)
        curves.append(Curve(index, value, "closed_form", trajectory.t_2J, prediction_curve, config_hash))
        info["closed_form"] = prediction.to_dict()
        info["predicted_parity"] = closed_forms.predicted_parity(config.dx)

    field_data = oracle_dynamics.field_frame(trajectory) if include_field else None
    return (curves, field_data, trajectory if include_trajectory else None), info


def _spectrum_point(scenario: Scenario, index: int, value: Optional[float], document: ConfigDocument):
    config = document.to_system_config()
    points = scattering.spectrum(config, scattering.default_k_grid(scenario.k_points))
    frame = scattering.spectrum_frame(config, points)
    try:
        width = scattering.resonance_width(config)
        width_info = {
            "k_resonance": width.k_resonance,
            "breit_wigner_2J": width.breit_wigner / config.two_J,
            "measured_fwhm_2J": width.measured_fwhm / config.two_J,
        }
    except WaveguideError as exc:
        logger.warning(f"⚠️ Largeur de résonance indisponible: {exc.message}")
        width_info = None
    info = {"index": index, "sweep_value": value, "config_hash": config.fingerprint(), "resonance": width_info}
    return SpectrumResult(index, value, frame, width_info, config.fingerprint()), info


def run(scenario: Scenario, max_workers: Optional[int] = None, include_field: bool = False,
        include_trajectory: bool = False) -> RunBundle:
    """
    Exécute chaque point du balayage avec les solveurs sélectionnés

    L'oracle est toujours exécuté pour les scénarios de dynamique. Les erreurs des
    solveurs sont propagées avec la coordonnée de balayage dans leur contexte.
    include_trajectory garde la trajectoire de l'oracle (populations par émetteur, norme).
    """
    workers = max_workers if max_workers is not None else get_settings().max_workers
    points = list(enumerate(scenario.sweep_points()))
    parameter = scenario.sweep.parameter if scenario.sweep else None

    def execute(item):
        index, (value, document) = item
        try:
            if scenario.kind == "spectrum":
                return _spectrum_point(scenario, index, value, document)
            return _dynamics_point(scenario, index, value, document, include_field, include_trajectory)
        except WaveguideError as exc:
            raise exc.with_context(sweep_parameter=parameter, sweep_value=value, sweep_index=index)

    logger.info(f"🔄 Run '{scenario.name}': {len(points)} point(s), solveurs {', '.join(scenario.solvers)}")
    results = ordered_map(execute, points, workers)
    bundle = RunBundle(scenario=scenario)
    for payload, info in results:
        if scenario.kind == "spectrum":
            bundle.spectra.append(payload)
        else:
            curves, field_data, trajectory = payload
            bundle.curves.extend(curves)
            if field_data is not None:
                bundle.fields.append((info["index"], field_data))
            if trajectory is not None:
                bundle.trajectories.append((info["index"], trajectory))
        bundle.points.append(info)
    logger.info(f"✅ Run '{scenario.name}' terminé")
    return bundle


def with_solvers(scenario: Scenario, solvers: Sequence[str], kind: Optional[str] = None) -> Scenario:
    """Copie du scénario restreinte aux solveurs donnés (et au type de run si précisé)"""
    update: Dict[str, Any] = {"solvers": tuple(solvers)}
    if kind is not None:
        update["kind"] = kind
    document = scenario.document.model_copy(update=update)
    return replace(scenario, solvers=tuple(solvers), kind=kind or scenario.kind, document=document)
