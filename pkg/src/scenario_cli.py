"""
Interface en ligne de commande du simulateur

Sous-commandes: evolve, laplace, spectrum, figure, sweep, fit
Code de sortie 0 en cas de succès, 2 pour une erreur de domaine, 1 sinon
(l'erreur est écrite en JSON sur stderr)
"""
import argparse
import json
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import List, Optional

from .errors import WaveguideError
from .logger_config import LoggerConfig
from .rate_fitting import fit_rates
from .result_writer import read_curve, write_bundle
from .scenarios import PRESETS, load_scenario, run, with_solvers
from .settings import get_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_DOMAIN = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveguide",
        description="Émission spontanée d'émetteurs couplés à un guide d'onde en liaisons fortes",
    )
    parser.add_argument("--output-dir", type=Path, default=None, help="dossier des CSV/JSON (défaut: WAVEGUIDE_OUTPUT_DIR)")
    parser.add_argument("--xlsx", action="store_true", help="exporte aussi un classeur Excel du run")
    parser.add_argument("--workers", type=int, default=None, help="threads pour les balayages")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING...")
    subparsers = parser.add_subparsers(dest="command", required=True)

    evolve = subparsers.add_parser("evolve", help="dynamique exacte (oracle)")
    evolve.add_argument("scenario")
    evolve.add_argument("--field", action="store_true", help="écrit aussi la densité |C_x(t)|²")

    laplace = subparsers.add_parser("laplace", help="oracle + solution par la résolvante")
    laplace.add_argument("scenario")

    spectrum = subparsers.add_parser("spectrum", help="spectres de réflexion/transmission")
    spectrum.add_argument("scenario")

    figure = subparsers.add_parser("figure", help="préréglage de figure")
    figure.add_argument("preset", choices=sorted(PRESETS))

    sweep = subparsers.add_parser("sweep", help="balayage avec les solveurs du scénario")
    sweep.add_argument("scenario")

    fit = subparsers.add_parser("fit", help="ajuste les taux avant/après t₀ sur une courbe CSV")
    fit.add_argument("curve", type=Path)
    fit.add_argument("--t0", type=float, required=True, help="t₀ en unités de 1/(2J)")
    fit.add_argument("--solver", default=None, help="filtre la colonne solver")
    return parser


def _run_scenario(args: argparse.Namespace, output_dir: Path) -> dict:
    if args.command == "figure":
        scenario = load_scenario(args.preset)
    else:
        scenario = load_scenario(args.scenario)

    if args.command == "evolve":
        scenario = with_solvers(scenario, ("oracle",), kind="dynamics")
    elif args.command == "laplace":
        scenario = with_solvers(scenario, ("oracle", "resolvent"), kind="dynamics")
    elif args.command == "spectrum":
        scenario = with_solvers(scenario, ("closed_form",), kind="spectrum")

    bundle = run(scenario, max_workers=args.workers, include_field=getattr(args, "field", False),
                 include_trajectory=args.command == "evolve")
    written = write_bundle(bundle, output_dir)
    if args.xlsx:
        from .workbook_export import export_bundle
        written.append(export_bundle(bundle, output_dir / f"{scenario.name}.xlsx"))
    return {"scenario": scenario.name, "files": [str(path) for path in written]}


def _run_fit(args: argparse.Namespace) -> dict:
    frame = read_curve(args.curve, args.solver)
    result = fit_rates(frame["t_2J"].to_numpy(), frame["value"].to_numpy(), args.t0)
    return result.to_dict()


def main(argv: Optional[List[str]] = None) -> int:
    """Point d'entrée; retourne le code de sortie"""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    LoggerConfig(log_dir=settings.log_dir, level=args.log_level)
    output_dir = args.output_dir or settings.output_dir

    started = time.perf_counter()
    try:
        if args.command == "fit":
            payload = _run_fit(args)
        else:
            payload = _run_scenario(args, output_dir)
    except WaveguideError as exc:
        LoggerConfig.log_performance(f"cli.{args.command}", time.perf_counter() - started, False, exc.context)
        logger.error(f"❌ {type(exc).__name__}: {exc.message}")
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True, ensure_ascii=False, default=str) + "\n")
        return EXIT_DOMAIN
    except Exception as exc:
        LoggerConfig.log_error(type(exc).__name__, str(exc), traceback.format_exc(), {"command": args.command})
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "context": {}},
                                    sort_keys=True, ensure_ascii=False) + "\n")
        return EXIT_UNEXPECTED

    LoggerConfig.log_performance(f"cli.{args.command}", time.perf_counter() - started, True)
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, default=str) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
