"""
Export Excel d'un run : une feuille par point de balayage et une feuille de résumé
"""
import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils.dataframe import dataframe_to_rows

from .scenarios import RunBundle

logger = logging.getLogger(__name__)

HEADER_COLOR = "4472C4"
MAX_SHEET_TITLE = 31
MAX_COLUMN_WIDTH = 30


class WorkbookExporter:
    """Classeur Excel avec en-têtes mis en forme"""

    def __init__(self, output_path: Path):
        self.output_path = Path(output_path)
        self.wb = Workbook()
        self.wb.remove(self.wb.active)

    def add_frame(self, df: pd.DataFrame, sheet_name: str, apply_styling: bool = True):
        """
        Ajoute une feuille depuis un DataFrame

        Args:
            df: données (une ligne d'en-tête puis les valeurs)
            sheet_name: nom de la feuille (tronqué à 31 caractères)
            apply_styling: en-tête coloré et bordures
        """
        ws = self.wb.create_sheet(sheet_name[:MAX_SHEET_TITLE])
        border = Border(left=Side(style="thin"), right=Side(style="thin"),
                        top=Side(style="thin"), bottom=Side(style="thin"))
        for r_idx, row in enumerate(dataframe_to_rows(df, index=False, header=True), 1):
            for c_idx, value in enumerate(row, 1):
                cell = ws.cell(row=r_idx, column=c_idx, value=value)
                if apply_styling and r_idx == 1:
                    cell.font = Font(bold=True, color="FFFFFF")
                    cell.fill = PatternFill(start_color=HEADER_COLOR, end_color=HEADER_COLOR, fill_type="solid")
                    cell.alignment = Alignment(horizontal="center", vertical="center")
                    cell.border = border
        if apply_styling:
            for column in ws.iter_cols(min_row=1, max_row=1):
                header = column[0]
                ws.column_dimensions[header.column_letter].width = min(len(str(header.value)) + 12, MAX_COLUMN_WIDTH)
        return ws

    def add_summary_sheet(self, summary_data: Dict[str, Any]):
        """Feuille 'Résumé' en première position (clé, valeur)"""
        ws = self.wb.create_sheet("Résumé", 0)
        ws["A1"] = "Résumé du run"
        ws["A1"].font = Font(size=14, bold=True)
        row = 3
        for key, value in summary_data.items():
            ws[f"A{row}"] = key
            ws[f"B{row}"] = value if isinstance(value, (int, float, str)) or value is None else str(value)
            ws[f"A{row}"].font = Font(bold=True)
            row += 1
        ws.column_dimensions["A"].width = 30
        ws.column_dimensions["B"].width = 60
        return ws

    def save(self) -> Path:
        self.output_path.parent.mkdir(parents=True, exist_ok=True)
        self.wb.save(self.output_path)
        logger.info(f"💾 Classeur généré: {self.output_path}")
        return self.output_path


def _point_summary(point: Dict[str, Any]) -> Dict[str, Any]:
    summary = {f"[{point['index']:02d}] valeur balayée": point.get("sweep_value")}
    fit = point.get("fit")
    if isinstance(fit, dict) and "before" in fit:
        summary[f"[{point['index']:02d}] taux avant t₀ (2J)"] = fit["before"]["rate"]
        summary[f"[{point['index']:02d}] taux après t₀ (2J)"] = fit["after"]["rate"]
    if "t0_2J" in point:
        summary[f"[{point['index']:02d}] t₀ (2J)"] = point["t0_2J"]
    return summary


def export_bundle(bundle: RunBundle, output_path: Path) -> Path:
    """Écrit les courbes (format large, une colonne par solveur) et le résumé du run"""
    exporter = WorkbookExporter(output_path)
    scenario = bundle.scenario

    by_point: Dict[int, pd.DataFrame] = {}
    for curve in bundle.curves:
        frame = by_point.setdefault(curve.sweep_index, pd.DataFrame({"t_2J": curve.t_2J}))
        frame[curve.solver] = curve.value
    for index, frame in sorted(by_point.items()):
        exporter.add_frame(frame, f"point_{index:02d}")
    for result in bundle.spectra:
        exporter.add_frame(result.frame, f"spectre_{result.sweep_index:02d}")

    summary: Dict[str, Any] = {
        "Scénario": scenario.name,
        "Type": scenario.kind,
        "Empreinte du scénario": scenario.source_hash,
        "Solveurs": ", ".join(scenario.solvers),
        "Balayage": scenario.sweep.parameter if scenario.sweep else "aucun",
    }
    for point in bundle.points:
        summary.update(_point_summary(point))
    exporter.add_summary_sheet(summary)
    return exporter.save()
