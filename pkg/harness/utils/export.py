"""
Export Utility Module

This module provides functionality for exporting leaderboards to Excel files.
It includes functions for creating, formatting, and saving Excel exports.
"""
import io
from datetime import datetime
from pathlib import Path
from typing import List

import pandas as pd

from harness.model import ScoreReport
from harness.utils.logging_config import get_logger

# Get logger for this module
logger = get_logger(__name__)

# Fixed workbook timestamp so reruns produce identical files
_WORKBOOK_CREATED = datetime(2019, 1, 1)


def create_export_dataframe(reports: List[ScoreReport]) -> pd.DataFrame:
    """
    Create a pandas DataFrame from ranked score reports.

    Args:
        reports: ranked ScoreReports

    Returns:
        pandas.DataFrame with one row per team

    Raises:
        ValueError: If there is nothing to export
    """
    logger.debug(f"Creating export DataFrame from {len(reports) if reports else 0} reports")

    if not reports:
        logger.warning("No reports to export when creating DataFrame")
        raise ValueError("No reports to export")

    df = pd.DataFrame([
        {
            "Rank": report.rank,
            "Team": report.team,
            "Score (1e4 x twCRPS)": "+inf" if report.score_e4 == float("inf") else f"{report.score_e4:.4f}",
            "Valid": "yes" if report.valid else "no",
            "Reason": report.reason or "",
            "Late": "yes" if report.late else "no",
            "Round": report.round,
            "Improvement vs reference": "" if report.improvement_vs_reference is None
            else f"{report.improvement_vs_reference:.2%}",
            "Gap to next": "" if report.gap_to_next is None else f"{report.gap_to_next:.2%}",
        }
        for report in reports
    ])
    logger.debug(f"Created DataFrame with {len(df)} rows and {len(df.columns)} columns")
    return df


def get_excel_data(reports: List[ScoreReport], sheet_name: str = "Leaderboard") -> bytes:
    """
    Create formatted Excel data in memory.

    Args:
        reports: ranked ScoreReports
        sheet_name: worksheet title

    Returns:
        The .xlsx file content

    Raises:
        ValueError: If there is nothing to export
    """
    logger.info(f"Creating in-memory Excel data for {len(reports) if reports else 0} reports")
    df = create_export_dataframe(reports)

    try:
        buffer = io.BytesIO()
        with pd.ExcelWriter(buffer, engine="xlsxwriter") as writer:
            df.to_excel(writer, index=False, sheet_name=sheet_name)
            workbook = writer.book
            workbook.set_properties({"created": _WORKBOOK_CREATED})
            worksheet = writer.sheets[sheet_name]

            cell_format = workbook.add_format({
                "align": "left",
                "valign": "top",
                "text_wrap": True,
            })

            # Column width from the longest entry, capped
            for col_num, col_name in enumerate(df.columns):
                max_len = max(df[col_name].astype(str).map(len).max(), len(col_name)) + 2
                worksheet.set_column(col_num, col_num, min(max_len, 50), cell_format)
            worksheet.set_row(0, 20)

        logger.info("Successfully created formatted Excel data in memory")
        return buffer.getvalue()

    except Exception as e:
        logger.error(f"Error creating Excel data: {str(e)}", exc_info=True)
        raise


def write_excel(reports: List[ScoreReport], path, sheet_name: str = "Leaderboard") -> None:
    """Write the formatted leaderboard workbook to ``path``."""
    Path(path).write_bytes(get_excel_data(reports, sheet_name))
    logger.info(f"Wrote Excel leaderboard to {path}")
