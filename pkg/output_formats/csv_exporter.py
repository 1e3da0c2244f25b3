"""
CSV Exporter
Export lab results to CSV tables with a fixed header per subcommand
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

import pandas as pd

logger = logging.getLogger(__name__)

# Column order is part of the output contract
SCHEMAS: Dict[str, List[str]] = {
    "profile": ["t", "T", "dT", "ddT", "K"],
    "geodesics": ["n", "h_n", "d_n", "d_full", "d_exact", "residual_vs_asymptotic"],
    "validate": ["factor", "power", "image_left", "image_right", "margin", "ok"],
    "words": ["word", "length", "distance"],
    "count": ["R", "N", "C_hat", "C_div_hat", "drift"],
    "fit": ["R", "N", "C_hat", "C_div_hat", "drift"],
    "delta": ["s", "rho", "iterations"],
    "classify": ["s", "rho", "iterations"],
    "renewal": ["k", "value", "limit_prediction"],
    "selftest": ["criterion", "passed", "value", "detail"],
}

Rows = Union[pd.DataFrame, Iterable[Mapping[str, Any]]]


class CSVExporter:
    """
    Writes subcommand tables to CSV.

    Every table is reindexed onto its schema, so missing columns come out
    empty and extra columns are dropped. Floats go through one format
    string, which keeps repeated runs byte-identical.
    """

    @staticmethod
    def frame(command: str, rows: Rows) -> pd.DataFrame:
        """DataFrame with the schema columns of a subcommand"""
        if command not in SCHEMAS:
            raise KeyError(f"No CSV schema for subcommand '{command}'")
        df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        return df.reindex(columns=SCHEMAS[command])

    @staticmethod
    def to_text(command: str, rows: Rows, float_format: str = "%.12g") -> str:
        """CSV text of a subcommand table"""
        df = CSVExporter.frame(command, rows)
        return df.to_csv(index=False, float_format=float_format, lineterminator="\n")

    @staticmethod
    def export_table(command: str, rows: Rows, output_path: Union[str, Path],
                     float_format: str = "%.12g") -> Path:
        """
        Export a subcommand table to CSV.

        Args:
            command: Subcommand whose schema applies
            rows: DataFrame or iterable of row dictionaries
            output_path: Path to save CSV file
            float_format: printf-style float format

        Returns:
            Path written
        """
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = CSVExporter.to_text(command, rows, float_format)
        path.write_text(text, encoding="utf-8")
        logger.info("CSV written", extra={"command": command, "path": str(path),
                                          "rows": text.count("\n") - 1})
        return path
