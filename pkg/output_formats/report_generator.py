"""
Report Generator
Renders the plain-text summary printed by each subcommand
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

WIDTH = 70
RULE = "━" * WIDTH


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.10g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    if value is None:
        return "-"
    return str(value)


class ReportGenerator:
    """
    Formats subcommand summaries.

    A summary is an ordered mapping of section titles to label/value
    mappings. Reports carry no timestamps, so identical runs print
    identical text.
    """

    @staticmethod
    def _header(title: str) -> List[str]:
        inner = WIDTH - 2
        return [
            "╔" + "═" * inner + "╗",
            "║" + title.upper().center(inner) + "║",
            "╚" + "═" * inner + "╝",
        ]

    @staticmethod
    def _section(title: str, fields: Mapping[str, Any]) -> List[str]:
        lines = ["", title.upper(), RULE]
        if not fields:
            lines.append("  (empty)")
            return lines
        width = max(len(str(label)) for label in fields) + 2
        for label, value in fields.items():
            lines.append(f"  {str(label) + ':':<{width}}{_format_value(value)}")
        return lines

    @staticmethod
    def generate_summary(command: str, sections: Mapping[str, Mapping[str, Any]],
                         output_path: Optional[str] = None) -> str:
        """
        Generate the summary of one subcommand.

        Args:
            command: Subcommand name, used as the title
            sections: Section title -> {label: value}
            output_path: Optional path to save report

        Returns:
            Formatted report string
        """
        lines = ReportGenerator._header(f"cusp lab: {command}")
        for title, fields in sections.items():
            lines.extend(ReportGenerator._section(title, fields))
        lines.append("")
        report = "\n".join(lines) + "\n"

        if output_path:
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            with open(output_path, 'w', encoding="utf-8") as f:
                f.write(report)

        return report

    @staticmethod
    def generate_selftest_report(rows: List[Dict[str, Any]], output_path: Optional[str] = None) -> str:
        """
        Generate the acceptance-suite report.

        Args:
            rows: One dictionary per criterion with criterion, passed, value, detail
            output_path: Optional path to save report

        Returns:
            Formatted report string
        """
        failed = [row["criterion"] for row in rows if not row["passed"]]
        results = {
            row["criterion"]: f"{'PASS' if row['passed'] else 'FAIL'}  {_format_value(row['value'])}  {row['detail']}"
            for row in rows
        }
        verdict = {
            "criteria": len(rows),
            "passed": len(rows) - len(failed),
            "failed": ", ".join(failed) if failed else "none",
        }
        return ReportGenerator.generate_summary("selftest", {"Criteria": results, "Verdict": verdict},
                                                output_path)
