"""
JSON Exporter
Export the resolved run configuration and result summaries to JSON
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import BaseModel

logger = logging.getLogger(__name__)


class JSONExporter:
    """
    Exports run configurations and summaries to JSON.

    Output is sorted and indented so that two runs with the same
    configuration write the same bytes.
    """

    @staticmethod
    def _plain(payload: Union[BaseModel, Dict[str, Any]]) -> Dict[str, Any]:
        if isinstance(payload, BaseModel):
            return payload.model_dump(mode="json")
        return payload

    @staticmethod
    def dumps(payload: Union[BaseModel, Dict[str, Any]]) -> str:
        return json.dumps(JSONExporter._plain(payload), indent=2, sort_keys=True, default=str) + "\n"

    @staticmethod
    def export_config(config: BaseModel, output_path: Union[str, Path]) -> Path:
        """
        Write the resolved configuration echo.

        Args:
            config: Validated RunConfig
            output_path: Path to save JSON file

        Returns:
            Path written
        """
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(JSONExporter.dumps(config), encoding="utf-8")
        logger.debug("Resolved config written", extra={"path": str(path)})
        return path

    @staticmethod
    def export_summary(summary: Dict[str, Any], output_path: Union[str, Path]) -> Path:
        """Write a subcommand summary dictionary"""
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(JSONExporter.dumps(summary), encoding="utf-8")
        return path

    @staticmethod
    def load_json(input_path: Union[str, Path]) -> Dict[str, Any]:
        with open(input_path, 'r', encoding="utf-8") as f:
            return json.load(f)
