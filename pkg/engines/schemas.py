"""
Command Schemas
Result containers passed from the subcommand services to the writers
"""
from typing import Any, Dict, List

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from shared.middleware.error_handler import EXIT_OK


class CommandResult(BaseModel):
    """Tables and summary of one subcommand run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str
    tables: Dict[str, pd.DataFrame] = Field(..., description="CSV stem -> table with the command's columns")
    sections: Dict[str, Dict[str, Any]] = Field(default_factory=dict, description="Summary sections")
    exit_code: int = EXIT_OK


class CriterionResult(BaseModel):
    """Outcome of one acceptance criterion"""
    criterion: str
    passed: bool
    value: float = Field(..., description="Headline number of the check")
    detail: str = ""
    seconds: float = 0.0

    def row(self) -> Dict[str, Any]:
        return {"criterion": self.criterion, "passed": self.passed, "value": self.value, "detail": self.detail}


class SuiteReport(BaseModel):
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)
