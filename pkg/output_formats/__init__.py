"""
Output Formats Module
Export lab results to CSV tables, JSON echoes and plain-text summaries
"""

from .json_exporter import JSONExporter
from .csv_exporter import CSVExporter, SCHEMAS
from .report_generator import ReportGenerator

__all__ = [
    'JSONExporter',
    'CSVExporter',
    'ReportGenerator',
    'SCHEMAS'
]
