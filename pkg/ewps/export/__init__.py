"""CSV and JSON writers."""
from ewps.export.csv_exporter import CSVExporter
from ewps.export.report_writer import build_report, read_report, write_atomic

__all__ = ["CSVExporter", "build_report", "read_report", "write_atomic"]
