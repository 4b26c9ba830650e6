"""Markdown and HTML training reports with embedded SVG charts."""

from .builder import SECTION_TITLES, ReportError, ReportSpec, build_report, generate_report, ranked_board
from .document import Document, write_document

__all__ = [
    "Document",
    "ReportError",
    "ReportSpec",
    "SECTION_TITLES",
    "build_report",
    "generate_report",
    "ranked_board",
    "write_document",
]
