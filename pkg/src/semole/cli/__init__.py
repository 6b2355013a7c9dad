from .main import EXIT_CHECKPOINT, EXIT_INPUT, EXIT_OK, build_parser, main
from .report import GenReport, generate, score_row, within_target

__all__ = ["EXIT_CHECKPOINT", "EXIT_INPUT", "EXIT_OK", "GenReport", "build_parser", "generate", "main",
           "score_row", "within_target"]
