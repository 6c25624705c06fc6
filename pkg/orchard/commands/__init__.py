"""
Command handlers behind the CLI
"""

from .pipeline import REPORT_NAME, run_batch, run_pipeline
from .stages import STAGE_HANDLERS, RunContext, tree_summaries

__all__ = ["REPORT_NAME", "RunContext", "STAGE_HANDLERS", "run_batch", "run_pipeline", "tree_summaries"]
