#!/usr/bin/env python3
"""
End-to-end runs: one scene, or a batch of scenes run concurrently
"""

import asyncio
import logging
import time
from pathlib import Path
from typing import Dict, Optional, Union

from ..exceptions import OrchardError
from ..io import write_json
from ..models.config import PipelineConfig, Stage
from ..models.reports import BatchSummary, RunReport
from .stages import STAGE_HANDLERS, RunContext

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"


def run_pipeline(config: PipelineConfig, scene: str = "scene", raise_errors: bool = True) -> RunReport:
    """Run every stage up to ``config.stage`` in order and write the run report.

    A failing stage marks the report failed with its cause; artifacts of the
    stages before it stay on disk. With ``raise_errors`` the error propagates
    after the report is written.
    """
    report = RunReport(scene=scene)
    ctx = RunContext(config, report)
    report_path = ctx.record("report", Path(config.out_dir) / REPORT_NAME)
    current: Optional[Stage] = None
    try:
        for stage in Stage.ordered():
            if not config.stage.includes(stage):
                break
            current = stage
            logger.info(f"[{scene}] stage {stage.value}")
            started = time.perf_counter()
            STAGE_HANDLERS[stage](ctx)
            report.timings[stage.value] = round(time.perf_counter() - started, 6)
            report.stages.append(stage.value)
    except Exception as e:
        report.status = "failed"
        report.error = f"{current.value if current else 'setup'}: {type(e).__name__}: {e}"
        logger.error(f"[{scene}] {report.error}", exc_info=not isinstance(e, (OrchardError, OSError)))
        write_json(report_path, report)
        if raise_errors:
            raise
        return report

    write_json(report_path, report)
    print(f"✅ {scene}: {len(report.stages)} stages, report at {report_path}")
    return report


async def run_batch(
    configs: Dict[str, PipelineConfig],
    workers: int = 1,
    summary_path: Optional[Union[str, Path]] = None,
) -> BatchSummary:
    """Run scenes concurrently, at most ``workers`` at a time"""
    semaphore = asyncio.Semaphore(max(1, workers))

    async def run_one(name: str, config: PipelineConfig) -> RunReport:
        async with semaphore:
            return await asyncio.to_thread(run_pipeline, config, name, False)

    reports = await asyncio.gather(*(run_one(name, config) for name, config in configs.items()))
    summary = BatchSummary(
        scenes={r.scene: r.status for r in reports},
        reports={r.scene: r.artifacts["report"] for r in reports},
    )
    if summary_path is not None:
        write_json(summary_path, summary)
    failed = sum(r.status != "ok" for r in reports)
    print(f"📦 Batch finished: {len(reports) - failed} ok, {failed} failed")
    return summary
