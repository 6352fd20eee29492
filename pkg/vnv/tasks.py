"""
Celery tasks for queued experiment runs
"""
import logging
import uuid

from celery import shared_task
from django.utils import timezone

from vnv.config import ExperimentConfig, build_config
from vnv.engine import compare_algorithms, run_experiment, simulate_series
from vnv.exceptions import VnvError
from vnv.models import ExperimentRun
from vnv.persistence import json_safe

logger = logging.getLogger(__name__)


def create_run(kind: str, cfg: ExperimentConfig) -> ExperimentRun:
    """PENDING audit row for one execution of `cfg`"""
    return ExperimentRun.objects.create(
        run_id=f"{kind}-{uuid.uuid4().hex[:12]}",
        kind=kind,
        fingerprint=cfg.fingerprint,
        config=cfg.to_dict(),
        output_dir=str(cfg.run_dir),
        runs_total=cfg.runs,
    )


def _finish(run: ExperimentRun, status: str, errors=None):
    run.status = status
    run.completed_at = timezone.now()
    if run.started_at:
        run.duration_seconds = (run.completed_at - run.started_at).total_seconds()
    run.errors = errors or []
    run.save()


def execute_run(run: ExperimentRun):
    """
    Run one audited execution in-process

    Returns the primary result (BatchResult, ReportTable or comparison dict).
    Failures mark the row FAILED and propagate.
    """
    run.status = 'RUNNING'
    run.started_at = timezone.now()
    run.save()
    try:
        cfg = build_config(run.config)
        if run.kind == 'simulate':
            result = simulate_series(cfg)
            run.runs_total = len(result.statuses)
            run.runs_skipped = result.failed
            run.runs_ok = run.runs_total - result.failed
        elif run.kind == 'compare':
            result = compare_algorithms(cfg)
            run.report = json_safe(result)
            run.runs_total = result['runs_total']
            run.runs_ok = result['n']
            run.runs_skipped = result['runs_total'] - result['n']
        else:
            result = run_experiment(cfg)
            run.report = json_safe(result.to_dict())
            run.runs_total = result.runs_total
            run.runs_ok = result.n
            run.runs_skipped = result.runs_total - result.n
    except Exception as e:
        logger.error(f"Run {run.run_id} failed: {e}")
        _finish(run, 'FAILED', [str(e)])
        raise

    _finish(run, 'COMPLETED')
    logger.info(f"Run {run.run_id} completed: {run.runs_ok}/{run.runs_total} runs usable "
                f"in {run.duration_seconds:.1f}s")
    return result


@shared_task(bind=True, max_retries=3)
def run_experiment_task(self, run_id: str):
    """
    Execute a queued ExperimentRun

    Args:
        run_id: run_id of a PENDING ExperimentRun
    """
    run = ExperimentRun.objects.get(run_id=run_id)
    try:
        execute_run(run)
    except VnvError as e:
        # same config fails the same way
        return {'run_id': run_id, 'status': run.status, 'errors': [str(e)]}
    except Exception as e:
        raise self.retry(exc=e, countdown=60)

    return {
        'run_id': run_id,
        'status': run.status,
        'fingerprint': run.fingerprint,
        'runs_ok': run.runs_ok,
        'runs_skipped': run.runs_skipped,
    }
