import asyncio
import logging
import os
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional

from dotenv import load_dotenv

from models import QhmError, TrialOutcome

load_dotenv()

# Configure logging
logger = logging.getLogger(__name__)


class TrialStatus(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class TrialRecord:
    seed: int
    status: TrialStatus
    created_at: datetime
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    outcome: Optional[TrialOutcome] = None
    error_message: Optional[str] = None


class TrialRunner:
    """Runs independent seeded trials on worker threads; results come back in seed order"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers or int(os.getenv("QHM_WORKERS", "1"))
        self.records: Dict[int, TrialRecord] = {}

    async def _run_trial(self, trial: Callable[[int], TrialOutcome], record: TrialRecord,
                         semaphore: asyncio.Semaphore):
        async with semaphore:
            record.status = TrialStatus.RUNNING
            record.started_at = datetime.now()
            try:
                record.outcome = await asyncio.to_thread(trial, record.seed)
                record.status = TrialStatus.COMPLETED
            except QhmError as e:
                # a domain error is a failed trial, not a crashed run
                record.status = TrialStatus.FAILED
                record.error_message = f"{type(e).__name__}: {e.detail}"
                record.outcome = TrialOutcome(seed=record.seed, passed=False, error=record.error_message,
                                              witness={"error": e.to_payload()})
                logger.error(f"Trial {record.seed} failed: {record.error_message}")
            finally:
                record.completed_at = datetime.now()

    async def run(self, trial: Callable[[int], TrialOutcome], seeds: Iterable[int]) -> List[TrialOutcome]:
        semaphore = asyncio.Semaphore(max(1, self.workers))
        records = []
        for seed in seeds:
            record = TrialRecord(seed=seed, status=TrialStatus.QUEUED, created_at=datetime.now())
            self.records[seed] = record
            records.append(record)
        await asyncio.gather(*(self._run_trial(trial, record, semaphore) for record in records))
        failed = sum(1 for r in records if not (r.outcome and r.outcome.passed))
        logger.info(f"Finished {len(records)} trials with {self.workers} workers, {failed} not passed")
        return [record.outcome for record in records]

    def run_sync(self, trial: Callable[[int], TrialOutcome], seeds: Iterable[int]) -> List[TrialOutcome]:
        return asyncio.run(self.run(trial, seeds))

    def get_status(self, seed: int) -> Optional[TrialRecord]:
        return self.records.get(seed)
