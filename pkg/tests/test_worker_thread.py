import time

import pytest

from src.custom_exception import FoldQuotaError
from src.worker_thread import FoldWorker, run_workers


def slow_square(x, delay):
    time.sleep(delay)
    return x * x


def failing(x):
    if x == 2:
        raise FoldQuotaError(f"fold {x} failed")
    return x


class TestRunWorkers:

    @pytest.mark.parametrize('jobs', [1, 2, 3, 8])
    def test_results_in_input_order(self, jobs):
        jobs_args = [(x, 0.01 * (5 - x)) for x in range(5)]
        assert run_workers(slow_square, jobs, jobs_args) == [0, 1, 4, 9, 16]

    def test_no_jobs(self):
        assert run_workers(slow_square, 4, []) == []

    @pytest.mark.parametrize('jobs', [1, 3])
    def test_exception_reaches_caller(self, jobs):
        with pytest.raises(FoldQuotaError, match='fold 2'):
            run_workers(failing, jobs, [(x,) for x in range(4)])


class TestFoldWorker:

    def test_keeps_traceback(self):
        worker = FoldWorker(failing, 2, name='FoldWorker-2')
        worker.start()
        with pytest.raises(FoldQuotaError):
            worker.outcome()
        assert 'FoldQuotaError' in worker.error[1]

    def test_kwargs(self):
        worker = FoldWorker(slow_square, 3, delay=0.0)
        worker.start()
        assert worker.outcome() == 9
        assert worker.error is None
