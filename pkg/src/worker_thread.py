import logging
import traceback
from threading import Thread


class FoldWorker(Thread):
    '''
    Fold worker thread

    Runs one fold training on its own thread and keeps either the result or the
    raised exception with its formatted traceback, so the aggregating thread can
    re-raise it.

    :param fn: The function to run on this worker thread. Supplied args and
               kwargs will be passed through to it.
    :type fn: function
    :param args: Arguments to pass to the function
    :param kwargs: Keywords to pass to the function

    '''

    def __init__(self, fn, *args, name=None, **kwargs):
        super(FoldWorker, self).__init__(name=name, daemon=True)
        self.fn = fn
        self.args = args
        self.kwargs = kwargs
        self.result = None
        self.error = None

    def run(self):
        try:
            logging.debug(f"{self.name}: started")
            self.result = self.fn(*self.args, **self.kwargs)
        except Exception as e:
            self.error = (e, traceback.format_exc())
            logging.debug(f"{self.name}: failed\n{self.error[1]}")
        finally:
            logging.debug(f"{self.name}: finished")

    def outcome(self):
        '''Result of the call, re-raising the worker's exception on the calling thread.'''
        self.join()
        if self.error is not None:
            raise self.error[0]
        return self.result


def run_workers(fn, jobs, jobs_args):
    '''
    Calls fn(*args) for every entry in jobs_args using at most `jobs` threads at
    a time. Results come back in input order whatever the number of threads.
    '''
    results = []
    if jobs <= 1:
        return [fn(*args) for args in jobs_args]
    pending = list(enumerate(jobs_args))
    while pending:
        batch, pending = pending[:jobs], pending[jobs:]
        workers = [FoldWorker(fn, *args, name=f"FoldWorker-{index}") for index, args in batch]
        for worker in workers:
            worker.start()
        for worker in workers:
            results.append(worker.outcome())
    return results
