import time
import random

import queue
import multiprocessing.dummy as mp

from .exceptions import RateLimitException
from . import utils


class RateLimiter:
    def __init__(self, calls=1, per=1.0, fuzz=0):
        """
        A thread safe limiter allowing `calls` acquisitions per `per`
        seconds across all threads.

        The remote factor database client acquires one slot before every
        HTTP request, so a pool of workers can share one client without
        exceeding the service's request budget. If `per` is <= 0, the rate
        limit is infinite.

        To avoid firing all allowed calls at once on startup, an extra
        randomized wait period can be configured with `fuzz`. The limiter
        then waits between 0 and `fuzz` seconds before granting a slot.
        Fuzzing only occurs if there is no rate limit waiting to be done.

        Parameters
        ----------
        calls : int, optional, default 1
            The number of calls per time unit `per`. Must be at least 1.

        per : float, optional, default 1.0
            The time window for tracking calls, in seconds, <=0 for
            infinite rate limit.

        fuzz: float, optional, default 0
            The maximum length (in seconds) of fuzzed extra sleep, <=0
            for no fuzzing

        Examples
        --------

        One request per second, the default:

            >>> limiter = RateLimiter()
            >>> limiter.acquire()

        A rate limit of 3 calls per 5 seconds:

            >>> limiter = RateLimiter(calls=3, per=5)

        No limit at all:

            >>> limiter = RateLimiter(per=0)

        """
        if calls < 1:
            raise ValueError("`calls` must be an integer >= 1")

        self.calls = int(calls)
        self.per = float(per)
        self.fuzz = float(fuzz)

        self._call_log = queue.Queue(maxsize=self.calls)
        self._pending = mp.Lock()

    def acquire(self, block=True, timeout=None):
        """
        Wait for a free slot under the rate limit.

        If `block` is True and `timeout` is None (the default), block until
        the rate limit allows another call. If `timeout` is a non-negative
        number, block at most `timeout` seconds and raise
        RateLimitException if the required waiting time is longer.

        Otherwise (`block` is False), take a slot if one is immediately
        available, else raise RateLimitException.

        Parameters
        ----------
        block : bool, optional, default True
            Whether to block until a slot is available

        timeout : float, optional, default None
            The maximum amount of time to block for

        """
        start = time.monotonic()
        if timeout is not None and timeout < 0:
            raise ValueError("`timeout` must be a non-negative number")

        self._acquire_or_raise(self._pending, block, timeout)

        try:
            if self.per <= 0:
                return

            per = self.per
            fuzz = self.fuzz

            if self._call_log.qsize() >= self.calls:
                # the oldest call decides how long we still have to wait
                first_call = self._call_log.get()
                time_since_call = time.monotonic() - first_call

                if time_since_call < per:
                    if not block:
                        self._call_log.task_done()
                        raise RateLimitException("Too many requests")

                    time_remaining = utils.get_time_remaining(start, timeout)
                    sleep_time = per - time_since_call
                    if time_remaining is not None and time_remaining < sleep_time:
                        self._call_log.task_done()
                        raise RateLimitException(
                            "Not enough time in timeout to wait for next call"
                        )
                    time.sleep(sleep_time)

                self._call_log.task_done()

            elif fuzz > 0:
                time_remaining = utils.get_time_remaining(start, timeout)
                fuzz_time = random.uniform(0, fuzz)
                if time_remaining is not None:
                    fuzz_time = max(0.0, min(fuzz_time, time_remaining - 0.01))
                time.sleep(fuzz_time)

            self._call_log.put(time.monotonic())
        finally:
            self._pending.release()

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        return False

    @staticmethod
    def _acquire_or_raise(lock, block=True, timeout=None):
        """Attempt to acquire `lock`, else raise RateLimitException"""
        if block and timeout is not None:
            locked = lock.acquire(block, timeout)
        else:
            locked = lock.acquire(block)

        if not locked:
            raise RateLimitException("Timed out waiting for next call")
