"""Client for a remote factor database with a query-by-number HTTP API.

Responses are cached on disk, one JSON file per queried number, so a
rerun over the same numbers needs no network.
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass

import requests

from . import arith, utils
from .exceptions import MalformedResponse, RemoteUnavailable
from .ratelimit import RateLimiter

logger = logging.getLogger(__name__)

DEFAULT_URL = "http://factordb.com/api"

# FF fully factored, CF composite with some factors known, C composite
# with none, P/PRP prime, U unknown, N not in the database
KNOWN_STATUSES = {"FF", "CF", "C", "P", "PRP", "U", "N", "Unit", "Zero"}


@dataclass(frozen=True)
class RemoteResult:
    n: int
    status: str
    record: arith.FactorizationRecord

    @property
    def fully_factored(self):
        return self.record.is_complete


class FactorDBClient:
    def __init__(
        self,
        base_url=None,
        cache_dir=None,
        limiter=None,
        session=None,
        timeout=30.0,
    ):
        """
        Query the remote factor database.

        Parameters
        ----------
        base_url : str, optional
            API endpoint; defaults to the `UPNCERT_FACTORDB_URL` environment
            variable, then `DEFAULT_URL`.

        cache_dir : str, optional
            Directory of cached responses. No disk caching if None.

        limiter : RateLimiter, optional
            Shared throttle; defaults to one request per second.

        session : requests.Session, optional

        timeout : float, optional, default 30.0
            Per-request timeout in seconds.

        """
        self.base_url = base_url or os.environ.get("UPNCERT_FACTORDB_URL") or DEFAULT_URL
        self.cache_dir = cache_dir
        self.limiter = limiter or RateLimiter(calls=1, per=1.0)
        self.session = session or requests.Session()
        self.timeout = timeout
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)

    def _cache_path(self, decimal):
        digest = hashlib.sha256(decimal.encode("ascii")).hexdigest()
        return os.path.join(self.cache_dir, digest + ".json")

    def _fetch(self, decimal):
        if self.cache_dir:
            path = self._cache_path(decimal)
            if os.path.exists(path):
                with open(path) as f:
                    return json.load(f)

        self.limiter.acquire()
        try:
            response = self.session.get(
                self.base_url, params={"query": decimal}, timeout=self.timeout
            )
            response.raise_for_status()
        except requests.RequestException as e:
            raise RemoteUnavailable(str(e)) from e
        try:
            payload = response.json()
        except ValueError as e:
            raise MalformedResponse("response is not JSON") from e

        if self.cache_dir:
            with open(self._cache_path(decimal), "w") as f:
                json.dump(payload, f)
        return payload

    def query(self, n):
        """
        Known factors of `n` according to the remote database.

        Every returned factor is re-tested locally; factors that fail the
        primality test are kept as composite pieces.

        Raises
        ------
        RemoteUnavailable
            On any network or HTTP error.
        MalformedResponse
            If the payload is not understood or its factors do not
            multiply back to `n`.
        """
        n = int(n)
        payload = self._fetch(utils.to_decimal(n))
        if not isinstance(payload, dict):
            raise MalformedResponse("expected a JSON object")
        status = payload.get("status")
        if status not in KNOWN_STATUSES:
            raise MalformedResponse("unknown status {!r}".format(status))

        primes, pieces = {}, []
        product = 1
        try:
            for value, exponent in payload.get("factors", []):
                value, exponent = utils.from_decimal(value), int(exponent)
                product *= value ** exponent
                if arith.is_probable_prime(value):
                    primes[value] = primes.get(value, 0) + exponent
                else:
                    pieces.extend([value] * exponent)
        except (TypeError, ValueError) as e:
            raise MalformedResponse("unreadable factor list") from e

        if product not in (1, n):
            raise MalformedResponse("factors do not multiply back to n")
        if product == 1:
            pieces = [n]
        record = arith.FactorizationRecord.from_parts(n, primes, pieces)
        logger.info(
            "remote status %s for a %d-digit number: %d prime(s)",
            status,
            utils.digits(n),
            len(record.factors),
        )
        return RemoteResult(n, status, record)


def remote_query(n, client=None):
    return (client or FactorDBClient()).query(n)
