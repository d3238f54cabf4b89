"""Layered factorization of 2^m+1 and of descent values.

Sources are tried from cheapest to dearest: the bundled JSON cache,
algebraic divisors 2^d+1 (d | m, m/d odd), the Aurifeuillean halves when
m = 2k with k odd, a sweep over the primitive residue class r = 1 (mod 2m),
local factoring, and finally the optional remote database.
"""
import json
import logging
import os
import multiprocessing.dummy as mp
from dataclasses import dataclass
from enum import Enum

from . import arith, utils
from .arith import FactorizationRecord
from .exceptions import ParseError, RemoteUnavailable, MalformedResponse, ValidationError

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
BUNDLED_CACHE = os.path.join(DATA_DIR, "factor_cache.json")


class Source(Enum):
    CACHE = "cache"
    ALGEBRAIC = "algebraic"
    AURIFEUILLEAN = "aurifeuillean"
    LOCAL = "local"
    REMOTE = "remote"


def default_cache_path():
    return os.environ.get("UPNCERT_CACHE") or BUNDLED_CACHE


class FactorCache:
    """Records for 2^m+1 keyed by m, with a source tag per entry."""

    def __init__(self, entries=None, provenance=None, rejected=None):
        self.entries = dict(entries or {})
        self.provenance = dict(provenance or {})
        self.rejected = dict(rejected or {})
        self._lock = mp.Lock()

    def get(self, m):
        return self.entries.get(m)

    def update(self, m, record, source):
        with self._lock:
            self.entries[m] = record
            self.provenance[m] = source

    def __contains__(self, m):
        return m in self.entries

    def __len__(self):
        return len(self.entries)

    def to_json(self):
        return {
            str(m): self.entries[m].to_json() for m in sorted(self.entries)
        }

    def dump(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")

    @classmethod
    def from_json(cls, obj, strict=True):
        """
        Build a cache from the decoded JSON schema.

        Each value maps decimal primes to exponents, with an optional
        decimal "cofactor" and optional "status". A missing cofactor is
        derived as (2^m+1) / prod(p^e).

        Raises
        ------
        ParseError
            If `obj` is not an object of objects.
        ValidationError
            If `strict` and any entry is invalid. Otherwise invalid entries
            are dropped, logged and kept in `rejected`.
        """
        if not isinstance(obj, dict):
            raise ParseError("factor cache must be a JSON object")
        entries, rejected = {}, {}
        for key, value in obj.items():
            try:
                m = int(key)
                if m < 1 or str(m) != key.strip():
                    raise ValueError
            except ValueError:
                raise ParseError("cache key {!r} is not a positive integer".format(key))
            if not isinstance(value, dict):
                raise ParseError("cache entry for m={} is not an object".format(m))
            try:
                entries[m] = parse_entry(m, value)
            except ValueError as e:
                rejected[m] = str(e)

        if rejected:
            if strict:
                raise ValidationError(rejected)
            for m, reason in sorted(rejected.items()):
                logger.warning("dropping cache entry m=%d: %s", m, reason)
        provenance = {m: Source.CACHE for m in entries}
        return cls(entries, provenance, rejected)


def parse_entry(m, value):
    """One validated record for 2^m+1; ValueError names what is wrong."""
    n = (1 << m) + 1
    factors = {}
    for key, exponent in value.items():
        if key in ("cofactor", "status"):
            continue
        p = utils.from_decimal(key)
        if not isinstance(exponent, int) or not 1 <= exponent <= arith.MAX_EXPONENT:
            raise ValueError("bad exponent {!r} for {}".format(exponent, p))
        if not arith.is_probable_prime(p):
            raise ValueError("listed factor {} is not prime".format(p))
        if arith.v_adic(p, n) != exponent:
            raise ValueError("{}^{} is not the exact power dividing 2^m+1".format(p, exponent))
        factors[p] = exponent

    known = 1
    for p, e in factors.items():
        known *= p ** e
    derived = n // known
    if "cofactor" in value:
        cofactor = utils.from_decimal(value["cofactor"])
        if cofactor != derived:
            raise ValueError("cofactor does not complete the product")
    record = FactorizationRecord.from_parts(n, factors, [derived])

    status = value.get("status")
    if status == "complete" and not record.is_complete:
        raise ValueError("marked complete but a composite cofactor remains")
    return record


def load_cache(path=None, strict=True):
    """Read and validate a factor cache file (default: `default_cache_path()`)."""
    path = path or default_cache_path()
    try:
        with open(path) as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError("{}: {}".format(path, e)) from e
    cache = FactorCache.from_json(obj, strict=strict)
    logger.info("loaded %d factor cache entries from %s", len(cache), path)
    return cache


@dataclass(frozen=True)
class AurifeuilleanSplit:
    """2^(2k)+1 = L * M for odd k >= 3, with L < M."""

    k: int
    L: int
    M: int
    branch: str

    @property
    def m(self):
        return 2 * self.k

    @property
    def five_divides(self):
        return "L" if self.L % 5 == 0 else "M"


def aurifeuillean_split(k):
    """
    Split 2^(2k)+1 into its two Aurifeuillean halves.

    With X = 2^u the halves are 2X^4 -+ 2X^2 + 1 for k = 4u+1 and
    8X^4 -+ 4X^2 + 1 for k = 4u+3; both equal 2^k -+ 2^((k+1)/2) + 1.
    """
    if k < 3 or k % 2 == 0:
        raise ValueError("`k` must be odd and >= 3")
    if k % 4 == 1:
        X = 1 << ((k - 1) // 4)
        L, M = 2 * X ** 4 - 2 * X ** 2 + 1, 2 * X ** 4 + 2 * X ** 2 + 1
        branch = "OneMod4"
    else:
        X = 1 << ((k - 3) // 4)
        L, M = 8 * X ** 4 - 4 * X ** 2 + 1, 8 * X ** 4 + 4 * X ** 2 + 1
        branch = "ThreeMod4"
    if L * M != (1 << (2 * k)) + 1:
        raise ArithmeticError("Aurifeuillean identity failed for k={}".format(k))
    return AurifeuilleanSplit(k, L, M, branch)


def merge(record, other):
    """Refine `record` with everything `other` knows about a common factor."""
    return record.refine_with(list(other.factors) + list(other.composites))


class FactorOracle:
    def __init__(
        self,
        cache=None,
        budget=None,
        descent_budget=None,
        remote=None,
        local_factoring=True,
        sweep_bound=0,
    ):
        """
        Factor numbers of the form 2^m+1 and descent values p-1.

        Parameters
        ----------
        cache : FactorCache, optional
            Starting records; new results are written back into it.

        budget : FactorBudget, optional
            Local factoring budget for the cofactors of 2^m+1.

        descent_budget : FactorBudget, optional
            Budget for `factor`, used on p-1 values in Higgs descents.

        remote : FactorDBClient, optional
            Remote database client; None disables remote lookups.

        local_factoring : bool, optional, default True
            If False only cached, algebraic and remote knowledge is used.

        sweep_bound : int, optional, default 0
            Test primes r = 1 (mod 2m) up to this bound against 2^m+1.

        """
        self.cache = cache if cache is not None else FactorCache()
        self.budget = budget or arith.FactorBudget()
        self.descent_budget = descent_budget or self.budget
        self.remote = remote
        self.local_factoring = local_factoring
        self.sweep_bound = sweep_bound

        self._records = {}
        self._merged = {}
        self._locks = {}
        self._guard = mp.Lock()

    def _lock_for(self, m):
        with self._guard:
            return self._locks.setdefault(m, mp.Lock())

    def factor(self, n):
        """Memoized factorization of an arbitrary integer under the descent budget."""
        n = int(n)
        record = self._records.get(n)
        if record is not None:
            return record
        if self.local_factoring:
            record = arith.local_factor(n, self.descent_budget)
        else:
            record = FactorizationRecord.unfactored(n)
        if not record.is_complete and self.remote is not None:
            record = self._ask_remote(record)
        return self._records.setdefault(n, record)

    def known(self, m):
        """Whatever is already known about 2^m+1, without new work."""
        return self._merged.get(m) or self.cache.get(m)

    def factor_2m_plus_1(self, m):
        """
        Best available factorization of 2^m+1.

        Returns
        -------
        FactorizationRecord
            Complete, or partial with the unsplit pieces kept apart.
        """
        if m < 1:
            raise ValueError("`m` must be >= 1")
        with self._lock_for(m):
            if m in self._merged:
                return self._merged[m]
            record, source = self._build(m)
            self._merged[m] = record
            if record != self.cache.get(m):
                self.cache.update(m, record, source)
            return record

    def _build(self, m):
        n = (1 << m) + 1
        cached = self.cache.get(m)
        record = cached or FactorizationRecord.unfactored(n)
        source = self.cache.provenance.get(m, Source.CACHE)
        if record.is_complete:
            return record, source

        def improved(candidate, tag):
            nonlocal record, source
            if candidate != record:
                record, source = candidate, tag

        for d in utils.odd_part_divisors(m)[:-1]:
            improved(record.refine_with([(1 << d) + 1]), Source.ALGEBRAIC)
            improved(merge(record, self.factor_2m_plus_1(d)), Source.ALGEBRAIC)

        if m % 4 == 2 and m >= 6:
            split = aurifeuillean_split(m // 2)
            improved(record.refine_with([5, split.L, split.M]), Source.AURIFEUILLEAN)

        if self.sweep_bound and not record.is_complete:
            hits = primitive_sweep(m, self.sweep_bound)
            improved(record.refine_with(hits), Source.LOCAL)

        if self.local_factoring and not record.is_complete:
            for piece in record.composites:
                found = arith.local_factor(piece, self.budget, hint=2 * m)
                improved(merge(record, found), Source.LOCAL)

        if self.remote is not None and not record.is_complete:
            improved(self._ask_remote(record), Source.REMOTE)

        logger.debug(
            "2^%d+1: %d prime(s), status %s", m, len(record.factors), record.status.value
        )
        return record, source

    def _ask_remote(self, record):
        for piece in record.composites:
            try:
                result = self.remote.query(piece)
            except (RemoteUnavailable, MalformedResponse) as e:
                logger.warning("remote lookup failed, keeping local result: %s", e)
                return record
            record = merge(record, result.record)
        return record


def primitive_sweep(m, bound):
    """Primes r = 1 (mod 2m), r <= bound, dividing 2^m+1."""
    step = 2 * m
    return [
        r
        for r in range(step + 1, bound + 1, step)
        if pow(2, m, r) == r - 1 and arith.is_probable_prime(r)
    ]


def factor_2m_plus_1(m, cache=None, budget=None, remote=None):
    return FactorOracle(cache, budget, remote=remote).factor_2m_plus_1(m)
