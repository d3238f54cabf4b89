"""The 3-Higgs predicate and Pratt-tree descent.

An odd prime p is 3-Higgs when v_q(p-1) <= 3 for every prime q (2 included)
and every prime factor of p-1 is itself 3-Higgs. 2 is 3-Higgs by
convention, matching OEIS A057447 which starts 2, 3, 5, 7, 11, 13, 19.
"""
import logging
import math
import statistics
import multiprocessing.dummy as mp
from array import array
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Optional

from . import arith
from .exceptions import IncompleteDescent, NotPrime

logger = logging.getLogger(__name__)

CAP = 3


class HiggsStatus(Enum):
    HIGGS = "Higgs"
    NON_HIGGS = "NonHiggs"
    UNDECIDED = "Undecided"


class FailureReason(Enum):
    V2_OVERFLOW = "V2Overflow"
    VQ_OVERFLOW = "VqOverflow"
    NON_HIGGS_CHILD = "NonHiggsChild"
    INCOMPLETE_FACTORIZATION = "IncompleteFactorization"


@dataclass(frozen=True)
class HiggsVerdict:
    """Outcome of the 3-Higgs test for one prime.

    For NonHiggs, `witness` is the descent path from `prime` down to the
    prime whose p-1 breaks an exponent cap; `offending` and `exponent`
    name the prime power at fault in that last p-1. For a NonHiggsChild
    verdict `offending` is the failing child.
    """

    prime: int
    status: HiggsStatus
    witness: tuple = ()
    reason: Optional[FailureReason] = None
    offending: Optional[int] = None
    exponent: Optional[int] = None

    @property
    def is_higgs(self):
        return self.status is HiggsStatus.HIGGS

    @property
    def is_non_higgs(self):
        return self.status is HiggsStatus.NON_HIGGS

    @property
    def leaf(self):
        """The prime at the end of the witness path."""
        return self.witness[-1] if self.witness else None

    def to_dict(self):
        out = {"prime": str(self.prime), "status": self.status.value}
        if self.witness:
            out["witness"] = [str(p) for p in self.witness]
        if self.reason is not None:
            out["reason"] = self.reason.value
        if self.offending is not None:
            out["offending"] = str(self.offending)
            out["exponent"] = self.exponent
        return out


@dataclass(frozen=True)
class CubefreeResult:
    """Outcome of `higgs_cubefree`; `holds` is None when undecided."""

    k: int
    holds: Optional[bool]
    prime: Optional[int] = None
    exponent: Optional[int] = None
    verdict: Optional[HiggsVerdict] = None


@dataclass
class PrattNode:
    """A node of a Pratt tree: `prime` with the factorization of prime-1.

    `children` holds (q, v_q(prime-1), subtree) for every prime q | prime-1,
    2 included, in ascending q. Height counts nodes, so height(2) == 1.
    """

    prime: int
    children: list = field(default_factory=list)

    @property
    def v2_of_pm1(self):
        for q, e, _ in self.children:
            if q == 2:
                return e
        return 0

    @property
    def height(self):
        return 1 + max((node.height for _, _, node in self.children), default=0)

    @property
    def max_exponent(self):
        return max(
            [e for _, e, _ in self.children]
            + [node.max_exponent for _, _, node in self.children],
            default=0,
        )

    def primes(self):
        found = {self.prime}
        for _, _, node in self.children:
            found |= node.primes()
        return found

    def levels(self):
        """Maximal exponent seen at each depth, root first."""
        out = []
        frontier = [self]
        while frontier:
            out.append(max((e for n in frontier for _, e, _ in n.children), default=0))
            frontier = [node for n in frontier for _, _, node in n.children]
        return out[:-1] if len(out) > 1 else out

    def to_dict(self):
        return {
            "p": str(self.prime),
            "children": [
                {"q": str(q), "e": e, "node": node.to_dict()}
                for q, e, node in self.children
            ],
        }


class VerdictCache:
    """Append-only map prime -> HiggsVerdict, safe to share between threads."""

    def __init__(self):
        self._verdicts = {}
        self._lock = mp.Lock()

    def get(self, p):
        return self._verdicts.get(p)

    def add(self, verdict):
        """Insert `verdict` unless one exists; return the stored verdict."""
        with self._lock:
            return self._verdicts.setdefault(verdict.prime, verdict)

    def __contains__(self, p):
        return p in self._verdicts

    def __len__(self):
        return len(self._verdicts)


class HiggsChecker:
    def __init__(self, factorer=None, budget=None, memo=None):
        """
        Decide 3-Higgs membership by Pratt descent.

        Parameters
        ----------
        factorer : callable, optional
            Maps an integer to a `FactorizationRecord`. Typically the
            `factor` method of a `FactorOracle`; defaults to
            `arith.local_factor` under `budget`.

        budget : FactorBudget, optional
            Per-value budget of the default factorer (the descent budget).

        memo : VerdictCache, optional
            Shared verdict cache; a private one is created if omitted.

        """
        self.budget = budget or arith.FactorBudget()
        self.factorer = factorer or partial(arith.local_factor, budget=self.budget)
        self.memo = memo if memo is not None else VerdictCache()
        self._trees = {}

    def is_higgs(self, p):
        """
        Test whether the prime `p` is 3-Higgs.

        The 2-adic cap is checked before anything is factored; the odd
        part of p-1 is then factored and its children are tested in
        ascending order. A partial factorization still settles NonHiggs
        when a found prime already fails; otherwise it leaves the verdict
        Undecided.

        Raises
        ------
        NotPrime
            If `p` is not prime.
        """
        p = int(p)
        if p == 2:
            return self.memo.add(HiggsVerdict(2, HiggsStatus.HIGGS))
        cached = self.memo.get(p)
        if cached is not None:
            return cached
        if not arith.is_probable_prime(p):
            raise NotPrime("{} is not prime".format(p))
        return self.memo.add(self._decide(p))

    def _decide(self, p):
        n = p - 1
        v2 = arith.v_adic(2, n)
        if v2 > CAP:
            return HiggsVerdict(
                p, HiggsStatus.NON_HIGGS, (p,), FailureReason.V2_OVERFLOW, 2, v2
            )

        record = self.factorer(n >> v2)
        for q, e in record.factors.items():
            if e > CAP:
                return HiggsVerdict(
                    p, HiggsStatus.NON_HIGGS, (p,), FailureReason.VQ_OVERFLOW, q, e
                )

        undecided = not record.is_complete
        for q in record.primes:
            child = self.is_higgs(q)
            if child.is_non_higgs:
                return HiggsVerdict(
                    p,
                    HiggsStatus.NON_HIGGS,
                    (p,) + child.witness,
                    FailureReason.NON_HIGGS_CHILD,
                    q,
                    record.factors[q],
                )
            if child.status is HiggsStatus.UNDECIDED:
                undecided = True

        if undecided:
            logger.debug("3-Higgs test of %d left undecided", p)
            return HiggsVerdict(
                p, HiggsStatus.UNDECIDED, reason=FailureReason.INCOMPLETE_FACTORIZATION
            )
        return HiggsVerdict(p, HiggsStatus.HIGGS)

    def higgs_cubefree(self, k):
        """
        Whether k is a product of 3-Higgs primes, each to a power <= 3.

        Even k are accepted (2 counts as 3-Higgs and obeys the same cap).
        """
        if k < 1:
            raise ValueError("`k` must be >= 1")
        record = self.factorer(k)
        pending = False
        for q, e in record.factors.items():
            if e > CAP:
                return CubefreeResult(k, False, q, e)
            verdict = self.is_higgs(q)
            if verdict.is_non_higgs:
                return CubefreeResult(k, False, q, e, verdict)
            if verdict.status is HiggsStatus.UNDECIDED:
                pending = True
        if pending or not record.is_complete:
            return CubefreeResult(k, None)
        return CubefreeResult(k, True)

    def pratt_witness(self, p, path=()):
        """
        Full Pratt tree of the prime `p`.

        Raises
        ------
        IncompleteDescent
            If some p-1 in the tree cannot be completely factored.
        NotPrime
            If `p` is not prime.
        """
        p = int(p)
        if p in self._trees:
            return self._trees[p]
        if p != 2 and not arith.is_probable_prime(p):
            raise NotPrime("{} is not prime".format(p))
        path = tuple(path) + (p,)
        node = PrattNode(p)
        if p > 2:
            n = p - 1
            v2 = arith.v_adic(2, n)
            record = self.factorer(n >> v2)
            if not record.is_complete:
                raise IncompleteDescent(p, path)
            node.children.append((2, v2, self.pratt_witness(2, path)))
            for q, e in record.factors.items():
                node.children.append((q, e, self.pratt_witness(q, path)))
        self._trees[p] = node
        return node

    def enumerate(self, x):
        """`enumerate_higgs_primes(x)`, also recording the Higgs verdicts."""
        found = enumerate_higgs_primes(x)
        for p in found:
            self.memo.add(HiggsVerdict(p, HiggsStatus.HIGGS))
        return found


def replay_witness(witness, budget=arith.GENEROUS_BUDGET):
    """
    Independently re-check a NonHiggs descent path.

    Each prime on the path must divide its parent's p-1, and the final
    prime's p-1 must break an exponent cap. Returns True if it does.
    """
    witness = [int(p) for p in witness]
    if not witness or not all(arith.is_probable_prime(p) for p in witness):
        return False
    for parent, child in zip(witness, witness[1:]):
        if (parent - 1) % child:
            return False
    leaf = witness[-1] - 1
    if arith.v_adic(2, leaf) > CAP:
        return True
    record = arith.local_factor(leaf, budget)
    return any(e > CAP for e in record.factors.values())


def _smallest_factor_sieve(x):
    spf = array("I", [0]) * (x + 1)
    for i in range(2, math.isqrt(x) + 1):
        if spf[i] == 0:
            for j in range(i * i, x + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    return spf


def enumerate_higgs_primes(x):
    """All 3-Higgs primes <= x, ascending.

    Scans the primes in increasing order so each p-1 only needs flags
    already set for smaller primes; p-1 is split with a smallest-prime-factor
    sieve.
    """
    if x < 2:
        return []
    spf = _smallest_factor_sieve(x)
    higgs = bytearray(x + 1)
    higgs[2] = 1
    found = [2]
    for p in range(3, x + 1, 2):
        if spf[p]:
            continue
        n = p - 1
        ok = True
        while n > 1:
            q = spf[n] or n
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            if e > CAP or not higgs[q]:
                ok = False
                break
        if ok:
            higgs[p] = 1
            found.append(p)
    return found


def higgs_prime_counts(x, checkpoints=None):
    """Map each checkpoint c <= x to the number of 3-Higgs primes <= c.

    Default checkpoints are the powers of two up to x.
    """
    if checkpoints is None:
        checkpoints = [1 << k for k in range(1, x.bit_length()) if 1 << k <= x]
    found = enumerate_higgs_primes(x)
    return {c: bisect_right(found, c) for c in sorted(checkpoints) if c <= x}


def fit_counting_exponent(counts):
    """Least-squares slope of log count against log x."""
    points = [(math.log(c), math.log(n)) for c, n in counts.items() if n > 0 and c > 1]
    if len(points) < 2:
        raise ValueError("`counts` needs at least two nonzero checkpoints")
    xs, ys = zip(*points)
    return statistics.linear_regression(xs, ys).slope


_default = None


def default_checker():
    global _default
    if _default is None:
        _default = HiggsChecker()
    return _default


def is_higgs(p, checker=None):
    return (checker or default_checker()).is_higgs(p)


def higgs_cubefree(k, checker=None):
    return (checker or default_checker()).higgs_cubefree(k)


def pratt_witness(p, checker=None):
    return (checker or default_checker()).pratt_witness(p)
