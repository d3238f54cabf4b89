"""Membership in H_even: even m with every prime of 2^m + 1 3-Higgs.

Only m = 2 (mod 4) can belong (a Fermat-type obstruction excludes the
rest), and then k = m/2 must be Higgs-cubefree. What survives is decided
by divisor inheritance, bundled closure rows, or a factorization of
2^m + 1.
"""
import csv
import json
import logging
import os
import multiprocessing.dummy as mp
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from math import gcd
from typing import Optional

from . import arith, utils
from .exceptions import ChecksFailed, ParseError
from .higgs import HiggsChecker
from .oracle import DATA_DIR, aurifeuillean_split, primitive_sweep

logger = logging.getLogger(__name__)

BUNDLED_CLOSURES = os.path.join(DATA_DIR, "deep_closures.json")

FRONTIER_COLUMNS = ("m", "k", "form", "known_factors", "blocking_digits", "inherited_from")

# primitive primes of 2^m + 1 below this are divided out when deriving p*
DERIVE_SWEEP_BOUND = 10 ** 8


class Verdict(Enum):
    MEMBER = "Member"
    EXCLUDED = "Excluded"
    UNDECIDED = "Undecided"


class Reason(Enum):
    FERMAT_OBSTRUCTION = "FermatObstruction"
    NOT_HIGGS_CUBEFREE = "NotHiggsCubefree"
    WITNESS_PRIME = "WitnessPrime"
    INHERITED_FROM_DIVISOR = "InheritedFromDivisor"
    DEEP_PRATT_CLOSURE = "DeepPrattClosure"
    BLOCKING_COFACTORS = "BlockingCofactors"


STRUCTURAL = (Reason.FERMAT_OBSTRUCTION, Reason.NOT_HIGGS_CUBEFREE)


@dataclass(frozen=True)
class HevenClassification:
    """Verdict for one even m, with the evidence behind it.

    `prime` is the offending prime of k (NotHiggsCubefree), the witness r
    (WitnessPrime), the inherited witness (InheritedFromDivisor) or p*
    (DeepPrattClosure). `blocking` lists the digit counts of unsplit
    cofactors, `undecided` the primes whose 3-Higgs status stayed open.
    """

    m: int
    verdict: Verdict
    reason: Optional[Reason] = None
    prime: Optional[int] = None
    exponent: Optional[int] = None
    path: tuple = ()
    divisor: Optional[int] = None
    witness_q: Optional[int] = None
    blocking: tuple = ()
    undecided: tuple = ()
    record: Optional[arith.FactorizationRecord] = field(default=None, compare=False)

    @property
    def k(self):
        return self.m // 2

    @property
    def is_member(self):
        return self.verdict is Verdict.MEMBER

    @property
    def is_excluded(self):
        return self.verdict is Verdict.EXCLUDED

    @property
    def is_undecided(self):
        return self.verdict is Verdict.UNDECIDED

    @property
    def divisor_witness(self):
        """A concrete non-3-Higgs prime of 2^m + 1, if this verdict has one."""
        if self.reason in (
            Reason.WITNESS_PRIME,
            Reason.INHERITED_FROM_DIVISOR,
            Reason.DEEP_PRATT_CLOSURE,
        ):
            return self.prime
        return None

    def to_dict(self):
        out = {"m": self.m, "verdict": self.verdict.value}
        if self.reason is not None:
            out["reason"] = self.reason.value
        if self.prime is not None:
            out["prime"] = utils.to_decimal(self.prime)
        if self.exponent is not None:
            out["exponent"] = self.exponent
        if self.path:
            out["path"] = [str(p) for p in self.path]
        if self.divisor is not None:
            out["divisor"] = self.divisor
        if self.witness_q is not None:
            out["q"] = str(self.witness_q)
        if self.blocking:
            out["blocking_digits"] = list(self.blocking)
        if self.undecided:
            out["undecided_primes"] = [str(p) for p in self.undecided]
        return out


@dataclass(frozen=True)
class DeepClosureRow:
    """A recorded prime p* | 2^m + 1 whose p* - 1 is not 3-Higgs.

    `kind` is "witness" (q | p* - 1 with q not 3-Higgs), "v2_direct"
    (v_2(p* - 1) > 3) or "inherited" (closed through the row of
    `inherited_from`).
    """

    m: int
    kind: str
    p_star: Optional[int] = None
    digits: Optional[int] = None
    q: Optional[int] = None
    v2: Optional[int] = None
    inherited_from: Optional[int] = None
    depth: str = "deep"

    @classmethod
    def from_dict(cls, row):
        try:
            kind = row["kind"]
            if kind not in ("witness", "v2_direct", "inherited"):
                raise ValueError(kind)

            def number(key):
                value = row.get(key)
                return None if value is None else utils.from_decimal(value)

            return cls(
                m=int(row["m"]),
                kind=kind,
                p_star=number("p_star"),
                digits=row.get("digits"),
                q=number("q"),
                v2=row.get("v2"),
                inherited_from=row.get("inherited_from"),
                depth=row.get("depth", "deep"),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise ParseError("bad closure row {!r}: {}".format(row.get("m"), e)) from e


def load_closures(path=None, overrides=None):
    """
    Closure rows keyed by m.

    Rows from `overrides` (default: the file named by
    `UPNCERT_DEEP_CLOSURES`) replace bundled rows with the same m. Rows without a p* decimal
    have it derived at verification time.
    """
    rows = {}
    overrides = overrides or os.environ.get("UPNCERT_DEEP_CLOSURES")
    for source in (path or BUNDLED_CLOSURES, overrides):
        if not source:
            continue
        try:
            with open(source) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError("{}: {}".format(source, e)) from e
        for item in data:
            row = DeepClosureRow.from_dict(item)
            rows[row.m] = row
    return rows


def derive_p_star(m, digits=None, sweep_bound=DERIVE_SWEEP_BOUND):
    """
    Recover p* from the Aurifeuillean halves of 2^m + 1, m = 2 (mod 4).

    Every prime of 2^m + 1 either divides some 2^d + 1 (d | m, m/d odd)
    or is primitive, hence = 1 (mod 2m). Dividing a half by both kinds
    (primitive ones up to `sweep_bound`) leaves p* when the rest of the
    half is small.

    Returns
    -------
    int or None
        The first leftover that is a probable prime with `digits` digits
        (any length if `digits` is None), else None.
    """
    split = aurifeuillean_split(m // 2)
    small = [(1 << d) + 1 for d in utils.odd_part_divisors(m)[:-1]]
    small += primitive_sweep(m, sweep_bound)
    for half in (split.L, split.M):
        c = half
        for d in small:
            g = gcd(c, d)
            while g > 1:
                c //= g
                g = gcd(c, g)
        if digits is not None and utils.digits(c) != digits:
            continue
        if c > 1 and arith.is_probable_prime(c):
            logger.debug("derived p* of 2^%d+1 (%d digits)", m, utils.digits(c))
            return c
    return None


def verify_deep_closure(row, checker=None, rows=None):
    """
    Re-check a closure row by modular arithmetic.

    Checks that p* is prime (BPSW), that 2^m = -1 (mod p*), and the
    witness: q | p* - 1 with q not 3-Higgs, or v_2(p* - 1) > 3. An
    inherited row checks d | m with m/d odd and re-verifies the row of d.

    Returns
    -------
    HevenClassification
        Excluded, by DeepPrattClosure or InheritedFromDivisor.

    Raises
    ------
    ChecksFailed
        Naming the first failing step.
    """
    checker = checker or HiggsChecker()
    m = row.m
    if row.kind == "inherited":
        d = row.inherited_from
        if not d or m % d or (m // d) % 2 == 0:
            raise ChecksFailed("inheritance", "{} is not an odd-cofactor divisor of {}".format(d, m))
        parent = (rows or {}).get(d)
        if parent is None:
            raise ChecksFailed("inheritance", "no closure row for m={}".format(d))
        base = verify_deep_closure(parent, checker, rows)
        p = base.prime
        if pow(2, m, p) != p - 1:
            raise ChecksFailed("divides", "p* of m={} does not divide 2^{}+1".format(d, m))
        return HevenClassification(
            m, Verdict.EXCLUDED, Reason.INHERITED_FROM_DIVISOR, p, divisor=d, witness_q=base.witness_q
        )

    p = row.p_star
    if p is None:
        try:
            p = derive_p_star(m, row.digits)
        except ValueError:
            p = None
        if p is None:
            raise ChecksFailed("p_star", "m={}: p* could not be derived".format(m))
    if row.digits is not None and utils.digits(p) != row.digits:
        raise ChecksFailed("digits", "p* has {} digits, row says {}".format(utils.digits(p), row.digits))
    if not arith.is_probable_prime(p):
        raise ChecksFailed("primality", "p* fails the probable-prime test")
    if pow(2, m, p) != p - 1:
        raise ChecksFailed("divides", "p* does not divide 2^{}+1".format(m))

    if row.kind == "v2_direct":
        v2 = arith.v_adic(2, p - 1)
        if v2 <= 3 or (row.v2 is not None and v2 != row.v2):
            raise ChecksFailed("witness", "v_2(p*-1) = {}".format(v2))
        return HevenClassification(
            m, Verdict.EXCLUDED, Reason.DEEP_PRATT_CLOSURE, p, exponent=v2
        )

    q = row.q
    if q is None or (p - 1) % q:
        raise ChecksFailed("witness", "q does not divide p*-1")
    verdict = checker.is_higgs(q)
    if not verdict.is_non_higgs:
        raise ChecksFailed("witness", "q = {} is {}".format(q, verdict.status.value))
    return HevenClassification(
        m,
        Verdict.EXCLUDED,
        Reason.DEEP_PRATT_CLOSURE,
        p,
        path=(p,) + verdict.witness,
        witness_q=q,
    )


def prefilter(m, checker=None):
    """Structural exclusion of even m, or None if m survives."""
    if m < 2 or m % 2:
        raise ValueError("`m` must be even and >= 2")
    if m % 4 == 0:
        return HevenClassification(
            m, Verdict.EXCLUDED, Reason.FERMAT_OBSTRUCTION, 2, arith.v_adic(2, m)
        )
    checker = checker or HiggsChecker()
    result = checker.higgs_cubefree(m // 2)
    if result.holds is False:
        return HevenClassification(
            m,
            Verdict.EXCLUDED,
            Reason.NOT_HIGGS_CUBEFREE,
            result.prime,
            result.exponent,
            path=result.verdict.witness if result.verdict else (),
        )
    return None


@dataclass
class ClassificationSummary:
    """Counts over a range of m, including the odd-k bookkeeping."""

    members: list = field(default_factory=list)
    undecided: list = field(default_factory=list)
    reasons: Counter = field(default_factory=Counter)
    odd_k: int = 0

    @property
    def structural(self):
        return self.reasons[Reason.NOT_HIGGS_CUBEFREE]

    @property
    def cubefree(self):
        return self.odd_k - self.structural

    @property
    def witness_excluded(self):
        return sum(n for r, n in self.reasons.items() if r not in STRUCTURAL)

    def add(self, c):
        if c.m % 4 == 2:
            self.odd_k += 1
        if c.is_member:
            self.members.append(c.m)
        elif c.is_undecided:
            self.undecided.append(c.m)
        else:
            self.reasons[c.reason] += 1

    def to_dict(self):
        return {
            "odd_k": self.odd_k,
            "higgs_cubefree": self.cubefree,
            "structural": self.structural,
            "members": sorted(self.members),
            "excluded": {r.value: self.reasons[r] for r in Reason if self.reasons[r]},
            "witness_excluded": self.witness_excluded,
            "undecided": sorted(self.undecided),
        }


class HevenClassifier:
    def __init__(self, oracle, checker=None, closures=None):
        """
        Classify even m against H_even.

        Parameters
        ----------
        oracle : FactorOracle
            Source of factorizations of 2^m + 1.

        checker : HiggsChecker, optional
            Defaults to a checker factoring through `oracle`.

        closures : dict, optional
            Closure rows keyed by m, as from `load_closures`.

        """
        self.oracle = oracle
        self.checker = checker or HiggsChecker(oracle.factor)
        self.closures = closures or {}
        self.results = {}
        self._lock = mp.Lock()

    def _store(self, c):
        with self._lock:
            return self.results.setdefault(c.m, c)

    def classify(self, m):
        """
        Classify m: prefilter, then divisor inheritance, then closure
        rows, then the factorization of 2^m + 1.

        A Member verdict needs a complete factorization with every prime
        3-Higgs; anything short of that which has no witness is Undecided.
        """
        if m in self.results:
            return self.results[m]
        pre = prefilter(m, self.checker)
        if pre is not None:
            return self._store(pre)

        for d in utils.odd_part_divisors(m)[:-1]:
            inherited = self.classify(d)
            r = inherited.divisor_witness
            if r is not None and pow(2, m, r) == r - 1:
                return self._store(
                    HevenClassification(
                        m,
                        Verdict.EXCLUDED,
                        Reason.INHERITED_FROM_DIVISOR,
                        r,
                        path=inherited.path,
                        divisor=d,
                    )
                )

        row = self.closures.get(m)
        if row is not None:
            try:
                return self._store(verify_deep_closure(row, self.checker, self.closures))
            except ChecksFailed as e:
                logger.warning("closure row m=%d not verified: %s", m, e)

        return self._store(self._from_factors(m))

    def _from_factors(self, m):
        record = self.oracle.factor_2m_plus_1(m)
        undecided = []
        for r in record.primes:
            verdict = self.checker.is_higgs(r)
            if verdict.is_non_higgs:
                return HevenClassification(
                    m,
                    Verdict.EXCLUDED,
                    Reason.WITNESS_PRIME,
                    r,
                    path=verdict.witness,
                    record=record,
                )
            if not verdict.is_higgs:
                undecided.append(r)
        if record.is_complete and not undecided:
            return HevenClassification(m, Verdict.MEMBER, record=record)
        return HevenClassification(
            m,
            Verdict.UNDECIDED,
            Reason.BLOCKING_COFACTORS,
            blocking=tuple(sorted(utils.digits(c) for c in record.composites)),
            undecided=tuple(undecided),
            record=record,
        )

    def classify_range(self, m_min, m_max, workers=1):
        """
        Classify every even m in [m_min, m_max].

        Returns
        -------
        (list of HevenClassification, ClassificationSummary)
        """
        if m_min > m_max:
            raise ValueError("`m_min` must be <= `m_max`")
        ms = [m for m in range(max(m_min, 2), m_max + 1) if m % 2 == 0]
        if workers > 1:
            with mp.Pool(workers) as pool:
                results = pool.map(self.classify, ms)
        else:
            results = [self.classify(m) for m in ms]
        summary = ClassificationSummary()
        for c in results:
            summary.add(c)
        logger.info("classified m in [%d, %d]: %s", m_min, m_max, summary.to_dict())
        return results, summary


def classify_range(m_min, m_max, oracle, closures=None, workers=1):
    return HevenClassifier(oracle, closures=closures).classify_range(m_min, m_max, workers)


def prime_branch_candidates(primes, cap=3):
    """Every product of p_i^e_i with 0 <= e_i <= cap, ascending."""
    primes = list(primes)
    if len(set(primes)) != len(primes) or any(p % 2 == 0 for p in primes):
        raise ValueError("`primes` must be distinct odd primes")
    values = []
    for exponents in product(range(cap + 1), repeat=len(primes)):
        k = 1
        for p, e in zip(primes, exponents):
            k *= p ** e
        values.append(k)
    return sorted(values)


def v2_histogram(classifications, skip=(5,)):
    """
    Count distinct recorded primes q of undecided m by v_2(q - 1).

    Bucket 4 collects v_2(q - 1) >= 4; it stays empty on undecided rows,
    since such a q would have excluded m.
    """
    seen = set()
    for c in classifications:
        if c.is_undecided and c.record is not None:
            seen.update(q for q in c.record.factors if q not in skip)
    histogram = Counter(min(arith.v_adic(2, q - 1), 4) for q in seen)
    return dict(sorted(histogram.items()))


def _frontier_row(c, undecided_ms):
    k = c.k
    if arith.is_probable_prime(k):
        form, inherited = "2p", ""
    else:
        form = "composite"
        parts = arith.local_factor(k, arith.GENEROUS_BUDGET).primes
        inherited = ",".join(str(2 * p) for p in parts if 2 * p in undecided_ms)
    known = len(c.record.factors) if c.record is not None else 0
    return {
        "m": c.m,
        "k": k,
        "form": form,
        "known_factors": known,
        "blocking_digits": max(c.blocking, default=0),
        "inherited_from": inherited,
    }


def export_frontier(classifications, path):
    """Write the undecided m as a tab-separated file with a header row."""
    undecided = sorted((c for c in classifications if c.is_undecided), key=lambda c: c.m)
    undecided_ms = {c.m for c in undecided}
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=FRONTIER_COLUMNS, delimiter="\t")
        writer.writeheader()
        for c in undecided:
            writer.writerow(_frontier_row(c, undecided_ms))
    return len(undecided)


def sweep_two_adic(p, bound):
    """
    Primes r = 1 (mod 16p), r <= bound, dividing 2^(2p) + 1.

    Each hit has v_2(r - 1) >= 4, so it is a non-3-Higgs witness for
    m = 2p. Returns (r, half) pairs, half being "L" or "M".
    """
    return _sweep(p, 16 * p, bound)


def sweep_descendants(p, q, bound):
    """Primes r = 1 (mod 4pq), r <= bound, dividing 2^(2p) + 1.

    With q not 3-Higgs, q | r - 1 makes r a witness for m = 2p.
    """
    return _sweep(p, 4 * p * q, bound)


def _sweep(p, step, bound):
    split = aurifeuillean_split(p)
    hits = []
    for r in range(step + 1, bound + 1, step):
        if pow(2, 2 * p, r) != r - 1 or not arith.is_probable_prime(r):
            continue
        hits.append((r, "L" if split.L % r == 0 else "M"))
    return hits
