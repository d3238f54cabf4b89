"""Elimination filters Z, N and O over a kernel's seed class.

A candidate is a kernel together with a seed exponent a, i.e. the factor
2^a of a would-be unitary perfect number. Each filter either returns a
certificate that rules the candidate out or None.
"""
import logging
import multiprocessing.dummy as mp
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from . import arith, utils
from .higgs import HiggsChecker, replay_witness
from .kernels import derive_seed_constraints

logger = logging.getLogger(__name__)


class Filter(Enum):
    Z = "Z"
    N = "N"
    O = "O"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class ZWitness:
    """2a is not Higgs-cubefree at q."""

    q: int
    exponent: int
    reason: str

    def replay(self, a):
        n = 2 * a
        if n % self.q or arith.v_adic(self.q, n) != self.exponent:
            return False
        if self.reason == "exponent":
            return self.exponent > 3
        return HiggsChecker().is_higgs(self.q).is_non_higgs

    def to_dict(self):
        return {"q": str(self.q), "exponent": self.exponent, "reason": self.reason}


@dataclass(frozen=True)
class NWitness:
    """r | 2^m + 1 with m | a, a/m odd, and r not 3-Higgs."""

    m: int
    r: int
    path: tuple

    def replay(self, a):
        if a % self.m or (a // self.m) % 2 == 0:
            return False
        if pow(2, self.m, self.r) != self.r - 1:
            return False
        return self.path[0] == self.r and replay_witness(self.path)

    def to_dict(self):
        return {"m": self.m, "r": str(self.r), "path": [str(p) for p in self.path]}


@dataclass(frozen=True)
class OWitness:
    """The cascade's 2-adic total passed the budget a + 1."""

    round: int
    v2_total: int
    budget: int
    bases: int
    targets: tuple
    trace: tuple = ()

    def replay(self, a):
        """Recompute v2_total from the final targets alone."""
        total = sum(arith.v_adic(2, p ** e + 1) for p, e in self.targets)
        return self.budget == a + 1 and total == self.v2_total > a + 1

    def to_dict(self):
        return {
            "round": self.round,
            "v2_total": self.v2_total,
            "budget": self.budget,
            "bases": self.bases,
            "targets": {str(p): e for p, e in self.targets},
            "trace": [list(t) for t in self.trace],
        }


@dataclass(frozen=True)
class EliminationCertificate:
    kernel_id: str
    a: int
    filter: Filter
    witness: object = None

    @property
    def resolved(self):
        return self.filter is not Filter.UNRESOLVED

    def replay(self):
        return self.witness is not None and self.witness.replay(self.a)

    def to_dict(self):
        out = {"kernel": self.kernel_id, "a": self.a, "filter": self.filter.value}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        return out


@dataclass
class CascadeState:
    """Running state of filter O.

    `targets` only ever grow; `v2_total` is the sum of v_2(p^e + 1) over
    them, which is exact without any factoring.
    """

    targets: dict = field(default_factory=dict)
    v2_total: int = 0
    round: int = 0
    trace: list = field(default_factory=list)

    @property
    def bases_active(self):
        return len(self.targets)

    def recompute(self):
        self.v2_total = sum(arith.v_adic(2, p ** e + 1) for p, e in self.targets.items())
        self.trace.append((self.round, self.v2_total, self.bases_active))


@dataclass(frozen=True)
class CertificateConfig:
    max_rounds: int = 200
    max_bases: int = 8000
    max_exp: int = 5000
    factor_seeds: bool = False

    def __post_init__(self):
        for name in ("max_rounds", "max_bases", "max_exp"):
            if getattr(self, name) < 1:
                raise ValueError("`{}` must be >= 1".format(name))


def filter_z(a, checker=None):
    """Reject `a` when 2a is not Higgs-cubefree.

    A primitive prime r of 2^a + 1 has 2a | r - 1, so a bad prime power in
    2a is inherited by r. 2^3 + 1 = 9 has no primitive prime, so a = 3 is
    never rejected here.
    """
    if a < 1:
        raise ValueError("`a` must be >= 1")
    if a == 3:
        return None
    checker = checker or HiggsChecker()
    result = checker.higgs_cubefree(2 * a)
    if result.holds is not False:
        return None
    reason = "exponent" if result.exponent > 3 else "non-higgs"
    return ZWitness(result.prime, result.exponent, reason)


def filter_n(a, oracle, checker=None):
    """Reject `a` via a non-3-Higgs prime of some 2^m + 1, m | a, a/m odd.

    Divisors are scanned upward and each record's primes upward; Undecided
    primes are skipped.
    """
    if a < 1:
        raise ValueError("`a` must be >= 1")
    checker = checker or HiggsChecker(oracle.factor)
    for m in utils.odd_part_divisors(a):
        record = oracle.factor_2m_plus_1(m)
        for r in record.primes:
            verdict = checker.is_higgs(r)
            if verdict.is_non_higgs:
                return NWitness(m, r, verdict.witness)
    return None


def seed_valuations(a, oracle, factor_seeds=False, extra=()):
    """v_q(2^a + 1) for every prime q known from some 2^m + 1, m | a, a/m odd."""
    n = (1 << a) + 1
    primes = set(extra)
    for m in utils.odd_part_divisors(a):
        record = oracle.factor_2m_plus_1(m) if factor_seeds else oracle.known(m)
        if record is not None:
            primes.update(record.factors)
    return {q: arith.v_adic(q, n) for q in sorted(primes) if q != 2}


def run_cascade(a, kernel, oracle, config=None, extra_seeds=()):
    """
    Monotone closure of the target set, one synchronous round at a time.

    Each round factors p^e + 1 for every current target (ascending), adds
    the seed's own valuations, and raises each odd prime's target to the
    incoming valuation when that is larger (capped at `max_exp`). Pieces
    left unfactored contribute nothing odd. Stops at overshoot
    (v2_total > a + 1), at a fixpoint, or when a budget runs out.

    Returns
    -------
    CascadeState
    """
    config = config or CertificateConfig()
    seeds = seed_valuations(a, oracle, config.factor_seeds, extra_seeds)
    seeds = {q: v for q, v in seeds.items() if v}
    state = CascadeState()
    for q, v in seeds.items():
        state.targets[q] = min(v, config.max_exp)
    for p, e in kernel.components:
        state.targets[p] = max(state.targets.get(p, 0), e)

    while state.round < config.max_rounds:
        state.round += 1
        incoming = Counter(seeds)
        for p, e in sorted(state.targets.items()):
            record = oracle.factor(p ** e + 1)
            for q, v in record.factors.items():
                if q != 2:
                    incoming[q] += v
        changed = False
        for q, v in sorted(incoming.items()):
            v = min(v, config.max_exp)
            if v > state.targets.get(q, 0):
                state.targets[q] = v
                changed = True
        state.recompute()
        if state.v2_total > a + 1:
            break
        if not changed or state.bases_active > config.max_bases:
            break
    return state


def filter_o(a, kernel, oracle, config=None, extra_seeds=()):
    """Reject `a` when the cascade's 2-adic total exceeds a + 1."""
    if a < 1:
        raise ValueError("`a` must be >= 1")
    state = run_cascade(a, kernel, oracle, config, extra_seeds)
    if state.v2_total <= a + 1:
        logger.debug("no overshoot for %s at a=%d: v2=%d", kernel, a, state.v2_total)
        return None
    return OWitness(
        state.round,
        state.v2_total,
        a + 1,
        state.bases_active,
        tuple(sorted(state.targets.items())),
        tuple(state.trace),
    )


def certify(kernel, a, oracle, checker=None, config=None):
    """Apply Z, then N, then O to one candidate."""
    checker = checker or HiggsChecker(oracle.factor)
    witness = filter_z(a, checker)
    if witness is not None:
        return EliminationCertificate(kernel.id, a, Filter.Z, witness)
    witness = filter_n(a, oracle, checker)
    if witness is not None:
        return EliminationCertificate(kernel.id, a, Filter.N, witness)
    witness = filter_o(a, kernel, oracle, config)
    if witness is not None:
        return EliminationCertificate(kernel.id, a, Filter.O, witness)
    return EliminationCertificate(kernel.id, a, Filter.UNRESOLVED)


@dataclass
class CertificateSummary:
    counts: Counter = field(default_factory=Counter)

    @property
    def candidates(self):
        return sum(self.counts.values())

    @property
    def unresolved(self):
        return self.counts[Filter.UNRESOLVED]

    def split(self):
        return tuple(self.counts[f] for f in Filter)

    def to_dict(self):
        out = {f.value: self.counts[f] for f in Filter}
        out["candidates"] = self.candidates
        return out


def candidate_count(residue, modulus, a_max):
    """Number of a in [1, a_max] with a = residue (mod modulus)."""
    first = residue if residue >= 1 else modulus
    if a_max < first:
        return 0
    return (a_max - first) // modulus + 1


def run_certificate(kernel, a_min, a_max, oracle, config=None, checker=None, workers=1, seed=None):
    """
    Certificates for every a in the kernel's seed class within [a_min, a_max].

    Parameters
    ----------
    kernel : Kernel

    a_min, a_max : int

    oracle : FactorOracle

    config : CertificateConfig, optional

    checker : HiggsChecker, optional

    workers : int, optional, default 1
        Size of the thread pool over candidates.

    seed : SeedCongruence, optional
        Defaults to the class derived from the kernel's debt.

    Returns
    -------
    (list of EliminationCertificate, CertificateSummary)
    """
    seed = seed or derive_seed_constraints(kernel)
    checker = checker or HiggsChecker(oracle.factor)
    candidates = list(seed.candidates(a_min, a_max))

    def one(a):
        return certify(kernel, a, oracle, checker, config)

    if workers > 1:
        with mp.Pool(workers) as pool:
            certificates = pool.map(one, candidates)
    else:
        certificates = [one(a) for a in candidates]

    summary = CertificateSummary(Counter(c.filter for c in certificates))
    logger.info(
        "kernel %s, a in [%d, %d]: %s", kernel, a_min, a_max, summary.to_dict()
    )
    return certificates, summary


def run_all(entries, a_max, oracle, config=None, workers=1, a_min=1):
    """Certificates over several kernel entries, with one combined summary."""
    checker = HiggsChecker(oracle.factor)
    certificates = []
    total = CertificateSummary()
    for entry in entries:
        kernel = entry.kernel if hasattr(entry, "kernel") else entry
        derived = derive_seed_constraints(kernel)
        if getattr(entry, "modulus", None):
            if not derived.verify(entry.residue, entry.modulus):
                logger.warning(
                    "recorded class %d mod %d of %s disagrees with its debt",
                    entry.residue,
                    entry.modulus,
                    kernel,
                )
        certs, summary = run_certificate(
            kernel, a_min, a_max, oracle, config, checker, workers, derived
        )
        certificates.extend(certs)
        total.counts.update(summary.counts)
    return certificates, total
