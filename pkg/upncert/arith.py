"""Integer arithmetic substrate: valuations, orders, primality, factoring.

Everything here is a pure function of its arguments. Randomized steps
(Pollard rho) draw from a private `random.Random` seeded with `RHO_SEED`, so
a given budget always reproduces the same factorization.
"""
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import gcd, isqrt, prod

import gmpy2
from gmpy2 import mpz

from .exceptions import FactoringIncomplete
from . import utils

logger = logging.getLogger(__name__)

MAX_EXPONENT = 64
RHO_SEED = 20127043

# deterministic Miller-Rabin below 3.3e24, which covers 2**64
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_U64 = 1 << 64


class FactorStatus(Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FactorBudget:
    """Limits for one `local_factor` call.

    Parameters
    ----------
    trial_limit : int
        Trial-divide by every prime up to this bound.
    rho_iterations : int
        Total Pollard-Brent iterations across restarts.
    pm1_bound : int
        Stage-one bound B1 for Pollard p-1.
    wall_timeout : float
        Seconds of wall time; <= 0 means no timeout.
    """

    trial_limit: int = 2000
    rho_iterations: int = 200000
    pm1_bound: int = 50000
    wall_timeout: float = 3.0

    def __post_init__(self):
        for name in ("trial_limit", "rho_iterations", "pm1_bound", "wall_timeout"):
            if getattr(self, name) < 0:
                raise ValueError("`{}` must be non-negative".format(name))


GENEROUS_BUDGET = FactorBudget(
    trial_limit=10000, rho_iterations=10 ** 7, pm1_bound=10 ** 6, wall_timeout=0
)


@dataclass(frozen=True)
class FactorizationRecord:
    """A complete or partial factorization of `n`.

    `factors` maps each known prime to its exact exponent in `n`;
    `composites` holds the unfactored pieces, whose product is the
    cofactor. Pieces are kept apart so that, e.g., the two Aurifeuillean
    halves of 2^m+1 stay separately visible.
    """

    n: int
    factors: dict = field(default_factory=dict)
    composites: tuple = ()

    @classmethod
    def from_parts(cls, n, factors=None, pieces=()):
        counts = Counter()
        for p, e in (factors or {}).items():
            counts[int(p)] += int(e)
        rest = []
        for c in pieces:
            c = int(c)
            if c == 1:
                continue
            if is_probable_prime(c):
                counts[c] += 1
                continue
            root, k = perfect_power(c)
            if k > 1 and is_probable_prime(root):
                counts[root] += k
            else:
                rest.append(c)
        return cls(int(n), dict(sorted(counts.items())), tuple(sorted(rest)))

    @classmethod
    def unfactored(cls, n):
        return cls.from_parts(n, None, [n])

    @property
    def cofactor(self):
        return prod(self.composites)

    @property
    def status(self):
        if not self.composites:
            return FactorStatus.COMPLETE
        if not self.factors:
            return FactorStatus.UNKNOWN
        return FactorStatus.PARTIAL

    @property
    def is_complete(self):
        return not self.composites

    @property
    def primes(self):
        return sorted(self.factors)

    def refine_with(self, divisors):
        """Split the composite pieces by gcds with `divisors`.

        Any integer known to share factors with `n` may be passed: primes,
        algebraic factors, another record's cofactor. Pieces that become
        prime move into `factors`. The product identity is preserved.
        """
        divisors = [int(d) for d in divisors if d > 1]
        pieces = list(self.composites)
        if not divisors or not pieces:
            return self
        changed = True
        while changed:
            changed = False
            out = []
            for c in pieces:
                for d in divisors:
                    g = gcd(c, d)
                    if 1 < g < c:
                        out.extend((g, c // g))
                        changed = True
                        break
                else:
                    out.append(c)
            pieces = out
        return FactorizationRecord.from_parts(self.n, self.factors, pieces)

    def problems(self):
        """Reasons this record violates its invariants (empty if none)."""
        found = []
        product = self.cofactor
        for p, e in self.factors.items():
            if not 1 <= e <= MAX_EXPONENT:
                found.append("exponent {} of {} out of range".format(e, p))
            if not is_probable_prime(p):
                found.append("listed factor {} is not prime".format(p))
            product *= p ** e
        if product != self.n:
            found.append("factors do not multiply back to n")
        for c in self.composites:
            if is_probable_prime(c):
                found.append("cofactor piece {} is prime".format(c))
        return found

    def to_json(self):
        out = {str(p): e for p, e in self.factors.items()}
        if self.composites:
            out["cofactor"] = utils.to_decimal(self.cofactor)
        out["status"] = self.status.value
        return out


@lru_cache(maxsize=16)
def primes_up_to(x):
    """All primes <= x, ascending, by a bytearray sieve."""
    if x < 2:
        return ()
    sieve = bytearray([1]) * (x + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, isqrt(x) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytes(len(range(p * p, x + 1, p)))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def is_probable_prime(n):
    """Primality test: exact below 2**64, strong BPSW above."""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n < 37 * 37:
        return True
    if n < _U64:
        return all(gmpy2.is_strong_prp(n, b) for b in _MR_BASES)
    return bool(gmpy2.is_strong_bpsw_prp(n))


def v_adic(q, n):
    """Exponent of the prime `q` in `n` (n >= 1)."""
    if n < 1:
        raise ValueError("`n` must be >= 1")
    if q < 2:
        raise ValueError("`q` must be a prime")
    if n % q:
        return 0
    return int(gmpy2.remove(n, q)[1])


def perfect_power(n):
    """Return (root, k) with root**k == n and k maximal-ish, else (n, 1)."""
    if n < 4 or not gmpy2.is_power(n):
        return n, 1
    for k in primes_up_to(n.bit_length()):
        root, exact = gmpy2.iroot(n, k)
        if exact:
            inner, j = perfect_power(int(root))
            return inner, k * j
    return n, 1


@lru_cache(maxsize=4096)
def mult_order_of_2(q, budget=GENEROUS_BUDGET):
    """Least t >= 1 with 2**t == 1 (mod q) for an odd prime q."""
    if q < 3 or q % 2 == 0:
        raise ValueError("`q` must be an odd prime")
    record = local_factor(q - 1, budget)
    if not record.is_complete:
        raise FactoringIncomplete(q - 1, record)
    t = q - 1
    for p, e in record.factors.items():
        for _ in range(e):
            if pow(2, t // p, q) != 1:
                break
            t //= p
    return t


def unitary_sigma(n, budget=GENEROUS_BUDGET):
    """Sum of the unitary divisors of n, i.e. prod(p**e + 1)."""
    if n < 1:
        raise ValueError("`n` must be >= 1")
    record = local_factor(n, budget)
    if not record.is_complete:
        raise FactoringIncomplete(n, record)
    return prod(p ** e + 1 for p, e in record.factors.items())


def unitary_sigma_sieve(limit):
    """List s with s[n] = unitary_sigma(n) for 0 < n <= limit (s[0] = 0)."""
    sigma = [1] * (limit + 1)
    sigma[0] = 0
    for p in primes_up_to(limit):
        pk = p
        while pk <= limit:
            step = pk * p
            for n in range(pk, limit + 1, pk):
                if n % step:
                    sigma[n] *= pk + 1
            pk = step
    return sigma


def find_unitary_perfect(limit):
    """All n <= limit with unitary_sigma(n) == 2n."""
    sigma = unitary_sigma_sieve(limit)
    return [n for n in range(1, limit + 1) if sigma[n] == 2 * n]


def pollard_brent(n, max_iterations, rng, deadline=None):
    """A nontrivial factor of the composite `n`, or None within budget."""
    n = mpz(n)
    if n % 2 == 0:
        return 2
    iterations = 0
    while iterations < max_iterations and not utils.expired(deadline):
        y = mpz(rng.randrange(1, n))
        c = mpz(rng.randrange(1, n))
        m = 128
        g = r = q = mpz(1)
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                steps = min(m, r - k)
                for _ in range(steps):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gmpy2.gcd(q, n)
                k += m
            iterations += 2 * r
            r *= 2
            if g == 1 and (
                iterations >= max_iterations or utils.expired(deadline)
            ):
                return None
        if g == n:
            g = mpz(1)
            while g == 1:
                ys = (ys * ys + c) % n
                g = gmpy2.gcd(abs(x - ys), n)
        if 1 < g < n:
            return int(g)
    return None


def pollard_pm1(n, bound, hint=1, deadline=None):
    """Pollard p-1 stage one with base 3.

    `hint` is folded into the exponent up front; for divisors of 2^m+1
    every primitive prime r has 2m | r-1, so hint=2m leaves only the
    cofactor (r-1)/2m to be B1-smooth.
    """
    n = mpz(n)
    a = gmpy2.powmod(3, hint, n) if hint > 1 else mpz(3)
    g = gmpy2.gcd(a - 1, n)
    if 1 < g < n:
        return int(g)
    if g == n:
        return None

    batch = []
    saved = a
    for p in primes_up_to(bound):
        pk = p
        while pk * p <= bound:
            pk *= p
        a = gmpy2.powmod(a, pk, n)
        batch.append(pk)
        if len(batch) < 64:
            continue
        g = gmpy2.gcd(a - 1, n)
        if 1 < g < n:
            return int(g)
        if g == n:
            return _pm1_backtrack(n, saved, batch)
        if utils.expired(deadline):
            return None
        batch = []
        saved = a
    g = gmpy2.gcd(a - 1, n)
    if 1 < g < n:
        return int(g)
    if g == n:
        return _pm1_backtrack(n, saved, batch)
    return None


def _pm1_backtrack(n, a, batch):
    for pk in batch:
        a = gmpy2.powmod(a, pk, n)
        g = gmpy2.gcd(a - 1, n)
        if g == n:
            return None
        if g > 1:
            return int(g)
    return None


def local_factor(n, budget=None, hint=1, seed=RHO_SEED):
    """Factor `n` by trial division, Pollard-Brent rho, then Pollard p-1.

    Never raises on hard inputs: whatever is left unsplit when the budget
    runs out stays in the record's composite pieces.

    Parameters
    ----------
    n : int
        The integer to factor, >= 1.
    budget : FactorBudget, optional
        Defaults to `FactorBudget()`.
    hint : int, optional, default 1
        A number known to divide r-1 for the prime factors r being sought.
    seed : int, optional
        Seed of the private rho generator.

    Returns
    -------
    FactorizationRecord
    """
    budget = budget or FactorBudget()
    n = int(n)
    if n < 1:
        raise ValueError("`n` must be >= 1")
    deadline = utils.deadline_from(budget.wall_timeout)
    rng = random.Random(seed)

    factors = Counter()
    rest = mpz(n)
    for p in primes_up_to(budget.trial_limit):
        if p * p > rest:
            break
        if rest % p == 0:
            rest, e = gmpy2.remove(rest, p)
            factors[p] += int(e)

    pending = [int(rest)] if rest > 1 else []
    stuck = []
    while pending:
        c = pending.pop()
        if is_probable_prime(c):
            factors[c] += 1
            continue
        root, k = perfect_power(c)
        if k > 1:
            pending.extend([root] * k)
            continue
        d = None
        if budget.rho_iterations and not utils.expired(deadline):
            d = pollard_brent(c, budget.rho_iterations, rng, deadline)
        if d is None and budget.pm1_bound and not utils.expired(deadline):
            d = pollard_pm1(c, budget.pm1_bound, hint, deadline)
        if d is None:
            stuck.append(c)
            continue
        pending.extend((d, c // d))

    if stuck:
        logger.debug(
            "local_factor left %d composite piece(s) of %s digits",
            len(stuck),
            ",".join(str(utils.digits(c)) for c in stuck),
        )
    return FactorizationRecord.from_parts(n, factors, stuck)
