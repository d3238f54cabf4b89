import math


def almost(a, b, threshold=0.05):
    """
    Test whether `a` and `b` within `threshold` of each other.

    Useful for timing related asserts where the timing is not 100%
    certain but should be close to a given number.

    Parameters
    ----------
    a: float
    b: float
    threshold: float (default 0.05)

    Returns
    -------
    bool
    """
    return math.fabs(a - b) < threshold


def trial_factor(n):
    """Prime factorization of a small n by plain trial division."""
    factors = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def brute_unitary_sigma(n):
    """Sum of the divisors d of n with gcd(d, n/d) == 1."""
    return sum(d for d in range(1, n + 1) if n % d == 0 and math.gcd(d, n // d) == 1)


def brute_is_higgs(p, cap=3):
    """3-Higgs test by recursion over trial-division factorizations."""
    if p == 2:
        return True
    factors = trial_factor(p - 1)
    return all(e <= cap and brute_is_higgs(q, cap) for q, e in factors.items())
