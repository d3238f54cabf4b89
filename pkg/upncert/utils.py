import hashlib
import json
import time

import gmpy2


def get_time_remaining(start, timeout=None):
    """Seconds left of `timeout` measured from the monotonic time `start`.

    Returns None when there is no timeout.
    """
    if timeout is None:
        return None
    else:
        time_elapsed = time.monotonic() - start

        return timeout - time_elapsed


def deadline_from(timeout):
    """Absolute monotonic deadline `timeout` seconds from now, or None."""
    if timeout is None or timeout <= 0:
        return None
    return time.monotonic() + timeout


def expired(deadline):
    return deadline is not None and time.monotonic() >= deadline


def digits(n):
    """Number of decimal digits of a positive integer."""
    return len(gmpy2.digits(n))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_json(obj):
    """Digest of the canonical (sorted, compact) JSON encoding of `obj`."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def odd_part_divisors(m):
    """All d dividing m with m/d odd, ascending (m itself included)."""
    twos = 1
    odd = m
    while odd % 2 == 0:
        odd //= 2
        twos *= 2
    return sorted(twos * d for d in divisors(odd))


def divisors(n):
    """All positive divisors of a small positive integer, ascending."""
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def to_decimal(n):
    """Decimal string of `n`, without the interpreter's digit limit."""
    return gmpy2.digits(n)


def from_decimal(s):
    """Parse a decimal string of any length to int."""
    s = str(s).strip()
    if not s or not s.isdigit():
        raise ValueError("`{}` is not a decimal integer".format(s[:40]))
    return int(gmpy2.mpz(s))
