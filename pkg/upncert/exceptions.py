import gmpy2


class UpnCertError(Exception):
    """Base class for all errors raised by upncert."""


class RateLimitException(UpnCertError):
    pass


class FactoringIncomplete(UpnCertError):
    """A factorization needed to be complete but the budget ran out."""

    def __init__(self, n, record=None):
        self.n = n
        self.record = record
        super().__init__(
            "could not completely factor a {}-digit integer".format(
                len(gmpy2.digits(n))
            )
        )


class NotPrime(UpnCertError, ValueError):
    pass


class IncompleteDescent(UpnCertError):
    """A Pratt descent hit a p-1 that could not be completely factored."""

    def __init__(self, prime, path=()):
        self.prime = prime
        self.path = tuple(path)
        super().__init__(
            "incomplete factorization of p-1 for p={} (path {})".format(
                prime, " > ".join(str(p) for p in self.path) or "-"
            )
        )


class ParseError(UpnCertError):
    pass


class ValidationError(UpnCertError):
    """One or more data entries failed validation.

    `entries` maps the offending key (for the factor cache, the exponent
    `m`) to the reason it was rejected.
    """

    def __init__(self, entries):
        self.entries = dict(entries)
        detail = "; ".join(
            "m={}: {}".format(m, reason) for m, reason in self.entries.items()
        )
        super().__init__("invalid entries: " + detail)


class RemoteUnavailable(UpnCertError):
    pass


class MalformedResponse(UpnCertError):
    pass


class InfeasibleConstraints(UpnCertError):
    pass


class ChecksFailed(UpnCertError):
    """A certificate or closure row failed verification at `step`."""

    def __init__(self, step, message):
        self.step = step
        super().__init__("{}: {}".format(step, message))


class ConfigError(UpnCertError, ValueError):
    pass
