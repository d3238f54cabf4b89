"""Run configuration: defaults, then an optional INI file, then flags."""
import configparser
import logging
from dataclasses import asdict, dataclass, fields
from typing import Optional

from . import arith, utils
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

SECTION = "upncert"

COMMANDS = (
    "verify-heven",
    "impostor-certificate",
    "higgs-check",
    "aurifeuillean",
    "frontier",
    "enumerate-kernels",
    "pi3",
)


@dataclass
class RunConfig:
    command: Optional[str] = None

    # verify-heven / frontier
    k_min: int = 1
    k_max: int = 600
    deep_secs: float = 1.0
    deep_closures: Optional[str] = None
    frontier: Optional[str] = None

    # impostor-certificate
    max_a: int = 10000
    factor_limit: int = 2000
    factor_timeout: float = 3.0
    max_rounds: int = 200
    max_bases: int = 8000
    max_exp: int = 5000
    kernels: Optional[str] = None

    # enumerate-kernels
    max_prime: int = 2000
    max_kernel_exp: int = 6
    max_prime_power: int = 10 ** 9
    max_scc_size: int = 6
    max_cycle_len: int = 6

    # pi3
    x: int = 10 ** 6

    # sources
    cache: Optional[str] = None
    no_cache: bool = False
    no_local: bool = False
    use_factordb: bool = False
    factordb_cache: Optional[str] = None
    sweep_bound: int = 0

    # run
    workers: int = 1
    report: Optional[str] = None
    log_level: str = "WARNING"

    def validate(self):
        """Check flag ranges; raise ConfigError before any work starts."""
        problems = []
        if self.command is not None and self.command not in COMMANDS:
            problems.append("unknown command {!r}".format(self.command))
        if self.k_min < 1:
            problems.append("--k-min must be >= 1")
        if self.k_min > self.k_max:
            problems.append("--k-min must be <= --k-max")
        if self.deep_secs <= 0:
            problems.append("--deep-secs must be > 0")
        if self.max_a < 0:
            problems.append("--max-a must be >= 0")
        if self.factor_limit < 0:
            problems.append("--factor-limit must be >= 0")
        if self.factor_timeout < 0:
            problems.append("--factor-timeout must be >= 0")
        for name in ("max_rounds", "max_bases", "max_exp", "workers", "max_kernel_exp"):
            if getattr(self, name) < 1:
                problems.append("--{} must be >= 1".format(name.replace("_", "-")))
        if self.max_prime < 3:
            problems.append("--max-prime must be >= 3")
        if self.x < 2:
            problems.append("--x must be >= 2")
        if self.sweep_bound < 0:
            problems.append("--sweep-bound must be >= 0")
        if logging.getLevelName(self.log_level.upper()) not in (10, 20, 30, 40, 50):
            problems.append("unknown --log-level {!r}".format(self.log_level))
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @property
    def factor_budget(self):
        return arith.FactorBudget(
            trial_limit=self.factor_limit, wall_timeout=self.factor_timeout
        )

    @property
    def descent_budget(self):
        return arith.FactorBudget(trial_limit=self.factor_limit, wall_timeout=self.deep_secs)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        return utils.sha256_json(self.to_dict())


def _coerce(field_type, raw, name):
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if field_type in (bool, "bool"):
            if isinstance(raw, bool):
                return raw
            value = str(raw).lower()
            if value in ("1", "true", "yes", "on"):
                return True
            if value in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if field_type in (int, "int"):
            return int(float(raw)) if "e" in str(raw).lower() else int(raw)
        if field_type in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError("bad value {!r} for {}".format(raw, name))
    return raw


def read_ini(path):
    """Settings from the [upncert] section of an INI file, keyed by field name."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError("cannot read config file {}: {}".format(path, e))
    except configparser.Error as e:
        raise ConfigError("cannot parse config file {}: {}".format(path, e))
    if not parser.has_section(SECTION):
        return {}
    return {key.replace("-", "_"): value for key, value in parser.items(SECTION)}


def build_config(flags, ini_path=None):
    """
    Merge defaults, the INI file and command-line flags, in that order.

    Parameters
    ----------
    flags : dict
        Parsed flags; None values mean "not given" and do not override.

    ini_path : str, optional

    Returns
    -------
    RunConfig
        Validated.
    """
    known = {f.name: f for f in fields(RunConfig)}
    settings = {}
    if ini_path:
        for key, raw in read_ini(ini_path).items():
            if key not in known:
                raise ConfigError("unknown config key {!r}".format(key))
            settings[key] = _coerce(known[key].type, raw, key)
    for key, value in flags.items():
        if key in known and value is not None:
            settings[key] = value
    return RunConfig(**settings).validate()
