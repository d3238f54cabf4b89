__version__ = "0.1.0"

from .arith import FactorBudget, FactorizationRecord, local_factor, unitary_sigma
from .higgs import HiggsChecker, enumerate_higgs_primes, is_higgs, higgs_cubefree, pratt_witness
from .oracle import FactorCache, FactorOracle, aurifeuillean_split, load_cache
from .factordb import FactorDBClient
from .ratelimit import RateLimiter
from .kernels import BoxBounds, Kernel, compute_debt, derive_seed_constraints
from .kernels import enumerate_source_kernels
from .filters import filter_z, filter_n, filter_o, run_certificate
from .heven import HevenClassifier, prefilter, verify_deep_closure
from . import exceptions
