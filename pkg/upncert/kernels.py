"""Odd dependency graph, debt vectors and seed congruences of kernels.

A kernel is a set of odd prime powers p^e closed under the dependency
p -> r (r | p^e + 1) into a cycle. Its needs vector counts what the kernel
supplies to each prime; its debt is what the seed factor 2^a + 1 must
still supply, which pins `a` to a residue class.
"""
import json
import logging
import os
import multiprocessing.dummy as mp
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

from . import arith
from .exceptions import InfeasibleConstraints, ParseError
from .higgs import enumerate_higgs_primes, default_checker

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
BUNDLED_KERNELS = os.path.join(DATA_DIR, "impostor_kernels.json")


@dataclass(frozen=True)
class BoxBounds:
    max_prime: int = 2000
    max_exp: int = 6
    max_prime_power: int = 10 ** 9
    max_scc_size: int = 6
    max_cycle_len: int = 6

    def __post_init__(self):
        if self.max_prime < 3:
            raise ValueError("`max_prime` must be >= 3")
        for name in ("max_exp", "max_prime_power", "max_scc_size", "max_cycle_len"):
            if getattr(self, name) < 1:
                raise ValueError("`{}` must be >= 1".format(name))

    def admits(self, kernel):
        return len(kernel) <= self.max_scc_size and all(
            p <= self.max_prime and e <= self.max_exp and p ** e <= self.max_prime_power
            for p, e in kernel.components
        )


@dataclass(frozen=True)
class Kernel:
    """Odd prime powers, stored as sorted (p, e) pairs."""

    components: tuple

    @classmethod
    def of(cls, components):
        items = dict(components).items()
        for p, e in items:
            if p < 3 or p % 2 == 0 or not arith.is_probable_prime(p):
                raise ValueError("kernel component {} is not an odd prime".format(p))
            if not 1 <= e <= arith.MAX_EXPONENT:
                raise ValueError("kernel exponent {} out of range".format(e))
        return cls(tuple(sorted((int(p), int(e)) for p, e in items)))

    @classmethod
    def parse(cls, text):
        """Read an id such as "3^2·5^3" (also accepts "*" as separator)."""
        components = {}
        text = text.strip()
        if not text or text == "1":
            return cls(())
        for part in text.replace("*", "·").split("·"):
            base, _, exp = part.strip().partition("^")
            try:
                components[int(base)] = int(exp) if exp else 1
            except ValueError:
                raise ParseError("cannot read kernel {!r}".format(text))
        return cls.of(components)

    @property
    def id(self):
        if not self.components:
            return "1"
        return "·".join(
            str(p) if e == 1 else "{}^{}".format(p, e) for p, e in self.components
        )

    @property
    def as_dict(self):
        return dict(self.components)

    @property
    def primes(self):
        return [p for p, _ in self.components]

    @property
    def max_exponent(self):
        return max((e for _, e in self.components), default=0)

    def __len__(self):
        return len(self.components)

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    exponent: int


@lru_cache(maxsize=None)
def power_plus_one(p, e):
    """Complete factorization of p^e + 1 as a dict."""
    n = p ** e + 1
    record = arith.local_factor(n, arith.GENEROUS_BUDGET)
    if not record.is_complete:
        raise arith.FactoringIncomplete(n, record)
    return record.factors


def dependency_edges(p, bounds=None):
    """Edges p -> r labelled with e, for every odd prime r | p^e + 1."""
    bounds = bounds or BoxBounds()
    edges = set()
    e = 1
    while e <= bounds.max_exp and p ** e <= bounds.max_prime_power:
        for r in power_plus_one(p, e):
            if r != 2:
                edges.add(Edge(p, r, e))
        e += 1
    return edges


@dataclass
class DebtState:
    """Needs and debt of a kernel.

    `needs[q]` is sum v_q(p^e + 1) over components, 2 included. `debt[q]`
    is the target exponent (e for kernel primes, 0 otherwise) minus the
    needs, over odd primes; `absorbed` lists the negative-debt primes.
    """

    kernel: Kernel
    needs: dict = field(default_factory=dict)
    debt: dict = field(default_factory=dict)

    @property
    def absorbed(self):
        return sorted(q for q, d in self.debt.items() if d < 0)

    @property
    def positive(self):
        return {q: d for q, d in sorted(self.debt.items()) if d > 0}

    @property
    def consistent(self):
        """No kernel prime is oversupplied by the kernel itself."""
        return all(self.debt[p] >= 0 for p in self.kernel.primes)

    def to_dict(self):
        return {
            "needs": {str(q): v for q, v in sorted(self.needs.items())},
            "debt": {str(q): d for q, d in sorted(self.debt.items())},
            "absorbed": [str(q) for q in self.absorbed],
        }


def compute_debt(kernel):
    if not isinstance(kernel, Kernel):
        kernel = Kernel.of(kernel)
    needs = Counter()
    for p, e in kernel.components:
        needs.update(power_plus_one(p, e))
    targets = kernel.as_dict
    odd = set(needs) - {2} | set(targets)
    debt = {q: targets.get(q, 0) - needs.get(q, 0) for q in odd}
    return DebtState(kernel, dict(sorted(needs.items())), dict(sorted(debt.items())))


@dataclass(frozen=True)
class OrderConstraint:
    """`a` must be an odd multiple of order/2, and of q^lift."""

    q: int
    order: int
    debt: int
    lift: int

    def admits(self, a):
        half = self.order // 2
        return a % half == 0 and (a // half) % 2 == 1 and a % self.q ** self.lift == 0

    def to_dict(self):
        return {"q": self.q, "order": self.order, "debt": self.debt, "lift": self.lift}


def crt(r1, m1, r2, m2):
    """Combine a = r1 (mod m1) and a = r2 (mod m2); None if incompatible."""
    g = gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    lcm = m1 // g * m2
    t = (r2 - r1) // g * pow(m1 // g, -1, m2 // g) % (m2 // g)
    return (r1 + m1 * t) % lcm, lcm


@dataclass(frozen=True)
class SeedCongruence:
    """Residue class of seed exponents `a` that can pay a kernel's debt.

    `order_residue`/`order_modulus` is the class forced by the order
    conditions alone; `residue`/`modulus` also imposes q^lift | a, which
    makes v_q(2^a + 1) reach the debt.
    """

    residue: int
    modulus: int
    order_residue: int
    order_modulus: int
    constraints: tuple = ()

    def admits(self, a):
        return a % self.modulus == self.residue

    def verify(self, residue, modulus, lifted=True):
        """Whether every a = residue (mod modulus) meets the constraints."""
        r, m = (self.residue, self.modulus) if lifted else (self.order_residue, self.order_modulus)
        return modulus % m == 0 and residue % m == r

    def candidates(self, a_min, a_max):
        start = max(a_min, 1)
        first = start + (self.residue - start) % self.modulus
        return range(first, a_max + 1, self.modulus)

    def to_dict(self):
        return {
            "residue": self.residue,
            "modulus": self.modulus,
            "order_residue": self.order_residue,
            "order_modulus": self.order_modulus,
            "constraints": [c.to_dict() for c in self.constraints],
        }


def derive_seed_constraints(kernel, debt=None):
    """
    Seed class for `kernel`.

    For each debt-positive q with ord_q(2) = 2s, 2^a = -1 (mod q) forces
    a = s (mod 2s). Lifting the exponent, v_q(2^a + 1) = v_q(2^s + 1)
    + v_q(a/s), so paying debt d needs q^j | a with j = d - v_q(2^s + 1).

    Raises
    ------
    InfeasibleConstraints
        If some order is odd or the classes are incompatible.
    """
    debt = debt or compute_debt(kernel)
    constraints = []
    order_class = (0, 1)
    lifted_class = (0, 1)
    for q, d in debt.positive.items():
        order = arith.mult_order_of_2(q)
        if order % 2:
            raise InfeasibleConstraints(
                "ord_{}(2) = {} is odd, so q never divides 2^a+1".format(q, order)
            )
        s = order // 2
        lift = max(0, d - arith.v_adic(q, (1 << s) + 1))
        constraints.append(OrderConstraint(q, order, d, lift))
        order_class = crt(*order_class, s, order)
        if order_class is None:
            raise InfeasibleConstraints("order conditions of {} conflict".format(kernel))
        lifted_class = crt(*lifted_class, s, order)
        if lifted_class is not None and lift:
            lifted_class = crt(*lifted_class, 0, q ** lift)
        if lifted_class is None:
            raise InfeasibleConstraints("debt of {} cannot be paid".format(kernel))
    return SeedCongruence(
        lifted_class[0], lifted_class[1], order_class[0], order_class[1], tuple(constraints)
    )


def tarjan(vertices, successors):
    """Strongly connected components, each sorted, ordered by smallest member."""
    index = {}
    lowest = {}
    on_stack = {}
    stack = []
    sccs = []
    counter = iter(range(len(vertices) + 1))

    def dfs(v):
        index[v] = lowest[v] = v_index = next(counter)
        on_stack[v] = len(stack)
        stack.append(v)
        for w in successors(v):
            if w not in index:
                dfs(w)
                lowest[v] = min(lowest[v], lowest[w])
            elif w in on_stack:
                lowest[v] = min(lowest[v], index[w])
        if lowest[v] == v_index:
            i = on_stack[v]
            for w in stack[i:]:
                del on_stack[w]
            sccs.append(sorted(stack[i:]))
            del stack[i:]

    for v in vertices:
        if v not in index:
            dfs(v)
    return sorted(sccs)


class DependencyGraph:
    """Odd dependency graph on all odd primes <= max_prime."""

    def __init__(self, bounds=None):
        self.bounds = bounds or BoxBounds()
        self.vertices = [p for p in arith.primes_up_to(self.bounds.max_prime) if p > 2]
        vertex_set = set(self.vertices)
        self.labels = {}
        for p in self.vertices:
            out = {}
            for edge in dependency_edges(p, self.bounds):
                if edge.target in vertex_set:
                    out.setdefault(edge.target, []).append(edge.exponent)
            self.labels[p] = {r: sorted(es) for r, es in sorted(out.items())}
        self.higgs = set(enumerate_higgs_primes(self.bounds.max_prime))

    def successors(self, p):
        return list(self.labels[p])

    def sccs(self):
        return tarjan(self.vertices, self.successors)

    def predecessors(self):
        preds = {p: [] for p in self.vertices}
        for p, out in self.labels.items():
            for r in out:
                preds[r].append(p)
        return preds


def _distances_to(target, allowed, preds):
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if u in allowed and u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _cycles_from(p0, graph, allowed, preds):
    """Simple cycles through p0 whose other vertices exceed p0."""
    bounds = graph.bounds
    dist = _distances_to(p0, allowed, preds)
    found = []
    path = [p0]

    def extend(v):
        for w in graph.labels[v]:
            if w == p0:
                found.append(list(path))
            elif w > p0 and w in dist and w not in path:
                if len(path) + dist[w] <= min(bounds.max_cycle_len, bounds.max_scc_size):
                    path.append(w)
                    extend(w)
                    path.pop()

    extend(p0)
    return found


def _assignments(cycle, graph):
    """Kernels from a cycle: each vertex takes an exponent labelling its out-edge."""
    choices = [()]
    for i, p in enumerate(cycle):
        nxt = cycle[(i + 1) % len(cycle)]
        choices = [c + ((p, e),) for c in choices for e in graph.labels[p][nxt]]
    return [Kernel(tuple(sorted(c))) for c in choices]


def source_compatible(kernel, checker=None):
    """Filters every enumerated kernel must pass.

    At least one exponent >= 2, all kernel primes 3-Higgs, no kernel prime
    oversupplied, and a feasible seed class.
    """
    checker = checker or default_checker()
    if kernel.max_exponent < 2:
        return False
    if not all(checker.is_higgs(p).is_higgs for p in kernel.primes):
        return False
    debt = compute_debt(kernel)
    if not debt.consistent:
        return False
    try:
        derive_seed_constraints(kernel, debt)
    except InfeasibleConstraints:
        return False
    return True


def _singletons(graph, checker):
    bounds = graph.bounds
    out = []
    for p in sorted(graph.higgs - {2}):
        e = 2
        while e <= bounds.max_exp and p ** e <= bounds.max_prime_power:
            odd = [r for r in power_plus_one(p, e) if r != 2]
            if all(checker.is_higgs(r).is_higgs for r in odd):
                out.append(Kernel(((p, e),)))
            e += 1
    return out


def enumerate_source_kernels(bounds=None, checker=None, workers=1):
    """
    All source-compatible kernels inside `bounds`.

    Kernels are the exponent assignments of simple cycles of Higgs primes
    lying in one strongly connected component, plus single prime powers
    p^e (e >= 2) whose p^e + 1 has only 3-Higgs odd primes.

    Returns
    -------
    list of Kernel
        Sorted by id.
    """
    checker = checker or default_checker()
    graph = DependencyGraph(bounds)
    preds = graph.predecessors()
    component = {}
    for scc in graph.sccs():
        for v in scc:
            component[v] = frozenset(scc)

    def from_start(p0):
        allowed = {v for v in component[p0] if v >= p0 and v in graph.higgs}
        kernels = []
        for cycle in _cycles_from(p0, graph, allowed, preds):
            kernels.extend(_assignments(cycle, graph))
        return kernels

    starts = [p for p in graph.vertices if p in graph.higgs and len(component[p]) > 1]
    if workers > 1:
        with mp.Pool(workers) as pool:
            batches = pool.map(from_start, starts)
    else:
        batches = [from_start(p0) for p0 in starts]

    candidates = {k.id: k for batch in batches for k in batch}
    for k in _singletons(graph, checker):
        candidates.setdefault(k.id, k)
    kept = [
        k
        for _, k in sorted(candidates.items())
        if graph.bounds.admits(k) and source_compatible(k, checker)
    ]
    logger.info(
        "enumerated %d candidate kernels, %d source-compatible", len(candidates), len(kept)
    )
    return kept


@dataclass(frozen=True)
class KernelEntry:
    kernel: Kernel
    kind: str
    residue: int = None
    modulus: int = None


def load_impostor_kernels(path=None, kinds=("impostor",)):
    """Kernels from the bundled (or given) kernel file, filtered by kind."""
    path = path or BUNDLED_KERNELS
    try:
        with open(path) as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError("{}: {}".format(path, e)) from e
    entries = []
    for row in obj.get("kernels", []):
        if kinds and row.get("kind") not in kinds:
            continue
        kernel = Kernel.of({int(p): e for p, e in row["components"].items()})
        seed = row.get("seed") or {}
        entries.append(KernelEntry(kernel, row.get("kind"), seed.get("residue"), seed.get("modulus")))
    return entries


def kernel_to_dict(kernel):
    debt = compute_debt(kernel)
    out = {"id": kernel.id, "components": {str(p): e for p, e in kernel.components}}
    out.update(debt.to_dict())
    try:
        out["seed"] = derive_seed_constraints(kernel, debt).to_dict()
    except InfeasibleConstraints as e:
        out["seed"] = None
        out["infeasible"] = str(e)
    return out


def export_kernels(kernels, fp):
    json.dump({"kernels": [kernel_to_dict(k) for k in kernels]}, fp, indent=1, ensure_ascii=False)
    fp.write("\n")
