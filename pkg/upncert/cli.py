"""Command-line interface.

Exit codes: 0 success, 1 unparsable input to higgs-check, 2 impostor
candidates left unresolved, 3 configuration error, 4 data or IO error.
"""
import argparse
import datetime
import json
import logging
import sys

from . import __version__, arith, utils
from .config import build_config
from .exceptions import ConfigError, NotPrime, IncompleteDescent, ParseError, ValidationError
from .factordb import FactorDBClient
from .filters import CertificateConfig, run_all
from .heven import HevenClassifier, export_frontier, load_closures, sweep_two_adic, v2_histogram
from .higgs import HiggsChecker, fit_counting_exponent, higgs_prime_counts
from .kernels import BoxBounds, enumerate_source_kernels, export_kernels, load_impostor_kernels
from .oracle import FactorCache, FactorOracle, aurifeuillean_split, default_cache_path, load_cache

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_UNRESOLVED = 2
EXIT_CONFIG = 3
EXIT_IO = 4

DEFAULT_REPORT = "upncert-{}.json"
DEFAULT_FRONTIER = "candidate_frontier.tsv"


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_CONFIG, keeping 2 for unresolved runs."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, "{}: error: {}\n".format(self.prog, message))


def _common():
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("sources and run options")
    group.add_argument("--config", help="INI file with an [upncert] section")
    group.add_argument("--cache", help="factor cache JSON (default: bundled)")
    group.add_argument("--no-cache", action="store_true", default=None, help="start from an empty cache")
    group.add_argument("--no-local", action="store_true", default=None, help="never factor locally")
    group.add_argument("--use-factordb", action="store_true", default=None, help="query the remote factor database")
    group.add_argument("--factordb-cache", help="directory for cached remote responses")
    group.add_argument("--factor-limit", type=int, help="trial division bound")
    group.add_argument("--factor-timeout", type=float, help="seconds per local factoring call")
    group.add_argument("--sweep-bound", type=int, help="primitive-divisor sweep bound for 2^m+1")
    group.add_argument("--workers", type=int, help="thread pool size")
    group.add_argument("--report", help="JSON report path (default: upncert-<command>.json)")
    group.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return common


def make_parser():
    common = _common()
    parser = ArgumentParser(prog="upncert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    sub.required = True

    p = sub.add_parser("verify-heven", parents=[common], help="classify m = 2k, k odd")
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--deep-secs", type=float, help="descent budget per p-1, seconds")
    p.add_argument("--deep-closures", help="closure rows carrying the p* decimals")
    p.add_argument("--frontier", help="undecided m as TSV (default: candidate_frontier.tsv)")

    p = sub.add_parser("impostor-certificate", parents=[common], help="run filters Z, N, O")
    p.add_argument("--max-a", type=int)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--max-bases", type=int)
    p.add_argument("--max-exp", type=int)
    p.add_argument("--kernels", help="kernel file (default: bundled impostors)")

    p = sub.add_parser("higgs-check", parents=[common], help="3-Higgs verdicts")
    p.add_argument("numbers", nargs="*", help="primes to test")
    p.add_argument("--file", help="file with one number per line")
    p.add_argument("--tree", action="store_true", help="print the Pratt tree")

    p = sub.add_parser("aurifeuillean", parents=[common], help="split 2^(2k)+1")
    p.add_argument("k", type=int)
    p.add_argument("--bound", type=int, default=0, help="sweep r = 1 (mod 16k) up to this bound")

    p = sub.add_parser("frontier", parents=[common], help="export undecided m")
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--deep-secs", type=float)
    p.add_argument("--deep-closures")
    p.add_argument("--frontier", help="output TSV (default: candidate_frontier.tsv)")

    p = sub.add_parser("enumerate-kernels", parents=[common], help="source-compatible kernels")
    p.add_argument("--max-prime", type=int)
    p.add_argument("--max-kernel-exp", type=int)
    p.add_argument("--max-prime-power", type=int)
    p.add_argument("--max-scc-size", type=int)
    p.add_argument("--max-cycle-len", type=int)

    p = sub.add_parser("pi3", parents=[common], help="count 3-Higgs primes up to x")
    p.add_argument("--x", type=int)
    return parser


def _oracle(config):
    if config.no_cache:
        cache, path = FactorCache(), None
    else:
        path = config.cache or default_cache_path()
        cache = load_cache(path)
    remote = None
    if config.use_factordb:
        remote = FactorDBClient(cache_dir=config.factordb_cache)
    oracle = FactorOracle(
        cache,
        config.factor_budget,
        config.descent_budget,
        remote=remote,
        local_factoring=not config.no_local,
        sweep_bound=config.sweep_bound,
    )
    return oracle, path


def _header(config, cache_file):
    return {
        "tool": "upncert",
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "cache_sha256": utils.sha256_file(cache_file) if cache_file else None,
        "config_sha256": config.digest(),
    }


def _report_path(config):
    return config.report or DEFAULT_REPORT.format(config.command)


def _write_report(config, cache_file, body):
    path = _report_path(config)
    report = {"header": _header(config, cache_file)}
    report.update(body)
    with open(path, "w") as f:
        json.dump(report, f, indent=1, sort_keys=True)
        f.write("\n")
    logger.info("report written to %s", path)


def cmd_verify_heven(config):
    oracle, cache_file = _oracle(config)
    classifier = HevenClassifier(oracle, closures=load_closures(overrides=config.deep_closures))
    results, summary = classifier.classify_range(2 * config.k_min, 2 * config.k_max, config.workers)
    results = [c for c in results if c.m % 4 == 2 and config.k_min <= c.k <= config.k_max]

    s = summary.to_dict()
    print("odd k: {}  Higgs-cubefree: {}  structural: {}".format(s["odd_k"], s["higgs_cubefree"], s["structural"]))
    print("members ({}): {}".format(len(s["members"]), " ".join(map(str, s["members"]))))
    print("witness-excluded: {}".format(s["witness_excluded"]))
    print("undecided ({}): {}".format(len(s["undecided"]), " ".join(map(str, s["undecided"]))))

    export_frontier(results, config.frontier or DEFAULT_FRONTIER)
    _write_report(
        config,
        cache_file,
        {
            "summary": s,
            "v2_histogram": {str(k): v for k, v in v2_histogram(results).items()},
            "classifications": [c.to_dict() for c in results],
        },
    )
    return EXIT_OK


def cmd_frontier(config):
    return cmd_verify_heven(config)


def cmd_impostor_certificate(config):
    oracle, cache_file = _oracle(config)
    entries = load_impostor_kernels(config.kernels)
    cert_config = CertificateConfig(config.max_rounds, config.max_bases, config.max_exp)
    if config.max_a < 1:
        certificates, summary = [], None
        split = {"Z": 0, "N": 0, "O": 0, "Unresolved": 0, "candidates": 0}
    else:
        certificates, summary = run_all(entries, config.max_a, oracle, cert_config, config.workers)
        split = summary.to_dict()

    print("{:>10} {:>6} {:>6} {:>6} {:>11}".format("candidates", "Z", "N", "O", "Unresolved"))
    print(
        "{candidates:>10} {Z:>6} {N:>6} {O:>6} {Unresolved:>11}".format(**split)
    )
    _write_report(
        config,
        cache_file,
        {
            "kernels": [e.kernel.id for e in entries],
            "summary": split,
            "certificates": [c.to_dict() for c in certificates],
        },
    )
    return EXIT_UNRESOLVED if split["Unresolved"] else EXIT_OK


def _read_numbers(config, numbers, path):
    items = list(numbers)
    if path:
        with open(path) as f:
            items.extend(line.strip() for line in f if line.strip() and not line.startswith("#"))
    return items


def cmd_higgs_check(config, numbers=(), path=None, tree=False):
    oracle, cache_file = _oracle(config)
    checker = HiggsChecker(oracle.factor)
    status = EXIT_OK
    verdicts = []
    for item in _read_numbers(config, numbers, path):
        try:
            p = utils.from_decimal(item)
        except ValueError:
            print("{}: not a positive integer".format(item[:40]))
            status = EXIT_BAD_INPUT
            continue
        try:
            verdict = checker.is_higgs(p)
        except NotPrime:
            print("{}: not prime".format(p))
            verdicts.append({"prime": str(p), "status": "NotPrime"})
            continue
        line = "{}: {}".format(p, verdict.status.value)
        if verdict.is_non_higgs:
            line += " ({}; witness {})".format(
                verdict.reason.value, " > ".join(map(str, verdict.witness))
            )
        if tree and not verdict.is_non_higgs:
            try:
                node = checker.pratt_witness(p)
                line += " height {} max exponent {}".format(node.height, node.max_exponent)
            except IncompleteDescent as e:
                line += " ({})".format(e)
        print(line)
        verdicts.append(verdict.to_dict())
    _write_report(config, cache_file, {"verdicts": verdicts})
    return status


def cmd_aurifeuillean(config, k, bound=0):
    split = aurifeuillean_split(k)
    oracle, cache_file = _oracle(config)
    record = oracle.known(2 * k)
    print("2^{}+1 = L * M ({})".format(2 * k, split.branch))
    for name, half in (("L", split.L), ("M", split.M)):
        known = []
        if record is not None:
            known = [p for p in record.factors if half % p == 0]
        print(
            "{}: {} digits; known primes: {}".format(
                name, utils.digits(half), " ".join(map(str, known)) or "-"
            )
        )
    print("5 divides {}".format(split.five_divides))
    hits = sweep_two_adic(k, bound) if bound else []
    for r, half in hits:
        print("sweep hit r = {} in {} (v_2(r-1) = {})".format(r, half, arith.v_adic(2, r - 1)))
    _write_report(
        config,
        cache_file,
        {
            "k": k,
            "branch": split.branch,
            "L_digits": utils.digits(split.L),
            "M_digits": utils.digits(split.M),
            "sweep": [[str(r), half] for r, half in hits],
        },
    )
    return EXIT_OK


def cmd_enumerate_kernels(config):
    bounds = BoxBounds(
        config.max_prime,
        config.max_kernel_exp,
        config.max_prime_power,
        config.max_scc_size,
        config.max_cycle_len,
    )
    kernels = enumerate_source_kernels(bounds, workers=config.workers)
    for kernel in kernels:
        print(kernel.id)
    with open(_report_path(config), "w") as f:
        export_kernels(kernels, f)
    return EXIT_OK


def cmd_pi3(config):
    counts = higgs_prime_counts(config.x)
    for x, n in counts.items():
        print("{:>14} {:>10}".format(x, n))
    if len(counts) >= 2:
        print("fitted exponent: {:.4f}".format(fit_counting_exponent(counts)))
    _write_report(config, None, {"counts": {str(x): n for x, n in counts.items()}})
    return EXIT_OK


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    flags = dict(vars(args))
    ini_path = flags.pop("config", None)
    for key in ("numbers", "file", "tree", "k", "bound"):
        flags.pop(key, None)
    try:
        config = build_config(flags, ini_path)
    except ConfigError as e:
        print("upncert: configuration error: {}".format(e), file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(
        level=config.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        if config.command == "verify-heven":
            return cmd_verify_heven(config)
        if config.command == "frontier":
            return cmd_frontier(config)
        if config.command == "impostor-certificate":
            return cmd_impostor_certificate(config)
        if config.command == "higgs-check":
            return cmd_higgs_check(config, args.numbers, args.file, args.tree)
        if config.command == "aurifeuillean":
            try:
                return cmd_aurifeuillean(config, args.k, args.bound)
            except ValueError as e:
                print("upncert: {}".format(e), file=sys.stderr)
                return EXIT_CONFIG
        if config.command == "enumerate-kernels":
            return cmd_enumerate_kernels(config)
        if config.command == "pi3":
            return cmd_pi3(config)
    except (ParseError, ValidationError, OSError) as e:
        print("upncert: {}".format(e), file=sys.stderr)
        return EXIT_IO
    raise ConfigError("unhandled command {!r}".format(config.command))


if __name__ == "__main__":
    sys.exit(main())
