"""Tests for upncert/heven.py"""
import csv
import json
import random

import pytest

from upncert import heven, utils
from upncert.exceptions import ChecksFailed, ParseError
from upncert.heven import DeepClosureRow, HevenClassifier, Reason, Verdict
from upncert.higgs import HiggsChecker
from upncert.oracle import FactorCache, FactorOracle, load_cache

P_2426 = 25893760589
P_4022 = 920793289987614829
MEMBERS_TO_62 = [2, 6, 10, 18, 26, 30, 46, 62]


@pytest.fixture(scope="module")
def cached_oracle():
    return FactorOracle(load_cache())


@pytest.fixture(scope="module")
def cache_only():
    return FactorOracle(load_cache(), local_factoring=False)


@pytest.fixture
def rows(monkeypatch):
    monkeypatch.delenv("UPNCERT_DEEP_CLOSURES", raising=False)
    return heven.load_closures()


class TestPrefilter:
    def test_fermat(self):
        c = heven.prefilter(4)
        assert (c.verdict, c.reason, c.prime, c.exponent) == (
            Verdict.EXCLUDED,
            Reason.FERMAT_OBSTRUCTION,
            2,
            2,
        )

    def test_non_higgs_prime_of_k(self):
        c = heven.prefilter(34)
        assert c.reason is Reason.NOT_HIGGS_CUBEFREE
        assert c.prime == 17
        assert c.path == (17,)

    def test_exponent_of_k(self):
        c = heven.prefilter(162)
        assert (c.reason, c.prime, c.exponent) == (Reason.NOT_HIGGS_CUBEFREE, 3, 4)

    def test_survivors(self):
        for m in (2, 6, 14, 2426, 4366):
            assert heven.prefilter(m) is None

    @pytest.mark.parametrize("m", [0, 3, -2])
    def test_rejects(self, m):
        with pytest.raises(ValueError):
            heven.prefilter(m)

    def test_structural_count_to_1200(self):
        checker = HiggsChecker()
        excluded = [m for m in range(2, 1201, 4) if heven.prefilter(m, checker) is not None]
        assert len(range(2, 1201, 4)) == 300
        assert len(excluded) == 54
        assert excluded[:3] == [34, 102, 162]


class TestClassifier:
    def test_witness_prime(self, cached_oracle):
        c = HevenClassifier(cached_oracle).classify(14)
        assert c.is_excluded
        assert (c.reason, c.prime, c.path) == (Reason.WITNESS_PRIME, 113, (113,))
        assert c.divisor_witness == 113
        assert c.to_dict() == {
            "m": 14,
            "verdict": "Excluded",
            "reason": "WitnessPrime",
            "prime": "113",
            "path": ["113"],
        }

    def test_member(self, cached_oracle):
        c = HevenClassifier(cached_oracle).classify(46)
        assert c.is_member
        assert c.divisor_witness is None
        assert c.record.primes == [5, 277, 1013, 1657, 30269]

    def test_inherited(self, cached_oracle):
        c = HevenClassifier(cached_oracle).classify(42)
        assert (c.reason, c.prime, c.divisor) == (Reason.INHERITED_FROM_DIVISOR, 113, 14)

    def test_range_to_62(self, cached_oracle):
        results, summary = HevenClassifier(cached_oracle).classify_range(2, 62, workers=2)
        assert [c.m for c in results] == list(range(2, 63, 2))
        assert sorted(summary.members) == MEMBERS_TO_62
        assert summary.to_dict() == {
            "odd_k": 16,
            "higgs_cubefree": 15,
            "structural": 1,
            "members": MEMBERS_TO_62,
            "excluded": {
                "FermatObstruction": 15,
                "NotHiggsCubefree": 1,
                "WitnessPrime": 6,
                "InheritedFromDivisor": 1,
            },
            "witness_excluded": 7,
            "undecided": [],
        }

    def test_module_shortcut(self, cached_oracle):
        _, summary = heven.classify_range(2, 10, cached_oracle)
        assert sorted(summary.members) == [2, 6, 10]

    def test_range_rejects(self, cached_oracle):
        with pytest.raises(ValueError):
            HevenClassifier(cached_oracle).classify_range(10, 2)

    def test_blocking_cofactors(self, cache_only):
        c = HevenClassifier(cache_only, HiggsChecker()).classify(2426)
        assert c.is_undecided
        assert c.reason is Reason.BLOCKING_COFACTORS
        assert c.blocking == (355, 366)
        assert c.undecided == ()
        assert c.to_dict()["blocking_digits"] == [355, 366]

    def test_undecided_prime(self, cache_only):
        c = HevenClassifier(cache_only).classify(2426)
        assert c.is_undecided
        assert P_2426 in c.undecided

    @pytest.mark.slow
    def test_range_to_1200(self, cached_oracle):
        _, summary = HevenClassifier(cached_oracle).classify_range(2, 1200, workers=4)
        assert (summary.odd_k, summary.cubefree, summary.structural) == (300, 246, 54)
        assert sorted(summary.members) == MEMBERS_TO_62 + [82, 122]
        # 2^554 + 1 keeps cofactors of 49 and 80 digits with no known witness
        assert summary.witness_excluded == 235
        assert summary.undecided == [554]

    def test_range_to_300_without_cache(self):
        _, summary = HevenClassifier(FactorOracle(FactorCache())).classify_range(2, 300)
        assert sorted(summary.members) == MEMBERS_TO_62 + [82, 122]
        assert summary.undecided == []
        members = set(summary.members)
        for m in members:
            assert set(utils.odd_part_divisors(m)) <= members

    def test_truncated_factorization(self):
        cache = FactorCache.from_json({"46": {"5": 1, "277": 1, "30269": 1}})
        oracle = FactorOracle(cache, local_factoring=False)
        c = HevenClassifier(oracle, HiggsChecker()).classify(46)
        assert c.is_undecided
        assert c.blocking == (7,)

    @pytest.mark.parametrize("seed", range(5))
    def test_no_member_from_truncated_cache(self, seed):
        rng = random.Random(seed)
        bundled = load_cache()
        obj = {}
        for m in range(1, 63):
            factors = {str(p): e for p, e in bundled.get(m).factors.items()}
            if len(factors) > 2 and rng.random() < 0.5:
                for key in rng.sample(sorted(factors), 2):
                    del factors[key]
            obj[str(m)] = factors
        oracle = FactorOracle(FactorCache.from_json(obj), local_factoring=False)
        checker = HiggsChecker()
        results, summary = HevenClassifier(oracle, checker).classify_range(2, 62)
        assert set(summary.members) <= set(MEMBERS_TO_62)
        for c in results:
            if c.is_member:
                assert c.record.is_complete
                assert all(checker.is_higgs(p).is_higgs for p in c.record.primes)


class TestClosures:
    def test_bundled_rows(self, rows):
        assert {2446, 10294, 10958, 17398, 19066, 20282, 30882} <= set(rows)
        assert rows[30882].kind == "inherited"
        assert rows[30882].inherited_from == 10294
        assert rows[20282].v2 == 5071
        assert rows[19066].q == 343081
        assert rows[4366].depth == "shallow"

    def test_derived_decimal(self, rows):
        c = heven.verify_deep_closure(rows[2446])
        assert len(str(c.prime)) == 368
        assert c.witness_q == 4513
        assert (c.prime - 1) % 4513 == 0
        assert pow(2, 2446, c.prime) == c.prime - 1

    def test_derive_p_star(self):
        p = heven.derive_p_star(2446, 368)
        assert (p - 1) % 4513 == 0
        assert pow(2, 2446, p) == p - 1
        assert heven.derive_p_star(2446, 100) is None

    @pytest.mark.parametrize(
        "row",
        [DeepClosureRow(2446, "witness", digits=369, q=4513), DeepClosureRow(4, "v2_direct")],
    )
    def test_underivable(self, row):
        with pytest.raises(ChecksFailed) as info:
            heven.verify_deep_closure(row)
        assert info.value.step == "p_star"

    def test_v2_direct(self, rows):
        c = heven.verify_deep_closure(rows[4366])
        assert (c.verdict, c.reason, c.prime, c.exponent) == (
            Verdict.EXCLUDED,
            Reason.DEEP_PRATT_CLOSURE,
            593,
            4,
        )
        assert heven.verify_deep_closure(rows[4742]).prime == 493169

    def test_witness(self, rows):
        c = heven.verify_deep_closure(rows[4022])
        assert c.prime == P_4022
        assert c.witness_q == 1230855683509
        assert c.path == (P_4022, 1230855683509, 2169031, 17)

    def test_inherited_row(self, rows):
        row = DeepClosureRow(13098, "inherited", inherited_from=4366)
        c = heven.verify_deep_closure(row, rows=rows)
        assert (c.reason, c.prime, c.divisor) == (Reason.INHERITED_FROM_DIVISOR, 593, 4366)

    def test_inherited_deep_row(self, rows):
        c = heven.verify_deep_closure(rows[30882], rows=rows)
        assert (c.reason, c.divisor, c.witness_q) == (Reason.INHERITED_FROM_DIVISOR, 10294, 2657)
        assert len(str(c.prime)) == 1549

    @pytest.mark.parametrize(
        "row, step",
        [
            (DeepClosureRow(4366, "v2_direct", p_star=593, digits=4), "digits"),
            (DeepClosureRow(4366, "v2_direct", p_star=595), "primality"),
            (DeepClosureRow(4366, "v2_direct", p_star=601), "divides"),
            (DeepClosureRow(4366, "v2_direct", p_star=593, v2=5), "witness"),
            (DeepClosureRow(4022, "witness", p_star=P_4022, q=7), "witness"),
            (DeepClosureRow(4022, "witness", p_star=P_4022, q=31), "witness"),
            (DeepClosureRow(13098, "inherited", inherited_from=4367), "inheritance"),
            (DeepClosureRow(13098, "inherited", inherited_from=2), "inheritance"),
        ],
    )
    def test_tampered(self, row, step):
        with pytest.raises(ChecksFailed) as info:
            heven.verify_deep_closure(row, rows={})
        assert info.value.step == step

    def test_classifier_uses_rows(self, cache_only, rows):
        c = HevenClassifier(cache_only, HiggsChecker(), rows).classify(4366)
        assert c.reason is Reason.DEEP_PRATT_CLOSURE
        assert c.prime == 593

    def test_inheritance_comes_first(self, cached_oracle, rows):
        # 4366 = 74 * 59 and 593 | 2^74 + 1
        c = HevenClassifier(cached_oracle, closures=rows).classify(4366)
        assert (c.reason, c.prime, c.divisor) == (Reason.INHERITED_FROM_DIVISOR, 593, 74)

    def test_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "closures.json"
        path.write_text(json.dumps([{"m": 2446, "kind": "v2_direct", "p_star": "593"}]))
        monkeypatch.setenv("UPNCERT_DEEP_CLOSURES", str(path))
        rows = heven.load_closures()
        assert rows[2446].p_star == 593
        assert rows[2446].digits is None
        assert rows[4366].p_star == 593

    @pytest.mark.parametrize(
        "row", [{"m": 2446, "kind": "other"}, {"kind": "witness"}, {"m": 6, "kind": "witness", "q": "x"}]
    )
    def test_bad_rows(self, row):
        with pytest.raises(ParseError):
            DeepClosureRow.from_dict(row)

    def test_all_bundled_rows(self, rows):
        verified = {m: heven.verify_deep_closure(row, rows=rows) for m, row in rows.items()}
        assert all(c.is_excluded for c in verified.values())
        deep = {2446: 4513, 10294: 2657, 10958: 593, 17398: 139313, 19066: 343081}
        for m, q in deep.items():
            assert verified[m].witness_q == q
            assert len(str(verified[m].prime)) == rows[m].digits
        assert verified[20282].exponent == 5071
        assert verified[30882].divisor == 10294


class TestFrontier:
    def test_export(self, cache_only, tmp_path):
        c = HevenClassifier(cache_only, HiggsChecker()).classify(2426)
        path = str(tmp_path / "frontier.tsv")
        assert heven.export_frontier([c, heven.prefilter(4)], path) == 1
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f, delimiter="\t"))
        assert rows == [
            {
                "m": "2426",
                "k": "1213",
                "form": "2p",
                "known_factors": "2",
                "blocking_digits": "366",
                "inherited_from": "",
            }
        ]

    def test_v2_histogram(self, cache_only):
        c = HevenClassifier(cache_only, HiggsChecker()).classify(2426)
        assert heven.v2_histogram([c]) == {2: 1}
        assert heven.v2_histogram([c], skip=()) == {2: 2}


class TestSweeps:
    def test_two_adic(self):
        assert heven.sweep_two_adic(7, 200) == [(113, "L")]
        assert heven.sweep_two_adic(37, 1000) == [(593, "M")]

    def test_descendants(self):
        # 107367629 - 1 = 2^2 * 29 * 113 * 8191, and 113 is not 3-Higgs
        assert heven.sweep_descendants(29, 113, 107367629) == [(107367629, "L")]

    def test_prime_branch_candidates(self):
        assert heven.prime_branch_candidates([3, 5], cap=1) == [1, 3, 5, 15]
        assert len(heven.prime_branch_candidates([3, 5])) == 16
        assert heven.prime_branch_candidates([3]) == [1, 3, 9, 27]
        with pytest.raises(ValueError):
            heven.prime_branch_candidates([3, 3])
        with pytest.raises(ValueError):
            heven.prime_branch_candidates([2])
