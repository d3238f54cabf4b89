"""Tests for upncert/higgs.py"""
import pytest

from upncert import higgs
from upncert.arith import FactorizationRecord, primes_up_to
from upncert.exceptions import IncompleteDescent, NotPrime
from upncert.higgs import FailureReason, HiggsChecker, HiggsStatus, HiggsVerdict, VerdictCache

from .utils import brute_is_higgs, trial_factor

P_2426 = 25893760589


def never_factors(n):
    return FactorizationRecord(n, {}, (n,))


class TestIsHiggs:
    def test_two(self):
        assert HiggsChecker().is_higgs(2).is_higgs

    def test_small_primes(self):
        checker = HiggsChecker()
        for p in (3, 5, 7, 11, 13, 19, 23, 29, 31, 37, 41):
            assert checker.is_higgs(p).status is HiggsStatus.HIGGS

    def test_v2_overflow(self):
        verdict = HiggsChecker().is_higgs(17)
        assert verdict.is_non_higgs
        assert verdict.reason is FailureReason.V2_OVERFLOW
        assert verdict.witness == (17,)
        assert (verdict.offending, verdict.exponent) == (2, 4)

    def test_odd_exponent_overflow(self):
        # 162 = 2 * 3^4
        verdict = HiggsChecker().is_higgs(163)
        assert verdict.reason is FailureReason.VQ_OVERFLOW
        assert (verdict.offending, verdict.exponent) == (3, 4)

    def test_non_higgs_child(self):
        # 102 = 2 * 3 * 17
        verdict = HiggsChecker().is_higgs(103)
        assert verdict.is_non_higgs
        assert verdict.reason is FailureReason.NON_HIGGS_CHILD
        assert verdict.witness == (103, 17)
        assert verdict.leaf == 17
        assert verdict.offending == 17

    def test_not_prime(self):
        with pytest.raises(NotPrime):
            HiggsChecker().is_higgs(15)

    def test_matches_brute(self):
        checker = HiggsChecker()
        for p in higgs.arith.primes_up_to(3000):
            assert checker.is_higgs(p).is_higgs == brute_is_higgs(p)

    def test_undecided(self):
        verdict = HiggsChecker(never_factors).is_higgs(7)
        assert verdict.status is HiggsStatus.UNDECIDED
        assert verdict.reason is FailureReason.INCOMPLETE_FACTORIZATION
        assert not verdict.is_higgs and not verdict.is_non_higgs

    def test_partial_factorization_still_excludes(self):
        def partial(n):
            if n % 17 == 0:
                return FactorizationRecord(n, {17: 1}, (n // 17,))
            return never_factors(n)

        verdict = HiggsChecker(partial).is_higgs(103)
        assert verdict.is_non_higgs
        assert verdict.witness == (103, 17)

    def test_large_higgs(self):
        assert HiggsChecker().is_higgs(P_2426).is_higgs

    def test_memoized(self):
        checker = HiggsChecker()
        first = checker.is_higgs(103)
        assert checker.is_higgs(103) is first
        assert 17 in checker.memo

    def test_to_dict(self):
        assert HiggsChecker().is_higgs(103).to_dict() == {
            "prime": "103",
            "status": "NonHiggs",
            "witness": ["103", "17"],
            "reason": "NonHiggsChild",
            "offending": "17",
            "exponent": 1,
        }
        assert HiggsChecker().is_higgs(13).to_dict() == {"prime": "13", "status": "Higgs"}


class TestVerdictCache:
    def test_first_insert_wins(self):
        cache = VerdictCache()
        first = HiggsVerdict(7, HiggsStatus.HIGGS)
        assert cache.add(first) is first
        assert cache.add(HiggsVerdict(7, HiggsStatus.UNDECIDED)) is first
        assert len(cache) == 1
        assert cache.get(11) is None


class TestHiggsCubefree:
    @pytest.mark.parametrize("k", [1, 8, 15, 3 ** 3 * 5 ** 3 * 7, 2 * 3 * 13])
    def test_holds(self, k):
        assert HiggsChecker().higgs_cubefree(k).holds is True

    def test_exponent_too_large(self):
        result = HiggsChecker().higgs_cubefree(81)
        assert result.holds is False
        assert (result.prime, result.exponent) == (3, 4)
        assert result.verdict is None

    def test_even_exponent_too_large(self):
        result = HiggsChecker().higgs_cubefree(16 * 3)
        assert (result.holds, result.prime, result.exponent) == (False, 2, 4)

    def test_non_higgs_prime(self):
        result = HiggsChecker().higgs_cubefree(3 * 17)
        assert result.holds is False
        assert result.prime == 17
        assert result.verdict.witness == (17,)

    def test_undecided(self):
        assert HiggsChecker(never_factors).higgs_cubefree(15).holds is None

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            HiggsChecker().higgs_cubefree(0)


class TestPrattWitness:
    def test_small_trees(self):
        checker = HiggsChecker()
        assert checker.pratt_witness(2).height == 1
        node = checker.pratt_witness(7)
        assert node.height == 3
        assert node.primes() == {2, 3, 7}
        assert node.v2_of_pm1 == 1
        assert node.levels() == [1, 1]

    def test_height_of_deep_higgs_prime(self):
        # 25893760589 > 5336719 > 889453 > 797 > 199 > 11 > 5 > 2
        node = higgs.pratt_witness(P_2426, HiggsChecker())
        assert node.height == 8
        assert node.max_exponent == 2
        assert {1213, 5336719, 889453, 797, 199, 101, 31, 11, 5, 3, 2} <= node.primes()

    def test_to_dict(self):
        tree = HiggsChecker().pratt_witness(3).to_dict()
        assert tree == {
            "p": "3",
            "children": [{"q": "2", "e": 1, "node": {"p": "2", "children": []}}],
        }

    def test_incomplete(self):
        with pytest.raises(IncompleteDescent) as info:
            HiggsChecker(never_factors).pratt_witness(7)
        assert info.value.path == (7,)

    def test_not_prime(self):
        with pytest.raises(NotPrime):
            HiggsChecker().pratt_witness(9)


class TestReplayWitness:
    def test_valid(self):
        assert higgs.replay_witness((17,))
        assert higgs.replay_witness((103, 17))
        assert higgs.replay_witness((163,))

    def test_invalid(self):
        assert not higgs.replay_witness(())
        assert not higgs.replay_witness((103,))
        assert not higgs.replay_witness((103, 5))
        assert not higgs.replay_witness((15,))


class TestEnumerate:
    def test_small(self):
        assert higgs.enumerate_higgs_primes(30) == [2, 3, 5, 7, 11, 13, 19, 23, 29]
        assert higgs.enumerate_higgs_primes(1) == []
        assert higgs.enumerate_higgs_primes(2) == [2]

    def test_checker_enumerate_fills_memo(self):
        checker = HiggsChecker()
        found = checker.enumerate(100)
        assert all(p in checker.memo for p in found)
        assert 17 not in checker.memo

    def test_counts(self):
        counts = higgs.higgs_prime_counts(64)
        assert counts == {2: 1, 4: 2, 8: 4, 16: 6, 32: 10, 64: 17}
        assert higgs.higgs_prime_counts(64, [30, 100]) == {30: 9}

    def test_fit_counting_exponent(self):
        assert higgs.fit_counting_exponent({10: 100, 100: 1000}) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            higgs.fit_counting_exponent({10: 5})

    def test_density_below_one(self):
        exponent = higgs.fit_counting_exponent(higgs.higgs_prime_counts(2 ** 18))
        assert 0 < exponent < 1

    def test_non_higgs_primes_to_1000(self):
        missing = set(primes_up_to(1000)) - set(higgs.enumerate_higgs_primes(1000))
        assert {17, 97, 103, 113, 193, 257, 449, 577, 641, 673, 769} <= missing
        assert min(missing) == 17

    def test_prefix_consistent(self):
        full = higgs.enumerate_higgs_primes(10 ** 5)
        for x in (2, 16, 1000, 65536, 99991):
            assert higgs.enumerate_higgs_primes(x) == [p for p in full if p <= x]

    def test_downward_closed(self):
        found = higgs.enumerate_higgs_primes(10 ** 5)
        members = set(found)
        for p in found[1:]:
            for q, e in trial_factor(p - 1).items():
                assert e <= 3
                assert q in members

    def test_memo_agrees_with_fresh_checkers(self):
        found = set(higgs.enumerate_higgs_primes(10 ** 5))
        shared = HiggsChecker()
        for p in primes_up_to(10 ** 5):
            expected = p in found
            assert shared.is_higgs(p).is_higgs is expected
            assert HiggsChecker().is_higgs(p).is_higgs is expected


class TestModuleShortcuts:
    def test_default_checker_is_shared(self):
        assert higgs.default_checker() is higgs.default_checker()
        assert higgs.is_higgs(13).is_higgs
        assert higgs.higgs_cubefree(15).holds is True
