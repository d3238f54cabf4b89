"""Tests for upncert/filters.py"""
import logging

import pytest

from upncert import filters
from upncert.filters import CertificateConfig, Filter, OWitness
from upncert.higgs import HiggsChecker
from upncert.kernels import Kernel, KernelEntry, derive_seed_constraints, load_impostor_kernels
from upncert.oracle import FactorOracle, load_cache

K_5_13 = Kernel.parse("5^2·13^2")
K_3_5 = Kernel.parse("3^2·5^3")


@pytest.fixture(scope="module")
def cached_oracle():
    return FactorOracle(load_cache())


@pytest.fixture(scope="module")
def cache_only():
    return FactorOracle(load_cache(), local_factoring=False)


class TestFilterZ:
    def test_exponent(self):
        witness = filters.filter_z(8)
        assert (witness.q, witness.exponent, witness.reason) == (2, 4, "exponent")
        assert witness.replay(8)
        assert not witness.replay(9)

    def test_non_higgs(self):
        witness = filters.filter_z(17)
        assert (witness.q, witness.exponent, witness.reason) == (17, 1, "non-higgs")
        assert witness.replay(17)

    def test_passes(self):
        assert filters.filter_z(9) is None
        assert filters.filter_z(18) is None

    def test_three_is_exempt(self):
        assert filters.filter_z(3) is None

    def test_rejects(self):
        with pytest.raises(ValueError):
            filters.filter_z(0)


class TestFilterN:
    def test_small(self, cached_oracle):
        witness = filters.filter_n(12, cached_oracle)
        assert (witness.m, witness.r, witness.path) == (4, 17, (17,))
        assert witness.replay(12)
        assert not witness.replay(8)

    def test_passes(self, cached_oracle):
        assert filters.filter_n(18, cached_oracle) is None

    def test_cached_partial_record(self, cache_only):
        witness = filters.filter_n(4527, cache_only, HiggsChecker())
        assert (witness.m, witness.r) == (1509, 20127043)
        assert witness.replay(4527)

    def test_descent_witness(self, cache_only):
        witness = filters.filter_n(7278, cache_only, HiggsChecker())
        assert (witness.m, witness.r) == (7278, 812836153)
        assert witness.path == (812836153, 227, 113)
        assert witness.replay(7278)
        assert witness.to_dict() == {
            "m": 7278,
            "r": "812836153",
            "path": ["812836153", "227", "113"],
        }


class TestCascade:
    def test_seed_valuations(self, cached_oracle):
        assert filters.seed_valuations(18, cached_oracle) == {5: 1, 13: 1, 37: 1, 109: 1}
        assert filters.seed_valuations(10, cached_oracle) == {5: 2, 41: 1}
        assert filters.seed_valuations(18, FactorOracle()) == {}

    def test_overshoot(self, cached_oracle):
        state = filters.run_cascade(18, K_5_13, cached_oracle)
        assert state.round == 4
        assert [v2 for _, v2, _ in state.trace] == [9, 14, 16, 22]
        assert state.bases_active == 13
        assert state.targets[5] == 4 and state.targets[3] == 5

    def test_factored_seeds(self):
        config = CertificateConfig(factor_seeds=True)
        state = filters.run_cascade(18, K_5_13, FactorOracle(), config)
        assert state.v2_total == 22

    def test_fixpoint_without_seeds(self):
        state = filters.run_cascade(18, K_5_13, FactorOracle())
        assert state.v2_total == 4
        assert state.round == 3
        assert state.targets == {3: 2, 5: 2, 13: 2, 17: 1}

    def test_targets_only_grow(self, cached_oracle):
        state = filters.run_cascade(30, K_5_13, cached_oracle)
        totals = [v2 for _, v2, _ in state.trace]
        bases = [n for _, _, n in state.trace]
        assert totals == sorted(totals)
        assert bases == sorted(bases)

    def test_round_budget(self, cached_oracle):
        config = CertificateConfig(max_rounds=2)
        assert filters.filter_o(18, K_5_13, cached_oracle, config) is None

    def test_config_rejects(self):
        with pytest.raises(ValueError):
            CertificateConfig(max_rounds=0)


class TestFilterO:
    def test_witness(self, cached_oracle):
        witness = filters.filter_o(18, K_5_13, cached_oracle)
        assert isinstance(witness, OWitness)
        assert (witness.round, witness.v2_total, witness.budget) == (4, 22, 19)
        assert witness.replay(18)
        assert not witness.replay(17)
        assert witness.to_dict()["targets"]["313"] == 1

    def test_other_kernel(self, cached_oracle):
        witness = filters.filter_o(10, K_3_5, cached_oracle)
        assert (witness.round, witness.v2_total) == (4, 13)

    def test_larger_a(self, cached_oracle):
        witness = filters.filter_o(246, K_5_13, cached_oracle)
        assert witness.budget == 247
        assert witness.v2_total == 281
        assert witness.replay(246)

    @pytest.mark.parametrize("extra", [(), (3, 7, 11), (5, 13, 37, 109), (5, 13, 37, 109, 41)])
    def test_overshoot_survives_more_seeds(self, cached_oracle, extra):
        witness = filters.filter_o(18, K_5_13, cached_oracle, extra_seeds=extra)
        assert witness.v2_total == 22

    def test_seeds_given_directly(self):
        # 2^18 + 1 = 5 * 13 * 37 * 109
        witness = filters.filter_o(18, K_5_13, FactorOracle(), extra_seeds=(5, 13, 37, 109))
        assert (witness.round, witness.v2_total) == (4, 22)


class TestCertify:
    def test_order_of_filters(self, cached_oracle):
        assert filters.certify(K_5_13, 8, cached_oracle).filter is Filter.Z
        assert filters.certify(K_5_13, 12, cached_oracle).filter is Filter.N
        certificate = filters.certify(K_5_13, 18, cached_oracle)
        assert certificate.filter is Filter.O
        assert certificate.resolved
        assert certificate.replay()
        assert certificate.to_dict()["kernel"] == "5^2·13^2"
        assert certificate.to_dict()["filter"] == "O"

    def test_unresolved(self, cached_oracle):
        config = CertificateConfig(max_rounds=2)
        certificate = filters.certify(K_5_13, 18, cached_oracle, config=config)
        assert certificate.filter is Filter.UNRESOLVED
        assert not certificate.resolved
        assert not certificate.replay()
        assert "witness" not in certificate.to_dict()


class TestRunCertificate:
    def test_class_5_13(self, cached_oracle):
        certificates, summary = filters.run_certificate(K_5_13, 1, 30, cached_oracle)
        assert [c.a for c in certificates] == [6, 18, 30]
        assert summary.counts[Filter.O] == 3
        assert summary.unresolved == 0
        assert all(c.replay() for c in certificates)

    def test_class_3_5(self, cached_oracle):
        certificates, summary = filters.run_certificate(K_3_5, 1, 50, cached_oracle, workers=2)
        assert [(c.a, c.filter) for c in certificates] == [
            (10, Filter.O),
            (30, Filter.O),
            (50, Filter.N),
        ]
        assert certificates[2].witness.r == 8101
        assert summary.split() == (0, 1, 2, 0)
        assert summary.to_dict() == {"Z": 0, "N": 1, "O": 2, "Unresolved": 0, "candidates": 3}

    def test_candidate_count(self):
        assert filters.candidate_count(10, 20, 100) == 5
        assert filters.candidate_count(10, 20, 9) == 0
        assert filters.candidate_count(0, 12, 24) == 2
        seed = derive_seed_constraints(K_3_5)
        assert filters.candidate_count(seed.residue, seed.modulus, 10000) == len(
            seed.candidates(1, 10000)
        )

    def test_run_all_warns_on_bad_class(self, cached_oracle, caplog):
        entry = KernelEntry(K_5_13, "impostor", 1, 2)
        with caplog.at_level(logging.WARNING, logger="upncert.filters"):
            certificates, summary = filters.run_all([entry], 30, cached_oracle)
        assert "disagrees" in caplog.text
        assert summary.candidates == 3

    def test_bundled_impostors_without_cache(self):
        _, summary = filters.run_all(load_impostor_kernels(), 200, FactorOracle())
        assert summary.to_dict() == {"Z": 5, "N": 28, "O": 10, "Unresolved": 0, "candidates": 43}

    @pytest.mark.slow
    def test_bundled_impostors(self, cached_oracle):
        entries = load_impostor_kernels()
        certificates, summary = filters.run_all(entries, 10000, cached_oracle, workers=4)
        expected = sum(filters.candidate_count(e.residue, e.modulus, 10000) for e in entries)
        assert summary.candidates == expected
        assert all(c.replay() for c in certificates if c.resolved)
