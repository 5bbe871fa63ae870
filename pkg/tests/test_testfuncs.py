"""Size-alpha tests, decisions, p-value families, and their exact identities."""

import csv
import random
from fractions import Fraction

import pytest

from mdpvalues import (
    MD,
    T_BASED,
    TestingError,
    alpha_breakpoints,
    audit_unbiasedness,
    decision,
    decision_coherence_witness,
    draw_randomized_pvalue,
    make_statistic,
    power,
    pvalue_family,
    size_alpha_test,
    write_pvalue_table,
)

from conftest import brute_expectation

ALPHA = Fraction(1, 10)


@pytest.fixture(scope="module")
def count_stat(example1):
    return make_statistic(example1, "successes", lambda pt: Fraction(pt.label.count("1")))


class TestSizeAlphaTest:
    """The worked level-0.1 pair: reject T=5 surely, randomize on T=4."""

    def test_t_based_threshold_and_gamma(self, example1, count_stat):
        test = size_alpha_test(example1, count_stat, ALPHA)
        assert test.kind == T_BASED
        assert test.threshold == 4
        assert test.gamma == Fraction(11, 25)  # 0.44

    def test_md_threshold_and_gamma(self, example1, table1_ranking):
        test = size_alpha_test(example1, table1_ranking, ALPHA)
        assert test.kind == MD
        assert test.threshold == 4
        assert test.gamma == Fraction(1, 5)  # ranks 1-3 sure, rank 4 at 0.2
        by_rank = {table1_ranking.rank(pt): pt for pt in example1.support}
        assert [test.phi(by_rank[r]) for r in (1, 2, 3)] == [1, 1, 1]
        assert test.phi(by_rank[4]) == Fraction(1, 5)
        assert all(test.phi(by_rank[r]) == 0 for r in range(5, 33))

    def test_boundary_sizes(self, example1, count_stat, table1_ranking):
        for source in (count_stat, table1_ranking):
            zero = size_alpha_test(example1, source, 0)
            one = size_alpha_test(example1, source, 1)
            assert all(zero.phi(pt) == 0 for pt in example1.support)
            assert all(one.phi(pt) == 1 for pt in example1.support)

    def test_size_identity_on_dense_grid(self, example1, count_stat, table1_ranking):
        grid = set(Fraction(k, 100) for k in range(101))
        grid.update(alpha_breakpoints(pvalue_family(example1, count_stat)))
        for alpha in sorted(grid):
            for source in (count_stat, table1_ranking):
                test = size_alpha_test(example1, source, alpha)
                assert brute_expectation(example1, "theta0", test.phi) == alpha

    def test_gamma_is_exactly_zero_or_one_at_boundaries(self, example1, count_stat):
        at_tail = size_alpha_test(example1, count_stat, Fraction(1, 32))
        assert at_tail.gamma == 0 and at_tail.threshold == 4
        assert size_alpha_test(example1, count_stat, 1).gamma == 1

    def test_monotone_in_alpha_pointwise(self, example1, count_stat, table1_ranking):
        for source in (count_stat, table1_ranking):
            grid = alpha_breakpoints(pvalue_family(example1, source))
            tests = [size_alpha_test(example1, source, a) for a in grid]
            for lo, hi in zip(tests, tests[1:]):
                for pt in example1.support:
                    assert lo.phi(pt) <= hi.phi(pt)

    def test_alpha_out_of_range(self, example1, count_stat):
        with pytest.raises(TestingError):
            size_alpha_test(example1, count_stat, Fraction(3, 2))


class TestPower:
    def test_reference_power_both_tests(self, example1, count_stat, table1_ranking):
        expected = Fraction(39680, 78125)  # 0.507904
        t_test = size_alpha_test(example1, count_stat, ALPHA)
        md_test = size_alpha_test(example1, table1_ranking, ALPHA)
        assert power(t_test, "theta1") == expected
        assert power(md_test, "theta1") == expected
        assert float(expected) == 0.507904

    def test_size_at_null_is_alpha(self, example1, count_stat):
        for alpha in (Fraction(1, 32), Fraction(1, 10), Fraction(1, 2)):
            assert power(size_alpha_test(example1, count_stat, alpha), "theta0") == alpha

    def test_level_property_of_natural_decisions(self, example1, count_stat):
        family = pvalue_family(example1, count_stat)
        for alpha in alpha_breakpoints(family):
            test = size_alpha_test(example1, count_stat, alpha)
            natural = brute_expectation(
                example1, "theta0",
                lambda pt: Fraction(1) if test.decide(pt, 1) else Fraction(0),
            )
            assert natural <= alpha


class TestDecision:
    def test_sure_rejection_class(self, example1, count_stat):
        test = size_alpha_test(example1, count_stat, ALPHA)
        top = example1.point("11111")
        for u in (0, Fraction(1, 2), 1):
            assert decision(test, top, u) == "reject"

    def test_sure_retention_class(self, example1, count_stat):
        test = size_alpha_test(example1, count_stat, ALPHA)
        low = example1.point("00111")
        for u in (0, Fraction(1, 4), 1):
            assert decision(test, low, u) == "retain"

    def test_threshold_class_splits_at_gamma(self, example1, count_stat):
        test = size_alpha_test(example1, count_stat, ALPHA)
        tied = example1.point("01111")
        assert decision(test, tied, Fraction(44, 100)) == "reject"
        assert decision(test, tied, Fraction(45, 100)) == "retain"

    def test_u_out_of_range(self, example1, count_stat):
        test = size_alpha_test(example1, count_stat, ALPHA)
        with pytest.raises(TestingError):
            decision(test, example1.point("11111"), Fraction(11, 10))


class TestPValueFamily:
    def test_md_natural_values_are_rank_over_n(self, example1, table1_ranking):
        family = pvalue_family(example1, table1_ranking)
        for pt in example1.support:
            assert family.natural(pt) == Fraction(table1_ranking.rank(pt), 32)

    def test_t_natural_values_per_class(self, example1, count_stat):
        family = pvalue_family(example1, count_stat)
        assert family.natural(example1.point("11111")) == Fraction(1, 32)
        assert family.natural(example1.point("01111")) == Fraction(6, 32)
        assert family.natural(example1.point("00111")) == Fraction(16, 32)

    def test_mid_values(self, example1, count_stat):
        family = pvalue_family(example1, count_stat)
        assert family.mid(example1.point("11111")) == Fraction(1, 64)    # 0.015625
        assert family.mid(example1.point("01111")) == Fraction(7, 64)    # 0.109375

    def test_pair_invariants(self, example1, count_stat, table1_ranking):
        null = example1.probs("theta0")
        for source, kind in ((count_stat, T_BASED), (table1_ranking, MD)):
            family = pvalue_family(example1, source)
            assert family.kind == kind
            for i in range(example1.size):
                assert family.b[i] > 0
                assert family.a[i] >= 0
                assert family.a[i] + family.b[i] <= 1
                if kind == MD:
                    assert family.b[i] == null[i]

    def test_md_attains_n_distinct_naturals(self, example1, table1_ranking):
        family = pvalue_family(example1, table1_ranking)
        attained = {family.natural(i) for i in range(example1.size)}
        assert attained == {Fraction(k, 32) for k in range(1, 33)}

    def test_coherence_with_decisions_is_exact(self, example1, count_stat, table1_ranking):
        assert decision_coherence_witness(example1, count_stat) is None
        assert decision_coherence_witness(example1, table1_ranking) is None

    def test_evaluate_endpoints(self, example1, table1_ranking):
        family = pvalue_family(example1, table1_ranking)
        top = example1.point("11111")
        assert family.evaluate(top, 0) == 0          # a = 0 at the most extreme point
        assert family.evaluate(top, 1) == family.natural(top)
        assert family.evaluate(top, Fraction(1, 2)) == family.mid(top)


class TestDrawRandomized:
    def test_fixed_seed_reproduces(self, example1, table1_ranking):
        family = pvalue_family(example1, table1_ranking)
        pt = example1.point("01111")
        first = draw_randomized_pvalue(family, pt, random.Random(99))
        second = draw_randomized_pvalue(family, pt, random.Random(99))
        assert first == second

    def test_value_is_linear_in_u(self, example1, table1_ranking):
        family = pvalue_family(example1, table1_ranking)
        pt = example1.point("01111")
        value, u = draw_randomized_pvalue(family, pt, random.Random(5))
        assert value == pytest.approx(float(family.a[pt.index]) + u * float(family.b[pt.index]))
        assert 0.0 <= u <= 1.0


class TestUnbiasednessAudit:
    def test_no_violations_toward_larger_theta(self, example1, count_stat):
        assert audit_unbiasedness(example1, count_stat, ["theta1"]) == []

    def test_violations_reported_for_smaller_theta(self, count_stat):
        from mdpvalues import bernoulli_product_model

        model = bernoulli_product_model(5, ["1/2", "3/10"])
        stat = make_statistic(model, "successes", lambda pt: Fraction(pt.label.count("1")))
        violations = audit_unbiasedness(model, stat, ["theta1"])
        assert violations
        theta, alpha, value = violations[0]
        assert theta == "theta1" and value < alpha


def test_write_pvalue_table(tmp_path, example1, lr, table1_ranking):
    path = tmp_path / "pvalues.csv"
    write_pvalue_table(path, example1, lr, table1_ranking, MD)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 32
    assert rows[0]["label"] == "11111"
    assert rows[0]["a"] == "0/1"
    assert rows[0]["natural"] == "1/32"
    assert rows[0]["natural_dec"] == "0.031250"
    assert rows[7]["natural"] == "1/4"
