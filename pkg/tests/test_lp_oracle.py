"""Dual-route feasibility checks on exactly-rational random instances.

The production verdict (float simplex, and spot-checked exact-rational
simplex) must agree with the brute-force oracles from ``lp_oracle`` on
every instance.  The full >=200-instance sweep lives in the acceptance
suite; this module runs a smaller mixed sample plus targeted sanity cases
for each family and for the oracles themselves.
"""

from fractions import Fraction

import numpy as np
import pytest

from contextuality import Verdict, assemble_lp, classify, solve_feasibility

from lp_oracle import chsh_square_feasible, rational_feasible
from rational_models import (
    oracle_feasible,
    production_model,
    qutrit_instance,
    random_instance,
    square_instance,
    triangle_instance,
)


class TestVertexOracle:
    def test_point_system(self):
        # x0 + x1 = 1, x0 = 2 is infeasible with x >= 0
        assert rational_feasible([(0, 1)], [Fraction(1)], 2)
        assert not rational_feasible([(0, 1), (0,)], [Fraction(1), Fraction(2)], 2)

    def test_inconsistent_rows(self):
        sup = [(0, 1), (0, 1)]
        rhs = [Fraction(1), Fraction(1, 2)]
        assert not rational_feasible(sup, rhs, 2)

    def test_degenerate_rank_zero(self):
        assert rational_feasible([()], [Fraction(0)], 3)

    def test_square_characterization_boundary(self):
        perfect = {(0, 2): Fraction(1), (0, 3): Fraction(1),
                   (1, 2): Fraction(1), (1, 3): Fraction(1)}
        assert chsh_square_feasible(perfect)
        pr_box = dict(perfect)
        pr_box[(1, 3)] = Fraction(-1)
        assert not chsh_square_feasible(pr_box)


class TestFamilies:
    def test_qutrit_always_feasible(self):
        rng = np.random.default_rng(101)
        for _ in range(10):
            inst = qutrit_instance(rng)
            assert oracle_feasible(inst)
            result = classify(production_model(inst))
            assert result.verdict is Verdict.NONCONTEXTUAL

    def test_triangle_mixed_verdicts(self):
        rng = np.random.default_rng(55)
        verdicts = set()
        for _ in range(25):
            inst = triangle_instance(rng)
            expected = oracle_feasible(inst)
            verdicts.add(expected)
            result = classify(production_model(inst))
            got = result.verdict is Verdict.NONCONTEXTUAL
            assert got == expected
        assert verdicts == {True, False}

    def test_square_mixed_verdicts(self):
        rng = np.random.default_rng(77)
        verdicts = set()
        for _ in range(12):
            inst = square_instance(rng)
            expected = oracle_feasible(inst)
            verdicts.add(expected)
            result = classify(production_model(inst))
            got = result.verdict is Verdict.NONCONTEXTUAL
            assert got == expected
        assert verdicts == {True, False}

    def test_exact_simplex_agrees_with_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            inst = random_instance(rng)
            lp = assemble_lp(production_model(inst))
            exact_result = solve_feasibility(lp, exact=True)
            got = exact_result.verdict is Verdict.NONCONTEXTUAL
            assert got == oracle_feasible(inst)
