"""LP assembly, feasibility verdicts, witnesses, and coordinate ranges.

Soundness is asserted both ways: feasible verdicts must return tables whose
marginals reproduce every context row; infeasible verdicts must return
certificates that are valid bounds on all global tables yet violated by
the model.  The known closed-form family for the qutrit scenario serves as
an independent feasibility proof, and a frustrated four-context model with
no satisfying support serves as an independent infeasibility proof.
"""

import math

import numpy as np
import pytest

from contextuality import (
    DensityOperator,
    Verdict,
    assemble_lp,
    build_empirical_model,
    builtin_abc,
    builtin_chsh,
    classify,
    coordinate_range,
    extract_witness,
    model_from_tables,
    solve_feasibility,
)
from contextuality.contexts import Context, ContextDistribution, EmpiricalModel
from contextuality.errors import InfeasibleSystem, ModelIncoherent, NotInfeasible, UnknownCell
from contextuality.reports import CheckReport
from contextuality.scenario import Scenario


def table_reproduces_rows(lp, table, tol=1e-9):
    for row in lp.rows:
        got = sum(table.values[j] for j in row.support)
        if abs(got - row.rhs) > tol:
            return False
    return True


def witness_is_sound(lp, witness, tol=1e-9):
    covers = [0.0] * lp.n_vars
    for row, w in zip(lp.rows, witness.weights):
        for j in row.support:
            covers[j] += w
    if any(c > witness.bound + tol for c in covers):
        return False
    value = sum(w * row.rhs for w, row in zip(witness.weights, lp.rows))
    return value - witness.bound == pytest.approx(witness.violation, abs=1e-9) \
        and witness.violation > tol


def pr_box_model():
    """Perfectly correlated except one anticorrelated context; no global table."""
    axes = (("A", (1.0, -1.0)), ("A'", (1.0, -1.0)), ("B", (1.0, -1.0)), ("B'", (1.0, -1.0)))
    same = {(1.0, 1.0): 0.5, (-1.0, -1.0): 0.5}
    anti = {(1.0, -1.0): 0.5, (-1.0, 1.0): 0.5}
    tables = {(0, 2): same, (0, 3): same, (1, 2): same, (1, 3): anti}
    return model_from_tables(axes, tables)


class TestAssemble:
    def test_abc_counts(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(1 / 3)))
        assert lp.n_vars == 8
        assert len(lp.rows) == 8
        assert not lp.all_commuting

    def test_chsh_counts(self):
        lp = assemble_lp(build_empirical_model(builtin_chsh("singlet")))
        assert lp.n_vars == 16
        assert len(lp.rows) == 16

    def test_single_context_counts(self):
        s = Scenario(name="diag",
                     observables=(("A", np.diag([1.0, -1.0]).astype(complex)),
                                  ("B", np.diag([2.0, 0.0]).astype(complex))),
                     rho=DensityOperator(matrix=np.diag([0.6, 0.4]).astype(complex)), dim=2)
        lp = assemble_lp(build_empirical_model(s))
        assert lp.n_vars == 4
        assert len(lp.rows) == 4
        assert lp.all_commuting

    def test_incoherent_model_rejected(self):
        model = pr_box_model()
        broken = EmpiricalModel(
            scenario=None, axes=model.axes, contexts=model.contexts,
            compatibility=CheckReport(entries=(
                model.compatibility.entries[0].__class__("forced", False, 1.0),)))
        with pytest.raises(ModelIncoherent):
            assemble_lp(broken)


class TestAbcFamily:
    @pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
    def test_always_noncontextual(self, p):
        model = build_empirical_model(builtin_abc(p))
        lp = assemble_lp(model)
        result = solve_feasibility(lp)
        assert result.verdict is Verdict.NONCONTEXTUAL
        assert table_reproduces_rows(lp, result.table)
        assert result.table.total() == pytest.approx(1.0, abs=1e-9)
        assert not result.table.quantum_sample_space

    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_closed_form_family_satisfies_rows(self, p):
        # the known one-parameter family of global tables: a=1 rows split
        # (r-s, r-s, s, s) over (b=c, b!=c), a=-1 row is (p, 0, 0, 0)
        r = (1 - p) / 2
        lp = assemble_lp(build_empirical_model(builtin_abc(p)))
        value_cells = [lp.cell_values(c) for c in lp.cells]
        for s_param in (0.0, r / 2, r):
            table = {
                (1.0, 1.0, 1.0): r - s_param,
                (1.0, -1.0, -1.0): r - s_param,
                (1.0, 1.0, -1.0): s_param,
                (1.0, -1.0, 1.0): s_param,
                (-1.0, 1.0, 1.0): p,
            }
            x = [table.get(cell, 0.0) for cell in value_cells]
            for row in lp.rows:
                got = sum(x[j] for j in row.support)
                assert got == pytest.approx(row.rhs, abs=1e-12)

    def test_extract_witness_raises(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(0.3)))
        with pytest.raises(NotInfeasible):
            extract_witness(lp)


class TestChsh:
    def test_singlet_contextual_with_correlator_witness(self):
        model = build_empirical_model(builtin_chsh("singlet"))
        lp = assemble_lp(model)
        result = solve_feasibility(lp)
        assert result.verdict is Verdict.CONTEXTUAL
        w = result.witness
        assert witness_is_sound(lp, w)
        assert w.bound == pytest.approx(2.0)
        assert w.correlator_value == pytest.approx(2 * math.sqrt(2), abs=1e-6)
        assert w.violation == pytest.approx(2 * math.sqrt(2) - 2, abs=1e-6)

    def test_product_state_noncontextual(self):
        model = build_empirical_model(builtin_chsh("product00"))
        lp = assemble_lp(model)
        result = solve_feasibility(lp)
        assert result.verdict is Verdict.NONCONTEXTUAL
        assert table_reproduces_rows(lp, result.table)
        # independent certificate: the product of single-observable
        # marginals is itself a feasible point for a product state
        marginals = []
        for k in range(4):
            vals = {}
            d = next(d for d in model.contexts if k in d.context.members)
            from contextuality import marginalize
            m = marginalize(d, (k,))
            marginals.append(dict(zip(m.outcomes, m.probs)))
        for row in lp.rows:
            prod_prob = 0.0
            for cell in row.support:
                values = lp.cell_values(lp.cells[cell])
                prod_prob += math.prod(marginals[k][(values[k],)] for k in range(4))
            assert prod_prob == pytest.approx(row.rhs, abs=1e-9)

    def test_exact_mode_matches(self):
        singlet = assemble_lp(build_empirical_model(builtin_chsh("singlet")))
        product = assemble_lp(build_empirical_model(builtin_chsh("product00")))
        assert solve_feasibility(singlet, exact=True).verdict is Verdict.CONTEXTUAL
        assert solve_feasibility(product, exact=True).verdict is Verdict.NONCONTEXTUAL


class TestPrBox:
    def test_no_satisfying_support(self):
        # brute-force oracle: intersect the support constraints of the four
        # perfectly (anti)correlated tables over all 16 deterministic cells
        model = pr_box_model()
        lp = assemble_lp(model)
        zero_rows = [set(r.support) for r in lp.rows if r.rhs == 0.0]
        allowed = [j for j in range(lp.n_vars) if not any(j in z for z in zero_rows)]
        assert allowed == []

    def test_witness_reaches_algebraic_maximum(self):
        lp = assemble_lp(pr_box_model())
        result = solve_feasibility(lp)
        assert result.verdict is Verdict.CONTEXTUAL
        assert witness_is_sound(lp, result.witness)
        assert result.witness.violation == pytest.approx(2.0, abs=1e-9)


class TestCoordinateRange:
    def test_free_parameter_interval(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(1 / 3)))
        lo, hi = coordinate_range(lp, (1.0, 1.0, -1.0))
        assert lo == pytest.approx(0.0, abs=1e-8)
        assert hi == pytest.approx(1 / 3, abs=1e-8)

    def test_pinned_zero_cell(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(1 / 3)))
        assert coordinate_range(lp, (-1.0, -1.0, -1.0)) == (0.0, 0.0)

    def test_concentrated_state(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(1.0)))
        lo, hi = coordinate_range(lp, (1.0, 1.0, 1.0))
        assert (lo, hi) == (0.0, 0.0)

    def test_single_context_fully_determined(self):
        s = Scenario(name="diag",
                     observables=(("A", np.diag([1.0, -1.0]).astype(complex)),
                                  ("B", np.diag([2.0, 0.0]).astype(complex))),
                     rho=DensityOperator(matrix=np.diag([0.6, 0.4]).astype(complex)), dim=2)
        lp = assemble_lp(build_empirical_model(s))
        for row in lp.rows:
            if len(row.support) == 1:
                lo, hi = coordinate_range(lp, row.support[0])
                assert lo == pytest.approx(row.rhs, abs=1e-9)
                assert hi == pytest.approx(row.rhs, abs=1e-9)

    def test_infeasible_raises(self):
        lp = assemble_lp(build_empirical_model(builtin_chsh("singlet")))
        with pytest.raises(InfeasibleSystem):
            coordinate_range(lp, (1.0, 1.0, 1.0, 1.0))

    def test_unknown_cell(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(0.5)))
        with pytest.raises(UnknownCell):
            coordinate_range(lp, (1.0, 1.0, 7.0))

    def test_exact_mode(self):
        lp = assemble_lp(build_empirical_model(builtin_abc(1 / 3)))
        lo, hi = coordinate_range(lp, (1.0, 1.0, -1.0), exact=True)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(1 / 3, abs=1e-9)


class TestClassify:
    def test_all_commuting_matches_refinement(self):
        s = Scenario(name="diag",
                     observables=(("A", np.diag([1.0, -1.0, 1.0]).astype(complex)),
                                  ("B", np.diag([0.0, 2.0, 2.0]).astype(complex))),
                     rho=DensityOperator(matrix=np.diag([0.5, 0.25, 0.25]).astype(complex)),
                     dim=3)
        model = build_empirical_model(s)
        result = classify(model)
        assert result.verdict is Verdict.NONCONTEXTUAL
        assert result.table.quantum_sample_space
        # the (unique) solution is the context table itself
        d = model.contexts[0]
        lp = assemble_lp(model)
        for outcome, prob in zip(d.outcomes, d.probs):
            j = lp.cells.index(tuple(
                lp.axes[k][1].index(outcome[k]) for k in range(2)))
            assert result.table.values[j] == pytest.approx(prob, abs=1e-9)

    def test_monotone_under_context_deletion(self):
        for p in (0.2, 0.7):
            model = build_empirical_model(builtin_abc(p))
            full = classify(model)
            assert full.verdict is Verdict.NONCONTEXTUAL
            for drop in range(len(model.contexts)):
                reduced = EmpiricalModel(
                    scenario=model.scenario, axes=model.axes,
                    contexts=tuple(d for i, d in enumerate(model.contexts) if i != drop),
                    compatibility=model.compatibility)
                assert classify(reduced).verdict is Verdict.NONCONTEXTUAL

    def test_deterministic(self):
        model = build_empirical_model(builtin_chsh("singlet"))
        r1 = classify(model)
        r2 = classify(model)
        assert r1.witness.weights == r2.witness.weights
        assert r1.stats.iterations == r2.stats.iterations
