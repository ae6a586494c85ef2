"""Existence of a global joint distribution as linear feasibility.

One variable per cell of the product outcome space of all observables; one
equality row per (context, outcome tuple) forcing the cell marginal to the
empirical probability.  Feasibility is decided by a phase-1 simplex with
Bland's anti-cycling rule; a feasible system yields an explicit global
table, an infeasible one yields a Farkas certificate -- dual weights whose
induced inequality every global table obeys but the model violates.

Arithmetic is double precision by default; ``exact=True`` runs the same
simplex over ``fractions.Fraction`` for inputs whose entries are exactly
representable, removing verdict flips at the feasibility boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .contexts import EmpiricalModel
from .errors import (
    InfeasibleSystem,
    ModelIncoherent,
    NotInfeasible,
    NumericalFailure,
    UnknownCell,
)

DEFAULT_LP_TOL = 1e-9
_PIVOT_EPS = 1e-12


class Verdict(Enum):
    NONCONTEXTUAL = "GloballyNoncontextual"
    CONTEXTUAL = "GloballyContextual"


@dataclass(frozen=True)
class LPRow:
    """One equality constraint: cells projecting onto ``outcome`` sum to ``rhs``."""

    context_index: int
    outcome_pos: tuple[int, ...]
    outcome: tuple[float, ...]
    support: tuple[int, ...]
    rhs: float


@dataclass(frozen=True, eq=False)
class LPSystem:
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    context_members: tuple[tuple[int, ...], ...]
    rows: tuple[LPRow, ...]
    cells: tuple[tuple[int, ...], ...]
    n_vars: int
    all_commuting: bool

    def cell_values(self, cell: tuple[int, ...]) -> tuple[float, ...]:
        return tuple(self.axes[k][1][pos] for k, pos in enumerate(cell))


@dataclass(frozen=True, eq=False)
class GlobalTable:
    """Explicit joint distribution over the full outcome product space."""

    axes: tuple[tuple[str, tuple[float, ...]], ...]
    cells: tuple[tuple[int, ...], ...]
    values: tuple[float, ...]
    quantum_sample_space: bool

    def total(self) -> float:
        return float(sum(self.values))

    def marginal(self, members: tuple[int, ...], outcome_pos: tuple[int, ...]) -> float:
        """Sum of cells whose projection onto ``members`` equals ``outcome_pos``."""
        acc = 0.0
        for cell, val in zip(self.cells, self.values):
            if all(cell[m] == o for m, o in zip(members, outcome_pos)):
                acc += val
        return acc


@dataclass(frozen=True, eq=False)
class Witness:
    """Farkas certificate: weights per LP row, valid bound, positive violation.

    Validity means every cell's covering-weight sum is at most ``bound``;
    any global table then scores at most ``bound`` while the model scores
    ``bound + violation``.  When the certificate reduces to a correlator
    form on two-member binary contexts, the per-context signs and the
    correlator value are attached and the bound is the algebraic maximum.
    """

    weights: tuple[float, ...]
    bound: float
    violation: float
    correlator_signs: tuple[int, ...] | None = None
    correlator_value: float | None = None


@dataclass(frozen=True)
class SolverStats:
    iterations: int
    phase1_objective: float
    max_residual: float


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    verdict: Verdict
    table: GlobalTable | None
    witness: Witness | None
    stats: SolverStats


def assemble_lp(m: EmpiricalModel) -> LPSystem:
    """Build the equality system over the full product outcome space.

    Normalization is implied by any single context's rows and is not added
    separately.
    """
    if not m.compatibility.passed:
        raise ModelIncoherent("model failed its marginal-compatibility check")
    sizes = [len(vals) for _, vals in m.axes]
    cells = tuple(itertools.product(*[range(k) for k in sizes]))
    rows: list[LPRow] = []
    context_members = tuple(d.context.members for d in m.contexts)
    for ci, dist in enumerate(m.contexts):
        members = dist.context.members
        local_product = itertools.product(*[range(len(ax)) for ax in dist.axes])
        for flat, local_pos in enumerate(local_product):
            support = tuple(
                idx for idx, cell in enumerate(cells)
                if all(cell[mem] == op for mem, op in zip(members, local_pos))
            )
            rows.append(LPRow(
                context_index=ci,
                outcome_pos=local_pos,
                outcome=tuple(dist.axes[d][pos] for d, pos in enumerate(local_pos)),
                support=support,
                rhs=float(dist.probs[flat]),
            ))
    all_commuting = len(m.contexts) == 1 and len(m.contexts[0].context.members) == len(m.axes)
    return LPSystem(axes=m.axes, context_members=context_members, rows=tuple(rows),
                    cells=cells, n_vars=len(cells), all_commuting=all_commuting)


# --- simplex core -----------------------------------------------------------

def _pivot(T, z, basis, i, j):
    piv = T[i][j]
    T[i] = [v / piv for v in T[i]]
    row_i = T[i]
    for k in range(len(T)):
        if k == i:
            continue
        f = T[k][j]
        if f != 0:
            T[k] = [a - f * b for a, b in zip(T[k], row_i)]
    f = z[j]
    if f != 0:
        z[:] = [a - f * b for a, b in zip(z, row_i)]
    basis[i] = j


def _simplex_min(T, basis, cost, allowed, eps, max_iter):
    """Minimize ``cost . x`` from the current basic feasible tableau.

    ``T`` rows carry the rhs in the last column and stay in canonical form
    with respect to ``basis``.  Entering columns are drawn from ``allowed``
    smallest-index first and leaving rows break ratio ties on the smallest
    basic index (Bland's rule).  Returns (objective, iterations, z-row).
    """
    zero = cost[0] * 0
    z = list(cost) + [zero]
    for i, b in enumerate(basis):
        cb = cost[b]
        if cb != 0:
            z = [a - cb * t for a, t in zip(z, T[i])]
    iterations = 0
    while True:
        enter = -1
        for j in allowed:
            if z[j] < -eps:
                enter = j
                break
        if enter < 0:
            return -z[-1], iterations, z
        best_i = -1
        best_ratio = None
        best_basic = -1
        for i in range(len(T)):
            a = T[i][enter]
            if a > eps:
                ratio = T[i][-1] / a
                if best_i < 0 or ratio < best_ratio or (ratio == best_ratio and basis[i] < best_basic):
                    best_i, best_ratio, best_basic = i, ratio, basis[i]
        if best_i < 0:
            raise NumericalFailure("simplex objective unbounded")
        _pivot(T, z, basis, best_i, enter)
        iterations += 1
        if iterations > max_iter:
            raise NumericalFailure("simplex iteration limit exceeded")


def _phase1(supports, rhs_vals, n_vars, exact):
    """Minimal total constraint residual; tableau and duals at optimum."""
    m = len(supports)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    T = []
    for i, (sup, b) in enumerate(zip(supports, rhs_vals)):
        row = [zero] * (n_vars + m) + [b]
        for j in sup:
            row[j] = one
        row[n_vars + i] = one
        T.append(row)
    basis = [n_vars + i for i in range(m)]
    cost = [zero] * n_vars + [one] * m
    eps = zero if exact else _PIVOT_EPS
    max_iter = 200 * (n_vars + m + 10)
    obj, iterations, z = _simplex_min(T, basis, cost, range(n_vars + m), eps, max_iter)
    duals = [one - z[n_vars + i] for i in range(m)]
    return T, basis, obj, duals, iterations


def _drive_out_artificials(T, basis, n_vars, exact):
    """Pivot basic artificials onto structural columns; drop redundant rows."""
    zero = Fraction(0) if exact else 0.0
    eps = zero if exact else _PIVOT_EPS
    scratch = [zero] * len(T[0])
    dead = []
    for i in range(len(T)):
        if basis[i] >= n_vars:
            best_j, best_mag = -1, eps
            for j in range(n_vars):
                mag = abs(T[i][j])
                if mag > best_mag:
                    best_j, best_mag = j, mag
            if best_j >= 0:
                _pivot(T, scratch, basis, i, best_j)
            else:
                dead.append(i)
    for i in reversed(dead):
        del T[i]
        del basis[i]


def _solution(T, basis, n_vars, exact):
    x = [Fraction(0) if exact else 0.0] * n_vars
    for i, b in enumerate(basis):
        if b < n_vars:
            x[b] = T[i][-1]
    return x


def _rhs_values(rows, exact):
    if exact:
        return [Fraction(r.rhs) for r in rows]
    return [max(0.0, r.rhs) for r in rows]


def _max_residual(rows, x) -> float:
    worst = 0.0
    for row in rows:
        acc = sum((x[j] for j in row.support), 0 * x[0] if x else 0.0)
        worst = max(worst, abs(float(acc) - row.rhs))
    return worst


# --- witnesses --------------------------------------------------------------

def _cover_sums(lp: LPSystem, weights):
    covers = [0.0 * weights[0] if weights else 0.0] * lp.n_vars
    for row, w in zip(lp.rows, weights):
        if w != 0:
            for j in row.support:
                covers[j] = covers[j] + w
    return covers

def _witness_is_valid(lp: LPSystem, weights, bound, violation, tol) -> bool:
    if violation <= tol:
        return False
    return all(float(c) <= float(bound) + tol for c in _cover_sums(lp, weights))


def _binary_sign(pos: int) -> int:
    # axes are in descending eigenvalue order: first outcome is the + branch
    return 1 if pos == 0 else -1


def _try_correlator_witness(lp: LPSystem, duals, tol):
    """Reduce a Farkas vector to a pure correlator certificate when possible.

    Applies only when every context pairs two binary observables.  The
    correlator component of the dual weights is invariant under the trivial
    moves (normalization shifts, shared-marginal shifts), so its sign
    pattern identifies the violated correlator inequality; the candidate
    is validated before being returned.
    """
    n_ctx = len(lp.context_members)
    if n_ctx == 0:
        return None
    for members in lp.context_members:
        if len(members) != 2:
            return None
        if any(len(lp.axes[m][1]) != 2 for m in members):
            return None
    deltas = [0.0] * n_ctx
    for row, y in zip(lp.rows, duals):
        chi = _binary_sign(row.outcome_pos[0]) * _binary_sign(row.outcome_pos[1])
        deltas[row.context_index] += float(y) * chi / 4.0
    top = max(abs(d) for d in deltas)
    if top <= 0.0 or any(abs(d) <= 1e-6 * top for d in deltas):
        return None
    signs = tuple(1 if d > 0 else -1 for d in deltas)
    weights = tuple(
        float(signs[row.context_index]
              * _binary_sign(row.outcome_pos[0]) * _binary_sign(row.outcome_pos[1]))
        for row in lp.rows
    )
    bound = max(float(c) for c in _cover_sums(lp, weights))
    value = sum(w * row.rhs for w, row in zip(weights, lp.rows))
    violation = value - bound
    if not _witness_is_valid(lp, weights, bound, violation, tol):
        return None
    return Witness(weights=weights, bound=bound, violation=violation,
                   correlator_signs=signs, correlator_value=value)


def _raw_witness(lp: LPSystem, duals, tol):
    scale = max(abs(float(y)) for y in duals)
    if scale <= 0.0:
        return None
    weights = tuple(float(y) / scale for y in duals)
    violation = sum(w * row.rhs for w, row in zip(weights, lp.rows))
    if not _witness_is_valid(lp, weights, 0.0, violation, tol):
        return None
    return Witness(weights=weights, bound=0.0, violation=violation)


def _forced_zero_cells(lp: LPSystem, tol: float) -> set[int]:
    forced: set[int] = set()
    for row in lp.rows:
        if row.rhs <= tol:
            forced.update(row.support)
    return forced


def _combinatorial_witness(lp: LPSystem, row_index: int, tol: float) -> Witness:
    """Certificate for a row whose support is entirely forced to zero."""
    target = lp.rows[row_index]
    weights = [0.0] * len(lp.rows)
    weights[row_index] = 1.0
    support = set(target.support)
    for i, row in enumerate(lp.rows):
        if i != row_index and row.rhs <= tol and support & set(row.support):
            weights[i] = -1.0
    violation = sum(w * row.rhs for w, row in zip(weights, lp.rows))
    witness = Witness(weights=tuple(weights), bound=0.0, violation=violation)
    if not _witness_is_valid(lp, witness.weights, 0.0, violation, tol):
        raise NumericalFailure("forced-zero certificate failed validation")
    return witness


# --- public operations ------------------------------------------------------

def _infeasible_result(lp: LPSystem, tol: float, exact: bool, tol_cmp,
                       pre_iterations: int, empty_row: int | None) -> FeasibilityResult:
    """Witness from full-system phase-1 duals; combinatorial fallback."""
    supports = [row.support for row in lp.rows]
    rhs_all = _rhs_values(lp.rows, exact)
    _, _, obj_full, duals, it_full = _phase1(supports, rhs_all, lp.n_vars, exact)
    if obj_full <= tol_cmp:
        raise NumericalFailure("presolved and full systems disagree on feasibility")
    witness = _try_correlator_witness(lp, duals, tol) or _raw_witness(lp, duals, tol)
    if witness is None and empty_row is not None:
        witness = _combinatorial_witness(lp, empty_row, tol)
    if witness is None:
        raise NumericalFailure("no valid infeasibility certificate found")
    stats = SolverStats(iterations=pre_iterations + it_full,
                        phase1_objective=float(obj_full), max_residual=0.0)
    return FeasibilityResult(Verdict.CONTEXTUAL, None, witness, stats)


def solve_feasibility(lp: LPSystem, tol: float = DEFAULT_LP_TOL,
                      exact: bool = False) -> FeasibilityResult:
    """Decide existence of a global table reproducing every context row.

    Feasible: returns the basic solution as a GlobalTable with maximal
    constraint residual at most ``tol``.  Infeasible: returns a validated
    Farkas witness built from the terminal phase-1 duals.
    """
    tol_cmp = Fraction(tol) if exact else tol
    forced = _forced_zero_cells(lp, tol)

    # presolve: drop rows pinned to zero, eliminate their cells
    active = [i for i, row in enumerate(lp.rows) if row.rhs > tol]
    reduced_supports = []
    for i in active:
        sup = tuple(j for j in lp.rows[i].support if j not in forced)
        if not sup:
            # a positive row whose cells are all pinned: infeasible outright
            return _infeasible_result(lp, tol, exact, tol_cmp, 0, i)
        reduced_supports.append(sup)

    rhs_vals = _rhs_values([lp.rows[i] for i in active], exact)
    T, basis, obj, _, iterations = _phase1(reduced_supports, rhs_vals, lp.n_vars, exact)

    if obj <= tol_cmp:
        x = _solution(T, basis, lp.n_vars, exact)
        values = tuple(max(0.0, float(v)) for v in x)
        residual = _max_residual(lp.rows, values)
        if residual > 10 * tol:
            raise NumericalFailure(f"feasible point residual {residual:.3e} exceeds tolerance")
        table = GlobalTable(axes=lp.axes, cells=lp.cells, values=values,
                            quantum_sample_space=lp.all_commuting)
        stats = SolverStats(iterations=iterations, phase1_objective=float(obj),
                            max_residual=residual)
        return FeasibilityResult(Verdict.NONCONTEXTUAL, table, None, stats)

    return _infeasible_result(lp, tol, exact, tol_cmp, iterations, None)


def classify(m: EmpiricalModel, tol: float = DEFAULT_LP_TOL,
             exact: bool = False) -> FeasibilityResult:
    """assemble_lp followed by solve_feasibility."""
    return solve_feasibility(assemble_lp(m), tol=tol, exact=exact)


def _locate_cell(lp: LPSystem, cell) -> int:
    if isinstance(cell, int):
        if not 0 <= cell < lp.n_vars:
            raise UnknownCell(f"cell index {cell} out of range")
        return cell
    if len(cell) != len(lp.axes):
        raise UnknownCell(f"cell must give one outcome per observable ({len(lp.axes)})")
    pos = []
    for (label, axis), value in zip(lp.axes, cell):
        diffs = [abs(v - float(value)) for v in axis]
        best = min(range(len(axis)), key=lambda k: diffs[k])
        if diffs[best] > 1e-6:
            raise UnknownCell(f"{label} has no outcome near {value!r}")
        pos.append(best)
    return lp.cells.index(tuple(pos))


def coordinate_range(lp: LPSystem, cell, tol: float = DEFAULT_LP_TOL,
                     exact: bool = False) -> tuple[float, float]:
    """Minimal and maximal value of one cell over all feasible global tables.

    ``cell`` is either a flat index or a tuple with one outcome value per
    observable (in axis order).
    """
    var = _locate_cell(lp, cell)
    tol_cmp = Fraction(tol) if exact else tol
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    eps = zero if exact else _PIVOT_EPS

    supports = [row.support for row in lp.rows]
    rhs_vals = _rhs_values(lp.rows, exact)
    T, basis, obj, _, _ = _phase1(supports, rhs_vals, lp.n_vars, exact)
    if obj > tol_cmp:
        raise InfeasibleSystem("no global distribution exists")
    _drive_out_artificials(T, basis, lp.n_vars, exact)

    max_iter = 200 * (lp.n_vars + len(T) + 10)
    ncols = len(T[0]) - 1  # artificial columns remain but may not re-enter
    cost = [zero] * ncols
    cost[var] = one
    vmin, _, _ = _simplex_min(T, basis, cost, range(lp.n_vars), eps, max_iter)
    cost[var] = -one
    neg_vmax, _, _ = _simplex_min(T, basis, cost, range(lp.n_vars), eps, max_iter)
    lo = min(max(float(vmin), 0.0), 1.0) + 0.0
    hi = min(max(float(-neg_vmax), 0.0), 1.0) + 0.0
    if lo > hi:
        lo = hi = (lo + hi) / 2.0
    return lo, hi


def extract_witness(lp: LPSystem, tol: float = DEFAULT_LP_TOL,
                    exact: bool = False) -> Witness:
    """Validated Farkas certificate for an infeasible system."""
    result = solve_feasibility(lp, tol=tol, exact=exact)
    if result.verdict is Verdict.NONCONTEXTUAL:
        raise NotInfeasible("system admits a global distribution")
    assert result.witness is not None
    return result.witness
