"""Contexts and Born-rule context distributions: the empirical model.

A context is a maximal set of pairwise-commuting observables (a maximal
clique of the compatibility graph).  Each context gets one joint Born
distribution over the Cartesian product of its members' eigenvalue lists;
the family of all such tables is the empirical model.  Overlapping
contexts must agree on shared marginals since every table comes from the
same state; check_compatibility asserts that numerically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EmptySubset, Incompatible, IncompatibleMarginals, NotSubset
from .reports import CheckEntry, CheckReport
from .scenario import Scenario
from .spectral import DEFAULT_COMMUTE_TOL, PDI, commutes, spectral_decompose

@dataclass(frozen=True)
class Context:
    """Ordered set of observable indices into the scenario."""

    members: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(self.members)))


@dataclass(frozen=True)
class ContextDistribution:
    """Joint outcome table for one context.

    ``outcomes`` enumerates the full Cartesian product of the members'
    eigenvalue lists (each list in canonical descending order), so
    zero-probability tuples are retained and indexing is stable.
    """

    context: Context
    labels: tuple[str, ...]
    axes: tuple[tuple[float, ...], ...]
    outcomes: tuple[tuple[float, ...], ...]
    probs: tuple[float, ...]

    def as_dict(self) -> dict[tuple[float, ...], float]:
        return dict(zip(self.outcomes, self.probs))

    def total(self) -> float:
        return float(sum(self.probs))


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """One Born table per maximal context, plus the marginal-agreement report."""

    scenario: Scenario | None
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    contexts: tuple[ContextDistribution, ...]
    compatibility: CheckReport

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.axes)


def compatibility_graph(s: Scenario, tol: float = DEFAULT_COMMUTE_TOL) -> list[tuple[int, int]]:
    """Undirected edges (i, j) for every commuting pair of observables."""
    edges = []
    n = len(s.observables)
    for i in range(n):
        for j in range(i + 1, n):
            if commutes(s.observables[i][1], s.observables[j][1], tol):
                edges.append((i, j))
    return edges


def _bron_kerbosch(r: set, p: set, x: set, adj: dict[int, set], out: list):
    if not p and not x:
        out.append(tuple(sorted(r)))
        return
    # pivot on the vertex covering the most candidates, smallest index on ties
    pivot = max(sorted(p | x), key=lambda u: len(p & adj[u]))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch(r | {v}, p & adj[v], x & adj[v], adj, out)
        p = p - {v}
        x = x | {v}


def enumerate_contexts(s: Scenario, tol: float = DEFAULT_COMMUTE_TOL) -> list[Context]:
    """All maximal cliques of the compatibility graph, lexicographically ordered."""
    n = len(s.observables)
    adj: dict[int, set] = {i: set() for i in range(n)}
    for i, j in compatibility_graph(s, tol):
        adj[i].add(j)
        adj[j].add(i)
    cliques: list[tuple[int, ...]] = []
    _bron_kerbosch(set(), set(range(n)), set(), adj, cliques)
    return [Context(members=c) for c in sorted(cliques)]


def _pdis_for(s: Scenario, members: tuple[int, ...], tol: float) -> list[PDI]:
    return [spectral_decompose(s.observables[i][1], tol=max(tol, 1e-12)) for i in members]


def _ordered_product(projectors) -> np.ndarray:
    """Product of commuting projectors in member order, symmetrized stepwise."""
    acc = projectors[0].matrix
    for proj in projectors[1:]:
        acc = (acc @ proj.matrix + proj.matrix @ acc) / 2.0
    return acc


def context_distribution(s: Scenario, c: Context, tol: float = 1e-9) -> ContextDistribution:
    """Born-rule joint table for the context's members.

    Each probability is Re(Tr(rho P_1 ... P_k)) with the member projectors
    multiplied in index order; negative round-off down to -tol is clamped
    to zero.
    """
    for a, b in itertools.combinations(c.members, 2):
        if not commutes(s.observables[a][1], s.observables[b][1], max(tol, DEFAULT_COMMUTE_TOL)):
            raise Incompatible(
                f"observables {s.observables[a][0]} and {s.observables[b][0]} do not commute")
    pdis = _pdis_for(s, c.members, tol)
    axes = tuple(p.eigenvalues for p in pdis)
    labels = tuple(s.observables[i][0] for i in c.members)
    outcomes = []
    probs = []
    rho = s.rho.matrix
    for combo in itertools.product(*(range(len(p)) for p in pdis)):
        prod = _ordered_product([pdis[k].projectors[i] for k, i in enumerate(combo)])
        val = float(np.trace(rho @ prod).real)
        if val < -tol:
            raise IncompatibleMarginals(f"negative Born probability {val!r} beyond tolerance")
        outcomes.append(tuple(axes[k][i] for k, i in enumerate(combo)))
        probs.append(max(0.0, val))
    return ContextDistribution(context=c, labels=labels, axes=axes,
                               outcomes=tuple(outcomes), probs=tuple(probs))


def marginalize(d: ContextDistribution, keep) -> ContextDistribution:
    """Sum out every member not in ``keep`` (a subset of scenario indices)."""
    keep = tuple(sorted(set(keep)))
    if not keep:
        raise EmptySubset("cannot marginalize to an empty set")
    if not set(keep) <= set(d.context.members):
        raise NotSubset(f"{keep} is not a subset of context {d.context.members}")
    pos = [d.context.members.index(k) for k in keep]
    axes = tuple(d.axes[p] for p in pos)
    labels = tuple(d.labels[p] for p in pos)
    outcomes = tuple(itertools.product(*axes))
    sums = {o: 0.0 for o in outcomes}
    for outcome, prob in zip(d.outcomes, d.probs):
        sums[tuple(outcome[p] for p in pos)] += prob
    return ContextDistribution(context=Context(members=keep), labels=labels, axes=axes,
                               outcomes=outcomes, probs=tuple(sums[o] for o in outcomes))


def _compatibility_entries(dists, tol: float) -> tuple[CheckEntry, ...]:
    entries = []
    for i in range(len(dists)):
        for j in range(i + 1, len(dists)):
            shared = tuple(sorted(set(dists[i].context.members) & set(dists[j].context.members)))
            if not shared:
                continue
            mi = marginalize(dists[i], shared)
            mj = marginalize(dists[j], shared)
            disc = max(abs(a - b) for a, b in zip(mi.probs, mj.probs))
            name = f"contexts {dists[i].context.members} & {dists[j].context.members} on {shared}"
            entries.append(CheckEntry(name, disc <= tol, disc))
    return tuple(entries)


def check_compatibility(m: EmpiricalModel, tol: float = 1e-9) -> CheckReport:
    """Compare shared marginals for every overlapping context pair."""
    return CheckReport(entries=_compatibility_entries(m.contexts, tol))


def build_empirical_model(s: Scenario, tol: float = 1e-9) -> EmpiricalModel:
    """Enumerate contexts, tabulate each, and verify marginal agreement.

    A single state guarantees agreement mathematically, so a failed check
    signals numerical breakdown and raises IncompatibleMarginals.
    """
    contexts = enumerate_contexts(s, max(tol, DEFAULT_COMMUTE_TOL))
    dists = tuple(context_distribution(s, c, tol) for c in contexts)
    report = CheckReport(entries=_compatibility_entries(dists, tol))
    if not report.passed:
        worst = max(e.residual for e in report.failures())
        raise IncompatibleMarginals(f"marginal disagreement {worst:.3e} exceeds {tol:g}")
    # every observable sits in at least one maximal context, so its axis can
    # be taken verbatim from a table (keeps eigenvalue floats identical)
    axis_of: dict[int, tuple[str, tuple[float, ...]]] = {}
    for dist in dists:
        for local, member in enumerate(dist.context.members):
            axis_of.setdefault(member, (dist.labels[local], dist.axes[local]))
    axes = tuple(axis_of[i] for i in range(len(s.observables)))
    return EmpiricalModel(scenario=s, axes=axes, contexts=dists, compatibility=report)


def model_from_tables(axes, tables, tol: float = 1e-9) -> EmpiricalModel:
    """Assemble a hand-built model from explicit context tables.

    ``axes`` maps every observable to its outcome list:
    ``((label, (v1, v2, ...)), ...)``; ``tables`` maps member-index tuples
    to ``{outcome tuple: probability}``.  Missing outcome tuples get
    probability zero.  No quantum state is involved, so the compatibility
    report is computed but not enforced.
    """
    axes = tuple((label, tuple(vals)) for label, vals in axes)
    dists = []
    for members, table in tables.items():
        members = tuple(sorted(members))
        sub_axes = tuple(axes[i][1] for i in members)
        labels = tuple(axes[i][0] for i in members)
        outcomes = tuple(itertools.product(*sub_axes))
        probs = tuple(float(table.get(o, 0.0)) for o in outcomes)
        dists.append(ContextDistribution(context=Context(members=members), labels=labels,
                                         axes=sub_axes, outcomes=outcomes, probs=probs))
    dists = tuple(dists)
    report = CheckReport(entries=_compatibility_entries(dists, tol))
    return EmpiricalModel(scenario=None, axes=axes, contexts=dists, compatibility=report)
