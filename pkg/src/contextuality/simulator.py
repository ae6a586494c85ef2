"""Stochastic projective-measurement simulator with a counterfactual handle.

Each run measures a primary observable together with one of two secondary
observables selected by a handle.  The run is simulated in two stages:

* stage 1 draws ``u1`` and samples the microscopic property (a block of
  the primary decomposition) by inverse CDF over the Born weights; the
  primary pointer is set to that block;
* stage 2 draws ``u2`` and samples the secondary pointer from the
  conditional Born distribution given the sampled property, using the
  decomposition selected by the handle.

``u1`` is consumed before the handle is consulted.  That ordering is the
whole mechanism: the sampled property is fixed before the apparatus
configuration matters, so rerunning the same seed with the other handle
setting reproduces the primary outcome exactly, run by run, not merely in
distribution.  The handle may equivalently be thought of as switched just
before the particle arrives.

Pointer subspaces are represented as integer pointer positions.  Streams
follow the convention in :mod:`contextuality.rng`; identical seed, scenario
and handle give a bit-identical record.
"""

from __future__ import annotations

import dataclasses
import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    CalibrationFailure,
    DegenerateDistribution,
    EmptyInput,
    Incompatible,
    MixedHandles,
    OutOfRange,
    ZeroConditional,
)
from .reports import CheckEntry, CheckReport
from .rng import Xoshiro256StarStar, run_seed, substream_seed
from .scenario import Scenario
from .spectral import DEFAULT_COMMUTE_TOL, PDI, DensityOperator, commutes, spectral_decompose

HANDLES = ("B", "C")


@lru_cache(maxsize=256)
def _blockwise_compatible(primary: PDI, other: PDI) -> bool:
    for _, p in primary.blocks:
        for _, q in other.blocks:
            if not commutes(p.matrix, q.matrix, DEFAULT_COMMUTE_TOL):
                return False
    return True


@dataclass(frozen=True, eq=False)
class Apparatus:
    """Primary decomposition plus one secondary decomposition per handle."""

    primary: PDI
    handle: str
    secondary: dict[str, PDI]
    pointer_map: tuple[int, ...]

    def __post_init__(self):
        if self.handle not in self.secondary:
            raise OutOfRange(f"handle {self.handle!r} not among {sorted(self.secondary)}")
        if sorted(self.pointer_map) != list(range(len(self.primary))):
            raise OutOfRange("pointer_map must be a permutation of the primary blocks")
        for name, pdi in self.secondary.items():
            if not _blockwise_compatible(self.primary, pdi):
                raise Incompatible(f"primary does not commute with handle {name!r}")

    def with_handle(self, handle: str) -> "Apparatus":
        return dataclasses.replace(self, handle=handle)


@dataclass(frozen=True)
class RunRecord:
    """One simulated run, including the sampling distributions it used."""

    seed: int
    handle: str
    property_index: int
    pointer1: int
    pointer2: int
    primary_probs: tuple[float, ...]
    conditional_probs: tuple[float, ...]


@dataclass(frozen=True)
class TwoApparatusRecord:
    seed: int
    first: RunRecord   # handle B apparatus, particle 1
    second: RunRecord  # handle C apparatus, particle 2


@dataclass(frozen=True)
class FrequencyTable:
    """Counts and frequencies per outcome tuple over a homogeneous batch."""

    counts: dict[tuple, int]
    total: int

    def frequency(self, outcome) -> float:
        return self.counts.get(tuple(outcome), 0) / self.total


def build_apparatus(s: Scenario, primary_label: str | None = None,
                    handle_labels: dict[str, str] | None = None,
                    handle: str = "B", tol: float = 1e-9) -> Apparatus:
    """Derive the two-handle apparatus from a scenario.

    By default the first observable is the primary and handles B and C
    select the next two observables commuting with it.
    """
    labels = [label for label, _ in s.observables]
    primary_label = primary_label or labels[0]
    primary_matrix = s.matrix(primary_label)
    if handle_labels is None:
        compatible = [label for label in labels
                      if label != primary_label
                      and commutes(primary_matrix, s.matrix(label), DEFAULT_COMMUTE_TOL)]
        if len(compatible) < 2:
            raise Incompatible(
                f"need two observables commuting with {primary_label!r}, found {compatible}")
        handle_labels = {"B": compatible[0], "C": compatible[1]}
    group_tol = max(tol, 1e-12)
    primary = spectral_decompose(primary_matrix, tol=group_tol)
    secondary = {h: spectral_decompose(s.matrix(lab), tol=group_tol)
                 for h, lab in handle_labels.items()}
    return Apparatus(primary=primary, handle=handle,
                     secondary=secondary,
                     pointer_map=tuple(range(len(primary))))


@lru_cache(maxsize=32)
def _default_apparatus(s: Scenario) -> Apparatus:
    return build_apparatus(s)


@lru_cache(maxsize=256)
def _handle_variant(app: Apparatus, handle: str) -> Apparatus:
    return app if app.handle == handle else app.with_handle(handle)


def _born_vector(rho: np.ndarray, pdi: PDI) -> tuple[float, ...]:
    return tuple(max(0.0, float(np.trace(rho @ p.matrix).real)) for _, p in pdi.blocks)


@lru_cache(maxsize=128)
def _tables_cached(s: Scenario, primary: PDI, secondary_items):
    rho = s.rho.matrix
    weights = _born_vector(rho, primary)
    conditionals: dict[str, tuple[tuple[float, ...], ...]] = {}
    for name, pdi in secondary_items:
        per_property = []
        for j, (_, p) in enumerate(primary.blocks):
            if weights[j] <= 0.0:
                per_property.append(tuple(0.0 for _ in pdi.blocks))
                continue
            joint = []
            for _, q in pdi.blocks:
                prod = p.matrix @ q.matrix
                prod = (prod + prod.conj().T) / 2.0
                joint.append(max(0.0, float(np.trace(rho @ prod).real)))
            total = sum(joint)
            per_property.append(tuple(v / total for v in joint) if total > 0
                                else tuple(0.0 for _ in joint))
        conditionals[name] = tuple(per_property)
    return weights, sum(weights), conditionals


@lru_cache(maxsize=256)
def _sampling_tables(s: Scenario, app: Apparatus):
    """Stage-1 weights (and their sum) plus per-property conditional tables.

    Keyed on the underlying decompositions, so handle flips and batch loops
    reuse one computation.
    """
    items = tuple(sorted(app.secondary.items(), key=lambda kv: kv[0]))
    return _tables_cached(s, app.primary, items)


def _inverse_cdf(probs, u: float) -> int:
    """Index of the block whose CDF interval contains ``u``; zero-probability
    blocks are skipped even at interval boundaries."""
    cum = 0.0
    last_positive = -1
    for k, p in enumerate(probs):
        if p <= 0.0:
            continue
        cum += p
        last_positive = k
        if u < cum:
            return k
    if last_positive < 0:
        raise DegenerateDistribution("all sampling weights vanish")
    return last_positive


def sample_property(rho: DensityOperator, pdi: PDI, u: float, tol: float = 1e-9) -> int:
    """Inverse-CDF sample over the Born weights of the decomposition's blocks."""
    if not 0.0 <= u < 1.0:
        raise OutOfRange(f"u must lie in [0, 1), got {u!r}")
    probs = _born_vector(rho.matrix, pdi)
    if abs(sum(probs) - 1.0) > max(tol, 1e-9) * pdi.dim:
        raise DegenerateDistribution(f"weights sum to {sum(probs)!r}")
    return _inverse_cdf(probs, u)


def _run_with_tables(app: Apparatus, seed: int, tol: float, tables) -> RunRecord:
    primary, weight_sum, conditionals = tables
    if abs(weight_sum - 1.0) > max(tol, 1e-9) * app.primary.dim:
        raise DegenerateDistribution(f"primary weights sum to {weight_sum!r}")
    stream = Xoshiro256StarStar(seed)
    u1 = stream.uniform()
    prop = _inverse_cdf(primary, u1)
    pointer1 = app.pointer_map[prop]

    u2 = stream.uniform()
    if primary[prop] <= 0.0:
        raise ZeroConditional(f"sampled property {prop} has vanishing weight")
    cond = conditionals[app.handle][prop]
    pointer2 = _inverse_cdf(cond, u2)
    return RunRecord(seed=seed, handle=app.handle, property_index=prop,
                     pointer1=pointer1, pointer2=pointer2,
                     primary_probs=primary, conditional_probs=cond)


def run_experiment(s: Scenario, app: Apparatus, seed: int, tol: float = 1e-9) -> RunRecord:
    """Simulate one run; the stage-1 draw is consumed before the handle is read."""
    return _run_with_tables(app, seed, tol, _sampling_tables(s, app))


def counterfactual_pair(s: Scenario, app: Apparatus, seed: int,
                        tol: float = 1e-9) -> tuple[RunRecord, RunRecord]:
    """The same seeded run under both handle settings.

    Sharing the seed shares ``u1``, so both records carry the same property
    index and primary pointer; only the secondary outcome may differ.
    """
    rec_b = run_experiment(s, _handle_variant(app, "B"), seed, tol)
    rec_c = run_experiment(s, _handle_variant(app, "C"), seed, tol)
    return rec_b, rec_c


def run_batch(s: Scenario, app: Apparatus, runs: int, seed: int,
              tol: float = 1e-9) -> list[RunRecord]:
    """Runs with seeds ``seed ^ i`` for i in 0..runs-1."""
    tables = _sampling_tables(s, app)
    return [_run_with_tables(app, run_seed(seed, i), tol, tables) for i in range(runs)]


def calibrate(s: Scenario, app: Apparatus, block: int, runs: int, seed: int,
              tol: float = 1e-9) -> CheckReport:
    """Send eigenstates of one primary block; every pointer must match it.

    The calibration state is the block's projector divided by its rank.
    """
    if not 0 <= block < len(app.primary):
        raise OutOfRange(f"block {block} out of range")
    proj = app.primary.projectors[block]
    if proj.rank == 0:
        raise OutOfRange(f"block {block} has rank zero")
    cal = dataclasses.replace(s, name=f"{s.name}|cal{block}",
                              rho=DensityOperator(matrix=proj.matrix / proj.rank))
    for i in range(runs):
        rec = run_experiment(cal, app, run_seed(seed, i), tol)
        if rec.pointer1 != block:
            raise CalibrationFailure(
                f"run {i}: pointer at {rec.pointer1}, expected {block}", run=i)
    return CheckReport(entries=(
        CheckEntry(f"calibration block {block} over {runs} runs", True, 0.0),
    ))


def infer_property(r: RunRecord) -> int:
    """Property index implied by the primary pointer (their joint law is diagonal)."""
    return r.pointer1


def two_apparatus_run(s: Scenario, seed: int, tol: float = 1e-9) -> TwoApparatusRecord:
    """Two identically-prepared particles measured by the B and C apparatuses.

    Particle k draws from substream k of the seed, so the two outcome pairs
    are independent; the joint law is the product of the two context tables
    over the tensor-product outcome space.
    """
    app = _default_apparatus(s)
    rec1 = run_experiment(s, _handle_variant(app, "B"), substream_seed(seed, 1), tol)
    rec2 = run_experiment(s, _handle_variant(app, "C"), substream_seed(seed, 2), tol)
    return TwoApparatusRecord(seed=seed, first=rec1, second=rec2)


def empirical_frequencies(records, apparatus: Apparatus | None = None) -> FrequencyTable:
    """Counts per (primary, secondary) outcome over a single-handle batch.

    Keys are (pointer1, pointer2) index pairs, or eigenvalue pairs when the
    apparatus is supplied.
    """
    records = list(records)
    if not records:
        raise EmptyInput("no records to aggregate")
    handles = {r.handle for r in records}
    if len(handles) > 1:
        raise MixedHandles(f"records mix handles {sorted(handles)}")
    counter: Counter = Counter()
    if apparatus is None:
        for r in records:
            counter[(r.pointer1, r.pointer2)] += 1
    else:
        primary_vals = apparatus.primary.eigenvalues
        secondary_vals = apparatus.secondary[next(iter(handles))].eigenvalues
        for r in records:
            counter[(primary_vals[r.pointer1], secondary_vals[r.pointer2])] += 1
    return FrequencyTable(counts=dict(counter), total=len(records))


def pair_frequencies(records) -> FrequencyTable:
    """Counts per (a1, b, a2, c) pointer-index tuple over two-apparatus records."""
    records = list(records)
    if not records:
        raise EmptyInput("no records to aggregate")
    counter: Counter = Counter()
    for r in records:
        counter[(r.first.pointer1, r.first.pointer2,
                 r.second.pointer1, r.second.pointer2)] += 1
    return FrequencyTable(counts=dict(counter), total=len(records))


def record_to_json(r: RunRecord) -> str:
    return json.dumps({"seed": r.seed, "handle": r.handle, "property": r.property_index,
                       "pointer1": r.pointer1, "pointer2": r.pointer2})


def write_run_log(records, fh) -> None:
    """Stream records as JSON-lines, one object per run."""
    for r in records:
        fh.write(record_to_json(r))
        fh.write("\n")
