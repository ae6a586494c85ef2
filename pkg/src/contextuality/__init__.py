"""Global (non)contextuality of quantum empirical models.

Spectral-decompose observables into projective decompositions of the
identity, build Born-rule context distributions, decide whether a single
global joint distribution reproduces every context table (linear
feasibility with witness extraction), and run a seedable projective
measurement simulator whose per-run counterfactuals expose why the primary
outcome never depends on the co-measured observable.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .contexts import (
    Context,
    ContextDistribution,
    EmpiricalModel,
    build_empirical_model,
    check_compatibility,
    compatibility_graph,
    context_distribution,
    enumerate_contexts,
    marginalize,
    model_from_tables,
)
from .errors import ContextualityError
from .globalfit import (
    FeasibilityResult,
    GlobalTable,
    LPSystem,
    Verdict,
    Witness,
    assemble_lp,
    classify,
    coordinate_range,
    extract_witness,
    solve_feasibility,
)
from .reports import CheckEntry, CheckReport
from .scenario import (
    Scenario,
    builtin_abc,
    builtin_chsh,
    parse_scenario,
    serialize_scenario,
    validate_density,
)
from .simulator import (
    Apparatus,
    FrequencyTable,
    RunRecord,
    TwoApparatusRecord,
    build_apparatus,
    calibrate,
    counterfactual_pair,
    empirical_frequencies,
    infer_property,
    run_batch,
    run_experiment,
    sample_property,
    two_apparatus_run,
)
from .spectral import (
    PDI,
    DensityOperator,
    Projector,
    Refinement,
    born_probability,
    common_refinement,
    commutes,
    spectral_decompose,
    validate_pdi,
)

__all__ = [
    "__version__",
    "Apparatus", "CheckEntry", "CheckReport", "Context", "ContextDistribution",
    "ContextualityError", "DensityOperator", "EmpiricalModel", "FeasibilityResult",
    "FrequencyTable", "GlobalTable", "LPSystem", "PDI", "Projector", "Refinement",
    "RunRecord", "Scenario", "TwoApparatusRecord", "Verdict", "Witness",
    "assemble_lp", "born_probability", "build_apparatus", "build_empirical_model",
    "builtin_abc", "builtin_chsh", "calibrate", "check_compatibility", "classify",
    "common_refinement", "commutes", "compatibility_graph", "context_distribution",
    "coordinate_range", "counterfactual_pair", "empirical_frequencies",
    "enumerate_contexts", "extract_witness", "infer_property", "marginalize",
    "model_from_tables", "parse_scenario", "run_batch", "run_experiment",
    "sample_property", "serialize_scenario", "solve_feasibility",
    "spectral_decompose", "two_apparatus_run", "validate_density", "validate_pdi",
]
