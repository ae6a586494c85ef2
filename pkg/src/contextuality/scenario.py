"""Scenario definition, JSON ingestion, and built-in constructions.

A scenario is a named set of Hermitian observables on one Hilbert space
plus a density operator.  The file format is JSON with complex numbers as
``[re, im]`` pairs:

    {"name": str, "dim": int,
     "observables": [{"label": str, "matrix": [[[re, im], ...], ...]}],
     "rho": [[[re, im], ...], ...]}

Matrices are row-major dim x dim arrays of ``[re, im]`` pairs; unknown keys
are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadTrace, NotHermitian, NotPositive, OutOfRange, ParseError, ValidationError
from .spectral import (
    DensityOperator,
    as_complex_matrix,
    frobenius,
    hermiticity_residual,
    spectral_decompose,
)

DEFAULT_CHSH_ANGLES = (0.0, math.pi / 2, 3 * math.pi / 4, math.pi / 4)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    observables: tuple[tuple[str, np.ndarray], ...]
    rho: DensityOperator
    dim: int

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.observables)

    def matrix(self, label: str) -> np.ndarray:
        for lab, m in self.observables:
            if lab == label:
                return m
        raise KeyError(label)


def validate_density(m, tol: float = 1e-9) -> DensityOperator:
    """Check Hermiticity, unit trace, and positive semidefiniteness."""
    a = as_complex_matrix(m, "rho")
    herm = hermiticity_residual(a)
    if herm > tol * max(frobenius(a), 1.0):
        raise NotHermitian(f"rho Hermiticity residual {herm:.3e}")
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > tol:
        raise BadTrace(f"rho trace {tr!r} differs from 1")
    pdi = spectral_decompose(a, tol=min(tol, 1e-8))
    min_eig = min(pdi.eigenvalues)
    if min_eig < -tol:
        raise NotPositive(f"rho minimum eigenvalue {min_eig!r}")
    return DensityOperator(matrix=a)


def _checked_scenario(name: str, observables, rho_matrix, dim: int, tol: float) -> Scenario:
    if dim <= 0:
        raise ValidationError("dim", f"dimension must be positive, got {dim}")
    seen: set[str] = set()
    checked: list[tuple[str, np.ndarray]] = []
    for label, m in observables:
        if label in seen:
            raise ValidationError(label, "duplicate observable label")
        seen.add(label)
        a = as_complex_matrix(m, label)
        if a.shape[0] != dim:
            raise ValidationError(label, f"dimension {a.shape[0]} does not match scenario dim {dim}")
        if hermiticity_residual(a) > tol * max(frobenius(a), 1.0):
            raise ValidationError(label, "observable is not Hermitian")
        checked.append((label, a))
    try:
        rho = validate_density(rho_matrix, tol=tol)
    except (NotHermitian, NotPositive, BadTrace, OutOfRange) as exc:
        raise ValidationError("rho", str(exc)) from exc
    if rho.dim != dim:
        raise ValidationError("rho", f"dimension {rho.dim} does not match scenario dim {dim}")
    return Scenario(name=name, observables=tuple(checked), rho=rho, dim=dim)


def _matrix_from_json(entries, dim: int, label: str) -> np.ndarray:
    if not isinstance(entries, list) or len(entries) != dim:
        raise ValidationError(label, f"matrix must have {dim} rows")
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != dim:
            raise ValidationError(label, f"row {i} must have {dim} entries")
        for j, pair in enumerate(row):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
                raise ValidationError(label, f"entry ({i},{j}) must be an [re, im] pair")
            out[i, j] = complex(pair[0], pair[1])
    return out


def parse_scenario(text: str | bytes, tol: float = 1e-9) -> Scenario:
    """Parse and fully validate a scenario from its JSON serialization."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    expected = {"name", "dim", "observables", "rho"}
    unknown = set(doc) - expected
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown key")
    missing = expected - set(doc)
    if missing:
        raise ParseError(f"missing key {sorted(missing)[0]!r}")
    if not isinstance(doc["name"], str):
        raise ValidationError("name", "must be a string")
    if not isinstance(doc["dim"], int) or isinstance(doc["dim"], bool):
        raise ValidationError("dim", "must be an integer")
    dim = doc["dim"]
    if not isinstance(doc["observables"], list) or not doc["observables"]:
        raise ValidationError("observables", "must be a nonempty list")
    observables = []
    for k, entry in enumerate(doc["observables"]):
        if not isinstance(entry, dict):
            raise ValidationError(f"observables[{k}]", "must be an object")
        extra = set(entry) - {"label", "matrix"}
        if extra:
            raise ValidationError(sorted(extra)[0], "unknown key")
        if "label" not in entry or not isinstance(entry["label"], str):
            raise ValidationError(f"observables[{k}]", "missing string label")
        if "matrix" not in entry:
            raise ValidationError(entry["label"], "missing matrix")
        observables.append((entry["label"], _matrix_from_json(entry["matrix"], dim, entry["label"])))
    rho = _matrix_from_json(doc["rho"], dim, "rho")
    return _checked_scenario(doc["name"], observables, rho, dim, tol)


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(m[i, j].real), float(m[i, j].imag)] for j in range(m.shape[1])]
            for i in range(m.shape[0])]


def serialize_scenario(s: Scenario, indent: int | None = 2) -> str:
    doc = {
        "name": s.name,
        "dim": s.dim,
        "observables": [{"label": label, "matrix": _matrix_to_json(m)}
                        for label, m in s.observables],
        "rho": _matrix_to_json(s.rho.matrix),
    }
    return json.dumps(doc, indent=indent)


def builtin_abc(p: float) -> Scenario:
    """Three qutrit observables: one diagonal, two acting inside its degenerate plane.

    The state is diag(p, r, r) with r = (1 - p) / 2.  The first observable
    commutes with the other two, which do not commute with each other.
    """
    if not (0.0 <= p <= 1.0) or not math.isfinite(p):
        raise OutOfRange(f"p must lie in [0, 1], got {p!r}")
    r = (1.0 - p) / 2.0
    a = np.diag([-1.0, 1.0, 1.0]).astype(complex)
    b = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    c = np.diag([1.0, 1.0, -1.0]).astype(complex)
    rho = np.diag([p, r, r]).astype(complex)
    return Scenario(name=f"abc(p={p:.12g})",
                    observables=(("A", a), ("B", b), ("C", c)),
                    rho=DensityOperator(matrix=rho), dim=3)


def builtin_chsh(state: str = "singlet",
                 angles: tuple[float, float, float, float] = DEFAULT_CHSH_ANGLES) -> Scenario:
    """Two-qubit CHSH scenario with x-z plane measurement directions.

    ``angles`` are (theta_A, theta_A', theta_B, theta_B'); party a carries
    A and A', party b carries B and B'.  The default angles realize the
    maximal quantum violation on the singlet.
    """
    if state not in ("singlet", "product00"):
        raise OutOfRange(f"state must be 'singlet' or 'product00', got {state!r}")
    if len(angles) != 4 or not all(math.isfinite(t) for t in angles):
        raise OutOfRange("angles must be 4 finite reals")
    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)

    def direction(theta: float) -> np.ndarray:
        return math.cos(theta) * sz + math.sin(theta) * sx

    t1, t2, t3, t4 = angles
    obs = (
        ("A", np.kron(direction(t1), eye)),
        ("A'", np.kron(direction(t2), eye)),
        ("B", np.kron(eye, direction(t3))),
        ("B'", np.kron(eye, direction(t4))),
    )
    if state == "singlet":
        psi = np.zeros(4, dtype=complex)
        psi[1] = 1.0 / math.sqrt(2.0)   # |01>
        psi[2] = -1.0 / math.sqrt(2.0)  # |10>
    else:
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1.0                    # |00>
    rho = np.outer(psi, psi.conj())
    return Scenario(name=f"chsh({state})",
                    observables=obs, rho=DensityOperator(matrix=rho), dim=4)
