"""Dense complex linear algebra for projective decompositions of the identity.

An observable is any finite Hermitian matrix.  Its distinct eigenvalues,
with eigenspaces grouped into projectors, form a projective decomposition
of the identity (PDI) -- an ordered list of mutually orthogonal projectors
summing to the identity, one per outcome.  Everything downstream (contexts,
feasibility, simulation) consumes PDIs in the canonical order produced
here: eigenvalues strictly decreasing.

All values are immutable after construction and all functions are pure;
arrays held by the dataclasses are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DidNotConverge, DimensionMismatch, Incompatible, NotHermitian, OutOfRange
from .reports import CheckEntry, CheckReport

DEFAULT_GROUP_TOL = 1e-8     # relative eigenvalue-grouping tolerance
DEFAULT_COMMUTE_TOL = 1e-9   # relative commutation tolerance
JACOBI_CONVERGENCE = 1e-12   # off-diagonal Frobenius norm, relative
_MAX_SWEEPS = 100


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex array with finite entries."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be nonempty")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise OutOfRange(f"{name} contains non-finite entries")
    return a


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def hermiticity_residual(m: np.ndarray) -> float:
    return frobenius(m - m.conj().T)


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent matrix with integer rank = trace."""

    matrix: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, m, tol: float = 1e-9) -> "Projector":
        a = as_complex_matrix(m, "projector")
        n = a.shape[0]
        if hermiticity_residual(a) > tol * n:
            raise NotHermitian(f"projector Hermiticity residual {hermiticity_residual(a):.3e}")
        idem = frobenius(a @ a - a)
        if idem > tol * n:
            raise OutOfRange(f"projector idempotency residual {idem:.3e}")
        tr = float(np.trace(a).real)
        rank = round(tr)
        if abs(tr - rank) > tol * n or rank < 0:
            raise OutOfRange(f"projector trace {tr!r} is not a nonnegative integer")
        return cls(matrix=a, rank=rank)


@dataclass(frozen=True, eq=False)
class PDI:
    """Projective decomposition of the identity, eigenvalues strictly decreasing."""

    blocks: tuple[tuple[float, Projector], ...]
    dim: int

    @property
    def eigenvalues(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.blocks)

    @property
    def projectors(self) -> tuple[Projector, ...]:
        return tuple(p for _, p in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True, eq=False)
class Refinement:
    """Common refinement of PDIs: blocks tagged with joint outcome tuples."""

    blocks: tuple[tuple[tuple[float, ...], Projector], ...]
    dim: int


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Holder for a state matrix; full checks live in scenario.validate_density."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def jacobi_eigh(m: np.ndarray,
                convergence: float = JACOBI_CONVERGENCE,
                max_sweeps: int = _MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigensystem of a complex Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors); column ``k`` of the second array is
    the eigenvector for the ``k``-th eigenvalue.  Convergence is declared
    when the off-diagonal Frobenius norm drops below ``convergence`` times
    the Frobenius norm of the input.
    """
    a = as_complex_matrix(m).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = frobenius(a)
    if scale == 0.0 or n == 1:
        return np.real(np.diag(a)).copy(), v
    threshold = convergence * scale
    # below this, an entry is not worth a rotation on its own
    rotate_floor = threshold / (n * n)

    for _ in range(max_sweeps):
        off = frobenius(a - np.diag(np.diag(a)))
        if off <= threshold:
            diag = np.real(np.diag(a)).copy()
            return diag, v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= rotate_floor:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                phi = 0.5 * math.atan2(2.0 * mag, aqq - app)
                c = math.cos(phi)
                s = math.sin(phi)
                # unitary differs from identity only in the (p, q) plane:
                # U[p,p]=c, U[p,q]=s*phase, U[q,p]=-s*conj(phase), U[q,q]=c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - s * np.conj(phase) * vcol_q
                v[:, q] = s * phase * vcol_p + c * vcol_q
    raise DidNotConverge(f"Jacobi sweep limit {max_sweeps} reached for dim {n}")


def spectral_decompose(m, tol: float = DEFAULT_GROUP_TOL) -> PDI:
    """PDI of a Hermitian matrix: eigenvalues grouped within ``tol * ||m||_F``.

    Blocks are ordered by strictly decreasing eigenvalue; each projector is
    the sum of outer products of the group's eigenvectors.
    """
    a = as_complex_matrix(m)
    n = a.shape[0]
    norm = frobenius(a)
    herm = hermiticity_residual(a)
    if herm > tol * max(norm, 1.0):
        raise NotHermitian(f"Hermiticity residual {herm:.3e} exceeds tolerance")
    sym = (a + a.conj().T) / 2.0
    vals, vecs = jacobi_eigh(sym)

    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    gap = tol * norm if norm > 0 else tol

    blocks: list[tuple[float, Projector]] = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and vals[j - 1] - vals[j] <= gap:
            j += 1
        group = vecs[:, i:j]
        proj = group @ group.conj().T
        proj = (proj + proj.conj().T) / 2.0
        blocks.append((float(np.mean(vals[i:j])), Projector(matrix=proj, rank=j - i)))
        i = j
    return PDI(blocks=tuple(blocks), dim=n)


def commutes(m, n, tol: float = DEFAULT_COMMUTE_TOL) -> bool:
    """True iff ``||mn - nm||_F <= tol * ||m||_F * ||n||_F``."""
    a = as_complex_matrix(m, "m")
    b = as_complex_matrix(n, "n")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return frobenius(a @ b - b @ a) <= tol * frobenius(a) * frobenius(b)


def common_refinement(a: PDI, b: PDI, tol: float = DEFAULT_COMMUTE_TOL) -> Refinement:
    """All nonzero products of blocks of two compatible PDIs.

    Each block is tagged with its outcome pair; zero products (Frobenius
    norm at most ``tol``) are omitted.  Ordering follows the canonical
    block order of the inputs, first coordinate major.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim} differ")
    for _, p in a.blocks:
        for _, q in b.blocks:
            if not commutes(p.matrix, q.matrix, tol):
                raise Incompatible("PDIs do not commute blockwise")
    blocks: list[tuple[tuple[float, ...], Projector]] = []
    for av, p in a.blocks:
        for bv, q in b.blocks:
            prod = p.matrix @ q.matrix
            if frobenius(prod) <= tol:
                continue
            sym = (prod + prod.conj().T) / 2.0
            blocks.append(((av, bv), Projector.from_matrix(sym, tol=max(tol, 1e-9))))
    return Refinement(blocks=tuple(blocks), dim=a.dim)


def validate_pdi(p: PDI, tol: float = 1e-9) -> CheckReport:
    """Check every PDI invariant; failures become report entries, not errors."""
    entries: list[CheckEntry] = []
    n = p.dim

    strictly_decreasing = all(
        p.blocks[i][0] > p.blocks[i + 1][0] for i in range(len(p.blocks) - 1)
    )
    entries.append(CheckEntry("eigenvalues strictly decreasing", strictly_decreasing, 0.0))

    for idx, (val, proj) in enumerate(p.blocks):
        herm = hermiticity_residual(proj.matrix)
        entries.append(CheckEntry(f"block {idx} (eig {val:g}) Hermitian", herm <= tol * n, herm))
        idem = frobenius(proj.matrix @ proj.matrix - proj.matrix)
        entries.append(CheckEntry(f"block {idx} idempotent", idem <= tol * n, idem))
        tr = float(np.trace(proj.matrix).real)
        tr_res = abs(tr - round(tr))
        rank_ok = tr_res <= tol * n and round(tr) == proj.rank
        entries.append(CheckEntry(f"block {idx} rank = trace", rank_ok, tr_res))

    for i in range(len(p.blocks)):
        for j in range(i + 1, len(p.blocks)):
            ortho = frobenius(p.blocks[i][1].matrix @ p.blocks[j][1].matrix)
            entries.append(CheckEntry(f"blocks {i},{j} orthogonal", ortho <= tol, ortho))

    total = sum((proj.matrix for _, proj in p.blocks), np.zeros((n, n), dtype=complex))
    comp = frobenius(total - np.eye(n))
    entries.append(CheckEntry("completeness sums to identity", comp <= tol, comp))

    rank_sum = sum(proj.rank for _, proj in p.blocks)
    entries.append(CheckEntry("ranks sum to dim", rank_sum == n, float(abs(rank_sum - n))))
    return CheckReport(entries=tuple(entries))


def born_probability(rho: DensityOperator, p: Projector, tol: float = 1e-9) -> float:
    """Born-rule probability Re(Tr(rho P)), clamped inside [0, 1] near the edges."""
    if rho.dim != p.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs projector dim {p.dim}")
    val = float(np.trace(rho.matrix @ p.matrix).real)
    if val < -tol or val > 1.0 + tol:
        raise OutOfRange(f"Born value {val!r} outside [0, 1]")
    return min(1.0, max(0.0, val))
