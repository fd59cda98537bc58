"""Delta balls, colligations, and transfer-function evaluation.

A ball is cut out by an I x J matrix ``delta`` of free polynomials via
``|| delta(x) || < 1``; the diagonal choice gives the polydisk and the row
choice gives the row ball.  A realization is an isometric colligation
V = [[A, B], [C, D]] from C (+) M^I to C (+) M^J together with ``delta``;
its transfer function is

    F(x) = A (x) 1  +  B (x) 1 . 1 (x) delta(x) . [1 - D (x) 1 . 1 (x) delta(x)]^{-1} . C (x) 1.

Tensor ordering convention, fixed once for the whole package: vectors are
indexed (mu, i, t) with the auxiliary index mu in [m] slowest, the block
index i in [I] or [J] in the middle, and the matrix coordinate t in [n]
fastest.  Concretely, delta(x) amplifies to kron(I_m, delta(x)) and B, C, D
amplify to kron(., I_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .freepoly import FreePoly
from .linalg import (
    MatrixTuple,
    SingularMatrixError,
    as_matrix,
    inverse,
    kron,
    operator_norm,
)

__all__ = [
    "PolyMatrix",
    "delta_polydisk",
    "delta_rowball",
    "eval_delta",
    "in_ball",
    "in_exhaustion",
    "Realization",
    "check_isometry",
    "eval_realization",
    "ScanReport",
    "contractivity_scan",
    "mobius_realization",
    "identity_realization",
    "ResolventSingularError",
    "SamplerStarvationError",
    "NotIsometricError",
]

ISOMETRY_BUILD_TOL = 1e-10
ISOMETRY_SCAN_TOL = 1e-8


class ResolventSingularError(ArithmeticError):
    """The resolvent in the transfer formula failed to invert."""


class SamplerStarvationError(RuntimeError):
    """Rejection sampling accepted too few points to fill the request."""


class NotIsometricError(ValueError):
    """An operation required an isometric colligation and did not get one."""


class PolyMatrix:
    """Rectangular grid of free polynomials with a common arity."""

    __slots__ = ("rows", "cols", "arity", "entries")

    def __init__(self, entries):
        grid = tuple(tuple(row) for row in entries)
        if not grid or not grid[0]:
            raise ValueError("a polynomial matrix needs at least one entry")
        cols = len(grid[0])
        if any(len(row) != cols for row in grid):
            raise ValueError("ragged polynomial matrix")
        d = grid[0][0].arity
        for row in grid:
            for p in row:
                if not isinstance(p, FreePoly):
                    raise TypeError("entries must be FreePoly")
                if p.arity != d:
                    raise ValueError("polynomial matrix entries differ in arity")
        self.rows = len(grid)
        self.cols = cols
        self.arity = d
        self.entries = grid

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols}, arity={self.arity})"

    def max_degree(self) -> int:
        return max(p.degree() for row in self.entries for p in row)


def delta_polydisk(d: int) -> PolyMatrix:
    """Diagonal d x d polynomial matrix diag(x0, ..., x{d-1})."""
    if d < 1:
        raise ValueError("need at least one variable")
    return PolyMatrix(
        [
            [FreePoly.letter(d, i) if i == j else FreePoly.zero(d) for j in range(d)]
            for i in range(d)
        ]
    )


def delta_rowball(d: int) -> PolyMatrix:
    """Row 1 x d polynomial matrix (x0 x1 ... x{d-1})."""
    if d < 1:
        raise ValueError("need at least one variable")
    return PolyMatrix([[FreePoly.letter(d, j) for j in range(d)]])


def eval_delta(delta: PolyMatrix, x: MatrixTuple) -> np.ndarray:
    """The (I*n) x (J*n) block matrix with (i, j) block delta[i][j](x)."""
    if delta.arity != x.arity:
        raise ValueError(f"delta has arity {delta.arity}, point has arity {x.arity}")
    n = x.dim
    out = np.zeros((delta.rows * n, delta.cols * n), dtype=np.complex128)
    for i in range(delta.rows):
        for j in range(delta.cols):
            p = delta.entries[i][j]
            if not p.is_zero:
                out[i * n : (i + 1) * n, j * n : (j + 1) * n] = p.evaluate(x)
    return out


def in_ball(delta: PolyMatrix, x: MatrixTuple, margin: float = 0.0) -> bool:
    """Whether ``|| delta(x) || < 1 - margin``."""
    if not 0.0 <= margin < 1.0:
        raise ValueError("margin must be in [0, 1)")
    return operator_norm(eval_delta(delta, x)) < 1.0 - margin


def in_exhaustion(delta: PolyMatrix, x: MatrixTuple, k: int) -> bool:
    """Membership in the k-th exhaustion set.

    Requires ``|| delta(x) || <= 1 - 1/k`` and ``|| x || <= k`` with the
    tuple norm taken as the largest component norm.
    """
    if k < 1:
        raise ValueError("exhaustion index must be at least 1")
    if operator_norm(eval_delta(delta, x)) > 1.0 - 1.0 / k:
        return False
    return x.max_norm() <= k


@dataclass(frozen=True)
class Realization:
    """Colligation (A, B, C, D) over delta with auxiliary dimension m.

    Shapes: A scalar, B is 1 x (m*I), C is (m*J) x 1, D is (m*J) x (m*I),
    where I, J are the row and column counts of ``delta``.
    """

    delta: PolyMatrix
    m: int
    A: complex
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("auxiliary dimension must be at least 1")
        mi = self.m * self.delta.rows
        mj = self.m * self.delta.cols
        b = as_matrix(self.B)
        c = as_matrix(self.C)
        d = as_matrix(self.D)
        if b.shape != (1, mi):
            raise ValueError(f"B must be 1x{mi}, got {b.shape}")
        if c.shape != (mj, 1):
            raise ValueError(f"C must be {mj}x1, got {c.shape}")
        if d.shape != (mj, mi):
            raise ValueError(f"D must be {mj}x{mi}, got {d.shape}")
        for name, arr in (("B", b), ("C", c), ("D", d)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "A", complex(self.A))

    @property
    def arity(self) -> int:
        return self.delta.arity

    def colligation(self) -> np.ndarray:
        """The (1 + m*J) x (1 + m*I) block matrix [[A, B], [C, D]]."""
        return np.block([[np.array([[self.A]], dtype=np.complex128), self.B], [self.C, self.D]])


def check_isometry(r: Realization) -> float:
    """Residual ``|| V* V - I ||`` of the colligation; 0 for an exact isometry."""
    v = r.colligation()
    gram = v.conj().T @ v
    return operator_norm(gram - np.eye(gram.shape[0], dtype=np.complex128))


def eval_realization(r: Realization, x: MatrixTuple) -> np.ndarray:
    """Transfer-function value at ``x`` under the fixed tensor ordering.

    Raises :class:`ResolventSingularError` when the inner inverse fails,
    which signals that ``x`` lies outside the natural domain.
    """
    if x.arity != r.arity:
        raise ValueError(f"realization has arity {r.arity}, point has arity {x.arity}")
    n = x.dim
    eye_n = np.eye(n, dtype=np.complex128)
    dlt = kron(np.eye(r.m, dtype=np.complex128), eval_delta(r.delta, x))
    d_amp = kron(r.D, eye_n)
    res_dim = r.m * r.delta.cols * n
    try:
        resolvent = inverse(np.eye(res_dim, dtype=np.complex128) - d_amp @ dlt)
    except SingularMatrixError as exc:
        raise ResolventSingularError(str(exc)) from exc
    return r.A * eye_n + kron(r.B, eye_n) @ dlt @ resolvent @ kron(r.C, eye_n)


def mobius_realization(a: complex) -> Realization:
    """One-variable realization of z -> (z - a) (1 - conj(a) z)^{-1}, |a| < 1."""
    a = complex(a)
    if abs(a) >= 1:
        raise ValueError("the parameter must lie in the open unit disk")
    s = math.sqrt(1.0 - abs(a) ** 2)
    return Realization(
        delta=delta_polydisk(1),
        m=1,
        A=-a,
        B=np.array([[s]]),
        C=np.array([[s]]),
        D=np.array([[a.conjugate()]]),
    )


def identity_realization() -> Realization:
    """One-variable realization of x -> x0 (permutation colligation)."""
    return Realization(
        delta=delta_polydisk(1),
        m=1,
        A=0.0,
        B=np.array([[1.0]]),
        C=np.array([[1.0]]),
        D=np.array([[0.0]]),
    )


@dataclass(frozen=True)
class ScanReport:
    """Outcome of a contractivity scan over sampled ball points."""

    dim: int
    requested: int
    collected: int
    draws: int
    max_norm: float
    threshold: float
    passed: bool
    seed: int

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "requested": self.requested,
            "collected": self.collected,
            "draws": self.draws,
            "max_norm": self.max_norm,
            "threshold": self.threshold,
            "passed": self.passed,
            "seed": self.seed,
        }


def _sample_tuple(seed: int, index: int, d: int, n: int) -> MatrixTuple:
    # Counter-based seeding: each draw owns an independent stream, so the
    # report does not depend on evaluation order.  Entries are standard
    # complex Gaussians (unit second moment) scaled by 0.5/sqrt(n), which
    # keeps the top singular value near 0.5 plus edge fluctuations.
    rng = np.random.default_rng((seed, index))
    s = 0.5 / math.sqrt(2.0 * n)
    comps = [
        s * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        for _ in range(d)
    ]
    return MatrixTuple(comps)


def contractivity_scan(
    r: Realization,
    n: int,
    samples: int,
    seed: int,
    *,
    margin: float = 0.05,
    max_draws: int = 100_000,
    norm_tol: float = 1e-8,
) -> ScanReport:
    """Sample ball points and report the largest transfer-function norm.

    Requires the colligation to be isometric (residual at most 1e-8); an
    isometric colligation must stay contractive, so the scan passes iff the
    sampled maximum is at most 1 + ``norm_tol``.
    """
    resid = check_isometry(r)
    if resid > ISOMETRY_SCAN_TOL:
        raise NotIsometricError(
            f"colligation is not isometric (residual {resid:.3e} > {ISOMETRY_SCAN_TOL:.0e})"
        )
    if samples < 1:
        raise ValueError("need at least one sample")
    d = r.arity
    max_norm = 0.0
    collected = 0
    draws = 0
    while collected < samples and draws < max_draws:
        x = _sample_tuple(seed, draws, d, n)
        draws += 1
        if not in_ball(r.delta, x, margin):
            continue
        collected += 1
        max_norm = max(max_norm, operator_norm(eval_realization(r, x)))
    if collected < samples:
        raise SamplerStarvationError(
            f"accepted {collected}/{samples} after {draws} draws "
            f"(rate {collected / max(draws, 1):.4%})"
        )
    threshold = 1.0 + norm_tol
    return ScanReport(
        dim=n,
        requested=samples,
        collected=collected,
        draws=draws,
        max_norm=max_norm,
        threshold=threshold,
        passed=max_norm <= threshold,
        seed=seed,
    )
