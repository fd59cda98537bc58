"""Dense complex matrix arithmetic and the block assembly primitives.

Matrices are plain numpy arrays of dtype complex128.  A point of the
d-variable calculus is a :class:`MatrixTuple`, a d-tuple of equal-size
square matrices; directions live in the same type.  All operations here
are pure and all returned tuples are immutable, so values can be shared
freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

__all__ = [
    "SingularMatrixError",
    "NonConvergenceError",
    "as_matrix",
    "matmul",
    "inverse",
    "operator_norm",
    "kron",
    "BlockLayout",
    "extract_block",
    "MatrixTuple",
    "direct_sum",
    "bidiagonal_block",
]

PIVOT_RTOL = 1e-12
NORM_TOL = 1e-12
NORM_RESIDUAL_TOL = 1e-10
NORM_MAX_ITER = 10_000


class SingularMatrixError(ArithmeticError):
    """Raised when elimination meets a pivot too small to trust."""


class NonConvergenceError(RuntimeError):
    """Raised when the norm iteration exhausts its iteration budget."""


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-d complex128 array and reject non-finite entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def inverse(a) -> np.ndarray:
    """Invert a square matrix by LU elimination with partial pivoting.

    A pivot whose magnitude falls below ``1e-12`` times the row-sum norm of
    ``a`` raises :class:`SingularMatrixError`.  The elimination order is
    fixed, so the result is deterministic.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"cannot invert a non-square {a.shape} matrix")
    if n == 0:
        return a.copy()
    scale = float(np.max(np.sum(np.abs(a), axis=1)))
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")

    lu = a.copy()
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= PIVOT_RTOL * scale:
            raise SingularMatrixError(
                f"pivot {abs(lu[p, k]):.3e} below {PIVOT_RTOL * scale:.3e} at column {k}"
            )
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])

    # Solve L (U X) = P I for all right-hand sides at once.
    x = np.eye(n, dtype=np.complex128)[perm]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


def _top_eig_dense(g: np.ndarray) -> float:
    try:
        top = float(np.linalg.eigvalsh(g)[-1])
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"dense eigensolve failed: {exc}") from exc
    return float(np.sqrt(max(top, 0.0)))


def operator_norm(a, *, tol: float = NORM_TOL, max_iter: int = NORM_MAX_ITER) -> float:
    """Largest singular value of ``a`` (rectangular allowed).

    Power iteration on the smaller Gram matrix with a fixed all-ones start
    vector; Gram dimensions up to 4 use a direct Hermitian eigensolve.  The
    iteration stops when the Rayleigh quotient moves by less than ``tol``
    relative AND the eigen-residual confirms the value (a quotient can stall
    between two nearly equal top eigenvalues without being accurate).  A run
    that exhausts the budget, or loses the start vector to the kernel, falls
    back to the dense eigensolve; the output is deterministic either way.
    """
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    if a.shape[0] < a.shape[1]:
        g = a @ a.conj().T
    else:
        g = a.conj().T @ a
    g = 0.5 * (g + g.conj().T)
    m = g.shape[0]
    if m <= 4:
        return _top_eig_dense(g)

    v = np.full(m, 1.0 / np.sqrt(m), dtype=np.complex128)
    lam_prev = np.inf
    stalled = 0
    for _ in range(max_iter):
        w = g @ v
        lam = float(np.real(np.vdot(v, w)))
        if abs(lam - lam_prev) <= tol * max(1.0, abs(lam)):
            # |lam - lambda_max| is bounded by the residual for Hermitian g
            if float(np.linalg.norm(w - lam * v)) <= NORM_RESIDUAL_TOL * max(1.0, abs(lam)):
                return float(np.sqrt(max(lam, 0.0)))
            # settled quotient with a loud residual means two leaders too
            # close to separate; the dense solve answers exactly
            stalled += 1
            if stalled >= 50:
                break
        else:
            stalled = 0
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            break
        v = w / nw
        lam_prev = lam
    return _top_eig_dense(g)


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``a`` indexing slowest and ``b`` fastest."""
    return np.kron(as_matrix(a), as_matrix(b))


@dataclass(frozen=True)
class BlockLayout:
    """Partition of a matrix into a grid of rectangular blocks."""

    block_rows: tuple[int, ...]
    block_cols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "block_rows", tuple(int(r) for r in self.block_rows))
        object.__setattr__(self, "block_cols", tuple(int(c) for c in self.block_cols))
        if not self.block_rows or not self.block_cols:
            raise ValueError("a block layout needs at least one row and one column")
        if any(r <= 0 for r in self.block_rows) or any(c <= 0 for c in self.block_cols):
            raise ValueError("block sizes must be positive")

    @classmethod
    def square(cls, nblocks: int, size: int) -> "BlockLayout":
        """Uniform ``nblocks`` x ``nblocks`` grid of ``size`` x ``size`` blocks."""
        return cls((size,) * nblocks, (size,) * nblocks)

    @property
    def shape(self) -> tuple[int, int]:
        return (sum(self.block_rows), sum(self.block_cols))

    def row_span(self, i: int) -> tuple[int, int]:
        if not 0 <= i < len(self.block_rows):
            raise IndexError(f"block row {i} out of range")
        start = sum(self.block_rows[:i])
        return start, start + self.block_rows[i]

    def col_span(self, j: int) -> tuple[int, int]:
        if not 0 <= j < len(self.block_cols):
            raise IndexError(f"block column {j} out of range")
        start = sum(self.block_cols[:j])
        return start, start + self.block_cols[j]


def extract_block(a, layout: BlockLayout, i: int, j: int) -> np.ndarray:
    """Copy out the (i, j) block of ``a`` under ``layout``."""
    a = as_matrix(a)
    if layout.shape != a.shape:
        raise ValueError(f"layout {layout.shape} inconsistent with matrix {a.shape}")
    r0, r1 = layout.row_span(i)
    c0, c1 = layout.col_span(j)
    return a[r0:r1, c0:c1].copy()


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


class MatrixTuple:
    """A d-tuple of n-by-n complex matrices; immutable after construction."""

    __slots__ = ("components", "arity", "dim")

    def __init__(self, components):
        comps = tuple(_frozen(as_matrix(c)) for c in components)
        if not comps:
            raise ValueError("a matrix tuple needs at least one component")
        n = comps[0].shape[0]
        for c in comps:
            if c.shape != (n, n):
                raise ValueError("all components must be square matrices of one size")
        self.components = comps
        self.arity = len(comps)
        self.dim = n

    @classmethod
    def zeros(cls, arity: int, dim: int) -> "MatrixTuple":
        return cls([np.zeros((dim, dim), dtype=np.complex128)] * arity)

    @classmethod
    def from_scalars(cls, scalars, dim: int) -> "MatrixTuple":
        """Scalar point: component r is ``scalars[r]`` times the identity."""
        eye = np.eye(dim, dtype=np.complex128)
        return cls([complex(s) * eye for s in scalars])

    @classmethod
    def unit_direction(cls, arity: int, slot: int, dim: int) -> "MatrixTuple":
        """The tuple with the identity in ``slot`` and zeros elsewhere."""
        if not 0 <= slot < arity:
            raise ValueError(f"slot {slot} out of range for arity {arity}")
        comps = [np.zeros((dim, dim), dtype=np.complex128) for _ in range(arity)]
        comps[slot] = np.eye(dim, dtype=np.complex128)
        return cls(comps)

    def __len__(self) -> int:
        return self.arity

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, r: int) -> np.ndarray:
        return self.components[r]

    def __add__(self, other: "MatrixTuple") -> "MatrixTuple":
        self._check_compatible(other)
        return MatrixTuple([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "MatrixTuple") -> "MatrixTuple":
        self._check_compatible(other)
        return MatrixTuple([a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, scalar) -> "MatrixTuple":
        if not isinstance(scalar, Number):
            return NotImplemented
        return MatrixTuple([complex(scalar) * c for c in self.components])

    __rmul__ = __mul__

    def __neg__(self) -> "MatrixTuple":
        return MatrixTuple([-c for c in self.components])

    def _check_compatible(self, other: "MatrixTuple") -> None:
        if not isinstance(other, MatrixTuple):
            raise TypeError("expected a MatrixTuple")
        if other.arity != self.arity or other.dim != self.dim:
            raise ValueError("matrix tuples differ in arity or dimension")

    def max_norm(self) -> float:
        """Largest component operator norm; the natural size of the point."""
        return max(operator_norm(c) for c in self.components)

    def conjugate_by(self, s: np.ndarray) -> "MatrixTuple":
        """Componentwise similarity s x s^{-1}."""
        s = as_matrix(s)
        sinv = inverse(s)
        return MatrixTuple([s @ c @ sinv for c in self.components])

    def __repr__(self) -> str:
        return f"MatrixTuple(arity={self.arity}, dim={self.dim})"


def direct_sum(tuples) -> MatrixTuple:
    """Componentwise block-diagonal sum of matrix tuples (dims may differ)."""
    tuples = list(tuples)
    if not tuples:
        raise ValueError("direct_sum of an empty list")
    d = tuples[0].arity
    if any(t.arity != d for t in tuples):
        raise ValueError("direct_sum of tuples with mixed arity")
    total = sum(t.dim for t in tuples)
    comps = []
    for r in range(d):
        big = np.zeros((total, total), dtype=np.complex128)
        off = 0
        for t in tuples:
            big[off : off + t.dim, off : off + t.dim] = t[r]
            off += t.dim
        comps.append(big)
    return MatrixTuple(comps)


def bidiagonal_block(xs, hs) -> MatrixTuple:
    """Assemble the block-bidiagonal jet tuple.

    ``xs`` (k+1 points) go on the block diagonal and ``hs`` (k directions) on
    the block superdiagonal, componentwise, giving a tuple at dimension
    (k+1) * n.  With ``hs`` empty this is just ``xs[0]``.
    """
    xs = list(xs)
    hs = list(hs)
    if len(xs) != len(hs) + 1:
        raise ValueError(f"need one more point than direction, got {len(xs)} and {len(hs)}")
    d = xs[0].arity
    n = xs[0].dim
    for t in xs + hs:
        if t.arity != d or t.dim != n:
            raise ValueError("all points and directions must share arity and dimension")
    if not hs:
        return xs[0]
    k1 = len(xs)
    comps = []
    for r in range(d):
        big = np.zeros((k1 * n, k1 * n), dtype=np.complex128)
        for i, x in enumerate(xs):
            big[i * n : (i + 1) * n, i * n : (i + 1) * n] = x[r]
        for i, h in enumerate(hs):
            big[i * n : (i + 1) * n, (i + 1) * n : (i + 2) * n] = h[r]
        comps.append(big)
    return MatrixTuple(comps)
