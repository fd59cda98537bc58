"""Executable structural properties of graded intertwining-preserving functions.

Every check returns a :class:`PropertyReport` rather than raising on
failure; :func:`run_suite` bundles the checks with seeded sampling so that
identical configurations produce bitwise-identical reports.  Negative
control handles (deliberately broken evaluators) ship alongside so the
suite's ability to fail is itself testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import permutations

import numpy as np

from .freepoly import FreePoly
from .linalg import MatrixTuple, direct_sum, inverse, operator_norm
from .ncderiv import delta_k, dk_multilinear, jet1
from .ncfun import DomainDescriptor, NCFunctionHandle
from .taylor import taylor_expand

__all__ = [
    "PreconditionViolationError",
    "NonLinearInputError",
    "PropertyReport",
    "SuiteConfig",
    "check_direct_sum",
    "check_intertwining",
    "check_unipotent_converse",
    "check_delta_structure",
    "check_symmetry",
    "recover_klinear",
    "run_suite",
    "stack_tuples",
    "control_handle",
    "CONTROL_NAMES",
]


class PreconditionViolationError(ValueError):
    """The inputs do not satisfy the hypothesis the check needs."""


class NonLinearInputError(ValueError):
    """A map presented as k-linear failed the linearity spot check."""


@dataclass(frozen=True)
class PropertyReport:
    """One verified property: residual against threshold, pass or fail."""

    name: str
    trials: int
    worst_residual: float
    threshold: float
    passed: bool
    seed: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "worst_residual": self.worst_residual,
            "threshold": self.threshold,
            "passed": self.passed,
            "seed": self.seed,
            "detail": self.detail,
        }


def _relnorm(diff: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(diff)) / max(1.0, float(np.linalg.norm(reference)))


def check_direct_sum(F: NCFunctionHandle, xs, *, threshold: float = 1e-9) -> PropertyReport:
    """Evaluation at a direct sum must be the direct sum of the evaluations."""
    xs = list(xs)
    whole = F.eval(direct_sum(xs))
    offset = 0
    pieces = np.zeros_like(whole)
    for x in xs:
        pieces[offset : offset + x.dim, offset : offset + x.dim] = F.eval(x)
        offset += x.dim
    resid = _relnorm(whole - pieces, pieces)
    return PropertyReport(
        name="direct-sum",
        trials=1,
        worst_residual=resid,
        threshold=threshold,
        passed=resid <= threshold,
    )


def check_intertwining(
    F: NCFunctionHandle,
    x: MatrixTuple,
    L: np.ndarray,
    y: MatrixTuple,
    *,
    threshold: float = 1e-7,
    precondition_tol: float = 1e-10,
) -> PropertyReport:
    """If L x = y L componentwise then L F(x) = F(y) L.

    ``L`` may be rectangular (y at dimension p, x at dimension n, L p-by-n).
    Raises :class:`PreconditionViolationError` when L x differs from y L.
    """
    L = np.asarray(L, dtype=np.complex128)
    if L.shape != (y.dim, x.dim):
        raise ValueError(f"L must be {y.dim}x{x.dim}, got {L.shape}")
    lnorm = operator_norm(L)
    if lnorm == 0.0:
        return PropertyReport("intertwining", 1, 0.0, threshold, True)
    pre = max(operator_norm(L @ x[r] - y[r] @ L) for r in range(x.arity))
    if pre > precondition_tol * max(1.0, lnorm):
        raise PreconditionViolationError(
            f"L x differs from y L by {pre:.3e}, not an intertwining pair"
        )
    resid = operator_norm(L @ F.eval(x) - F.eval(y) @ L) / lnorm
    return PropertyReport(
        name="intertwining",
        trials=1,
        worst_residual=resid,
        threshold=threshold,
        passed=resid <= threshold,
    )


def check_unipotent_converse(
    F: NCFunctionHandle,
    x: MatrixTuple,
    y: MatrixTuple,
    L: np.ndarray,
    *,
    threshold: float = 1e-8,
) -> PropertyReport:
    """Conjugated direct sums split: F(S^{-1} (x (+) y) S) = S^{-1} (F(x) (+) F(y)) S.

    S is the unipotent block matrix [[1, L], [0, 1]]; with L = 0 this reduces
    to the plain direct-sum property.
    """
    x._check_compatible(y)
    n = x.dim
    L = np.asarray(L, dtype=np.complex128)
    if L.shape != (n, n):
        raise ValueError(f"L must be {n}x{n}, got {L.shape}")
    # S^{-1} (x (+) y) S has components [[x, xL - Ly], [0, y]].
    z = MatrixTuple(
        [
            np.block([[x[r], x[r] @ L - L @ y[r]], [np.zeros((n, n)), y[r]]])
            for r in range(x.arity)
        ]
    )
    eye = np.eye(n, dtype=np.complex128)
    zero = np.zeros((n, n), dtype=np.complex128)
    s = np.block([[eye, L], [zero, eye]])
    sinv = np.block([[eye, -L], [zero, eye]])
    expected = sinv @ np.block([[F.eval(x), zero], [zero, F.eval(y)]]) @ s
    resid = _relnorm(F.eval(z) - expected, expected)
    return PropertyReport(
        name="unipotent-converse",
        trials=1,
        worst_residual=resid,
        threshold=threshold,
        passed=resid <= threshold,
    )


def check_delta_structure(
    F: NCFunctionHandle, xs, hs, *, threshold: float = 1e-8
) -> PropertyReport:
    """The jet image must match the difference-differentials of every sub-chain.

    Block (i, j) above the diagonal is compared against an independently
    computed order-(j - i) delta of the base points x_i..x_j and directions
    h_i..h_{j-1}; diagonal blocks against F(x_i); below-diagonal blocks
    against zero.
    """
    xs = list(xs)
    hs = list(hs)
    k = len(hs)
    res = delta_k(F, xs, hs)
    n = xs[0].dim
    full = res.full_upper
    scale = max(1.0, float(np.linalg.norm(full)))
    worst = res.structure_residual / scale
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            if i == 0 and j == k:
                continue  # the corner block is the delta itself, by definition
            block = full[i * n : (i + 1) * n, j * n : (j + 1) * n]
            expected = delta_k(F, xs[i : j + 1], hs[i:j]).delta
            worst = max(worst, float(np.linalg.norm(block - expected)) / scale)
    return PropertyReport(
        name="delta-structure",
        trials=1,
        worst_residual=worst,
        threshold=threshold,
        passed=worst <= threshold,
    )


def check_symmetry(
    F: NCFunctionHandle, x: MatrixTuple, hs, *, threshold: float = 1e-8, max_perms: int | None = None
) -> PropertyReport:
    """The polarized derivative must not depend on the argument order.

    All k! orders are compared for k up to 3; k = 4 samples the first ten
    orders (the cap can be overridden with ``max_perms``).
    """
    hs = list(hs)
    k = len(hs)
    if k > 4:
        raise ValueError("symmetry check supports orders up to 4")
    if max_perms is None:
        max_perms = math.factorial(k) if k <= 3 else 10
    base = dk_multilinear(F, x, hs)
    scale = max(1.0, float(np.linalg.norm(base)))
    worst = 0.0
    count = 0
    for sigma in permutations(range(k)):
        if count >= max_perms:
            break
        count += 1
        if sigma == tuple(range(k)):
            continue
        other = dk_multilinear(F, x, [hs[i] for i in sigma])
        worst = max(worst, float(np.linalg.norm(other - base)) / scale)
    return PropertyReport(
        name="derivative-symmetry",
        trials=count,
        worst_residual=worst,
        threshold=threshold,
        passed=worst <= threshold,
    )


def stack_tuples(tuples) -> MatrixTuple:
    """Concatenate k d-tuples into one (d*k)-tuple at the same dimension."""
    tuples = list(tuples)
    comps = []
    for t in tuples:
        comps.extend(t.components)
    return MatrixTuple(comps)


def recover_klinear(
    lam: NCFunctionHandle,
    k: int,
    probes,
    *,
    linearity_tol: float = 1e-8,
    dim: int = 1,
) -> FreePoly:
    """Recover the homogeneous polynomial behind a k-linear graded map.

    ``lam`` is a handle in d*k variables, understood as k blocks of d; its
    diagonal k-th derivative at 0 is k! times the map itself, so the
    degree-k Taylor part reproduces it.  Linearity in the first block is
    spot-checked on the first two probes before extraction.
    """
    if k < 1:
        raise ValueError("order must be at least 1")
    if lam.arity % k != 0:
        raise ValueError(f"handle arity {lam.arity} is not divisible by {k}")
    probes = [list(p) for p in probes]
    if len(probes) >= 2:
        a, b = probes[0], probes[1]
        mixed = [a[0] + b[0]] + a[1:]
        lhs = lam.eval(stack_tuples(mixed))
        rhs = lam.eval(stack_tuples(a)) + lam.eval(stack_tuples([b[0]] + a[1:]))
        resid = _relnorm(lhs - rhs, rhs)
        if resid > linearity_tol:
            raise NonLinearInputError(
                f"additivity in the first block fails by {resid:.3e}"
            )
    expansion = taylor_expand(lam, k, dim=dim)
    return expansion.parts[k]


# -- negative controls -------------------------------------------------------


def _control_conjugation(d: int) -> NCFunctionHandle:
    return NCFunctionHandle(
        d,
        DomainDescriptor.polydisk(math.inf),
        lambda x: np.conj(x[0]),
        kind="control",
        payload={"name": "entrywise-conjugation", "d": d},
    )


def _control_fixed_corner(d: int) -> NCFunctionHandle:
    def evaluator(x: MatrixTuple) -> np.ndarray:
        out = np.zeros((x.dim, x.dim), dtype=np.complex128)
        out[0, 0] = 1.0
        return out

    return NCFunctionHandle(
        d,
        DomainDescriptor.polydisk(math.inf),
        evaluator,
        kind="control",
        payload={"name": "fixed-corner", "d": d},
    )


def _control_nongraded(d: int) -> NCFunctionHandle:
    return NCFunctionHandle(
        d,
        DomainDescriptor.polydisk(math.inf),
        lambda x: np.eye(2, dtype=np.complex128),
        kind="control",
        payload={"name": "non-graded", "d": d},
    )


_CONTROL_FACTORIES = {
    "entrywise-conjugation": _control_conjugation,
    "fixed-corner": _control_fixed_corner,
    "non-graded": _control_nongraded,
}

CONTROL_NAMES = tuple(sorted(_CONTROL_FACTORIES))


def control_handle(name: str, d: int = 1) -> NCFunctionHandle:
    """A deliberately broken handle; see CONTROL_NAMES for the choices."""
    try:
        factory = _CONTROL_FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown control {name!r}; choices: {', '.join(CONTROL_NAMES)}")
    return factory(d)


# -- the bundled suite -------------------------------------------------------


@dataclass(frozen=True)
class SuiteConfig:
    """Seed, sampling sizes, and per-property thresholds for run_suite."""

    seed: int = 7
    dims: tuple[int, ...] = (2, 3)
    scalar_dims: tuple[int, ...] = (2, 4)
    graded_dims: tuple[int, ...] = (1, 2, 3, 5)
    trials: int = 3
    max_order: int = 3
    tol_direct_sum: float = 1e-9
    tol_intertwining: float = 1e-7
    tol_unipotent: float = 1e-8
    tol_scalarity: float = 1e-10
    tol_scalar_derivative: float = 1e-8
    tol_structure: float = 1e-8
    tol_multilinear: float = 1e-8
    tol_symmetry: float = 1e-8
    tol_taylor: float = 1e-6

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ValueError(f"unknown suite config key {key!r}")
            if key in ("dims", "scalar_dims", "graded_dims"):
                value = tuple(int(v) for v in value)
            kwargs[key] = value
        return cls(**kwargs)

    def with_seed(self, seed: int) -> "SuiteConfig":
        return replace(self, seed=int(seed))


def _sample_direction(rng: np.random.Generator, d: int, n: int, scale: float = 1.0) -> MatrixTuple:
    comps = []
    for _ in range(d):
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        comps.append(scale * g / max(operator_norm(g), 1e-12))
    return MatrixTuple(comps)


def _shrink_into(domain: DomainDescriptor, x: MatrixTuple) -> MatrixTuple:
    for _ in range(200):
        if domain.contains(x):
            return x
        x = 0.8 * x
    raise RuntimeError("could not shrink a sample into the domain")


def _sample_point(rng: np.random.Generator, F: NCFunctionHandle, n: int) -> MatrixTuple:
    d = F.arity
    domain = F.domain
    if domain.kind == "deltaball":
        x = _sample_direction(rng, d, n, scale=0.5)
        return _shrink_into(
            DomainDescriptor.deltaball(domain.delta, margin=max(domain.margin, 0.35)), x
        )
    target = 0.45 * min(domain.scale_radius(), 1.0)
    if domain.kind == "rowball":
        target /= math.sqrt(d)
    return _sample_direction(rng, d, n, scale=target * float(rng.uniform(0.5, 1.0)))


def _sample_scalar_point(rng: np.random.Generator, F: NCFunctionHandle, n: int) -> MatrixTuple:
    d = F.arity
    scale = 0.15 * min(F.domain.scale_radius(), 1.0)
    scalars = scale * (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / math.sqrt(2 * d)
    return _shrink_into(F.domain, MatrixTuple.from_scalars(scalars, n))


def _sample_similarity(rng: np.random.Generator, n: int) -> tuple[np.ndarray, float]:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    g = g / max(operator_norm(g), 1e-12)
    s = np.eye(n, dtype=np.complex128) + 0.1 * g
    cond = operator_norm(s) * operator_norm(inverse(s))
    return s, cond


def run_suite(F: NCFunctionHandle, config: SuiteConfig | None = None) -> list[PropertyReport]:
    """Run every structural check against a handle; failures are verdicts.

    A check that raises (for instance because the handle breaks grading) is
    reported as failed with the exception in the detail field, so broken
    handles produce failing reports rather than crashes.
    """
    cfg = config or SuiteConfig()
    reports: list[PropertyReport] = []

    def run(index: int, name: str, threshold: float, body) -> None:
        rng = np.random.default_rng((cfg.seed, index))
        try:
            worst, trials, detail = body(rng)
            report = PropertyReport(
                name=name,
                trials=trials,
                worst_residual=float(worst),
                threshold=threshold,
                passed=worst <= threshold,
                seed=cfg.seed,
                detail=detail,
            )
        except Exception as exc:  # verdict, not crash
            report = PropertyReport(
                name=name,
                trials=0,
                worst_residual=math.inf,
                threshold=threshold,
                passed=False,
                seed=cfg.seed,
                detail=f"{type(exc).__name__}: {exc}",
            )
        reports.append(report)

    def graded(rng):
        for n in cfg.graded_dims:
            F.eval(_sample_point(rng, F, n))  # eval raises if grading breaks
        return 0.0, len(cfg.graded_dims), ""

    def dsum(rng):
        worst = 0.0
        for _ in range(cfg.trials):
            xs = [_sample_point(rng, F, n) for n in cfg.dims]
            worst = max(worst, check_direct_sum(F, xs).worst_residual)
        return worst, cfg.trials, ""

    def similarity(rng):
        worst = 0.0
        for _ in range(cfg.trials):
            n = cfg.dims[0]
            x = _sample_point(rng, F, n)
            s, cond = _sample_similarity(rng, n)
            y = x.conjugate_by(s)
            rep = check_intertwining(F, x, s, y, threshold=cfg.tol_intertwining)
            worst = max(worst, rep.worst_residual / cond)
        return worst, cfg.trials, "residual divided by cond(S)"

    def unipotent(rng):
        worst = 0.0
        for _ in range(cfg.trials):
            n = cfg.dims[0]
            x = _sample_point(rng, F, n)
            y = _sample_point(rng, F, n)
            l = _sample_direction(rng, 1, n, scale=0.2)[0]
            worst = max(worst, check_unipotent_converse(F, x, y, l).worst_residual)
        return worst, cfg.trials, ""

    def scalarity(rng):
        worst = 0.0
        for n in cfg.scalar_dims:
            for _ in range(cfg.trials):
                a = _sample_scalar_point(rng, F, n)
                v = F.eval(a)
                c = complex(np.trace(v) / n)
                worst = max(
                    worst, float(np.abs(v - c * np.eye(n)).max()) / max(1.0, abs(c))
                )
        return worst, len(cfg.scalar_dims) * cfg.trials, ""

    def scalar_derivative(rng):
        # Coefficients from the unit directions, validated on fresh ones.
        n = cfg.dims[0]
        d = F.arity
        worst = 0.0
        for _ in range(cfg.trials):
            a = _sample_scalar_point(rng, F, n)
            coeffs = []
            for r in range(d):
                der = jet1(F, a, MatrixTuple.unit_direction(d, r, n)).derivative
                c = complex(np.trace(der) / n)
                worst = max(worst, float(np.abs(der - c * np.eye(n)).max()) / max(1.0, abs(c)))
                coeffs.append(c)
            for _ in range(d):
                h = _sample_direction(rng, d, n)
                predicted = sum(c * h[r] for r, c in enumerate(coeffs))
                worst = max(worst, _relnorm(jet1(F, a, h).derivative - predicted, predicted))
        return worst, cfg.trials, ""

    def structure(rng):
        worst = 0.0
        n = cfg.dims[0]
        for _ in range(cfg.trials):
            xs = [_sample_point(rng, F, n) for _ in range(3)]
            hs = [_sample_direction(rng, F.arity, n) for _ in range(2)]
            worst = max(worst, check_delta_structure(F, xs, hs).worst_residual)
        return worst, cfg.trials, ""

    def multilinear(rng):
        worst = 0.0
        n = cfg.dims[0]
        d = F.arity
        for _ in range(cfg.trials):
            xs = [_sample_point(rng, F, n) for _ in range(3)]
            h1, h1b, h2 = (_sample_direction(rng, d, n) for _ in range(3))
            base = delta_k(F, xs, [h1, h2]).delta
            added = delta_k(F, xs, [h1 + h1b, h2]).delta
            split = base + delta_k(F, xs, [h1b, h2]).delta
            worst = max(worst, _relnorm(added - split, split))
            c = complex(rng.standard_normal() + 1j * rng.standard_normal())
            scaled = delta_k(F, xs, [h1, c * h2]).delta
            worst = max(worst, _relnorm(scaled - c * base, scaled))
        return worst, cfg.trials, ""

    def symmetry(rng):
        worst = 0.0
        n = cfg.dims[0]
        d = F.arity
        for k in range(2, min(cfg.max_order, 3) + 1):
            x = _sample_point(rng, F, n)
            hs = [_sample_direction(rng, d, n) for _ in range(k)]
            worst = max(worst, check_symmetry(F, x, hs).worst_residual)
        return worst, min(cfg.max_order, 3) - 1, ""

    def taylor_polynomiality(rng):
        d = F.arity
        kmax = min(cfg.max_order, 3)
        while d**kmax > 200 and kmax > 1:
            kmax -= 1
        expansion = taylor_expand(F, kmax)
        n = 2
        worst = 0.0
        zero = MatrixTuple.zeros(d, n)
        for k in range(1, kmax + 1):
            part = expansion.parts[k]
            for _ in range(cfg.trials):
                hs = [_sample_direction(rng, d, n) for _ in range(k)]
                lhs = dk_multilinear(F, zero, hs)
                rhs = np.zeros((n, n), dtype=np.complex128)
                for sigma in permutations(range(k)):
                    for w, c in part.sorted_terms():
                        m = np.eye(n, dtype=np.complex128)
                        for pos, letter in enumerate(w):
                            m = m @ hs[sigma[pos]][letter]
                        rhs += c * m
                worst = max(worst, _relnorm(lhs - rhs, rhs))
        return worst, cfg.trials * kmax, ""

    run(0, "gradedness", 0.5, graded)
    run(1, "direct-sum", cfg.tol_direct_sum, dsum)
    run(2, "similarity-intertwining", cfg.tol_intertwining, similarity)
    run(3, "unipotent-converse", cfg.tol_unipotent, unipotent)
    run(4, "scalar-point-scalarity", cfg.tol_scalarity, scalarity)
    run(5, "scalar-point-derivative", cfg.tol_scalar_derivative, scalar_derivative)
    run(6, "delta-structure", cfg.tol_structure, structure)
    run(7, "delta-multilinearity", cfg.tol_multilinear, multilinear)
    run(8, "derivative-symmetry", cfg.tol_symmetry, symmetry)
    run(9, "taylor-polynomiality", cfg.tol_taylor, taylor_polynomiality)
    return reports
