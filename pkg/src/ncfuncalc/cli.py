"""Command-line surface: evaluation, derivatives, expansion, realizations, verify.

Data and output paths go to stdout, diagnostics to stderr, and every
command is deterministic under a fixed seed and configuration.  Exit codes:

    0  success (and, for verify/scan, every property passed)
    1  a verification or scan verdict failed
    2  parse, usage, or configuration error
    3  evaluation point outside the declared domain
    4  numeric failure (singular matrix, non-convergence, resolvent, sampler)
    5  coefficient extraction failure (offending word reported on stderr)
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .formats import (
    ParseError,
    directions_from_obj,
    dump_json,
    handle_from_obj,
    load_json,
    matrix_to_obj,
    poly_to_obj,
    realization_from_obj,
    tuple_from_obj,
    write_json_atomic,
)
from .linalg import NonConvergenceError, SingularMatrixError, operator_norm
from .ncderiv import delta_k, dk_fd, dk_multilinear
from .ncfun import DomainViolationError
from .realization import (
    NotIsometricError,
    ResolventSingularError,
    SamplerStarvationError,
    check_isometry,
    contractivity_scan,
    eval_realization,
    in_ball,
)
from .taylor import ExtractionError, taylor_expand
from .verify import SuiteConfig, run_suite

__all__ = ["main", "entrypoint", "CliConfig"]

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NUMERIC = 4
EXIT_EXTRACTION = 5

DEFAULT_FD_LAMBDA = 1e-3


@dataclass
class CliConfig:
    """Optional JSON configuration shared by the subcommands."""

    seed: int = 0
    fd_lambda: float = DEFAULT_FD_LAMBDA
    word_cap: int = 5000
    truncation: int = 24
    out: str | None = None
    suite: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fd_lambda <= 0:
            raise ValueError("fd_lambda must be positive")
        if self.word_cap <= 0 or self.truncation < 0:
            raise ValueError("caps must be positive")
        for key, value in self.suite.items():
            if key.startswith("tol_") and not value > 0:
                raise ValueError(f"tolerance {key} must be positive")

    @classmethod
    def load(cls, path: str | None) -> "CliConfig":
        if path is None:
            return cls()
        data = load_json(path)
        if not isinstance(data, dict):
            raise ParseError(f"{path}: config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}") from exc


def _emit_matrix(result: np.ndarray, out: str | None, *, norm_line: bool = True) -> None:
    norm = operator_norm(result)
    if out:
        write_json_atomic(out, matrix_to_obj(result))
        print(out)
        if norm_line:
            print(f"norm {norm:.17g}")
    else:
        print(dump_json(matrix_to_obj(result)))
        if norm_line:
            print(f"norm {norm:.17g}", file=sys.stderr)


def _cmd_eval(args) -> int:
    cfg = CliConfig.load(args.config)
    F = handle_from_obj(load_json(args.handle))
    x = tuple_from_obj(load_json(args.point))
    _emit_matrix(F.eval(x), args.out or cfg.out)
    return EXIT_OK


def _cmd_derive(args) -> int:
    cfg = CliConfig.load(args.config)
    out = args.out or cfg.out
    F = handle_from_obj(load_json(args.handle))
    x = tuple_from_obj(load_json(args.point))
    k = args.k
    if k < 0:
        raise ParseError("--k must be nonnegative")
    if k == 0:
        _emit_matrix(F.eval(x), out, norm_line=False)
        return EXIT_OK
    if not args.directions:
        raise ParseError("--directions is required for k >= 1")
    hs = directions_from_obj(load_json(args.directions))
    if len(hs) != k:
        raise ParseError(f"--k is {k} but the directions file holds {len(hs)} tuples")
    equal_dirs = all(
        np.array_equal(h[r], hs[0][r]) for h in hs[1:] for r in range(hs[0].arity)
    )
    if args.method == "fd" and not equal_dirs:
        raise ParseError("the fd method needs all directions equal")

    def by_block():
        return math.factorial(k) * delta_k(F, [x] * (k + 1), hs).delta

    def by_fd():
        return dk_fd(F, x, hs[0], k, cfg.fd_lambda)

    if args.method == "block":
        result = by_block()
    elif args.method == "fd":
        result = by_fd()
    else:
        result = dk_multilinear(F, x, hs)
    if args.cross_check:
        if not equal_dirs:
            raise ParseError("--cross-check needs all directions equal")
        gap = float(np.abs(by_block() - by_fd()).max())
        print(f"cross-check disagreement {gap:.17g}")
    _emit_matrix(result, out, norm_line=False)
    return EXIT_OK


def _cmd_expand(args) -> int:
    cfg = CliConfig.load(args.config)
    out = args.out or cfg.out
    F = handle_from_obj(load_json(args.handle))
    expansion = taylor_expand(F, args.maxdeg, word_cap=cfg.word_cap)
    poly_obj = poly_to_obj(expansion.as_poly())
    diag = expansion.diagnostics()
    if out:
        write_json_atomic(out, poly_obj)
        diag_path = out + ".diagnostics.json"
        write_json_atomic(diag_path, diag)
        print(out)
        print(diag_path)
    else:
        print(dump_json(poly_obj))
        print(dump_json(diag), file=sys.stderr)
    return EXIT_OK


def _cmd_realize_eval(args) -> int:
    cfg = CliConfig.load(args.config)
    r = realization_from_obj(load_json(args.handle))
    x = tuple_from_obj(load_json(args.point))
    if not in_ball(r.delta, x, 0.0):
        raise DomainViolationError("point lies outside the delta ball")
    _emit_matrix(eval_realization(r, x), args.out or cfg.out)
    return EXIT_OK


def _cmd_realize_check(args) -> int:
    r = realization_from_obj(load_json(args.handle))
    resid = check_isometry(r)
    passed = resid <= args.tol
    print(dump_json({"isometry_residual": resid, "tolerance": args.tol, "passed": passed}))
    return EXIT_OK if passed else EXIT_VERDICT


def _cmd_realize_scan(args) -> int:
    r = realization_from_obj(load_json(args.handle))
    report = contractivity_scan(r, args.n, args.samples, args.seed)
    payload = report.as_dict()
    if args.out:
        write_json_atomic(args.out, payload)
        print(args.out)
    else:
        print(dump_json(payload))
    return EXIT_OK if report.passed else EXIT_VERDICT


def _cmd_verify(args) -> int:
    cfg = CliConfig.load(args.config)
    F = handle_from_obj(load_json(args.handle))
    suite_cfg = SuiteConfig.from_dict(cfg.suite) if cfg.suite else SuiteConfig(seed=cfg.seed)
    if args.seed is not None:
        suite_cfg = suite_cfg.with_seed(args.seed)
    reports = run_suite(F, suite_cfg)
    payload = [rep.as_dict() for rep in reports]
    if args.out:
        write_json_atomic(args.out, payload)
        print(args.out)
    else:
        print(dump_json(payload))
    failing = [rep.name for rep in reports if not rep.passed]
    if failing:
        print("failed: " + ", ".join(failing), file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncfun",
        description="Evaluate, differentiate, expand, and verify graded matrix functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str, *, point=False, directions=False, scan=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--handle", required=True, help="handle or realization file")
        if point:
            p.add_argument("--point", required=True, help="matrix tuple file")
        if directions:
            p.add_argument("--directions", help="directions file (list of tuples)")
            p.add_argument("--k", type=int, required=True, help="derivative order")
            p.add_argument(
                "--method",
                choices=("block", "fd", "polarized"),
                default="block",
                help="block jet, finite differences, or polarization",
            )
            p.add_argument(
                "--cross-check",
                action="store_true",
                help="run block and fd and report their disagreement",
            )
        if scan:
            p.add_argument("--n", type=int, required=True, help="matrix dimension")
            p.add_argument("--samples", type=int, required=True, help="accepted sample count")
            p.add_argument("--seed", type=int, default=0, help="sampler seed")
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output path (written atomically)")
        return p

    add("eval", "evaluate a handle at a point", point=True)
    add("derive", "directional derivatives of a handle", point=True, directions=True)
    expand = add("expand", "Taylor expansion at the scalar point 0")
    expand.add_argument("--maxdeg", type=int, required=True, help="highest degree extracted")
    add("realize-eval", "evaluate a realization transfer function", point=True)
    check = add("realize-check", "isometry residual of a colligation")
    check.add_argument("--tol", type=float, default=1e-10, help="isometry tolerance")
    add("realize-scan", "sampled contractivity scan over the delta ball", scan=True)
    verify = add("verify", "run the structural property suite")
    verify.add_argument("--seed", type=int, default=None, help="override the suite seed")
    return parser


_DISPATCH = {
    "eval": _cmd_eval,
    "derive": _cmd_derive,
    "expand": _cmd_expand,
    "realize-eval": _cmd_realize_eval,
    "realize-check": _cmd_realize_check,
    "realize-scan": _cmd_realize_scan,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _DISPATCH[args.command](args)
    except ExtractionError as exc:
        word = list(exc.word) if exc.word is not None else None
        print(f"extraction failed at word {word}: {exc}", file=sys.stderr)
        return EXIT_EXTRACTION
    except DomainViolationError as exc:
        print(f"domain violation: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (
        SingularMatrixError,
        NonConvergenceError,
        ResolventSingularError,
        SamplerStarvationError,
    ) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NotIsometricError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
