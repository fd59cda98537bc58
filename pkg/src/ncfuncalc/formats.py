"""JSON text formats shared by the library and the command line.

Complex scalars are objects ``{"re": ..., "im": ...}``.  Floats are printed
with Python's shortest round-trip representation, which carries at least 17
significant digits when needed.  Words are zero-indexed letter lists and
polynomials serialize in graded lexicographic order.

Schemas
    matrix       {"rows": R, "cols": C, "entries": [[{re, im}, ...], ...]}
    tuple        {"d": D, "dim": N, "components": [matrix, ...]}
    directions   {"directions": [tuple, ...]}
    polynomial   {"d": D, "terms": [{"word": [j, ...], "re": ..., "im": ...}, ...]}
    polymatrix   {"I": I, "J": J, "entries": [[polynomial, ...], ...]}
    realization  {"delta": polymatrix, "m": m, "A": {re, im}, "B": matrix,
                  "C": matrix, "D": matrix}
    domain       {"kind": "polydisk" | "rowball", "radius": float | null,
                  "norm_cap": float | null}
                 or {"kind": "deltaball", "delta": polymatrix, "margin": float,
                  "norm_cap": float | null}
    handle       {"kind": "poly" | "series" | "realization" | "control",
                  "payload": ..., "domain": domain?}
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .freepoly import FreePoly, grlex_key
from .linalg import MatrixTuple, as_matrix
from .ncfun import (
    DomainDescriptor,
    NCFunctionHandle,
    SeriesFunction,
    from_poly,
    from_realization,
    from_series,
)
from .realization import PolyMatrix, Realization
from .verify import control_handle

__all__ = [
    "ParseError",
    "matrix_to_obj",
    "matrix_from_obj",
    "tuple_to_obj",
    "tuple_from_obj",
    "directions_from_obj",
    "poly_to_obj",
    "poly_from_obj",
    "polymatrix_to_obj",
    "polymatrix_from_obj",
    "realization_to_obj",
    "realization_from_obj",
    "domain_to_obj",
    "domain_from_obj",
    "handle_to_obj",
    "handle_from_obj",
    "load_json",
    "dump_json",
    "write_json_atomic",
]


class ParseError(ValueError):
    """A document did not match its schema; the message carries positions."""


def _complex_to_obj(c: complex) -> dict:
    return {"re": float(c.real), "im": float(c.imag)}


def _complex_from_obj(obj, where: str) -> complex:
    if not isinstance(obj, dict) or "re" not in obj or "im" not in obj:
        raise ParseError(f"{where}: expected an object with 're' and 'im'")
    try:
        return complex(float(obj["re"]), float(obj["im"]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def matrix_to_obj(a) -> dict:
    a = as_matrix(a)
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "entries": [[_complex_to_obj(v) for v in row] for row in a.tolist()],
    }


def matrix_from_obj(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: missing or bad rows/cols/entries ({exc})") from exc
    if not isinstance(entries, list) or len(entries) != rows:
        raise ParseError(f"{where}: expected {rows} entry rows")
    out = np.zeros((rows, cols), dtype=np.complex128)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != cols:
            raise ParseError(f"{where}: row {i} must have {cols} entries")
        for j, cell in enumerate(row):
            out[i, j] = _complex_from_obj(cell, f"{where}: entry ({i},{j})")
    return out


def tuple_to_obj(x: MatrixTuple) -> dict:
    return {
        "d": x.arity,
        "dim": x.dim,
        "components": [matrix_to_obj(c) for c in x.components],
    }


def tuple_from_obj(obj, where: str = "tuple") -> MatrixTuple:
    if not isinstance(obj, dict) or "components" not in obj:
        raise ParseError(f"{where}: expected an object with 'components'")
    comps = [
        matrix_from_obj(c, f"{where}: component {r}") for r, c in enumerate(obj["components"])
    ]
    try:
        x = MatrixTuple(comps)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    if "d" in obj and int(obj["d"]) != x.arity:
        raise ParseError(f"{where}: declared d={obj['d']} but found {x.arity} components")
    if "dim" in obj and int(obj["dim"]) != x.dim:
        raise ParseError(f"{where}: declared dim={obj['dim']} but components are {x.dim}x{x.dim}")
    return x


def directions_from_obj(obj, where: str = "directions") -> list[MatrixTuple]:
    if isinstance(obj, dict) and "directions" in obj:
        obj = obj["directions"]
    if not isinstance(obj, list):
        raise ParseError(f"{where}: expected a list of tuples")
    return [tuple_from_obj(t, f"{where}[{i}]") for i, t in enumerate(obj)]


def poly_to_obj(p: FreePoly) -> dict:
    return {
        "d": p.arity,
        "terms": [
            {"word": list(w), "re": float(c.real), "im": float(c.imag)}
            for w, c in p.sorted_terms()
        ],
    }


def poly_from_obj(obj, where: str = "polynomial") -> FreePoly:
    if not isinstance(obj, dict) or "d" not in obj or "terms" not in obj:
        raise ParseError(f"{where}: expected an object with 'd' and 'terms'")
    try:
        d = int(obj["d"])
        terms = {}
        for i, t in enumerate(obj["terms"]):
            word = tuple(int(j) for j in t["word"])
            terms[word] = terms.get(word, 0) + complex(float(t["re"]), float(t["im"]))
        return FreePoly(d, terms)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def polymatrix_to_obj(pm: PolyMatrix) -> dict:
    return {
        "I": pm.rows,
        "J": pm.cols,
        "entries": [[poly_to_obj(p) for p in row] for row in pm.entries],
    }


def polymatrix_from_obj(obj, where: str = "polymatrix") -> PolyMatrix:
    if not isinstance(obj, dict) or "entries" not in obj:
        raise ParseError(f"{where}: expected an object with 'entries'")
    rows = [
        [poly_from_obj(p, f"{where}: entry ({i},{j})") for j, p in enumerate(row)]
        for i, row in enumerate(obj["entries"])
    ]
    try:
        pm = PolyMatrix(rows)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc
    if "I" in obj and int(obj["I"]) != pm.rows:
        raise ParseError(f"{where}: declared I={obj['I']} but found {pm.rows} rows")
    if "J" in obj and int(obj["J"]) != pm.cols:
        raise ParseError(f"{where}: declared J={obj['J']} but found {pm.cols} columns")
    return pm


def realization_to_obj(r: Realization) -> dict:
    return {
        "delta": polymatrix_to_obj(r.delta),
        "m": r.m,
        "A": _complex_to_obj(r.A),
        "B": matrix_to_obj(r.B),
        "C": matrix_to_obj(r.C),
        "D": matrix_to_obj(r.D),
    }


def realization_from_obj(obj, where: str = "realization") -> Realization:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    try:
        return Realization(
            delta=polymatrix_from_obj(obj["delta"], f"{where}: delta"),
            m=int(obj["m"]),
            A=_complex_from_obj(obj["A"], f"{where}: A"),
            B=matrix_from_obj(obj["B"], f"{where}: B"),
            C=matrix_from_obj(obj["C"], f"{where}: C"),
            D=matrix_from_obj(obj["D"], f"{where}: D"),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _cap_to_obj(value: float):
    return None if math.isinf(value) else float(value)


def domain_to_obj(domain: DomainDescriptor) -> dict:
    if domain.kind == "deltaball":
        return {
            "kind": "deltaball",
            "delta": polymatrix_to_obj(domain.delta),
            "margin": domain.margin,
            "norm_cap": _cap_to_obj(domain.norm_cap),
        }
    return {
        "kind": domain.kind,
        "radius": _cap_to_obj(domain.radius),
        "norm_cap": _cap_to_obj(domain.norm_cap),
    }


def domain_from_obj(obj, where: str = "domain") -> DomainDescriptor:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError(f"{where}: expected an object with 'kind'")
    kind = obj["kind"]
    cap = obj.get("norm_cap")
    cap = math.inf if cap is None else float(cap)
    try:
        if kind == "deltaball":
            return DomainDescriptor.deltaball(
                polymatrix_from_obj(obj["delta"], f"{where}: delta"),
                margin=float(obj.get("margin", 0.0)),
                norm_cap=cap,
            )
        if kind in ("polydisk", "rowball"):
            radius = obj.get("radius")
            radius = math.inf if radius is None else float(radius)
            factory = DomainDescriptor.polydisk if kind == "polydisk" else DomainDescriptor.rowball
            return factory(radius, norm_cap=cap)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: {exc}") from exc
    raise ParseError(f"{where}: unknown domain kind {kind!r}")


def handle_to_obj(F: NCFunctionHandle) -> dict:
    if F.kind == "poly":
        payload = poly_to_obj(F.payload)
    elif F.kind == "series":
        series, truncation = F.payload
        payload = {
            "parts": [poly_to_obj(p) for p in series.parts],
            "radius": series.radius,
            "truncation": truncation,
        }
    elif F.kind == "realization":
        payload = realization_to_obj(F.payload)
    elif F.kind == "control":
        payload = dict(F.payload)
    else:
        raise ValueError(f"handles of kind {F.kind!r} have no file form")
    return {"kind": F.kind, "payload": payload, "domain": domain_to_obj(F.domain)}


def handle_from_obj(obj, where: str = "handle") -> NCFunctionHandle:
    if not isinstance(obj, dict) or "kind" not in obj or "payload" not in obj:
        raise ParseError(f"{where}: expected an object with 'kind' and 'payload'")
    kind = obj["kind"]
    payload = obj["payload"]
    domain = domain_from_obj(obj["domain"], f"{where}: domain") if "domain" in obj else None
    if kind == "poly":
        return from_poly(poly_from_obj(payload, f"{where}: payload"), domain)
    if kind == "series":
        try:
            parts = [
                poly_from_obj(p, f"{where}: part {k}") for k, p in enumerate(payload["parts"])
            ]
            series = SeriesFunction(parts, float(payload["radius"]))
            truncation = int(payload.get("truncation", 24))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{where}: {exc}") from exc
        return from_series(series, truncation, domain)
    if kind == "realization":
        r = realization_from_obj(payload, f"{where}: payload")
        handle = from_realization(r)
        if domain is not None:
            handle = NCFunctionHandle(
                r.arity, domain, handle._evaluator, kind="realization", payload=r
            )
        return handle
    if kind == "control":
        try:
            return control_handle(payload["name"], int(payload.get("d", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{where}: {exc}") from exc
    raise ParseError(f"{where}: unknown handle kind {kind!r}")


def load_json(path: str):
    """Read a JSON document; malformed input raises ParseError with position."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


def write_json_atomic(path: str, obj) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dump_json(obj))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
