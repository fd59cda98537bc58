"""The free algebra on d letters: words, polynomials, matrix evaluation.

A word is a tuple of letter indices in ``[0, d)``; the empty word is the
unit.  Coefficient arithmetic is exact (complex doubles, no epsilon
pruning): only exact zeros are dropped, so the algebra itself introduces no
tolerances.  Words iterate in graded lexicographic order everywhere, which
keeps serialization and tests reproducible.
"""

from __future__ import annotations

from numbers import Number

import numpy as np

from .linalg import MatrixTuple

__all__ = ["Word", "grlex_key", "FreePoly", "variables"]

Word = tuple[int, ...]


def grlex_key(word: Word) -> tuple[int, Word]:
    """Sort key for graded lexicographic word order."""
    return (len(word), word)


class FreePoly:
    """Finitely supported map from words in d letters to complex coefficients."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None):
        arity = int(arity)
        if arity < 1:
            raise ValueError("arity must be at least 1")
        clean: dict[Word, complex] = {}
        for word, coeff in (terms or {}).items():
            w = tuple(int(j) for j in word)
            if any(j < 0 or j >= arity for j in w):
                raise ValueError(f"word {w} uses letters outside [0, {arity})")
            c = complex(coeff)
            if c != 0:
                clean[w] = clean.get(w, 0) + c
                if clean[w] == 0:
                    del clean[w]
        self.arity = arity
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, arity: int) -> "FreePoly":
        return cls(arity, {})

    @classmethod
    def one(cls, arity: int) -> "FreePoly":
        return cls(arity, {(): 1.0})

    @classmethod
    def constant(cls, arity: int, value) -> "FreePoly":
        return cls(arity, {(): complex(value)})

    @classmethod
    def letter(cls, arity: int, j: int) -> "FreePoly":
        if not 0 <= j < arity:
            raise ValueError(f"letter {j} out of range for arity {arity}")
        return cls(arity, {(j,): 1.0})

    @classmethod
    def from_word(cls, arity: int, word, coeff=1.0) -> "FreePoly":
        return cls(arity, {tuple(word): complex(coeff)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Largest word length, or -1 for the zero polynomial."""
        return max((len(w) for w in self.terms), default=-1)

    def sorted_terms(self) -> list[tuple[Word, complex]]:
        return [(w, self.terms[w]) for w in sorted(self.terms, key=grlex_key)]

    def coefficient(self, word) -> complex:
        return self.terms.get(tuple(word), 0j)

    def homogeneous_component(self, k: int) -> "FreePoly":
        """Restriction to words of length exactly k."""
        if k < 0:
            raise ValueError("degree must be nonnegative")
        return FreePoly(self.arity, {w: c for w, c in self.terms.items() if len(w) == k})

    def is_homogeneous(self, k: int) -> bool:
        return all(len(w) == k for w in self.terms)

    def scale_vars(self, s) -> "FreePoly":
        """Substitute x -> s*x: each degree-k coefficient picks up s**k."""
        s = complex(s)
        return FreePoly(self.arity, {w: c * s ** len(w) for w, c in self.terms.items()})

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other) -> "FreePoly":
        if isinstance(other, FreePoly):
            if other.arity != self.arity:
                raise ValueError("free polynomials of different arity")
            return other
        if isinstance(other, Number):
            return FreePoly.constant(self.arity, other)
        return NotImplemented

    def __add__(self, other) -> "FreePoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return FreePoly(self.arity, out)

    __radd__ = __add__

    def __neg__(self) -> "FreePoly":
        return FreePoly(self.arity, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other) -> "FreePoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "FreePoly":
        return (-self) + other

    def __mul__(self, other) -> "FreePoly":
        if isinstance(other, Number):
            return FreePoly(self.arity, {w: c * complex(other) for w, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Word, complex] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
        return FreePoly(self.arity, out)

    def __rmul__(self, other) -> "FreePoly":
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> "FreePoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = FreePoly.one(self.arity)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, FreePoly):
            return NotImplemented
        return self.arity == other.arity and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, tuple(self.sorted_terms())))

    # -- evaluation --------------------------------------------------------

    def evaluate(self, x: MatrixTuple) -> np.ndarray:
        """Substitute the components of ``x`` for the letters.

        The empty word contributes its coefficient times the identity, so
        the output is n-by-n for an input at dimension n.  Word products are
        built once per shared prefix.
        """
        if x.arity != self.arity:
            raise ValueError(f"polynomial in {self.arity} letters at a {x.arity}-tuple")
        n = x.dim
        cache: dict[Word, np.ndarray] = {(): np.eye(n, dtype=np.complex128)}

        def word_matrix(w: Word) -> np.ndarray:
            m = cache.get(w)
            if m is None:
                m = word_matrix(w[:-1]) @ x[w[-1]]
                cache[w] = m
            return m

        out = np.zeros((n, n), dtype=np.complex128)
        for w, c in self.sorted_terms():
            out += c * word_matrix(w)
        return out

    __call__ = evaluate

    def __repr__(self) -> str:
        if self.is_zero:
            return "FreePoly(0)"
        bits = []
        for w, c in self.sorted_terms()[:8]:
            mono = "*".join(f"x{j}" for j in w) if w else "1"
            bits.append(f"({c:.6g})*{mono}")
        tail = " + ..." if len(self.terms) > 8 else ""
        return f"FreePoly({' + '.join(bits)}{tail})"


def variables(arity: int) -> list[FreePoly]:
    """The d letter polynomials x0, ..., x{d-1}."""
    return [FreePoly.letter(arity, j) for j in range(arity)]
