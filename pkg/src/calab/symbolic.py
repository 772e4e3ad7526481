"""Alphabets, words, configurations, cylinders, the shift and the 2^-i metric.

Ground vocabulary for the whole package.  Configurations come in two exact
flavours: spatially periodic (``CyclicConfiguration``, defined on all of Z)
and finite samples with an explicit validity interval
(``WindowConfiguration``).  Reading a window outside its validity interval is
a hard error, never a silent default.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

CODE_DTYPE = np.int8


class SymbolicError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=CODE_DTYPE)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite letter set; letters are indexed by small integer codes.

    Product alphabets keep their component alphabets in ``factors`` and pack
    component codes into a single mixed-radix code (last factor fastest).
    """

    letters: tuple[str, ...]
    factors: tuple["Alphabet", ...] = ()

    def __post_init__(self):
        if len(self.letters) < 1:
            raise SymbolicError("alphabet needs at least one letter")
        if len(set(self.letters)) != len(self.letters):
            raise SymbolicError("letters must be distinct")

    @classmethod
    def from_letters(cls, letters: str) -> "Alphabet":
        return cls(tuple(letters))

    @classmethod
    def product(cls, *factors: "Alphabet") -> "Alphabet":
        letters = []
        arities = [f.arity for f in factors]
        for code in range(int(np.prod(arities))):
            comps = _unpack_code(code, arities)
            letters.append("|".join(f.letters[c] for f, c in zip(factors, comps)))
        return cls(tuple(letters), tuple(factors))

    @property
    def arity(self) -> int:
        return len(self.letters)

    @property
    def is_product(self) -> bool:
        return bool(self.factors)

    def index(self, letter: str) -> int:
        return self.letters.index(letter)

    def pack(self, comps) -> int:
        arities = [f.arity for f in self.factors]
        code = 0
        for a, c in zip(arities, comps):
            code = code * a + int(c)
        return code

    def unpack(self, code: int) -> tuple[int, ...]:
        return _unpack_code(int(code), [f.arity for f in self.factors])

    def component_codes(self, row: np.ndarray, plane: int) -> np.ndarray:
        """Extract one factor's codes from a row of packed product codes."""
        arities = [f.arity for f in self.factors]
        div = 1
        for a in arities[plane + 1:]:
            div *= a
        return (np.asarray(row) // div) % arities[plane]

    def encode(self, text: str) -> np.ndarray:
        return np.array([self.index(ch) for ch in text], dtype=CODE_DTYPE)

    def decode(self, row: np.ndarray) -> str:
        if self.is_product:
            return " ".join(self.letters[int(c)] for c in row)
        return "".join(self.letters[int(c)] for c in row)

    def validate_row(self, row: np.ndarray):
        row = np.asarray(row)
        if row.size and (row.min() < 0 or row.max() >= self.arity):
            raise SymbolicError("letter code out of range for alphabet")


def _unpack_code(code: int, arities) -> tuple[int, ...]:
    comps = []
    for a in reversed(arities):
        comps.append(code % a)
        code //= a
    return tuple(reversed(comps))


@dataclass(frozen=True)
class Word:
    """Finite sequence of letter codes over an alphabet."""

    alphabet: Alphabet
    codes: np.ndarray

    def __post_init__(self):
        self.alphabet.validate_row(self.codes)
        object.__setattr__(self, "codes", _readonly(self.codes))

    def __len__(self):
        return len(self.codes)

    def __eq__(self, other):
        return (
            isinstance(other, Word)
            and self.alphabet.letters == other.alphabet.letters
            and np.array_equal(self.codes, other.codes)
        )

    def __hash__(self):
        return hash((self.alphabet.letters, self.codes.tobytes()))

    def text(self) -> str:
        return self.alphabet.decode(self.codes)


def _primitive_root(cells: np.ndarray) -> np.ndarray:
    """Shortest word w with cells = w repeated; classic failure-function trick."""
    n = len(cells)
    fail = np.zeros(n + 1, dtype=np.int64)
    k = 0
    for i in range(1, n):
        while k and cells[i] != cells[k]:
            k = fail[k]
        if cells[i] == cells[k]:
            k += 1
        fail[i + 1] = k
    p = n - fail[n]
    return cells[:p] if n % p == 0 else cells


def least_rotation(cells: np.ndarray) -> int:
    """Booth's algorithm: index of the lexicographically least rotation."""
    s = np.concatenate([cells, cells])
    n = len(cells)
    f = np.full(2 * n, -1, dtype=np.int64)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return int(k)


class CyclicConfiguration:
    """Spatially periodic point of A^Z, stored as the anchored period cell(0..P-1).

    Equality is equality as configurations (agreement on every cell of Z), so
    period words that are rotations/repetitions of each other compare equal
    when they induce the same configuration.
    """

    __slots__ = ("alphabet", "cells")

    def __init__(self, alphabet: Alphabet, cells):
        cells = np.asarray(cells, dtype=CODE_DTYPE)
        if cells.ndim != 1 or cells.size < 1:
            raise SymbolicError("cyclic configuration needs a non-empty period")
        alphabet.validate_row(cells)
        self.alphabet = alphabet
        self.cells = _readonly(cells)

    @classmethod
    def from_period(cls, alphabet: Alphabet, period, phase: int = 0) -> "CyclicConfiguration":
        period = np.asarray(period, dtype=CODE_DTYPE)
        return cls(alphabet, np.roll(period, -int(phase) % len(period)))

    @classmethod
    def from_text(cls, alphabet: Alphabet, text: str, phase: int = 0) -> "CyclicConfiguration":
        return cls.from_period(alphabet, alphabet.encode(text), phase)

    @property
    def period_length(self) -> int:
        return len(self.cells)

    def cell(self, i: int) -> int:
        return int(self.cells[i % len(self.cells)])

    def segment(self, lo: int, hi: int) -> np.ndarray:
        """Cells lo..hi inclusive (always defined)."""
        idx = np.arange(lo, hi + 1) % len(self.cells)
        return self.cells[idx]

    def shift(self, k: int) -> "CyclicConfiguration":
        return CyclicConfiguration(self.alphabet, np.roll(self.cells, -int(k)))

    def primitive(self) -> np.ndarray:
        return _primitive_root(self.cells)

    def rotation_class_key(self) -> bytes:
        """Canonical key shared by all shifts of this configuration."""
        p = self.primitive()
        r = least_rotation(p)
        return np.roll(p, -r).tobytes()

    def state_key(self) -> bytes:
        """Exact identity key (anchored); used by orbit detection."""
        return self.primitive().tobytes()

    def __eq__(self, other):
        return (
            isinstance(other, CyclicConfiguration)
            and self.alphabet.letters == other.alphabet.letters
            and self.state_key() == other.state_key()
        )

    def __hash__(self):
        return hash(self.state_key())

    def __repr__(self):
        head = self.alphabet.decode(self.cells[:24])
        dots = "..." if len(self.cells) > 24 else ""
        return f"CyclicConfiguration(P={len(self.cells)}, cells={head}{dots})"


class WindowConfiguration:
    """Finite sample of a configuration with an explicit validity interval.

    ``cells[0]`` sits at absolute coordinate ``origin``; only coordinates in
    ``valid = [lo, hi]`` are meaningful.  Applying a radius-r map shrinks the
    interval by r on each side (light-cone semantics).
    """

    __slots__ = ("alphabet", "cells", "origin", "valid")

    def __init__(self, alphabet: Alphabet, cells, origin: int, valid: tuple[int, int] | None = None):
        cells = np.asarray(cells, dtype=CODE_DTYPE)
        if cells.ndim != 1:
            raise SymbolicError("window cells must be one-dimensional")
        alphabet.validate_row(cells)
        lo, hi = valid if valid is not None else (origin, origin + len(cells) - 1)
        if lo < origin or hi > origin + len(cells) - 1 or lo > hi:
            raise SymbolicError("validity interval outside stored cells")
        self.alphabet = alphabet
        self.cells = _readonly(cells)
        self.origin = int(origin)
        self.valid = (int(lo), int(hi))

    def cell(self, i: int) -> int:
        lo, hi = self.valid
        if not lo <= i <= hi:
            raise SymbolicError(f"coordinate {i} outside valid interval [{lo}, {hi}]")
        return int(self.cells[i - self.origin])

    def segment(self, lo: int, hi: int) -> np.ndarray:
        vlo, vhi = self.valid
        if lo < vlo or hi > vhi:
            raise SymbolicError(f"segment [{lo}, {hi}] outside valid interval [{vlo}, {vhi}]")
        return self.cells[lo - self.origin: hi - self.origin + 1]

    def trimmed(self) -> "WindowConfiguration":
        """Drop stored cells outside the validity interval."""
        lo, hi = self.valid
        return WindowConfiguration(self.alphabet, self.segment(lo, hi), lo)

    def shift(self, k: int) -> "WindowConfiguration":
        lo, hi = self.valid
        return WindowConfiguration(self.alphabet, self.cells, self.origin - k, (lo - k, hi - k))

    def __repr__(self):
        return f"WindowConfiguration(origin={self.origin}, valid={self.valid}, n={len(self.cells)})"


Configuration = CyclicConfiguration | WindowConfiguration


def shift(x: Configuration, k: int) -> Configuration:
    """The shift map iterated k times: shift(x, k).cell(i) == x.cell(i + k)."""
    return x.shift(k)


@dataclass(frozen=True)
class Distance:
    value: Fraction
    lower_bound: bool = False

    def __float__(self):
        return float(self.value)


def distance(x: Configuration, y: Configuration) -> Distance:
    """2^-i metric over the common symmetric range around 0.

    Returns 2^-i for the smallest |i| where the configurations differ; if they
    agree on the whole comparable range the result is 0 flagged as a lower
    bound (the true distance may be positive beyond the windows).
    """
    c = _common_halfwidth(x, y)
    xs = x.segment(-c, c)
    ys = y.segment(-c, c)
    diff = np.nonzero(xs != ys)[0]
    if diff.size == 0:
        return Distance(Fraction(0), lower_bound=True)
    i = int(np.min(np.abs(diff - c)))
    return Distance(Fraction(1, 2 ** i))


def _common_halfwidth(x: Configuration, y: Configuration) -> int:
    bounds = []
    for z in (x, y):
        if isinstance(z, WindowConfiguration):
            lo, hi = z.valid
            if lo > 0 or hi < 0:
                raise SymbolicError("incomparable windows: validity does not cover 0")
            bounds.append(min(-lo, hi))
    return min(bounds) if bounds else 64


WILDCARD = None


@dataclass(frozen=True)
class Cylinder:
    """Set of configurations showing a fixed pattern starting at ``position``.

    Each entry of ``patterns`` constrains one cell: either an exact letter
    code, or (for product alphabets) a tuple of per-component codes with
    ``None`` meaning unconstrained.  A plain word cylinder [u]_t uses exact
    codes only.
    """

    alphabet: Alphabet
    position: int
    patterns: tuple

    @classmethod
    def word(cls, alphabet: Alphabet, position: int, codes) -> "Cylinder":
        return cls(alphabet, position, tuple(int(c) for c in np.asarray(codes)))

    @classmethod
    def from_text(cls, alphabet: Alphabet, position: int, text: str) -> "Cylinder":
        return cls.word(alphabet, position, alphabet.encode(text))

    @classmethod
    def component(cls, alphabet: Alphabet, plane: int, position: int, comp_codes) -> "Cylinder":
        """Constrain a single factor of a product alphabet over a span."""
        nfac = len(alphabet.factors)
        pats = []
        for c in np.asarray(comp_codes):
            pat = [WILDCARD] * nfac
            pat[plane] = int(c)
            pats.append(tuple(pat))
        return cls(alphabet, position, tuple(pats))

    @property
    def span(self) -> tuple[int, int]:
        return self.position, self.position + len(self.patterns) - 1

    def matches_row(self, row: np.ndarray, row_origin: int) -> bool:
        """Test membership against cells stored with row[0] at ``row_origin``."""
        off = self.position - row_origin
        if off < 0 or off + len(self.patterns) > len(row):
            raise SymbolicError("row does not cover the cylinder span")
        for j, pat in enumerate(self.patterns):
            code = int(row[off + j])
            if isinstance(pat, tuple):
                comps = self.alphabet.unpack(code)
                if any(p is not WILDCARD and p != c for p, c in zip(pat, comps)):
                    return False
            elif code != pat:
                return False
        return True

    def contains(self, x: Configuration) -> bool:
        lo, hi = self.span
        return self.matches_row(x.segment(lo, hi), lo)

    def shifted(self, t: int) -> "Cylinder":
        """The cylinder sigma^-t-pulled: x in result iff sigma^t(x) in self."""
        return Cylinder(self.alphabet, self.position + t, self.patterns)

    def describe(self) -> str:
        parts = []
        for j, pat in enumerate(self.patterns):
            if isinstance(pat, tuple):
                s = "|".join(
                    "*" if p is WILDCARD else self.alphabet.factors[k].letters[p]
                    for k, p in enumerate(pat)
                )
            else:
                s = self.alphabet.letters[pat]
            parts.append(s)
        return f"[{','.join(parts)}]_{self.position}"


def cylinder_of(x: Configuration, n: int) -> Cylinder:
    """C_n(x): the cylinder of x's central 2n+1 letters at position -n."""
    if n < 0:
        raise SymbolicError("n must be non-negative")
    return Cylinder.word(x.alphabet, -n, x.segment(-n, n))
