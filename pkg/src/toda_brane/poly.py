"""Exact arithmetic core: rationals, sparse parameter polynomials, truncated series.

Rationals are :class:`fractions.Fraction`.  :class:`ParamPoly` is a sparse
polynomial in the brane parameters ``P1 .. Pm`` with rational coefficients,
and :class:`TruncatedSeries` is a power series in ``z`` whose coefficients are
``ParamPoly`` values, known up to (and including) ``z**order``.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ArityError",
    "NonUnitConstant",
    "ParamPoly",
    "TruncatedSeries",
    "as_rational",
    "format_rational",
    "parse_rational",
    "series_d_dz",
    "series_mul",
    "series_pow",
]


class ArityError(ValueError):
    """Operands live in polynomial rings with different numbers of symbols."""


class NonUnitConstant(ValueError):
    """A series passed to :func:`series_pow` does not start with 1."""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are rejected: they would silently smuggle rounding into exact code.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not text:
        raise ValueError("empty rational")
    if "/" in text:
        num, den = text.split("/", 1)
        if not den.strip():
            raise ValueError(f"bad rational {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _grlex_key(exps: tuple[int, ...]):
    return (sum(exps), exps)


class ParamPoly:
    """Sparse polynomial in ``P1 .. Pm`` over the rationals.

    Terms are stored as ``{exponent tuple: Fraction}`` with zero coefficients
    dropped, so equality of the term maps is equality of polynomials.
    Instances are treated as immutable.
    """

    __slots__ = ("_terms", "arity")

    def __init__(self, terms: Mapping[tuple[int, ...], object] | None = None, arity: int = 0):
        self.arity = int(arity)
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.arity:
                raise ArityError(f"exponent vector {exps} does not have length {self.arity}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = as_rational(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict, arity: int) -> "ParamPoly":
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj._terms = terms
        obj.arity = arity
        return obj

    @classmethod
    def zero(cls, arity: int) -> "ParamPoly":
        return cls._raw({}, arity)

    @classmethod
    def const(cls, value, arity: int) -> "ParamPoly":
        value = as_rational(value)
        return cls._raw({(0,) * arity: value} if value else {}, arity)

    @classmethod
    def one(cls, arity: int) -> "ParamPoly":
        return cls.const(1, arity)

    @classmethod
    def symbol(cls, index: int, arity: int) -> "ParamPoly":
        """The generator ``P_{index+1}`` (``index`` is 0-based)."""
        if not 0 <= index < arity:
            raise IndexError(f"symbol index {index} out of range for arity {arity}")
        exps = [0] * arity
        exps[index] = 1
        return cls._raw({tuple(exps): Fraction(1)}, arity)

    @classmethod
    def monomial(cls, coeff, exps: Sequence[int]) -> "ParamPoly":
        return cls({tuple(exps): coeff}, arity=len(exps))

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in descending graded-lexicographic order (leading term first)."""
        return sorted(self._terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.arity, Fraction(0))

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def _coerce(self, other) -> "ParamPoly":
        if isinstance(other, ParamPoly):
            if other.arity != self.arity:
                raise ArityError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        return ParamPoly.const(as_rational(other), self.arity)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return ParamPoly._raw(out, self.arity)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._raw({e: -c for e, c in self._terms.items()}, self.arity)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "ParamPoly":
        factor = as_rational(factor)
        if not factor:
            return ParamPoly.zero(self.arity)
        return ParamPoly._raw({e: c * factor for e, c in self._terms.items()}, self.arity)

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        other = self._coerce(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return ParamPoly._raw({e: c for e, c in out.items() if c}, self.arity)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            if not other.is_constant() or other.is_zero():
                raise ZeroDivisionError("only division by a nonzero constant is supported")
            other = other.constant_term()
        return self.scale(1 / as_rational(other))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("ParamPoly powers must be non-negative integers")
        out = ParamPoly.one(self.arity)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.arity == other.arity and self._terms == other._terms
        try:
            q = as_rational(other)
        except TypeError:
            return NotImplemented
        return self.is_constant() and self.constant_term() == q

    def __hash__(self):
        return hash((self.arity, frozenset(self._terms.items())))

    def evaluate(self, values: Sequence) -> Fraction:
        """Substitute rationals for every symbol."""
        if len(values) != self.arity:
            raise ArityError(f"need {self.arity} values, got {len(values)}")
        vals = [as_rational(v) for v in values]
        total = Fraction(0)
        for exps, c in self._terms.items():
            term = c
            for v, e in zip(vals, exps):
                if e:
                    term *= v**e
            total += term
        return total

    def to_json(self) -> list[dict]:
        return [{"coeff": format_rational(c), "exps": list(e)} for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data: Iterable[Mapping], arity: int) -> "ParamPoly":
        terms: dict[tuple[int, ...], Fraction] = {}
        for item in data:
            if set(item) != {"coeff", "exps"}:
                raise ValueError(f"bad ParamPoly term {item!r}")
            e = tuple(item["exps"])
            terms[e] = terms.get(e, Fraction(0)) + parse_rational(str(item["coeff"]))
        return cls(terms, arity)

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for exps, c in self.sorted_terms():
            factors = []
            for i, e in enumerate(exps):
                if e == 1:
                    factors.append(f"P{i + 1}")
                elif e:
                    factors.append(f"P{i + 1}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors) if mag == 1 else f"{format_rational(mag)}*" + "*".join(factors)
            else:
                body = format_rational(mag)
            parts.append(("-" if c < 0 else "+", body))
        sign, first = parts[0]
        text = ("-" if sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"ParamPoly({self}, arity={self.arity})"


class TruncatedSeries:
    """Power series ``sum_k c_k z**k`` known through ``z**order``.

    Binary operations keep the smaller of the two orders.
    """

    __slots__ = ("coeffs", "arity")

    def __init__(self, coeffs: Sequence, arity: int | None = None):
        if not len(coeffs):
            raise ValueError("a series needs at least its constant term")
        if arity is None:
            polys = [c for c in coeffs if isinstance(c, ParamPoly)]
            if not polys:
                raise ValueError("arity must be given when no coefficient is a ParamPoly")
            arity = polys[0].arity
        out = []
        for c in coeffs:
            if isinstance(c, ParamPoly):
                if c.arity != arity:
                    raise ArityError(f"coefficient arity {c.arity} != {arity}")
                out.append(c)
            else:
                out.append(ParamPoly.const(c, arity))
        self.coeffs: tuple[ParamPoly, ...] = tuple(out)
        self.arity = arity

    @classmethod
    def one(cls, order: int, arity: int) -> "TruncatedSeries":
        return cls([1] + [0] * order, arity)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __iter__(self):
        return iter(self.coeffs)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError(f"cannot extend a series of order {self.order} to {order}")
        return TruncatedSeries(self.coeffs[: order + 1], self.arity)

    def _check(self, other: "TruncatedSeries"):
        if other.arity != self.arity:
            raise ArityError(f"arity mismatch: {self.arity} vs {other.arity}")

    def __add__(self, other: "TruncatedSeries"):
        self._check(other)
        n = min(self.order, other.order)
        return TruncatedSeries([self.coeffs[k] + other.coeffs[k] for k in range(n + 1)], self.arity)

    def __sub__(self, other: "TruncatedSeries"):
        self._check(other)
        n = min(self.order, other.order)
        return TruncatedSeries([self.coeffs[k] - other.coeffs[k] for k in range(n + 1)], self.arity)

    def __neg__(self):
        return TruncatedSeries([-c for c in self.coeffs], self.arity)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        if isinstance(other, ParamPoly):
            return TruncatedSeries([c * other for c in self.coeffs], self.arity)
        return TruncatedSeries([c.scale(other) for c in self.coeffs], self.arity)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, alpha):
        return series_pow(self, alpha)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.arity == other.arity and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.arity, self.coeffs))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def first_nonzero(self) -> int | None:
        for k, c in enumerate(self.coeffs):
            if not c.is_zero():
                return k
        return None

    def d_dz(self) -> "TruncatedSeries":
        return series_d_dz(self)

    def evaluate(self, z, values: Sequence | None = None) -> Fraction:
        """Exact value of the truncated polynomial at ``z`` (Horner)."""
        z = as_rational(z)
        vals = list(values) if values is not None else []
        total = Fraction(0)
        for c in reversed(self.coeffs):
            total = total * z + c.evaluate(vals)
        return total

    def substitute(self, values: Sequence) -> list[Fraction]:
        return [c.evaluate(values) for c in self.coeffs]

    def to_json(self) -> list:
        return [c.to_json() for c in self.coeffs]

    def __repr__(self):
        body = " + ".join(f"({c})*z^{k}" for k, c in enumerate(self.coeffs) if c)
        return f"TruncatedSeries({body or '0'}, order={self.order})"


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at ``min(a.order, b.order)``."""
    a._check(b)
    n = min(a.order, b.order)
    out = []
    for k in range(n + 1):
        acc = ParamPoly.zero(a.arity)
        for i in range(k + 1):
            ai, bj = a.coeffs[i], b.coeffs[k - i]
            if ai and bj:
                acc = acc + ai * bj
        out.append(acc)
    return TruncatedSeries(out, a.arity)


def power_coefficient(s: Sequence, p: Sequence, alpha: Fraction, k: int):
    """Coefficient ``k`` of ``s**alpha`` given ``s[0..k]`` and ``p[0..k-1]``.

    From ``s * p' = alpha * s' * p`` with ``s[0] = p[0] = 1``:
    ``p_k = (1/k) sum_{j=1..k} (alpha*j - (k - j)) s_j p_{k-j}``.
    Works for any coefficient ring with rational scaling.
    """
    acc = None
    for j in range(1, k + 1):
        w = (alpha * j - (k - j)) / k
        if not w or not s[j] or not p[k - j]:
            continue
        term = (s[j] * p[k - j]) * w
        acc = term if acc is None else acc + term
    return acc


def series_pow(s: TruncatedSeries, alpha) -> TruncatedSeries:
    """``s**alpha`` for rational ``alpha``; ``s`` must have constant term 1."""
    alpha = as_rational(alpha)
    if s.coeffs[0] != ParamPoly.one(s.arity):
        raise NonUnitConstant(f"constant term is {s.coeffs[0]}, expected 1")
    zero = ParamPoly.zero(s.arity)
    p = [ParamPoly.one(s.arity)]
    for k in range(1, s.order + 1):
        c = power_coefficient(s.coeffs, p, alpha, k)
        p.append(zero if c is None else c)
    return TruncatedSeries(p, s.arity)


def series_d_dz(s: TruncatedSeries) -> TruncatedSeries:
    """Term-wise derivative; order drops by one.

    An order-0 series is read as an exact constant, whose derivative is 0.
    """
    if s.order == 0:
        return TruncatedSeries([0], s.arity)
    return TruncatedSeries([c.scale(k) for k, c in enumerate(s.coeffs) if k], s.arity)
