"""Exact scalar arithmetic for the chart calculus.

Multivariate polynomials and rational functions over exact rationals, symbolic
partial derivatives, a recursive-descent parser for the expression language
used by model files, and fraction-free linear solving.

All values are immutable and kept in a canonical form (graded-lexicographic
term order, coprime numerator/denominator, integer-primitive denominator with
positive leading coefficient), so structural equality ``==`` decides
mathematical equality.  No floating point is used anywhere.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd as _int_gcd

__all__ = [
    "Poly",
    "RatFunc",
    "ParseError",
    "SingularMatrixError",
    "parse_expr",
    "partial",
    "poly_gcd",
    "determinant",
    "solve_linear",
]

_VAR_RE = re.compile(r"([A-Za-z_]+)([0-9]*)$")
_KEY_CACHE: dict[str, tuple[str, int]] = {}


def _var_key(name: str) -> tuple[str, int]:
    """Sort key giving the fixed global variable order (prefix, then number)."""
    key = _KEY_CACHE.get(name)
    if key is None:
        m = _VAR_RE.match(name)
        key = (m.group(1), int(m.group(2) or "0")) if m else (name, 0)
        _KEY_CACHE[name] = key
    return key


def _grlex(exp: tuple[int, ...]) -> tuple:
    return (sum(exp), exp)


class Poly:
    """A multivariate polynomial with ``Fraction`` coefficients.

    ``vars`` holds the variables that actually occur, sorted in the global
    variable order; ``terms`` maps exponent tuples (one entry per variable) to
    nonzero coefficients.  Construction canonicalizes, so two equal
    polynomials have identical storage.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, variables, terms):
        variables = tuple(variables)
        clean: dict[tuple[int, ...], Fraction] = {}
        for exp, coeff in terms.items():
            if not isinstance(coeff, Fraction):
                coeff = Fraction(coeff)
            if coeff != 0:
                clean[tuple(exp)] = coeff
        used = [i for i in range(len(variables)) if any(e[i] for e in clean)]
        order = sorted(used, key=lambda i: _var_key(variables[i]))
        if order == list(range(len(variables))):
            self.vars = variables
            self.terms = clean
        else:
            self.vars = tuple(variables[i] for i in order)
            self.terms = {tuple(e[i] for i in order): c for e, c in clean.items()}
        self._hash = None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "Poly":
        return _ZERO

    @staticmethod
    def one() -> "Poly":
        return _ONE

    @staticmethod
    def const(value) -> "Poly":
        return Poly((), {(): Fraction(value)})

    @staticmethod
    def variable(name: str) -> "Poly":
        return Poly((name,), {(1,): Fraction(1)})

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.vars

    def constant(self) -> Fraction:
        """The value of a constant polynomial."""
        if self.vars:
            raise ValueError("polynomial is not constant")
        return self.terms.get((), Fraction(0))

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def degree_in(self, name: str) -> int:
        if name not in self.vars:
            return 0
        i = self.vars.index(name)
        return max(e[i] for e in self.terms)

    # -- canonical order helpers --------------------------------------------

    def sorted_terms(self):
        """Terms in descending graded-lexicographic order."""
        return sorted(self.terms.items(), key=lambda kv: _grlex(kv[0]), reverse=True)

    def lead(self) -> tuple[tuple[int, ...], Fraction]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = max(self.terms, key=_grlex)
        return exp, self.terms[exp]

    # -- alignment ----------------------------------------------------------

    def _on_vars(self, variables: tuple[str, ...]) -> dict:
        """Re-key ``terms`` on a superset variable tuple."""
        if variables == self.vars:
            return self.terms
        pos = {v: i for i, v in enumerate(variables)}
        idx = [pos[v] for v in self.vars]
        width = len(variables)
        out = {}
        for exp, c in self.terms.items():
            e = [0] * width
            for pos, ev in zip(idx, exp):
                e[pos] = ev
            out[tuple(e)] = c
        return out

    def _aligned(self, other: "Poly"):
        if self.vars == other.vars:
            return self.vars, self.terms, other.terms
        merged = tuple(sorted(set(self.vars) | set(other.vars), key=_var_key))
        return merged, self._on_vars(merged), other._on_vars(merged)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        variables, a, b = self._aligned(other)
        out = dict(a)
        for exp, c in b.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return Poly(variables, out)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        variables, a, b = self._aligned(other)
        out = dict(a)
        for exp, c in b.items():
            out[exp] = out.get(exp, Fraction(0)) - c
        return Poly(variables, out)

    def __neg__(self):
        return Poly(self.vars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return _ZERO
            return Poly(self.vars, {e: c * other for e, c in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return _ZERO
        variables, a, b = self._aligned(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                exp = tuple(x + y for x, y in zip(ea, eb))
                prev = out.get(exp)
                out[exp] = ca * cb if prev is None else prev + ca * cb
        return Poly(variables, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial; use RatFunc")
        result = _ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- calculus ------------------------------------------------------------

    def partial(self, name: str) -> "Poly":
        """Partial derivative with respect to the named variable."""
        if name not in self.vars:
            return _ZERO
        i = self.vars.index(name)
        out = {}
        for exp, c in self.terms.items():
            k = exp[i]
            if k:
                e = list(exp)
                e[i] = k - 1
                key = tuple(e)
                prev = out.get(key)
                val = c * k
                out[key] = val if prev is None else prev + val
        return Poly(self.vars, out)

    def scale_vars(self, names, t_name: str) -> "Poly":
        """Substitute ``v -> t*v`` for every variable ``v`` in ``names``.

        Used to decide scaling behaviour: each term picks up ``t`` to the
        power of its total degree in the named variables.
        """
        positions = [i for i, v in enumerate(self.vars) if v in names]
        if not positions:
            return self
        variables = self.vars + (t_name,)
        out = {}
        for exp, c in self.terms.items():
            w = sum(exp[i] for i in positions)
            out[exp + (w,)] = c
        return Poly(variables, out)

    # -- equality / hashing / printing ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in self.sorted_terms():
            factors = [
                v if e == 1 else f"{v}^{e}"
                for v, e in zip(self.vars, exp)
                if e
            ]
            mag = abs(coeff)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not parts:
                parts.append(body if coeff > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(parts)


_ZERO = Poly((), {})
_ONE = Poly((), {(): Fraction(1)})


# -- integer-primitive normal form and exact division ------------------------


def _rational_content(p: Poly) -> Fraction:
    """Positive rational ``c`` such that ``p / c`` has coprime integer coefficients."""
    if p.is_zero():
        return Fraction(1)
    num = 0
    den = 1
    for c in p.terms.values():
        num = _int_gcd(num, c.numerator)
        den = den * c.denominator // _int_gcd(den, c.denominator)
    return Fraction(num, den)


def _primitive_assoc(p: Poly) -> Poly:
    """The integer-primitive, positive-leading associate of ``p``."""
    if p.is_zero():
        return p
    c = _rational_content(p)
    if p.lead()[1] < 0:
        c = -c
    return p * (1 / c)


def exact_div(a: Poly, b: Poly) -> Poly:
    """Exact polynomial division ``a / b``; raises ``ValueError`` if inexact."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero():
        return _ZERO
    if b.is_const():
        return a * (1 / b.constant())
    variables = tuple(sorted(set(a.vars) | set(b.vars), key=_var_key))
    ra = dict(a._on_vars(variables))
    tb = b._on_vars(variables)
    eb = max(tb, key=_grlex)
    cb = tb[eb]
    quot: dict[tuple[int, ...], Fraction] = {}
    while ra:
        ea = max(ra, key=_grlex)
        diff = tuple(x - y for x, y in zip(ea, eb))
        if any(d < 0 for d in diff):
            raise ValueError("inexact polynomial division")
        cq = ra[ea] / cb
        quot[diff] = cq
        for e, c in tb.items():
            key = tuple(x + y for x, y in zip(diff, e))
            val = ra.get(key, Fraction(0)) - cq * c
            if val:
                ra[key] = val
            else:
                ra.pop(key, None)
    return Poly(variables, quot)


# -- multivariate gcd (primitive pseudo-remainder sequence) -------------------


def _as_univar(p: Poly, name: str) -> dict[int, Poly]:
    if name not in p.vars:
        return {0: p}
    i = p.vars.index(name)
    rest = p.vars[:i] + p.vars[i + 1 :]
    out: dict[int, dict] = {}
    for exp, c in p.terms.items():
        d = exp[i]
        out.setdefault(d, {})[exp[:i] + exp[i + 1 :]] = c
    return {d: Poly(rest, t) for d, t in out.items()}


def _from_univar(coeffs: dict[int, Poly], name: str) -> Poly:
    x = Poly.variable(name)
    total = _ZERO
    for d, c in coeffs.items():
        total = total + c * x**d
    return total


def _content_wrt(p: Poly, name: str) -> Poly:
    g = _ZERO
    for c in _as_univar(p, name).values():
        g = poly_gcd(g, c)
        if g == _ONE:
            break
    return g


def _prem(a: Poly, b: Poly, name: str) -> Poly:
    """Pseudo-remainder of ``a`` by ``b`` as polynomials in ``name``."""
    ub = _as_univar(b, name)
    db = max(ub)
    lb = ub[db]
    x = Poly.variable(name)
    r = a
    dr = r.degree_in(name)
    while not r.is_zero() and dr >= db:
        ur = _as_univar(r, name)
        lr = ur[dr]
        r = r * lb - b * lr * x ** (dr - db)
        dr = r.degree_in(name)
    return r


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Greatest common divisor over the rationals.

    The result is the canonical associate: integer-primitive with positive
    leading coefficient (``1`` for coprime inputs).
    """
    if a.is_zero():
        return _primitive_assoc(b)
    if b.is_zero():
        return _primitive_assoc(a)
    if a.is_const() or b.is_const():
        return _ONE
    name = max(set(a.vars) | set(b.vars), key=_var_key)
    ca = _content_wrt(a, name)
    cb = _content_wrt(b, name)
    cont = poly_gcd(ca, cb)
    pa = _primitive_assoc(exact_div(a, ca))
    pb = _primitive_assoc(exact_div(b, cb))
    if pa.degree_in(name) < pb.degree_in(name):
        pa, pb = pb, pa
    while not pb.is_zero():
        r = _prem(pa, pb, name)
        if not r.is_zero():
            r = _primitive_assoc(exact_div(r, _content_wrt(r, name)))
        pa, pb = pb, r
    if pa.degree_in(name) == 0:
        # primitive parts are coprime
        return _primitive_assoc(cont)
    return _primitive_assoc(cont * pa)


class RatFunc:
    """A rational function: quotient of two :class:`Poly` in canonical form.

    Numerator and denominator are coprime; the denominator is an
    integer-primitive polynomial with positive leading coefficient (``1`` for
    polynomials).
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly = _ONE):
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            num, den = _ZERO, _ONE
        elif den is not _ONE and not (den.is_const() and den.constant() == 1):
            if den.is_const():
                num, den = num * (1 / den.constant()), _ONE
            else:
                g = poly_gcd(num, den)
                if not g.is_const():
                    num = exact_div(num, g)
                    den = exact_div(den, g)
                c = _rational_content(den)
                if den.lead()[1] < 0:
                    c = -c
                if c != 1:
                    num = num * (1 / c)
                    den = den * (1 / c)
                if den.is_const():
                    den = _ONE
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero() -> "RatFunc":
        return _RF_ZERO

    @staticmethod
    def one() -> "RatFunc":
        return _RF_ONE

    @staticmethod
    def const(value) -> "RatFunc":
        return RatFunc(Poly.const(value))

    @staticmethod
    def variable(name: str) -> "RatFunc":
        return RatFunc(Poly.variable(name))

    @staticmethod
    def coerce(value) -> "RatFunc":
        if isinstance(value, RatFunc):
            return value
        if isinstance(value, Poly):
            return RatFunc(value)
        if isinstance(value, (int, Fraction)):
            return RatFunc(Poly.const(value))
        raise TypeError(f"cannot interpret {value!r} as a rational function")

    # -- predicates -------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den is _ONE or self.den == _ONE

    def is_const(self) -> bool:
        return self.num.is_const() and self.is_poly()

    def constant(self) -> Fraction:
        if not self.is_const():
            raise ValueError("rational function is not constant")
        return self.num.constant()

    def free_vars(self) -> frozenset[str]:
        return frozenset(self.num.vars) | frozenset(self.den.vars)

    # -- arithmetic ---------------------------------------------------------------

    def __add__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        if self.is_poly() and other.is_poly():
            return RatFunc(self.num + other.num)
        return RatFunc(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        if self.is_poly() and other.is_poly():
            return RatFunc(self.num - other.num)
        return RatFunc(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __rsub__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        return other.__sub__(self)

    def __neg__(self):
        out = RatFunc.__new__(RatFunc)
        out.num = -self.num
        out.den = self.den
        out._hash = None
        return out

    def __mul__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        if self.is_poly() and other.is_poly():
            out = RatFunc.__new__(RatFunc)
            out.num = self.num * other.num
            out.den = _ONE
            out._hash = None
            return out
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        return other.__truediv__(self)

    def __pow__(self, n: int):
        if n == 0:
            return _RF_ONE
        if n < 0:
            if self.is_zero():
                raise ZeroDivisionError("zero rational function to a negative power")
            return RatFunc(self.den ** (-n), self.num ** (-n))
        return RatFunc(self.num**n, self.den**n)

    # -- calculus ---------------------------------------------------------------

    def partial(self, name: str) -> "RatFunc":
        """Partial derivative with respect to the named variable."""
        if self.is_poly():
            return RatFunc(self.num.partial(name))
        dn = self.num.partial(name)
        dd = self.den.partial(name)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def scale_vars(self, names, t_name: str) -> "RatFunc":
        return RatFunc(
            self.num.scale_vars(names, t_name), self.den.scale_vars(names, t_name)
        )

    # -- equality / hashing / printing --------------------------------------------

    def __eq__(self, other):
        other = _as_rf(other)
        if other is None:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __repr__(self):
        return f"RatFunc({self})"

    def __str__(self):
        if self.is_poly():
            return str(self.num)
        return f"({self.num})/({self.den})"


_RF_ZERO = RatFunc(_ZERO)
_RF_ONE = RatFunc(_ONE)


def _as_rf(value):
    if isinstance(value, RatFunc):
        return value
    if isinstance(value, (int, Fraction)):
        return RatFunc.const(value)
    return None


def partial(f: RatFunc, name: str) -> RatFunc:
    """Module-level alias for :meth:`RatFunc.partial`."""
    return RatFunc.coerce(f).partial(name)


# -- expression language -------------------------------------------------------
#
# expr   := term (('+' | '-') term)*
# term   := factor (('*' | '/') factor)*
# factor := base ('^' integer)?
# base   := integer | ident | '(' expr ')' | '-' factor


class ParseError(ValueError):
    """Syntax or name error in an expression, with a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|([-+*/^()]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(
                f"unexpected character {stripped[0]!r}",
                len(text) - len(stripped),
            )
        if m.group(1):
            tokens.append(("int", m.group(1), m.start(1)))
        elif m.group(2):
            tokens.append(("ident", m.group(2), m.start(2)))
        else:
            tokens.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = frozenset(variables)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self) -> RatFunc:
        value = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", offset)
        return value

    def expr(self) -> RatFunc:
        value = self.term()
        while True:
            kind, op, _ = self.peek()
            if kind == "op" and op in "+-":
                self.advance()
                rhs = self.term()
                value = value + rhs if op == "+" else value - rhs
            else:
                return value

    def term(self) -> RatFunc:
        value = self.factor()
        while True:
            kind, op, offset = self.peek()
            if kind == "op" and op in "*/":
                self.advance()
                rhs = self.factor()
                if op == "*":
                    value = value * rhs
                else:
                    if rhs.is_zero():
                        raise ParseError("division by the zero polynomial", offset)
                    value = value / rhs
            else:
                return value

    def factor(self) -> RatFunc:
        value = self.base()
        kind, op, _ = self.peek()
        if kind == "op" and op == "^":
            self.advance()
            sign = 1
            kind, text, offset = self.peek()
            if kind == "op" and text == "-":
                sign = -1
                self.advance()
                kind, text, offset = self.peek()
            if kind != "int":
                raise ParseError("expected an integer exponent", offset)
            self.advance()
            n = sign * int(text)
            if n < 0 and value.is_zero():
                raise ParseError("zero to a negative power", offset)
            value = value**n
        return value

    def base(self) -> RatFunc:
        kind, text, offset = self.advance()
        if kind == "int":
            return RatFunc.const(int(text))
        if kind == "ident":
            if text not in self.variables:
                raise ParseError(f"unknown variable {text!r}", offset)
            return RatFunc.variable(text)
        if kind == "op" and text == "(":
            value = self.expr()
            self.expect_op(")")
            return value
        if kind == "op" and text == "-":
            return -self.factor()
        raise ParseError(
            f"unexpected {text!r}" if text else "unexpected end of input", offset
        )


def parse_expr(text: str, variables) -> RatFunc:
    """Parse an expression over the declared variables into a :class:`RatFunc`.

    Raises :class:`ParseError` (with byte offset) on syntax errors and unknown
    variable names, and :class:`ZeroDivisionError` wrapped as a
    :class:`ParseError` on division by the zero polynomial.
    """
    return _Parser(text, variables).parse()


# -- exact linear algebra --------------------------------------------------------


class SingularMatrixError(ValueError):
    """The coefficient matrix is singular as a matrix of rational functions."""


def _cleared_rows(matrix, rhs):
    """Scale each row by its denominators, giving a Poly matrix ``[A | b]``."""
    rows = []
    for i, row in enumerate(matrix):
        entries = [RatFunc.coerce(v) for v in row]
        entries.append(RatFunc.coerce(rhs[i]) if rhs is not None else _RF_ZERO)
        scale = _ONE
        for v in entries:
            if not v.is_poly():
                scale = exact_div(scale * v.den, poly_gcd(scale, v.den))
        rows.append([v.num * exact_div(scale, v.den) for v in entries])
    return rows


def _bareiss(rows, ncols):
    """One-step fraction-free elimination below each pivot.

    Mutates ``rows`` into echelon form; returns (pivot columns, swap sign).
    Entries stay polynomial because each division by the previous pivot is
    exact (Sylvester's identity).
    """
    n = len(rows)
    sign = 1
    prev = _ONE
    piv_cols = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, n):
            if not rows[i][c].is_zero():
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            sign = -sign
        pivot = rows[r][c]
        row_r = rows[r]
        for i in range(r + 1, n):
            row_i = rows[i]
            factor = row_i[c]
            for j in range(len(row_i)):
                if j == c:
                    row_i[j] = _ZERO
                else:
                    row_i[j] = exact_div(row_i[j] * pivot - factor * row_r[j], prev)
        prev = pivot
        piv_cols.append(c)
        r += 1
        if r == n:
            break
    return piv_cols, sign


def determinant(matrix) -> RatFunc:
    """Determinant of a square matrix of rational functions (exact)."""
    n = len(matrix)
    if n == 0:
        return _RF_ONE
    entries = [[RatFunc.coerce(v) for v in row] for row in matrix]
    den = _RF_ONE
    rows = []
    for row in entries:
        scale = _ONE
        for v in row:
            if not v.is_poly():
                scale = exact_div(scale * v.den, poly_gcd(scale, v.den))
        den = den * RatFunc(scale)
        rows.append([v.num * exact_div(scale, v.den) for v in row])
    piv_cols, sign = _bareiss(rows, n)
    if len(piv_cols) < n:
        return _RF_ZERO
    det = rows[n - 1][piv_cols[-1]]
    return RatFunc(det * sign) / den


def solve_linear(matrix, rhs) -> list[RatFunc]:
    """Solve ``A x = b`` exactly over rational functions.

    Uses fraction-free (Bareiss) elimination on denominator-cleared rows.
    Raises :class:`SingularMatrixError` when ``A`` is singular.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("solve_linear expects a square system")
    rows = _cleared_rows(matrix, rhs)
    piv_cols, _ = _bareiss(rows, n)
    if len(piv_cols) < n:
        raise SingularMatrixError("coefficient matrix is singular")
    solution: list[RatFunc] = [RatFunc.zero()] * n
    for r in range(n - 1, -1, -1):
        c = piv_cols[r]
        acc = RatFunc(rows[r][n])
        for j in range(c + 1, n):
            if not rows[r][j].is_zero():
                acc = acc - RatFunc(rows[r][j]) * solution[j]
        solution[c] = acc / RatFunc(rows[r][c])
    return solution
