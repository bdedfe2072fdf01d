"""Chart-level tensor calculus on the total space of a trivialized bundle.

A chart has base coordinates ``x1..xn`` and fiber coordinates (``xi*`` or
``mu*``); a tensor field of type (p, q) with p <= 4 covariant slots and q in
{0, 1} is stored sparsely as a map from index tuples to rational-function
coefficients.  Indices run over all ``n + k`` coordinate directions, the
first ``n`` being base directions.

The module also implements the dictionary between fiberwise-linear tensor
fields and their frame components: a table ``D`` (one covariant-degree-p
value per frame section), one contraction table per slot, and the basic
base-manifold tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symcore import Poly, RatFunc

__all__ = [
    "Chart",
    "Section",
    "TensorField",
    "LinearComponents",
    "LeibnizError",
    "lie_derivative",
    "contract",
    "apply_tensor",
    "scaling_class",
    "vertical_lift",
    "extract_components",
    "assemble",
    "table_eq",
    "clean_table",
]

_SCALE_VAR = "_t"


@dataclass(frozen=True)
class Chart:
    """Coordinates on a trivialized bundle: base names plus fiber names."""

    base_names: tuple[str, ...]
    fiber_names: tuple[str, ...]

    def __post_init__(self):
        names = self.base_names + self.fiber_names
        if len(set(names)) != len(names):
            raise ValueError("chart coordinate names must be distinct")
        if _SCALE_VAR in names:
            raise ValueError(f"{_SCALE_VAR!r} is reserved")

    @staticmethod
    def standard(n: int, k: int, fiber: str = "xi") -> "Chart":
        return Chart(
            tuple(f"x{i + 1}" for i in range(n)),
            tuple(f"{fiber}{j + 1}" for j in range(k)),
        )

    @staticmethod
    def generalized(n: int) -> "Chart":
        """The double-fiber chart: tangent block ``xi*`` then covector block ``mu*``."""
        return Chart(
            tuple(f"x{i + 1}" for i in range(n)),
            tuple(f"xi{j + 1}" for j in range(n))
            + tuple(f"mu{j + 1}" for j in range(n)),
        )

    @property
    def n(self) -> int:
        return len(self.base_names)

    @property
    def k(self) -> int:
        return len(self.fiber_names)

    @property
    def dim(self) -> int:
        return self.n + self.k

    @property
    def names(self) -> tuple[str, ...]:
        return self.base_names + self.fiber_names

    def base(self) -> "Chart":
        return Chart(self.base_names, ())

    def dual(self) -> "Chart":
        """Same base, each fiber name swapped ``xi <-> mu`` (so dual is an involution)."""
        swapped = []
        for name in self.fiber_names:
            if name.startswith("xi"):
                swapped.append("mu" + name[2:])
            elif name.startswith("mu"):
                swapped.append("xi" + name[2:])
            else:
                raise ValueError(f"fiber name {name!r} has no dual counterpart")
        return Chart(self.base_names, tuple(swapped))

    def is_base_index(self, idx: int) -> bool:
        return idx < self.n

    def is_generalized(self) -> bool:
        n = self.n
        return self.k == 2 * n and self == Chart.generalized(n)

    def require_base_only(self, value: RatFunc, what: str) -> RatFunc:
        if value.free_vars() & set(self.fiber_names):
            raise ValueError(f"{what} must not involve fiber coordinates: {value}")
        return value


@dataclass(frozen=True)
class Section:
    """A section of the bundle: one base-only coefficient per fiber direction."""

    chart: Chart
    components: tuple[RatFunc, ...]

    def __post_init__(self):
        if len(self.components) != self.chart.k:
            raise ValueError("section needs one component per fiber direction")
        for c in self.components:
            self.chart.require_base_only(c, "section component")

    @staticmethod
    def frame(chart: Chart, j: int) -> "Section":
        comps = [RatFunc.zero()] * chart.k
        comps[j] = RatFunc.one()
        return Section(chart, tuple(comps))


class TensorField:
    """A (p, q) tensor field on a chart, q in {0, 1}, stored sparsely.

    Keys are index tuples; with q = 1 the first entry is the contravariant
    index, followed by the p covariant indices.
    """

    __slots__ = ("chart", "p", "q", "coeffs")

    def __init__(self, chart: Chart, p: int, q: int, coeffs: dict):
        if q not in (0, 1):
            raise ValueError("only q in {0, 1} is supported")
        if p < 0 or p > 4:
            raise ValueError("only p <= 4 covariant slots are supported")
        self.chart = chart
        self.p = p
        self.q = q
        clean = {}
        width = p + q
        for key, val in coeffs.items():
            val = RatFunc.coerce(val)
            if val.is_zero():
                continue
            if len(key) != width or any(not 0 <= i < chart.dim for i in key):
                raise ValueError(f"bad index tuple {key} for a ({p},{q}) tensor")
            clean[tuple(key)] = val
        self.coeffs = clean

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def vector(chart: Chart, components) -> "TensorField":
        return TensorField(
            chart, 0, 1, {(i,): c for i, c in enumerate(components)}
        )

    @staticmethod
    def coordinate_field(chart: Chart, idx: int) -> "TensorField":
        return TensorField(chart, 0, 1, {(idx,): RatFunc.one()})

    # -- access ----------------------------------------------------------------

    def get(self, key: tuple[int, ...]) -> RatFunc:
        return self.coeffs.get(key, RatFunc.zero())

    def is_zero(self) -> bool:
        return not self.coeffs

    def vector_components(self) -> list[RatFunc]:
        if (self.p, self.q) != (0, 1):
            raise ValueError("not a vector field")
        return [self.get((i,)) for i in range(self.chart.dim)]

    # -- algebra ------------------------------------------------------------------

    def _check_like(self, other: "TensorField"):
        if (
            not isinstance(other, TensorField)
            or self.chart != other.chart
            or self.p != other.p
            or self.q != other.q
        ):
            raise ValueError("tensor shapes or charts differ")

    def __add__(self, other):
        self._check_like(other)
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            cur = out.get(key)
            out[key] = val if cur is None else cur + val
        return TensorField(self.chart, self.p, self.q, out)

    def __sub__(self, other):
        self._check_like(other)
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            cur = out.get(key)
            out[key] = -val if cur is None else cur - val
        return TensorField(self.chart, self.p, self.q, out)

    def __neg__(self):
        return TensorField(
            self.chart, self.p, self.q, {k: -v for k, v in self.coeffs.items()}
        )

    def scale(self, f) -> "TensorField":
        f = RatFunc.coerce(f)
        return TensorField(
            self.chart, self.p, self.q, {k: v * f for k, v in self.coeffs.items()}
        )

    def tensor(self, other: "TensorField") -> "TensorField":
        """Tensor product; at most one factor may be contravariant."""
        if self.chart != other.chart:
            raise ValueError("charts differ")
        if self.q + other.q > 1:
            raise ValueError("at most one contravariant slot is supported")
        out: dict[tuple[int, ...], RatFunc] = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                if other.q == 1:
                    key = kb[:1] + ka + kb[1:]
                else:
                    key = ka + kb
                cur = out.get(key)
                prod = va * vb
                out[key] = prod if cur is None else cur + prod
        return TensorField(self.chart, self.p + other.p, self.q + other.q, out)

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.p == other.p
            and self.q == other.q
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        entries = ", ".join(
            f"{key}: {val}" for key, val in sorted(self.coeffs.items())
        )
        return f"TensorField(p={self.p}, q={self.q}, {{{entries}}})"


def lie_derivative(x: TensorField, t: TensorField) -> TensorField:
    """Lie derivative of ``t`` along the vector field ``x`` (coordinate formula)."""
    if (x.p, x.q) != (0, 1):
        raise ValueError("can only differentiate along a vector field")
    if x.chart != t.chart:
        raise ValueError("charts differ")
    chart = t.chart
    names = chart.names
    xc = {key[0]: val for key, val in x.coeffs.items()}
    # dx[(c, a)] = d X^a / d coordinate_c, nonzero entries only
    dx: dict[tuple[int, int], RatFunc] = {}
    for a, val in xc.items():
        for c, name in enumerate(names):
            d = val.partial(name)
            if not d.is_zero():
                dx[(c, a)] = d
    out: dict[tuple[int, ...], RatFunc] = {}

    def bump(key, val):
        if val.is_zero():
            return
        cur = out.get(key)
        out[key] = val if cur is None else cur + val

    q = t.q
    for key, coeff in t.coeffs.items():
        # transport term: X^c d_c T
        for c, xval in xc.items():
            d = coeff.partial(names[c])
            if not d.is_zero():
                bump(key, xval * d)
        if q:
            # contravariant correction: - T^c d_c X^a
            c = key[0]
            for (cc, a), dval in dx.items():
                if cc == c:
                    bump((a,) + key[1:], -(coeff * dval))
        # covariant corrections: + T(.., c at slot i, ..) d_{b_i} X^c
        for i in range(q, q + t.p):
            c = key[i]
            for (b, cc), dval in dx.items():
                if cc == c:
                    bump(key[:i] + (b,) + key[i + 1 :], coeff * dval)
    return TensorField(chart, t.p, t.q, out)


def contract(t: TensorField, slot: int, s: TensorField) -> TensorField:
    """Contract the vector field ``s`` into covariant slot ``slot`` (0-based)."""
    if (s.p, s.q) != (0, 1):
        raise ValueError("can only contract a vector field")
    if s.chart != t.chart:
        raise ValueError("charts differ")
    if not 0 <= slot < t.p:
        raise ValueError(f"no covariant slot {slot} in a p={t.p} tensor")
    pos = t.q + slot
    sc = {key[0]: val for key, val in s.coeffs.items()}
    out: dict[tuple[int, ...], RatFunc] = {}
    for key, coeff in t.coeffs.items():
        sval = sc.get(key[pos])
        if sval is None:
            continue
        new = key[:pos] + key[pos + 1 :]
        cur = out.get(new)
        prod = coeff * sval
        out[new] = prod if cur is None else cur + prod
    return TensorField(t.chart, t.p - 1, t.q, out)


def apply_tensor(t: TensorField, *fields: TensorField) -> TensorField:
    """Evaluate ``t`` on vector fields, contracting slots left to right."""
    if len(fields) != t.p:
        raise ValueError("wrong number of arguments")
    for f in fields:
        t = contract(t, 0, f)
    return t


def vertical_lift(s: Section) -> TensorField:
    """The vertical vector field with the section's coefficients."""
    chart = s.chart
    return TensorField(
        chart,
        0,
        1,
        {(chart.n + j,): c for j, c in enumerate(s.components)},
    )


def _scaled(t: TensorField) -> TensorField:
    """Pull back ``t`` by the fiber scaling, with the scale as a formal variable."""
    chart = t.chart
    fiber = set(chart.fiber_names)
    tvar = RatFunc.variable(_SCALE_VAR)
    out = {}
    for key, coeff in t.coeffs.items():
        c = coeff.scale_vars(fiber, _SCALE_VAR)
        w = sum(1 for i in key[t.q :] if not chart.is_base_index(i))
        if t.q and not chart.is_base_index(key[0]):
            w -= 1
        out[key] = c * tvar**w
    return TensorField(chart, t.p, t.q, out)


def scaling_class(t: TensorField) -> str:
    """Classify the scaling behaviour: ``"linear"``, ``"core"`` or ``"neither"``.

    Linear tensors reproduce themselves with weight ``1 - q`` under fiber
    scaling; core tensors have weight ``-q``.
    """
    scaled = _scaled(t)
    tvar = RatFunc.variable(_SCALE_VAR)
    for label, weight in (("linear", 1 - t.q), ("core", -t.q)):
        expected = TensorField(
            t.chart,
            t.p,
            t.q,
            {k: v * tvar**weight for k, v in t.coeffs.items()},
        )
        if scaled == expected:
            return label
    return "neither"


@dataclass(frozen=True, eq=False)
class LinearComponents:
    """Frame components of a linear (p, 1) tensor field.

    ``d`` maps ``(i, j, b1..bp)`` to the coefficient of ``s_i`` in the
    covariant-derivative-like table applied to the frame section ``s_j``;
    ``ls[m]`` maps ``(i, j, b1..b_{p-1})`` to the slot-``m`` contraction
    table; ``basic`` maps ``(a, b1..bp)`` to the base tensor.  All values are
    base-only.
    """

    chart: Chart
    p: int
    d: dict
    ls: tuple
    basic: dict

    def __eq__(self, other):
        if not isinstance(other, LinearComponents):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.p == other.p
            and table_eq(self.d, other.d)
            and len(self.ls) == len(other.ls)
            and all(table_eq(a, b) for a, b in zip(self.ls, other.ls))
            and table_eq(self.basic, other.basic)
        )


def table_eq(a: dict, b: dict) -> bool:
    keys = set(a) | set(b)
    zero = RatFunc.zero()
    return all(a.get(k, zero) == b.get(k, zero) for k in keys)


def clean_table(table: dict) -> dict:
    return {k: v for k, v in table.items() if not RatFunc.coerce(v).is_zero()}


class LeibnizError(ValueError):
    """Component tables violate the Leibniz compatibility rule."""

    def __init__(self, i: int, j: int, slot):
        super().__init__(
            f"Leibniz compatibility fails on section {j}, output {i}, slot {slot}"
        )
        self.witness = (i, j, slot)


def _core_to_table(chart: Chart, t: TensorField, j: int, what: str) -> dict:
    """Read a core (p,1) tensor as a frame table ``(i, j, base indices) -> value``."""
    n = chart.n
    out = {}
    for key, val in t.coeffs.items():
        if chart.is_base_index(key[0]) or any(
            not chart.is_base_index(b) for b in key[1:]
        ):
            raise ValueError(f"{what} has non-core components")
        chart.require_base_only(val, what)
        out[(key[0] - n, j) + key[1:]] = val
    return out


def extract_components(t: TensorField) -> LinearComponents:
    """Frame components of a linear (p, 1) tensor field.

    Raises ``ValueError`` when the tensor is not fiberwise linear.  The
    Leibniz compatibility of the result is re-verified on ``f = x1``.
    """
    if t.q != 1:
        raise ValueError("components are defined for q = 1 tensors")
    if scaling_class(t) != "linear":
        raise ValueError("tensor is not fiberwise linear")
    chart = t.chart
    n, k, p = chart.n, chart.k, t.p
    d_table: dict = {}
    l_tables: tuple = tuple({} for _ in range(p))
    basic: dict = {}
    for j in range(k):
        lift = vertical_lift(Section.frame(chart, j))
        d_table.update(
            _core_to_table(chart, lie_derivative(lift, t), j, "derivative component")
        )
        for m in range(p):
            l_tables[m].update(
                _core_to_table(chart, contract(t, m, lift), j, "contraction component")
            )
    for key, val in t.coeffs.items():
        if chart.is_base_index(key[0]) and all(
            chart.is_base_index(b) for b in key[1:]
        ):
            chart.require_base_only(val, "basic component")
            basic[(key[0],) + key[1:]] = val
    comps = LinearComponents(chart, p, d_table, l_tables, basic)
    if k and n:
        _verify_leibniz(t, comps, coords=(0,))
    return comps


def _leibniz_expected(
    comps: LinearComponents, f: RatFunc, j: int
) -> TensorField:
    """Right-hand side of the Leibniz rule for ``D(f s_j)`` as a core tensor."""
    chart = comps.chart
    n, p = chart.n, comps.p
    out: dict[tuple[int, ...], RatFunc] = {}

    def bump(key, val):
        if val.is_zero():
            return
        cur = out.get(key)
        out[key] = val if cur is None else cur + val

    for (i, jj, *bs), val in comps.d.items():
        if jj == j:
            bump((n + i, *bs), f * val)
    df = [f.partial(name) for name in chart.base_names]
    for m in range(p):
        for (i, jj, *bs), val in comps.ls[m].items():
            if jj != j:
                continue
            for b in range(n):
                if df[b].is_zero():
                    continue
                key = (n + i, *bs[:m], b, *bs[m:])
                bump(key, df[b] * val)
    for (a, *bs), val in comps.basic.items():
        if not df[a].is_zero():
            bump((n + j, *bs), -(df[a] * val))
    return TensorField(chart, p, 1, out)


def _verify_leibniz(t: TensorField, comps: LinearComponents, coords=None):
    """Check ``D(f s_j)`` against the Leibniz rule for coordinate functions ``f``."""
    chart = comps.chart
    coords = range(chart.n) if coords is None else coords
    for j in range(chart.k):
        for a in coords:
            f = RatFunc.variable(chart.base_names[a])
            sec = Section(
                chart,
                tuple(
                    f if i == j else RatFunc.zero() for i in range(chart.k)
                ),
            )
            actual = lie_derivative(vertical_lift(sec), t)
            expected = _leibniz_expected(comps, f, j)
            if actual != expected:
                diff = actual - expected
                key = next(iter(diff.coeffs))
                raise LeibnizError(key[0] - chart.n, j, key[1:])


def assemble(comps: LinearComponents) -> TensorField:
    """The unique linear (p, 1) tensor field with the given frame components.

    Tables must be base-only and dimensionally consistent; the Leibniz rule is
    verified on each base coordinate.
    """
    chart = comps.chart
    n, k, p = chart.n, chart.k, comps.p
    if len(comps.ls) != p:
        raise ValueError("need one contraction table per covariant slot")
    out: dict[tuple[int, ...], RatFunc] = {}

    def bump(key, val):
        cur = out.get(key)
        out[key] = val if cur is None else cur + val

    def check_key(key, width, fiber_first=2):
        if len(key) != width:
            raise ValueError(f"bad table key {key}")
        i, j = key[0], key[1]
        if not (0 <= i < k and 0 <= j < k):
            raise ValueError(f"fiber index out of range in table key {key}")
        if any(not 0 <= b < n for b in key[fiber_first:]):
            raise ValueError(f"base index out of range in table key {key}")

    for key, val in comps.d.items():
        check_key(key, p + 2)
        i, j, bs = key[0], key[1], key[2:]
        val = chart.require_base_only(RatFunc.coerce(val), "derivative table entry")
        xi = RatFunc.variable(chart.fiber_names[j])
        bump((n + i,) + bs, val * xi)
    for m in range(p):
        for key, val in comps.ls[m].items():
            check_key(key, p + 1)
            i, j, bs = key[0], key[1], key[2:]
            val = chart.require_base_only(
                RatFunc.coerce(val), "contraction table entry"
            )
            full = bs[:m] + (n + j,) + bs[m:]
            bump((n + i,) + full, val)
    for key, val in comps.basic.items():
        if len(key) != p + 1 or any(not 0 <= b < n for b in key):
            raise ValueError(f"bad basic table key {key}")
        val = chart.require_base_only(RatFunc.coerce(val), "basic table entry")
        bump(key, val)
    t = TensorField(chart, p, 1, out)
    if k and n:
        _verify_leibniz(t, comps)
    return t
