"""Symbolic scalar expressions over chart coordinates and named parameters.

The kernel is deliberately small: immutable expression trees built from
rational constants, coordinates, parameters, field operations, integer and
rational powers, and a fixed set of opaque kernels (exp, log, sin, cos, abs).
Rational subexpressions normalize to an exact canonical form (expanded
numerator over a product of primitive denominator factors), which is what
makes exact Zero verdicts possible.  Kernel applications are carried along as
atoms with normalized arguments and are never rewritten.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Chart",
    "Expr",
    "ExprError",
    "ParseError",
    "EvalError",
    "TriState",
    "RationalMatrix",
    "parse",
    "diff",
    "normalize",
    "is_zero",
    "evaluate",
    "exact_linalg",
]


class ExprError(Exception):
    """Base error for the expression kernel."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvalError(ExprError):
    pass


_FUNCTIONS = ("exp", "log", "sin", "cos", "abs")

# ---------------------------------------------------------------------------
# Expression nodes.
#
# Nodes are plain tuples:
#   ('num', Fraction)
#   ('coord', name) / ('param', name)
#   ('add', (children...)) / ('mul', (children...))
#   ('div', num_node, den_node)
#   ('pow', base_node, int_exponent)
#   ('rpow', base_node, Fraction)      non-integer rational exponent
#   ('call', fn, arg_node)             fn in _FUNCTIONS
# ---------------------------------------------------------------------------

_ZERO = ("num", Fraction(0))
_ONE = ("num", Fraction(1))


def _mk_num(q) -> tuple:
    return ("num", Fraction(q))


def _mk_add(children) -> tuple:
    children = tuple(children)
    if not children:
        return _ZERO
    if len(children) == 1:
        return children[0]
    return ("add", children)


def _mk_mul(children) -> tuple:
    children = tuple(children)
    if not children:
        return _ONE
    if len(children) == 1:
        return children[0]
    return ("mul", children)


def _mk_pow(base: tuple, exponent: Fraction) -> tuple:
    exponent = Fraction(exponent)
    if exponent == 0:
        return _ONE
    if exponent == 1:
        return base
    if exponent.denominator == 1:
        return ("pow", base, int(exponent))
    return ("rpow", base, exponent)


class Expr:
    """Immutable symbolic expression.

    Supports the usual arithmetic operators; equality and hashing are
    structural on the underlying tree.
    """

    __slots__ = ("node", "_nf", "_canonical", "_hash")

    def __init__(self, node: tuple):
        object.__setattr__(self, "node", node)
        object.__setattr__(self, "_nf", None)
        object.__setattr__(self, "_canonical", False)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Expr is immutable")

    # -- construction helpers ------------------------------------------------
    @staticmethod
    def number(q) -> "Expr":
        return Expr(_mk_num(q))

    @staticmethod
    def coord(name: str) -> "Expr":
        return Expr(("coord", name))

    @staticmethod
    def param(name: str) -> "Expr":
        return Expr(("param", name))

    @staticmethod
    def call(fn: str, arg: "Expr") -> "Expr":
        if fn == "sqrt":
            return Expr(_mk_pow(arg.node, Fraction(1, 2)))
        if fn not in _FUNCTIONS:
            raise ExprError(f"unknown function {fn!r}")
        return Expr(("call", fn, arg.node))

    @staticmethod
    def _coerce(value) -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, (int, Fraction)):
            return Expr.number(value)
        raise TypeError(f"cannot coerce {value!r} to Expr")

    # -- operators -----------------------------------------------------------
    def __add__(self, other):
        other = Expr._coerce(other)
        return Expr(_mk_add((self.node, other.node)))

    __radd__ = __add__

    def __neg__(self):
        return Expr(_mk_mul((_mk_num(-1), self.node)))

    def __sub__(self, other):
        return self + (-Expr._coerce(other))

    def __rsub__(self, other):
        return Expr._coerce(other) + (-self)

    def __mul__(self, other):
        other = Expr._coerce(other)
        return Expr(_mk_mul((self.node, other.node)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Expr._coerce(other)
        return Expr(("div", self.node, other.node))

    def __rtruediv__(self, other):
        return Expr._coerce(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Expr):
            raise ExprError("exponent must be an integer or Fraction literal")
        return Expr(_mk_pow(self.node, Fraction(exponent)))

    def __eq__(self, other):
        return isinstance(other, Expr) and self.node == other.node

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.node)
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"Expr({to_string(self)})"

    def __str__(self):
        return to_string(self)

    # -- conveniences ---------------------------------------------------------
    @property
    def assumptions(self) -> tuple:
        """Nonvanishing assumptions accumulated while normalizing."""
        return tuple(sorted(_nf_of(self).assumptions))

    def is_rational(self) -> bool:
        """True when the normal form involves no opaque kernels."""
        nf = _nf_of(self)
        gens = set()
        for mono in nf.num:
            gens.update(v for v, _ in mono)
        for f, _ in nf.den:
            for mono in f:
                gens.update(v for v, _ in mono)
        return all(v[0] != "a" for v in gens)


ZERO = Expr.number(0)
ONE = Expr.number(1)


# ---------------------------------------------------------------------------
# Chart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """A single coordinate chart: names, excluded loci, parameter bindings.

    ``excluded`` lists expressions whose zero sets are removed from the
    domain; samplers reject points too close to them.
    """

    coords: tuple
    params: tuple = ()
    excluded: tuple = ()
    bindings: tuple = ()  # ((param_name, float), ...)

    def __post_init__(self):
        coords = tuple(self.coords)
        params = tuple(self.params)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "excluded", tuple(self.excluded))
        object.__setattr__(self, "bindings", tuple(self.bindings))
        if len(coords) < 1:
            raise ExprError("chart dimension must be at least 1")
        if len(set(coords)) != len(coords) or len(set(params)) != len(params):
            raise ExprError("coordinate and parameter names must be distinct")
        if set(coords) & set(params):
            raise ExprError("coordinate and parameter names must be disjoint")

    @property
    def m(self) -> int:
        return len(self.coords)

    def parse(self, text: str) -> Expr:
        return parse(text, self)

    def with_excluded(self, *loci: Expr) -> "Chart":
        return Chart(self.coords, self.params, self.excluded + tuple(loci), self.bindings)

    def with_bindings(self, **values: float) -> "Chart":
        unknown = set(values) - set(self.params)
        if unknown:
            raise ExprError(f"unknown parameters {sorted(unknown)}")
        merged = dict(self.bindings)
        merged.update(values)
        return Chart(self.coords, self.params, self.excluded, tuple(sorted(merged.items())))

    def binding_map(self) -> dict:
        return dict(self.bindings)

    def env(self, point: Sequence[float], extra: Mapping[str, float] | None = None) -> dict:
        if len(point) != self.m:
            raise EvalError(f"point has length {len(point)}, chart dimension is {self.m}")
        env = dict(zip(self.coords, (float(v) for v in point)))
        env.update(self.binding_map())
        if extra:
            env.update(extra)
        return env


# ---------------------------------------------------------------------------
# Polynomial layer.
#
# A monomial is a sorted tuple of (generator, exponent) pairs; a polynomial is
# a dict {monomial: Fraction}.  Generators are tagged tuples:
#   ('c', name)  coordinate        ('p', name)  parameter
#   ('a', canonical_print)         opaque kernel atom
# The tag ordering makes term order deterministic across runs.
# ---------------------------------------------------------------------------

_ATOMS: dict = {}  # canonical print -> atom node


def _atom_key(node: tuple) -> tuple:
    text = _print(node, 0)
    if text not in _ATOMS:
        _ATOMS[text] = node
    return ("a", text)


def _atom_node(key: tuple) -> tuple:
    return _ATOMS[key[1]]


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    merged = {}
    for v, e in a:
        merged[v] = merged.get(v, 0) + e
    for v, e in b:
        merged[v] = merged.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in merged.items() if e))


def _mono_div(a: tuple, b: tuple):
    db = dict(b)
    out = []
    for v, e in a:
        r = e - db.pop(v, 0)
        if r < 0:
            return None
        if r:
            out.append((v, r))
    if db:
        return None
    return tuple(out)


def _mono_degree(m: tuple) -> int:
    return sum(e for _, e in m)


def _mono_cmp(a: tuple, b: tuple) -> int:
    """Graded lexicographic order (smaller generators rank higher).

    A genuine monomial order: multiplicative, so leading terms of products
    are products of leading terms, which exact division relies on.
    """
    da, db = _mono_degree(a), _mono_degree(b)
    if da != db:
        return -1 if da < db else 1
    ia = ib = 0
    while ia < len(a) and ib < len(b):
        va, ea = a[ia]
        vb, eb = b[ib]
        if va == vb:
            if ea != eb:
                return 1 if ea > eb else -1
            ia += 1
            ib += 1
        elif va < vb:
            return 1
        else:
            return -1
    if ia < len(a):
        return 1
    if ib < len(b):
        return -1
    return 0


_mono_key = functools.cmp_to_key(_mono_cmp)


def _p_zero() -> dict:
    return {}


def _p_const(q: Fraction) -> dict:
    return {(): q} if q else {}


def _p_gen(key: tuple) -> dict:
    return {((key, 1),): Fraction(1)}


def _p_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, Fraction(0)) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def _p_scale(a: dict, q: Fraction) -> dict:
    if not q:
        return {}
    return {m: c * q for m, c in a.items()}


def _p_mul(a: dict, b: dict) -> dict:
    if not a or not b:
        return {}
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mono_mul(ma, mb)
            s = out.get(m, Fraction(0)) + ca * cb
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def _p_pow(a: dict, k: int) -> dict:
    result = _p_const(Fraction(1))
    base = a
    while k:
        if k & 1:
            result = _p_mul(result, base)
        base = _p_mul(base, base) if k > 1 else base
        k >>= 1
    return result


def _p_diff(a: dict, key: tuple) -> dict:
    out = {}
    for m, c in a.items():
        for i, (v, e) in enumerate(m):
            if v == key:
                nm = m[:i] + ((v, e - 1),) * (e > 1) + m[i + 1 :]
                s = out.get(nm, Fraction(0)) + c * e
                if s:
                    out[nm] = s
                else:
                    out.pop(nm, None)
                break
    return out


def _p_subs(a: dict, key: tuple, value: dict) -> dict:
    """Substitute a polynomial for one generator."""
    out = {}
    powers = {0: _p_const(Fraction(1))}

    def power(k):
        if k not in powers:
            powers[k] = _p_mul(power(k - 1), value)
        return powers[k]

    for m, c in a.items():
        rest = tuple((v, e) for v, e in m if v != key)
        deg = sum(e for v, e in m if v == key)
        term = _p_scale(power(deg), c)
        for mt, ct in term.items():
            nm = _mono_mul(mt, rest)
            s = out.get(nm, Fraction(0)) + ct
            if s:
                out[nm] = s
            else:
                out.pop(nm, None)
    return out


def _p_leading(a: dict) -> tuple:
    return max(a, key=_mono_key)


def _p_div_exact(num: dict, den: dict):
    """Exact multivariate division; returns the quotient or None."""
    if not num:
        return {}
    if not den:
        raise ExprError("division by zero polynomial")
    den_lm = _p_leading(den)
    den_lc = den[den_lm]
    rem = dict(num)
    quot = {}
    while rem:
        lm = _p_leading(rem)
        qm = _mono_div(lm, den_lm)
        if qm is None:
            return None
        qc = rem[lm] / den_lc
        quot[qm] = quot.get(qm, Fraction(0)) + qc
        for m, c in den.items():
            nm = _mono_mul(m, qm)
            s = rem.get(nm, Fraction(0)) - c * qc
            if s:
                rem[nm] = s
            else:
                rem.pop(nm, None)
    return quot


def _p_primitive(a: dict):
    """Return (scale, primitive) with a == scale * primitive.

    The primitive part has coprime integer coefficients and positive leading
    coefficient, giving denominator factors one canonical representative.
    """
    if not a:
        return Fraction(1), {}
    num_gcd = 0
    den_lcm = 1
    for c in a.values():
        num_gcd = math.gcd(num_gcd, abs(c.numerator))
        den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
    scale = Fraction(num_gcd, den_lcm)
    if a[_p_leading(a)] < 0:
        scale = -scale
    return scale, {m: c / scale for m, c in a.items()}


def _p_sort_key(a: dict) -> tuple:
    # Hashable canonical identity for a polynomial (factor merging, dedup).
    return tuple(sorted(a.items()))


def _p_is_const(a: dict) -> bool:
    return not a or (len(a) == 1 and () in a)


# ---------------------------------------------------------------------------
# Normal form: expanded numerator over a product of primitive factors.
# ---------------------------------------------------------------------------


class _NF:
    __slots__ = ("num", "den", "assumptions")

    def __init__(self, num: dict, den: tuple, assumptions: frozenset):
        self.num = num
        self.den = den  # tuple of (primitive poly, multiplicity)
        self.assumptions = assumptions

    def is_zero(self) -> bool:
        return not self.num


def _den_product(den: Iterable) -> dict:
    out = _p_const(Fraction(1))
    for f, k in den:
        out = _p_mul(out, _p_pow(f, k))
    return out


def _nf_make(num: dict, factors: Iterable, assumptions: frozenset) -> _NF:
    merged: dict = {}
    scale = Fraction(1)
    for f, k in factors:
        if k == 0:
            continue
        s, fp = _p_primitive(f)
        if not fp:
            raise ExprError("division by zero")
        scale *= s**k
        if _p_is_const(fp):
            scale *= fp.get((), Fraction(1)) ** k
            continue
        key = _p_sort_key(fp)
        if key in merged:
            merged[key] = (fp, merged[key][1] + k)
        else:
            merged[key] = (fp, k)
    num = _p_scale(num, Fraction(1) / scale)
    if not num:
        return _NF({}, (), assumptions)
    cancelled = []
    final = []
    for key in sorted(merged):
        f, k = merged[key]
        while k > 0:
            q = _p_div_exact(num, f)
            if q is None:
                break
            num = q
            k -= 1
            if f not in cancelled:
                cancelled.append(f)
        if k > 0:
            final.append((f, k))
    if cancelled:
        assumptions = assumptions | {
            f"{_poly_str(f)} != 0" for f in cancelled
        }
    return _NF(num, tuple(final), assumptions)


def _nf_const(q: Fraction) -> _NF:
    return _NF(_p_const(Fraction(q)), (), frozenset())


def _nf_gen(key: tuple) -> _NF:
    return _NF(_p_gen(key), (), frozenset())


def _nf_add(a: _NF, b: _NF) -> _NF:
    asm = a.assumptions | b.assumptions
    if a.is_zero():
        return _NF(b.num, b.den, asm)
    if b.is_zero():
        return _NF(a.num, a.den, asm)
    da = {_p_sort_key(f): (f, k) for f, k in a.den}
    db = {_p_sort_key(f): (f, k) for f, k in b.den}
    lcm = {}
    for key in set(da) | set(db):
        fa = da.get(key)
        fb = db.get(key)
        f = (fa or fb)[0]
        lcm[key] = (f, max(fa[1] if fa else 0, fb[1] if fb else 0))
    na = a.num
    nb = b.num
    for key, (f, k) in lcm.items():
        ka = da.get(key, (f, 0))[1]
        kb = db.get(key, (f, 0))[1]
        if k > ka:
            na = _p_mul(na, _p_pow(f, k - ka))
        if k > kb:
            nb = _p_mul(nb, _p_pow(f, k - kb))
    return _nf_make(_p_add(na, nb), tuple(lcm.values()), asm)


def _nf_mul(a: _NF, b: _NF) -> _NF:
    return _nf_make(
        _p_mul(a.num, b.num), tuple(a.den) + tuple(b.den), a.assumptions | b.assumptions
    )


def _nf_ipow(a: _NF, k: int) -> _NF:
    if k == 0:
        return _nf_const(Fraction(1))
    if k > 0:
        return _nf_make(_p_pow(a.num, k), tuple((f, m * k) for f, m in a.den), a.assumptions)
    if a.is_zero():
        raise ExprError("division by zero")
    k = -k
    num = _p_pow(_den_product(a.den), k)
    return _nf_make(num, ((a.num, k),), a.assumptions)


def _nf_div(a: _NF, b: _NF) -> _NF:
    return _nf_mul(a, _nf_ipow(b, -1))


# ---------------------------------------------------------------------------
# Tree -> normal form
# ---------------------------------------------------------------------------


def _fold_call(fn: str, arg: tuple):
    if arg[0] != "num":
        return None
    q = arg[1]
    if fn == "abs":
        return _mk_num(abs(q))
    if fn == "exp" and q == 0:
        return _ONE
    if fn == "log" and q == 1:
        return _ZERO
    if fn == "sin" and q == 0:
        return _ZERO
    if fn == "cos" and q == 0:
        return _ONE
    return None


def _tree_to_nf(node: tuple) -> _NF:
    kind = node[0]
    if kind == "num":
        return _nf_const(node[1])
    if kind == "coord":
        return _nf_gen(("c", node[1]))
    if kind == "param":
        return _nf_gen(("p", node[1]))
    if kind == "add":
        nf = _nf_const(Fraction(0))
        for child in node[1]:
            nf = _nf_add(nf, _tree_to_nf(child))
        return nf
    if kind in ("mul", "div", "pow"):
        return _multiplicative_nf(node)
    if kind == "rpow":
        base_nf = _tree_to_nf(node[1])
        base = _nf_to_tree(base_nf)
        if base == _ZERO and node[2] > 0:
            return _nf_const(Fraction(0))
        if base == _ONE:
            return _nf_const(Fraction(1))
        atom = ("rpow", base, node[2])
        nf = _nf_gen(_atom_key(atom))
        return _NF(nf.num, nf.den, base_nf.assumptions)
    if kind == "call":
        arg_nf = _tree_to_nf(node[2])
        arg = _nf_to_tree(arg_nf)
        folded = _fold_call(node[1], arg)
        if folded is not None:
            return _NF(_tree_to_nf(folded).num, (), arg_nf.assumptions)
        atom = ("call", node[1], arg)
        nf = _nf_gen(_atom_key(atom))
        return _NF(nf.num, nf.den, arg_nf.assumptions)
    raise ExprError(f"unknown node kind {kind!r}")


def _multiplicative_nf(node: tuple) -> _NF:
    """Flatten a mul/div/pow spine, keeping denominator factors unexpanded."""
    leaves = []  # (node, integer exponent)

    def walk(nd, k):
        kind = nd[0]
        if kind == "mul":
            for child in nd[1]:
                walk(child, k)
        elif kind == "div":
            walk(nd[1], k)
            walk(nd[2], -k)
        elif kind == "pow":
            walk(nd[1], k * nd[2])
        else:
            leaves.append((nd, k))

    walk(node, 1)
    num = _p_const(Fraction(1))
    factors = []
    assumptions = frozenset()
    for nd, k in leaves:
        nf = _tree_to_nf(nd)
        assumptions |= nf.assumptions
        if k > 0:
            num = _p_mul(num, _p_pow(nf.num, k))
            factors.extend((f, m * k) for f, m in nf.den)
        elif k < 0:
            if nf.is_zero():
                raise ExprError("division by zero")
            num = _p_mul(num, _p_pow(_den_product(nf.den), -k))
            factors.append((nf.num, -k))
    return _nf_make(num, factors, assumptions)


# ---------------------------------------------------------------------------
# Normal form -> canonical tree
# ---------------------------------------------------------------------------


def _gen_node(key: tuple) -> tuple:
    tag = key[0]
    if tag == "c":
        return ("coord", key[1])
    if tag == "p":
        return ("param", key[1])
    return _atom_node(key)


def _mono_tree(coeff: Fraction, mono: tuple) -> tuple:
    parts = []
    if coeff != 1 or not mono:
        parts.append(_mk_num(coeff))
    for v, e in mono:
        base = _gen_node(v)
        parts.append(base if e == 1 else ("pow", base, e))
    return _mk_mul(parts)


def _poly_tree(a: dict) -> tuple:
    if not a:
        return _ZERO
    terms = sorted(a.items(), key=lambda item: _mono_key(item[0]), reverse=True)
    return _mk_add(tuple(_mono_tree(c, m) for m, c in terms))


def _poly_str(a: dict) -> str:
    return _print(_poly_tree(a), 0)


def _nf_to_tree(nf: _NF) -> tuple:
    num = _poly_tree(nf.num)
    if not nf.den or nf.is_zero():
        return num
    dens = tuple(
        _poly_tree(f) if k == 1 else ("pow", _poly_tree(f), k) for f, k in nf.den
    )
    return ("div", num, _mk_mul(dens))


def _nf_of(e: Expr) -> _NF:
    nf = e._nf
    if nf is None:
        nf = _tree_to_nf(e.node)
        object.__setattr__(e, "_nf", nf)
    return nf


def normalize(e: Expr) -> Expr:
    """Canonical form; idempotent, exact on the rational fragment."""
    if e._canonical:
        return e
    nf = _nf_of(e)
    out = Expr(_nf_to_tree(nf))
    object.__setattr__(out, "_nf", nf)
    object.__setattr__(out, "_canonical", True)
    return out


# ---------------------------------------------------------------------------
# Differentiation (tree level; callers normalize when they need canon forms).
# ---------------------------------------------------------------------------


def diff(e: Expr, var: str) -> Expr:
    """Partial derivative with respect to a chart coordinate."""
    return Expr(_diff_node(e.node, var))


def _diff_node(node: tuple, var: str) -> tuple:
    kind = node[0]
    if kind in ("num", "param"):
        return _ZERO
    if kind == "coord":
        return _ONE if node[1] == var else _ZERO
    if kind == "add":
        return _mk_add(tuple(_diff_node(c, var) for c in node[1]))
    if kind == "mul":
        children = node[1]
        terms = []
        for i, child in enumerate(children):
            d = _diff_node(child, var)
            if d == _ZERO:
                continue
            terms.append(_mk_mul(children[:i] + (d,) + children[i + 1 :]))
        return _mk_add(tuple(terms))
    if kind == "div":
        a, b = node[1], node[2]
        da, db = _diff_node(a, var), _diff_node(b, var)
        num = _mk_add((_mk_mul((da, b)), _mk_mul((_mk_num(-1), a, db))))
        return ("div", num, ("pow", b, 2))
    if kind == "pow":
        base, k = node[1], node[2]
        db = _diff_node(base, var)
        if db == _ZERO:
            return _ZERO
        return _mk_mul((_mk_num(k), _mk_pow(base, Fraction(k - 1)), db))
    if kind == "rpow":
        base, r = node[1], node[2]
        db = _diff_node(base, var)
        if db == _ZERO:
            return _ZERO
        return _mk_mul((_mk_num(r), _mk_pow(base, r - 1), db))
    if kind == "call":
        fn, arg = node[1], node[2]
        du = _diff_node(arg, var)
        if du == _ZERO:
            return _ZERO
        if fn == "exp":
            outer = ("call", "exp", arg)
        elif fn == "log":
            return _mk_mul((("div", du, arg),))
        elif fn == "sin":
            outer = ("call", "cos", arg)
        elif fn == "cos":
            outer = _mk_mul((_mk_num(-1), ("call", "sin", arg)))
        elif fn == "abs":
            # sign(u) * u' away from the zero locus of u
            outer = ("div", arg, ("call", "abs", arg))
        else:  # pragma: no cover
            raise ExprError(f"cannot differentiate {fn}")
        return _mk_mul((outer, du))
    raise ExprError(f"unknown node kind {kind!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_TINY = 1e-300


def _eval_node(node: tuple, env: Mapping[str, float]) -> float:
    kind = node[0]
    if kind == "num":
        return float(node[1])
    if kind in ("coord", "param"):
        try:
            return env[node[1]]
        except KeyError:
            raise EvalError(f"unbound symbol {node[1]!r}") from None
    if kind == "add":
        return math.fsum(_eval_node(c, env) for c in node[1])
    if kind == "mul":
        out = 1.0
        for c in node[1]:
            out *= _eval_node(c, env)
        return out
    if kind == "div":
        den = _eval_node(node[2], env)
        if abs(den) < _TINY:
            raise EvalError("division by a value with magnitude below 1e-300")
        return _eval_node(node[1], env) / den
    if kind == "pow":
        base = _eval_node(node[1], env)
        k = node[2]
        if k < 0 and abs(base) < _TINY:
            raise EvalError("division by a value with magnitude below 1e-300")
        return base**k
    if kind == "rpow":
        base = _eval_node(node[1], env)
        r = node[2]
        if base > 0:
            return base ** float(r)
        if base == 0:
            if r > 0:
                return 0.0
            raise EvalError("zero raised to a negative power")
        if r.denominator % 2 == 1:
            mag = abs(base) ** float(r)
            return -mag if r.numerator % 2 else mag
        raise EvalError("even root of a negative value")
    if kind == "call":
        fn = node[1]
        u = _eval_node(node[2], env)
        try:
            if fn == "exp":
                return math.exp(u)
            if fn == "log":
                if u <= 0:
                    raise EvalError("log of a non-positive value")
                return math.log(u)
            if fn == "sin":
                return math.sin(u)
            if fn == "cos":
                return math.cos(u)
            if fn == "abs":
                return abs(u)
        except OverflowError:
            raise EvalError("overflow in kernel evaluation") from None
    raise ExprError(f"unknown node kind {kind!r}")


def evaluate(
    e: Expr,
    point: Sequence[float],
    chart: Chart,
    bindings: Mapping[str, float] | None = None,
) -> float:
    """IEEE double evaluation at a chart point."""
    return _eval_node(e.node, chart.env(point, bindings))


def _exact_eval(node: tuple, env: Mapping[str, Fraction]) -> Fraction:
    """Exact rational evaluation; raises on opaque kernels."""
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind in ("coord", "param"):
        try:
            return env[node[1]]
        except KeyError:
            raise EvalError(f"unbound symbol {node[1]!r}") from None
    if kind == "add":
        return sum((_exact_eval(c, env) for c in node[1]), Fraction(0))
    if kind == "mul":
        out = Fraction(1)
        for c in node[1]:
            out *= _exact_eval(c, env)
        return out
    if kind == "div":
        den = _exact_eval(node[2], env)
        if den == 0:
            raise EvalError("exact division by zero")
        return _exact_eval(node[1], env) / den
    if kind == "pow":
        base = _exact_eval(node[1], env)
        if node[2] < 0 and base == 0:
            raise EvalError("exact division by zero")
        return base ** node[2]
    if kind == "call" and node[1] == "abs":
        return abs(_exact_eval(node[2], env))
    raise EvalError("expression is not in the exact rational fragment")


def compile_expr(
    e: Expr, chart: Chart, bindings: Mapping[str, float] | None = None
) -> Callable[[Sequence[float]], float]:
    """Close over the tree once; repeated evaluation is then cheap."""
    env = chart.binding_map()
    if bindings:
        env.update(bindings)
    index = {name: i for i, name in enumerate(chart.coords)}

    def build(node):
        kind = node[0]
        if kind == "num":
            v = float(node[1])
            return lambda pt: v
        if kind == "coord":
            i = index[node[1]]
            return lambda pt: pt[i]
        if kind == "param":
            name = node[1]
            if name not in env:
                raise EvalError(f"unbound parameter {name!r}")
            v = float(env[name])
            return lambda pt: v
        if kind == "add":
            fns = [build(c) for c in node[1]]
            return lambda pt: math.fsum(f(pt) for f in fns)
        if kind == "mul":
            fns = [build(c) for c in node[1]]

            def mul(pt):
                out = 1.0
                for f in fns:
                    out *= f(pt)
                return out

            return mul
        if kind == "div":
            fa, fb = build(node[1]), build(node[2])

            def div(pt):
                den = fb(pt)
                if abs(den) < _TINY:
                    raise EvalError("division by a value with magnitude below 1e-300")
                return fa(pt) / den

            return div
        if kind == "pow":
            fb = build(node[1])
            k = node[2]

            def ipow(pt):
                base = fb(pt)
                if k < 0 and abs(base) < _TINY:
                    raise EvalError("division by a value with magnitude below 1e-300")
                return base**k

            return ipow
        # Uncommon kernels fall back to the tree walker.
        sub = node

        def generic(pt):
            local = dict(zip(chart.coords, pt))
            local.update(env)
            return _eval_node(sub, local)

        return generic

    return build(e.node)


# ---------------------------------------------------------------------------
# Tri-state zero testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriState:
    """Verdict of a zero test: proved Zero, witnessed NonZero, or Unknown.

    Zero is only ever produced by exact normalization; NonZero carries an
    admissible witness point; Unknown carries residual statistics from
    sampling.
    """

    verdict: str  # 'zero' | 'nonzero' | 'unknown'
    witness: tuple | None = None
    witness_value: float | None = None
    residual_max: float | None = None
    residual_mean: float | None = None
    samples: int = 0
    assumptions: tuple = ()

    @staticmethod
    def zero(assumptions=()) -> "TriState":
        return TriState("zero", assumptions=tuple(assumptions))

    @staticmethod
    def nonzero(witness, value, assumptions=()) -> "TriState":
        return TriState(
            "nonzero",
            witness=tuple(witness),
            witness_value=float(value),
            assumptions=tuple(assumptions),
        )

    @staticmethod
    def unknown(residual_max, residual_mean, samples, assumptions=()) -> "TriState":
        return TriState(
            "unknown",
            residual_max=float(residual_max),
            residual_mean=float(residual_mean),
            samples=int(samples),
            assumptions=tuple(assumptions),
        )

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = [float(v) for v in self.witness]
            out["witness_value"] = self.witness_value
        if self.residual_max is not None:
            out["residual_max"] = self.residual_max
            out["residual_mean"] = self.residual_mean
            out["samples"] = self.samples
        if self.assumptions:
            out["assumptions"] = list(self.assumptions)
        return out


_WITNESS_CANDIDATES = [
    Fraction(0),
    Fraction(1),
    Fraction(-1),
    Fraction(2),
    Fraction(-2),
    Fraction(1, 2),
    Fraction(-1, 2),
    Fraction(3),
    Fraction(-3),
    Fraction(1, 3),
    Fraction(-1, 3),
    Fraction(5, 4),
    Fraction(-5, 4),
    Fraction(7, 5),
    Fraction(-7, 5),
]


def _find_nonzero_point(poly: dict, symbols: list) -> dict | None:
    """Deterministic point where a nonzero polynomial does not vanish.

    Substitutes candidate rationals one generator at a time; a nonzero
    polynomial stays nonzero for at least one of degree+1 distinct values of
    each variable, so the search always succeeds given enough candidates.
    """
    current = poly
    assignment = {}
    for key in symbols:
        max_deg = max(
            (sum(e for v, e in m if v == key) for m in current), default=0
        )
        candidates = _WITNESS_CANDIDATES[: max_deg + 1] or [Fraction(0)]
        for value in candidates:
            nxt = _p_subs(current, key, _p_const(value))
            if nxt:
                assignment[key] = value
                current = nxt
                break
        else:
            return None
    return assignment if current else None


def is_zero(e: Expr, sampler, chart: Chart) -> TriState:
    """Tri-state zero test: exact on rationals, sampled otherwise."""
    nf = _nf_of(e)
    assumptions = set(nf.assumptions)
    for f, _ in nf.den:
        assumptions.add(f"{_poly_str(f)} != 0")
    if nf.is_zero():
        return TriState.zero(sorted(assumptions))

    gens = set()
    for m in nf.num:
        gens.update(v for v, _ in m)
    for f, _ in nf.den:
        for m in f:
            gens.update(v for v, _ in m)
    if all(v[0] != "a" for v in gens):
        # Rational fragment: produce an exact witness.
        avoid = dict(nf.num)
        for f, _ in nf.den:
            avoid = _p_mul(avoid, f)
        for locus in chart.excluded:
            lnf = _nf_of(locus)
            if lnf.num:
                avoid = _p_mul(avoid, lnf.num)
        symbols = sorted(
            {v for m in avoid for v, _ in m},
            key=lambda k: (k[0], k[1]),
        )
        assignment = _find_nonzero_point(avoid, symbols)
        if assignment is not None:
            env = {name: assignment.get(("c", name), Fraction(0)) for name in chart.coords}
            env.update({name: assignment.get(("p", name), Fraction(0)) for name in chart.params})
            value = _exact_eval(_nf_to_tree(nf), env)
            point = tuple(float(env[name]) for name in chart.coords)
            return TriState.nonzero(point, float(value), sorted(assumptions))
        # Should not happen; fall through to sampling for honesty.

    from .verify import sample_points  # local import to avoid a cycle

    points = sample_points(chart, sampler)
    fn = compile_expr(e, chart)
    residuals = []
    for pt in points:
        try:
            value = fn(pt)
        except EvalError:
            continue
        if not math.isfinite(value):
            continue
        if abs(value) > sampler.tolerance:
            return TriState.nonzero(pt, value, sorted(assumptions))
        residuals.append(abs(value))
    if not residuals:
        raise EvalError("degenerate sampling domain")
    return TriState.unknown(
        max(residuals), math.fsum(residuals) / len(residuals), len(residuals),
        sorted(assumptions),
    )


# ---------------------------------------------------------------------------
# Parser (precedence climbing) and printer
# ---------------------------------------------------------------------------


def _tokenize(text: str):
    tokens = []  # (kind, value, position)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            tokens.append(("num", Fraction(text[i:j]), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens, chart: Chart):
        self.tokens = tokens
        self.pos = 0
        self.chart = chart

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if kind != "op" or val != value:
            raise ParseError(f"expected {value!r}", pos)

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.parse_term()
                if val == "+":
                    node = _mk_add((node, rhs))
                else:
                    node = _mk_add((node, _mk_mul((_mk_num(-1), rhs))))
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.parse_unary()
                node = _mk_mul((node, rhs)) if val == "*" else ("div", node, rhs)
            else:
                return node

    def parse_unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return _mk_mul((_mk_num(-1), self.parse_unary()))
        if kind == "op" and val == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            exponent = self.parse_exponent()
            return _mk_pow(base, exponent)
        return base

    def parse_exponent(self) -> Fraction:
        kind, val, pos = self.next()
        if kind == "op" and val == "-":
            return -self.parse_exponent()
        if kind == "num":
            return val
        if kind == "op" and val == "(":
            q = self.parse_rational()
            self.expect(")")
            return q
        raise ParseError("exponent must be an integer or rational literal", pos)

    def parse_rational(self) -> Fraction:
        sign = Fraction(1)
        kind, val, pos = self.next()
        if kind == "op" and val == "-":
            sign = Fraction(-1)
            kind, val, pos = self.next()
        if kind != "num":
            raise ParseError("expected a rational literal", pos)
        q = val
        kind2, val2, _ = self.peek()
        if kind2 == "op" and val2 == "/":
            self.next()
            kind3, val3, pos3 = self.next()
            if kind3 != "num":
                raise ParseError("expected a rational literal", pos3)
            q = q / val3
        return sign * q

    def parse_atom(self):
        kind, val, pos = self.next()
        if kind == "num":
            return _mk_num(val)
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "ident":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val == "sqrt":
                    self.next()
                    arg = self.parse_expr()
                    self.expect(")")
                    return _mk_pow(arg, Fraction(1, 2))
                if val in _FUNCTIONS:
                    self.next()
                    arg = self.parse_expr()
                    self.expect(")")
                    return ("call", val, arg)
                raise ParseError(f"unknown function {val!r}", pos)
            if val in self.chart.coords:
                return ("coord", val)
            if val in self.chart.params:
                return ("param", val)
            raise ParseError(f"unknown identifier {val!r}", pos)
        raise ParseError("unexpected token", pos)


def parse(text: str, chart: Chart) -> Expr:
    """Parse an expression over a chart's coordinates and parameters."""
    parser = _Parser(_tokenize(text), chart)
    node = parser.parse_expr()
    kind, _, pos = parser.peek()
    if kind != "end":
        raise ParseError("trailing input", pos)
    return Expr(node)


_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _print(node: tuple, parent_prec: int) -> str:
    kind = node[0]
    if kind == "num":
        q = node[1]
        if q.denominator == 1:
            text = str(q.numerator)
            prec = _PREC_ATOM if q >= 0 else _PREC_MUL
        else:
            text = f"{q.numerator}/{q.denominator}"
            prec = _PREC_MUL
        return f"({text})" if prec < parent_prec else text
    if kind in ("coord", "param"):
        return node[1]
    if kind == "add":
        parts = [_print(node[1][0], _PREC_ADD)]
        for child in node[1][1:]:
            text = _print(child, _PREC_ADD)
            if text.startswith("-"):
                parts.append(f" - {text[1:]}")
            else:
                parts.append(f" + {text}")
        text = "".join(parts)
        return f"({text})" if parent_prec > _PREC_ADD else text
    if kind == "mul":
        children = node[1]
        if (
            children
            and children[0][0] == "num"
            and children[0][1] == -1
            and len(children) > 1
        ):
            inner = _print(_mk_mul(children[1:]), _PREC_MUL)
            text = f"-{inner}"
            return f"({text})" if parent_prec > _PREC_ADD else text
        text = "*".join(_print(c, _PREC_MUL + 0) for c in children)
        return f"({text})" if parent_prec > _PREC_MUL else text
    if kind == "div":
        num = _print(node[1], _PREC_MUL)
        den = _print(node[2], _PREC_ATOM)
        text = f"{num}/{den}"
        return f"({text})" if parent_prec > _PREC_MUL else text
    if kind == "pow":
        base = _print(node[1], _PREC_ATOM)
        k = node[2]
        text = f"{base}^{k}" if k >= 0 else f"{base}^({k})"
        return f"({text})" if parent_prec > _PREC_POW else text
    if kind == "rpow":
        base = _print(node[1], _PREC_ATOM)
        r = node[2]
        return f"{base}^({r.numerator}/{r.denominator})"
    if kind == "call":
        return f"{node[1]}({_print(node[2], 0)})"
    raise ExprError(f"unknown node kind {kind!r}")


def to_string(e: Expr) -> str:
    return _print(e.node, 0)


# ---------------------------------------------------------------------------
# Exact linear algebra over expression matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalMatrix:
    """Rectangular matrix of expressions with exact operations."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(
            tuple(Expr._coerce(v) for v in row) for row in self.rows
        )
        object.__setattr__(self, "rows", rows)
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ExprError("ragged matrix")

    @property
    def shape(self) -> tuple:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def entry(self, i: int, j: int) -> Expr:
        return self.rows[i][j]

    def transpose(self) -> "RationalMatrix":
        n, m = self.shape
        return RationalMatrix(tuple(tuple(self.rows[i][j] for i in range(n)) for j in range(m)))

    def without_rows(self, drop: Sequence[int]) -> "RationalMatrix":
        drop = set(drop)
        return RationalMatrix(tuple(r for i, r in enumerate(self.rows) if i not in drop))

    def is_constant(self) -> bool:
        return all(
            _p_is_const(_nf_of(v).num) and not _nf_of(v).den
            for row in self.rows
            for v in row
        )

    def to_fractions(self) -> list:
        out = []
        for row in self.rows:
            frow = []
            for v in row:
                nf = _nf_of(v)
                if nf.den or not _p_is_const(nf.num):
                    raise ExprError("matrix entry is not a rational constant")
                frow.append(nf.num.get((), Fraction(0)))
            out.append(frow)
        return out

    # -- operations ----------------------------------------------------------
    def det(self) -> Expr:
        n, m = self.shape
        if n != m:
            raise ExprError("determinant of a non-square matrix")
        if n == 0:
            return ONE
        if self.is_constant():
            return Expr.number(_fraction_det(self.to_fractions()))
        return _expr_det(self.rows)

    def minor_det(self, removed_rows: Sequence[int]) -> Expr:
        return self.without_rows(removed_rows).det()

    def inverse(self) -> "RationalMatrix":
        n, m = self.shape
        if n != m:
            raise ExprError("inverse of a non-square matrix")
        det = normalize(self.det())
        if _nf_of(det).is_zero():
            raise ExprError("singular matrix")
        cof = []
        for i in range(n):
            row = []
            for j in range(n):
                sub = tuple(
                    tuple(self.rows[r][c] for c in range(n) if c != j)
                    for r in range(n)
                    if r != i
                )
                sign = 1 if (i + j) % 2 == 0 else -1
                row.append(Expr.number(sign) * _expr_det(sub) if n > 1 else Expr.number(sign))
            cof.append(row)
        inv = tuple(
            tuple(normalize(cof[j][i] / det) for j in range(n)) for i in range(n)
        )
        out = RationalMatrix(inv)
        # Exact verification of the defining identity.
        for i in range(n):
            for j in range(n):
                s = ZERO
                for k in range(n):
                    s = s + self.rows[i][k] * out.rows[k][j]
                expected = ONE if i == j else ZERO
                if not _nf_of(s - expected).is_zero():
                    raise ExprError("inverse verification failed")
        return out

    def nullspace(self) -> list:
        """Basis of the right nullspace as lists of Exprs."""
        n, m = self.shape
        if self.is_constant():
            rows = self.to_fractions()
            basis = _fraction_nullspace(rows, m)
            return [[Expr.number(v) for v in vec] for vec in basis]
        return _expr_nullspace(self.rows, m)

    def solve(self, rhs: Sequence[Expr]) -> list:
        """One exact solution of A x = rhs; raises if inconsistent."""
        n, m = self.shape
        if len(rhs) != n:
            raise ExprError("shape mismatch in solve")
        aug = RationalMatrix(
            tuple(self.rows[i] + (Expr._coerce(rhs[i]),) for i in range(n))
        )
        if aug.is_constant():
            rows = aug.to_fractions()
            return [Expr.number(v) for v in _fraction_solve(rows, m)]
        raise ExprError("symbolic solve is limited to rational constant systems")


def _fraction_det(rows: list) -> Fraction:
    n = len(rows)
    rows = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        inv = Fraction(1) / rows[col][col]
        for r in range(col + 1, n):
            factor = rows[r][col] * inv
            if factor:
                for c in range(col, n):
                    rows[r][c] -= factor * rows[col][c]
    return det


def _expr_det(rows: tuple) -> Expr:
    n = len(rows)
    if n == 0:
        return ONE
    cols = tuple(range(n))
    cache: dict = {}

    def minor(row: int, cols_left: tuple) -> Expr:
        if not cols_left:
            return ONE
        key = (row, cols_left)
        if key in cache:
            return cache[key]
        total = ZERO
        for k, col in enumerate(cols_left):
            term = rows[row][col] * minor(row + 1, cols_left[:k] + cols_left[k + 1 :])
            total = total + term if k % 2 == 0 else total - term
        total = normalize(total)
        cache[key] = total
        return total

    return minor(0, cols)


def _fraction_rref(rows: list, width: int):
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(width):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def _fraction_nullspace(rows: list, m: int) -> list:
    rref, pivots = _fraction_rref(rows, m)
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * m
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -rref[r][fc]
        basis.append(vec)
    return basis


def _fraction_solve(aug: list, m: int) -> list:
    rref, pivots = _fraction_rref(aug, m + 1)
    if m in pivots:
        raise ExprError("inconsistent linear system")
    sol = [Fraction(0)] * m
    for r, pc in enumerate(pivots):
        sol[pc] = rref[r][m]
    return sol


def _expr_nullspace(rows: tuple, m: int) -> list:
    work = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(m):
        pivot = None
        for i in range(r, len(work)):
            if not _nf_of(normalize(work[i][c])).is_zero():
                pivot = i
                break
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = work[r][c]
        work[r] = [normalize(v / inv) for v in work[r]]
        for i in range(len(work)):
            if i != r:
                factor = work[i][c]
                if not _nf_of(normalize(factor)).is_zero():
                    work[i] = [
                        normalize(a - factor * b) for a, b in zip(work[i], work[r])
                    ]
        pivots.append(c)
        r += 1
        if r == len(work):
            break
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        vec = [ZERO] * m
        vec[fc] = ONE
        for row_idx, pc in enumerate(pivots):
            vec[pc] = normalize(-work[row_idx][fc])
        basis.append(vec)
    return basis


def exact_linalg(matrix: RationalMatrix, op: str, **kwargs):
    """Dispatcher for exact matrix operations.

    op is one of 'det', 'minor' (kwargs: rows=[...] removed), 'inverse',
    'nullspace', 'solve' (kwargs: rhs=[...]).
    """
    if op == "det":
        return matrix.det()
    if op == "minor":
        return matrix.minor_det(kwargs["rows"])
    if op == "inverse":
        return matrix.inverse()
    if op == "nullspace":
        return matrix.nullspace()
    if op == "solve":
        return matrix.solve(kwargs["rhs"])
    raise ExprError(f"unknown linear algebra op {op!r}")
