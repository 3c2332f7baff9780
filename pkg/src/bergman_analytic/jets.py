"""Truncated multivariate power series ("jets") over paired variable groups.

A jet is a Taylor polynomial in several groups of complex variables, e.g.
``(w, wb, u, ub)``. Holomorphic and antiholomorphic groups always come in
adjacent pairs of equal size so that complex conjugation is well defined.
Coefficients are stored sparsely; exponent vectors are packed into a single
Python ``int`` (16 bits per variable) so that monomial multiplication is a
plain integer addition.

Truncation is by total degree (``cap``). Products additionally accept extra
linear degree constraints, which the recursion uses to avoid computing
monomials it would discard.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from gmpy2 import mpq

from .errors import (
    BadConstantTerm,
    LayoutMismatch,
    ModeMismatch,
    NotSquare,
    ZeroConstantTerm,
)
from .scalars import EXACT, FLOAT, MODES, conj, is_exact_value, to_mode

BITS = 16
FIELD = (1 << BITS) - 1
MAX_GROUPS = 4
FLOAT_EPS = 1e-300


@dataclass(frozen=True)
class Group:
    name: str
    n: int
    anti: bool = False


class VarLayout:
    """Ordered variable groups, e.g. ``[(w,n,holo), (wb,n,anti), ...]``."""

    __slots__ = ("groups", "offsets", "nvars", "_index", "_conj_perm")

    def __init__(self, groups: Iterable):
        groups = tuple(g if isinstance(g, Group) else Group(*g) for g in groups)
        if not groups:
            raise LayoutMismatch("a layout needs at least one variable group")
        if len(groups) > MAX_GROUPS:
            raise LayoutMismatch(f"at most {MAX_GROUPS} variable groups are supported")
        if len(groups) % 2:
            raise LayoutMismatch("groups must come in (holo, anti) pairs")
        names = [g.name for g in groups]
        if len(set(names)) != len(names):
            raise LayoutMismatch(f"duplicate group names in {names}")
        for h, a in zip(groups[::2], groups[1::2]):
            if h.anti or not a.anti or h.n != a.n or h.n < 1:
                raise LayoutMismatch(f"groups {h} and {a} are not a (holo, anti) pair")
        self.groups = groups
        offsets, pos = [], 0
        for g in groups:
            offsets.append(pos)
            pos += g.n
        self.offsets = tuple(offsets)
        self.nvars = pos
        self._index = {g.name: i for i, g in enumerate(groups)}
        perm = list(range(pos))
        for gi in range(0, len(groups), 2):
            h, a = self.offsets[gi], self.offsets[gi + 1]
            for i in range(groups[gi].n):
                perm[h + i], perm[a + i] = a + i, h + i
        self._conj_perm = tuple(perm)

    @classmethod
    def paired(cls, *pairs: tuple) -> "VarLayout":
        """``VarLayout.paired(("w", "wb", 1), ("u", "ub", 1))``."""
        groups = []
        for holo, anti, n in pairs:
            groups += [Group(holo, n, False), Group(anti, n, True)]
        return cls(groups)

    def __eq__(self, other):
        return isinstance(other, VarLayout) and self.groups == other.groups

    def __hash__(self):
        return hash(self.groups)

    def __repr__(self):
        inner = ", ".join(f"{g.name}[{g.n}{'~' if g.anti else ''}]" for g in self.groups)
        return f"VarLayout({inner})"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    def group(self, name: str) -> Group:
        return self.groups[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LayoutMismatch(f"no group {name!r} in {self!r}") from None

    def var(self, name: str, i: int = 0) -> int:
        g = self.index(name)
        if not 0 <= i < self.groups[g].n:
            raise LayoutMismatch(f"index {i} out of range for group {name!r}")
        return self.offsets[g] + i

    def group_vars(self, name: str) -> range:
        g = self.index(name)
        return range(self.offsets[g], self.offsets[g] + self.groups[g].n)

    def pack(self, exps: Sequence[int]) -> int:
        if len(exps) != self.nvars:
            raise LayoutMismatch(f"expected {self.nvars} exponents, got {len(exps)}")
        key = 0
        for i, e in enumerate(exps):
            if e < 0 or e > FIELD:
                raise ValueError(f"exponent {e} out of range")
            key |= e << (BITS * i)
        return key

    def unpack(self, key: int) -> tuple[int, ...]:
        return tuple((key >> (BITS * i)) & FIELD for i in range(self.nvars))

    def pack_groups(self, multi: Mapping[str, Sequence[int]]) -> int:
        exps = [0] * self.nvars
        for name, alpha in multi.items():
            g = self.index(name)
            if len(alpha) != self.groups[g].n:
                raise LayoutMismatch(f"multi-index {alpha} has wrong length for {name!r}")
            for i, e in enumerate(alpha):
                exps[self.offsets[g] + i] = e
        return self.pack(exps)

    def split(self, exps: Sequence[int]) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(exps[o:o + g.n]) for o, g in zip(self.offsets, self.groups))

    def conj_key(self, key: int) -> int:
        exps = self.unpack(key)
        perm = self._conj_perm
        return self.pack([exps[perm[i]] for i in range(self.nvars)])

    def degree(self, key: int) -> int:
        d = 0
        while key:
            d += key & FIELD
            key >>= BITS
        return d


def key_degree(key: int) -> int:
    d = 0
    while key:
        d += key & FIELD
        key >>= BITS
    return d


class Jet:
    """Immutable truncated power series.

    ``terms`` maps packed exponent keys to coefficients. In exact mode zero
    coefficients are never stored; in float mode entries with modulus at or
    below ``eps`` are dropped.
    """

    __slots__ = ("layout", "cap", "mode", "terms", "eps")

    def __init__(self, layout: VarLayout, cap: int, terms=None, mode: str = EXACT,
                 eps: float = FLOAT_EPS, *, _clean: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if cap < 0:
            raise ValueError("degree cap must be non-negative")
        self.layout = layout
        self.cap = cap
        self.mode = mode
        self.eps = eps
        if _clean:
            self.terms = terms
        else:
            self.terms = _canonical(terms or {}, cap, mode, eps)

    # -- construction -------------------------------------------------------
    @classmethod
    def zero(cls, layout, cap, mode=EXACT):
        return cls(layout, cap, {}, mode, _clean=True)

    @classmethod
    def constant(cls, layout, cap, value, mode=EXACT):
        return cls(layout, cap, {0: to_mode(value, mode)}, mode)

    @classmethod
    def one(cls, layout, cap, mode=EXACT):
        return cls.constant(layout, cap, 1, mode)

    @classmethod
    def variable(cls, layout, cap, name, i=0, mode=EXACT):
        key = 1 << (BITS * layout.var(name, i))
        return cls(layout, cap, {key: to_mode(1, mode)}, mode)

    @classmethod
    def monomial(cls, layout, cap, multi: Mapping[str, Sequence[int]], coeff=1, mode=EXACT):
        return cls(layout, cap, {layout.pack_groups(multi): to_mode(coeff, mode)}, mode)

    @classmethod
    def from_exponents(cls, layout, cap, items, mode=EXACT):
        """Build from ``{exponent tuple: value}`` (or an iterable of pairs)."""
        if isinstance(items, Mapping):
            items = items.items()
        terms: dict = {}
        for exps, c in items:
            k = layout.pack(exps)
            terms[k] = terms.get(k, 0) + to_mode(c, mode)
        return cls(layout, cap, terms, mode)

    def _like(self, terms, cap=None, layout=None, clean=False):
        return Jet(layout or self.layout, self.cap if cap is None else cap, terms,
                   self.mode, self.eps, _clean=clean)

    # -- inspection ---------------------------------------------------------
    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        """Yield ``(exponent tuple, coefficient)`` in sorted key order."""
        unpack = self.layout.unpack
        for k in sorted(self.terms):
            yield unpack(k), self.terms[k]

    def coeff(self, *multi) -> object:
        """Coefficient of a monomial given as one multi-index per group, or
        as a single flat exponent tuple."""
        if len(multi) == 1 and all(isinstance(e, int) for e in multi[0]):
            key = self.layout.pack(multi[0])
        else:
            if len(multi) != len(self.layout.groups):
                raise LayoutMismatch("one multi-index per group expected")
            flat = [e for alpha in multi for e in alpha]
            key = self.layout.pack(flat)
        return self.terms.get(key, to_mode(0, self.mode))

    @property
    def constant_term(self):
        return self.terms.get(0, to_mode(0, self.mode))

    def degree(self) -> int:
        """Largest total degree among stored terms (-1 for the zero jet)."""
        return max((key_degree(k) for k in self.terms), default=-1)

    def homogeneous_parts(self) -> list[dict]:
        parts: list[dict] = [dict() for _ in range(self.cap + 1)]
        for k, c in self.terms.items():
            parts[key_degree(k)][k] = c
        return parts

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.layout == other.layout and self.cap == other.cap
                and self.mode == other.mode and self.terms == other.terms)

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return f"Jet(0, cap={self.cap})"
        names = []
        for g in self.layout.groups:
            names += [f"{g.name}{i}" if g.n > 1 else g.name for i in range(g.n)]
        parts = []
        for exps, c in self.items():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return f"Jet({' + '.join(parts)}, cap={self.cap})"

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "Jet"):
        if self.layout != other.layout:
            raise LayoutMismatch(f"{self.layout!r} vs {other.layout!r}")
        if self.mode != other.mode:
            raise ModeMismatch(f"{self.mode} vs {other.mode}")
        if self.cap != other.cap:
            raise LayoutMismatch(f"degree caps differ: {self.cap} vs {other.cap}")

    def _coerce(self, value):
        if self.mode == EXACT:
            if not is_exact_value(value):
                raise ModeMismatch(f"cannot mix {type(value).__name__} into an exact jet")
            return to_mode(value, EXACT)
        if is_exact_value(value) or isinstance(value, (float, complex)):
            return complex(value)
        raise ModeMismatch(f"cannot mix {type(value).__name__} into a float jet")

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(self.layout, self.cap, self._coerce(other), self.mode)
        return jet_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -c for k, c in self.terms.items()}, clean=True)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, jet_inv(other))
        c = self._coerce(other)
        if not c:
            raise ZeroDivisionError("division of a jet by zero")
        return self.scale(1 / c if self.mode == FLOAT else mpq(1) / c)

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Jet.one(self.layout, self.cap, self.mode)
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def scale(self, value):
        c = self._coerce(value)
        if not c:
            return Jet.zero(self.layout, self.cap, self.mode)
        return self._like({k: v * c for k, v in self.terms.items()})

    def truncate(self, cap: int) -> "Jet":
        cap = min(cap, self.cap)
        return self._like({k: c for k, c in self.terms.items() if key_degree(k) <= cap},
                          cap=cap, clean=True)

    def with_cap(self, cap: int) -> "Jet":
        """Same coefficients under a different cap (dropping terms above it)."""
        return self._like({k: c for k, c in self.terms.items() if key_degree(k) <= cap},
                          cap=cap, clean=True)

    def map_coefficients(self, fn) -> "Jet":
        return self._like({k: fn(c) for k, c in self.terms.items()})

    def to_float(self) -> "Jet":
        return Jet(self.layout, self.cap, {k: complex(c) for k, c in self.terms.items()}, FLOAT)


def _canonical(terms: Mapping, cap: int, mode: str, eps: float) -> dict:
    out = {}
    if mode == EXACT:
        for k, c in terms.items():
            if c and key_degree(k) <= cap:
                out[k] = c
    else:
        for k, c in terms.items():
            if abs(c) > eps and key_degree(k) <= cap:
                out[k] = c
    return out


def _purge(acc: dict, mode: str, eps: float) -> dict:
    if mode == EXACT:
        return {k: c for k, c in acc.items() if c}
    return {k: c for k, c in acc.items() if abs(c) > eps}


# ---------------------------------------------------------------------------
# products with linear degree constraints

_FW = 32            # bits per packed constraint field
_TEST = 1 << 21     # overflow-test bit inside a field; limits stay below it


class Truncation:
    """A set of linear degree constraints ``sum(weights * exps) <= limit``.

    The first constraint is always total degree <= cap. Constraint values for
    a monomial are packed into one integer so that checking every constraint
    for a product of two monomials costs one addition and one mask.
    """

    def __init__(self, layout: VarLayout, cap: int,
                 extra: Sequence[tuple[Sequence[int], int]] = ()):
        cons = [((1,) * layout.nvars, cap)]
        for weights, limit in extra:
            if len(weights) != layout.nvars or min(weights) < 0:
                raise ValueError("constraint weights must be non-negative, one per variable")
            cons.append((tuple(weights), limit))
        for _, limit in cons:
            if limit >= _TEST - 1:
                raise ValueError("constraint limit too large")
        self.layout = layout
        self.constraints = cons
        off = mask = 0
        for i, (_, limit) in enumerate(cons):
            off |= (_TEST - 1 - limit) << (_FW * i)
            mask |= _TEST << (_FW * i)
        self.offset = off
        self.mask = mask

    @classmethod
    def by_group(cls, layout: VarLayout, cap: int,
                 limits: Mapping[Sequence[str] | str, int]) -> "Truncation":
        """Constraints on the summed degree of one or more named groups."""
        extra = []
        for names, limit in limits.items():
            if isinstance(names, str):
                names = (names,)
            w = [0] * layout.nvars
            for name in names:
                for v in layout.group_vars(name):
                    w[v] = 1
            extra.append((w, limit))
        return cls(layout, cap, extra)

    def values(self, key: int) -> int | None:
        exps = self.layout.unpack(key)
        packed = 0
        for i, (weights, limit) in enumerate(self.constraints):
            s = 0
            for w, e in zip(weights, exps):
                s += w * e
            if s > limit:
                return None
            packed |= s << (_FW * i)
        return packed

    def admits(self, key: int) -> bool:
        return self.values(key) is not None

    def filter(self, terms: Mapping) -> dict:
        return {k: c for k, c in terms.items() if self.values(k) is not None}


def _tagged(terms: Mapping, trunc: Truncation):
    out = []
    for k, c in terms.items():
        v = trunc.values(k)
        if v is not None:
            out.append((v & 0xFFFFFFFF, k, c, v))
    out.sort(key=lambda t: t[0])
    return out


def product_terms(at: Mapping, bt: Mapping, trunc: Truncation, mode: str,
                  eps: float = FLOAT_EPS) -> dict:
    """Truncated Cauchy product of two term maps."""
    if not at or not bt:
        return {}
    if len(at) > len(bt):
        at, bt = bt, at
    a_list = _tagged(at, trunc)
    b_list = _tagged(bt, trunc)
    b_deg = [t[0] for t in b_list]
    cap = trunc.constraints[0][1]
    off, mask = trunc.offset, trunc.mask
    acc: dict = {}
    get = acc.get
    for da, ka, ca, va in a_list:
        stop = bisect_right(b_deg, cap - da)
        base = va + off
        for i in range(stop):
            _, kb, cb, vb = b_list[i]
            if (base + vb) & mask:
                continue
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb
    return _purge(acc, mode, eps)


# ---------------------------------------------------------------------------
# ring operations


def jet_add(a: Jet, b: Jet) -> Jet:
    a._check(b)
    acc = dict(a.terms)
    for k, c in b.terms.items():
        acc[k] = acc.get(k, 0) + c
    return a._like(_purge(acc, a.mode, a.eps), clean=True)


def jet_mul(a: Jet, b: Jet, truncation: Truncation | None = None) -> Jet:
    """Cauchy product truncated at the common cap (and optional extra
    constraints)."""
    a._check(b)
    trunc = truncation or Truncation(a.layout, a.cap)
    return a._like(product_terms(a.terms, b.terms, trunc, a.mode, a.eps), clean=True)


def jet_sum(jets: Sequence[Jet]) -> Jet:
    it = iter(jets)
    acc_jet = next(it)
    acc = dict(acc_jet.terms)
    for j in it:
        acc_jet._check(j)
        for k, c in j.terms.items():
            acc[k] = acc.get(k, 0) + c
    return acc_jet._like(_purge(acc, acc_jet.mode, acc_jet.eps), clean=True)


def jet_derive(a: Jet, slot: tuple[str, int], order: int = 1) -> Jet:
    """Formal partial derivative ``d^order / d(slot)^order``."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return a
    name, i = slot
    v = a.layout.var(name, i)
    shift = BITS * v
    unit = order << shift
    out = {}
    for k, c in a.terms.items():
        e = (k >> shift) & FIELD
        if e >= order:
            out[k - unit] = c * math.perm(e, order)
    return a._like(out, cap=max(a.cap - order, 0), clean=True)


def _hmul(x: dict, y: dict) -> dict:
    """Product of two homogeneous term maps (no truncation needed)."""
    acc: dict = {}
    get = acc.get
    for ka, ca in x.items():
        for kb, cb in y.items():
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb
    return acc


def _accumulate(acc: dict, part: dict, scale=None):
    get = acc.get
    if scale is None:
        for k, c in part.items():
            acc[k] = get(k, 0) + c
    else:
        for k, c in part.items():
            acc[k] = get(k, 0) + c * scale


def _recip(c, mode):
    return 1 / c if mode == FLOAT else mpq(1) / c


def jet_inv(a: Jet) -> Jet:
    """Multiplicative inverse, solved degree by degree."""
    a0 = a.constant_term
    if not a0:
        raise ZeroConstantTerm("jet_inv needs a nonzero constant term")
    mode, eps = a.mode, a.eps
    parts = a.homogeneous_parts()
    r0 = _recip(a0, mode)
    inv_parts = [{0: r0}]
    for d in range(1, a.cap + 1):
        acc: dict = {}
        for e in range(1, d + 1):
            if parts[e] and inv_parts[d - e]:
                _accumulate(acc, _hmul(parts[e], inv_parts[d - e]))
        inv_parts.append(_purge({k: -c * r0 for k, c in acc.items()}, mode, eps))
    out = {}
    for p in inv_parts:
        out.update(p)
    return a._like(out, clean=True)


def _const_is(a: Jet, value) -> bool:
    c = a.constant_term
    if a.mode == EXACT:
        return c == value
    return abs(c - value) <= 1e-12


def jet_log(a: Jet) -> Jet:
    """Formal ``log`` of a jet with constant term 1 (degree recurrence
    ``d g_d = d a_d - sum_e e g_e a_{d-e}``)."""
    if not _const_is(a, 1):
        raise BadConstantTerm("jet_log needs constant term 1")
    mode, eps = a.mode, a.eps
    parts = a.homogeneous_parts()
    g: list[dict] = [{}]
    for d in range(1, a.cap + 1):
        acc = dict(parts[d])
        inner: dict = {}
        for e in range(1, d):
            if g[e] and parts[d - e]:
                _accumulate(inner, _hmul(g[e], parts[d - e]), e)
        if inner:
            f = _recip(to_mode(d, mode), mode)
            _accumulate(acc, inner, -f)
        g.append(_purge(acc, mode, eps))
    out = {}
    for p in g:
        out.update(p)
    return a._like(out, clean=True)


def jet_exp(a: Jet) -> Jet:
    """Formal ``exp`` of a jet with zero constant term (recurrence
    ``d F_d = sum_e e a_e F_{d-e}``)."""
    if not _const_is(a, 0):
        raise BadConstantTerm("jet_exp needs constant term 0")
    mode, eps = a.mode, a.eps
    parts = a.homogeneous_parts()
    F: list[dict] = [{0: to_mode(1, mode)}]
    for d in range(1, a.cap + 1):
        acc: dict = {}
        for e in range(1, d + 1):
            if parts[e] and F[d - e]:
                _accumulate(acc, _hmul(parts[e], F[d - e]), e)
        f = _recip(to_mode(d, mode), mode)
        F.append(_purge({k: c * f for k, c in acc.items()}, mode, eps))
    out = {}
    for p in F:
        out.update(p)
    return a._like(out, clean=True)


def jet_det(m: Sequence[Sequence[Jet]]) -> Jet:
    """Determinant by cofactor expansion along the first row."""
    n = len(m)
    if n == 0 or any(len(row) != n for row in m):
        raise NotSquare(f"matrix of shape {n}x{[len(r) for r in m]} is not square")
    ref = m[0][0]
    for row in m:
        for x in row:
            ref._check(x)

    def det(rows: tuple, cols: tuple) -> Jet:
        if len(rows) == 1:
            return m[rows[0]][cols[0]]
        total = None
        for idx, c in enumerate(cols):
            entry = m[rows[0]][c]
            if entry.is_zero():
                continue
            minor = det(rows[1:], cols[:idx] + cols[idx + 1:])
            term = entry * minor
            if idx % 2:
                term = -term
            total = term if total is None else total + term
        return total if total is not None else Jet.zero(ref.layout, ref.cap, ref.mode)

    return det(tuple(range(n)), tuple(range(n)))


# ---------------------------------------------------------------------------
# changes of variables


def _binomial_expansions(e: int, targets: Sequence[int]):
    """All ways to write x^e with x = t_1 + ... + t_r: yields (exps, multinomial)."""
    if len(targets) == 1:
        yield (e,), 1
        return
    for parts in _compositions(e, len(targets)):
        coef = math.factorial(e)
        for p in parts:
            coef //= math.factorial(p)
        yield parts, coef


def _compositions(total: int, k: int):
    if k == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def taylor_shift(a: Jet, target: VarLayout, mapping: Mapping[str, Sequence[str]],
                 cap: int | None = None, truncation: Truncation | None = None) -> Jet:
    """Re-expand ``a`` after substituting each source group by a sum of
    target groups, e.g. ``{"z": ("w", "u"), "zb": ("wb", "ub")}`` for
    ``z -> w + u``. Groups absent from ``mapping`` keep their name.
    """
    cap = a.cap if cap is None else cap
    trunc = truncation or Truncation(target, cap)
    src = a.layout
    var_targets: list[list[int]] = []
    for g in src.groups:
        names = tuple(mapping.get(g.name, (g.name,)))
        tgs = [target.group(nm) for nm in names]
        for t in tgs:
            if t.n != g.n or t.anti != g.anti:
                raise LayoutMismatch(f"cannot map group {g.name} onto {t.name}")
        for i in range(g.n):
            var_targets.append([target.var(nm, i) for nm in names])
    cache: dict = {}

    def expansions(v: int, e: int):
        key = (v, e)
        if key not in cache:
            tv = var_targets[v]
            res = []
            for parts, coef in _binomial_expansions(e, tv):
                k = 0
                for t, p in zip(tv, parts):
                    k += p << (BITS * t)
                res.append((k, coef))
            cache[key] = res
        return cache[key]

    acc: dict = {}
    for key, c in a.terms.items():
        exps = src.unpack(key)
        partial = [(0, 1)]
        for v, e in enumerate(exps):
            if not e:
                continue
            ex = expansions(v, e)
            partial = [(k1 + k2, c1 * c2) for k1, c1 in partial for k2, c2 in ex]
        for k, m in partial:
            if trunc.admits(k):
                acc[k] = acc.get(k, 0) + c * m
    return Jet(target, cap, _purge(acc, a.mode, a.eps), a.mode, a.eps, _clean=True)


def jet_eval_zero(a: Jet, groups: Iterable[str]) -> Jet:
    """Set the named groups to zero. When whole (holo, anti) pairs are
    removed the result lives on the remaining groups; otherwise the layout
    is kept and the dropped variables simply no longer occur."""
    groups = set(groups)
    layout = a.layout
    for name in groups:
        layout.index(name)
    drop_vars = [v for name in groups for v in layout.group_vars(name)]
    names = layout.names
    whole_pairs = all((names[i] in groups) == (names[i + 1] in groups)
                      for i in range(0, len(names), 2))
    if not whole_pairs:
        out = {k: c for k, c in a.terms.items()
               if not any((k >> (BITS * v)) & FIELD for v in drop_vars)}
        return Jet(layout, a.cap, out, a.mode, a.eps, _clean=True)
    keep = [g for g in layout.groups if g.name not in groups]
    new_layout = VarLayout(keep)
    keep_vars = [v for g in keep for v in layout.group_vars(g.name)]
    out = {}
    for k, c in a.terms.items():
        if any((k >> (BITS * v)) & FIELD for v in drop_vars):
            continue
        nk = 0
        for j, v in enumerate(keep_vars):
            nk |= ((k >> (BITS * v)) & FIELD) << (BITS * j)
        out[nk] = c
    return Jet(new_layout, a.cap, out, a.mode, a.eps, _clean=True)


def conj_jet(a: Jet) -> Jet:
    """Complex conjugate: swap each (holo, anti) pair and conjugate values."""
    ck = a.layout.conj_key
    return a._like({ck(k): conj(c) for k, c in a.terms.items()}, clean=True)


def is_hermitian(a: Jet, tol: float = 0.0) -> bool:
    """True iff the jet is real-valued, i.e. equals its own conjugate."""
    b = conj_jet(a)
    if a.mode == EXACT or tol == 0.0:
        return a.terms == b.terms
    keys = set(a.terms) | set(b.terms)
    return all(abs(a.terms.get(k, 0) - b.terms.get(k, 0)) <= tol for k in keys)


def relabel(a: Jet, layout: VarLayout) -> Jet:
    """Transport coefficients onto a layout with identical group shapes."""
    if len(layout.groups) != len(a.layout.groups) or any(
            g.n != h.n for g, h in zip(layout.groups, a.layout.groups)):
        raise LayoutMismatch("relabel needs identically shaped layouts")
    return Jet(layout, a.cap, dict(a.terms), a.mode, a.eps, _clean=True)


def embed(a: Jet, target: VarLayout, cap: int | None = None) -> Jet:
    """Include a jet into a larger layout that contains all of its groups."""
    return taylor_shift(a, target, {}, cap=a.cap if cap is None else cap)


def group_degree_key(layout: VarLayout, key: int, names: Iterable[str]) -> int:
    return sum((key >> (BITS * v)) & FIELD for name in names for v in layout.group_vars(name))


def evaluate(a: Jet, point: Mapping[str, Sequence]) -> np.ndarray | complex:
    """Numerically evaluate the jet polynomial.

    ``point`` maps every group name to a length-``n`` sequence of complex
    values or arrays; arrays broadcast against each other.
    """
    layout = a.layout
    values = []
    for g in layout.groups:
        vals = point[g.name]
        if len(vals) != g.n:
            raise LayoutMismatch(f"group {g.name!r} needs {g.n} values")
        values += [np.asarray(x, dtype=complex) for x in vals]
    shape = np.broadcast_shapes(*(v.shape for v in values)) if values else ()
    total = np.zeros(shape, dtype=complex)
    if not a.terms:
        return total if shape else complex(0)
    exps = np.array([layout.unpack(k) for k in a.terms], dtype=np.int64)
    coefs = np.array([complex(c) for c in a.terms.values()])
    max_e = exps.max(axis=0)
    powers = []
    for v, x in enumerate(values):
        pw = [np.ones(shape, dtype=complex)]
        for _ in range(int(max_e[v])):
            pw.append(pw[-1] * x)
        powers.append(pw)
    for row, c in zip(exps, coefs):
        term = np.full(shape, c, dtype=complex)
        for v, e in enumerate(row):
            if e:
                term = term * powers[v][e]
        total += term
    return total if shape else complex(total)


def degree_contributions(a: Jet, point: Mapping[str, Sequence]) -> list[complex]:
    """Per-total-degree partial values of the jet at a single point."""
    parts = a.homogeneous_parts()
    out = []
    for d, p in enumerate(parts):
        out.append(complex(evaluate(Jet(a.layout, a.cap, p, a.mode, _clean=True), point)))
    return out


def matrix_identity(layout: VarLayout, cap: int, n: int, mode=EXACT) -> list[list[Jet]]:
    return [[Jet.constant(layout, cap, 1 if i == j else 0, mode) for j in range(n)]
            for i in range(n)]


def zero_like(a: Jet) -> Jet:
    return Jet.zero(a.layout, a.cap, a.mode)


__all__ = [
    "BITS", "Group", "VarLayout", "Jet", "Truncation", "product_terms",
    "jet_add", "jet_mul", "jet_sum", "jet_derive", "jet_inv", "jet_log", "jet_exp",
    "jet_det", "taylor_shift", "jet_eval_zero", "conj_jet", "is_hermitian", "relabel",
    "embed", "evaluate", "degree_contributions", "key_degree",
]
