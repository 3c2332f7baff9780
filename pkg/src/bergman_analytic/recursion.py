"""Charles's linear recursion for the Bergman kernel coefficients.

For each base point ``w`` (carried symbolically by the jet groups ``w, wb``)

    b_m(w) = -1/v(w) * sum_{j=1..m} sum_{mu=0..2j, nu=mu+j}
             (-1)^mu / (mu! nu!) * Lap^nu( S_w^mu * b_{m-j}(w, wb+ub) * v(w+u) ) |_{u=0}

where ``Lap = sum g^{i jbar}(w) d_{u_i} d_{ub_j}`` has coefficients frozen
at ``w``.

Degree bookkeeping. ``b_m`` is wanted to total ``(w, wb)``-degree ``D``.
The term with index ``j`` reads ``b_{m-j}`` after shifting ``wb -> wb + ub``
and taking up to ``nu <= 3j`` derivatives in ``ub``, so ``b_i`` is computed
internally to degree ``D + 3(M - i)``. A potential known to order
``D + 6M + 4`` is always enough.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .errors import InsufficientInputOrder
from .geometry import (
    MetricJets,
    PotentialJet,
    base_layout,
    build_sw,
    metric_from_potential,
    moving_layout,
)
from .jets import (
    BITS,
    FIELD,
    Jet,
    Truncation,
    VarLayout,
    is_hermitian,
    jet_derive,
    jet_eval_zero,
    jet_sum,
    product_terms,
    relabel,
    taylor_shift,
)
from .scalars import EXACT, FLOAT, to_mode

THREADS_ENV = "BERGMAN_THREADS"


def required_order(M: int, D: int) -> int:
    """Potential order needed to certify ``b_1..b_M`` to jet degree ``D``."""
    return D + 6 * M + 4


def working_degree(i: int, M: int, D: int) -> int:
    """Internal jet degree at which ``b_i`` is carried."""
    return D + 3 * (M - i)


@dataclass(frozen=True)
class RecursionTermIndex:
    j: int
    mu: int
    nu: int

    def __post_init__(self):
        if self.j < 1 or self.mu < 0 or self.nu - self.mu != self.j or 2 * self.nu < 3 * self.mu:
            raise ValueError(f"invalid recursion index {self}")

    @property
    def weight(self):
        """``(-1)^mu / (mu! nu!)`` as an exact rational."""
        sign = -1 if self.mu % 2 else 1
        return mpq(sign, math.factorial(self.mu) * math.factorial(self.nu))


def term_indices(j: int) -> list[RecursionTermIndex]:
    """All ``(mu, nu)`` with ``nu - mu = j`` and ``2 nu >= 3 mu``."""
    return [RecursionTermIndex(j, mu, mu + j) for mu in range(0, 2 * j + 1)]


@dataclass
class CoefficientTable:
    b: list
    n: int
    M: int
    D: int
    input_order: int
    mode: str = EXACT
    work: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.b)

    def __getitem__(self, m: int) -> Jet:
        return self.b[m]

    def value_at_origin(self, m: int):
        return self.b[m].constant_term


# ---------------------------------------------------------------------------
# generic (reference) operations


def _to_base(j: Jet) -> Jet:
    n = j.layout.groups[0].n
    return relabel(j, base_layout(n))


def frozen_laplacian_pow(F: Jet, nu: int, g_inv: Sequence[Sequence[Jet]]) -> Jet:
    """Apply ``(sum_ij g_inv[i][j](w) d_{u_i} d_{ub_j})^nu`` to a jet in
    ``(w, wb, u, ub)``; the multipliers depend on ``w`` only."""
    lay = F.layout
    n = lay.group("u").n
    gi4 = [[taylor_shift(_to_base(g_inv[i][j]), lay, {}, cap=F.cap) for j in range(n)]
           for i in range(n)]
    for _ in range(nu):
        parts = []
        for i in range(n):
            for j in range(n):
                t = jet_derive(jet_derive(F, ("u", i)), ("ub", j))
                if t.is_zero() or gi4[i][j].is_zero():
                    continue
                parts.append(t * gi4[i][j].with_cap(t.cap))
        cap = max(F.cap - 2, 0)
        F = jet_sum(parts) if parts else Jet.zero(lay, cap, F.mode)
    return F


def extend_antiholomorphic(b: Jet, cap: int | None = None) -> Jet:
    """``b(w, wb) -> b(w, wb + ub)`` as a jet in ``(w, wb, u, ub)``."""
    b = _to_base(b)
    n = b.layout.groups[0].n
    return taylor_shift(b, moving_layout(n), {"wb": ("wb", "ub")}, cap=cap)


def recursion_term(idx: RecursionTermIndex, b_prev: Jet, s: Jet, v4: Jet,
                   g_inv: Sequence[Sequence[Jet]], out_cap: int | None = None) -> Jet:
    """One summand ``(-1)^mu/(mu! nu!) Lap^nu(S^mu b_prev(w, yb) v(y))|_{y=w}``
    computed by brute force on full 4-group jets."""
    cap = min(s.cap, v4.cap)
    B = extend_antiholomorphic(b_prev, cap=cap)
    s = s.with_cap(cap)
    F = v4.with_cap(cap) * B
    for _ in range(idx.mu):
        F = F * s
    F = frozen_laplacian_pow(F, idx.nu, g_inv)
    value = jet_eval_zero(F, ("u", "ub")).scale(idx.weight if F.mode == EXACT else float(idx.weight))
    if out_cap is not None:
        value = value.with_cap(min(out_cap, value.cap))
    return value


def compute_bm(m: int, table: CoefficientTable, geo: MetricJets, s: Jet,
               v4: Jet | None = None) -> Jet:
    """Reference evaluation of ``b_m`` from ``table.work[0..m-1]`` using
    :func:`recursion_term` for every index; appends to the table."""
    D_m = working_degree(m, table.M, table.D)
    if s.cap < D_m + 6 * m:
        raise InsufficientInputOrder(f"S_w jet cap {s.cap} < {D_m + 6 * m}")
    n = table.n
    if v4 is None:
        v4 = taylor_shift(geo.v, moving_layout(n), {"z": ("w", "u"), "zb": ("wb", "ub")},
                          cap=s.cap)
    terms = []
    for j in range(1, m + 1):
        for idx in term_indices(j):
            terms.append(recursion_term(idx, table.work[m - j], s, v4, geo.g_inv, out_cap=D_m))
    total = _compensated_sum([t.with_cap(D_m) for t in terms])
    vinv = _to_base(geo.v_inv).with_cap(D_m)
    bm = -(vinv * total)
    table.work.append(bm)
    table.b.append(bm.with_cap(min(table.D, bm.cap)))
    return bm


def _compensated_sum(jets: Sequence[Jet]) -> Jet:
    if jets[0].mode == EXACT:
        return jet_sum(jets)
    keys = {}
    for j in jets:
        for k, c in j.terms.items():
            keys.setdefault(k, []).append(c)
    terms = {k: complex(math.fsum(c.real for c in cs), math.fsum(c.imag for c in cs))
             for k, cs in keys.items()}
    ref = jets[0]
    return Jet(ref.layout, ref.cap, terms, FLOAT, ref.eps)


# ---------------------------------------------------------------------------
# fast path


def _chain_truncation(lay: VarLayout, n: int, M: int, D: int, mu: int) -> Truncation:
    """Constraints that ``S^mu * v`` monomials must meet to matter for any
    ``b_m`` with ``m <= M``. Each is preserved under multiplication by a
    further factor of ``S`` (which raises ``mu`` by one)."""
    w = [1] * (2 * n)
    limit = D + 3 * M + 3 * mu
    return Truncation(lay, D + 6 * M, [
        (w + [3] * n + [0] * n, limit),
        (w + [0] * n + [3] * n, limit),
        ([0] * (2 * n) + [1] * n + [0] * n, M + mu),
        ([0] * (3 * n) + [1] * n, M + mu),
    ])


class CharlesRecursion:
    """Evaluates the recursion for one potential with cached ``S^mu v``."""

    def __init__(self, p: PotentialJet, M: int, D: int, check_order: bool = True):
        if M < 0 or D < 0:
            raise ValueError("M and D must be non-negative")
        need = required_order(M, D)
        if check_order and p.input_order < need:
            raise InsufficientInputOrder(
                f"potential known to order {p.input_order}, need {need} for M={M}, D={D}")
        self.p = p
        self.n = n = p.n
        self.M, self.D = M, D
        self.mode = p.mode
        self.lay2 = base_layout(n)
        self.lay4 = lay4 = moving_layout(n)
        self.geo = metric_from_potential(p)
        self.g_inv = [[_to_base(x) for x in row] for row in self.geo.g_inv]
        self.v_inv = _to_base(self.geo.v_inv)
        self._ushift = BITS * 2 * n
        self._wmask = (1 << self._ushift) - 1
        s_trunc = _chain_truncation(lay4, n, M, D, 1)
        self.s = build_sw(p, truncation=s_trunc) if M else Jet.zero(lay4, D, self.mode)
        v4 = taylor_shift(self.geo.v, lay4, {"z": ("w", "u"), "zb": ("wb", "ub")},
                          cap=D + 6 * M, truncation=_chain_truncation(lay4, n, M, D, 0))
        self.v4 = v4
        self._powers = [v4.terms]      # S^mu * v
        self._ext: dict[int, dict] = {}
        self.table = CoefficientTable(
            b=[], n=n, M=M, D=D, input_order=p.input_order, mode=self.mode)
        one = Jet.one(self.lay2, working_degree(0, M, D), self.mode)
        self.table.work.append(one)
        self.table.b.append(one.with_cap(D))

    # -- cached building blocks --------------------------------------------
    def smu_v(self, mu: int) -> dict:
        while len(self._powers) <= mu:
            k = len(self._powers)
            trunc = _chain_truncation(self.lay4, self.n, self.M, self.D, k)
            self._powers.append(product_terms(self._powers[-1], self.s.terms, trunc, self.mode))
        return self._powers[mu]

    def extended(self, i: int) -> dict:
        """Buckets ``{ub-degree: terms}`` of ``b_i(w, wb + ub)``."""
        if i not in self._ext:
            b = self.table.work[i]
            B = taylor_shift(b, self.lay4, {"wb": ("wb", "ub")}, cap=b.cap)
            self._ext[i] = self._bucket(B.terms, "ub")
        return self._ext[i]

    def _udeg(self, key: int) -> tuple[int, int, int]:
        n = self.n
        u = key >> self._ushift
        w = key & self._wmask
        du = dub = dw = 0
        for i in range(n):
            du += (u >> (BITS * i)) & FIELD
            dub += (u >> (BITS * (n + i))) & FIELD
        for i in range(2 * n):
            dw += (w >> (BITS * i)) & FIELD
        return dw, du, dub

    def _bucket(self, terms: dict, which: str) -> dict:
        out: dict = {}
        for k, c in terms.items():
            dw, du, dub = self._udeg(k)
            d = dub if which == "ub" else du
            out.setdefault(d, {})[k] = c
        return out

    # -- one summand ----------------------------------------------------------
    def term(self, m: int, idx: RecursionTermIndex) -> Jet:
        """Value of one summand at step ``m`` as a ``(w, wb)`` jet of degree
        ``working_degree(m)``. Only the ``(nu, nu)`` bidegree part in
        ``(u, ub)`` of the product survives ``Lap^nu |_{u=0}``, so only that
        part is formed."""
        nu = idx.nu
        D_m = working_degree(m, self.M, self.D)
        T = self.smu_v(idx.mu)
        tb: dict = {}
        for k, c in T.items():
            dw, du, dub = self._udeg(k)
            if du == nu and dw <= D_m and dub <= nu:
                tb.setdefault(dub, {})[k] = c
        ext = self.extended(m - idx.j)
        n = self.n
        trunc = Truncation(self.lay4, D_m + 2 * nu, [([1] * (2 * n) + [0] * (2 * n), D_m)])
        acc: dict = {}
        for q, part in tb.items():
            other = ext.get(nu - q)
            if not other:
                continue
            for k, c in product_terms(part, other, trunc, self.mode).items():
                acc[k] = acc.get(k, 0) + c
        value = self._contract(acc, nu, D_m)
        w = idx.weight if self.mode == EXACT else float(idx.weight)
        return value.scale(w)

    def _contract(self, terms: dict, nu: int, D_m: int) -> Jet:
        """``Lap^nu`` of a ``(nu, nu)``-bihomogeneous polynomial in ``u``
        with ``(w, wb)``-jet coefficients, returned as a ``(w, wb)`` jet."""
        n = self.n
        wtrunc = Truncation(self.lay2, D_m)
        poly: dict = {}
        for k, c in terms.items():
            uk = k >> self._ushift
            wk = k & self._wmask
            d = poly.setdefault(uk, {})
            d[wk] = d.get(wk, 0) + c
        ginv = [[self.g_inv[i][j].terms for j in range(n)] for i in range(n)]
        for _ in range(nu):
            nxt: dict = {}
            for uk, coef in poly.items():
                for i in range(n):
                    ei = (uk >> (BITS * i)) & FIELD
                    if not ei:
                        continue
                    for j in range(n):
                        ej = (uk >> (BITS * (n + j))) & FIELD
                        if not ej or not ginv[i][j]:
                            continue
                        nk = uk - (1 << (BITS * i)) - (1 << (BITS * (n + j)))
                        prod = product_terms(coef, ginv[i][j], wtrunc, self.mode)
                        d = nxt.setdefault(nk, {})
                        f = ei * ej
                        for kk, cc in prod.items():
                            d[kk] = d.get(kk, 0) + cc * f
            poly = nxt
        return Jet(self.lay2, D_m, poly.get(0, {}), self.mode)

    # -- driver ------------------------------------------------------------
    def step(self, m: int, workers: int = 1) -> Jet:
        if len(self.table.work) != m:
            raise ValueError(f"b_{m} needs b_0..b_{m - 1} first")
        D_m = working_degree(m, self.M, self.D)
        indices = [idx for j in range(1, m + 1) for idx in term_indices(j)]
        if workers > 1:
            for mu in range(max(i.mu for i in indices) + 1):
                self.smu_v(mu)
            for i in range(m):
                self.extended(i)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(self.term, [m] * len(indices), indices))
        else:
            values = [self.term(m, idx) for idx in indices]
        total = _compensated_sum(values)
        bm = -(self.v_inv.with_cap(D_m) * total)
        self.table.work.append(bm)
        self.table.b.append(bm.with_cap(self.D))
        return bm

    def run(self, workers: int | None = None) -> CoefficientTable:
        if workers is None:
            workers = int(os.environ.get(THREADS_ENV, "1") or 1)
        for m in range(len(self.table.work), self.M + 1):
            self.step(m, workers)
        return self.table


def compute_all(p: PotentialJet, M: int, D: int, workers: int | None = None) -> CoefficientTable:
    """Bergman coefficients ``b_0..b_M`` as ``(w, wb)`` jets of degree ``D``."""
    return CharlesRecursion(p, M, D).run(workers)


def polarize_bm(b: Jet) -> Jet:
    """``b_m(w, wb) -> b_m(x, yb)`` on independent groups."""
    from .geometry import polarized_layout
    return relabel(b, polarized_layout(b.layout.groups[0].n))


def table_is_hermitian(table: CoefficientTable) -> bool:
    tol = 0.0 if table.mode == EXACT else 1e-9
    return all(is_hermitian(b, tol) for b in table.b)


__all__ = [
    "RecursionTermIndex", "CoefficientTable", "CharlesRecursion", "term_indices",
    "required_order", "working_degree", "frozen_laplacian_pow", "extend_antiholomorphic",
    "recursion_term", "compute_bm", "compute_all", "polarize_bm", "table_is_hermitian",
]
