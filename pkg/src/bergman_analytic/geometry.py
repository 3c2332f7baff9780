"""Geometric objects derived from a Kähler potential jet at the origin.

Everything here works on jets in the layout ``(z, zb)`` for the potential
and ``(w, wb, u, ub)`` for objects re-expanded around a moving base point
``w`` with displacement ``u = y - w``.

Index convention: ``g[i][j]`` is ``g_{i jbar} = d_i d_jbar phi`` and
``g_inv[i][j]`` is the coefficient of ``d_{u_i} d_{ub_j}`` in the Laplacian,
so that ``sum_j g[k][j] * g_inv[i][j] == delta_ki``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import DegenerateMetric, PreconditionViolated
from .jets import (
    BITS,
    FIELD,
    Group,
    Jet,
    Truncation,
    VarLayout,
    is_hermitian,
    jet_derive,
    jet_det,
    jet_inv,
    jet_log,
    relabel,
    taylor_shift,
)
from .scalars import EXACT, FLOAT, conj, imag_part, real_part, to_mode


def potential_layout(n: int) -> VarLayout:
    return VarLayout.paired(("z", "zb", n))


def base_layout(n: int) -> VarLayout:
    return VarLayout.paired(("w", "wb", n))


def moving_layout(n: int) -> VarLayout:
    return VarLayout.paired(("w", "wb", n), ("u", "ub", n))


def polarized_layout(n: int) -> VarLayout:
    return VarLayout([Group("x", n, False), Group("yb", n, True)])


def diastasis_layout(n: int) -> VarLayout:
    return VarLayout.paired(("x", "xb", n), ("y", "yb", n))


# ---------------------------------------------------------------------------
# small dense linear algebra over exact or complex scalars


def const_det(m):
    """Determinant of a small constant matrix by Gaussian elimination
    (exact in exact mode)."""
    a = [list(row) for row in m]
    n = len(a)
    det = 1
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        p = a[c][c]
        det = det * p
        for r in range(c + 1, n):
            if a[r][c]:
                f = a[r][c] / p
                for k in range(c, n):
                    a[r][k] = a[r][k] - f * a[c][k]
    return det


def const_inverse(m, mode=EXACT):
    n = len(m)
    one = to_mode(1, mode)
    zero = to_mode(0, mode)
    a = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(m)]
    for c in range(n):
        if mode == EXACT:
            piv = next((r for r in range(c, n) if a[r][c]), None)
        else:
            piv = max(range(c, n), key=lambda r: abs(a[r][c]))
            if abs(a[piv][c]) < 1e-14:
                piv = None
        if piv is None:
            raise DegenerateMetric("matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        inv_p = mpq(1) / p if mode == EXACT else 1 / p
        a[c] = [x * inv_p for x in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


def leading_minors(m):
    return [const_det([row[:k] for row in m[:k]]) for k in range(1, len(m) + 1)]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialJet:
    """Normalized real-analytic Kähler potential ``phi`` at the origin."""

    phi: Jet
    n: int = field(init=False)
    input_order: int = field(init=False)

    def __post_init__(self):
        phi = self.phi
        layout = phi.layout
        if len(layout.groups) != 2 or layout.groups[0].name != "z" or layout.groups[1].name != "zb":
            raise PreconditionViolated(f"potential must live on (z, zb), got {layout!r}")
        object.__setattr__(self, "n", layout.groups[0].n)
        object.__setattr__(self, "input_order", phi.cap)
        if phi.constant_term:
            raise PreconditionViolated("potential must satisfy phi(0) = 0")
        tol = 0.0 if phi.mode == EXACT else 1e-12
        if not is_hermitian(phi, tol):
            raise PreconditionViolated("potential is not real-valued (Hermitian)")
        h = self.levi_matrix()
        minors = leading_minors(h)
        for k, mnr in enumerate(minors, 1):
            if phi.mode == EXACT:
                ok = imag_part(mnr) == 0 and real_part(mnr) > 0
            else:
                ok = abs(imag_part(mnr)) <= 1e-12 and real_part(mnr) > 1e-12
            if not ok:
                raise DegenerateMetric(f"leading minor {k} of (phi_ij(0)) is {mnr}, not positive")

    @property
    def mode(self) -> str:
        return self.phi.mode

    def levi_matrix(self):
        """The constant matrix ``phi_{i jbar}(0)``."""
        n = self.n
        lay = self.phi.layout
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                key = (1 << (BITS * lay.var("z", i))) + (1 << (BITS * lay.var("zb", j)))
                row.append(self.phi.terms.get(key, to_mode(0, self.mode)))
            out.append(row)
        return out

    def with_order(self, order: int) -> "PotentialJet":
        return PotentialJet(self.phi.with_cap(order))


@dataclass(frozen=True)
class MetricJets:
    g: list
    g_inv: list
    v: Jet
    v_inv: Jet

    @property
    def n(self) -> int:
        return len(self.g)


def matrix_inverse(g: list[list[Jet]]) -> list[list[Jet]]:
    """Inverse of a jet matrix, solved degree by degree:
    ``X_d = -G_0^{-1} sum_{e>=1} G_e X_{d-e}``. Returns ``X = G^{-1}``."""
    n = len(g)
    ref = g[0][0]
    mode, cap, layout = ref.mode, ref.cap, ref.layout
    parts = [[g[i][j].homogeneous_parts() for j in range(n)] for i in range(n)]
    g0 = [[parts[i][j][0].get(0, to_mode(0, mode)) for j in range(n)] for i in range(n)]
    g0inv = const_inverse(g0, mode)
    # X[d][i][j] homogeneous term maps
    X = [[[{0: g0inv[i][j]} if g0inv[i][j] else {} for j in range(n)] for i in range(n)]]
    for d in range(1, cap + 1):
        rhs = [[{} for _ in range(n)] for _ in range(n)]
        for e in range(1, d + 1):
            for i in range(n):
                for k in range(n):
                    ge = parts[i][k][e]
                    if not ge:
                        continue
                    for j in range(n):
                        xk = X[d - e][k][j]
                        if not xk:
                            continue
                        acc = rhs[i][j]
                        for ka, ca in ge.items():
                            for kb, cb in xk.items():
                                kk = ka + kb
                                acc[kk] = acc.get(kk, 0) + ca * cb
        Xd = [[{} for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc: dict = {}
                for k in range(n):
                    c = g0inv[i][k]
                    if not c:
                        continue
                    for kk, val in rhs[k][j].items():
                        acc[kk] = acc.get(kk, 0) - c * val
                Xd[i][j] = acc
        X.append(Xd)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            terms: dict = {}
            for d in range(cap + 1):
                terms.update(X[d][i][j])
            row.append(Jet(layout, cap, terms, mode))
        out.append(row)
    return out


def metric_from_potential(p: PotentialJet) -> MetricJets:
    n = p.n
    phi = p.phi
    g = [[jet_derive(jet_derive(phi, ("z", i)), ("zb", j)) for j in range(n)] for i in range(n)]
    try:
        x = matrix_inverse(g)
    except DegenerateMetric:
        raise DegenerateMetric("phi_{i jbar}(0) is singular") from None
    g_inv = [[x[j][i] for j in range(n)] for i in range(n)]
    v = jet_det(g)
    v0 = v.constant_term
    if p.mode == EXACT:
        positive = imag_part(v0) == 0 and real_part(v0) > 0
    else:
        positive = abs(imag_part(v0)) <= 1e-12 and real_part(v0) > 0
    if not positive:
        raise DegenerateMetric(f"volume density at 0 is {v0}")
    return MetricJets(g=g, g_inv=g_inv, v=v, v_inv=jet_inv(v))


def polarize(p: PotentialJet) -> Jet:
    """``psi(x, yb)``: the potential's coefficients on independent groups."""
    return relabel(p.phi, polarized_layout(p.n))


def restrict_polarized(psi: Jet) -> Jet:
    """Set ``yb = conj(x)``; inverse of :func:`polarize`."""
    return relabel(psi, potential_layout(psi.layout.groups[0].n))


def diastasis(p: PotentialJet) -> Jet:
    """Calabi's diastasis ``phi(x) + phi(y) - psi(x, yb) - psi(y, xb)``."""
    lay = diastasis_layout(p.n)
    phi = p.phi
    phi_x = taylor_shift(phi, lay, {"z": ("x",), "zb": ("xb",)})
    phi_y = taylor_shift(phi, lay, {"z": ("y",), "zb": ("yb",)})
    psi_xy = taylor_shift(phi, lay, {"z": ("x",), "zb": ("yb",)})
    psi_yx = taylor_shift(phi, lay, {"z": ("y",), "zb": ("xb",)})
    return phi_x + phi_y - psi_xy - psi_yx


def _group_degrees(layout: VarLayout, key: int) -> list[int]:
    out = []
    for off, g in zip(layout.offsets, layout.groups):
        s = 0
        for i in range(g.n):
            s += (key >> (BITS * (off + i))) & FIELD
        out.append(s)
    return out


def shifted_potential(p: PotentialJet, truncation: Truncation | None = None) -> Jet:
    """``phi(w + u)`` as a jet in ``(w, wb, u, ub)``."""
    lay = moving_layout(p.n)
    return taylor_shift(p.phi, lay, {"z": ("w", "u"), "zb": ("wb", "ub")},
                        truncation=truncation)


def phase_split(p: PotentialJet, truncation: Truncation | None = None) -> tuple[Jet, Jet]:
    """Split ``phi(w+u) = f + conj(f) + phi_tilde``.

    ``f`` is the part of the Taylor series at ``w`` that is holomorphic in
    ``u`` minus ``phi(w)/2``; ``phi_tilde`` keeps only terms with positive
    degree in both ``u`` and ``ub``.
    """
    shifted = shifted_potential(p, truncation)
    lay = shifted.layout
    half = mpq(1, 2) if shifted.mode == EXACT else 0.5
    f_terms: dict = {}
    tilde: dict = {}
    for k, c in shifted.terms.items():
        _, _, du, dub = _group_degrees(lay, k)
        if dub == 0:
            f_terms[k] = f_terms.get(k, 0) + (c * half if du == 0 else c)
        elif du >= 1:
            tilde[k] = c
    f = Jet(lay, shifted.cap, f_terms, shifted.mode)
    return f, Jet(lay, shifted.cap, tilde, shifted.mode)


def build_sw(p: PotentialJet, truncation: Truncation | None = None) -> Jet:
    """``S_w``: ``phi_tilde`` minus its ``(u, ub)``-bidegree (1,1) part."""
    _, tilde = phase_split(p, truncation)
    lay = tilde.layout
    terms = {}
    for k, c in tilde.terms.items():
        _, _, du, dub = _group_degrees(lay, k)
        if du + dub >= 3:
            terms[k] = c
    return Jet(lay, tilde.cap, terms, tilde.mode, _clean=True)


def hessian_check(h: Jet):
    """Return ``(det Hess_R(h)(0), 4^n |det Hess_C(h)(0)|^2)``.

    The real Hessian is assembled in real coordinates ``z = x + i y`` via
    ``d_x = d_z + d_zb`` and ``d_y = i (d_z - d_zb)`` and its determinant is
    taken directly; the right side uses only the complex Hessian.
    """
    lay = h.layout
    n = lay.groups[0].n
    mode = h.mode
    zero = to_mode(0, mode)

    def second(a, i, b, j):
        key = (1 << (BITS * lay.var(a, i))) + (1 << (BITS * lay.var(b, j)))
        c = h.terms.get(key, zero)
        if a == b and i == j:
            c = c * 2
        return c

    hzz = [[second("z", i, "z", j) for j in range(n)] for i in range(n)]
    hbb = [[second("zb", i, "zb", j) for j in range(n)] for i in range(n)]
    hzb = [[second("z", i, "zb", j) for j in range(n)] for i in range(n)]
    hbz = [[second("z", j, "zb", i) for j in range(n)] for i in range(n)]
    if any(x for row in hzz + hbb for x in row):
        raise PreconditionViolated("pure second derivatives must vanish at the point")
    I = 1j if mode == FLOAT else _i_exact()
    real = [[zero] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            zz, zb, bz, bb = hzz[i][j], hzb[i][j], hbz[i][j], hbb[i][j]
            real[i][j] = zz + zb + bz + bb
            real[i][n + j] = I * (zz - zb + bz - bb)
            real[n + i][j] = I * (zz + zb - bz - bb)
            real[n + i][n + j] = -(zz - zb - bz + bb)
    lhs = const_det(real)
    dc = const_det(hzb)
    rhs = (4 ** n) * dc * conj(dc)
    return lhs, rhs


def _i_exact():
    from .scalars import GaussRational
    return GaussRational.make(mpq(0), mpq(1))


def scalar_curvature(m: MetricJets) -> Jet:
    """``rho = sum g^{i jbar} d_i d_jbar (-log v)`` (normalized so that the
    first Bergman coefficient equals ``rho / 2``)."""
    v = m.v
    v0 = v.constant_term
    mode = v.mode
    inv0 = mpq(1) / v0 if mode == EXACT else 1 / v0
    logv = jet_log(v.scale(inv0))
    n = m.n
    rho = None
    for i in range(n):
        for j in range(n):
            t = jet_derive(jet_derive(logv, ("z", i)), ("zb", j))
            t = m.g_inv[i][j].with_cap(t.cap) * t
            rho = t if rho is None else rho + t
    return -rho


def conj_symmetric(psi: Jet) -> bool:
    return is_hermitian(psi) if psi.mode == EXACT else is_hermitian(psi, 1e-12)


__all__ = [
    "PotentialJet", "MetricJets", "metric_from_potential", "polarize", "restrict_polarized",
    "diastasis", "phase_split", "build_sw", "hessian_check", "scalar_curvature",
    "shifted_potential", "matrix_inverse", "potential_layout", "base_layout",
    "moving_layout", "polarized_layout", "diastasis_layout", "const_det", "const_inverse",
]
