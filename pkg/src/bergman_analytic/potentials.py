"""Closed-form potential generators for the builtin models."""

from __future__ import annotations

from typing import Sequence

from .geometry import PotentialJet, potential_layout
from .jets import Jet, jet_log
from .scalars import EXACT, to_mode


def norm_squared(n: int, order: int, mode: str = EXACT) -> Jet:
    lay = potential_layout(n)
    terms = {}
    for i in range(n):
        z = Jet.variable(lay, order, "z", i, mode)
        zb = Jet.variable(lay, order, "zb", i, mode)
        terms.update((z * zb).terms)
    return Jet(lay, order, terms, mode)


def fock(n: int = 1, order: int = 2, mode: str = EXACT) -> PotentialJet:
    """``|z|^2``."""
    return PotentialJet(norm_squared(n, max(order, 2), mode))


def fubini_study(n: int = 1, order: int = 16, mode: str = EXACT) -> PotentialJet:
    """``log(1 + |z|^2)``."""
    r2 = norm_squared(n, order, mode)
    return PotentialJet(jet_log(r2 + 1))


def hyperbolic(n: int = 1, order: int = 16, mode: str = EXACT) -> PotentialJet:
    """``-log(1 - |z|^2)`` on the unit ball."""
    r2 = norm_squared(n, order, mode)
    return PotentialJet(-jet_log(1 - r2))


def radial(coeffs: Sequence, n: int = 1, order: int | None = None,
           mode: str = EXACT) -> PotentialJet:
    """``sum_s c_s |z|^(2s)`` for ``coeffs = [c_1, c_2, ...]``."""
    if not coeffs:
        raise ValueError("radial potential needs at least one coefficient")
    order = 2 * len(coeffs) if order is None else order
    r2 = norm_squared(n, order, mode)
    total = Jet.zero(r2.layout, order, mode)
    power = r2
    for c in coeffs:
        total = total + power.scale(to_mode(c, mode))
        power = power * r2
    return PotentialJet(total)


def quartic(lam=None, order: int | None = None, mode: str = EXACT) -> PotentialJet:
    """``|z|^2 + lam |z|^4`` (n = 1), default ``lam = 1/10``."""
    from gmpy2 import mpq
    lam = mpq(1, 10) if lam is None else lam
    if mode != EXACT:
        lam = float(lam)
    return radial([1, lam], order=order, mode=mode)


def bumped(order: int | None = None, mode: str = EXACT) -> PotentialJet:
    """``|z|^2 + z^2 zb^2`` (n = 1)."""
    return radial([1, 1], order=order, mode=mode)


def from_monomials(n: int, entries, order: int, mode: str = EXACT) -> PotentialJet:
    """Build from ``[(alpha, beta, value), ...]`` with ``alpha, beta`` multi-indices."""
    lay = potential_layout(n)
    terms = {}
    for alpha, beta, value in entries:
        key = lay.pack(tuple(alpha) + tuple(beta))
        terms[key] = terms.get(key, 0) + to_mode(value, mode)
    return PotentialJet(Jet(lay, order, terms, mode))


BUILTINS = {
    "fock": fock,
    "fubini_study": fubini_study,
    "hyperbolic": hyperbolic,
}
