"""Independent ground truth for the recursion and the expansion.

Closed-form kernels for the Fock, Fubini-Study and hyperbolic models, a
quadrature Gram oracle for radial potentials, exact Gaussian moments, an
exact Laplace-series oracle for radial potentials at the origin, and the
local reproducing test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from gmpy2 import mpq
from scipy.optimize import brentq

from . import potentials
from .errors import (DomainError, NonIntegrableWeight, NotPositiveDefinite,
                     TailNotConverged)
from .geometry import PotentialJet, const_det, const_inverse, leading_minors
from .jets import Jet, evaluate, jet_derive
from .quadrature import adaptive_gl, polar_integral
from .scalars import EXACT, conj, exact, imag_part, real_part

LOG_GUARD = 45.0          # integrand range kept: e^-45 below the peak


def _vec(p, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(p, dtype=complex))
    if a.shape[0] != n:
        raise ValueError(f"point needs {n} coordinates, got {a.shape[0]}")
    return a


def _pairing(x, y, n: int):
    """``sum_i x_i conj(y_i)``; for ``n == 1`` scalars may be arrays."""
    if n == 1 and not isinstance(x, (list, tuple)):
        return np.asarray(x, dtype=complex) * np.conj(np.asarray(y, dtype=complex))
    return complex(np.dot(_vec(x, n), np.conj(_vec(y, n))))


# ---------------------------------------------------------------------------
# closed-form kernels


def fock_kernel(k, x, y, n: int = 1):
    """``(k/pi)^n exp(k <x, y>)``."""
    if k < 1:
        raise DomainError("Fock kernel needs k >= 1")
    return (k / math.pi) ** n * np.exp(k * _pairing(x, y, n))


def fs_kernel(k, x, y):
    """``((k+1)/pi) (1 + x conj(y))^k`` on the affine chart of CP^1."""
    if k < 1:
        raise DomainError("Fubini-Study kernel needs k >= 1")
    return (k + 1) / math.pi * (1 + _pairing(x, y, 1)) ** k


def _check_disc(*pts):
    for p in pts:
        if np.any(np.abs(np.asarray(p)) >= 1):
            raise DomainError("point outside the unit disc")


def hyperbolic_kernel(k, x, y):
    """``((k-1)/pi) (1 - x conj(y))^(-k)`` on the unit disc."""
    if k < 2:
        raise DomainError("weighted disc kernel needs k >= 2")
    _check_disc(x, y)
    return (k - 1) / math.pi * (1 - _pairing(x, y, 1)) ** (-k)


def hyperbolic_monomial_norm(j: int, k) -> float:
    """``||z^j||^2`` for weight ``(1 - |z|^2)^k`` against ``dA/(1 - |z|^2)^2``:
    ``pi j! (k-2)! / (j+k-1)!``."""
    if k < 2:
        raise DomainError("weighted disc norms need k >= 2")
    return math.pi * math.exp(math.lgamma(j + 1) + math.lgamma(k - 1) - math.lgamma(j + k))


# ---------------------------------------------------------------------------
# radial potentials phi = F(|z|^2)


@dataclass(frozen=True)
class RadialProfile:
    """``F`` with its first two derivatives on ``[0, t_max)``."""

    F: Callable
    dF: Callable
    ddF: Callable
    t_max: float = math.inf
    coeffs: tuple | None = None

    @classmethod
    def polynomial(cls, coeffs: Sequence) -> "RadialProfile":
        """``F(t) = sum_s c_s t^s`` for ``coeffs = [c_1, c_2, ...]``."""
        c = [float(v) for v in coeffs]
        p = np.polynomial.Polynomial([0.0] + c)
        d1, d2 = p.deriv(1), p.deriv(2)
        return cls(p, d1, d2, math.inf, tuple(coeffs))

    @classmethod
    def disc(cls) -> "RadialProfile":
        return cls(lambda t: -np.log1p(-t), lambda t: 1 / (1 - t),
                   lambda t: 1 / (1 - t) ** 2, 1.0)

    def density(self, t):
        """``phi_{z zbar}`` as a function of ``t = |z|^2``."""
        return self.dF(t) + t * self.ddF(t)


@dataclass(frozen=True)
class QuadratureSpec:
    """``order``: Gauss-Legendre panel order; ``J``: highest monomial kept;
    ``tol``: relative tolerance of each norm and of the series tail."""

    order: int = 20
    J: int = 60
    tol: float = 1e-13

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.J < 0 or self.order < 2:
            raise ValueError("need J >= 0 and order >= 2")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.order, 2 * self.J, self.tol)


def _log_integrand(prof: RadialProfile, j: int, k: float):
    def h(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            lt = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), -np.inf)
        return (j * lt if j else 0.0) - k * prof.F(t)
    return h


def _peak(prof: RadialProfile, j: int, k: float) -> float:
    """Maximizer of ``j log t - k F(t)``."""
    if j == 0:
        return 0.0
    g = lambda t: j / t - k * prof.dF(t)
    lo = 1e-300
    hi = 1.0 if math.isinf(prof.t_max) else prof.t_max * (1 - 1e-15)
    steps = 0
    while g(hi) > 0:
        if not math.isinf(prof.t_max):
            raise NonIntegrableWeight(f"weight does not decay at the boundary (j={j}, k={k})")
        hi *= 2
        steps += 1
        if steps > 200:
            raise NonIntegrableWeight(f"e^(-k phi) |z|^(2j) does not decay (j={j}, k={k})")
    return brentq(g, lo, hi, xtol=1e-300, rtol=1e-15)


def _upper_limit(prof: RadialProfile, h, t_star: float, h_star: float) -> tuple[float, float]:
    """Cut-off point and a bound on the neglected tail, relative to ``e^h_star``."""
    target = h_star - LOG_GUARD
    if math.isinf(prof.t_max):
        hi = max(2 * t_star, 1.0)
        steps = 0
        while h(hi) > target:
            hi *= 2
            steps += 1
            if steps > 200:
                raise NonIntegrableWeight("weight does not decay at infinity")
        t_hi = float(brentq(lambda t: h(t) - target, t_star, hi))
        return t_hi, math.exp(-LOG_GUARD) * max(t_hi, 1.0)
    # bounded interval: the density may blow up at the boundary, so track it too
    top = prof.t_max
    hd = lambda t: float(h(t)) + math.log(float(prof.density(t)))
    hi = top - max((top - t_star) * 1e-15, 4 * np.finfo(float).eps)
    if hd(hi) > target:
        tail = (top - hi) * math.exp(hd(hi) - h_star)
        if tail > 1e-3:
            raise NonIntegrableWeight("integrand does not vanish at the boundary")
        return hi, tail
    t_hi = float(brentq(lambda t: hd(t) - target, t_star, hi))
    return t_hi, math.exp(-LOG_GUARD) * top


def radial_log_norm(prof: RadialProfile, j: int, k: float, spec: QuadratureSpec = QuadratureSpec()):
    """``(log ||z^j||^2, relative error)`` with
    ``||z^j||^2 = pi int_0 t^j e^(-k F(t)) (F' + t F'') dt``."""
    if prof.t_max < math.inf and k <= 1:
        raise NonIntegrableWeight("disc weight needs k > 1")
    h = _log_integrand(prof, j, k)
    t_star = _peak(prof, j, k)
    h_star = float(h(t_star)) if t_star > 0 else float(-k * prof.F(0.0))
    t_hi, tail = _upper_limit(prof, h, t_star, h_star)

    def f(t):
        return np.exp(h(t) - h_star) * prof.density(t)

    brk = (t_star,) if t_star > 0 else ()
    val, err = adaptive_gl(f, 0.0, t_hi, tol=spec.tol, order=spec.order, breakpoints=brk)
    if val <= 0:
        raise NonIntegrableWeight(f"non-positive norm for j={j}")
    rel = (err + tail) / val + 4 * np.finfo(float).eps
    return math.log(math.pi) + h_star + math.log(val), rel


@dataclass
class GramResult:
    value: complex
    error: float
    terms: int


def radial_gram_kernel(spec: QuadratureSpec, prof: RadialProfile, k: float, x, y) -> GramResult:
    """``K(x, y) = sum_{j <= J} (x conj y)^j / ||z^j||^2`` with quadrature norms."""
    if not math.isinf(prof.t_max):
        _check_disc(x, y)
    w = complex(np.asarray(x) * np.conj(np.asarray(y)))
    total = 0j
    err = 0.0
    last = 0.0
    logw = math.log(abs(w)) if w != 0 else None
    J = spec.J if w != 0 else 0
    for j in range(J + 1):
        ln, rel = radial_log_norm(prof, j, k, spec)
        if j == 0:
            term = complex(math.exp(-ln))
        else:
            term = complex(math.exp(j * logw - ln)) * (w / abs(w)) ** j
        total += term
        err += abs(term) * rel
        last = abs(term)
    if J and last > spec.tol * abs(total):
        raise TailNotConverged(f"last kept term {last:.3e} exceeds tol*|K|; raise J above {J}")
    err += last + 8 * np.finfo(float).eps * abs(total)
    return GramResult(total, err, J + 1)


# ---------------------------------------------------------------------------
# exact Laplace series for radial polynomial potentials at the origin


def _poly_mul(a: dict, b: dict, tmax: int) -> dict:
    out = {}
    for (p, r), c in a.items():
        for (q, s), d in b.items():
            if p + q <= tmax:
                key = (p + q, r + s)
                out[key] = out.get(key, 0) + c * d
    return {kk: v for kk, v in out.items() if v}


def radial_origin_coefficients(coeffs: Sequence, M: int) -> list:
    """Exact ``b_0(0), ..., b_M(0)`` for ``phi = sum_s c_s |z|^(2s)``.

    ``||1||^2 = pi int e^(-k F) F'(t) + t F''(t) dt`` is expanded in powers
    of ``1/k`` by writing ``e^(-k F) = e^(-k c_1 t) e^(-k G(t))`` and
    integrating term by term; ``K(0,0) = 1/||1||^2`` then gives the symbol.
    """
    c = [exact(v) for v in coeffs]
    if not c or c[0] <= 0:
        raise NonIntegrableWeight("need c_1 > 0")
    tmax = 2 * M + 2
    # e^(-k G) as {(t-power, k-power): coeff}
    G = {(s + 1, 1): -c[s] for s in range(1, len(c)) if c[s]}
    E = {(0, 0): mpq(1)}
    term = {(0, 0): mpq(1)}
    r = 0
    while True:
        r += 1
        term = _poly_mul(term, G, tmax)
        term = {kk: v / r for kk, v in term.items()}
        if not term:
            break
        for kk, v in term.items():
            E[kk] = E.get(kk, 0) + v
    weight = {(s, 0): (s + 1) ** 2 * c[s] for s in range(len(c)) if c[s]}
    A = _poly_mul(E, weight, tmax)
    # k ||1||^2 / pi = sum A_{p,a} k^a p! / (c_1^(p+1) k^p)
    S = [mpq(0)] * (M + 1)
    for (p, a), v in A.items():
        e = p - a
        if e <= M:
            S[e] += v * math.factorial(p) / c[0] ** (p + 1)
    inv = [mpq(0)] * (M + 1)
    inv[0] = 1 / S[0]
    for m in range(1, M + 1):
        inv[m] = -sum(S[i] * inv[m - i] for i in range(1, m + 1)) / S[0]
    return inv


# ---------------------------------------------------------------------------
# Gaussian moments


def _permanent(mat: list):
    n = len(mat)
    if n == 0:
        return mpq(1)
    # dynamic programming over subsets of columns
    dp = {0: mpq(1)}
    for i in range(n):
        nxt = {}
        for mask, val in dp.items():
            for j in range(n):
                if not mask & (1 << j) and mat[i][j]:
                    m2 = mask | (1 << j)
                    nxt[m2] = nxt.get(m2, 0) + val * mat[i][j]
        dp = nxt
    return dp.get((1 << n) - 1, mpq(0))


def _check_pd(Q):
    n = len(Q)
    for i in range(n):
        for j in range(n):
            if Q[i][j] != conj(Q[j][i]):
                raise NotPositiveDefinite("Q is not Hermitian")
    for mnr in leading_minors(Q):
        if imag_part(mnr) != 0 or real_part(mnr) <= 0:
            raise NotPositiveDefinite(f"leading minor {mnr} is not positive")


def wick_moment(alpha: Sequence[int], beta: Sequence[int], Q, k) -> object:
    """Exact ``c`` with ``int u^alpha conj(u)^beta e^(-k q(u)) dV_E = c pi^n``,
    where ``q(u) = sum_ab Q[a][b] u_a conj(u_b)``.

    Pairings use the covariance ``E[u_a conj(u_b)] = (Q^-1)[b][a] / k``.
    """
    n = len(Q)
    Q = [[exact(v) for v in row] for row in Q]
    _check_pd(Q)
    if len(alpha) != n or len(beta) != n:
        raise ValueError("multi-indices must have length n")
    k = exact(k)
    if sum(alpha) != sum(beta):
        return mpq(0)
    Qi = const_inverse(Q, EXACT)
    a_idx = [a for a in range(n) for _ in range(alpha[a])]
    b_idx = [b for b in range(n) for _ in range(beta[b])]
    mat = [[Qi[b][a] for b in b_idx] for a in a_idx]
    nu = len(a_idx)
    return _permanent(mat) / (const_det(Q) * k ** (nu + n))


def wick_integral(P: Jet, Q, k) -> object:
    """``c`` with ``int P e^(-k q) dV_E = c pi^n`` for a jet ``P`` on ``(u, ub)``."""
    n = len(Q)
    total = mpq(0)
    for key, coef in P.terms.items():
        e = P.layout.unpack(key)
        total = total + coef * wick_moment(e[:n], e[n:], Q, k)
    return total


# ---------------------------------------------------------------------------
# models


@dataclass
class KernelModel:
    """A model with a potential jet, a kernel evaluator and a domain."""

    kind: str
    n: int = 1
    params: dict = field(default_factory=dict)

    KINDS = ("fock", "fubini_study", "hyperbolic", "radial_numeric")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown model {self.kind!r}")
        if self.kind != "fock" and self.n != 1:
            raise ValueError(f"{self.kind} oracle is only available for n = 1")

    @classmethod
    def quartic(cls, lam=mpq(1, 10), spec: QuadratureSpec | None = None) -> "KernelModel":
        return cls("radial_numeric", 1, {"coeffs": [mpq(1), exact(lam)],
                                         "spec": spec or QuadratureSpec()})

    @property
    def radius(self) -> float:
        return 1.0 if self.kind == "hyperbolic" else math.inf

    @cached_property
    def profile(self) -> RadialProfile:
        if self.kind == "fock":
            return RadialProfile.polynomial([1])
        if self.kind == "fubini_study":
            return RadialProfile(lambda t: np.log1p(t), lambda t: 1 / (1 + t),
                                 lambda t: -1 / (1 + t) ** 2)
        if self.kind == "hyperbolic":
            return RadialProfile.disc()
        return RadialProfile.polynomial(self.params["coeffs"])

    def potential(self, order: int = 16, mode: str = EXACT) -> PotentialJet:
        if self.kind == "fock":
            return potentials.fock(self.n, order, mode)
        if self.kind == "fubini_study":
            return potentials.fubini_study(self.n, order, mode)
        if self.kind == "hyperbolic":
            return potentials.hyperbolic(self.n, order, mode)
        coeffs = self.params["coeffs"]
        return potentials.radial(coeffs, self.n, max(order, 2 * len(coeffs)), mode)

    def _t(self, x) -> float:
        return float(np.sum(np.abs(np.atleast_1d(np.asarray(x, dtype=complex))) ** 2))

    def phi(self, x) -> float:
        return float(self.profile.F(self._t(x)))

    def psi(self, x, y) -> complex:
        """Polarized potential ``psi(x, conj y)``."""
        w = _pairing(x, y, self.n) if self.n > 1 else complex(np.asarray(x) * np.conj(y))
        if self.kind == "fock":
            return complex(w)
        if self.kind == "fubini_study":
            return complex(np.log(1 + w))
        if self.kind == "hyperbolic":
            return complex(-np.log(1 - w))
        return complex(sum(float(c) * w ** (s + 1) for s, c in enumerate(self.params["coeffs"])))

    def diastasis(self, x, y) -> float:
        return float(np.real(self.phi(x) + self.phi(y) - self.psi(x, y) - self.psi(y, x)))

    def kernel(self, k, x, y) -> complex:
        if self.kind == "fock":
            return fock_kernel(k, x, y, self.n)
        if self.kind == "fubini_study":
            return fs_kernel(k, x, y)
        if self.kind == "hyperbolic":
            return hyperbolic_kernel(k, x, y)
        return radial_gram_kernel(self.params["spec"], self.profile, k, x, y).value

    def log_abs_kernel(self, k, x, y) -> float:
        n = self.n
        pre = n * math.log(k / math.pi)
        if self.kind == "fock":
            return pre + k * float(np.real(self.psi(x, y)))
        if self.kind == "fubini_study":
            return math.log((k + 1) / math.pi) + k * float(np.real(self.psi(x, y)))
        if self.kind == "hyperbolic":
            _check_disc(x, y)
            return math.log((k - 1) / math.pi) + k * float(np.real(self.psi(x, y)))
        return math.log(abs(self.kernel(k, x, y)))

    def monomial_norm(self, j: int, k) -> float:
        """``||z^j||^2`` against ``e^(-k phi) phi_{z zbar} dA`` (``n = 1``)."""
        if self.kind == "fock":
            return math.pi * math.exp(math.lgamma(j + 1) - (j + 1) * math.log(k))
        if self.kind == "fubini_study":
            return math.pi * math.exp(math.lgamma(j + 1) + math.lgamma(k - j + 1)
                                      - math.lgamma(k + 2)) if j <= k else math.inf
        if self.kind == "hyperbolic":
            return hyperbolic_monomial_norm(j, k)
        return math.exp(radial_log_norm(self.profile, j, k, self.params["spec"])[0])


# ---------------------------------------------------------------------------
# local reproducing property


CUTOFF_INNER = 0.5
CUTOFF_OUTER = 0.75


def cutoff(r, inner: float = CUTOFF_INNER, outer: float = CUTOFF_OUTER):
    """Smooth radial cutoff: 1 for ``r <= inner``, 0 for ``r >= outer``,
    built from the bump ``exp(1 - 1/(1 - t^2))``."""
    r = np.asarray(r, dtype=float)
    t = np.clip((r - inner) / (outer - inner), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(t < 1, np.exp(1 - 1 / np.maximum(1 - t * t, 1e-300)), 0.0)
    return out


@dataclass
class ReproducingResult:
    value: complex
    target: complex
    error: float
    quad_error: float


def reproducing_test(p: PotentialJet, table, k, N: int, u: Sequence, x: complex = 0j,
                     norm: float | None = None, tol: float = 1e-13,
                     profile: RadialProfile | None = None) -> ReproducingResult:
    """Apply the truncated kernel with a cutoff around ``x`` to ``u``.

    ``u`` lists polynomial coefficients ``u(z) = sum_j u[j] z^j``. Returns
    ``|int chi_x u K^(N)(x, .) e^(-k phi) dV - u(x)| / (e^(k phi(x)/2) ||u||)``.
    ``norm`` is ``||u||_{k phi}``; when omitted it is assembled from radial
    monomial norms (radial potentials only). ``profile`` replaces the
    truncated jet of ``phi`` in the weight when a closed form is known.
    """
    from .asymptotics import kernel_expansion_eval
    from .geometry import polarize

    if p.n != 1:
        raise ValueError("reproducing test is implemented for n = 1")
    phi = p.phi
    dens = jet_derive(jet_derive(phi, ("z", 0)), ("zb", 0))
    psi = polarize(p)
    coeffs = [complex(c) for c in u]

    def upoly(z):
        out = np.zeros_like(z, dtype=complex)
        for c in reversed(coeffs):
            out = out * z + c
        return out

    def integrand(yv):
        yv = np.asarray(yv, dtype=complex)
        if profile is not None:
            t = np.abs(yv) ** 2
            ph, g = profile.F(t), profile.density(t)
        else:
            pt = {"z": [yv], "zb": [np.conj(yv)]}
            ph = np.real(evaluate(phi, pt))
            g = np.real(evaluate(dens, pt))
        kern = kernel_expansion_eval(table, psi, k, N, [np.full_like(yv, x)], [yv], check=False)
        chi = cutoff(np.abs(yv - x))
        return chi * upoly(yv) * kern * np.exp(-k * ph) * g

    val, qerr = polar_integral(integrand, x, CUTOFF_OUTER, tol=tol, breakpoints=(CUTOFF_INNER,))
    target = complex(upoly(np.asarray(x, dtype=complex)))
    if norm is None:
        prof = RadialProfile.polynomial([real_part(c) for c in _radial_coeffs(phi)])
        spec = QuadratureSpec(tol=tol)
        norm = math.sqrt(sum(abs(c) ** 2 * math.exp(radial_log_norm(prof, j, k, spec)[0])
                             for j, c in enumerate(coeffs) if c))
    if profile is not None:
        phx = float(profile.F(abs(x) ** 2))
    else:
        phx = float(np.real(evaluate(phi, {"z": [x], "zb": [np.conj(x)]})))
    scale = math.exp(k * phx / 2) * norm
    return ReproducingResult(val, target, abs(val - target) / scale, qerr / scale)


def _radial_coeffs(phi: Jet) -> list:
    lay = phi.layout
    out = []
    for key, c in phi.terms.items():
        a, b = lay.unpack(key)
        if a != b:
            raise ValueError("potential is not radial")
    top = max(lay.unpack(kk)[0] for kk in phi.terms)
    for s in range(1, top + 1):
        out.append(phi.terms.get(lay.pack((s, s)), 0))
    return out
