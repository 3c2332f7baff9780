"""Truncated kernel expansions, remainder scans and growth diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TruncationUnreliable
from .jets import Jet, evaluate
from .recursion import CoefficientTable, polarize_bm

CERTIFY_FRACTION = 1e-3


@dataclass
class ExpansionEvaluation:
    k: float
    N: int
    x: tuple
    y: tuple
    value: complex
    model_truth: complex | None = None

    @property
    def abs_error(self) -> float | None:
        if self.model_truth is None:
            return None
        return abs(self.value - self.model_truth)

    @property
    def rel_error(self) -> float | None:
        if self.model_truth is None or self.model_truth == 0:
            return None
        return abs(self.value - self.model_truth) / abs(self.model_truth)


@dataclass
class GrowthReport:
    radius: float
    sup_norms: list
    ratios: list
    argmax: int = 0
    plateau_factor: float = 0.0
    reference_m: int = 4

    @property
    def bounded(self) -> bool:
        return self.plateau_factor <= 3.0


def _polar_point(n: int, x, y) -> dict:
    x = [np.asarray(c, dtype=complex) for c in _as_seq(x, n)]
    y = [np.asarray(c, dtype=complex) for c in _as_seq(y, n)]
    return {"x": x, "yb": [np.conj(c) for c in y]}


def _as_seq(p, n):
    if n == 1 and (np.isscalar(p) or (isinstance(p, np.ndarray) and p.ndim >= 0
                                       and not isinstance(p, (list, tuple)))):
        if not isinstance(p, (list, tuple)):
            return [p]
    if len(p) != n:
        raise ValueError(f"point needs {n} coordinates")
    return list(p)


def certify(jet: Jet, point: dict, fraction: float = CERTIFY_FRACTION, label: str = "jet"):
    """Raise :class:`TruncationUnreliable` where the top retained degree of
    ``jet`` contributes at least ``fraction`` of its value."""
    top = {k: c for k, c in jet.terms.items() if _degree(k) == jet.cap}
    if not top:
        return
    total = np.abs(evaluate(jet, point))
    last = np.abs(evaluate(Jet(jet.layout, jet.cap, top, jet.mode), point))
    bad = last >= fraction * np.maximum(total, 1e-300)
    if np.any(bad):
        raise TruncationUnreliable(
            f"{label}: degree-{jet.cap} part is {float(np.max(last)):.3e}, "
            f"not below {fraction} of the partial sum")


def _degree(key):
    from .jets import key_degree
    return key_degree(key)


def polarized_symbols(table: CoefficientTable, N: int) -> list:
    return [polarize_bm(table.b[m]) for m in range(1, N + 1)]


def kernel_expansion_eval(table: CoefficientTable, psi: Jet, k: float, N: int, x, y,
                          check: bool = True):
    """``(k/pi)^n exp(k psi(x, yb)) (1 + sum_{m<=N} b_m(x, yb) / k^m)``.

    ``x`` and ``y`` are length-``n`` sequences whose entries may be arrays
    (broadcast together). With ``check`` the polarized jets are certified
    at the evaluation points.
    """
    if N > table.M:
        raise ValueError(f"table holds b_1..b_{table.M}, asked for N={N}")
    n = table.n
    pt = _polar_point(n, x, y)
    symbols = polarized_symbols(table, N)
    if check:
        certify(psi, pt, label="psi")
        for m, b in enumerate(symbols, 1):
            certify(b, pt, label=f"b_{m}")
    amp = 1.0 + 0j
    for m, b in enumerate(symbols, 1):
        amp = amp + evaluate(b, pt) / float(k) ** m
    phase = evaluate(psi, pt)
    return (k / math.pi) ** n * np.exp(k * phase) * amp


def remainder(truth: complex, expansion: complex, k: float, n: int, psi_value: complex) -> float:
    """``|truth - expansion| / ((k/pi)^n |exp(k psi)|)``."""
    return abs(truth - expansion) / ((k / math.pi) ** n * abs(np.exp(k * psi_value)))


def loglog_slope(ks: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ``log(values)`` against ``log(ks)`` and the
    RMS residual. Non-positive values give ``nan``."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0) or len(v) < 2:
        return float("nan"), float("nan")
    X = np.log(np.asarray(ks, dtype=float))
    Y = np.log(v)
    A = np.vstack([X, np.ones_like(X)]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


@dataclass
class RemainderScan:
    k_list: list
    N_list: list
    errors: list                 # errors[iN][ik]
    slopes: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


def remainder_scan(model, table: CoefficientTable, psi: Jet, k_list, N_list, x, y,
                   check: bool = True) -> RemainderScan:
    """Normalized remainders of the truncated expansion against ``model``."""
    n = table.n
    pt = _polar_point(n, x, y)
    psi_val = complex(evaluate(psi, pt))
    errors = []
    truths = {k: complex(model.kernel(k, x, y)) for k in k_list}
    for N in N_list:
        row = []
        for k in k_list:
            approx = complex(kernel_expansion_eval(table, psi, k, N, x, y, check=check))
            row.append(remainder(truths[k], approx, k, n, psi_val))
        errors.append(row)
    scan = RemainderScan(list(k_list), list(N_list), errors)
    for N, row in zip(N_list, errors):
        s, r = loglog_slope(k_list, row)
        scan.slopes[N] = s
        scan.residuals[N] = r
    return scan


def sup_norm_estimate(b: Jet, r: float) -> float:
    """``sum |c| r^deg`` over stored coefficients: an upper bound for the
    sup norm of the polynomial on the polydisc of radius ``r``."""
    if r <= 0:
        raise ValueError("radius must be positive")
    total = 0.0
    for k, c in b.terms.items():
        total += abs(complex(c)) * r ** _degree(k)
    return total


def growth_fit(table: CoefficientTable, r: float, reference_m: int = 4) -> GrowthReport:
    """Sup-norm bounds ``S_m`` and the normalized ratios ``(S_m/m!)^(1/(m+1))``."""
    sups = [sup_norm_estimate(b, r) for b in table.b]
    ratios = [(s / math.factorial(m)) ** (1.0 / (m + 1)) for m, s in enumerate(sups)]
    tail = ratios[1:] or [0.0]
    argmax = 1 + int(np.argmax(tail)) if len(ratios) > 1 else 0
    ref = min(reference_m, len(ratios) - 1)
    base = ratios[ref]
    factor = max(tail) / base if base > 0 else (0.0 if max(tail) == 0 else math.inf)
    return GrowthReport(radius=r, sup_norms=sups, ratios=ratios, argmax=argmax,
                        plateau_factor=factor, reference_m=ref)


def optimal_truncation(k: float, report: GrowthReport) -> int:
    """Index ``N`` minimizing the next-term bound ``S_{N+1} / k^(N+1)``;
    ties go to the smaller ``N``."""
    sups = report.sup_norms
    if len(sups) < 2:
        raise ValueError("growth report needs at least b_0 and b_1")
    best, best_val = 0, None
    for N in range(len(sups) - 1):
        val = sups[N + 1] / float(k) ** (N + 1)
        if best_val is None or val < best_val:
            best, best_val = N, val
    return best


@dataclass
class DecayReport:
    k_list: list
    pairs: list
    residuals: list             # residuals[ipair][ik]
    slopes: list


def diastasis_decay_check(model, diastasis_value, k_list, pairs) -> DecayReport:
    """For each ``(x, y)`` report
    ``log(|K| e^{-k(phi(x)+phi(y))/2} (pi/k)^n) + k D(x,y)/2`` over ``k``
    and its least-squares slope in ``k``.

    ``diastasis_value(x, y)`` returns the (real) diastasis at the pair.
    """
    n = model.n
    residuals, slopes = [], []
    for x, y in pairs:
        D = float(np.real(diastasis_value(x, y)))
        px, py = model.phi(x), model.phi(y)
        row = []
        for k in k_list:
            # log|K| assembled in log space to avoid overflow at large k
            logk = model.log_abs_kernel(k, x, y)
            row.append(logk - k * (px + py) / 2 + n * math.log(math.pi / k) + k * D / 2)
        residuals.append(row)
        A = np.vstack([np.asarray(k_list, float), np.ones(len(k_list))]).T
        coef, *_ = np.linalg.lstsq(A, np.asarray(row), rcond=None)
        slopes.append(float(coef[0]))
    return DecayReport(list(k_list), list(pairs), residuals, slopes)
