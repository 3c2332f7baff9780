import math

import numpy as np
import pytest
from gmpy2 import mpq

from bergman_analytic import potentials
from bergman_analytic.asymptotics import (certify, diastasis_decay_check, growth_fit,
                                          kernel_expansion_eval, loglog_slope,
                                          optimal_truncation, polarized_symbols, remainder_scan,
                                          sup_norm_estimate)
from bergman_analytic.errors import TruncationUnreliable
from bergman_analytic.geometry import polarize, polarized_layout, potential_layout
from bergman_analytic.jets import Jet
from bergman_analytic.oracles import KernelModel
from bergman_analytic.recursion import compute_all, required_order

LAY = potential_layout(1)


def table_for(kind, M=2, D=4):
    m = KernelModel(kind)
    p = m.potential(required_order(M, D))
    return m, p, compute_all(p, M, D)


def test_fock_expansion_is_exact():
    m, p, t = table_for("fock")
    psi = polarize(p)
    x, y = 0.3 + 0.1j, -0.2 + 0.25j
    for N in (0, 1, 2):
        v = kernel_expansion_eval(t, psi, 15, N, x, y)
        assert v == pytest.approx(m.kernel(15, x, y), rel=1e-13)


@pytest.mark.parametrize("kind", ["fubini_study", "hyperbolic"])
def test_model_expansion_exact_from_first_order(kind):
    m, p, t = table_for(kind, 2, 8)
    psi = polarize(p)
    x, y = 0.1 + 0.05j, 0.08 - 0.1j
    k = 12
    v0 = kernel_expansion_eval(t, psi, k, 0, x, y)
    v1 = kernel_expansion_eval(t, psi, k, 1, x, y)
    truth = m.kernel(k, x, y)
    assert abs(v0 - truth) / abs(truth) == pytest.approx(1 / (k + (1 if kind == "fubini_study" else -1)),
                                                         rel=1e-6)
    assert v1 == pytest.approx(truth, rel=1e-9)


def test_certify_rejects_points_outside_reliable_region():
    psi = polarize(potentials.fubini_study(1, 6))
    pt = {"x": [np.asarray(0.9 + 0j)], "yb": [np.asarray(0.9 + 0j)]}
    with pytest.raises(TruncationUnreliable):
        certify(psi, pt)
    certify(psi, {"x": [np.asarray(0.01 + 0j)], "yb": [np.asarray(0.01 + 0j)]})


def test_loglog_slope_recovers_power():
    ks = [10, 20, 40, 80]
    s, r = loglog_slope(ks, [3 * k ** -2.5 for k in ks])
    assert s == pytest.approx(-2.5) and r < 1e-12
    assert math.isnan(loglog_slope(ks, [1, 0, 1, 1])[0])


def test_remainder_scan_fubini_study():
    m, p, t = table_for("fubini_study", 2, 6)
    scan = remainder_scan(m, t, polarize(p), [10, 20, 40], [0, 1], 0.05, 0.05)
    assert scan.slopes[0] == pytest.approx(-1, abs=0.05)
    assert max(scan.errors[1]) < 1e-12


def test_sup_norm_examples():
    assert sup_norm_estimate(Jet.one(LAY, 2), 0.3) == 1
    assert sup_norm_estimate(Jet.from_exponents(LAY, 2, {(1, 1): 1}), 0.5) == pytest.approx(0.25)
    _, _, t = table_for("fubini_study", 2, 2)
    assert sup_norm_estimate(t.b[1], 0.5) == 1
    with pytest.raises(ValueError):
        sup_norm_estimate(Jet.one(LAY, 2), 0)


def test_growth_and_optimal_truncation_models():
    _, _, t = table_for("fock", 3, 2)
    rep = growth_fit(t, 0.25, reference_m=2)
    assert rep.sup_norms == [1, 0, 0, 0]
    assert optimal_truncation(40, rep) == 0
    _, _, t = table_for("fubini_study", 3, 2)
    rep = growth_fit(t, 0.25, reference_m=2)
    assert rep.sup_norms[1] == 1 and optimal_truncation(40, rep) == 1


def test_growth_quartic():
    M, D = 6, 2
    t = compute_all(potentials.quartic(order=required_order(M, D)), M, D)
    rep = growth_fit(t, 0.25)
    assert rep.bounded
    # sup norms 1, .215, .196, .26, ... so at k = 1 the next-term bound bottoms out at N = 1
    assert optimal_truncation(40, rep) == M - 1
    assert optimal_truncation(1, rep) == 1


def test_diastasis_decay_models():
    m = KernelModel("fock", 2)
    pairs = [([0.1, 0.2j], [0.3, -0.1]), ([0.0, 0.0], [0.5, 0.5])]
    rep = diastasis_decay_check(m, _fock_diastasis, [10, 20, 40], pairs)
    assert np.max(np.abs(rep.residuals)) < 1e-10
    m = KernelModel("fubini_study")
    rep = diastasis_decay_check(m, m.diastasis, [10, 20, 40, 80], [(0.1, 0.3 + 0.2j)])
    assert rep.residuals[0] == pytest.approx([math.log1p(1 / k) for k in (10, 20, 40, 80)])
    assert abs(rep.slopes[0]) < 0.01


def _fock_diastasis(x, y):
    d = np.asarray(x, dtype=complex) - np.asarray(y, dtype=complex)
    return float(np.sum(np.abs(d) ** 2))


def test_polarized_symbol_layout():
    _, _, t = table_for("fubini_study", 1, 2)
    (b1,) = polarized_symbols(t, 1)
    assert b1.layout == polarized_layout(1) and b1.terms == {0: mpq(1)}


def test_sup_norm_monotone_and_subadditive():
    M, D = 3, 3
    t = compute_all(potentials.bumped(order=required_order(M, D)), M, D)
    for b in t.b:
        assert sup_norm_estimate(b, 0.1) <= sup_norm_estimate(b, 0.3)
    for a, b in zip(t.b, t.b[1:]):
        assert sup_norm_estimate(a + b, 0.3) <= sup_norm_estimate(a, 0.3) + sup_norm_estimate(b, 0.3) + 1e-15


def test_diastasis_fock_pair_exact():
    m = KernelModel("fock")
    rep = diastasis_decay_check(m, m.diastasis, [10, 20, 40], [(0.2, 0.0)])
    assert np.max(np.abs(rep.residuals)) < 1e-12 and abs(rep.slopes[0]) < 0.1
