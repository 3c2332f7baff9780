import math

import numpy as np
import pytest
from gmpy2 import mpq
from scipy import integrate

from bergman_analytic import potentials
from bergman_analytic.errors import (DomainError, NonIntegrableWeight, NotPositiveDefinite,
                                     TailNotConverged)
from bergman_analytic.oracles import (KernelModel, QuadratureSpec, RadialProfile, cutoff,
                                      fock_kernel, fs_kernel, hyperbolic_kernel,
                                      hyperbolic_monomial_norm, radial_gram_kernel,
                                      radial_log_norm, radial_origin_coefficients,
                                      reproducing_test, wick_moment)
from bergman_analytic.quadrature import adaptive_gl, polar_integral
from bergman_analytic.recursion import compute_all, required_order


def test_fock_kernel_examples():
    assert fock_kernel(1, 0, 0) == pytest.approx(1 / math.pi)
    x = 0.3 - 0.2j
    assert fock_kernel(7, x, x) * math.exp(-7 * abs(x) ** 2) == pytest.approx(7 / math.pi)
    k, y = 5, 0.1 + 0.4j
    partial = sum((x * np.conj(y)) ** j * k ** (j + 1) / (math.pi * math.factorial(j))
                  for j in range(40))
    assert fock_kernel(k, x, y) == pytest.approx(partial, rel=1e-14)
    assert fock_kernel(3, [0.1, 0.2j], [0.3, 0.1], n=2) == pytest.approx(
        (3 / math.pi) ** 2 * np.exp(3 * (0.03 + 0.02j)))


def test_fs_and_hyperbolic_examples():
    assert fs_kernel(1, 0, 0) == pytest.approx(2 / math.pi)
    x = 0.4 + 0.1j
    phi = math.log(1 + abs(x) ** 2)
    assert fs_kernel(9, x, x) * math.exp(-9 * phi) == pytest.approx(10 / math.pi)
    phi = -math.log(1 - abs(x) ** 2)
    assert hyperbolic_kernel(9, x, x) * math.exp(-9 * phi) == pytest.approx(8 / math.pi)
    with pytest.raises(DomainError):
        hyperbolic_kernel(4, 1.2, 0)
    with pytest.raises(DomainError):
        hyperbolic_kernel(1, 0, 0)


@pytest.mark.parametrize("kernel", [lambda x, y: fock_kernel(6, x, y),
                                    lambda x, y: fs_kernel(6, x, y),
                                    lambda x, y: hyperbolic_kernel(6, x, y)])
def test_kernels_hermitian(kernel):
    x, y = 0.2 + 0.3j, -0.1 + 0.5j
    assert kernel(x, y) == pytest.approx(np.conj(kernel(y, x)))


def test_hyperbolic_norms_match_beta_integral():
    for k in (2, 5, 20):
        for j in (0, 1, 4, 9):
            num, _ = integrate.quad(lambda t: t ** j * (1 - t) ** (k - 2), 0, 1,
                                    epsabs=0, epsrel=1e-13)
            assert hyperbolic_monomial_norm(j, k) == pytest.approx(math.pi * num, rel=1e-10)
            ln, _ = radial_log_norm(RadialProfile.disc(), j, k)
            assert math.exp(ln) == pytest.approx(hyperbolic_monomial_norm(j, k), rel=1e-10)


def test_gram_oracle_reproduces_closed_forms():
    x, y = 0.3 + 0.1j, 0.2 - 0.2j
    g = radial_gram_kernel(QuadratureSpec(), RadialProfile.polynomial([1]), 20, x, y)
    assert abs(g.value - fock_kernel(20, x, y)) <= max(g.error, 1e-12 * abs(g.value))
    g = radial_gram_kernel(QuadratureSpec(J=200), RadialProfile.disc(), 20, x, y)
    assert abs(g.value - hyperbolic_kernel(20, x, y)) <= max(g.error, 1e-12 * abs(g.value))


def test_gram_oracle_self_consistency():
    spec = QuadratureSpec(J=60)
    prof = RadialProfile.polynomial([1, mpq(1, 10)])
    a = radial_gram_kernel(spec, prof, 40, 0.2, 0.1j)
    b = radial_gram_kernel(spec.refined(), prof, 40, 0.2, 0.1j)
    assert abs(a.value - b.value) <= a.error


def test_gram_oracle_errors():
    with pytest.raises(TailNotConverged):
        radial_gram_kernel(QuadratureSpec(J=3), RadialProfile.polynomial([1]), 20, 0.5, 0.5)
    with pytest.raises(NonIntegrableWeight):
        radial_log_norm(RadialProfile.polynomial([1, -1]), 2, 10)
    with pytest.raises(NonIntegrableWeight):
        radial_log_norm(RadialProfile.disc(), 0, 1)


# Quartic fixture at k = 40: K(0,0) pi/k from the Gram oracle, frozen on first run.
QUARTIC_K40_DIAGONAL = 0.9950973422981371


def test_quartic_regression_fixture():
    m = KernelModel.quartic()
    assert (m.kernel(40, 0, 0) * math.pi / 40).real == pytest.approx(QUARTIC_K40_DIAGONAL, rel=1e-12)


def test_laplace_series_matches_gram_oracle():
    b = radial_origin_coefficients([1, mpq(1, 10)], 10)
    m = KernelModel.quartic()
    for k in (40, 80):
        series = sum(float(c) / k ** i for i, c in enumerate(b))
        assert (m.kernel(k, 0, 0) * math.pi / k).real == pytest.approx(series, rel=1e-12)


def test_laplace_series_matches_recursion():
    for coeffs in ([1, mpq(1, 10)], [1, 1], [2, mpq(1, 3), mpq(-1, 50)]):
        M = 3
        t = compute_all(potentials.radial(coeffs, order=required_order(M, 0)), M, 0)
        assert [b.constant_term for b in t.b] == radial_origin_coefficients(coeffs, M)


def test_wick_examples():
    assert wick_moment([0], [0], [[1]], 1) == 1
    assert wick_moment([1], [1], [[1]], 1) == 1
    assert wick_moment([1], [2], [[1]], 1) == 0
    assert wick_moment([2], [2], [[1]], 3) == mpq(2, 27)
    with pytest.raises(NotPositiveDefinite):
        wick_moment([0], [0], [[-1]], 1)
    with pytest.raises(NotPositiveDefinite):
        wick_moment([0, 0], [0, 0], [[1, 2], [1, 1]], 1)


def test_wick_against_quadrature():
    q = mpq(3, 2)
    for a, b in ((1, 1), (2, 2), (3, 3)):
        c = wick_moment([a], [b], [[q]], 2)

        def f(r):
            return 2 * math.pi * r ** (2 * a + 1) * math.exp(-2 * 1.5 * r * r)
        num, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12)
        assert float(c) * math.pi == pytest.approx(num, rel=1e-10)


def test_quadrature_gaussian():
    v, e = adaptive_gl(lambda t: np.exp(-t), 0, 40, tol=1e-14)
    assert v == pytest.approx(1 - math.exp(-40), rel=1e-13)
    v, e = polar_integral(lambda y: np.exp(-5 * np.abs(y) ** 2), 0, 3.0)
    assert v == pytest.approx(math.pi / 5 * (1 - math.exp(-45)), rel=1e-12)


def test_cutoff_shape():
    r = np.array([0.0, 0.5, 0.6, 0.75, 0.9])
    c = cutoff(r)
    assert c[0] == c[1] == 1 and c[3] == c[4] == 0 and 0 < c[2] < 1


def test_reproducing_fock_constant():
    # exact kernel at N = 0, so the error is the cutoff tail alone
    k = 20
    p = potentials.fock(1, 4)
    t = compute_all(potentials.fock(1, required_order(1, 2)), 1, 2)
    res = reproducing_test(p, t, k, 0, [1])
    tail, _ = integrate.quad(lambda r: (1 - cutoff(np.array([r]))[0]) * 2 * k * r * math.exp(-k * r * r),
                             0.5, 0.75, epsabs=0, epsrel=1e-12)
    tail += math.exp(-k * 0.5625)
    assert res.error == pytest.approx(tail / math.sqrt(math.pi / k), rel=1e-8)
    assert res.error < math.exp(-k / 4)


def test_reproducing_center_orthogonality():
    p = potentials.quartic(order=required_order(1, 2))
    t = compute_all(p, 1, 2)
    for u in ([0, 1], [0, 0, 1]):
        res = reproducing_test(p, t, 30, 0, u)
        assert abs(res.value) < 1e-12 and res.error < 1e-12


def test_reproducing_quartic_improves_with_order():
    p = potentials.quartic(order=required_order(2, 2))
    t = compute_all(p, 2, 2)
    e0 = reproducing_test(p, t, 30, 0, [1]).error
    e1 = reproducing_test(p, t, 30, 1, [1]).error
    assert e1 < e0 / 5
