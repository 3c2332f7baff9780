import random

import pytest
from gmpy2 import mpq

from bergman_analytic.geometry import potential_layout
from bergman_analytic.jets import Jet
from bergman_analytic.scalars import GaussRational

DEFAULT_SEED = 20240517

# lines recorded by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--seed", action="store", type=int, default=DEFAULT_SEED,
                     help="seed for randomized property tests")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng(request):
    return random.Random(request.config.getoption("--seed"))


def rand_rational(rng, lo=-3, hi=3, den=4):
    return mpq(rng.randint(lo, hi), rng.randint(1, den))


def rand_gauss(rng):
    return GaussRational.make(rand_rational(rng), rand_rational(rng))


def random_jet(rng, layout, cap, density=0.5, complex_coeffs=True):
    terms = {}
    nv = layout.nvars
    for _ in range(int(density * 12) + 1):
        exps = [0] * nv
        for _ in range(rng.randint(0, cap)):
            exps[rng.randrange(nv)] += 1
        c = rand_gauss(rng) if complex_coeffs else rand_rational(rng)
        k = layout.pack(exps)
        terms[k] = terms.get(k, 0) + c
    return Jet(layout, cap, terms)


def z(n=1, cap=6, i=0):
    return Jet.variable(potential_layout(n), cap, "z", i)


def zb(n=1, cap=6, i=0):
    return Jet.variable(potential_layout(n), cap, "zb", i)


def random_potential(rng, n, order, extra_terms=4):
    """Positive Hermitian quadratic part plus random real terms of degree 3..4."""
    from bergman_analytic.geometry import PotentialJet
    from bergman_analytic.jets import conj_jet
    lay = potential_layout(n)
    terms = {}
    for i in range(n):
        e = [int(i == k) for k in range(n)]
        terms[lay.pack_groups({"z": e, "zb": e})] = mpq(n + 1)
    if n == 2:
        c = rand_gauss(rng) / 4
        terms[lay.pack((1, 0, 0, 1))] = c
        terms[lay.pack((0, 1, 1, 0))] = c.conjugate() if hasattr(c, "conjugate") else c
    base = Jet(lay, order, terms)
    extra = {}
    for _ in range(extra_terms):
        e = [0] * (2 * n)
        for _ in range(rng.randint(3, min(order, 4))):
            e[rng.randrange(2 * n)] += 1
        extra[lay.pack(e)] = extra.get(lay.pack(e), 0) + rand_gauss(rng)
    h = Jet(lay, order, extra)
    return PotentialJet(base + h + conj_jet(h))


def random_gauge(rng, n, order, degree=3):
    """Holomorphic polynomial h(z) with h(0) = 0 and Gaussian-rational coefficients."""
    lay = potential_layout(n)
    terms = {}
    for _ in range(3):
        e = [0] * n
        for _ in range(rng.randint(1, degree)):
            e[rng.randrange(n)] += 1
        terms[lay.pack_groups({"z": e, "zb": [0] * n})] = rand_gauss(rng)
    return Jet(lay, order, terms)
