import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from ncmeixner.ncseries import NCSeries, words
from ncmeixner.ncstates import CumulantFunctional, MomentFunctional

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def rand_q(rng, num=5, den=4):
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def normalized_values(rng, n, order, num=5, den=4):
    vals = {}
    for w in words(n, order, 1):
        if len(w) == 1:
            continue
        if len(w) == 2:
            vals[w] = int(w[0] == w[1])
        else:
            vals[w] = rand_q(rng, num, den)
    return vals


def random_cumulants(rng, n, order, **kw):
    return CumulantFunctional(NCSeries(n, order, normalized_values(rng, n, order, **kw)), normalized=True)


def random_moments(rng, n, order, **kw):
    return MomentFunctional(NCSeries(n, order, normalized_values(rng, n, order, **kw)), normalized=True)


# brute-force set partitions, independent of the library's NC enumeration


def set_partitions(elems):
    elems = list(elems)
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def crossing(p):
    for a in p:
        for b in p:
            if a is b:
                continue
            for i in a:
                for k in a:
                    for j in b:
                        for l in b:
                            if i < j < k < l:
                                return True
    return False


def brute_nc(k):
    return [sorted(map(sorted, p)) for p in set_partitions(range(1, k + 1)) if not crossing(p)]


def brute_moments(r: CumulantFunctional) -> dict:
    out = {}
    for u in words(r.n, r.order, 1):
        total = Fraction(0)
        for p in brute_nc(len(u)):
            prod = Fraction(1)
            for b in p:
                prod *= r[tuple(u[i - 1] for i in b)]
            total += prod
        out[u] = total
    return out


@pytest.fixture
def rng():
    return random.Random(12345)


def random_favard_data(rng, n=2, d=3):
    """Random recursion data satisfying conditions (a) and (b) with C > 0."""
    from ncmeixner.favard import RecursionData

    C = {}
    for v in words(n, d - 2):
        for i in range(1, n + 1):
            C[(i, v, (i,) + v)] = Fraction(rng.randint(1, 6), rng.randint(1, 3))
    chains = RecursionData(n, d, {}, C)
    B = {}
    for k in range(d):
        level = list(words(n, k, k))
        for i in range(1, n + 1):
            for a, s in enumerate(level):
                B[(i, s, s)] = rand_q(rng, 3, 2)
                for u in level[a + 1:]:
                    y = rand_q(rng, 2, 2)
                    B[(i, s, u)] = y * chains.chain(u)
                    B[(i, u, s)] = y * chains.chain(s)
    return RecursionData(n, d, B, C)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for text in mod.summary_lines():
        terminalreporter.write_line(text)
