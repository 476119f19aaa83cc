import itertools
from fractions import Fraction

import pytest

from mxsefl.core import Instance, Valuation


def additive(*rows) -> Instance:
    return Instance.of([Valuation.additive(r) for r in rows])


def small_additive_instances(n: int, m_max: int, values=(0, 1, 2)):
    """Every additive instance with ``n`` agents, up to ``m_max`` goods and values in ``values``."""
    for m in range(m_max + 1):
        for flat in itertools.product(values, repeat=n * m):
            yield additive(*[flat[a * m:(a + 1) * m] for a in range(n)])


def all_partitions(m: int, k: int):
    for labels in itertools.product(range(k), repeat=m):
        x = [0] * k
        for g, lab in enumerate(labels):
            x[lab] |= 1 << g
        yield tuple(x)


F = Fraction


@pytest.fixture
def example2():
    return additive([4, 3, 1], [1, 2, 5])
