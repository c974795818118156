import random

import pytest

from flatcheck.series import Series, VarSplit, random_series


@pytest.fixture
def yx():
    """The workhorse split: one base variable y, one fiber variable x."""
    return VarSplit(1, 1, ("y",), ("x",))


@pytest.fixture
def y2x():
    """Two base variables, one fiber variable (blow-up chart shape)."""
    return VarSplit(2, 1, ("y1", "y2"), ("x",))


def seeded(seed):
    return random.Random(seed)


def random_regular_divisor(split, rng, d):
    """A random series x_m-regular of order exactly d: c.x_m^d plus noise
    carried by the first base variable (so g(0, .., 0, x_m) = c.x_m^d)."""
    nv = split.nvars
    lead = Series.monomial(split, (0,) * (nv - 1) + (d,), rng.choice([1, -1, 2]))
    if split.n == 0:
        return lead
    y = Series.monomial(split, (1,) + (0,) * (nv - 1), 1)
    return lead + y * random_series(split, rng, degree=max(1, d), terms=4)
