import math

import pytest

import thermoshift as ts


@pytest.fixture
def full2():
    return ts.builtin_shift("full", 2)


@pytest.fixture
def full3():
    return ts.builtin_shift("full", 3)


@pytest.fixture
def golden():
    return ts.builtin_shift("golden-mean", 2)


@pytest.fixture
def e1_15():
    """Hub graph on 15 cover symbols with the triangular-block factor map."""
    return ts.builtin_shift("example-e1", 15)


@pytest.fixture
def nofinite_15():
    """Growing-blocks graph on 15 cover symbols (image alphabet 1..5)."""
    return ts.builtin_shift("example-nofinite", 15)


@pytest.fixture
def zero():
    return ts.zero_weights()


@pytest.fixture
def bernoulli37():
    return ts.AdditiveCylinderWeights(
        {(1,): math.log(0.3), (2,): math.log(0.7)}, depth=1)


@pytest.fixture
def amalgamation3():
    """Full 3-shift amalgamated onto 2 symbols: 1,2 -> 1 and 3 -> 2."""
    full3 = ts.ShiftSpace(3, {(i, j) for i in (1, 2, 3) for j in (1, 2, 3)})
    return ts.FactorMap.from_map(full3, [1, 1, 2])


def psi_weights(shift, exponent=3):
    """Fiber-count weights damped by the per-symbol fiber sizes."""
    fm = ts.FactorMap.from_shift(shift)
    vals = {}
    for s in range(1, shift.alphabet_size + 1):
        fiber = len(shift.fibers()[shift.factor_map[s - 1]])
        vals[(s,)] = -exponent * math.log(fiber)
    return ts.pushforward_weight(fm, ts.AdditiveCylinderWeights(vals, depth=1))
