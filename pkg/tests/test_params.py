import dataclasses

import pytest

from tfhe_edge.params import ParamError, ParamSet, lvl1_default, validate


def test_lvl1_values():
    ps = lvl1_default()
    assert (ps.log2_q, ps.N, ps.sigma, ps.p) == (32, 1024, 2.0**-25, 2)
    assert ps.q == 2**32
    assert ps.delta == 2**31
    assert ps.sigma_q == 128.0
    assert ps.mask == 0xFFFFFFFF


def test_delta_for_p4():
    ps = validate(ParamSet(log2_q=32, N=1024, sigma=2.0**-25, p=4))
    assert ps.delta == 2**30
    assert ps.delta * ps.p == ps.q


@pytest.mark.parametrize(
    "change",
    [
        dict(N=1000),
        dict(N=0),
        dict(N=1 << 16),
        dict(p=3),
        dict(p=1),
        dict(log2_q=0),
        dict(log2_q=33),
        dict(k=2),
        dict(sigma=2.0**-40),
    ],
)
def test_invalid_sets_rejected(change):
    with pytest.raises(ParamError):
        validate(dataclasses.replace(lvl1_default(), **change))


def test_p_larger_than_q_rejected():
    with pytest.raises(ParamError):
        validate(ParamSet(log2_q=4, N=16, sigma=0.25, p=32))


def test_param_error_is_value_error():
    assert issubclass(ParamError, ValueError)


def test_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        lvl1_default().N = 4
