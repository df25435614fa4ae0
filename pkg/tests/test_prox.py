"""Proximal operators: closed-form values and the defining properties."""

import math

import numpy as np
import pytest

from minimax_kit.checks import prox_suite
from minimax_kit.core import ContractError
from minimax_kit.prox import (
    BoxProx,
    L1Prox,
    SqL2Prox,
    ZeroProx,
    make_prox,
    prox_box,
    prox_l1,
    prox_sq_l2,
    prox_zero,
)


def test_prox_zero_is_identity():
    v = np.array([1.0, -2.0, 0.0])
    out = prox_zero(v, 0.5)
    assert np.array_equal(out, v)
    out[0] = 9.0
    assert v[0] == 1.0  # fresh array, not an alias


def test_prox_l1_soft_threshold_values():
    assert np.array_equal(
        prox_l1(np.array([3.0, -0.5, 0.0]), 1.0, 1.0), np.array([2.0, 0.0, 0.0])
    )
    assert np.array_equal(prox_l1(np.array([-2.0]), 0.5, 1.0), np.array([-1.5]))
    # |v| == step*weight sits exactly on the threshold and must map to 0
    assert np.array_equal(prox_l1(np.array([2.0, -2.0]), 2.0, 1.0), np.zeros(2))


def test_prox_l1_zero_weight_is_identity():
    v = np.array([0.3, -4.0])
    assert np.array_equal(prox_l1(v, 1.0, 0.0), v)


def test_prox_sq_l2_shrink_values():
    assert np.array_equal(
        prox_sq_l2(np.array([1.0, 1.0]), 1.0, 1.0), np.array([0.5, 0.5])
    )
    assert np.array_equal(prox_sq_l2(np.array([2.0]), 0.5, 2.0), np.array([1.0]))


def test_prox_box_clamps():
    assert np.array_equal(
        prox_box(np.array([-3.0, 0.5, 7.0]), 1.0, 0.0, 1.0), np.array([0.0, 0.5, 1.0])
    )
    # degenerate box is a single point
    assert np.array_equal(prox_box(np.array([-5.0, 5.0]), 1.0, 2.0, 2.0), np.full(2, 2.0))


def test_step_validation():
    v = np.ones(2)
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(ContractError):
            prox_zero(v, bad)
        with pytest.raises(ContractError):
            prox_l1(v, bad, 1.0)


def test_weight_and_bounds_validation():
    v = np.ones(2)
    with pytest.raises(ContractError):
        prox_l1(v, 1.0, -0.5)
    with pytest.raises(ContractError):
        prox_sq_l2(v, 1.0, math.nan)
    with pytest.raises(ContractError):
        prox_box(v, 1.0, 2.0, 1.0)
    with pytest.raises(ContractError):
        prox_box(v, 1.0, -math.inf, 0.0)
    with pytest.raises(ContractError):
        L1Prox(weight=-1.0)
    with pytest.raises(ContractError):
        BoxProx(lo=1.0, hi=0.0)


def test_evaluate():
    assert ZeroProx().evaluate(np.array([5.0])) == 0.0
    assert L1Prox(weight=2.0).evaluate(np.array([1.0, -3.0])) == 8.0
    assert SqL2Prox(weight=2.0).evaluate(np.array([3.0, 4.0])) == 25.0
    box = BoxProx(lo=0.0, hi=1.0)
    assert box.evaluate(np.array([0.0, 1.0])) == 0.0
    assert box.evaluate(np.array([0.5, 1.5])) == math.inf


def test_operator_classes_match_free_functions():
    v = np.array([2.5, -0.25, 0.0])
    assert np.array_equal(L1Prox(weight=0.7).prox(v, 0.3), prox_l1(v, 0.3, 0.7))
    assert np.array_equal(SqL2Prox(weight=0.7).prox(v, 0.3), prox_sq_l2(v, 0.3, 0.7))
    assert np.array_equal(BoxProx(lo=-1.0, hi=1.0).prox(v, 0.3), prox_box(v, 0.3, -1.0, 1.0))


def test_make_prox_round_trip():
    for op in (ZeroProx(), L1Prox(weight=1.5), SqL2Prox(weight=0.3), BoxProx(lo=-1.0, hi=2.0)):
        clone = make_prox(op.kind, **op.params())
        assert clone == op
    with pytest.raises(ContractError):
        make_prox("huber", weight=1.0)


def test_property_suite_passes():
    # nonexpansiveness, firm nonexpansiveness, argmin optimality, fixed points
    rows = prox_suite(seed=0, trials=250)
    assert len(rows) == 14
    failed = [r.name for r in rows if not r.passed]
    assert failed == []
    for r in rows:
        assert r.worst <= 0.0
