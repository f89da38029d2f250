"""Small-divisor witnesses: exhaustive minima, scaling, and frozen constants.

Expected constants come from an independent plain-loop enumeration kept in
comments next to each assertion.
"""

import math

import numpy as np
import pytest

from nilflow import (
    DiophantineWitness,
    fit_witness,
    min_small_divisor,
    simultaneous_witness,
)
from nilflow.errors import DimensionMismatch

PHI = (1 + math.sqrt(5)) / 2


def test_exact_resonance_half():
    k, value = min_small_divisor((1, 0.5), 2)
    assert k == (1, -2)
    assert value == 0.0


def test_single_integer_direction():
    for K in (1, 5, 40):
        k, value = min_small_divisor((1,), K)
        assert value == 1.0
        assert k == (1,)


def test_fibonacci_argmin():
    # plain-loop oracle at K=100: min 0.00813061875578569 at +-(89, -55)
    k, value = min_small_divisor((1, PHI), 100)
    assert k == (89, -55)
    assert value == pytest.approx(0.00813061875578569, rel=1e-14)
    # consecutive Fibonacci magnitudes with opposite signs
    assert (abs(k[1]), abs(k[0])) == (55, 89)


def test_scaling_by_constant():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = rng.normal(size=2)
        t = float(rng.uniform(0.5, 3.0)) * (1 if rng.uniform() < 0.5 else -1)
        k1, v1 = min_small_divisor(a, 12)
        k2, v2 = min_small_divisor(t * a, 12)
        assert k1 == k2
        assert v2 == pytest.approx(abs(t) * v1, rel=1e-12)


def test_huge_k_rejected():
    with pytest.raises(ValueError):
        min_small_divisor((1, PHI), 10_000)
    with pytest.raises(ValueError):
        min_small_divisor((1, PHI), 0)
    with pytest.raises(DimensionMismatch):
        min_small_divisor([], 5)


def test_invalid_witness_at_resonance():
    w = fit_witness((1, 0.5), gamma=1.0, K=4)
    assert not w.valid
    assert w.C == 0.0
    assert w.argmin_k == (1, -2)
    assert w.kind == "linear-form"


def test_unit_witness():
    w = fit_witness((1,), gamma=0.0, K=10)
    assert w.valid
    assert w.C == 1.0


def test_golden_ratio_witness_plateau():
    # plain-loop oracle: C(50)=0.850650841705575, C(100)=0.850650809062256,
    # C(200)=0.850650808457344; argmins are Fibonacci pairs
    w50 = fit_witness((1, PHI), gamma=1.0, K=50)
    w100 = fit_witness((1, PHI), gamma=1.0, K=100)
    w200 = fit_witness((1, PHI), gamma=1.0, K=200)
    assert w50.C == pytest.approx(0.850650841705575, rel=1e-13)
    assert w100.C == pytest.approx(0.850650809062256, rel=1e-13)
    assert w200.C == pytest.approx(0.850650808457344, rel=1e-13)
    assert w100.argmin_k == (89, -55)
    assert w200.argmin_k == (144, -89)
    assert w200.value == pytest.approx(5.024999e-03, rel=1e-5)
    assert abs(w200.C - w100.C) / w200.C < 0.01


def test_monotone_in_k():
    for gamma in (0.5, 1.0, 2.0):
        prev = None
        for K in (10, 25, 50, 100):
            w = fit_witness((1, PHI), gamma=gamma, K=K)
            if prev is not None:
                assert w.C <= prev + 1e-15
            prev = w.C


def test_gamma_validation():
    with pytest.raises(ValueError):
        fit_witness((1, PHI), gamma=-0.5, K=10)


def test_norm_conventions_recorded():
    w = fit_witness((1, PHI), gamma=1.0, K=10)
    assert w.product_norm == "euclidean"
    assert w.enum_norm == "sup"
    assert w.K == 10
    assert w.gamma == 1.0


def test_witness_lower_bound_holds_on_grid():
    w = fit_witness((1, PHI), gamma=1.0, K=60)
    for k1 in range(-60, 61):
        for k2 in range(-60, 61):
            if k1 == k2 == 0:
                continue
            assert abs(k1 + k2 * PHI) >= w.lower_bound((k1, k2)) - 1e-15


def test_simultaneous_single_golden():
    # plain-loop oracle: C = 0.3819660112501051 at m = +-1
    w = simultaneous_witness([(PHI,)], gamma=1.0, K=50)
    assert w.kind == "simultaneous"
    assert w.valid
    assert w.C == pytest.approx(0.3819660112501051, rel=1e-13)
    assert w.argmin_k == (1,)


def test_simultaneous_matches_distance_form():
    # same minimization as a one-vector product over the distance to integers
    K, gamma = 50, 1.0
    best = min(
        (abs(m * PHI - round(m * PHI)) * abs(m) ** gamma, abs(m))
        for m in range(1, K + 1)
    )
    w = simultaneous_witness([(PHI,)], gamma=gamma, K=K)
    assert w.C == pytest.approx(best[0], rel=1e-13)


def test_simultaneous_rational_invalid():
    w = simultaneous_witness([(1 / 3,)], gamma=1.0, K=5)
    assert not w.valid
    assert w.C == 0.0
    assert abs(w.argmin_k[0]) == 3  # denominator frequency


def test_simultaneous_max_dominates_each():
    # plain-loop oracle for the pair: C = 0.41421356237309515
    gamma, K = 1.0, 50
    joint = simultaneous_witness([(PHI,), (math.sqrt(2),)], gamma=gamma, K=K)
    assert joint.C == pytest.approx(0.41421356237309515, rel=1e-13)
    for theta in ((PHI,), (math.sqrt(2),)):
        single = simultaneous_witness([theta], gamma=gamma, K=K)
        assert joint.C >= single.C - 1e-15


def test_simultaneous_two_dimensional_vectors():
    # 2-vector thetas: enumeration over integer pairs m
    w = simultaneous_witness([(PHI, math.sqrt(2))], gamma=0.0, K=8)
    best = 1.0
    for m1 in range(-8, 9):
        for m2 in range(-8, 9):
            if m1 == m2 == 0:
                continue
            d = m1 * PHI + m2 * math.sqrt(2)
            best = min(best, abs(d - round(d)))
    assert w.C == pytest.approx(best, rel=1e-12)


def test_witness_dataclass_validity_flag():
    w = DiophantineWitness(
        C=0.0, gamma=1.0, K=5, kind="linear-form", argmin_k=(1, -2), value=0.0
    )
    assert not w.valid
    assert DiophantineWitness(
        C=0.5, gamma=1.0, K=5, kind="linear-form", argmin_k=(1, 1), value=0.5
    ).valid
