import math
import random

import numpy as np
import pytest

from twistmoments.arith import kronecker
from twistmoments.gauss_sums import (
    G_brute,
    G_formula,
    G_prime_power,
    brute_scan,
    oracle_max_error,
    tau_k_brute,
)


def test_tau_k_examples():
    assert tau_k_brute(0, 9) == pytest.approx(6, abs=1e-10)
    assert tau_k_brute(1, 3) == pytest.approx(1j * math.sqrt(3), abs=1e-10)
    assert tau_k_brute(1, 1) == pytest.approx(1)


def test_G_brute_examples():
    # s = 1 mod 4: prefactor is 1
    assert G_brute(2, 5) == pytest.approx(tau_k_brute(2, 5), abs=1e-12)
    assert G_brute(1, 3) == pytest.approx(math.sqrt(3), abs=1e-10)
    with pytest.raises(ValueError):
        G_brute(1, 4)


def test_G_negation_symmetry():
    for s in range(1, 100, 2):
        eps = kronecker(-1, s)
        for k in (1, 2, 5, 12):
            assert G_brute(-k, s) == pytest.approx(eps * G_brute(k, s), abs=1e-9)


def test_G_formula_examples():
    assert G_formula(0, 9) == pytest.approx(6)
    assert G_formula(3, 9) == pytest.approx(-3)
    assert G_formula(2, 15) == pytest.approx(math.sqrt(15), abs=1e-12)
    assert G_formula(2, 15) == pytest.approx(G_brute(2, 15), abs=1e-10)


def test_G_squarefree_closed_form():
    # squarefree s coprime to k: G_k(s) = (k|s) sqrt(s)
    for s in (3, 5, 7, 15, 21, 33):
        for k in (1, 2, 4, 8):
            if math.gcd(k, s) == 1:
                assert G_formula(k, s) == pytest.approx(
                    kronecker(k, s) * math.sqrt(s), abs=1e-10
                )


def test_G_vanishing_beyond_alpha_plus_two():
    assert G_prime_power(3, 3, 3) == 0.0  # beta = 3 >= alpha + 2 = 3
    assert G_prime_power(1, 5, 2) == 0.0
    assert abs(G_brute(3, 27)) < 1e-9
    assert abs(G_brute(1, 25)) < 1e-9


def test_G_multiplicativity():
    rng = random.Random(9)
    pairs = 0
    while pairs < 40:
        m = rng.randrange(1, 200, 2)
        n = rng.randrange(1, 200, 2)
        if math.gcd(m, n) != 1:
            continue
        pairs += 1
        k = rng.randrange(-25, 25)
        assert G_formula(k, m) * G_formula(k, n) == pytest.approx(
            G_formula(k, m * n), rel=1e-12, abs=1e-12
        )


def test_oracle_equivalence_small():
    # quick slice of the acceptance gate: every branch of the prime-power table
    assert oracle_max_error(225, -20, 20) <= 1e-9


def test_brute_scan_matches_pointwise():
    ks = np.arange(-6, 7)
    for s in (1, 9, 15, 49):
        scan = brute_scan(s, ks)
        for i, k in enumerate(ks):
            assert scan[i] == pytest.approx(G_brute(int(k), s), abs=1e-10)
