import math

import numpy as np
import pytest

from twistmoments.characters import find_character, principal_character
from twistmoments.lvalues import TwistSpec, central_value, central_value_sq
from twistmoments.moments import (
    FamilySpec,
    TruncationError,
    empirical_first_moment,
    empirical_second_moment,
    envelope_first,
    envelope_second,
    poisson_lhs,
    poisson_rhs,
)
from twistmoments.special_functions import phi_default

PSI = find_character(17, order=4, even=True, primitive=True)
PHI = phi_default()


def test_family_spec_validation():
    with pytest.raises(ValueError):
        FamilySpec(PSI, 33, 1, 1, 100.0, 2.0)  # r odd
    with pytest.raises(ValueError):
        FamilySpec(PSI, 36, 1, 1, 100.0, 2.0)  # r not squarefree (and 17 nmid 36)
    with pytest.raises(ValueError):
        FamilySpec(PSI, 34, 2, 1, 100.0, 2.0)  # h even
    with pytest.raises(ValueError):
        FamilySpec(PSI, 34, 17, 1, 100.0, 2.0)  # gcd(h, r) > 1
    spec = FamilySpec(PSI, 34, 1, 1, 2.0**16, 4.0)
    assert not spec.regime_valid  # desk scale sits outside the theorem regime
    tiny = FamilySpec(PSI, 34, 1, 1, 2.0**40, 2.0)
    assert tiny.regime_valid


def test_family_d_values():
    spec = FamilySpec(PSI, 34, 3, 1, 300.0, 3.0)
    ds = spec.d_values()
    assert all(d % 34 == 3 and 300 < d < 600 for d in ds)
    from twistmoments.arith import factorize

    assert all(factorize(int(d)).is_squarefree() for d in ds)


def test_empty_family_is_zero():
    spec = FamilySpec(PSI, 34, 3, 1, 4.0, 2.0)
    assert empirical_first_moment(spec)[0] == 0
    assert empirical_second_moment(spec)[0] == 0


def test_even_l_gives_zero():
    spec = FamilySpec(PSI, 34, 1, 2, 100.0, 2.0)
    assert empirical_first_moment(spec)[0] == 0
    assert empirical_second_moment(spec)[0] == 0


def test_first_moment_matches_direct_enumeration():
    spec = FamilySpec(PSI, 34, 3, 1, 300.0, 3.0)
    got, meta = empirical_first_moment(spec)
    want = sum(
        central_value(TwistSpec(PSI, int(d))) * PHI(int(d) / 300.0)
        for d in spec.d_values()
    ) / 300.0
    assert got == pytest.approx(want, abs=1e-12)
    assert meta["d_count"] == len(spec.d_values())


def test_first_moment_with_twist_l():
    from twistmoments.arith import kronecker

    spec = FamilySpec(PSI, 34, 3, 3, 300.0, 3.0)
    got, _ = empirical_first_moment(spec)
    want = sum(
        kronecker(8 * int(d), 3)
        * central_value(TwistSpec(PSI, int(d)))
        * PHI(int(d) / 300.0)
        for d in spec.d_values()
    ) / 300.0
    assert got == pytest.approx(want, abs=1e-12)


def test_second_moment_matches_direct_enumeration():
    spec = FamilySpec(PSI, 34, 3, 1, 300.0, 3.0)
    got, _ = empirical_second_moment(spec)
    want = sum(
        central_value_sq(TwistSpec(PSI, int(d))) * PHI(int(d) / 300.0)
        for d in spec.d_values()
    ) / 300.0
    assert got == pytest.approx(want, rel=1e-6)
    assert got >= 0  # l = 1: nonnegative summands


def test_moment_determinism():
    spec = FamilySpec(PSI, 34, 1, 1, 500.0, 2.0)
    a1 = empirical_first_moment(spec)[0]
    a2 = empirical_first_moment(spec)[0]
    assert a1 == a2  # bitwise
    b1 = empirical_second_moment(spec)[0]
    b2 = empirical_second_moment(spec)[0]
    assert b1 == b2


def test_mu2_vs_MY_weights_shrink_with_Y():
    spec = FamilySpec(PSI, 34, 1, 1, 400.0, 2.0)
    full, _ = empirical_first_moment(spec, weight="mu2")
    diffs = []
    for Y in (1.0, 3.0, 8.0, 30.0):
        s2 = FamilySpec(PSI, 34, 1, 1, 400.0, Y)
        my, _ = empirical_first_moment(s2, weight="MY")
        diffs.append(abs(full - my))
    assert diffs[-1] == 0  # Y > sqrt(2X): M_Y = mu^2 exactly
    assert diffs[0] >= diffs[-2]


def test_poisson_identity_grid():
    # square and non-square s, r in {2, 10, 34}, including tuples where the
    # (alpha^2, r) | h condition prunes alpha (gcd(h, r) > 1 is allowed here)
    tuples = [
        (1, 2, 1, 60.0, 6.0),
        (3, 2, 1, 50.0, 7.0),
        (9, 2, 1, 80.0, 5.0),
        (15, 34, 3, 200.0, 3.0),
        (25, 2, 1, 60.0, 4.0),
        (7, 10, 1, 90.0, 4.0),
        (7, 10, 5, 90.0, 6.0),
        (21, 10, 3, 120.0, 5.0),
        (5, 34, 1, 100.0, 4.0),
        (49, 10, 9, 70.0, 4.0),
        (33, 34, 5, 150.0, 4.0),
        (3, 34, 33, 120.0, 6.0),
        (9, 10, 5, 64.0, 8.0),
    ]
    for s, r, h, X, Y in tuples:
        lhs = poisson_lhs(h, r, X, Y, s)
        rhs = poisson_rhs(h, r, X, Y, s)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs)), (s, r, h, X, Y)


def test_poisson_fixture():
    # regression fixture for the (3, 2, 1, 50, 7) tuple
    val = poisson_lhs(1, 2, 50.0, 7.0, 3)
    assert val == pytest.approx(0.0, abs=1e-12)
    assert poisson_rhs(1, 2, 50.0, 7.0, 3) == pytest.approx(val, abs=1e-10)


def test_poisson_k0_dominates_for_square_s():
    # for square s the k = 0 (diagonal) term dominates as X grows
    from twistmoments.arith import mobius, mod_inverse
    from twistmoments.gauss_sums import G_formula
    from twistmoments.special_functions import fourier_hat

    s, r, h = 9, 2, 1
    hat0 = float(fourier_hat(PHI, 0.0).real)

    def diag(X, Y):
        total = 0.0
        for alpha in range(1, int(min(math.sqrt(2 * X), Y)) + 1):
            if math.gcd(alpha, s) != 1 or mobius(alpha) == 0:
                continue
            g = math.gcd(alpha * alpha, r)
            if h % g:
                continue
            total += (
                X / (r * s) * g * mobius(alpha) / alpha**2
                * __import__("twistmoments.arith", fromlist=["kronecker"]).kronecker(
                    8 * (r // g), s
                )
                * G_formula(0, s)
                * hat0
            )
        return total

    rel = []
    for X in (1000.0, 10000.0):
        Y = 6.0
        lhs = poisson_lhs(h, r, X, Y, s)
        rel.append(abs(lhs - diag(X, Y)) / abs(lhs))
    assert rel[1] < rel[0]


def test_poisson_tail_target_insensitivity():
    a = poisson_rhs(1, 2, 80.0, 5.0, 9, tail_target=1e-12)
    b = poisson_rhs(1, 2, 80.0, 5.0, 9, tail_target=1e-15)
    assert a == pytest.approx(b, abs=1e-10)


def test_envelopes_positive():
    for X in (2.0**10, 2.0**16):
        assert envelope_first(X, X**0.125, 1, 34) > 0
        assert envelope_second(X, X**0.125, 3, 34) > 0
