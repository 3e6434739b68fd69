"""Shifted quadratic Gauss-type sums over odd moduli, two ways.

tau_k(s) = sum over b mod s of (b|s) e(bk/s), and the normalized

    G_k(s) = ((1-i)/2 + (-1|s)(1+i)/2) tau_k(s),

which is real, multiplicative in s for coprime odd moduli, and has a five-case
closed form on prime powers.  `G_brute` evaluates the definition directly;
`G_formula` evaluates the prime-power table through the factorization.  Their
exhaustive agreement is one of the package's acceptance gates.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .arith import euler_phi, factorize, kronecker


def tau_k_brute(k: int, s: int) -> complex:
    """Direct O(s) summation with phases from the reduced fractions bk/s."""
    if s < 1 or s % 2 == 0:
        raise ValueError("s must be an odd positive integer")
    b = np.arange(s, dtype=np.int64)
    sym = np.array([kronecker(int(x), s) for x in b], dtype=np.float64)
    roots = np.exp(2j * np.pi * np.arange(s) / s)
    return complex(sym @ roots[(b * (k % s)) % s])


def _prefactor(s: int) -> complex:
    eps = kronecker(-1, s)
    return (1 - 1j) / 2 + eps * (1 + 1j) / 2


def G_brute(k: int, s: int) -> complex:
    """G_k(s) from the definition."""
    return _prefactor(s) * tau_k_brute(k, s)


@lru_cache(maxsize=None)
def _sqrt_prime(p: int) -> float:
    return math.sqrt(p)


def G_prime_power(k: int, p: int, beta: int) -> float:
    """Closed form of G_k(p^beta); alpha = v_p(k), infinite for k = 0."""
    if beta < 1:
        return 1.0
    if k == 0:
        return float(euler_phi(p**beta)) if beta % 2 == 0 else 0.0
    alpha = 0
    kk = k
    while kk % p == 0:
        kk //= p
        alpha += 1
    if beta <= alpha:
        return float(euler_phi(p**beta)) if beta % 2 == 0 else 0.0
    if beta == alpha + 1:
        if beta % 2 == 0:
            return -float(p**alpha)
        return kronecker(kk, p) * p**alpha * _sqrt_prime(p)
    return 0.0


def G_formula(k: int, s: int) -> float:
    """G_k(s) as the product of prime-power values over the factorization of s."""
    if s < 1 or s % 2 == 0:
        raise ValueError("s must be an odd positive integer")
    out = 1.0
    for p, e in factorize(s).factors:
        out *= G_prime_power(k, p, e)
        if out == 0.0:
            return 0.0
    return out


def brute_scan(s: int, ks: np.ndarray) -> np.ndarray:
    """G_k(s) by definition for every k in ks, vectorized over one modulus."""
    b = np.arange(s, dtype=np.int64)
    sym = np.array([kronecker(int(x), s) for x in b], dtype=np.float64)
    roots = np.exp(2j * np.pi * np.arange(s) / s)
    idx = np.outer(np.asarray(ks, dtype=np.int64) % s, b) % s
    taus = roots[idx] @ sym
    return _prefactor(s) * taus


def oracle_max_error(s_max: int, k_lo: int, k_hi: int) -> float:
    """max over odd s <= s_max, k in [k_lo, k_hi] of |G_formula - G_brute| / s."""
    ks = np.arange(k_lo, k_hi + 1)
    worst = 0.0
    for s in range(1, s_max + 1, 2):
        brute = brute_scan(s, ks)
        formula = np.array([G_formula(int(k), s) for k in ks])
        err = float(np.max(np.abs(brute - formula))) / s
        worst = max(worst, err)
    return worst
