"""Exact integer arithmetic: Kronecker symbols, multiplicative functions,
factorization, and segmented squarefree sieves.

Everything here is exact (Python integers in, Python integers out) and pure.
Inputs are restricted to the 64-bit range; quantities at the scales this
package runs at (X <= 2**20, moduli <= a few hundred) stay far below that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

INT64_MAX = 2**63 - 1

# Trial division uses this prime table; fully factorizes any n <= PRIME_LIMIT**2.
PRIME_LIMIT = 1_000_000


@lru_cache(maxsize=None)
def primes(limit: int = PRIME_LIMIT) -> np.ndarray:
    """All primes <= limit, as an int64 array (Eratosthenes)."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


@lru_cache(maxsize=4)
def smallest_prime_factor(limit: int) -> np.ndarray:
    """spf[n] = smallest prime factor of n for 2 <= n <= limit (spf[0]=spf[1]=0)."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
            spf[p * p :: p] = sl
    rest = np.nonzero(spf == 0)[0]
    spf[rest] = rest
    spf[:2] = 0
    return spf


def _check_width(n: int) -> None:
    if abs(n) > INT64_MAX:
        raise OverflowError(f"{n} exceeds the supported 64-bit range")


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), extended to all integers n (including 0, negatives)."""
    _check_width(a)
    _check_width(n)
    if n == 0:
        return 1 if a in (1, -1) else 0
    acc = 1
    if n < 0:
        n = -n
        if a < 0:
            acc = -acc
    # factor out 2s from n; (a|2) = 0, 1, -1 for a even, a = +-1 (8), a = +-3 (8)
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            acc = -acc
    # now n odd positive: Jacobi with reciprocity
    a %= n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                acc = -acc
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            acc = -acc
        a %= n
    return acc if n == 1 else 0


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer with its complete prime factorization.

    factors is sorted by prime; the empty tuple represents n = 1.
    """

    n: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if e < 1 or p <= last:
                raise ValueError("factors must be sorted primes with exponents >= 1")
            last = p
            prod *= p**e
        if prod != self.n:
            raise ValueError(f"factorization does not multiply back to {self.n}")

    @property
    def prime_divisors(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


def factorize(n: int) -> FactoredInteger:
    """Factor n >= 1: spf-table walk for small n, trial division beyond."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    _check_width(n)
    orig = n
    out = []
    if n <= PRIME_LIMIT:
        spf = smallest_prime_factor(PRIME_LIMIT)
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        out.sort()
        return FactoredInteger(orig, tuple(out))
    for p in primes():
        p = int(p)
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    if n > 1:
        if n > PRIME_LIMIT**2:
            raise ValueError(f"cannot certify remaining factor {n} prime (trial division limit)")
        out.append((n, 1))
    return FactoredInteger(orig, tuple(out))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = factorize(n)
    return len(f.factors) == 1 and f.factors[0][1] == 1


def mobius(n: int) -> int:
    """Mobius function mu(n)."""
    f = factorize(n)
    if not f.is_squarefree():
        return 0
    return -1 if len(f.factors) % 2 else 1


def euler_phi(n: int) -> int:
    """Euler totient phi(n)."""
    f = factorize(n)
    out = 1
    for p, e in f.factors:
        out *= p ** (e - 1) * (p - 1)
    return out


def mod_inverse(a: int, m: int) -> int:
    """Inverse of a mod m in [0, m); m = 1 returns 0 (the unique residue)."""
    if m < 1:
        raise ValueError("modulus must be positive")
    if m == 1:
        return 0
    if math.gcd(a, m) != 1:
        raise ValueError(f"{a} is not invertible mod {m}")
    return pow(a, -1, m)


def squarefree_decompose(l: int) -> tuple[int, int]:
    """Write l = l1 * l2**2 with l1 squarefree; returns (l1, l2)."""
    f = factorize(l)
    l1 = 1
    l2 = 1
    for p, e in f.factors:
        if e % 2:
            l1 *= p
        l2 *= p ** (e // 2)
    return l1, l2


def is_fundamental_discriminant(d: int) -> bool:
    """1 counts as the trivial fundamental discriminant."""
    if d == 0:
        return False
    if d % 4 == 1:
        return factorize(abs(d)).is_squarefree()
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and factorize(abs(m)).is_squarefree()
    return False


def fundamental_disc_decompose(fourk: int) -> tuple[int, int]:
    """Write 4k = k1 * k2**2 with k1 a fundamental discriminant (or 1).

    fourk must be a nonzero multiple of 4.
    """
    if fourk == 0:
        raise ValueError("input must be nonzero")
    if fourk % 4 != 0:
        raise ValueError("input must be 4k for an integer k")
    sign = 1 if fourk > 0 else -1
    m1, m2 = squarefree_decompose(abs(fourk))
    d0 = sign * m1
    if d0 % 4 == 1:
        k1, k2 = d0, m2
    else:
        # 4 | fourk forces m2 even here, so k2 stays integral
        k1, k2 = 4 * d0, m2 // 2
    assert k1 * k2 * k2 == fourk
    assert k1 == 1 or is_fundamental_discriminant(k1)
    return k1, k2


def mobius_truncated(d: int, Y: float) -> tuple[int, int]:
    """M_Y(d) = sum of mu(k) over k <= Y with k**2 | d, and R_Y(d) = mu(d)**2 - M_Y(d)."""
    f = factorize(d)
    sq_primes = [p for p, e in f.factors if e >= 2]
    my = 0
    # squarefree k only; others contribute mu(k) = 0
    for mask in range(1 << len(sq_primes)):
        k = 1
        bits = 0
        for i, p in enumerate(sq_primes):
            if mask >> i & 1:
                k *= p
                bits += 1
        if k <= Y:
            my += -1 if bits % 2 else 1
    mu2 = 1 if f.is_squarefree() else 0
    return my, mu2 - my


def squarefree_mu_window(lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """(is_squarefree flags, mu values) for the window [lo, hi), segmented sieve."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    _check_width(hi)
    n = hi - lo
    residual = np.arange(lo, hi, dtype=np.int64)
    mu = np.ones(n, dtype=np.int64)
    sqfree = np.ones(n, dtype=bool)
    for p in primes(math.isqrt(hi - 1)):
        p = int(p)
        start = (-lo) % p
        idx = np.arange(start, n, p)
        residual[idx] //= p
        mu[idx] = -mu[idx]
        second = idx[residual[idx] % p == 0]
        sqfree[second] = False
        while second.size:
            residual[second] //= p
            second = second[residual[second] % p == 0]
    # leftover residual > 1 is a single prime factor
    big = residual > 1
    mu[big] = -mu[big]
    mu[~sqfree] = 0
    return sqfree, mu


@dataclass(frozen=True)
class SquarefreeSieveWindow:
    """Squarefree members of the progression d = h (mod r) inside [lo, hi)."""

    lo: int
    hi: int
    r: int
    h: int
    flagged: np.ndarray  # squarefree d in the progression, increasing
    mu: np.ndarray  # mu(d) for each flagged d

    def __contains__(self, d: int) -> bool:
        i = int(np.searchsorted(self.flagged, d))
        return i < len(self.flagged) and int(self.flagged[i]) == d


def sieve_family(lo: int, hi: int, r: int, h: int) -> SquarefreeSieveWindow:
    """Sieve the squarefree d = h (mod r) in [lo, hi)."""
    if r < 1:
        raise ValueError("modulus must be positive")
    sqfree, mu = squarefree_mu_window(lo, hi)
    d = np.arange(lo, hi, dtype=np.int64)
    keep = sqfree & (d % r == h % r)
    return SquarefreeSieveWindow(lo, hi, r, h, d[keep], mu[keep])
