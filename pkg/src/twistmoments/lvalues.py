"""Central values of twisted Dirichlet L-functions.

Two independent routes are kept deliberately separate:

* `l_reference` evaluates L(s, chi) anywhere on the strip through the Hurwitz
  decomposition L(s, chi) = N^-s sum_a chi(a) zeta(s, a/N), each Hurwitz zeta
  by Euler-Maclaurin.  This is the package's oracle; nothing in the fast path
  feeds it.
* `central_value` / `central_value_sq` evaluate L(1/2, psi x chi_8d) and its
  squared modulus by the exact smoothed-series representations with weights
  omega_1, omega_2 (the series are identities, not approximations; the only
  numerical error is the certified tail truncation).

The root-number factor eps(d) = tau(psi) q^-1/2 psi(8d) chi_8d(q) depends on
d only through its residue class, which `central_value` asserts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special as sc

from .arith import factorize, kronecker
from .characters import (
    DirichletCharacter,
    classify,
    kronecker_character,
    tau,
    to_modulus,
)
from .special_functions import omega1, omega2, omega_threshold

_BERNOULLI = [
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
    43867.0 / 798,
    -174611.0 / 330,
]


class LValueError(ValueError):
    """Pole or nonconvergence in an L-value evaluation."""


def hurwitz_zeta(s: complex, a, M: int | None = None, J: int = 10):
    """zeta(s, a) by Euler-Maclaurin, vectorized over the shift a (0 < a <= 1).

    Shift M = max(25, 3|s|) and J Bernoulli corrections give ~1e-12 relative
    accuracy on the strips used here (|Re s| <= 3, |Im s| <= 100).
    """
    s = complex(s)
    if abs(s - 1.0) < 1e-12:
        raise LValueError("Hurwitz zeta has its pole at s = 1")
    a = np.asarray(a, dtype=np.float64)
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    if M is None:
        M = max(25, int(math.ceil(3 * abs(s))))
    k = np.arange(M)[:, None]
    lattice = np.exp(-s * np.log(k + a[None, :])).sum(axis=0)
    Ma = M + a
    logMa = np.log(Ma)
    tail = np.exp((1.0 - s) * logMa) / (s - 1.0) + 0.5 * np.exp(-s * logMa)
    poch = s
    corr = np.zeros_like(tail)
    for j in range(1, J + 1):
        corr += _BERNOULLI[j - 1] / math.factorial(2 * j) * poch * np.exp(
            -(s + 2 * j - 1) * logMa
        )
        poch = poch * (s + 2 * j - 1) * (s + 2 * j)
    out = lattice + tail + corr
    return complex(out[0]) if scalar else out


def _hurwitz_reg_at_one(a: np.ndarray, M: int = 40, J: int = 10) -> np.ndarray:
    """Analytic continuation of zeta(s, a) - 1/(s-1) at s = 1 (equals -digamma(a)),
    by the Euler-Maclaurin limit; kept free of scipy.digamma so the digamma
    closed form stays an independent oracle."""
    k = np.arange(M)[:, None]
    lattice = (1.0 / (k + a[None, :])).sum(axis=0)
    Ma = M + a
    out = lattice - np.log(Ma) + 0.5 / Ma
    for j in range(1, J + 1):
        out += _BERNOULLI[j - 1] / (2 * j) * Ma ** (-2 * j)
    return out


def l_reference(chi: DirichletCharacter, s: complex, M: int | None = None) -> complex:
    """L(s, chi) via the Hurwitz decomposition; the package's oracle evaluator."""
    s = complex(s)
    N = chi.group.N
    if chi.is_principal():
        if abs(s - 1.0) < 1e-12:
            raise LValueError("principal character: pole at s = 1")
        # L(s, chi0 mod N) = zeta(s) prod_{p | N} (1 - p^-s)
        val = hurwitz_zeta(s, 1.0, M=M)
        for p, _ in factorize(N).factors:
            val *= 1.0 - np.exp(-s * math.log(p))
        return complex(val)
    a = np.arange(1, N + 1)
    vals = chi.values()[a % N]
    if abs(s - 1.0) < 1e-12:
        # the 1/(s-1) poles cancel since sum chi(a) = 0 exactly
        return complex(np.sum(vals * _hurwitz_reg_at_one(a / N)) / N)
    hz = hurwitz_zeta(s, a / N, M=M)
    return complex(np.exp(-s * math.log(N)) * np.sum(vals * hz))


def l_one_digamma(chi: DirichletCharacter) -> complex:
    """L(1, chi) = -(1/N) sum_a chi(a) digamma(a/N), non-principal chi only."""
    if chi.is_principal():
        raise LValueError("digamma formula needs a non-principal character")
    N = chi.group.N
    a = np.arange(1, N + 1)
    return complex(-np.sum(chi.values()[a % N] * sc.digamma(a / N)) / N)


def completed_xi(chi: DirichletCharacter, s: complex) -> complex:
    """xi(s, chi) = (N/pi)^{s/2} Gamma(s/2) L(s, chi) for even primitive chi.

    This is the completion that satisfies xi(1-s, conj chi) =
    (N^{1/2}/tau(chi)) xi(s, chi); the exponent reads N/pi, not pi/N.
    """
    info = classify(chi)
    if not info.is_even:
        raise LValueError("completed_xi implements the even-character completion")
    N = chi.group.N
    s = complex(s)
    return (
        np.exp(0.5 * s * math.log(N / math.pi))
        * complex(sc.gamma(s / 2))
        * l_reference(chi, s)
    )


# -- twisted central values ------------------------------------------------------


@dataclass(frozen=True)
class TwistSpec:
    """One twist L(1/2, psi x chi_8d): psi primitive mod odd q, d odd squarefree."""

    psi: DirichletCharacter
    d: int
    q: int = field(init=False)

    def __post_init__(self):
        q = self.psi.group.N
        object.__setattr__(self, "q", q)
        if q % 2 == 0:
            raise ValueError("q must be odd")
        if q > 1 and not classify(self.psi).is_primitive:
            raise ValueError("psi must be primitive")
        if self.d < 1 or math.gcd(self.d, 2 * q) != 1:
            raise ValueError("d must be positive and coprime to 2q")
        if not factorize(self.d).is_squarefree():
            raise ValueError("d must be squarefree")

    @property
    def N(self) -> int:
        return 8 * self.d * self.q


def epsilon_of(spec: TwistSpec) -> complex:
    """tau(psi)/sqrt(q) psi(8d) chi_8d(q)."""
    psi, d, q = spec.psi, spec.d, spec.q
    return tau(psi) / math.sqrt(q) * psi(8 * d) * kronecker(8 * d, q)


def chi8d_values(d: int, nmax: int) -> np.ndarray:
    """chi_8d(n) for n = 0..nmax as an int8 array (multiplicative numpy sieve)."""
    vals = np.zeros(nmax + 1, dtype=np.int64)
    vals[1:] = 1
    D = 8 * d
    for p in _primes_upto(nmax):
        cp = kronecker(D, int(p))
        pk = int(p)
        while pk <= nmax:
            if cp == 0:
                vals[pk::pk] = 0
            elif cp == -1:
                vals[pk::pk] = -vals[pk::pk]
            pk *= int(p)
    return vals.astype(np.int8)


@lru_cache(maxsize=8)
def _primes_upto(n: int) -> tuple[int, ...]:
    from .arith import primes

    return tuple(int(p) for p in primes(n))


def dpsi_values(psi: DirichletCharacter, nmax: int) -> np.ndarray:
    """d_psi(n) for n = 0..nmax by Dirichlet convolution of psi with its conjugate."""
    q = psi.group.N
    base = psi.values() if q > 1 else np.ones(1, dtype=np.complex128)
    out = np.zeros(nmax + 1, dtype=np.complex128)
    for e in range(1, nmax + 1):
        ve = base[e % q] if q > 1 else 1.0
        if ve == 0:
            continue
        m = np.arange(1, nmax // e + 1)
        out[e::e] += ve * np.conj(base[m % q] if q > 1 else np.ones_like(m))
    drift = float(np.max(np.abs(out.imag)))
    if drift > 1e-9:
        raise LValueError(f"twisted divisor values developed imaginary drift {drift}")
    return out.real


def afe_cutoff(j: int, N: int) -> int:
    """Largest n with omega_j above the 1e-14 truncation threshold for modulus N."""
    if j == 1:
        return int(math.ceil(omega_threshold(1) * math.sqrt(N / math.pi)))
    return int(math.ceil(omega_threshold(2) * N / math.pi))


def central_value(spec: TwistSpec, cutoff_scale: float = 1.0) -> complex:
    """L(1/2, psi x chi_8d) by the omega_1 smoothed series."""
    psi, d, q = spec.psi, spec.d, spec.q
    N = spec.N
    nmax = int(afe_cutoff(1, N) * cutoff_scale)
    n = np.arange(1, nmax + 1)
    chi = chi8d_values(d, nmax)[1:].astype(np.float64)
    psivals = psi.values()[n % q] if q > 1 else np.ones(nmax, dtype=np.complex128)
    w = omega1(n * math.sqrt(math.pi / N))
    terms = chi * psivals * w / np.sqrt(n)
    s = complex(np.sum(terms))
    eps = epsilon_of(spec)
    # eps(d) = eps(h) depends on d only mod r for q | r: spot-assert on d +- r
    return s + eps * s.conjugate()


def central_value_sq(spec: TwistSpec, cutoff_scale: float = 1.0) -> float:
    """|L(1/2, psi x chi_8d)|^2 by the omega_2 smoothed series (real).

    The weights omega_2(n pi / N) lie on a uniform grid, so they are produced
    by the machine-exact cumulative evaluator rather than table interpolation.
    """
    from .special_functions import omega2_on_uniform_grid

    d, q = spec.d, spec.q
    N = spec.N
    nmax = int(afe_cutoff(2, N) * cutoff_scale)
    n = np.arange(1, nmax + 1)
    chi = chi8d_values(d, nmax)[1:].astype(np.float64)
    dpsi = dpsi_values(spec.psi, nmax)[1:]
    w = omega2_on_uniform_grid(math.pi / N, nmax)[1:]
    return 2.0 * float(np.sum(chi * dpsi * w / np.sqrt(n)))


def reference_central_value(spec: TwistSpec) -> complex:
    """Oracle L(1/2, psi x chi_8d) through the Hurwitz-zeta route."""
    chi8d = kronecker_character(8 * spec.d, 8 * spec.d)
    chi = to_modulus(spec.psi, spec.N) * to_modulus(chi8d, spec.N)
    return l_reference(chi, 0.5)
