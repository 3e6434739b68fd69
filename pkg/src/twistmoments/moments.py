"""Empirical moment sums over the progression families, and a numerical
verifier for the arithmetic-progression Poisson summation formula.

The families are d = h (mod r), d odd squarefree, d/X inside the bump's
support (1, 2).  Moment sums are exact finite sums; per-d central values come
from the smoothed-series evaluators (vectorized in numba over the family),
the final reduction is math.fsum in a fixed d-order, so results are
bit-identical for any thread count or chunking.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import (
    factorize,
    kronecker,
    mobius_truncated,
    mod_inverse,
    sieve_family,
    smallest_prime_factor,
)
from .characters import DirichletCharacter, classify, tau
from .gauss_sums import G_formula
from .lvalues import LValueError
from .special_functions import (
    TestFunction,
    fourier_hat,
    omega_table,
    omega_threshold,
    phi_default,
)


class TruncationError(RuntimeError):
    """The k-sum tail of the Poisson right-hand side cannot be certified."""


@dataclass(frozen=True)
class FamilySpec:
    """One moment computation over { d = h (mod r), odd squarefree, X < d < 2X }."""

    psi: DirichletCharacter
    r: int
    h: int
    l: int
    X: float
    Y: float
    delta: float = 0.05

    def __post_init__(self):
        q = self.q
        if q % 2 == 0:
            raise ValueError("q must be odd")
        if self.r % 2 or self.r % q:
            raise ValueError("r must be even with q | r")
        if not factorize(self.r).is_squarefree():
            raise ValueError("r must be squarefree")
        if self.h % 2 == 0 or math.gcd(self.h, self.r) != 1:
            raise ValueError("h must be odd and coprime to r")
        if self.l < 1:
            raise ValueError("l must be a positive integer")
        if self.X <= 1 or self.Y < 1:
            raise ValueError("need X > 1 and Y >= 1")
        if q > 1:
            info = classify(self.psi)
            if not (info.is_even and info.is_primitive):
                raise ValueError("psi must be even and primitive")

    @property
    def q(self) -> int:
        return self.psi.group.N

    @property
    def regime_valid(self) -> bool:
        """Flag for the asymptotic-theorem regime l r Y^2 <= X^(1/2 - delta)."""
        return self.l * self.r * self.Y**2 <= self.X ** (0.5 - self.delta)

    def d_values(self) -> np.ndarray:
        lo = int(math.floor(self.X)) + 1
        hi = int(math.ceil(2 * self.X))
        win = sieve_family(lo, hi, self.r, self.h)
        ds = win.flagged
        return ds[(ds > self.X) & (ds < 2 * self.X) & (np.gcd(ds, self.q) == 1)]


@dataclass
class MomentReport:
    kind: str
    empirical: complex
    predicted: complex
    residual: complex
    envelope: float
    params: dict
    seconds: float = 0.0

    def body(self) -> dict:
        """The deterministic part (no wall-clock data)."""
        return {
            "kind": self.kind,
            "empirical_re": repr(self.empirical.real),
            "empirical_im": repr(self.empirical.imag),
            "predicted_re": repr(complex(self.predicted).real),
            "predicted_im": repr(complex(self.predicted).imag),
            "residual_abs": repr(abs(self.residual)),
            "envelope": repr(self.envelope),
            "params": self.params,
        }


def _epsilon_const(spec: FamilySpec) -> complex:
    """eps(h); asserted d-independent along the progression."""
    psi, q = spec.psi, spec.q
    if q == 1:
        return 1.0 + 0j
    vals = []
    for d in (spec.h, spec.h + spec.r, spec.h + 2 * spec.r):
        if math.gcd(8 * d, q) != 1:
            raise LValueError("family meets the modulus of psi")
        vals.append(tau(psi) / math.sqrt(q) * psi(8 * d) * kronecker(8 * d, q))
    if max(abs(v - vals[0]) for v in vals) > 1e-12:
        raise AssertionError("eps(d) failed to be constant along the progression")
    return vals[0]


@lru_cache(maxsize=4)
def _psi_value_arrays(psi_label, q: int):
    from .characters import character_group

    psi = DirichletCharacter(character_group(q), psi_label[1])
    res = np.arange(max(q, 1))
    vals = psi.value_array(res) if q > 1 else np.ones(1, dtype=np.complex128)
    return np.ascontiguousarray(vals.real), np.ascontiguousarray(vals.imag)


_DPSI_CACHE: dict = {}


def _dpsi_over_sqrt(psi: DirichletCharacter, nmax: int) -> np.ndarray:
    """d_psi(n)/sqrt(n) up to nmax (cached, grown monotonically)."""
    from ._fast import dpsi_int_table, dpsi_over_sqrt_table

    q = psi.group.N
    key = psi.label
    cached = _DPSI_CACHE.get(key)
    if cached is not None and len(cached) > nmax:
        return cached
    dp = np.array(
        [2.0 * psi(i).real for i in range(q)] if q > 1 else [2.0], dtype=np.float64
    )
    if np.max(np.abs(dp - np.round(dp))) > 1e-12:
        raise LValueError("fast path needs integral d_psi(p) (quartic or trivial psi)")
    spf = _spf32(nmax)
    tab = dpsi_int_table(nmax, np.round(dp).astype(np.int64).astype(np.float64), q, spf)
    out = dpsi_over_sqrt_table(tab)
    _DPSI_CACHE[key] = out
    return out


@lru_cache(maxsize=2)
def _spf32(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
            spf[p * p :: p] = sl
    rest = np.nonzero(spf == 0)[0]
    spf[rest] = rest.astype(np.int32)
    spf[:2] = 0
    return spf


def _per_d_first_values(spec: FamilySpec, ds: np.ndarray) -> np.ndarray:
    """L(1/2, psi x chi_8d) for every d (one kernel pass)."""
    from ._fast import first_moment_kernel

    re_arr, im_arr = _psi_value_arrays(spec.psi.label, spec.q)
    step, tab = omega_table(1)
    spf = smallest_prime_factor(int(8 * ds[-1]) + 1)
    out_re, out_im = first_moment_kernel(
        ds.astype(np.int64), spec.q, re_arr, im_arr, spf, omega_threshold(1), step, tab
    )
    eps = _epsilon_const(spec)
    s_vals = out_re + 1j * out_im
    return s_vals + eps * np.conj(s_vals)


def _per_d_second_values(spec: FamilySpec, ds: np.ndarray) -> np.ndarray:
    """|L(1/2, psi x chi_8d)|^2 for every d (one kernel pass)."""
    from ._fast import second_moment_kernel

    xi2 = omega_threshold(2)
    nmax = int(xi2 * 8 * int(ds[-1]) * spec.q / math.pi) + 2
    dtab = _dpsi_over_sqrt(spec.psi, nmax)
    step, tab = omega_table(2)
    spf = smallest_prime_factor(int(8 * ds[-1]) + 1)
    return second_moment_kernel(
        ds.astype(np.int64), spec.q, dtab, spf, xi2, step, tab
    )


def _chi_l(ds: np.ndarray, l: int) -> np.ndarray:
    return np.array([kronecker(8 * int(d), l) for d in ds], dtype=np.float64)


def empirical_first_moment(
    spec: FamilySpec, weight: str = "mu2"
) -> tuple[complex, dict]:
    """(1/X) sum over the family of chi_8d(l) L(1/2, psi x chi_8d) Phi(d/X)."""
    Phi = phi_default()
    t0 = time.time()
    if spec.l % 2 == 0:
        return 0j, {"d_count": 0, "seconds": time.time() - t0}
    ds, wts = _family_d_and_weights(spec, weight)
    if len(ds) == 0:
        return 0j, {"d_count": 0, "seconds": time.time() - t0}
    l_vals = _per_d_first_values(spec, ds)
    terms = wts * _chi_l(ds, spec.l) * Phi(ds / spec.X) * l_vals
    total = complex(math.fsum(terms.real), math.fsum(terms.imag)) / spec.X
    return total, {"d_count": int(len(ds)), "seconds": time.time() - t0}


def empirical_second_moment(
    spec: FamilySpec, weight: str = "mu2"
) -> tuple[float, dict]:
    """(1/X) sum over the family of chi_8d(l) |L(1/2, psi x chi_8d)|^2 Phi(d/X)."""
    Phi = phi_default()
    t0 = time.time()
    if spec.l % 2 == 0:
        return 0.0, {"d_count": 0, "seconds": time.time() - t0}
    ds, wts = _family_d_and_weights(spec, weight)
    if len(ds) == 0:
        return 0.0, {"d_count": 0, "seconds": time.time() - t0}
    vals = _per_d_second_values(spec, ds)
    terms = wts * _chi_l(ds, spec.l) * Phi(ds / spec.X) * vals
    total = float(math.fsum(terms)) / spec.X
    return total, {"d_count": int(len(ds)), "seconds": time.time() - t0}


def empirical_moments_batch(
    spec: FamilySpec, ls: tuple[int, ...]
) -> dict[int, tuple[complex, float]]:
    """Both moments for several twist parameters l, sharing the kernel passes.

    The central values do not depend on l, so the X-sweep acceptance run pays
    for each family only once.
    """
    Phi = phi_default()
    ds = spec.d_values()
    out: dict[int, tuple[complex, float]] = {}
    if len(ds) == 0:
        return {l: (0j, 0.0) for l in ls}
    first = _per_d_first_values(spec, ds)
    second = _per_d_second_values(spec, ds)
    phiv = Phi(ds / spec.X)
    for l in ls:
        if l % 2 == 0:
            out[l] = (0j, 0.0)
            continue
        chi = _chi_l(ds, l)
        t1 = chi * phiv * first
        m1 = complex(math.fsum(t1.real), math.fsum(t1.imag)) / spec.X
        m2 = float(math.fsum(chi * phiv * second)) / spec.X
        out[l] = (m1, m2)
    return out


def _family_d_and_weights(spec: FamilySpec, weight: str):
    if weight == "mu2":
        ds = spec.d_values()
        return ds, np.ones(len(ds))
    if weight != "MY":
        raise ValueError("weight must be 'mu2' or 'MY'")
    lo = int(math.floor(spec.X)) + 1
    hi = int(math.ceil(2 * spec.X))
    ds, wts = [], []
    for d in range(lo, hi):
        if d % spec.r != spec.h % spec.r or not (spec.X < d < 2 * spec.X):
            continue
        if math.gcd(d, spec.q) != 1:
            continue
        my, _ = mobius_truncated(d, spec.Y)
        if my:
            ds.append(d)
            wts.append(my)
    return np.array(ds, dtype=np.int64), np.array(wts, dtype=np.float64)


# -- Poisson summation (the progression version) -------------------------------------


def poisson_lhs(
    h: int, r: int, X: float, Y: float, s: int, F: TestFunction | None = None
) -> float:
    """sum over d = h (mod r) of M_Y(d) (8d | s) F(d/X), directly."""
    if s % 2 == 0 or s < 1:
        raise ValueError("s must be an odd natural number")
    F = F or phi_default()
    lo = int(math.floor(X * F.support[0])) + 1
    hi = int(math.ceil(X * F.support[1]))
    total = []
    for d in range(lo, hi + 1):
        if d % r != h % r:
            continue
        my, _ = mobius_truncated(d, Y)
        if my == 0:
            continue
        total.append(my * kronecker(8 * d, s) * float(F(d / X)))
    return math.fsum(total)


def poisson_rhs(
    h: int,
    r: int,
    X: float,
    Y: float,
    s: int,
    F: TestFunction | None = None,
    tail_target: float = 1e-12,
) -> float:
    """The Poisson-summed form: the alpha sum against Gauss-type sums G_k(s)
    and hat F, with the k-sum truncated under a certified decay envelope."""
    if s % 2 == 0 or s < 1:
        raise ValueError("s must be an odd natural number")
    if math.gcd(r, s) != 1:
        raise ValueError("need gcd(r, s) = 1")
    F = F or phi_default()
    hat0 = float(fourier_hat(F, 0.0).real)
    alpha_max = int(min(math.sqrt(2 * X), Y))
    total = []
    for alpha in range(1, alpha_max + 1):
        if math.gcd(alpha, s) != 1:
            continue
        g = math.gcd(alpha * alpha, r)
        if h % g:
            continue
        R = r // g
        H = (mod_inverse(alpha * alpha // g, R) * (h // g)) % R if R > 1 else 0
        sbar = mod_inverse(s % R, R) if R > 1 else 0
        from .arith import mobius

        mu = mobius(alpha)
        if mu == 0:
            continue
        pref = (
            X
            / (r * s)
            * g
            * mu
            / alpha**2
            * kronecker(8 * R, s)
        )
        if pref == 0:
            continue
        u1 = g * X / (alpha * alpha * r * s)
        # k = 0 term
        acc = [G_formula(0, s) * hat0]
        # certified truncation: stop when |hat F| stays under floor three times
        floor = tail_target * max(abs(acc[0]), hat0) / (3 * s)
        below = 0
        k = 0
        while below < 3:
            k += 1
            if k > 100_000:
                raise TruncationError("k-sum tail cannot be certified")
            fk = fourier_hat(F, k * u1)
            if abs(fk) < floor:
                below += 1
            else:
                below = 0
            for sgn in (1, -1):
                kk = sgn * k
                gk = G_formula(kk, s)
                if gk == 0.0:
                    continue
                phase = np.exp(2j * np.pi * ((H * (kk % R) * sbar) % R) / R) if R > 1 else 1.0
                fhat = fk if sgn > 0 else fk.conjugate()
                acc.append(gk * float(np.real((1 + 1j) * fhat * phase)))
        total.append(pref * math.fsum(acc))
    return math.fsum(total)


# -- the error-bound envelopes ---------------------------------------------------------


def envelope_first(X: float, Y: float, l: int, r: int) -> float:
    """The first-moment error-bound shape at epsilon = 0."""
    return (
        l**1.5 * r * Y**2 / math.sqrt(X)
        + math.sqrt(l) / (r * X**0.25)
        + 1.0 / math.sqrt(Y)
    )


def envelope_second(X: float, Y: float, l: int, r: int) -> float:
    """The second-moment error-bound shape at epsilon = 0."""
    return (
        1.0 / (math.sqrt(l) * r * math.sqrt(X))
        + l * r**2 * Y / X**0.375
        + 1.0 / Y
        + 1.0 / (r**2 * Y)
    )
