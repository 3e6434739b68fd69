"""Numba kernels for the heavy inner loops.

Everything here is deterministic: parallel sections write disjoint per-d slots
and the reductions happen outside in a fixed order, so results are

bit-identical for any thread count.  Kernels are cached to disk on first use.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

F8 = np.float64


@njit(cache=True)
def kron_i64(a: int, n: int) -> int:
    """Kronecker symbol (a | n) for 64-bit inputs."""
    if n == 0:
        return 1 if (a == 1 or a == -1) else 0
    acc = 1
    if n < 0:
        n = -n
        if a < 0:
            acc = -acc
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        r = a % 8
        if r == 3 or r == 5:
            acc = -acc
    a %= n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            r = n % 8
            if r == 3 or r == 5:
                acc = -acc
        t = a
        a = n
        n = t
        if a % 4 == 3 and n % 4 == 3:
            acc = -acc
        a %= n
    if n == 1:
        return acc
    return 0


@njit(cache=True)
def chi_table(D: int, m: int, spf: np.ndarray) -> np.ndarray:
    """kronecker(D, i) for i = 0..m-1 as int8, via the completely
    multiplicative recursion chi(n) = chi(spf) chi(n/spf)."""
    out = np.zeros(m, dtype=np.int8)
    if m > 1:
        out[1] = 1
    for n in range(2, m):
        p = spf[n]
        if p == n:
            out[n] = kron_i64(D, n)
        else:
            out[n] = out[p] * out[n // p]
    return out


@njit(cache=True)
def dpsi_int_table(nmax: int, dp_of_res: np.ndarray, q: int, spf: np.ndarray) -> np.ndarray:
    """d_psi(n) for n = 0..nmax as int16.

    Valid when d_psi(p) is integral for every p (quartic or trivial psi);
    dp_of_res[p % q] supplies d_psi(p) = 2 Re psi(p).  Uses the prime-power
    recursion d(p^e) = d(p) d(p^{e-1}) - [p coprime q] d(p^{e-2}) through a
    largest-spf-power helper array.
    """
    d = np.zeros(nmax + 1, dtype=np.int16)
    ppow = np.zeros(nmax + 1, dtype=np.int64)  # spf-power part of n
    if nmax >= 1:
        d[1] = 1
        ppow[1] = 1
    for n in range(2, nmax + 1):
        p = spf[n]
        m = n // p
        if m % p == 0:
            pe = ppow[m] * p
        else:
            pe = p
        ppow[n] = pe
        rest = n // pe
        if rest > 1:
            d[n] = d[rest] * d[pe]
        else:
            # n = p^e is a pure prime power
            if pe == p:
                d[n] = dp_of_res[p % q]
            else:
                unit = 0 if (q > 1 and p == q) else 1
                d[n] = dp_of_res[p % q] * d[n // p] - unit * d[n // (p * p)]
    return d


@njit(cache=True)
def g4k_over_n(
    k4: int, l: int, nmax: int, spf: np.ndarray, sqrt_tab: np.ndarray
) -> np.ndarray:
    """G_{k4}(l n) for n = 1..nmax (float64; index 0 unused).

    sqrt_tab[p] = sqrt(p) for primes p <= nmax (0 elsewhere).  l's prime
    factorization is folded into each n's on the fly.
    """
    out = np.zeros(nmax + 1, dtype=F8)
    # prime factors of l
    lps = np.zeros(16, dtype=np.int64)
    les = np.zeros(16, dtype=np.int64)
    nl = 0
    ll = l
    pp = 3
    while ll % 2 == 0:  # l odd in all uses, but stay safe
        ll //= 2
    p = 2
    while ll > 1:
        if spf.shape[0] > ll:
            p = spf[ll]
        else:
            p = ll
        e = 0
        while ll % p == 0:
            ll //= p
            e += 1
        lps[nl] = p
        les[nl] = e
        nl += 1
    for n in range(1, nmax + 1):
        val = 1.0
        m = n
        # exponents of primes of n, merged with l
        while m > 1 and val != 0.0:
            p = spf[m]
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            for i in range(nl):
                if lps[i] == p:
                    e += les[i]
            val *= _g_pp(k4, p, e, sqrt_tab)
        if val != 0.0:
            for i in range(nl):
                p = lps[i]
                if n % p != 0:
                    val *= _g_pp(k4, p, les[i], sqrt_tab)
        out[n] = val
    return out


@njit(cache=True)
def _g_pp(k: int, p: int, beta: int, sqrt_tab: np.ndarray) -> float:
    if beta == 0:
        return 1.0
    if k == 0:
        if beta % 2 == 0:
            return float(p ** (beta - 1) * (p - 1))
        return 0.0
    alpha = 0
    kk = k
    while kk % p == 0:
        kk //= p
        alpha += 1
    if beta <= alpha:
        if beta % 2 == 0:
            return float(p ** (beta - 1) * (p - 1))
        return 0.0
    if beta == alpha + 1:
        if beta % 2 == 0:
            return -float(p**alpha)
        return kron_i64(kk, p) * p**alpha * sqrt_tab[p]
    return 0.0


@njit(cache=True, parallel=True)
def first_moment_kernel(
    ds: np.ndarray,
    q: int,
    psi_re: np.ndarray,
    psi_im: np.ndarray,
    spf: np.ndarray,
    xi1_star: float,
    om1_step: float,
    om1_tab: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-d values S_d = sum_n chi_8d(n) psi(n) n^-1/2
    omega_1(n sqrt(pi/(8 d q))); twist factors chi_8d(l) and the
    eps(h)-conjugate pairing are applied outside.

    Returns (real parts, imaginary parts), one slot per d (deterministic).
    """
    nd = ds.shape[0]
    out_re = np.zeros(nd, dtype=F8)
    out_im = np.zeros(nd, dtype=F8)
    inv_step = 1.0 / om1_step
    top = om1_tab.shape[0] - 2
    for j in prange(nd):
        d = ds[j]
        m8d = 8 * d
        c = np.sqrt(np.pi / (m8d * q))
        nmax = int(xi1_star / c) + 1
        # chi_8d values on one period via multiplicative recursion
        chi = np.zeros(m8d, dtype=np.int8)
        chi[1] = 1
        for n in range(2, m8d):
            p = spf[n]
            if p == n:
                chi[n] = kron_i64(m8d, n)
            else:
                chi[n] = chi[p] * chi[n // p]
        acc_re = 0.0
        acc_im = 0.0
        comp_re = 0.0
        comp_im = 0.0
        for n in range(1, nmax + 1):
            cn = chi[n % m8d]
            if cn == 0:
                continue
            xi = n * c
            idx = int(xi * inv_step)
            if idx > top:
                break
            frac = xi * inv_step - idx
            w = om1_tab[idx] + frac * (om1_tab[idx + 1] - om1_tab[idx])
            base = cn * w / np.sqrt(n)
            res = n % q if q > 1 else 0
            tr = base * psi_re[res]
            ti = base * psi_im[res]
            # Kahan accumulation
            y = tr - comp_re
            t = acc_re + y
            comp_re = (t - acc_re) - y
            acc_re = t
            y = ti - comp_im
            t = acc_im + y
            comp_im = (t - acc_im) - y
            acc_im = t
        out_re[j] = acc_re
        out_im[j] = acc_im
    return out_re, out_im


@njit(cache=True, parallel=True)
def second_moment_kernel(
    ds: np.ndarray,
    q: int,
    dpsi_over_sqrt: np.ndarray,
    spf: np.ndarray,
    xi2_star: float,
    om2_step: float,
    om2_tab: np.ndarray,
) -> np.ndarray:
    """Per-d values |L(1/2, psi x chi_8d)|^2 by the omega_2 series; the
    twist factor chi_8d(l) is applied outside.

    dpsi_over_sqrt[n] = d_psi(n) / sqrt(n) must cover n up to
    xi2_star * 8 * max(d) * q / pi.
    """
    nd = ds.shape[0]
    out = np.zeros(nd, dtype=F8)
    inv_step = 1.0 / om2_step
    top = om2_tab.shape[0] - 2
    for j in prange(nd):
        d = ds[j]
        m8d = 8 * d
        c = np.pi / (m8d * q)
        nmax = int(xi2_star / c) + 1
        if nmax >= dpsi_over_sqrt.shape[0]:
            nmax = dpsi_over_sqrt.shape[0] - 1
        chi = np.zeros(m8d, dtype=np.int8)
        chi[1] = 1
        for n in range(2, m8d):
            p = spf[n]
            if p == n:
                chi[n] = kron_i64(m8d, n)
            else:
                chi[n] = chi[p] * chi[n // p]
        # indices of the nonzero residues, to skip the zero half fast
        nnz = 0
        for i in range(m8d):
            if chi[i] != 0:
                nnz += 1
        idxs = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        t = 0
        for i in range(m8d):
            if chi[i] != 0:
                idxs[t] = i
                vals[t] = chi[i]
                t += 1
        acc = 0.0
        comp = 0.0
        base_n = 0
        while base_n <= nmax:
            for ii in range(nnz):
                n = base_n + idxs[ii]
                if n < 1 or n > nmax:
                    continue
                xi = n * c
                idx = int(xi * inv_step)
                if idx > top:
                    break
                frac = xi * inv_step - idx
                w = om2_tab[idx] + frac * (om2_tab[idx + 1] - om2_tab[idx])
                term = vals[ii] * dpsi_over_sqrt[n] * w
                y = term - comp
                tt = acc + y
                comp = (tt - acc) - y
                acc = tt
            base_n += m8d
        out[j] = 2.0 * acc
    return out


@njit(cache=True)
def dpsi_over_sqrt_table(dpsi: np.ndarray) -> np.ndarray:
    out = np.zeros(dpsi.shape[0], dtype=F8)
    for n in range(1, dpsi.shape[0]):
        out[n] = dpsi[n] / np.sqrt(n)
    return out
