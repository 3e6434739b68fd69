"""Dirichlet characters mod N with exact root-of-unity values.

A character is stored as an exponent vector over fixed generators of the unit
group (least primitive roots for odd prime powers, {-1, 5} for powers of two).
Values are integer exponents into the M-th roots of unity, M the exponent of
the unit group; only the final complex embedding uses floating point, so
orthogonality sums cancel exactly at the exponent level.

Also provides Gauss sums tau(chi), the twisted divisor function, the
root-number factor eps(h) for the twisted central values, and the character
expansion inner products on Z/rZ used to split r-periodic trigonometric
functions into characters.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith import euler_phi, factorize, kronecker, mod_inverse

TWO_PI = 2.0 * math.pi


def _primitive_root_mod_pp(p: int, a: int) -> int:
    """Least primitive root mod p, lifted to p**a."""
    phi_p = p - 1
    qs = [q for q, _ in factorize(phi_p).factors]
    g = 2
    while True:
        if all(pow(g, phi_p // q, p) != 1 for q in qs):
            break
        g += 1
    if a > 1 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


class _Component:
    """One cyclic factor of the unit group, with its discrete-log table."""

    __slots__ = ("pp", "gen", "order", "dlog")

    def __init__(self, pp: int, gen: int, order: int, dlog: np.ndarray):
        self.pp = pp
        self.gen = gen
        self.order = order
        self.dlog = dlog


@lru_cache(maxsize=256)
def character_group(N: int) -> "CharacterGroup":
    return CharacterGroup(N)


class CharacterGroup:
    """Unit group (Z/N)^x decomposed into cyclic components with dlog tables."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("modulus must be positive")
        self.N = N
        comps: list[_Component] = []
        self._two_pair = False  # True when 2^e (e>=3) contributes two components
        fac = factorize(N).factors
        for p, a in fac:
            pp = p**a
            if p == 2:
                if a == 1:
                    continue
                if a == 2:
                    dlog = np.full(4, -1, dtype=np.int64)
                    dlog[1], dlog[3] = 0, 1
                    comps.append(_Component(4, 3, 2, dlog))
                else:
                    m5 = pp // 4
                    dlog_eps = np.full(pp, -1, dtype=np.int64)
                    dlog_five = np.full(pp, -1, dtype=np.int64)
                    for eps in (0, 1):
                        x = pp - 1 if eps else 1
                        for k in range(m5):
                            dlog_eps[x] = eps
                            dlog_five[x] = k
                            x = (x * 5) % pp
                    comps.append(_Component(pp, pp - 1, 2, dlog_eps))
                    comps.append(_Component(pp, 5, m5, dlog_five))
                    self._two_pair = True
            else:
                g = _primitive_root_mod_pp(p, a)
                m = pp // p * (p - 1)
                dlog = np.full(pp, -1, dtype=np.int64)
                x = 1
                for k in range(m):
                    dlog[x] = k
                    x = (x * g) % pp
                comps.append(_Component(pp, g, m, dlog))
        self.components = tuple(comps)
        self.orders = tuple(c.order for c in comps)
        self.M = math.lcm(*self.orders) if comps else 1
        self.phi = euler_phi(N)
        assert math.prod(self.orders) == self.phi if comps else self.phi == 1

    def dlogs(self, n: int):
        """Per-component discrete logs of n, or None if gcd(n, N) > 1."""
        if self.N == 1:
            return ()
        n %= self.N
        if math.gcd(n, self.N) != 1:
            return None
        out = []
        for c in self.components:
            d = int(c.dlog[n % c.pp])
            if d < 0:
                return None
            out.append(d)
        return tuple(out)

    def generators(self) -> list[int]:
        """Units mod N mapping to each component's generator (1 elsewhere).

        The two components of a 2^e part (e >= 3) share a prime power; the
        generator element of one is the identity of the other, so setting the
        shared residue to the component's own generator is consistent.
        """
        distinct_pp = sorted({c.pp for c in self.components})
        gens = []
        for c in self.components:
            by_pp = {pp: 1 for pp in distinct_pp}
            by_pp[c.pp] = c.gen
            gens.append(_crt(sorted(by_pp.items()), self.N))
        return gens


def _crt(residues: list[tuple[int, int]], N: int) -> int:
    """CRT over pairwise-coprime prime-power moduli (shared pp entries must agree)."""
    x, m = 0, 1
    seen = {}
    for pp, r in residues:
        if pp in seen:
            if seen[pp] % pp != r % pp:
                raise ValueError("inconsistent CRT data")
            continue
        seen[pp] = r
        inv = mod_inverse(m % pp, pp)
        x = x + m * ((r - x) * inv % pp)
        m *= pp
    # moduli of N with trivial unit group (2^1) carry no component
    rem = N // m
    if rem > 1:
        inv = mod_inverse(m % rem, rem)
        x = x + m * ((1 - x) * inv % rem)
        m *= rem
    return x % N


class DirichletCharacter:
    """Character mod N given by exponents against the group generators."""

    __slots__ = ("group", "exponents", "_values")

    def __init__(self, group: CharacterGroup, exponents: tuple[int, ...]):
        if len(exponents) != len(group.components):
            raise ValueError("exponent vector length mismatch")
        self.group = group
        self.exponents = tuple(
            e % c.order for e, c in zip(exponents, group.components)
        )
        self._values = None

    # -- identity and algebra -------------------------------------------------

    @property
    def modulus(self) -> int:
        return self.group.N

    @property
    def label(self) -> tuple[int, tuple[int, ...]]:
        return (self.group.N, self.exponents)

    def __eq__(self, other):
        return (
            isinstance(other, DirichletCharacter) and self.label == other.label
        )

    def __hash__(self):
        return hash(self.label)

    def __repr__(self):
        return f"DirichletCharacter(mod {self.group.N}, exponents={self.exponents})"

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.group.N != self.group.N:
            raise ValueError("multiply characters of equal modulus (lift first)")
        return DirichletCharacter(
            self.group,
            tuple(a + b for a, b in zip(self.exponents, other.exponents)),
        )

    def __pow__(self, k: int) -> "DirichletCharacter":
        return DirichletCharacter(self.group, tuple(k * e for e in self.exponents))

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.group, tuple(-e for e in self.exponents))

    def is_principal(self) -> bool:
        return all(e == 0 for e in self.exponents)

    # -- evaluation ------------------------------------------------------------

    def exponent_of(self, n: int):
        """Exact exponent t with chi(n) = e(t / M), or None when gcd(n, N) > 1."""
        dl = self.group.dlogs(n)
        if dl is None:
            return None
        M = self.group.M
        t = 0
        for e, d, c in zip(self.exponents, dl, self.group.components):
            t += e * d * (M // c.order)
        return t % M

    def __call__(self, n: int) -> complex:
        t = self.exponent_of(n)
        if t is None:
            return 0j
        return cmath.exp(2j * math.pi * t / self.group.M)

    def values(self) -> np.ndarray:
        """chi(a) for a = 0..N-1, complex array (cached)."""
        if self._values is None:
            N = self.group.N
            vals = np.zeros(N if N > 1 else 1, dtype=np.complex128)
            if N == 1:
                vals[0] = 1.0
            else:
                M = self.group.M
                for a in range(N):
                    t = self.exponent_of(a)
                    if t is not None:
                        vals[a] = cmath.exp(2j * math.pi * t / M)
            self._values = vals
        return self._values

    def value_array(self, ns: np.ndarray) -> np.ndarray:
        """Vectorized chi(n) over an integer array."""
        return self.values()[np.asarray(ns) % max(self.group.N, 1)]


def principal_character(N: int) -> DirichletCharacter:
    g = character_group(N)
    return DirichletCharacter(g, (0,) * len(g.components))


def enumerate_characters(N: int) -> list[DirichletCharacter]:
    """All phi(N) characters mod N, in lexicographic exponent order."""
    g = character_group(N)
    chars = [DirichletCharacter(g, ())] if not g.components else []
    if g.components:
        import itertools

        for tup in itertools.product(*(range(c.order) for c in g.components)):
            chars.append(DirichletCharacter(g, tup))
    return chars


@dataclass(frozen=True)
class CharacterInfo:
    is_even: bool
    order: int
    is_primitive: bool
    conductor: int


def classify(chi: DirichletCharacter) -> CharacterInfo:
    g = chi.group
    order = 1
    for e, c in zip(chi.exponents, g.components):
        order = math.lcm(order, c.order // math.gcd(e, c.order))
    t = chi.exponent_of(g.N - 1) if g.N > 1 else 0  # chi(-1) = e(t/M) is +-1
    is_even = t == 0
    cond = _conductor(chi)
    return CharacterInfo(is_even, order, cond == g.N, cond)


def _conductor(chi: DirichletCharacter) -> int:
    g = chi.group
    cond = 1
    i = 0
    fac = factorize(g.N).factors
    for p, a in fac:
        if p == 2:
            if a == 1:
                continue
            if a == 2:
                e = chi.exponents[i]
                i += 1
                if e % 2:
                    cond *= 4
            else:
                eps = chi.exponents[i] % 2
                k = chi.exponents[i + 1] % g.components[i + 1].order
                i += 2
                if k:
                    t5 = g.components[i - 1].order // math.gcd(k, g.components[i - 1].order)
                    cond *= 2 ** (t5.bit_length() - 1 + 2)
                elif eps:
                    cond *= 4
        else:
            c = g.components[i]
            e = chi.exponents[i]
            i += 1
            t = c.order // math.gcd(e, c.order)
            if t > 1:
                ppart = 1
                tt = t
                while tt % p == 0:
                    tt //= p
                    ppart += 1
                cond *= p**ppart
    return cond


def _unit_rep(x: int, m: int, N: int) -> int:
    """A residue congruent to x mod m and coprime to N (m | N not required)."""
    for k in range(N + 1):
        c = x + k * m
        if math.gcd(c, N) == 1:
            return c % N if N > 1 else 1
    raise ValueError("no unit representative found")


def induce_primitive(chi: DirichletCharacter) -> DirichletCharacter:
    """The primitive character of modulus cond(chi) inducing chi."""
    cond = _conductor(chi)
    if cond == chi.group.N:
        return chi
    tgt = character_group(cond)
    exps = []
    for gen, c in zip(tgt.generators(), tgt.components):
        u = _unit_rep(gen, cond, chi.group.N)
        t = chi.exponent_of(u)
        e = t * c.order
        assert e % chi.group.M == 0
        exps.append(e // chi.group.M)
    return DirichletCharacter(tgt, tuple(exps))


def to_modulus(chi: DirichletCharacter, N: int) -> DirichletCharacter:
    """Realize chi as a character of modulus N (cond(chi) must divide N)."""
    if N == chi.group.N:
        return chi
    cond = _conductor(chi)
    if N % cond != 0:
        raise ValueError(f"conductor {cond} does not divide target modulus {N}")
    src = chi if N % chi.group.N == 0 else induce_primitive(chi)
    tgt = character_group(N)
    exps = []
    for gen, c in zip(tgt.generators(), tgt.components):
        t = src.exponent_of(gen % src.group.N) if src.group.N > 1 else 0
        if t is None:
            raise ValueError("generator not coprime to source modulus")
        e = t * c.order
        if e % src.group.M:
            raise ValueError("exponent not integral")
        exps.append(e // src.group.M)
    return DirichletCharacter(tgt, tuple(exps))


def kronecker_character(D: int, N: int) -> DirichletCharacter:
    """The map n -> kronecker(D, n) realized as a character mod N.

    Raises if the map does not define a character of modulus N (sampled check).
    """
    g = character_group(N)
    exps = []
    for gen, c in zip(g.generators(), g.components):
        v = kronecker(D, gen)
        if v == 1:
            exps.append(0)
        elif v == -1:
            if c.order % 2:
                raise ValueError(f"kronecker({D}, .) is not a character mod {N}")
            exps.append(c.order // 2)
        else:
            raise ValueError("generator shares a factor with D")
    chi = DirichletCharacter(g, tuple(exps))
    check = range(1, N) if N <= 2048 else range(1, N, max(1, N // 512))
    for n in check:
        if math.gcd(n, N) == 1 and abs(chi(n) - kronecker(D, n)) > 1e-9:
            raise ValueError(f"kronecker({D}, .) is not periodic mod {N}")
    return chi


# -- Gauss sums, divisor twists, epsilon ---------------------------------------


def tau(chi: DirichletCharacter) -> complex:
    """Gauss sum sum_a chi(a) e(a/N) by direct summation."""
    N = chi.group.N
    if N == 1:
        return 1.0 + 0j
    a = np.arange(N)
    return complex(np.sum(chi.values() * np.exp(2j * np.pi * a / N)))


def twisted_divisor(psi: DirichletCharacter, n: int) -> complex:
    """d_psi(n) = sum over d | n of psi(d) * conj(psi)(n/d); real-valued."""
    fac = factorize(n)
    out = 1.0 + 0j
    for p, e in fac.factors:
        v = psi(p)
        loc = sum(v**j * v.conjugate() ** (e - j) for j in range(e + 1))
        out *= loc
    return complex(out)


def epsilon_factor(psi: DirichletCharacter, h: int, q: int) -> complex:
    """eps(h) = tau(psi)/sqrt(q) * psi(8h) * kronecker(8h, q); unit modulus."""
    if psi.group.N != q:
        raise ValueError("psi must have modulus q")
    if math.gcd(8 * h, q) != 1:
        raise ValueError("need gcd(8h, q) = 1")
    return tau(psi) / math.sqrt(q) * psi(8 * h) * kronecker(8 * h, q)


# -- character expansions on Z/rZ ----------------------------------------------


def trig_expansion_coefficient(
    kind: str, k: int, r: int, phi: DirichletCharacter
) -> complex:
    """<trig(2 pi k . / r), conj(phi)> = sum_a trig(2 pi k a / r) phi(a)."""
    if phi.group.N != r:
        raise ValueError("phi must have modulus r")
    a = np.arange(max(r, 1))
    ang = TWO_PI * ((k * a) % r) / r if r > 1 else np.zeros(1)
    f = np.cos(ang) if kind == "cos" else np.sin(ang)
    return complex(np.sum(f * phi.values()))


def trig_reconstruct(kind: str, k: int, r: int, a: int) -> complex:
    """Rebuild trig(2 pi k a / r) at a unit a from its character expansion."""
    chars = enumerate_characters(r)
    tot = 0j
    for phi in chars:
        tot += trig_expansion_coefficient(kind, k, r, phi) * np.conj(phi(a))
    return tot / euler_phi(r)


def exp_inner_product_direct(k: int, r: int, psi: DirichletCharacter) -> complex:
    """sum_a e(k^2 a / r) [phi0 * conj(psi) * chi_{r/2}](a) over a mod r."""
    chi = _psi_bar_chi_half(r, psi)  # primitive mod r/2 (or mod 1)
    a = np.arange(r)
    phase = np.exp(2j * np.pi * ((k * k % r) * a % r) / r)
    vals = chi.value_array(a) if chi.group.N > 1 else np.ones(r, dtype=complex)
    # restrict to units mod r (the principal factor phi0)
    unit = np.array([math.gcd(int(x), r) == 1 for x in a])
    return complex(np.sum(phase[unit] * vals[unit]))


def exp_inner_product_closed_form(k: int, r: int, psi: DirichletCharacter) -> complex:
    """(-1)^k [conj(psi) chi_{r/2}](2 k^2) tau(conj(psi) chi_{r/2})."""
    chi = _psi_bar_chi_half(r, psi)
    return (-1) ** k * chi(2 * k * k) * tau(chi)


def _psi_bar_chi_half(r: int, psi: DirichletCharacter) -> DirichletCharacter:
    if r % 2:
        raise ValueError("r must be even")
    m = r // 2
    if m == 1:
        return principal_character(1)
    chi_half = kronecker_character(m, m)
    psi_m = to_modulus(psi.conj(), m)
    return psi_m * chi_half


def find_character(N: int, order: int | None = None, even: bool | None = None,
                   primitive: bool | None = None) -> DirichletCharacter:
    """First character (smallest exponent label) matching the predicate."""
    for chi in enumerate_characters(N):
        info = classify(chi)
        if order is not None and info.order != order:
            continue
        if even is not None and info.is_even != even:
            continue
        if primitive is not None and info.is_primitive != primitive:
            continue
        return chi
    raise ValueError(f"no character mod {N} with the requested properties")
