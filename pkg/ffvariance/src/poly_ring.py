#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PolyRing - F_q[T] の多項式演算と算術関数

環演算、モニック多項式の列挙、既約性判定と因数分解、
von Mangoldt 関数 Λ・Möbius 関数 μ・Euler 関数 φ・ω、素数定理、
および対合 X* = T^{deg X} X(1/T) を提供します。
係数は finite_field のコード（定数項が先頭）で保持します。
"""

import logging
import random
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import PreconditionError, VerificationError, check_budget
from finite_field import FieldElement, FiniteField

DEFAULT_MONIC_BUDGET = 10 ** 8
FACTOR_SEED = 0

logger = logging.getLogger(__name__)

Coeffs = Tuple[int, ...]


# ---- 係数タプル上の低レベル演算 ----

def _trim(c: Sequence[int]) -> Coeffs:
    n = len(c)
    while n and c[n - 1] == 0:
        n -= 1
    return tuple(c[:n])


def _add(F: FiniteField, a: Coeffs, b: Coeffs) -> Coeffs:
    if len(a) < len(b):
        a, b = b, a
    res = list(a)
    if F.r == 1:
        p = F.p
        for i, x in enumerate(b):
            res[i] = (res[i] + x) % p
    else:
        for i, x in enumerate(b):
            res[i] = F.add(res[i], x)
    return _trim(res)


def _neg(F: FiniteField, a: Coeffs) -> Coeffs:
    return tuple(F.neg(x) for x in a)


def _scale(F: FiniteField, a: Coeffs, c: int) -> Coeffs:
    if c == 0:
        return ()
    return tuple(F.mul(x, c) for x in a)


def _mul(F: FiniteField, a: Coeffs, b: Coeffs) -> Coeffs:
    if not a or not b:
        return ()
    res = [0] * (len(a) + len(b) - 1)
    if F.r == 1:
        p = F.p
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    res[i + j] += x * y
        return _trim([v % p for v in res])
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    res[i + j] = F.add(res[i + j], F.mul(x, y))
    return _trim(res)


def _divmod(F: FiniteField, a: Coeffs, b: Coeffs) -> Tuple[Coeffs, Coeffs]:
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    db = len(b) - 1
    if len(a) <= db:
        return (), _trim(a)
    inv_lead = F.inv(b[-1])
    rem = list(a)
    quot = [0] * (len(a) - db)
    if F.r == 1:
        p = F.p
        for k in range(len(a) - 1, db - 1, -1):
            c = rem[k]
            if c:
                c = (c * inv_lead) % p
                quot[k - db] = c
                base = k - db
                for j in range(db + 1):
                    rem[base + j] = (rem[base + j] - c * b[j]) % p
    else:
        for k in range(len(a) - 1, db - 1, -1):
            c = rem[k]
            if c:
                c = F.mul(c, inv_lead)
                quot[k - db] = c
                base = k - db
                for j in range(db + 1):
                    rem[base + j] = F.sub(rem[base + j], F.mul(c, b[j]))
    return _trim(quot), _trim(rem[:db])


def reduce_coeffs(F: FiniteField, a: Coeffs, m: Coeffs) -> Coeffs:
    """係数タプルのまま a mod m を計算（表構築などの内側ループ用）"""
    return _divmod(F, a, m)[1]


def mulmod_coeffs(F: FiniteField, a: Coeffs, b: Coeffs, m: Coeffs) -> Coeffs:
    return _divmod(F, _mul(F, a, b), m)[1]


# ---- Poly ----

@dataclass(frozen=True, eq=False)
class Poly:
    """
    F_q[T] の元

    Attributes:
        field: 係数体
        coeffs: 係数コード（定数項が先頭、末尾の 0 なし。空タプルは零多項式）
    """

    field: FiniteField
    coeffs: Coeffs = ()

    def __post_init__(self):
        F = self.field
        raw = []
        for c in self.coeffs:
            if isinstance(c, FieldElement):
                c = c.value
            c = int(c)
            if F.r == 1:
                c %= F.p
            elif not 0 <= c < F.q:
                raise PreconditionError(f"coefficient code {c} outside F_{F.q}")
            raw.append(c)
        object.__setattr__(self, "coeffs", _trim(raw))

    # ---- 構築 ----

    @classmethod
    def zero(cls, F: FiniteField) -> "Poly":
        return cls(F, ())

    @classmethod
    def one(cls, F: FiniteField) -> "Poly":
        return cls(F, (1,))

    @classmethod
    def constant(cls, F: FiniteField, c: Union[int, FieldElement]) -> "Poly":
        return cls(F, (c,))

    @classmethod
    def monomial(cls, F: FiniteField, k: int, c: Union[int, FieldElement] = 1) -> "Poly":
        return cls(F, (0,) * k + (c,))

    @classmethod
    def T(cls, F: FiniteField) -> "Poly":
        return cls.monomial(F, 1)

    # ---- 基本属性 ----

    @property
    def degree(self) -> int:
        """次数（零多項式は -1）"""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def constant_term(self) -> int:
        return self.coeffs[0] if self.coeffs else 0

    @property
    def norm(self) -> int:
        """|f| = q^{deg f}（零多項式は 0）"""
        return self.field.q ** self.degree if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return self.coeffs == (1,)

    def is_monic(self) -> bool:
        return self.leading == 1

    def monic(self) -> "Poly":
        if not self.coeffs or self.leading == 1:
            return self
        return Poly(self.field, _scale(self.field, self.coeffs, self.field.inv(self.leading)))

    def coefficient(self, i: int) -> FieldElement:
        return FieldElement(self.field, self.coeffs[i] if 0 <= i < len(self.coeffs) else 0)

    def sort_key(self) -> Tuple:
        """(次数, 係数タプルの辞書式) による決定的な並び順"""
        F = self.field
        if F.r == 1:
            return (self.degree, self.coeffs)
        return (self.degree, tuple(F.to_coeffs(c) for c in self.coeffs))

    # ---- 演算子 ----

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.field != self.field:
                raise PreconditionError("polynomials over different fields")
            return other
        if isinstance(other, (int, FieldElement)):
            return Poly.constant(self.field, other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.field.p, self.field.r, self.field.modulus, self.coeffs))

    def __add__(self, other):
        other = self._coerce(other)
        return Poly(self.field, _add(self.field, self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.field, _neg(self.field, self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        return Poly(self.field, _add(self.field, self.coeffs, _neg(self.field, other.coeffs)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return Poly(self.field, _mul(self.field, self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __divmod__(self, other):
        other = self._coerce(other)
        q, r = _divmod(self.field, self.coeffs, other.coeffs)
        return Poly(self.field, q), Poly(self.field, r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __pow__(self, e: int):
        if e < 0:
            raise PreconditionError("negative polynomial exponent")
        result, base = (1,), self.coeffs
        while e:
            if e & 1:
                result = _mul(self.field, result, base)
            base = _mul(self.field, base, base)
            e >>= 1
        return Poly(self.field, result)

    def __call__(self, x: Union[int, FieldElement]) -> FieldElement:
        """Horner 法による x での値"""
        F = self.field
        x = x.value if isinstance(x, FieldElement) else int(x)
        acc = 0
        for c in reversed(self.coeffs):
            acc = F.add(F.mul(acc, x), c)
        return FieldElement(F, acc)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)})"

    def __str__(self) -> str:
        return format_poly(self)


@dataclass(frozen=True)
class Factorization:
    """単元 × モニック既約多項式の冪の積"""

    unit: FieldElement
    factors: Tuple[Tuple[Poly, int], ...]

    @property
    def primes(self) -> List[Poly]:
        return [P for P, _ in self.factors]

    def expand(self) -> Poly:
        F = self.unit.field
        result = Poly.constant(F, self.unit)
        for P, e in self.factors:
            result = result * P ** e
        return result

    def to_dict(self) -> Dict:
        return {
            "unit": repr(self.unit),
            "factors": [{"prime": format_coeffs(P), "exponent": e} for P, e in self.factors],
        }


# ---- Euclid 系 ----

def euclidean_division(a: Poly, b: Poly) -> Tuple[Poly, Poly]:
    """
    a = quotient·b + remainder（deg remainder < deg b）

    Args:
        a: 被除数
        b: 除数（非零）

    Returns:
        (quotient, remainder)
    """
    if a.field != b.field:
        raise PreconditionError("polynomials over different fields")
    if b.is_zero():
        raise PreconditionError("division by zero polynomial")
    return divmod(a, b)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """モニック最大公約多項式（両方零なら零）"""
    F = a.field
    x, y = a.coeffs, b.coeffs
    while y:
        x, y = y, _divmod(F, x, y)[1]
    return Poly(F, x).monic()


def poly_ext_gcd(a: Poly, b: Poly) -> Tuple[Poly, Poly, Poly]:
    """s·a + t·b = g（g はモニック gcd）となる (g, s, t)"""
    F = a.field
    r0, r1 = a, b
    s0, s1 = Poly.one(F), Poly.zero(F)
    t0, t1 = Poly.zero(F), Poly.one(F)
    while not r1.is_zero():
        quo, rem = divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 - quo * s1
        t0, t1 = t1, t0 - quo * t1
    if r0.is_zero():
        return r0, s0, t0
    inv = F.inv(r0.leading)
    return r0 * inv, s0 * inv, t0 * inv


def poly_inverse_mod(a: Poly, m: Poly) -> Poly:
    """a の m を法とする逆元"""
    g, s, _ = poly_ext_gcd(a % m, m)
    if not g.is_one():
        raise PreconditionError(f"not a unit: {format_poly(a)} modulo {format_poly(m)}")
    return s % m


def poly_pow_mod(base: Poly, e: int, mod: Poly) -> Poly:
    """base^e mod mod（二進冪）"""
    F = base.field
    m = mod.coeffs
    result: Coeffs = _divmod(F, (1,), m)[1]
    b = _divmod(F, base.coeffs, m)[1]
    while e:
        if e & 1:
            result = _divmod(F, _mul(F, result, b), m)[1]
        e >>= 1
        if e:
            b = _divmod(F, _mul(F, b, b), m)[1]
    return Poly(F, result)


def derivative(f: Poly) -> Poly:
    F = f.field
    coeffs = []
    for i, c in enumerate(f.coeffs[1:], start=1):
        k = i % F.p
        coeffs.append(F.mul(c, k) if k else 0)
    return Poly(F, coeffs)


def is_squarefree(f: Poly) -> bool:
    if f.is_zero():
        raise PreconditionError("zero polynomial is not square-free")
    if f.degree < 1:
        return True
    d = derivative(f)
    if d.is_zero():
        return False
    return poly_gcd(f, d).is_one()


# ---- 既約性と因数分解 ----

def is_irreducible(f: Poly) -> bool:
    """
    既約性判定（i ≤ deg f / 2 について gcd(f, T^{q^i} - T) を調べる）

    Args:
        f: 次数 1 以上の多項式

    Returns:
        非定数の真の因子を持たなければ True
    """
    if f.degree < 1:
        raise PreconditionError(f"degree zero: {format_poly(f)} is constant")
    n = f.degree
    if n == 1:
        return True
    g = f.monic()
    x = Poly.T(f.field) % g
    h = x
    for _ in range(1, n // 2 + 1):
        h = poly_pow_mod(h, f.field.q, g)
        if poly_gcd(g, h - x).degree > 0:
            return False
    return True


def _pth_root(f: Poly) -> Poly:
    """f' = 0 の多項式の p 乗根"""
    F = f.field
    p, e = F.p, F.q // F.p
    coeffs = [F.pow(f.coeffs[i], e) for i in range(0, len(f.coeffs), p)]
    return Poly(F, coeffs)


def _squarefree_decomposition(f: Poly) -> List[Tuple[Poly, int]]:
    """モニック f を互いに素な平方因子なし部分と重複度に分解"""
    result = []
    mult = 1
    F = f.field
    while f.degree > 0:
        d = derivative(f)
        if not d.is_zero():
            g = poly_gcd(f, d)
            h = f // g
            i = 1
            while h.degree > 0:
                G = poly_gcd(g, h)
                H = h // G
                if H.degree > 0:
                    result.append((H, i * mult))
                g = g // G
                h = G
                i += 1
            f = g
            if f.degree <= 0:
                break
        f = _pth_root(f)
        mult *= F.p
    return result


def _distinct_degree(f: Poly) -> List[Tuple[Poly, int]]:
    """平方因子なしモニック f を同次数の既約因子の積に分ける"""
    F = f.field
    result = []
    i = 1
    x = Poly.T(F) % f
    h = x
    while 2 * i <= f.degree:
        h = poly_pow_mod(h, F.q, f)
        g = poly_gcd(f, h - x)
        if g.degree > 0:
            result.append((g, i))
            f = f // g
            h = h % f
            x = Poly.T(F) % f
        i += 1
    if f.degree > 0:
        result.append((f, f.degree))
    return result


def _equal_degree(f: Poly, d: int, rng: random.Random) -> List[Poly]:
    """次数 d の既約因子の積 f を分解（Cantor–Zassenhaus、p = 2 ではトレース写像）"""
    n = f.degree
    if n == d:
        return [f]
    F = f.field
    while True:
        A = Poly(F, [rng.randrange(F.q) for _ in range(n)])
        if A.degree < 1:
            continue
        if F.p == 2:
            t = A % f
            b = t
            for _ in range(F.r * d - 1):
                t = (t * t) % f
                b = b + t
        else:
            b = poly_pow_mod(A, (F.q ** d - 1) // 2, f) - Poly.one(F)
        g = poly_gcd(f, b)
        if 0 < g.degree < n:
            return _equal_degree(g, d, rng) + _equal_degree(f // g, d, rng)


@lru_cache(maxsize=65536)
def factor(f: Poly) -> Factorization:
    """
    完全因数分解（平方因子分解 → 次数別分解 → 同次数分解）

    Args:
        f: 非零多項式

    Returns:
        Factorization（因子は (次数, 辞書式) 順）
    """
    if f.is_zero():
        raise PreconditionError("cannot factor the zero polynomial")
    F = f.field
    unit = FieldElement(F, f.leading)
    g = f.monic()
    exponents: Dict[Coeffs, int] = {}
    primes: Dict[Coeffs, Poly] = {}
    rng = random.Random(FACTOR_SEED)
    for part, mult in _squarefree_decomposition(g):
        for block, d in _distinct_degree(part):
            for P in _equal_degree(block, d, rng):
                primes[P.coeffs] = P
                exponents[P.coeffs] = exponents.get(P.coeffs, 0) + mult
    factors = tuple(sorted(((primes[k], e) for k, e in exponents.items()), key=lambda item: item[0].sort_key()))
    result = Factorization(unit, factors)
    if result.expand() != f:
        logger.error(f"Factorization product-back failed for {format_poly(f)}")
        raise VerificationError(f"factorization of {format_poly(f)} does not multiply back")
    return result


# ---- 算術関数 ----

def von_mangoldt(N: Poly) -> int:
    """N = c·P^k なら deg P、それ以外は 0"""
    if N.is_zero():
        raise PreconditionError("von Mangoldt function undefined at zero")
    fac = factor(N)
    return fac.factors[0][0].degree if len(fac.factors) == 1 else 0


def mobius(Q: Poly) -> int:
    if Q.is_zero():
        raise PreconditionError("Mobius function undefined at zero")
    fac = factor(Q)
    if any(e > 1 for _, e in fac.factors):
        return 0
    return -1 if len(fac.factors) % 2 else 1


def omega(Q: Poly) -> int:
    """相異なるモニック既約因子の個数"""
    if Q.is_zero():
        raise PreconditionError("omega undefined at zero")
    return len(factor(Q).factors)


def euler_phi(Q: Poly) -> int:
    """(F_q[T]/Q)^* の位数 Π (q^{d e} - q^{d(e-1)})"""
    if Q.degree < 1:
        raise PreconditionError(f"degree zero: Euler phi needs deg Q >= 1, got {format_poly(Q)}")
    q = Q.field.q
    result = 1
    for P, e in factor(Q).factors:
        d = P.degree
        result *= q ** (d * e) - q ** (d * (e - 1))
    return result


def divisors(Q: Poly) -> List[Poly]:
    """Q のモニック約数（(次数, 辞書式) 順）"""
    if Q.is_zero():
        raise PreconditionError("zero polynomial has no finite divisor list")
    F = Q.field
    result = [Poly.one(F)]
    for P, e in factor(Q).factors:
        result = [D * P ** k for D in result for k in range(e + 1)]
    return sorted(result, key=Poly.sort_key)


def involution(X: Poly) -> Poly:
    """X*(T) = T^{deg X} X(1/T)"""
    if X.is_zero():
        raise PreconditionError("involution undefined at zero")
    return Poly(X.field, tuple(reversed(X.coeffs)))


# ---- 列挙と素数定理 ----

def enumerate_monic(F: FiniteField, n: int, budget: float = DEFAULT_MONIC_BUDGET) -> Iterator[Poly]:
    """
    M_n を係数タプルの辞書式順（定数項が先頭）で列挙

    Args:
        F: 係数体
        n: 次数
        budget: 列挙件数の上限

    Returns:
        モニック n 次多項式のイテレータ
    """
    if n < 0:
        raise PreconditionError(f"degree must be nonnegative, got {n}")
    check_budget(f"enumeration of monic polynomials of degree {n} over F_{F.q}", F.q ** n, budget)
    return (Poly(F, low + (1,)) for low in product(F.lex_order, repeat=n))


def monic_index(f: Poly) -> int:
    """モニック多項式の内部インデックス Σ_{i<n} c_i q^i"""
    q = f.field.q
    return sum(c * q ** i for i, c in enumerate(f.coeffs[:-1]))


def monic_from_index(F: FiniteField, n: int, index: int) -> Poly:
    coeffs = []
    for _ in range(n):
        index, c = divmod(index, F.q)
        coeffs.append(c)
    return Poly(F, tuple(coeffs) + (1,))


def count_irreducibles(q: int, n: int) -> int:
    """n 次モニック既約多項式の個数 (1/n) Σ_{d|n} μ(d) q^{n/d}"""
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            total += _integer_mobius(d) * q ** (n // d)
    return total // n


def _integer_mobius(n: int) -> int:
    result, d = 1, 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            result = -result
        d += 1
    return -result if n > 1 else result


def _monic_digit_columns(F: FiniteField, m: int) -> List[np.ndarray]:
    idx = np.arange(F.q ** m, dtype=np.int64)
    columns = [(idx // F.q ** i) % F.q for i in range(m)]
    columns.append(np.ones_like(idx))
    return columns


@lru_cache(maxsize=None)
def monic_irreducibles(F: FiniteField, d: int, budget: float = DEFAULT_MONIC_BUDGET) -> Tuple[Poly, ...]:
    """
    d 次モニック既約多項式の一覧（篩法）

    次数 k ≤ d/2 の既約 P と d-k 次モニックの積を numpy で一括計算し、
    可約なものに印を付けます。
    """
    if d < 1:
        return ()
    q = F.q
    check_budget(f"irreducible sieve of degree {d} over F_{q}", q ** d, budget)
    reducible = np.zeros(q ** d, dtype=bool)
    for k in range(1, d // 2 + 1):
        m = d - k
        columns = _monic_digit_columns(F, m)
        weights = [q ** j for j in range(d)]
        for P in monic_irreducibles(F, k, budget):
            prod = [np.zeros_like(columns[0]) for _ in range(d + 1)]
            for i, c in enumerate(P.coeffs):
                if c == 0:
                    continue
                for j in range(m + 1):
                    prod[i + j] = F.add_array(prod[i + j], F.mul_array(columns[j], c))
            index = np.zeros_like(columns[0])
            for j in range(d):
                index += prod[j] * weights[j]
            reducible[index] = True
    found = [monic_from_index(F, d, int(i)) for i in np.flatnonzero(~reducible)]
    found.sort(key=Poly.sort_key)
    expected = count_irreducibles(q, d)
    if len(found) != expected:
        logger.error(f"Irreducible sieve found {len(found)} of degree {d} over F_{q}, expected {expected}")
        raise VerificationError(f"irreducible count mismatch for degree {d} over F_{q}")
    logger.debug(f"Sieved {len(found)} monic irreducibles of degree {d} over F_{q}")
    return tuple(found)


@lru_cache(maxsize=None)
def von_mangoldt_table(F: FiniteField, n: int, budget: float = DEFAULT_MONIC_BUDGET) -> Dict[Coeffs, int]:
    """
    M_n の素元冪 P^{n/d} とその Λ 値 d の表（Λ > 0 のものだけ）

    Returns:
        係数タプル -> Λ の辞書（読み取り専用として扱うこと）
    """
    table: Dict[Coeffs, int] = {}
    for d in range(1, n + 1):
        if n % d:
            continue
        for P in monic_irreducibles(F, d, budget):
            table[(P ** (n // d)).coeffs] = d
    return table


def psi_total(F: FiniteField, n: int) -> int:
    """Σ_{N ∈ M_n} Λ(N)（= q^n）"""
    if n < 1:
        raise PreconditionError(f"psi_total needs n >= 1, got {n}")
    return sum(von_mangoldt_table(F, n).values())


# ---- 乱択 ----

def random_monic(F: FiniteField, n: int, rng: random.Random) -> Poly:
    return Poly(F, tuple(rng.randrange(F.q) for _ in range(n)) + (1,))


def random_poly(F: FiniteField, n: int, rng: random.Random) -> Poly:
    """次数ちょうど n の多項式（先頭係数も乱択）"""
    return Poly(F, tuple(rng.randrange(F.q) for _ in range(n)) + (rng.randrange(1, F.q),))


def random_squarefree(F: FiniteField, m: int, rng: random.Random,
                      nonzero_constant: bool = True, max_tries: int = 100000) -> Poly:
    """
    次数 m の平方因子なしモニック多項式（既定で Q(0) ≠ 0）

    Args:
        F: 係数体
        m: 次数
        rng: 乱数生成器（seed 固定）
        nonzero_constant: 定数項を非零に限るか
        max_tries: 試行回数の上限
    """
    for _ in range(max_tries):
        Q = random_monic(F, m, rng)
        if nonzero_constant and Q.constant_term == 0:
            continue
        if is_squarefree(Q):
            return Q
    raise PreconditionError(f"no square-free polynomial of degree {m} over F_{F.q} found")


# ---- テキスト形式 ----

_TERM = re.compile(r"([+-]?)(\d*)(T(?:\^(\d+))?)?")


def parse_poly(F: FiniteField, text: str) -> Poly:
    """
    多項式テキストを解釈

    "c0,c1,...,cn"（定数項が先頭、拡大体の係数は "a0.a1"）または
    素体に限り "T^2+2T+1" のような表記を受け付けます。
    """
    text = text.strip().replace(" ", "")
    if not text:
        raise PreconditionError("empty polynomial text")
    if "T" in text:
        return _parse_pretty(F, text)
    coeffs = []
    for token in text.split(","):
        try:
            if "." in token:
                coeffs.append(F.from_coeffs(tuple(int(part) for part in token.split("."))))
            elif F.r == 1:
                coeffs.append(int(token) % F.p)
            else:
                coeffs.append(F.from_coeffs((int(token),)))
        except ValueError:
            raise PreconditionError(f"malformed polynomial text: {text!r}")
    return Poly(F, coeffs)


def _parse_pretty(F: FiniteField, text: str) -> Poly:
    if F.r != 1:
        raise PreconditionError("pretty polynomial form is accepted for prime fields only")
    coeffs: Dict[int, int] = {}
    pos = 0
    while pos < len(text):
        match = _TERM.match(text, pos)
        if match is None or match.end() == pos or not (match.group(2) or match.group(3)):
            raise PreconditionError(f"malformed polynomial text: {text!r}")
        sign, digits, var, power = match.groups()
        c = int(digits) if digits else 1
        if sign == "-":
            c = -c
        k = 0 if not var else int(power) if power else 1
        coeffs[k] = coeffs.get(k, 0) + c
        pos = match.end()
    top = max(coeffs) if coeffs else 0
    return Poly(F, [coeffs.get(k, 0) for k in range(top + 1)])


def format_coeffs(f: Poly) -> str:
    """機械可読な "c0,c1,...,cn" 形式"""
    F = f.field
    if f.is_zero():
        return "0"
    if F.r == 1:
        return ",".join(str(c) for c in f.coeffs)
    return ",".join(".".join(str(x) for x in F.to_coeffs(c)) for c in f.coeffs)


def format_poly(f: Poly) -> str:
    """表示用の "T^2+2T+1" 形式（拡大体では format_coeffs）"""
    if f.field.r != 1:
        return format_coeffs(f)
    if f.is_zero():
        return "0"
    terms = []
    for k in range(f.degree, -1, -1):
        c = f.coeffs[k]
        if c == 0:
            continue
        coef = "" if c == 1 and k > 0 else str(c)
        var = "" if k == 0 else "T" if k == 1 else f"T^{k}"
        terms.append(coef + var)
    return "+".join(terms)
