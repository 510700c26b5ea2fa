#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
FiniteField - 有限体 F_q (q = p^r) の厳密演算

体の元は [0, q) の整数コード a = Σ c_i p^i で表現します（c_i は定数項が
先頭の係数ベクトル）。0 と 1 はそれぞれ零元・単位元です。列挙順は
係数タプルの辞書式順 (lex_order) で固定します。
拡大体の乗法は原始元の対数・指数表で行います（表は初回使用時に構築）。
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import PreconditionError

MAX_FIELD_SIZE = 1 << 20
MAX_CHARACTERISTIC = 1 << 31

logger = logging.getLogger(__name__)


def is_prime(n: int) -> bool:
    """試し割りによる素数判定"""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_divisors(n: int) -> List[int]:
    """n の相異なる素因数（昇順）"""
    result = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            result.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        result.append(n)
    return result


@dataclass(frozen=True)
class FiniteField:
    """
    有限体 F_q

    Attributes:
        p: 標数（素数）
        r: 拡大次数
        modulus: F_p 上の r 次モニック既約多項式の係数（定数項が先頭）。r = 1 では (0, 1)
        q: 元の個数 p^r
    """

    p: int
    r: int = 1
    modulus: Tuple[int, ...] = (0, 1)
    q: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "q", self.p ** self.r)

    @property
    def is_prime_field(self) -> bool:
        return self.r == 1

    def spec(self) -> str:
        """CLI/設定で使う体の表記 ("p=3" / "p=2,r=2")"""
        return f"p={self.p}" if self.r == 1 else f"p={self.p},r={self.r}"

    @cached_property
    def lex_order(self) -> Tuple[int, ...]:
        """全元のコードを係数タプルの辞書式順に並べたもの（素体では 0..p-1）"""
        if self.r == 1:
            return tuple(range(self.p))
        return tuple(sorted(range(self.q), key=self.to_coeffs))

    # ---- コード <-> 係数 ----

    def to_coeffs(self, a: int) -> Tuple[int, ...]:
        digits = [0] * self.r
        for i in range(self.r):
            a, digits[i] = divmod(a, self.p)
        return tuple(digits)

    def from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.r:
            raise PreconditionError(f"field element needs at most {self.r} coefficients, got {len(coeffs)}")
        code = 0
        for c in reversed(list(coeffs)):
            code = code * self.p + (c % self.p)
        return code

    # ---- スカラー演算 ----

    def add(self, a: int, b: int) -> int:
        if self.r == 1:
            return (a + b) % self.p
        p = self.p
        result, place = 0, 1
        while a or b:
            a, da = divmod(a, p)
            b, db = divmod(b, p)
            result += ((da + db) % p) * place
            place *= p
        return result

    def neg(self, a: int) -> int:
        if self.r == 1:
            return (-a) % self.p
        p = self.p
        result, place = 0, 1
        while a:
            a, da = divmod(a, p)
            result += ((-da) % p) * place
            place *= p
        return result

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.r == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        exp_table, log_table = self._tables
        return exp_table[(log_table[a] + log_table[b]) % (self.q - 1)]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in a field")
        if self.r == 1:
            return pow(a, self.p - 2, self.p)
        exp_table, log_table = self._tables
        return exp_table[(-log_table[a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if a == 0:
            return 1 if e == 0 else 0
        if self.r == 1:
            return pow(a, e, self.p)
        exp_table, log_table = self._tables
        return exp_table[(log_table[a] * e) % (self.q - 1)]

    def element(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            return value
        if isinstance(value, (tuple, list)):
            return FieldElement(self, self.from_coeffs(value))
        return FieldElement(self, int(value) % self.q if self.r == 1 else int(value))

    # ---- 原始元と対数表 ----

    def _mul_slow(self, a: int, b: int) -> int:
        """F_p[x]/(modulus) 上の多項式積（表の構築用）"""
        p, r = self.p, self.r
        ca, cb = self.to_coeffs(a), self.to_coeffs(b)
        prod = [0] * (2 * r - 1)
        for i, x in enumerate(ca):
            if x:
                for j, y in enumerate(cb):
                    prod[i + j] = (prod[i + j] + x * y) % p
        for k in range(len(prod) - 1, r - 1, -1):
            c = prod[k]
            if c:
                for j in range(r + 1):
                    prod[k - r + j] = (prod[k - r + j] - c * self.modulus[j]) % p
        return self.from_coeffs(prod[:r])

    def _pow_slow(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self._mul_slow(result, a)
            a = self._mul_slow(a, a)
            e >>= 1
        return result

    @cached_property
    def primitive_element(self) -> int:
        """F_q^* の生成元のうちコード最小のもの"""
        if self.q == 2:
            return 1
        order = self.q - 1
        primes = prime_divisors(order)
        for g in range(2, self.q):
            if self.r == 1:
                if all(pow(g, order // ell, self.p) != 1 for ell in primes):
                    return g
            elif all(self._pow_slow(g, order // ell) != 1 for ell in primes):
                return g
        raise PreconditionError(f"no primitive element found in F_{self.q}")

    @cached_property
    def _tables(self) -> Tuple[List[int], List[int]]:
        """拡大体用の指数表・対数表"""
        g = self.primitive_element
        exp_table = [0] * (self.q - 1)
        log_table = [0] * self.q
        x = 1
        for k in range(self.q - 1):
            exp_table[k] = x
            log_table[x] = k
            x = self._mul_slow(x, g)
        logger.debug(f"Built log tables for F_{self.q} with generator {g}")
        return exp_table, log_table

    @cached_property
    def _array_tables(self) -> Tuple[np.ndarray, np.ndarray]:
        exp_table, log_table = self._tables
        return np.asarray(exp_table, dtype=np.int64), np.asarray(log_table, dtype=np.int64)

    # ---- numpy 配列演算（篩・ヒストグラム用） ----

    def add_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.r == 1:
            return (a + b) % self.p
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        result = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        place = 1
        for _ in range(self.r):
            result += ((a // place % self.p + b // place % self.p) % self.p) * place
            place *= self.p
        return result

    def mul_array(self, a: np.ndarray, b) -> np.ndarray:
        if self.r == 1:
            return (a * b) % self.p
        exp_arr, log_arr = self._array_tables
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        prod = exp_arr[(log_arr[a] + log_arr[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, prod)


@dataclass(frozen=True)
class FieldElement:
    """体の元。演算子で計算でき、coeffs で係数ベクトルを返す"""

    field: FiniteField
    value: int

    @property
    def coeffs(self) -> Tuple[int, ...]:
        return self.field.to_coeffs(self.value)

    def is_zero(self) -> bool:
        return self.value == 0

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise PreconditionError("field elements belong to different fields")
            return other.value
        return self.field.element(other).value

    def __add__(self, other):
        return FieldElement(self.field, self.field.add(self.value, self._other(other)))

    def __sub__(self, other):
        return FieldElement(self.field, self.field.sub(self.value, self._other(other)))

    def __mul__(self, other):
        return FieldElement(self.field, self.field.mul(self.value, self._other(other)))

    def __truediv__(self, other):
        return FieldElement(self.field, self.field.div(self.value, self._other(other)))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.value))

    def __pow__(self, e: int):
        return FieldElement(self.field, self.field.pow(self.value, e))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __repr__(self) -> str:
        if self.field.r == 1:
            return str(self.value)
        return ".".join(str(c) for c in self.coeffs)


def _smallest_irreducible(p: int, r: int) -> Tuple[int, ...]:
    """F_p 上の r 次モニック既約多項式のうち係数タプル辞書式最小のもの"""
    from poly_ring import Poly, is_irreducible

    base = construct_field(p, 1)
    for low in product(range(p), repeat=r):
        candidate = Poly(base, tuple(low) + (1,))
        if is_irreducible(candidate):
            return candidate.coeffs
    raise PreconditionError(f"no irreducible polynomial of degree {r} over F_{p}")


@lru_cache(maxsize=None)
def construct_field(p: int, r: int = 1) -> FiniteField:
    """
    有限体 F_{p^r} を構築

    Args:
        p: 標数
        r: 拡大次数

    Returns:
        FiniteField（r > 1 では辞書式最小の既約多項式を法とする）
    """
    if not is_prime(p) or p > MAX_CHARACTERISTIC:
        raise PreconditionError(f"not prime: {p}")
    if r < 1:
        raise PreconditionError(f"extension degree must be positive, got {r}")
    if p ** r > MAX_FIELD_SIZE:
        raise PreconditionError(f"field too large: {p}^{r} exceeds {MAX_FIELD_SIZE}")
    if r == 1:
        return FiniteField(p, 1, (0, 1))
    modulus = _smallest_irreducible(p, r)
    logger.debug(f"Constructed F_{p}^{r} with modulus {modulus}")
    return FiniteField(p, r, modulus)


def units(F: FiniteField) -> List[FieldElement]:
    """F_q^* の全元（係数タプルの辞書式順）"""
    return [FieldElement(F, a) for a in F.lex_order if a != 0]


def parse_field_spec(text: str) -> FiniteField:
    """
    "p=3" / "p=2,r=2" 形式の体指定を解釈

    Args:
        text: 体指定文字列

    Returns:
        FiniteField
    """
    params: Dict[str, int] = {}
    for part in text.split(","):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise PreconditionError(f"malformed field spec: {text!r}")
        try:
            params[key.strip()] = int(value)
        except ValueError:
            raise PreconditionError(f"malformed field spec: {text!r}")
    if "p" not in params or set(params) - {"p", "r"}:
        raise PreconditionError(f"malformed field spec: {text!r}")
    return construct_field(params["p"], params.get("r", 1))


def field_for_q(q: int, r: Optional[int] = None) -> FiniteField:
    """位数 q の体（q は素数冪）"""
    primes = prime_divisors(q) if q > 1 else []
    if len(primes) == 1:
        p, k = primes[0], 0
        while q % p == 0:
            q //= p
            k += 1
        if r is None or r == k:
            return construct_field(p, k)
    raise PreconditionError(f"not prime: {q} is not a prime power")
