"""Euler characteristics and K-classes on (weighted) projective space.

A class is a finite integer combination of twisting sheaves ``[O(i)]``.
Multiplication of classes is tensor product, so the class ring is a
quotient of the Laurent polynomials in ``h = [O(1)]`` by the Koszul
relation ``prod_i (1 - h^(-w_i)) = 0``.  Every class has a unique
representative supported in the window ``0 .. |w| - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, prod
from typing import Iterable, Mapping

__all__ = [
    "AmbientSpace",
    "KClass",
    "euler_char",
    "reduce",
    "twist",
    "koszul_class",
    "pair",
    "chi",
    "chi_pair",
]


@dataclass(frozen=True)
class AmbientSpace:
    """Weighted projective space ``P(w_0, ..., w_n)``."""

    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        w = tuple(int(x) for x in self.weights)
        if not w:
            raise ValueError("weights must be nonempty")
        if any(x < 1 for x in w):
            raise ValueError(f"weights must be positive, got {w}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def projective(cls, n: int) -> "AmbientSpace":
        if n < 0:
            raise ValueError("ambient dimension must be >= 0")
        return cls((1,) * (n + 1))

    @property
    def n(self) -> int:
        return len(self.weights) - 1

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    @property
    def is_straight(self) -> bool:
        return all(x == 1 for x in self.weights)

    def __str__(self) -> str:
        if self.is_straight:
            return f"P^{self.n}"
        return "P(" + ",".join(map(str, self.weights)) + ")"


def _poly_binomial(n: int, m: int) -> int:
    # prod_{j=1..n} (m + j) / n!, valid for every integer m
    return prod(m + j for j in range(1, n + 1)) // factorial(n)


@lru_cache(maxsize=None)
def _monomial_counts(weights: tuple[int, ...], top: int) -> tuple[int, ...]:
    counts = [0] * (top + 1)
    counts[0] = 1
    for w in weights:
        for m in range(w, top + 1):
            counts[m] += counts[m - w]
    return tuple(counts)


def euler_char(space: AmbientSpace, m: int) -> int:
    """``chi(O(m))`` on ``space``."""
    if space.is_straight:
        return _poly_binomial(space.n, m)
    if m < 0:
        k = -m - space.total_weight
        if k < 0:
            return 0
        return (-1) ** space.n * euler_char(space, k)
    return _monomial_counts(space.weights, m)[m]


@dataclass(frozen=True)
class KClass:
    """Finite combination ``sum c_i [O(i)]`` on an ambient space."""

    space: AmbientSpace
    coeffs: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        raw: dict[int, int] = {}
        items = self.coeffs.items() if isinstance(self.coeffs, Mapping) else self.coeffs
        for i, c in items:
            raw[int(i)] = raw.get(int(i), 0) + int(c)
        object.__setattr__(self, "coeffs", tuple(sorted((i, c) for i, c in raw.items() if c)))

    @classmethod
    def line(cls, space: AmbientSpace, i: int = 0) -> "KClass":
        return cls(space, ((i, 1),))

    @classmethod
    def zero(cls, space: AmbientSpace) -> "KClass":
        return cls(space, ())

    def as_dict(self) -> dict[int, int]:
        return dict(self.coeffs)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.coeffs)

    def coefficient(self, i: int) -> int:
        return self.as_dict().get(i, 0)

    def window_vector(self) -> tuple[int, ...]:
        """Coefficients on ``O(0) .. O(|w|-1)`` of the reduced class."""
        d = reduce(self).as_dict()
        return tuple(d.get(i, 0) for i in range(self.space.total_weight))

    def _check(self, other: "KClass") -> None:
        if other.space != self.space:
            raise ValueError("classes live on different ambient spaces")

    def __add__(self, other: "KClass") -> "KClass":
        self._check(other)
        return KClass(self.space, self.coeffs + other.coeffs)

    def __neg__(self) -> "KClass":
        return KClass(self.space, tuple((i, -c) for i, c in self.coeffs))

    def __sub__(self, other: "KClass") -> "KClass":
        return self + (-other)

    def __rmul__(self, k: int) -> "KClass":
        return KClass(self.space, tuple((i, k * c) for i, c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return other * self
        self._check(other)
        out: dict[int, int] = {}
        for i, a in self.coeffs:
            for j, b in other.coeffs:
                out[i + j] = out.get(i + j, 0) + a * b
        return KClass(self.space, tuple(out.items()))

    def dual(self) -> "KClass":
        return KClass(self.space, tuple((-i, c) for i, c in self.coeffs))

    def shifted(self, j: int) -> "KClass":
        return KClass(self.space, tuple((i + j, c) for i, c in self.coeffs))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"{c}[O({i})]" for i, c in self.coeffs)


@lru_cache(maxsize=None)
def _relation(weights: tuple[int, ...]) -> tuple[int, ...]:
    """Coefficients of ``prod (h^w_i - 1)``, lowest degree first."""
    poly = [1]
    for w in weights:
        nxt = [0] * (len(poly) + w)
        for k, c in enumerate(poly):
            nxt[k + w] += c
            nxt[k] -= c
        poly = nxt
    return tuple(poly)


def reduce(c: KClass) -> KClass:
    """Window representative of ``c`` modulo the Koszul relation."""
    top = c.space.total_weight
    rel = _relation(c.space.weights)
    const = rel[0]  # +-1
    d = c.as_dict()
    # clear negative indices from the bottom up
    while d and min(d) < 0:
        b = min(d)
        coef = d[b] * const  # const is its own inverse
        for k, r in enumerate(rel):
            if r:
                d[b + k] = d.get(b + k, 0) - coef * r
        d = {i: x for i, x in d.items() if x}
    # clear indices >= |w| from the top down
    while d and max(d) >= top:
        t = max(d)
        coef = d[t]
        for k, r in enumerate(rel):
            if r:
                idx = t - top + k
                d[idx] = d.get(idx, 0) - coef * r
        d = {i: x for i, x in d.items() if x}
    return KClass(c.space, tuple(d.items()))


def twist(c: KClass, j: int) -> KClass:
    """Tensor by ``O(j)`` and reduce."""
    return reduce(c.shifted(j))


def koszul_class(space: AmbientSpace, degrees: Iterable[int]) -> KClass:
    """Reduced ``prod (1 - [O(-d)])``, the class of the structure sheaf of a complete intersection."""
    out = KClass.line(space, 0)
    for d in degrees:
        if d < 1:
            raise ValueError("degrees must be positive")
        out = out * KClass(space, ((0, 1), (-d, -1)))
    return reduce(out)


def chi(c: KClass) -> int:
    return sum(x * euler_char(c.space, i) for i, x in c.coeffs)


def chi_pair(u: KClass, v: KClass) -> int:
    """Ambient Euler pairing ``chi(u, v) = chi(u^dual * v)``."""
    return chi(u.dual() * v)


@lru_cache(maxsize=None)
def _pair_table(space: AmbientSpace, degrees: tuple[int, ...], diff: int) -> int:
    return chi(koszul_class(space, degrees).shifted(diff))


def pair(space: AmbientSpace, degrees: Iterable[int], a: int, b: int) -> int:
    """``chi(O_X(a), O_X(b))`` for the complete intersection of the given degrees."""
    return _pair_table(space, tuple(degrees), b - a)

