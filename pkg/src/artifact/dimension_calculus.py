"""Exact rational F-dimensions and the Serre-dimension formulas built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Union

from .ci_lattice import CompleteIntersection, NotFano

Rat = Union[Fraction, float]  # float only for +-inf


class BadParity(ValueError):
    pass


class EmptyResidual(ValueError):
    pass


def _rat(x) -> Rat:
    if isinstance(x, float):
        if math.isinf(x):
            return x
        raise TypeError("finite dimensions must be exact rationals")
    return Fraction(x)


@dataclass(frozen=True)
class FDim:
    upper: Rat
    lower: Rat

    def __post_init__(self) -> None:
        object.__setattr__(self, "upper", _rat(self.upper))
        object.__setattr__(self, "lower", _rat(self.lower))
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    def shift(self, n: int) -> "FDim":
        return FDim(self.upper + n, self.lower + n)

    def power(self, p: int) -> "FDim":
        if p < 1:
            raise ValueError("power needs p >= 1")
        return FDim(self.upper * p, self.lower * p)

    def invert(self) -> "FDim":
        return FDim(-self.lower, -self.upper)

    def scale_down(self, q: int) -> "FDim":
        """Dimensions of ``F`` given those of ``F^q``."""
        if q < 1:
            raise ValueError("need q >= 1")
        return FDim(self.upper / q, self.lower / q)

    def as_tuple(self) -> tuple[Rat, Rat]:
        return (self.upper, self.lower)


def fdim_algebra(dim: FDim, op: str, arg: int = 0) -> FDim:
    """Apply ``shift``, ``power`` or ``invert`` to an F-dimension pair."""
    if op == "shift":
        return dim.shift(arg)
    if op == "power":
        return dim.power(arg)
    if op == "invert":
        return dim.invert()
    raise ValueError(f"unknown operation {op!r}")


def _check(X: CompleteIntersection) -> None:
    if not X.is_straight:
        raise ValueError("Serre dimension formulas need straight P^n")
    if X.index < 0:
        raise NotFano(str(X))
    if X.k == 0:
        raise EmptyResidual(f"{X} has zero residual category")


def serre_dims(X: CompleteIntersection) -> tuple[Fraction, Fraction]:
    """``(usdim, lsdim)`` of the residual category."""
    _check(X)
    return (
        X.dim - Fraction(2 * X.index, X.d_max),
        X.dim - Fraction(2 * X.index, X.d_min),
    )


def hochschild_level(X: CompleteIntersection) -> int:
    _check(X)
    if X.degrees == (2,) and X.dim % 2 == 1:
        return 0
    return X.dim - 2 * (-(-X.index // X.d_max))


@dataclass(frozen=True)
class Geometricity:
    possible: bool
    required_dim: int | None = None


def geometricity_test(X: CompleteIntersection) -> Geometricity:
    _check(X)
    d = X.degrees[0]
    if any(x != d for x in X.degrees) or (2 * (X.n + 1)) % d:
        return Geometricity(False)
    return Geometricity(True, X.n + X.k - 2 * (X.n + 1) // d)


def serre_invariance_obstruction(arg) -> bool:
    """True when no Serre-invariant pre-stability condition can exist."""
    if isinstance(arg, CompleteIntersection):
        u, l = serre_dims(arg)
    else:
        u, l = arg
    return Fraction(u) != Fraction(l)


@dataclass(frozen=True)
class TwistLedger:
    source: FDim | None
    target: FDim


def twist_dim_ledger(X: CompleteIntersection) -> TwistLedger:
    """F-dimensions of the residual twists for the presentation peeling off the smallest degree."""
    _check(X)
    degs = X.degrees
    dk = degs[-1]
    source = None
    if X.k > 1:
        source = FDim(Fraction(-2 * dk, degs[0]), Fraction(-2 * dk, degs[-2]))
    target = FDim(Fraction(-2 * dk, degs[0]) + 2, 0)
    return TwistLedger(source, target)


def ledger_closure(X: CompleteIntersection) -> dict[str, bool]:
    """Substitute the ledger into the induction equations and compare with ``serre_dims``."""
    led = twist_dim_ledger(X)
    dk = X.degrees[-1]
    out = {}
    if led.source is not None:
        M = CompleteIntersection(X.space, X.degrees[:-1])
        um, lm = serre_dims(M)
        q = Fraction(M.index, dk)
        out["source_upper"] = q * led.source.upper + M.dim == um
        out["source_lower"] = q * led.source.lower + M.dim == lm
    ux, lx = serre_dims(X)
    q = Fraction(X.index, dk)
    base = X.dim - 2 * q
    out["target_upper"] = q * led.target.upper + base == ux
    out["target_lower"] = q * led.target.lower + base == lx
    return out


def spherical_twist_dims(d: int) -> FDim:
    """F-dimensions of the twist by a ``d``-spherical object with nonzero orthogonal."""
    if d < 1:
        raise ValueError("need d >= 1")
    return FDim(0, 1 - d)


def refined_AX_dims(n: int) -> tuple[Fraction, Fraction]:
    if n < 5 or n % 2 == 0:
        raise BadParity(f"need n >= 5 odd, got {n}")
    return Fraction(2 * n - 7), Fraction((n - 2) ** 2 - 2, n - 2)


def refined_AX_dims_derived(n: int) -> tuple[Fraction, Fraction]:
    """Same values, rebuilt from the twist dimensions of ``K`` with :func:`fdim_algebra`."""
    if n < 5 or n % 2 == 0:
        raise BadParity(f"need n >= 5 odd, got {n}")
    tk = spherical_twist_dims(2 * n - 7)
    power = fdim_algebra(fdim_algebra(tk, "invert"), "power", (n - 3) // 2)
    total = fdim_algebra(power, "shift", (n - 2) ** 2 - 2)
    res = total.scale_down(n - 2)
    return res.upper, res.lower


@dataclass(frozen=True)
class DoubleCoverIdentity:
    c: int
    serre_power: int
    twist_power: int
    involution_power: int
    shift: int
    source_serre_power: int
    source_twist_power: int
    source_shift: int
    twist_trivial: bool

    def describe(self) -> str:
        parts = []
        if self.twist_power and not self.twist_trivial:
            parts.append(f"T^{self.twist_power}")
        if self.involution_power:
            parts.append("tau" if self.involution_power == 1 else f"tau^{self.involution_power}")
        parts.append(f"[{self.shift}]")
        lhs = "S_R" if self.serre_power == 1 else f"S_R^{self.serre_power}"
        return f"{lhs} = " + " o ".join(parts)


def double_cover_report(M: CompleteIntersection, d_k: int) -> DoubleCoverIdentity:
    """Exponent bookkeeping for a double cover of ``M`` branched in a divisor of degree ``2 d_k``."""
    m = M.index
    if d_k < 1:
        raise ValueError("need d_k >= 1")
    if m - d_k < 0:
        raise NotFano(f"double cover of {M} branched in degree {2 * d_k}")
    c = gcd(d_k, m)
    ind_x, dim_x = m - d_k, M.dim
    return DoubleCoverIdentity(
        c=c,
        serre_power=d_k // c,
        twist_power=ind_x // c,
        involution_power=ind_x // c,
        shift=(d_k * dim_x - ind_x) // c,
        source_serre_power=d_k // c,
        source_twist_power=m // c,
        source_shift=(d_k * M.dim - m) // c,
        twist_trivial=M.k == 0 and M.is_straight,
    )


@dataclass(frozen=True)
class DimensionReport:
    X: CompleteIntersection
    usdim: Fraction
    lsdim: Fraction
    frac_cy: Fraction | None
    hl: int
    geometric: Geometricity
    serre_invariant_possible: bool
    twist_dims: TwistLedger
    smoothly_attainable_assumed: bool = True
    notes: tuple[str, ...] = field(default=())


def dimension_report(X: CompleteIntersection) -> DimensionReport:
    u, l = serre_dims(X)
    hl = hochschild_level(X)
    if not (l <= u and hl <= u):
        raise AssertionError(f"dimension invariants fail for {X}: {u}, {l}, {hl}")
    notes = (
        "smooth attainability assumed (automatic in characteristic zero)",
    )
    return DimensionReport(
        X,
        u,
        l,
        u if X.k == 1 else None,
        hl,
        geometricity_test(X),
        not serre_invariance_obstruction((u, l)),
        twist_dim_ledger(X),
        True,
        notes,
    )
