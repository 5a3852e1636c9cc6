"""Numerical K-theory lattices of Fano complete intersections.

The lattice of ``X`` is spanned by the restricted twisting sheaves
``[O_X(i)]`` for ``i`` in the ambient window, taken modulo the radical of
the Euler pairing.  On it we realize Serre functors, mutations, rotation
functors and spherical twists as integer matrices.  A homological shift
``[s]`` is invisible to matrices except through the sign ``(-1)^s``,
which every operator carries separately as ``shift_sign``.

Everything here checks necessary conditions on the sublattice spanned by
ambient classes; it never claims to see the full numerical K-group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, prod
from typing import Iterable, Sequence

from . import intmat as im
from .euler_ring import AmbientSpace, KClass, chi_pair, koszul_class, pair

SCOPE_NOTE = (
    "checked on the sublattice spanned by ambient twisting classes; "
    "extra classes of the full numerical K-group are not modeled"
)


class NotFano(ValueError):
    pass


class RadicalMismatch(ArithmeticError):
    pass


class NotExceptional(ValueError):
    pass


class BlockNotUnitriangular(ValueError):
    pass


class SplitRequired(ValueError):
    pass


class LatticeInvariantError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# complete intersections


@dataclass(frozen=True)
class CompleteIntersection:
    """Complete intersection of the given degrees in a (weighted) projective space.

    Degrees are kept in descending order.  On straight ``P^n`` a linear
    equation just lowers ``n``, so degree-1 entries are removed.  ``split``
    is an index into the normalized degree list naming the equation that
    is peeled off to present ``X`` as a divisor in ``M``.
    """

    space: AmbientSpace
    degrees: tuple[int, ...] = ()
    split: int | None = None

    def __post_init__(self) -> None:
        degs = tuple(sorted((int(d) for d in self.degrees), reverse=True))
        if any(d < 1 for d in degs):
            raise ValueError(f"degrees must be positive, got {degs}")
        space = self.space
        if space.is_straight and 1 in degs:
            ones = degs.count(1)
            degs = tuple(d for d in degs if d != 1)
            space = AmbientSpace.projective(space.n - ones)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "degrees", degs)
        if sum(degs) > space.total_weight:
            raise NotFano(f"degrees {degs} exceed total weight {space.total_weight}")
        if space.n - len(degs) < 0:
            raise ValueError("complete intersection would be empty")
        if self.split is not None:
            s = int(self.split)
            if s < 0:
                s += len(degs)
            if not 0 <= s < len(degs):
                raise ValueError(f"split index {self.split} out of range for degrees {degs}")
            object.__setattr__(self, "split", s)

    @classmethod
    def in_pn(cls, n: int, degrees: Iterable[int] = (), split: int | None = None) -> "CompleteIntersection":
        return cls(AmbientSpace.projective(n), tuple(degrees), split)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def k(self) -> int:
        return len(self.degrees)

    @property
    def dim(self) -> int:
        return self.space.n - self.k

    @property
    def index(self) -> int:
        return self.space.total_weight - sum(self.degrees)

    @property
    def degree(self) -> int:
        return prod(self.degrees)

    @property
    def d_max(self) -> int:
        return max(self.degrees)

    @property
    def d_min(self) -> int:
        return min(self.degrees)

    @property
    def is_straight(self) -> bool:
        return self.space.is_straight

    def with_split(self, i: int | None = -1) -> "CompleteIntersection":
        return CompleteIntersection(self.space, self.degrees, i)

    def presentation(self) -> tuple["CompleteIntersection", int]:
        """``(M, d)`` with ``X`` a degree ``d`` divisor in ``M``."""
        if self.split is None:
            raise SplitRequired(f"{self} has no split presentation")
        rest = self.degrees[: self.split] + self.degrees[self.split + 1 :]
        return CompleteIntersection(self.space, rest), self.degrees[self.split]

    def splits(self) -> list["CompleteIntersection"]:
        """One copy per distinct degree that can be peeled off."""
        seen, out = set(), []
        for i, d in enumerate(self.degrees):
            if d not in seen:
                seen.add(d)
                out.append(self.with_split(i))
        return out

    def __str__(self) -> str:
        degs = ",".join(map(str, self.degrees))
        base = f"X({degs}) in {self.space}" if self.degrees else str(self.space)
        if self.split is not None:
            base += f" / split {self.degrees[self.split]}"
        return base


def fano_family(max_n: int, max_k: int, min_n: int = 1, min_index: int = 0) -> list[CompleteIntersection]:
    """Complete intersections in ``P^n`` with degrees >= 2, ``1 <= k <= max_k`` and index >= ``min_index``."""
    out = []

    def parts(total: int, k: int, cap: int):
        if k == 0:
            yield ()
            return
        for d in range(min(cap, total - 2 * (k - 1)), 1, -1):
            for rest in parts(total - d, k - 1, d):
                yield (d,) + rest

    for n in range(min_n, max_n + 1):
        for k in range(1, max_k + 1):
            if k > n:
                break
            for degs in parts(n + 1, k, n + 1):
                if sum(degs) <= n + 1 - min_index and n - k >= 0:
                    out.append(CompleteIntersection.in_pn(n, degs))
    return out


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class LatticeOperator:
    """Integer matrix together with the sign of a tracked homological shift."""

    matrix: im.Matrix
    shift_sign: int = 1
    name: str = ""
    shape: tuple[int, int] = (-1, -1)

    def __post_init__(self) -> None:
        if self.shift_sign not in (1, -1):
            raise ValueError("shift_sign must be +1 or -1")
        if self.shape == (-1, -1):
            object.__setattr__(self, "shape", im.shape(self.matrix))

    @classmethod
    def identity(cls, n: int, name: str = "id") -> "LatticeOperator":
        return cls(im.identity(n), 1, name, (n, n))

    @classmethod
    def shift(cls, n: int, s: int) -> "LatticeOperator":
        return cls(im.identity(n), -1 if s % 2 else 1, f"[{s}]", (n, n))

    @property
    def effective(self) -> im.Matrix:
        return self.matrix if self.shift_sign == 1 else im.scale(-1, self.matrix)

    def apply(self, v: im.Vector) -> im.Vector:
        return im.vscale(self.shift_sign, im.matvec(self.matrix, v))

    def __matmul__(self, other: "LatticeOperator") -> "LatticeOperator":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot compose {self.shape} with {other.shape}")
        m = im.matmul(self.matrix, other.matrix, ncols=other.shape[1])
        if self.shape[0] == 0:
            m = ()
        return LatticeOperator(
            m, self.shift_sign * other.shift_sign, _join(self.name, other.name), (self.shape[0], other.shape[1])
        )

    def power(self, k: int) -> "LatticeOperator":
        if self.shape[0] != self.shape[1]:
            raise ValueError("only square operators have powers")
        sign = self.shift_sign ** (k % 2)
        return LatticeOperator(im.power(self.matrix, k), sign, f"({self.name})^{k}", self.shape)

    def inverse(self) -> "LatticeOperator":
        return self.power(-1)

    def signed(self, s: int) -> "LatticeOperator":
        return LatticeOperator(self.matrix, self.shift_sign * s, self.name, self.shape)

    def det(self) -> int:
        return im.det(self.matrix) * self.shift_sign ** self.shape[0]

    def is_unimodular(self) -> bool:
        return self.shape[0] == self.shape[1] and abs(im.det(self.matrix)) == 1

    def is_identity(self) -> bool:
        return self.effective == im.identity(self.shape[0])

    def commutes_with(self, other: "LatticeOperator") -> bool:
        return (self @ other).effective == (other @ self).effective


def _join(a: str, b: str) -> str:
    if not a:
        return b
    if not b:
        return a
    return f"{a} o {b}"


@dataclass(frozen=True)
class Comparison:
    """Outcome of comparing two operators as maps with sign."""

    equal: bool
    status: str  # "equal", "sign mismatch", "matrix mismatch"
    witness: im.Vector | None = None
    lhs_image: im.Vector | None = None
    rhs_image: im.Vector | None = None


def compare(lhs: LatticeOperator, rhs: LatticeOperator) -> Comparison:
    if lhs.shape != rhs.shape:
        return Comparison(False, f"shape mismatch {lhs.shape} vs {rhs.shape}")
    a, b = lhs.effective, rhs.effective
    if a == b:
        return Comparison(True, "equal")
    n = lhs.shape[1]
    status = "sign mismatch" if lhs.matrix == rhs.matrix else "matrix mismatch"
    for j in range(n):
        col_a = tuple(r[j] for r in a)
        col_b = tuple(r[j] for r in b)
        if col_a != col_b:
            return Comparison(False, status, im.unit(n, j), col_a, col_b)
    return Comparison(False, status)


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class NumLattice:
    """Free lattice with a non-symmetric integral Euler pairing.

    ``gram[i][j] = chi(e_i, e_j)``.  ``proj`` and ``lift`` relate the
    lattice to the free module on ``pre_basis`` it was cut out of:
    ``proj @ lift = 1`` and ``proj`` kills the radical.
    """

    rank: int
    gram: im.Matrix
    alpha: im.Matrix | None
    labels: tuple[tuple[str, im.Vector], ...]
    dim: int
    index: int
    pre_basis: tuple[str, ...] = ()
    proj: im.Matrix = ()
    lift: im.Matrix = ()
    name: str = ""

    def label(self, key: str) -> im.Vector:
        for k, v in self.labels:
            if k == key:
                return v
        raise KeyError(key)

    def has_label(self, key: str) -> bool:
        return any(k == key for k, _ in self.labels)

    def chi(self, u: im.Vector, v: im.Vector) -> int:
        return im.bilinear(self.gram, u, v)

    def row(self, u: im.Vector) -> im.Vector:
        """The functional ``chi(u, -)``."""
        return im.matvec(im.transpose(self.gram, self.rank), u) if self.rank else ()

    def twist_class(self, i: int, base: str = "O(0)") -> im.Vector:
        return im.matvec(im.power(self.alpha, i), self.label(base))

    def alpha_operator(self) -> LatticeOperator:
        return LatticeOperator(self.alpha, 1, "alpha", (self.rank, self.rank))

    def check_invariants(self) -> dict[str, bool]:
        g, a = self.gram, self.alpha
        s = serre_operator(self)
        return {
            "alpha_unimodular": abs(im.det(a)) == 1,
            "alpha_equivariant": im.matmul(im.matmul(im.transpose(a), g), a) == g,
            "serre_relation": g == im.transpose(im.matmul(g, s.effective)),
            "nondegenerate": im.det(g) != 0 if self.rank else True,
        }


def radical_quotient(
    gram: im.Matrix,
    alpha: im.Matrix | None,
    pre_basis: Sequence[str],
    *,
    dim: int,
    index: int,
    name: str = "",
) -> NumLattice:
    """Quotient a pre-lattice by the two-sided radical of its form."""
    n = len(gram)
    d, u, v = im.smith(gram, n)
    r = im.rank_of_smith(d)
    for row in u[r:]:
        if any(im.matvec(gram, row)):
            raise RadicalMismatch(f"{name}: left radical vector {row} is not in the right radical")
    vinv = im.inverse(v)
    proj = tuple(vinv[:r])
    lift = tuple(tuple(v[i][j] for j in range(r)) for i in range(n))
    radical = [tuple(v[i][j] for i in range(n)) for j in range(r, n)]
    g = im.matmul(im.matmul(im.transpose(lift, r), gram), lift, ncols=r) if r else ()
    a = None
    if alpha is not None:
        for k in radical:
            if any(im.matvec(gram, im.matvec(alpha, k))):
                raise LatticeInvariantError(f"{name}: twist does not preserve the radical")
        a = im.matmul(im.matmul(proj, alpha), lift, ncols=r) if r else ()
    labels = tuple((key, tuple(row[i] for row in proj)) for i, key in enumerate(pre_basis))
    return NumLattice(r, g, a, labels, dim, index, tuple(pre_basis), proj, lift, name)


@lru_cache(maxsize=None)
def build_lattice(X: CompleteIntersection) -> NumLattice:
    """Lattice spanned by ``[O_X(i)]`` for ``i`` in the ambient window, modulo the radical."""
    X = X.with_split(None)
    space, degs = X.space, X.degrees
    size = space.total_weight
    gram = tuple(tuple(pair(space, degs, i, j) for j in range(size)) for i in range(size))
    top = KClass.line(space, size).window_vector()
    cols = [im.unit(size, i + 1) for i in range(size - 1)] + [top]
    alpha = im.from_columns(cols, size)
    names = [f"O({i})" for i in range(size)]
    L = radical_quotient(gram, alpha, names, dim=X.dim, index=X.index, name=str(X))
    if space.is_straight and L.rank != X.dim + 1:
        raise LatticeInvariantError(f"{X}: rank {L.rank} != dim + 1 = {X.dim + 1}")
    return L


def serre_operator(L: NumLattice, X: CompleteIntersection | None = None) -> LatticeOperator:
    """``S = (-1)^dim alpha^(-index)``."""
    dim = X.dim if X is not None else L.dim
    ind = X.index if X is not None else L.index
    return LatticeOperator(im.power(L.alpha, -ind), (-1) ** dim, "S", (L.rank, L.rank))


# ---------------------------------------------------------------------------
# mutations


def _exceptional(L: NumLattice, e: im.Vector) -> None:
    if L.chi(e, e) != 1:
        raise NotExceptional(f"chi(e, e) = {L.chi(e, e)} for e = {e}")


def left_mutation(L: NumLattice, e: im.Vector, v: im.Vector) -> im.Vector:
    _exceptional(L, e)
    return im.vsub(v, im.vscale(L.chi(e, v), e))


def right_mutation(L: NumLattice, e: im.Vector, v: im.Vector) -> im.Vector:
    _exceptional(L, e)
    return im.vsub(v, im.vscale(L.chi(v, e), e))


def block_gram(L: NumLattice, block: Sequence[im.Vector]) -> im.Matrix:
    return tuple(tuple(L.chi(a, b) for b in block) for a in block)


def _check_unitriangular(L: NumLattice, block: Sequence[im.Vector]) -> None:
    g = block_gram(L, block)
    for i in range(len(block)):
        if g[i][i] != 1 or any(g[i][j] for j in range(i)):
            raise BlockNotUnitriangular(f"block gram {g} is not upper unitriangular")


def mutate_through_block(
    L: NumLattice, block: Sequence[im.Vector], v: im.Vector, side: str = "left"
) -> im.Vector:
    """Project ``v`` to the right (``left``) or left (``right``) orthogonal of the block."""
    _check_unitriangular(L, block)
    if side == "left":
        for e in reversed(block):
            v = left_mutation(L, e, v)
    elif side == "right":
        for e in block:
            v = right_mutation(L, e, v)
    else:
        raise ValueError("side must be 'left' or 'right'")
    return v


def mutation_operator(L: NumLattice, block: Sequence[im.Vector], side: str = "left") -> LatticeOperator:
    cols = [mutate_through_block(L, block, im.unit(L.rank, j), side) for j in range(L.rank)]
    tag = "L" if side == "left" else "R"
    return LatticeOperator(im.from_columns(cols, L.rank), 1, f"{tag}_B", (L.rank, L.rank))


def rectangular_block(L: NumLattice, length: int, base: str = "O(0)") -> list[im.Vector]:
    e = L.label(base)
    out = []
    for _ in range(length):
        out.append(e)
        e = im.matvec(L.alpha, e)
    return out


def rotation_operator(L: NumLattice, X: CompleteIntersection | None = None, base: str = "O(0)") -> LatticeOperator:
    """``v -> L_{O}(alpha v)``; plain ``alpha`` when the index is 0."""
    ind = X.index if X is not None else L.index
    a = L.alpha_operator()
    if ind == 0:
        return LatticeOperator(a.matrix, 1, "O_B", a.shape)
    m = mutation_operator(L, [L.label(base)], "left")
    op = m @ a
    R = residual_sublattice(L, X) if X is not None else _residual(L, ind, base)
    restricted = R.restrict(op)
    if not restricted.is_unimodular():
        raise LatticeInvariantError("rotation is not invertible on the residual")
    return LatticeOperator(op.matrix, 1, "O_B", op.shape)


# ---------------------------------------------------------------------------
# residual sublattices


@dataclass(frozen=True)
class ResidualLattice:
    """Saturated sublattice ``{v : chi(b, v) = 0 for b in block}``."""

    ambient: NumLattice
    block: tuple[im.Vector, ...]
    basis: tuple[im.Vector, ...]
    inclusion: im.Matrix
    retraction: im.Matrix
    gram: im.Matrix

    @property
    def rank(self) -> int:
        return len(self.basis)

    def coords(self, v: im.Vector) -> im.Vector:
        x = im.matvec(self.retraction, v)
        if im.matvec(self.inclusion, x) != tuple(v):
            raise LatticeInvariantError(f"{v} is not in the residual sublattice")
        return x

    def embed(self, x: im.Vector) -> im.Vector:
        return im.matvec(self.inclusion, x)

    def chi(self, x: im.Vector, y: im.Vector) -> int:
        return im.bilinear(self.gram, x, y)

    def restrict(self, op: LatticeOperator) -> LatticeOperator:
        """Matrix of ``op`` on the residual; it must preserve the sublattice."""
        cols = [self.coords(op.apply(b)) for b in self.basis]
        # keep the sign bookkeeping separate from the matrix
        if op.shift_sign == -1:
            cols = [im.vscale(-1, c) for c in cols]
        k = self.rank
        m = im.from_columns(cols, k) if k else ()
        return LatticeOperator(m, op.shift_sign, op.name, (k, k))

    def operator_from(self, other: "ResidualLattice", op: LatticeOperator) -> LatticeOperator:
        """Matrix of ``op`` (ambient of ``other`` -> ambient of ``self``) in residual coordinates."""
        cols = []
        for b in other.basis:
            w = op.apply(b)
            if op.shift_sign == -1:
                w = im.vscale(-1, w)
            cols.append(self.coords(w))
        m = im.from_columns(cols, self.rank) if self.rank else ()
        return LatticeOperator(m, op.shift_sign, op.name, (self.rank, other.rank))

    def as_lattice(self, name: str = "R") -> NumLattice:
        return NumLattice(self.rank, self.gram, None, (), self.ambient.dim, 0, name=name)


def residual_from_block(L: NumLattice, block: Sequence[im.Vector]) -> ResidualLattice:
    rows = tuple(L.row(b) for b in block)
    basis = tuple(im.kernel(rows, L.rank)) if rows else tuple(im.unit(L.rank, i) for i in range(L.rank))
    inc = im.from_columns(list(basis), L.rank)
    ret = im.left_inverse(list(basis), L.rank)
    k = len(basis)
    g = im.matmul(im.matmul(im.transpose(inc, k), L.gram), inc, ncols=k) if k else ()
    return ResidualLattice(L, tuple(block), basis, inc, ret, g)


def _residual(L: NumLattice, length: int, base: str = "O(0)") -> ResidualLattice:
    return residual_from_block(L, rectangular_block(L, length, base))


def residual_sublattice(L: NumLattice, X: CompleteIntersection | None = None) -> ResidualLattice:
    """Right orthogonal of ``O_X, ..., O_X(ind - 1)``."""
    ind = X.index if X is not None else L.index
    R = _residual(L, ind)
    if X is not None and X.is_straight:
        expected = sum(d - 1 for d in X.degrees)
        if R.rank != expected:
            raise LatticeInvariantError(f"{X}: residual rank {R.rank} != {expected}")
    return R


# ---------------------------------------------------------------------------
# divisor presentations and the residual operator suite


@dataclass(frozen=True)
class DivisorPair:
    """Numerical shadow of a divisorial embedding ``X -> M`` of degree ``d``.

    ``pull`` is restriction, ``push`` its right adjoint (pushforward) and
    ``push_left`` its left adjoint.
    """

    source: NumLattice
    target: NumLattice
    pull: im.Matrix
    push: im.Matrix
    push_left: im.Matrix
    degree: int
    name: str = ""
    source_block: str = "O(0)"
    target_block: str = "O(0)"

    @property
    def m(self) -> int:
        return self.source.index

    @property
    def c(self) -> int:
        return gcd(self.degree, self.m)

    def pull_op(self) -> LatticeOperator:
        return LatticeOperator(self.pull, 1, "Psi", (self.target.rank, self.source.rank))

    def push_op(self) -> LatticeOperator:
        return LatticeOperator(self.push, 1, "PsiR", (self.source.rank, self.target.rank))

    def push_left_op(self) -> LatticeOperator:
        return LatticeOperator(self.push_left, 1, "PsiL", (self.source.rank, self.target.rank))


def make_push_left(push: im.Matrix, target_alpha: im.Matrix, d: int) -> im.Matrix:
    # left adjoint of restriction: y -> i_*(y (x) O(d))[-1]
    return im.scale(-1, im.matmul(push, im.power(target_alpha, d)))


@lru_cache(maxsize=None)
def divisor_pair(X: CompleteIntersection) -> DivisorPair:
    M, d = X.presentation()
    LM, LX = build_lattice(M), build_lattice(X)
    space = X.space
    size = space.total_weight
    pull = im.matmul(LX.proj, LM.lift, ncols=LM.rank)
    pre_push = im.from_columns(
        [(KClass.line(space, j) - KClass.line(space, j - d)).window_vector() for j in range(size)], size
    )
    push = im.matmul(im.matmul(LM.proj, pre_push), LX.lift, ncols=LX.rank)
    push_left = make_push_left(push, LX.alpha, d)
    return DivisorPair(LM, LX, pull, push, push_left, d, str(X))


def right_adjoint_projection(C: NumLattice, R: ResidualLattice) -> LatticeOperator:
    """Right adjoint of the inclusion of ``R`` (matrix ``rank R x rank C``).

    ``F -> F - sum c_i S(b_i)``, with the coefficients fixed by
    orthogonality to the block; the system is unitriangular.
    """
    S = serre_operator(C)
    block = list(R.block)
    sb = [S.apply(b) for b in block]
    cols = []
    for j in range(C.rank):
        f = im.unit(C.rank, j)
        coeff = [0] * len(block)
        # chi(b_j, S b_i) = chi(b_i, b_j): lower unitriangular in (j, i)
        for jj, b in enumerate(block):
            rhs = C.chi(b, f) - sum(coeff[i] * C.chi(b, sb[i]) for i in range(jj))
            diag = C.chi(b, sb[jj])
            if diag not in (1, -1):
                raise BlockNotUnitriangular("block is not exceptional")
            coeff[jj] = rhs * diag
        for i, s in enumerate(sb):
            f = im.vsub(f, im.vscale(coeff[i], s))
        cols.append(R.coords(f))
    m = im.from_columns(cols, R.rank) if R.rank else ()
    return LatticeOperator(m, 1, "iota^!", (R.rank, C.rank))


def block_projection(C: NumLattice, block: Sequence[im.Vector]) -> im.Matrix:
    """Right adjoint of the inclusion of the span of ``block``, followed by the inclusion."""
    _check_unitriangular(C, block)
    g = block_gram(C, block)
    cols = []
    for j in range(C.rank):
        f = im.unit(C.rank, j)
        rhs = [C.chi(b, f) for b in block]
        coeff = [0] * len(block)
        # g is upper unitriangular: back substitution
        for i in reversed(range(len(block))):
            coeff[i] = rhs[i] - sum(g[i][k] * coeff[k] for k in range(i + 1, len(block)))
        v = (0,) * C.rank
        for c, b in zip(coeff, block):
            v = im.vadd(v, im.vscale(c, b))
        cols.append(v)
    return im.from_columns(cols, C.rank)


def block_twist(P: DivisorPair) -> LatticeOperator:
    """``id - Psi_B Psi_B^!`` on the target, for ``Psi`` restricted to the source block."""
    C, D = P.source, P.target
    base = [C.label(P.source_block)]
    proj = block_projection(C, base)
    m = im.matmul(im.matmul(P.pull, proj), P.push)
    return LatticeOperator(im.sub(im.identity(D.rank), m), 1, "T_B", (D.rank, D.rank))


@dataclass(frozen=True)
class ResidualSuite:
    pair: DivisorPair
    source_residual: ResidualLattice
    target_residual: ResidualLattice
    ops: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> LatticeOperator:
        return self.ops[key]


def suite_from_pair(P: DivisorPair) -> ResidualSuite:
    C, D = P.source, P.target
    d, m = P.degree, P.m
    ind_d = D.index
    if ind_d != m - d:
        raise LatticeInvariantError(f"index bookkeeping: {ind_d} != {m} - {d}")
    RC = _residual(C, m, P.source_block)
    RD = _residual(D, ind_d, P.target_block)
    ops: dict[str, LatticeOperator] = {}

    def side(L: NumLattice, R: ResidualLattice, ind: int, T_full: LatticeOperator, prefix: str, base: str):
        S = serre_operator(L)
        a = L.alpha_operator()
        lrect = mutation_operator(L, list(R.block), "left")
        s_inv_full = LatticeOperator(im.matmul(lrect.matrix, im.power(L.alpha, ind)), S.shift_sign, "", S.shape)
        S_mut = R.restrict(s_inv_full).inverse()
        if ind == 0 and L is D:
            # no block in D: rotate with the twist of Psi restricted to the source block
            rot = block_twist(P) @ a
        elif ind == 0:
            rot = LatticeOperator(a.matrix, 1, "O_B", a.shape)
        else:
            rot = mutation_operator(L, [L.label(base)], "left") @ a
        O_R = R.restrict(rot)
        s_R = R.restrict(S @ a.power(ind))
        S_rot = s_R @ O_R.power(-ind)
        t_R = R.restrict(T_full @ a.power(d))
        T = O_R.power(-d) @ t_R
        named = {
            "S_R_mutation": S_mut,
            "S_R_rotation": S_rot,
            "s_R": s_R,
            "t_R": t_R,
            "O_B": O_R,
            "T": T,
        }
        for k, v in named.items():
            ops[f"{prefix}{k}"] = LatticeOperator(v.matrix, v.shift_sign, f"{prefix}{k}", v.shape)

    ident_d = LatticeOperator.identity(D.rank)
    ident_c = LatticeOperator.identity(C.rank)
    pull, push = P.pull_op(), P.push_op()
    T_D = LatticeOperator(im.sub(ident_d.matrix, (pull @ push).matrix), 1, "T_D", ident_d.shape)
    T_C = LatticeOperator(im.sub(ident_c.matrix, (push @ pull).matrix), 1, "T_C", ident_c.shape) if C.rank else ident_c
    side(D, RD, ind_d, T_D, "", P.target_block)
    side(C, RC, m, T_C, "source_", P.source_block)
    ops["T_target"] = ops.pop("T")
    ops["T_source"] = ops.pop("source_T")

    # twists straight from the adjunction: id - Psi_R Psi_R^!  and  id - Psi_R^! Psi_R
    psi_R = RD.operator_from(RC, pull)
    shriek = right_adjoint_projection(C, RC)
    psi_R_shriek = LatticeOperator(
        im.matmul(im.matmul(shriek.matrix, push.matrix), RD.inclusion, ncols=RD.rank) if RC.rank else (),
        1,
        "Psi_R^!",
        (RC.rank, RD.rank),
    )
    ops["Psi_R"] = LatticeOperator(psi_R.matrix, 1, "Psi_R", psi_R.shape)
    ops["Psi_R_shriek"] = psi_R_shriek
    ops["T_target_adjunction"] = LatticeOperator(
        im.sub(im.identity(RD.rank), (psi_R @ psi_R_shriek).matrix) if RD.rank else (),
        1,
        "T_target_adjunction",
        (RD.rank, RD.rank),
    )
    ops["T_source_adjunction"] = LatticeOperator(
        im.sub(im.identity(RC.rank), (psi_R_shriek @ psi_R).matrix) if RC.rank else (),
        1,
        "T_source_adjunction",
        (RC.rank, RC.rank),
    )
    for key, op in ops.items():
        if op.shape[0] == op.shape[1] and key not in ("Psi_R", "Psi_R_shriek") and not op.is_unimodular():
            raise LatticeInvariantError(f"{key} is not invertible over Z")
    return ResidualSuite(P, RC, RD, ops)


@lru_cache(maxsize=None)
def residual_operator_suite(X: CompleteIntersection) -> ResidualSuite:
    """Serre functors, rotations and twists on the residual lattices of ``X`` and ``M``.

    Keys of the ``ops`` mapping: ``S_R_mutation``, ``S_R_rotation``, ``s_R``,
    ``t_R``, ``O_B``, ``T_target`` on the residual of ``X``; the same with a
    ``source_`` prefix (and ``T_source``) on the residual of ``M``; plus
    the adjunction-built twists and ``Psi_R``.
    """
    if X.split is None:
        raise SplitRequired(f"{X} needs a split presentation")
    return suite_from_pair(divisor_pair(X))


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    status: str
    witness: im.Vector | None = None
    lhs_image: im.Vector | None = None
    rhs_image: im.Vector | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "status": self.status}
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = list(self.witness)
            out["lhs_image"] = list(self.lhs_image or ())
            out["rhs_image"] = list(self.rhs_image or ())
        return out


@dataclass(frozen=True)
class VerificationReport:
    subject: str
    checks: tuple[IdentityCheck, ...]
    notes: tuple[str, ...] = (SCOPE_NOTE,)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def first_failure(self) -> IdentityCheck | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "notes": list(self.notes),
        }


def check_equal(name: str, lhs: LatticeOperator, rhs: LatticeOperator, detail: str = "") -> IdentityCheck:
    c = compare(lhs, rhs)
    return IdentityCheck(name, c.equal, c.status, c.witness, c.lhs_image, c.rhs_image, detail)


def check_true(name: str, ok: bool, detail: str = "") -> IdentityCheck:
    return IdentityCheck(name, ok, "holds" if ok else "fails", detail=detail)


def _scalar(n: int, sign: int) -> LatticeOperator:
    return LatticeOperator(im.identity(n), sign, "", (n, n))


def factorization_checks(suite: ResidualSuite, d: int, m: int, prefix: str = "") -> list[IdentityCheck]:
    """Power identities of the main factorization, target side, in ``(m, d, c)`` form."""
    ops = suite.ops
    c = gcd(d, m)
    out = []
    S = ops["S_R_mutation"]
    T, t, s = ops["T_target"], ops["t_R"], ops["s_R"]
    lhs = S.power(d // c)
    rhs = T.power((m - d) // c) @ t.power((d - m) // c) @ s.power(d // c)
    out.append(check_equal(f"{prefix}target_factorization", lhs, rhs, f"c = {c}"))
    out.append(check_equal(f"{prefix}serre_two_routes", ops["S_R_mutation"], ops["S_R_rotation"]))
    out.append(check_equal(f"{prefix}twist_formula_target", ops["T_target"], ops["T_target_adjunction"]))
    comm = all(a.commutes_with(b) for a in (T, t, s, S) for b in (T, t, s, S))
    out.append(check_true(f"{prefix}target_factors_commute", comm))
    return out


def source_checks(suite: ResidualSuite, d: int, m: int, prefix: str = "") -> list[IdentityCheck]:
    ops = suite.ops
    c = gcd(d, m)
    S = ops["source_S_R_mutation"]
    T, t, s = ops["T_source"], ops["source_t_R"], ops["source_s_R"]
    out = [
        check_equal(
            f"{prefix}source_factorization",
            S.power(d // c),
            T.power(m // c) @ t.power(-m // c) @ s.power(d // c),
            f"c = {c}",
        ),
        check_equal(f"{prefix}source_serre_two_routes", ops["source_S_R_mutation"], ops["source_S_R_rotation"]),
        check_equal(f"{prefix}twist_formula_source", ops["T_source"], ops["T_source_adjunction"]),
        check_true(
            f"{prefix}source_factors_commute",
            all(a.commutes_with(b) for a in (T, t, s, S) for b in (T, t, s, S)),
        ),
    ]
    return out


def verify_identities(X: CompleteIntersection) -> VerificationReport:
    """Exact checks of the Serre power identities on the residual lattices."""
    if X.split is None:
        X = X.with_split(-1)
    suite = residual_operator_suite(X)
    M, d = X.presentation()
    m = M.index
    c = gcd(d, m)
    ops = suite.ops
    R = suite.target_residual
    checks: list[IdentityCheck] = []

    # the specialization with t = [2] and s = [dim X]
    num = d * X.dim - 2 * X.index
    if (d % c) or (X.index % c) or (num % c):
        checks.append(check_true("divisor_identity", True, "exponents not integral; (m, d, c) form used instead"))
    else:
        S = ops["S_R_mutation"]
        rhs = ops["T_target"].power(X.index // c) @ _scalar(R.rank, (-1) ** ((num // c) % 2))
        checks.append(check_equal("divisor_identity", S.power(d // c), rhs, f"d/c = {d // c}, ind/c = {X.index // c}"))
    checks.extend(factorization_checks(suite, d, m))
    checks.extend(source_checks(suite, d, m))
    if X.k == 1 and X.is_straight:
        n = X.n
        lhs = ops["S_R_mutation"].power(d)
        checks.append(
            check_equal("hypersurface_fractional_cy", lhs, _scalar(R.rank, (-1) ** (((n + 1) * (d - 2)) % 2)))
        )
    dets = all(op.is_unimodular() for k, op in ops.items() if k not in ("Psi_R", "Psi_R_shriek"))
    checks.append(check_true("operators_unimodular", dets))
    return VerificationReport(str(X), tuple(checks))


def hypersurface_rotation_check(X: CompleteIntersection) -> IdentityCheck:
    """``O_B^(d (n + 1 - d))`` is the identity on the residual of a hypersurface."""
    if X.k != 1 or not X.is_straight:
        raise ValueError("needs a hypersurface in P^n")
    L = build_lattice(X)
    R = residual_sublattice(L, X)
    O = R.restrict(rotation_operator(L, X))
    d, n = X.degrees[0], X.n
    e = d * (n + 1 - d)
    return check_equal("rotation_period", O.power(e), LatticeOperator.identity(R.rank), f"exponent {e}")


# ---------------------------------------------------------------------------
# filtration gram and spherical collections


def gram_filtration(X: CompleteIntersection) -> im.Matrix:
    """``chi(O_{X_p}, O_{X_q})`` for linear sections ``X_p`` of codimension ``p``."""
    space = X.space
    kx = koszul_class(space, X.degrees)
    hyper = KClass(space, ((0, 1), (-1, -1)))
    powers = [KClass.line(space, 0)]
    for _ in range(X.dim):
        powers.append(powers[-1] * hyper)
    size = X.dim + 1
    g = tuple(tuple(chi_pair(powers[p], powers[q] * kx) for q in range(size)) for p in range(size))
    for p in range(size):
        for q in range(size):
            if p + q > X.dim and g[p][q]:
                raise LatticeInvariantError(f"filtration gram not anti-triangular at ({p}, {q})")
            if p + q == X.dim and abs(g[p][q]) != X.degree:
                raise LatticeInvariantError(f"anti-diagonal entry {g[p][q]} != +-{X.degree}")
    return g


@dataclass(frozen=True)
class SphericalCollectionReport:
    ok: bool
    pairing_ok: bool
    serre_ok: bool
    pairing: im.Matrix
    expected: im.Matrix


def spherical_collection_report(
    gram: im.Matrix,
    serre: LatticeOperator,
    classes: Sequence[im.Vector],
    sigma: Sequence[int],
    parities: Sequence[int],
) -> SphericalCollectionReport:
    r = len(classes)
    got = tuple(tuple(im.bilinear(gram, classes[i], classes[j]) for j in range(r)) for i in range(r))
    exp = tuple(
        tuple((1 if i == j else 0) + ((-1) ** parities[j] if sigma[j] == i else 0) for j in range(r)) for i in range(r)
    )
    inv = {s: j for j, s in enumerate(sigma)}
    serre_ok = all(
        serre.apply(classes[i]) == im.vscale((-1) ** parities[inv[i]], classes[inv[i]]) for i in range(r)
    )
    return SphericalCollectionReport(got == exp and serre_ok, got == exp, serre_ok, got, exp)


def check_spherical_collection(
    L,
    classes: Sequence[im.Vector],
    sigma: Sequence[int],
    parities: Sequence[int],
    serre: LatticeOperator | None = None,
) -> bool:
    """Numerical test that ``classes`` form a ``sigma``-spherical collection.

    ``L`` is anything with a ``gram`` (a ``NumLattice`` or a residual
    lattice).  ``serre`` defaults to the Serre operator of ``L``.
    ``sigma[j]`` is the image of ``j``.
    """
    if sorted(sigma) != list(range(len(classes))):
        raise ValueError("sigma must be a permutation of the class indices")
    if serre is None:
        serre = serre_operator(L)
    return spherical_collection_report(L.gram, serre, classes, sigma, parities).ok
