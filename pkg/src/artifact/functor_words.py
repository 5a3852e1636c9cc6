"""Typed words in the functors of a spherical setup, with a rewriting normalizer.

A word is read as a composition, so ``A o B`` applies ``B`` first.  Shifts
are central, so a word keeps a single pooled shift together with the slot
where it is printed.  Equality of words is decided syntactically after
normalization, or else numerically by evaluation in lattice models; the
latter is model-relative and never a claim of natural isomorphism.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from . import intmat as im
from .ci_lattice import LatticeOperator

C, D, RC, RD = "C", "D", "R_C", "R_D"
CATEGORY_PREFERENCE = (RD, RC, D, C)

# name -> list of (source, target, invertible)
TYPING: dict[str, tuple[tuple[str, str, bool], ...]] = {
    "S_C": ((C, C, True),),
    "a_C": ((C, C, True),),
    "T_C": ((C, C, True),),
    "T_Cinv": ((C, C, True),),
    "L_B": ((C, C, False),),
    "R_B": ((C, C, False),),
    "O_B": ((C, C, False), (RC, RC, True)),
    "S_D": ((D, D, True),),
    "a_D": ((D, D, True),),
    "T_D": ((D, D, True),),
    "T_Dinv": ((D, D, True),),
    "O_Bprime": ((D, D, False), (RD, RD, True)),
    "Psi": ((C, D, False),),
    "PsiL": ((D, C, False),),
    "PsiR": ((D, C, False),),
    "Psi_R": ((RC, RD, False),),
    "T_RC": ((RC, RC, True),),
    "T_RD": ((RD, RD, True),),
    "T_RD1": ((RD, RD, True),),
    "T_RD2": ((RD, RD, True),),
    "s_R": ((RC, RC, True), (RD, RD, True)),
    "t_R": ((RC, RC, True), (RD, RD, True)),
    "S_R": ((RC, RC, True), (RD, RD, True)),
}

C_CLIQUE = frozenset({"S_C", "T_C", "T_Cinv", "a_C"})
D_CLIQUE = frozenset({"S_D", "T_D", "T_Dinv", "a_D"})
RC_CLIQUE = frozenset({"O_B", "S_R", "T_RC", "s_R", "t_R"})
RD_CLIQUE = frozenset({"O_Bprime", "S_R", "T_RD", "s_R", "t_R"})


class WordError(ValueError):
    pass


class WordSyntaxError(WordError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class TypeMismatch(WordError):
    def __init__(self, expected: str, found: str, position: int | None = None):
        msg = f"expected {expected}, found {found}"
        if position is not None:
            msg += f" (atom {position})"
        super().__init__(msg)
        self.expected, self.found, self.position = expected, found, position


class UnknownGenerator(WordError):
    pass


class NoInterpretation(WordError):
    pass


class ContextRequired(WordError):
    pass


class BudgetExceeded(RuntimeError):
    def __init__(self, partial: "FunctorWord", steps: int):
        super().__init__(f"normalization budget of {steps} steps exhausted")
        self.partial = partial


@dataclass(frozen=True)
class Atom:
    name: str
    exp: int
    src: str
    tgt: str

    def text(self) -> str:
        return self.name if self.exp == 1 else f"{self.name}^{self.exp}"


@dataclass(frozen=True)
class FunctorWord:
    """Composition ``atoms[0] o atoms[1] o ...`` with a pooled shift printed before ``atoms[slot]``."""

    atoms: tuple[Atom, ...]
    shift: int
    slot: int | None
    source: str
    target: str

    def __post_init__(self) -> None:
        if self.shift == 0:
            object.__setattr__(self, "slot", None)
        elif self.slot is None:
            object.__setattr__(self, "slot", len(self.atoms))

    def tokens(self) -> list[str]:
        out = [a.text() for a in self.atoms]
        if self.shift:
            out.insert(self.slot, f"[{self.shift}]")
        return out

    def text(self, sep: str = " ∘ ") -> str:
        toks = self.tokens()
        return sep.join(toks) if toks else "id"

    def ascii(self) -> str:
        return self.text(" o ")

    def __str__(self) -> str:
        return self.text()

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def type(self) -> tuple[str, str]:
        return (self.source, self.target)

    def compose(self, other: "FunctorWord") -> "FunctorWord":
        """``self o other``."""
        if self.source != other.target:
            raise TypeMismatch(self.source, other.target)
        slots = []
        if self.shift:
            slots.append(self.slot)
        if other.shift:
            slots.append(len(self.atoms) + other.slot)
        return FunctorWord(
            self.atoms + other.atoms,
            self.shift + other.shift,
            min(slots) if slots else None,
            other.source,
            self.target,
        )


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<compose>∘|\*)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<caret>\^)|(?P<int>[+-]?\d+)"
    r"|(?P<lbrack>\[)|(?P<rbrack>\])|(?P<lparen>\()|(?P<rparen>\))|(?P<lbrace>\{)|(?P<rbrace>\}))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    pos, out = 0, []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise WordSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        val = m.group(kind)
        start = m.start(kind)
        if kind == "name" and val == "o":
            kind = "compose"
        out.append((kind, val, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise WordSyntaxError(f"expected {kind}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def word(self) -> list:
        items = self.atom()
        while self.peek()[0] == "compose":
            self.i += 1
            items += self.atom()
        return items

    def exponent(self) -> int:
        if self.peek()[0] != "caret":
            return 1
        self.i += 1
        if self.peek()[0] == "lbrace":
            self.i += 1
            val = int(self.take("int")[1])
            self.take("rbrace")
            return val
        return int(self.take("int")[1])

    def atom(self) -> list:
        kind, val, pos = self.peek()
        if kind == "name":
            self.i += 1
            exp = self.exponent()
            if val == "id":
                return []
            if val not in TYPING:
                raise UnknownGenerator(f"unknown generator {val!r} at position {pos}")
            return [(val, exp, pos)] if exp else []
        if kind == "lbrack":
            self.i += 1
            n = int(self.take("int")[1])
            self.take("rbrack")
            return [("shift", n, pos)]
        if kind == "lparen":
            self.i += 1
            inner = self.word()
            self.take("rparen")
            return inner
        raise WordSyntaxError(f"expected a generator, shift or '(', found {val or 'end of input'!r}", pos)


def _assign(items: Sequence[tuple[str, int]], source: str) -> tuple[list[Atom] | None, int, str]:
    """Type the word right to left starting from ``source``; returns atoms, failure index, target."""
    cur = source
    typed: list[Atom] = [None] * len(items)  # type: ignore[list-item]
    for idx in range(len(items) - 1, -1, -1):
        name, exp = items[idx]
        opts = [t for t in TYPING[name] if t[0] == cur]
        if not opts:
            return None, idx, cur
        src, tgt, inv = opts[0]
        if (exp < 0 and not inv) or (exp != 1 and src != tgt):
            return None, idx, cur
        typed[idx] = Atom(name, exp, src, tgt)
        cur = tgt
    return typed, -1, cur


def type_atoms(
    items: Sequence[tuple[str, int]], source: str | None = None, target: str | None = None
) -> tuple[list[Atom], str, str]:
    sources = [source] if source else list(CATEGORY_PREFERENCE)
    best_fail = None
    for s in sources:
        typed, fail, tgt = _assign(items, s)
        if typed is None:
            if best_fail is None or fail < best_fail[0]:
                best_fail = (fail, s, tgt)
            continue
        if target and tgt != target:
            if best_fail is None:
                best_fail = (-1, s, tgt)
            continue
        return typed, s, tgt
    if best_fail is None or best_fail[0] < 0:
        raise TypeMismatch(f"a word ending in {target}", f"{best_fail[2] if best_fail else '?'}")
    fail, s, cur = best_fail
    name, exp = items[fail]
    allowed = ", ".join(f"{a}->{b}" + ("" if inv else " (not invertible)") for a, b, inv in TYPING[name])
    opts = [t for t in TYPING[name] if t[0] == cur]
    if opts and exp != 1 and opts[0][0] != opts[0][1]:
        raise TypeMismatch(f"exponent 1 on {name}: {opts[0][0]}->{opts[0][1]}", f"exponent {exp}", fail)
    if opts and exp < 0:
        raise TypeMismatch(f"an invertible typing of {name}", f"exponent {exp} on {cur}", fail)
    raise TypeMismatch(f"{name} with typing among {allowed}", f"input category {cur}", fail)


def parse_word(text: str, source: str | None = None, target: str | None = None) -> FunctorWord:
    """Parse and type a word; ambiguous typings prefer ``R_D``, then ``R_C``, ``D``, ``C``."""
    p = _Parser(text)
    raw = p.word()
    p.take("end")
    shift, slot, items = 0, None, []
    for name, exp, _pos in raw:
        if name == "shift":
            shift += exp
            if slot is None:
                slot = len(items)
        else:
            items.append((name, exp))
    if not items:
        cat = source or target or CATEGORY_PREFERENCE[0]
        if source and target and source != target:
            raise TypeMismatch(source, target)
        return FunctorWord((), shift, slot, cat, cat)
    atoms, s, t = type_atoms(items, source, target)
    return FunctorWord(tuple(atoms), shift, slot, s, t)


def make_word(parts: Iterable, source: str | None = None, target: str | None = None) -> FunctorWord:
    """Build a word from ``(name, exp)`` pairs and ``("shift", n)`` entries."""
    text = " o ".join(f"[{e}]" if n == "shift" else f"{n}^{e}" for n, e in parts if e)
    return parse_word(text or "id", source, target)


# ---------------------------------------------------------------------------
# rewriting


@dataclass
class _State:
    atoms: list[Atom]
    shift: int
    slot: int | None

    def replace(self, i: int, j: int, new: Sequence) -> None:
        """Replace ``atoms[i:j]`` by ``new`` (atoms and ``("shift", n)`` markers)."""
        atoms: list[Atom] = []
        inserted: list[int] = []
        added = 0
        for item in new:
            if isinstance(item, Atom):
                if item.exp:
                    atoms.append(item)
            else:
                if item[1]:
                    inserted.append(i + len(atoms))
                    added += item[1]
        delta = len(atoms) - (j - i)
        slots = []
        if self.slot is not None:
            s = self.slot
            if s > i:
                s = s + delta if s >= j else i
            slots.append(s)
        slots += inserted
        self.atoms[i:j] = atoms
        self.shift += added
        self.slot = min(slots) if (slots and self.shift) else None


def _with_exp(a: Atom, exp: int) -> Atom:
    return replace(a, exp=exp)


def _rule_merge(st: _State, ctx) -> bool:
    for i in range(len(st.atoms) - 1):
        a, b = st.atoms[i], st.atoms[i + 1]
        if a.name == b.name and a.src == b.src and a.tgt == b.tgt:
            e = a.exp + b.exp
            st.replace(i, i + 2, [_with_exp(a, e)] if e else [])
            return True
    return False


def _rule_r1(st: _State, ctx) -> bool:
    for i, a in enumerate(st.atoms):
        if a.name in ("T_Cinv", "T_Dinv"):
            st.replace(i, i + 1, [Atom(a.name[:-3], -a.exp, a.src, a.tgt)])
            return True
    return False


def _run(st: _State, start: int, step: int, clique: frozenset, cat: str) -> range:
    j = start
    while 0 <= j < len(st.atoms) and st.atoms[j].name in clique and st.atoms[j].src == cat:
        j += step
    return range(start, j, step)


def _rule_r2(st: _State, ctx) -> bool:
    for i, a in enumerate(st.atoms):
        if a.name != "Psi":
            continue
        for j in _run(st, i + 1, 1, C_CLIQUE, C):
            t = st.atoms[j]
            if t.name == "T_C":
                k = t.exp
                new = [Atom("T_D", k, D, D), ("shift", -2 * k), a] + st.atoms[i + 1 : j]
                st.replace(i, j + 1, new)
                return True
    return False


def _serre_exchange(st: _State, center: str, left_name: str, left_cat: str, left_clique, right_name: str,
                    right_cat: str, right_clique, forward: bool) -> tuple[int, int, int] | None:
    for i, a in enumerate(st.atoms):
        if a.name != center:
            continue
        lefts = [j for j in _run(st, i - 1, -1, left_clique, left_cat) if st.atoms[j].name == left_name]
        rights = [j for j in _run(st, i + 1, 1, right_clique, right_cat) if st.atoms[j].name == right_name]
        for p in lefts:
            for q in rights:
                lp, rq = st.atoms[p].exp, st.atoms[q].exp
                if (forward and lp >= 1 and rq <= -1) or (not forward and lp <= -1 and rq >= 1):
                    return p, i, q
    return None


def _rule_r3(st: _State, ctx) -> bool:
    for forward in (True, False):
        hit = _serre_exchange(st, "Psi", "S_D", D, D_CLIQUE, "S_C", C, C_CLIQUE, forward)
        if hit is None:
            continue
        p, i, q = hit
        step = 1 if forward else -1
        sd, psi, sc = st.atoms[p], st.atoms[i], st.atoms[q]
        new = (
            ([_with_exp(sd, sd.exp - step)] if sd.exp - step else [])
            + st.atoms[p + 1 : i]
            + [Atom("T_D", -step, D, D), psi, ("shift", step)]
            + st.atoms[i + 1 : q]
            + ([_with_exp(sc, sc.exp + step)] if sc.exp + step else [])
        )
        st.replace(p, q + 1, new)
        return True
    return False


def _rule_r4(st: _State, ctx) -> bool:
    for forward, center, out in ((True, "PsiL", "PsiR"), (False, "PsiR", "PsiL")):
        hit = _serre_exchange(st, center, "S_C", C, C_CLIQUE, "S_D", D, D_CLIQUE, forward)
        if hit is None:
            continue
        p, i, q = hit
        step = 1 if forward else -1
        sc, psi, sd = st.atoms[p], st.atoms[i], st.atoms[q]
        new = (
            ([_with_exp(sc, sc.exp - step)] if sc.exp - step else [])
            + st.atoms[p + 1 : i]
            + [replace(psi, name=out)]
            + st.atoms[i + 1 : q]
            + ([_with_exp(sd, sd.exp + step)] if sd.exp + step else [])
        )
        st.replace(p, q + 1, new)
        return True
    return False


def _rule_r7(st: _State, ctx) -> bool:
    if ctx is None:
        return False
    d, _m = ctx
    for i, a in enumerate(st.atoms):
        if a.name == "T_RC":
            st.replace(i, i + 1, [Atom("O_B", -d * a.exp, RC, RC), Atom("t_R", a.exp, RC, RC)])
            return True
        if a.name == "T_RD":
            st.replace(i, i + 1, [Atom("O_Bprime", -d * a.exp, RD, RD), Atom("t_R", a.exp, RD, RD)])
            return True
    return False


def _rule_r8(st: _State, ctx) -> bool:
    if ctx is None:
        return False
    d, m = ctx
    for i, a in enumerate(st.atoms):
        if a.name != "S_R":
            continue
        if a.src == RC:
            st.replace(i, i + 1, [Atom("s_R", a.exp, RC, RC), Atom("O_B", -m * a.exp, RC, RC)])
        else:
            st.replace(i, i + 1, [Atom("s_R", a.exp, RD, RD), Atom("O_Bprime", -(m - d) * a.exp, RD, RD)])
        return True
    return False


def _rule_r10(st: _State, ctx) -> bool:
    for i, a in enumerate(st.atoms):
        if a.name == "T_RD":
            st.replace(i, i + 1, [Atom("T_RD1", a.exp, RD, RD), Atom("T_RD2", a.exp, RD, RD)])
            return True
    return False


def _sort_cliques(st: _State, cliques: Sequence[tuple[frozenset, str]]) -> bool:
    for clique, cat in cliques:
        i = 0
        while i < len(st.atoms):
            run = _run(st, i, 1, clique, cat)
            if len(run) > 1:
                seg = st.atoms[run.start : run.stop]
                ordered = sorted(seg, key=lambda a: a.name)
                if ordered != seg:
                    st.replace(run.start, run.stop, ordered)
                    return True
            i = max(run.stop, i + 1)
    return False


def _rule_r5_r6(st: _State, ctx) -> bool:
    return _sort_cliques(st, ((C_CLIQUE, C), (D_CLIQUE, D)))


def _rule_r9(st: _State, ctx) -> bool:
    return _sort_cliques(st, ((RC_CLIQUE, RC), (RD_CLIQUE, RD)))


RULES = {
    "merge": _rule_merge,
    "R1": _rule_r1,
    "R2": _rule_r2,
    "R3": _rule_r3,
    "R4": _rule_r4,
    "R7": _rule_r7,
    "R8": _rule_r8,
    "R10": _rule_r10,
    "R5": _rule_r5_r6,
    "R6": _rule_r5_r6,
    "R9": _rule_r9,
}

RULE_NOTES = {
    "R1": "inverse twists: T_Cinv = T_C^-1 and T_Dinv = T_D^-1",
    "R2": "intertwining: Psi o T_C = T_D o [-2] o Psi",
    "R3": "double right adjoint: S_D o Psi o S_C^-1 = T_D^-1 o Psi o [1]",
    "R4": "adjoints: PsiR = S_C o PsiL o S_D^-1",
    "R5": "Serre functors commute with autoequivalences",
    "R6": "twists commute with the twisting autoequivalence",
    "R7": "residual twists: T_RC = O_B^-d o t_R, T_RD = O_Bprime^-d o t_R",
    "R8": "residual Serre functor: S_R = s_R o O_B^-m (source), s_R o O_Bprime^-(m-d) (target)",
    "R9": "the residual factors commute",
    "R10": "twist factorization along a decomposition of the residual source (expansion)",
}

_ORDER = ("merge", "R1", "R2", "R3", "R4", "R7", "R8", "R10", "R5", "R9")


def _state(w: FunctorWord) -> _State:
    return _State(list(w.atoms), w.shift, w.slot)


def _word(st: _State, w: FunctorWord) -> FunctorWord:
    return FunctorWord(tuple(st.atoms), st.shift, st.slot, w.source, w.target)


def apply_rule(rule: str, w: FunctorWord, context: tuple[int, int] | None = None) -> FunctorWord | None:
    """One leftmost application of ``rule``; ``None`` if it does not match."""
    st = _state(w)
    if RULES[rule](st, context):
        return _word(st, w)
    return None


def normalize(
    w: FunctorWord,
    context: tuple[int, int] | None = None,
    expand: bool = False,
    budget: int = 10_000,
) -> FunctorWord:
    """Rewrite to a fixpoint; ``context = (d, m)`` enables the residual expansions."""
    st = _state(w)
    order = [r for r in _ORDER if expand or r != "R10"]
    for _ in range(budget):
        for r in order:
            if RULES[r](st, context):
                break
        else:
            return _word(st, w)
    raise BudgetExceeded(_word(st, w), budget)


# ---------------------------------------------------------------------------
# evaluation and equality


def evaluate(w: FunctorWord, model) -> LatticeOperator:
    """Matrix-with-sign of ``w`` in ``model`` (anything with ``rank(cat)`` and ``generator(name, cat)``)."""
    out = LatticeOperator.identity(model.rank(w.target))
    for a in w.atoms:
        g = model.generator(a.name, a.src)
        out = out @ (g.power(a.exp) if a.exp != 1 else g)
    if w.shift % 2:
        out = out.signed(-1)
    return LatticeOperator(out.matrix, out.shift_sign, w.ascii(), out.shape)


@dataclass(frozen=True)
class Equal:
    word: FunctorWord


@dataclass(frozen=True)
class EqualInAllModels:
    models_checked: int
    models: tuple[str, ...] = ()


@dataclass(frozen=True)
class DistinguishedBy:
    model: str
    witness: im.Vector
    lhs_image: im.Vector
    rhs_image: im.Vector
    status: str


def equal_words(w1: FunctorWord, w2: FunctorWord, models: Sequence) -> Equal | EqualInAllModels | DistinguishedBy:
    """Syntactic equality after normalization, else numerical comparison in every model."""
    from .ci_lattice import compare

    if w1.type != w2.type:
        raise TypeMismatch(f"{w1.source}->{w1.target}", f"{w2.source}->{w2.target}")
    n1, n2 = normalize(w1), normalize(w2)
    if n1 == n2:
        return Equal(n1)
    checked = []
    for model in models:
        try:
            a, b = evaluate(w1, model), evaluate(w2, model)
        except (NoInterpretation, ContextRequired):
            continue
        checked.append(model.name)
        c = compare(a, b)
        if not c.equal:
            return DistinguishedBy(model.name, c.witness, c.lhs_image, c.rhs_image, c.status)
    if not checked:
        raise NoInterpretation("no supplied model interprets both words")
    return EqualInAllModels(len(checked), tuple(checked))


def serre_identity_words(d: int, m: int, side: str = "target") -> tuple[FunctorWord, FunctorWord]:
    """Both sides of the Serre power identity on the residual of the target or the source."""
    from math import gcd

    c = gcd(d, m)
    if side == "target":
        lhs = make_word([("S_R", d // c)], RD, RD)
        rhs = make_word([("T_RD", (m - d) // c), ("t_R", (d - m) // c), ("s_R", d // c)], RD, RD)
    else:
        lhs = make_word([("S_R", d // c)], RC, RC)
        rhs = make_word([("T_RC", m // c), ("t_R", -m // c), ("s_R", d // c)], RC, RC)
    return lhs, rhs
