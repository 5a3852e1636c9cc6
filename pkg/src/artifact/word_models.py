"""Lattice models in which functor words are evaluated."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

from . import intmat as im
from .ci_lattice import (
    CompleteIntersection,
    DivisorPair,
    LatticeOperator,
    ResidualSuite,
    block_twist,
    divisor_pair,
    mutation_operator,
    serre_operator,
    suite_from_pair,
)
from .functor_words import C, D, RC, RD, ContextRequired, NoInterpretation
from .quadric_spinor import _spinor_twist, extend_quadric_lattice, quadric_divisor_pair

STANDARD_SPECS = ("P4:3", "P5:3", "P5:3,2/2", "P5:3,2/3", "P6:2,2", "P7:3,2,2", "Q5/3", "Q5/2", "Q7/3", "Q7/4")


@dataclass(frozen=True)
class WordModel:
    name: str
    d: int
    m: int
    ranks: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)
    has_residual: bool = True

    @property
    def context(self) -> tuple[int, int]:
        return (self.d, self.m)

    def rank(self, cat: str) -> int:
        if cat not in self.ranks:
            raise ContextRequired(f"model {self.name} has no {cat} lattice")
        return self.ranks[cat]

    def generator(self, name: str, cat: str) -> LatticeOperator:
        key = (name, cat)
        if key not in self.generators:
            if cat in (RC, RD) and not self.has_residual:
                raise ContextRequired(f"{name} on {cat} needs a split model")
            raise NoInterpretation(f"{name} on {cat} has no interpretation in {self.name}")
        return self.generators[key]


def _named(op: LatticeOperator, name: str) -> LatticeOperator:
    return LatticeOperator(op.matrix, op.shift_sign, name, op.shape)


def model_from_pair(P: DivisorPair, name: str, spinor_labels: tuple[str, ...] = ()) -> WordModel:
    """Interpret every generator through the divisor pair ``P`` and its residual suite.

    ``spinor_labels`` names classes of the target lattice whose twists give
    the two factors of the residual target twist.
    """
    Cl, Dl = P.source, P.target
    suite: ResidualSuite = suite_from_pair(P)
    pull, push, push_l = P.pull_op(), P.push_op(), P.push_left_op()
    ic, id_ = LatticeOperator.identity(Cl.rank), LatticeOperator.identity(Dl.rank)

    def minus(a: LatticeOperator, b: LatticeOperator) -> LatticeOperator:
        return LatticeOperator(im.sub(a.matrix, b.matrix), 1, "", a.shape)

    a_c, a_d = Cl.alpha_operator(), Dl.alpha_operator()
    if Dl.index == 0:
        o_d = block_twist(P) @ a_d
    else:
        o_d = mutation_operator(Dl, [Dl.label(P.target_block)], "left") @ a_d
    o_c = mutation_operator(Cl, [Cl.label(P.source_block)], "left") @ a_c
    ops = suite.ops
    g = {
        ("S_C", C): serre_operator(Cl),
        ("a_C", C): a_c,
        ("T_C", C): minus(ic, push @ pull),
        ("T_Cinv", C): minus(ic, push_l @ pull),
        ("L_B", C): mutation_operator(Cl, [Cl.label(P.source_block)], "left"),
        ("R_B", C): mutation_operator(Cl, [Cl.label(P.source_block)], "right"),
        ("O_B", C): o_c,
        ("S_D", D): serre_operator(Dl),
        ("a_D", D): a_d,
        ("T_D", D): minus(id_, pull @ push),
        ("T_Dinv", D): minus(id_, pull @ push_l),
        ("O_Bprime", D): o_d,
        ("Psi", C): pull,
        ("PsiL", D): push_l,
        ("PsiR", D): push,
        ("Psi_R", RC): ops["Psi_R"],
        ("O_B", RC): ops["source_O_B"],
        ("O_Bprime", RD): ops["O_B"],
        ("T_RC", RC): ops["T_source"],
        ("T_RD", RD): ops["T_target"],
        ("s_R", RC): ops["source_s_R"],
        ("s_R", RD): ops["s_R"],
        ("t_R", RC): ops["source_t_R"],
        ("t_R", RD): ops["t_R"],
        ("S_R", RC): ops["source_S_R_mutation"],
        ("S_R", RD): ops["S_R_mutation"],
    }
    R = suite.target_residual
    for idx, lab in enumerate(spinor_labels, start=1):
        g[(f"T_RD{idx}", RD)] = _spinor_twist(R, [R.coords(Dl.label(lab))])
    gens = {k: _named(v, k[0]) for k, v in g.items()}
    ranks = {C: Cl.rank, D: Dl.rank, RC: suite.source_residual.rank, RD: R.rank}
    return WordModel(name, P.degree, P.m, ranks, gens)


_CI_SPEC = re.compile(r"^P(\d+):(\d+(?:,\d+)*)(?:/(\d+))?$")
_Q_SPEC = re.compile(r"^Q(\d+)/(\d+)$")


def parse_model_spec(spec: str) -> tuple:
    """``"P5:3,2/2"`` splits off the degree-2 equation; ``"Q5/3"`` is a cubic section of the 5-dimensional quadric."""
    s = spec.replace(" ", "")
    m = _Q_SPEC.match(s)
    if m:
        return ("quadric", int(m.group(1)), int(m.group(2)))
    m = _CI_SPEC.match(s)
    if m:
        degrees = tuple(int(x) for x in m.group(2).split(","))
        split = m.group(3)
        return ("ci", int(m.group(1)), degrees, int(split) if split else None)
    raise ValueError(f"bad model spec {spec!r}; expected like 'P5:3,2/2' or 'Q5/3'")


@lru_cache(maxsize=None)
def model_from_spec(spec: str) -> WordModel:
    parsed = parse_model_spec(spec)
    if parsed[0] == "quadric":
        _, n, d = parsed
        QL = extend_quadric_lattice(n)
        labels = tuple(f"{s}|X" for s in QL.spinors) if (len(QL.spinors) == 2 and d % 2 == 0) else ()
        return model_from_pair(quadric_divisor_pair(n, d), spec, labels)
    _, n, degrees, split_degree = parsed
    X = CompleteIntersection.in_pn(n, degrees)
    if split_degree is None:
        X = X.with_split(-1)
    else:
        if split_degree not in X.degrees:
            raise ValueError(f"{split_degree} is not a degree of {X}")
        X = X.with_split(X.degrees.index(split_degree))
    return model_from_pair(divisor_pair(X), spec)


def standard_models() -> list[WordModel]:
    return [model_from_spec(s) for s in STANDARD_SPECS]


# Words on which each rewrite rule fires, with the category to type them from.
RULE_INSTANCES: dict[str, tuple[tuple[str, str | None], ...]] = {
    "R1": (("T_Cinv", None), ("T_Dinv^2 o T_D", None), ("Psi o T_Cinv^-1", None)),
    "R2": (("Psi o T_C", None), ("Psi o a_C o T_C^-2", None), ("T_D o Psi o S_C o T_C^3", None)),
    "R3": (("S_D o Psi o S_C^-1", None), ("S_D^-1 o Psi o S_C", None), ("S_D^2 o a_D o Psi o T_C o S_C^-3", None)),
    "R4": (("S_C o PsiL o S_D^-1", None), ("S_C^-1 o PsiR o S_D", None), ("S_C^2 o a_C o PsiL o S_D^-1", None)),
    "R5": (("a_C o S_C", None), ("T_D o S_D", None), ("a_D o S_D^-1 o Psi", None)),
    "R6": (("a_C o T_C", None), ("a_D^2 o T_D^-1", None)),
    "R7": (("T_RC", "R_C"), ("T_RD", "R_D"), ("T_RD^-2 o s_R", "R_D")),
    "R8": (("S_R", "R_C"), ("S_R", "R_D"), ("S_R^-2 o t_R", "R_D")),
    "R9": (("t_R o O_B", "R_C"), ("t_R o T_RD o O_Bprime", "R_D"), ("s_R o S_R", "R_C")),
    "R10": (("T_RD", "R_D"), ("T_RD^-1 o t_R", "R_D")),
}
