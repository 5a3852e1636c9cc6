import pytest
from hypothesis import given, settings, strategies as st

from artifact.ci_lattice import compare
from artifact.functor_words import (
    CATEGORY_PREFERENCE,
    TYPING,
    BudgetExceeded,
    ContextRequired,
    DistinguishedBy,
    Equal,
    EqualInAllModels,
    NoInterpretation,
    TypeMismatch,
    UnknownGenerator,
    WordSyntaxError,
    apply_rule,
    equal_words,
    evaluate,
    normalize,
    parse_word,
    serre_identity_words,
)
from artifact.word_models import RULE_INSTANCES, STANDARD_SPECS, WordModel, model_from_spec, standard_models

MODELS = standard_models()
FAST = [model_from_spec(s) for s in ("P4:3", "P5:3,2/2", "P6:2,2", "Q5/2")]


def nf(text, **kw):
    return str(normalize(parse_word(text), **kw))


def test_spec_examples():
    assert nf("T_C ∘ T_Cinv") == "id"
    assert nf("S_D ∘ Psi ∘ S_C^-1") == "T_D^-1 ∘ Psi ∘ [1]"
    assert nf("Psi ∘ T_C") == "T_D ∘ [-2] ∘ Psi"
    assert nf("S_C * PsiL * S_D^-1") == "PsiR"
    with pytest.raises(TypeMismatch):
        parse_word("Psi ∘ Psi")


def test_parser_accepts_grammar_variants():
    a = parse_word("O_B^{-3} o t_R", source="R_C")
    b = parse_word("(O_B^-3) ∘ t_R", source="R_C")
    assert a == b and a.type == ("R_C", "R_C")
    assert str(parse_word("id")) == "id"
    assert parse_word("[2] o Psi o [1]").shift == 3
    assert parse_word("T_C^0").atoms == ()


def test_parser_errors():
    with pytest.raises(WordSyntaxError) as e:
        parse_word("Psi o (T_C")
    assert e.value.position == 10
    with pytest.raises(WordSyntaxError) as e:
        parse_word("Psi $ T_C")
    assert e.value.position == 4
    with pytest.raises(UnknownGenerator):
        parse_word("Phi o T_C")
    with pytest.raises(TypeMismatch):
        parse_word("L_B^-1")
    with pytest.raises(TypeMismatch):
        parse_word("PsiR o PsiR")
    with pytest.raises(TypeMismatch):
        parse_word("S_C", target="D")
    with pytest.raises(TypeMismatch):
        parse_word("Psi^2")


def test_typing_preference():
    assert parse_word("S_R").type == ("R_D", "R_D")
    assert parse_word("S_R", source="R_C").type == ("R_C", "R_C")
    assert parse_word("O_B").type == ("R_C", "R_C")
    assert parse_word("O_B^2 o L_B").type == ("C", "C")
    assert parse_word("Psi_R").type == ("R_C", "R_D")


def test_context_rules():
    assert nf("S_R", context=(3, 6)) == "O_Bprime^-3 ∘ s_R"
    assert str(normalize(parse_word("S_R", source="R_C"), context=(3, 6))) == "O_B^-6 ∘ s_R"
    assert nf("T_RD", context=(2, 4)) == "O_Bprime^-2 ∘ t_R"
    assert nf("T_RD") == "T_RD"
    assert str(normalize(parse_word("T_RD"), expand=True)) == "T_RD1 ∘ T_RD2"


def test_budget():
    with pytest.raises(BudgetExceeded) as e:
        normalize(parse_word("a_C o T_C o S_C o T_Cinv"), budget=1)
    assert e.value.partial.type == ("C", "C")


def test_evaluation_errors():
    with pytest.raises(NoInterpretation):
        evaluate(parse_word("T_RD1"), model_from_spec("P4:3"))
    bare = WordModel("bare", 1, 1, {"C": 1, "D": 1}, {}, has_residual=False)
    with pytest.raises(ContextRequired):
        evaluate(parse_word("S_R"), bare)
    with pytest.raises(TypeMismatch):
        equal_words(parse_word("T_C"), parse_word("T_D"), FAST)


@pytest.mark.parametrize("rule", sorted(RULE_INSTANCES))
def test_rules_sound_in_every_model(rule):
    code = "R5" if rule == "R6" else rule
    for text, src in RULE_INSTANCES[rule]:
        w = parse_word(text, source=src)
        interpreted = 0
        for m in MODELS:
            out = apply_rule(code, w, m.context)
            assert out is not None and out != w
            try:
                lhs, rhs = evaluate(w, m), evaluate(out, m)
            except NoInterpretation:
                continue
            interpreted += 1
            assert compare(lhs, rhs).equal, (rule, text, m.name)
        assert interpreted >= (2 if rule == "R10" else len(MODELS))


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.name)
def test_serre_identity_in_models(m):
    for side in ("target", "source"):
        lhs, rhs = serre_identity_words(m.d, m.m, side)
        assert isinstance(equal_words(lhs, rhs, [m]), EqualInAllModels)


FALSE = [
    ("T_C", "id", "C"),
    ("S_D o Psi o S_C^-1", "T_D o Psi o [1]", None),
    ("T_C", "T_Cinv", None),
    ("PsiR", "PsiL", None),
    ("L_B", "R_B", None),
    ("S_R o [1]", "S_R", None),
]


@pytest.mark.parametrize("a,b,src", FALSE)
def test_false_identities_distinguished(a, b, src):
    v = equal_words(parse_word(a, source=src), parse_word(b, source=src), MODELS)
    assert isinstance(v, DistinguishedBy)
    assert v.witness is not None


def test_syntactic_equality():
    v = equal_words(parse_word("T_C o T_Cinv"), parse_word("id", source="C"), MODELS)
    assert isinstance(v, Equal)


# -- random typed words ------------------------------------------------------

GENS = {
    cat: [(name, s, t, inv) for name, typs in TYPING.items() for s, t, inv in typs if s == cat and name[-1] not in "12"]
    for cat in CATEGORY_PREFERENCE
}


@st.composite
def words(draw, source=None, max_len=5):
    cat = source or draw(st.sampled_from(CATEGORY_PREFERENCE))
    start = cat
    parts = []
    for _ in range(draw(st.integers(0, max_len))):
        if draw(st.integers(0, 5)) == 0:
            parts.append(f"[{draw(st.integers(-3, 3))}]")
            continue
        name, _, tgt, inv = draw(st.sampled_from(GENS[cat]))
        exp = draw(st.sampled_from([-2, -1, 1, 2, 3] if inv else ([1, 2] if tgt == cat else [1])))
        parts.append(f"{name}^{exp}")
        cat = tgt
    text = " o ".join(reversed(parts)) or "id"
    return parse_word(text, source=start)


@settings(max_examples=150)
@given(words())
def test_round_trip(w):
    assert parse_word(w.text(), source=w.source) == w
    assert parse_word(w.ascii(), source=w.source) == w


@settings(max_examples=150)
@given(words(), st.sampled_from(FAST))
def test_normalize_idempotent(w, m):
    for ctx in (None, m.context):
        once = normalize(w, ctx)
        assert normalize(once, ctx) == once
        assert once.type == w.type


@settings(max_examples=100)
@given(words(max_len=4), st.sampled_from(FAST))
def test_normalize_sound(w, m):
    assert compare(evaluate(w, m), evaluate(normalize(w, m.context), m)).equal


@settings(max_examples=100)
@given(st.data())
def test_evaluation_is_a_homomorphism(data):
    m = data.draw(st.sampled_from(FAST))
    right = data.draw(words(max_len=3))
    left = data.draw(words(source=right.target, max_len=3))
    both = left.compose(right)
    assert compare(evaluate(both, m), evaluate(left, m) @ evaluate(right, m)).equal


def test_standard_battery_covers_all_kinds():
    names = {m.name for m in MODELS}
    assert names == set(STANDARD_SPECS) and len(names) >= 5
    assert any(("T_RD1", "R_D") in m.generators for m in MODELS)
