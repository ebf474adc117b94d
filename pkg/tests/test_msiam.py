import pytest

from tokennets.memory import int_backend, prob_backend, quantum_backend
from tokennets.msiam import DELTA, MsSystem, NetIndex, STAR, indicator, run
from tokennets.nets import BOT, ONE, bang, par, quest, tensor
from tokennets.pars import (
    Distribution,
    FusedSystem,
    converge,
    leftmost_policy,
    lift_step,
    seeded_policy,
)
from tokennets.pcfll import Closure, PcfSystem, parse, typecheck
from tokennets.translate import translate

BACKENDS = {
    "int": int_backend,
    "prob": prob_backend,
    "quantum": quantum_backend,
}


def make(src, bk):
    backend = BACKENDS[bk]()
    term = parse(src, backend.labels)
    tp = typecheck(term)
    return translate(tp, backend), backend


def pcf_converge(src, backend, horizon=300):
    term = parse(src, backend.labels)
    typecheck(term)
    cl = Closure(term, {}, backend.initial())
    return converge(Distribution.dirac(cl), PcfSystem(), leftmost_policy, horizon=horizon)


# -- stack indicator [TRIVIAL-style oracles: computed by hand] -------------


def test_indicator_units():
    assert indicator((), ONE) == "one"
    assert indicator((), BOT) == "bot"
    assert indicator(("l",), tensor(BOT, ONE)) == "bot"
    assert indicator(("r",), tensor(BOT, ONE)) == "one"


def test_indicator_modalities():
    a = bang(tensor(BOT, bang(ONE)))
    assert indicator((STAR, DELTA), a) == "bang"
    assert indicator((STAR, "r", STAR, DELTA), a) == "bang"
    assert indicator((STAR, "l"), a) == "bot"
    assert indicator((STAR, "r", STAR), a) == "one"


# -- simple runs -----------------------------------------------------------


def test_single_allocation_runs_to_final():
    pn, _ = make("new", "int")
    sys = MsSystem(pn)
    st = sys.initial_state()
    assert not st.tokens  # a 1-conclusion has no initial tokens
    final = FusedSystem(sys).prepare(st)
    assert not sys.enumerate_redexes(final)
    assert sys.classify(final) == "final"
    ((pos, orig),) = final.tokens
    assert sys.index.is_root_conclusion(pos[0])
    assert final.ind[orig] == 0  # the allocation got the first address


def test_identity_application():
    pn, _ = make(r"(\x. x) new", "int")
    p, hit = run(pn, horizon=50)
    assert not hit and p == pytest.approx(1.0, abs=1e-9)


def test_sync_updates_memory():
    pn, _ = make("S (S new)", "int")
    sys = MsSystem(pn)
    fused = FusedSystem(sys)
    st = fused.prepare(sys.initial_state())
    assert sys.classify(st) == "final"
    # one register, incremented twice
    (a,) = st.memory.support()
    assert st.memory.get(a) == 2


def test_probabilistic_choice_splits_mass():
    pn, _ = make("if c new then new else new", "prob")
    sys = MsSystem(pn)
    fused = FusedSystem(sys)
    mu = Distribution.dirac(fused.prepare(sys.initial_state()))
    for _ in range(6):
        mu = lift_step(mu, fused, leftmost_policy)
    finals = list(mu)
    assert len(finals) == 2
    assert all(p == pytest.approx(0.5) for _, p in finals)
    assert all(sys.classify(a) == "final" for a, _ in finals)


def test_terminal_states_are_final():
    pn, _ = make("if c new then (if c new then new else new) else new", "prob")
    sys = MsSystem(pn)
    fused = FusedSystem(sys)
    mu = Distribution.dirac(fused.prepare(sys.initial_state()))
    for _ in range(10):
        mu = lift_step(mu, fused, leftmost_policy)
    for a, _ in mu:
        if fused.is_terminal(a):
            assert sys.classify(a) == "final"
    assert mu.mass() == pytest.approx(1.0)


def test_recursive_coin_converges_geometrically():
    src = "letrec f x = if x then new else f (c new) in f (c new)"
    pn, _ = make(src, "prob")
    p, hit = run(pn, horizon=40)
    assert not hit
    assert p >= 1 - 1e-9


def test_divergent_recursion_never_converges():
    pn, _ = make("letrec f x = f x in f new", "int")
    p, hit = run(pn, horizon=10, budget=60)
    assert hit and p == 0.0


# -- agreement with the term machine [DERIVED oracles] ---------------------

PROGRAMS = [
    ("new", "int"),
    (r"(\x. x) new", "int"),
    ("S (S new)", "int"),
    ("let <a, b> = <S new, new> in <b, a>", "int"),
    (r"(\f. <f new, f new>) (\x. x)", "int"),
    ("letrec f x = if x then new else f new in f (S new)", "int"),
    ("if c new then new else new", "prob"),
    ("if c new then (if c new then new else new) else new", "prob"),
    ("let <p, q> = CNOT <new, H new> in <p, q>", "quantum"),
]


@pytest.mark.parametrize("src,bk", PROGRAMS)
def test_machine_agrees_with_term_reduction(src, bk):
    pn, backend = make(src, bk)
    p_ms, hit = run(pn, horizon=120)
    p_pcf, hit2 = pcf_converge(src, backend)
    assert not hit and not hit2
    assert p_ms == pytest.approx(p_pcf, abs=1e-9)


def test_policy_independence():
    src = "letrec f x = if x then new else f (c new) in f (c new)"
    pn, _ = make(src, "prob")
    p1, _ = run(pn, horizon=30, policy=leftmost_policy)
    p2, _ = run(pn, horizon=30, policy=seeded_policy(7))
    assert p1 == pytest.approx(p2, abs=1e-12)
