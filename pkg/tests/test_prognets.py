import pytest

from tokennets.memory import COIN, IntRegisterMemory, ProbRegisterMemory, S
from tokennets.nets import BOT, Net, Node, ONE, fresh_id, validate
from tokennets.pars import (
    Distribution,
    FusedSystem,
    check_diamond,
    converge,
    iterate,
    leftmost_policy,
    seeded_policy,
)
from tokennets.prognets import PnSystem, ProgramNet, enumerate_redexes, inputs, step


def single_one_net():
    net = Net()
    one = net.add_node("one", [ONE])
    net.conclusions = [one.concl[0]]
    return net


def test_inputs_and_link():
    net = single_one_net()
    pn = ProgramNet(net, {}, IntRegisterMemory())
    assert inputs(net) == net.conclusions
    (r,) = enumerate_redexes(pn)
    assert r.kind == "link"
    ((pn2, p),) = list(step(pn, r))
    assert p == 1.0
    assert pn2.ind == {net.conclusions[0]: 0}
    assert enumerate_redexes(pn2) == []


def test_link_avoids_memory_support_and_ind():
    net = Net()
    one1 = net.add_node("one", [ONE])
    one2 = net.add_node("one", [ONE])
    net.conclusions = [one1.concl[0], one2.concl[0]]
    pn = ProgramNet(net, {one1.concl[0]: 0}, IntRegisterMemory({2: 7}))
    r = next(x for x in enumerate_redexes(pn) if x.kind == "link")
    ((pn2, _),) = list(step(pn, r))
    assert pn2.ind[one2.concl[0]] == 1  # skips 0 (ind) but also 2 (memory)


def test_canonical_equality_across_addresses_and_isomorphism():
    net = single_one_net()
    e = net.conclusions[0]
    pn_a = ProgramNet(net, {e: 5}, IntRegisterMemory({5: 3}))
    net2 = net.refresh_copy()
    pn_b = ProgramNet(net2, {net2.conclusions[0]: 0}, IntRegisterMemory({0: 3}))
    assert pn_a == pn_b
    assert hash(pn_a) == hash(pn_b)
    assert pn_a.canonicalize() == pn_a
    assert pn_a.canonicalize().ind == {e: 0}
    pn_c = ProgramNet(net, {e: 5}, IntRegisterMemory({5: 4}))
    assert pn_a != pn_c


def test_orphan_addresses_compare_by_value():
    net = single_one_net()
    e = net.conclusions[0]
    # Same live register, orphan register with equal value at different addresses.
    pn_a = ProgramNet(net, {e: 0}, IntRegisterMemory({3: 9}))
    pn_b = ProgramNet(net, {e: 1}, IntRegisterMemory({7: 9}))
    assert pn_a == pn_b


def counter_net():
    """one --> sync(S): a single register incremented once."""
    net = Net()
    one = net.add_node("one", [ONE])
    sync = net.add_node("sync", [ONE], label=S)
    sync.prem = [one.concl[0]]
    net.conclusions = [sync.concl[0]]
    validate(net)
    return net


def test_sync_update():
    pn = ProgramNet(counter_net(), {}, IntRegisterMemory())
    sys = PnSystem()
    dist = iterate(Distribution.dirac(pn), 2, sys, leftmost_policy)
    ((final, p),) = list(dist)
    assert p == 1.0
    assert sys.is_terminal(final)
    (addr,) = final.ind.values()
    assert final.memory.get(addr) == 1


def test_sync_requires_all_premises_linked():
    net = counter_net()
    pn = ProgramNet(net, {}, IntRegisterMemory())
    kinds = [r.kind for r in enumerate_redexes(pn)]
    assert kinds == ["link"]  # sync gated until its premise is active


def coin_choice_net():
    """A choice box guarded by a coin: one --> sync(c) --> cut with bot-box."""

    def content_side():
        c = Net()
        root = c.add_node("bot", [BOT])
        cone = c.add_node("one", [ONE])
        c.conclusions = [root.concl[0], cone.concl[0]]
        return c

    net = Net()
    box = net.add_node("botbox", [BOT, ONE], contents=[content_side(), content_side()])
    one = net.add_node("one", [ONE])
    sync = net.add_node("sync", [ONE], label=COIN)
    sync.prem = [one.concl[0]]
    cut = Node(fresh_id(), "cut", [], [box.concl[0], sync.concl[0]])
    net.nodes[cut.nid] = cut
    net.conclusions = [box.concl[1]]
    validate(net)
    return net


def test_coin_choice_probabilities():
    pn = ProgramNet(coin_choice_net(), {}, ProbRegisterMemory())
    sys = PnSystem()
    p, hit = converge(Distribution.dirac(pn), sys, leftmost_policy, horizon=10)
    assert p == pytest.approx(1.0, abs=1e-12)
    assert not hit
    dist = iterate(Distribution.dirac(pn), 10, sys, leftmost_policy)
    probs = sorted(p for _, p in dist)
    assert probs == [pytest.approx(0.5), pytest.approx(0.5)]
    for final, _ in dist:
        assert sys.is_terminal(final)
        assert [n.kind for n in final.net.nodes.values()] == ["one"]


def test_test_redex_gated_until_guard_linked():
    pn = ProgramNet(coin_choice_net(), {}, ProbRegisterMemory())
    kinds = [r.kind for r in enumerate_redexes(pn)]
    assert kinds == ["link"]


def test_diamond_and_fusion():
    sys = PnSystem()
    seeds = [
        ProgramNet(coin_choice_net(), {}, ProbRegisterMemory()),
        ProgramNet(counter_net(), {}, IntRegisterMemory()),
    ]
    report = check_diamond(sys, seeds, depth=8, policies=(leftmost_policy, seeded_policy(7)))
    assert report.passed, report.failures
    fused = FusedSystem(sys)
    mu = Distribution.dirac(fused.prepare(seeds[0]))
    p, hit = converge(mu, fused, leftmost_policy, horizon=5)
    assert p == pytest.approx(1.0, abs=1e-12)
