"""Typed proof nets with exponential boxes, fixpoint boxes, choice boxes and
synchronization nodes, plus their surface reduction rules.

A net is a typed graph: every edge is the conclusion of exactly one node and
the premise of at most one node (edges without a consumer are the net's
conclusions).  Boxes own nested content nets: an exponential box wraps a
single content whose first conclusion is its principal formula; a fixpoint
box additionally keeps a recursion port (a ?-typed content conclusion that is
not exposed); a choice box owns two contents, each rooted by a `bot` node,
that share the same residual interface.  Sync nodes relay tuples of positive
premises to identical conclusions and carry an operation label.

Reduction is restricted to the surface (depth 0) and exponential box steps
additionally require the box to be closed (no auxiliary conclusions).  A
closed box cut against an auxiliary conclusion of another box is absorbed
into that box's content(s), which is what lets nested boxes unblock.
"""

from __future__ import annotations

import copy
import itertools
import random as _random
from collections import deque
from dataclasses import dataclass, field

from .memory import OperationLabel

# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Formula:
    kind: str  # one | bot | tensor | par | bang | quest
    sub: tuple["Formula", ...] = ()

    def __repr__(self) -> str:
        if self.kind == "one":
            return "1"
        if self.kind == "bot":
            return "_|_"
        if self.kind == "tensor":
            return f"({self.sub[0]}*{self.sub[1]})"
        if self.kind == "par":
            return f"({self.sub[0]}|{self.sub[1]})"
        if self.kind == "bang":
            return f"!{self.sub[0]}"
        return f"?{self.sub[0]}"


ONE = Formula("one")
BOT = Formula("bot")


def tensor(a: Formula, b: Formula) -> Formula:
    return Formula("tensor", (a, b))


def par(a: Formula, b: Formula) -> Formula:
    return Formula("par", (a, b))


def bang(a: Formula) -> Formula:
    return Formula("bang", (a,))


def quest(a: Formula) -> Formula:
    return Formula("quest", (a,))


_DUAL = {"one": "bot", "bot": "one", "tensor": "par", "par": "tensor", "bang": "quest", "quest": "bang"}


def neg(a: Formula) -> Formula:
    return Formula(_DUAL[a.kind], tuple(neg(s) for s in a.sub))


def is_positive(a: Formula) -> bool:
    return a.kind in ("one", "tensor", "bang")


# ---------------------------------------------------------------------------
# Graph structure

_ids = itertools.count()


def fresh_id() -> int:
    return next(_ids)


BOX_KINDS = ("bangbox", "ybox", "botbox")
NODE_KINDS = ("ax", "cut", "tensor", "par", "one", "bot", "der", "weak", "contr", "sync") + BOX_KINDS


@dataclass
class Node:
    nid: int
    kind: str
    concl: list[int] = field(default_factory=list)
    prem: list[int] = field(default_factory=list)
    label: OperationLabel | None = None
    contents: list["Net"] = field(default_factory=list)


@dataclass
class Edge:
    eid: int
    typ: Formula


class Net:
    """One level of a net; boxes own nested Net contents.

    `conclusions` is the ordered interface: edges with no consumer at this
    level.  Node and edge identifiers are globally unique (drawn from one
    shared counter), including across box nesting.
    """

    def __init__(self, nodes=(), edges=(), conclusions=()):
        self.nodes: dict[int, Node] = {n.nid: n for n in nodes}
        self.edges: dict[int, Edge] = {e.eid: e for e in edges}
        self.conclusions: list[int] = list(conclusions)

    # -- indexing ----------------------------------------------------------

    def concl_of(self) -> dict[int, tuple[int, int]]:
        """edge id -> (node id, port) of the node concluding it (this level)."""
        out = {}
        for n in self.nodes.values():
            for port, e in enumerate(n.concl):
                assert e not in out, f"edge {e} concluded twice"
                out[e] = (n.nid, port)
        return out

    def prem_of(self) -> dict[int, tuple[int, int]]:
        out = {}
        for n in self.nodes.values():
            for port, e in enumerate(n.prem):
                assert e not in out, f"edge {e} consumed twice"
                out[e] = (n.nid, port)
        return out

    def typ(self, eid: int) -> Formula:
        return self.edges[eid].typ

    def add_node(self, kind, concl_types, prem=(), label=None, contents=()) -> Node:
        """Create a node with fresh conclusion edges of the given types."""
        concl = []
        for t in concl_types:
            e = Edge(fresh_id(), t)
            self.edges[e.eid] = e
            concl.append(e.eid)
        node = Node(fresh_id(), kind, concl, list(prem), label, list(contents))
        self.nodes[node.nid] = node
        return node

    def replace_edge_ref(self, old: int, new: int) -> None:
        """Point every reference to edge `old` at edge `new`, dropping `old`."""
        for n in self.nodes.values():
            n.concl = [new if e == old else e for e in n.concl]
            n.prem = [new if e == old else e for e in n.prem]
        self.conclusions = [new if e == old else e for e in self.conclusions]
        del self.edges[old]

    def remove_node(self, nid: int) -> None:
        del self.nodes[nid]

    def remove_edge(self, eid: int) -> None:
        del self.edges[eid]

    def splice(self, content: "Net") -> None:
        """Merge another net's nodes and edges into this level."""
        assert not set(content.nodes) & set(self.nodes)
        assert not set(content.edges) & set(self.edges)
        self.nodes.update(content.nodes)
        self.edges.update(content.edges)

    def deep_nodes(self):
        """All (net, node) pairs, recursively through box contents."""
        for n in list(self.nodes.values()):
            yield self, n
            for c in n.contents:
                yield from c.deep_nodes()

    def refresh_copy(self) -> "Net":
        """Structural copy with brand-new node and edge identifiers."""
        clone = copy.deepcopy(self)
        emap: dict[int, int] = {}
        nmap: dict[int, int] = {}

        def collect(net: Net):
            for e in net.edges:
                emap[e] = fresh_id()
            for n in net.nodes.values():
                nmap[n.nid] = fresh_id()
                for c in n.contents:
                    collect(c)

        def remap(net: Net):
            net.edges = {emap[e.eid]: Edge(emap[e.eid], e.typ) for e in net.edges.values()}
            newnodes = {}
            for n in net.nodes.values():
                n.nid = nmap[n.nid]
                n.concl = [emap[e] for e in n.concl]
                n.prem = [emap[e] for e in n.prem]
                newnodes[n.nid] = n
                for c in n.contents:
                    remap(c)
            net.nodes = newnodes
            net.conclusions = [emap[e] for e in net.conclusions]

        collect(clone)
        remap(clone)
        return clone

    def __deepcopy__(self, memo):
        clone = Net.__new__(Net)
        clone.nodes = {
            nid: Node(
                n.nid,
                n.kind,
                list(n.concl),
                list(n.prem),
                n.label,
                [copy.deepcopy(c, memo) for c in n.contents],
            )
            for nid, n in self.nodes.items()
        }
        clone.edges = {eid: Edge(e.eid, e.typ) for eid, e in self.edges.items()}
        clone.conclusions = list(self.conclusions)
        return clone

    # -- traversal and canonical signature ---------------------------------

    def traversal(self) -> tuple[dict[int, int], dict[int, int]]:
        """Deterministic numbering of this level's nodes and edges.

        Starts from the conclusion edges in interface order and walks the
        undirected graph, visiting each node's conclusion edges before its
        premises.  Returns (edge numbering, node numbering); asserts that
        everything at this level was reached.
        """
        concl_of = self.concl_of()
        prem_of = self.prem_of()
        edge_no: dict[int, int] = {}
        node_no: dict[int, int] = {}
        queue: deque[int] = deque(self.conclusions)
        while queue:
            eid = queue.popleft()
            if eid in edge_no:
                continue
            edge_no[eid] = len(edge_no)
            for endpoint in (concl_of.get(eid), prem_of.get(eid)):
                if endpoint is None:
                    continue
                nid = endpoint[0]
                if nid in node_no:
                    continue
                node_no[nid] = len(node_no)
                node = self.nodes[nid]
                queue.extend(node.concl)
                queue.extend(node.prem)
        assert len(node_no) == len(self.nodes), "net has nodes unreachable from its conclusions"
        assert len(edge_no) == len(self.edges), "net has edges unreachable from its conclusions"
        return edge_no, node_no

    def signature(self):
        """Canonical nested-tuple form; equal for isomorphic nets."""
        edge_no, node_no = self.traversal()
        nodes = sorted(self.nodes.values(), key=lambda n: node_no[n.nid])
        rows = []
        for n in nodes:
            rows.append(
                (
                    n.kind,
                    n.label,
                    tuple(edge_no[e] for e in n.concl),
                    tuple(edge_no[e] for e in n.prem),
                    tuple(c.signature() for c in n.contents),
                )
            )
        types = tuple(
            self.edges[e].typ for e in sorted(self.edges, key=lambda e: edge_no[e])
        )
        return (tuple(rows), types, tuple(edge_no[e] for e in self.conclusions))

    # -- debug dump --------------------------------------------------------

    def dump(self, indent: str = "") -> str:
        edge_no, node_no = {}, {}
        try:
            edge_no, node_no = self.traversal()
        except AssertionError:
            edge_no = {e: i for i, e in enumerate(self.edges)}
            node_no = {n: i for i, n in enumerate(self.nodes)}
        lines = []
        lines.append(indent + "conclusions: " + ", ".join(
            f"e{edge_no[e]}:{self.edges[e].typ}" for e in self.conclusions))
        for n in sorted(self.nodes.values(), key=lambda n: node_no[n.nid]):
            label = f" [{n.label.name}/{n.label.arity}]" if n.label else ""
            lines.append(
                indent
                + f"n{node_no[n.nid]} {n.kind}{label}"
                + " concl(" + ", ".join(f"e{edge_no[e]}:{self.edges[e].typ}" for e in n.concl) + ")"
                + (" prem(" + ", ".join(f"e{edge_no[e]}" for e in n.prem) + ")" if n.prem else "")
            )
            tags = ("left", "right") if n.kind == "botbox" else ("content",)
            for tag, c in zip(tags, n.contents):
                lines.append(indent + f"  {tag}:")
                lines.append(c.dump(indent + "    "))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Well-formedness


def validate(net: Net) -> None:
    """Check the structural and typing invariants, recursively."""
    concl_of = net.concl_of()
    prem_of = net.prem_of()
    for eid in net.edges:
        assert eid in concl_of, f"edge {eid} is conclusion of no node"
    for eid in net.conclusions:
        assert eid not in prem_of, f"net conclusion {eid} has a consumer"
    for eid in net.edges:
        if eid not in prem_of:
            assert eid in net.conclusions, f"dangling edge {eid} not listed as conclusion"
    for n in net.nodes.values():
        t = [net.typ(e) for e in n.concl]
        p = [net.typ(e) for e in n.prem]
        if n.kind == "ax":
            assert len(t) == 2 and not p and t[0] == neg(t[1]), "bad ax"
        elif n.kind == "cut":
            assert not t and len(p) == 2 and p[0] == neg(p[1]), "bad cut"
        elif n.kind == "tensor":
            assert len(t) == 1 and len(p) == 2 and t[0] == tensor(p[0], p[1]), "bad tensor"
        elif n.kind == "par":
            assert len(t) == 1 and len(p) == 2 and t[0] == par(p[0], p[1]), "bad par"
        elif n.kind == "one":
            assert t == [ONE] and not p, "bad one"
        elif n.kind == "bot":
            assert t == [BOT] and not p, "bad bot"
        elif n.kind == "der":
            assert len(t) == 1 and len(p) == 1 and t[0] == quest(p[0]), "bad dereliction"
        elif n.kind == "weak":
            assert len(t) == 1 and not p and t[0].kind == "quest", "bad weakening"
        elif n.kind == "contr":
            assert len(p) == 2 and t == [p[0]] and p[0] == p[1] and t[0].kind == "quest", "bad contraction"
        elif n.kind == "sync":
            assert n.label is not None and len(t) == len(p) and t == p, "bad sync interface"
            assert all(is_positive(x) for x in p), "sync premises must be positive"
            assert sum(count_units(x) for x in p) == n.label.arity, "sync label arity mismatch"
        elif n.kind == "bangbox":
            (content,) = n.contents
            ct = [content.typ(e) for e in content.conclusions]
            assert t and t[0] == bang(ct[0]), "bad exponential box principal"
            assert t[1:] == ct[1:] and all(x.kind == "quest" for x in t[1:]), "bad box auxiliaries"
            validate(content)
        elif n.kind == "ybox":
            (content,) = n.contents
            ct = [content.typ(e) for e in content.conclusions]
            assert len(ct) >= 2 and t and t[0] == bang(ct[0]), "bad fixpoint box principal"
            assert ct[1] == quest(neg(ct[0])), "bad fixpoint recursion port"
            assert t[1:] == ct[2:] and all(x.kind == "quest" for x in t[1:]), "bad box auxiliaries"
            validate(content)
        elif n.kind == "botbox":
            left, right = n.contents
            assert t and t[0] == BOT and len(t) >= 2, "choice box needs a residual interface"
            for c in (left, right):
                ct = [c.typ(e) for e in c.conclusions]
                assert ct == t, "choice box contents must mirror the box interface"
                root = c.concl_of()[c.conclusions[0]]
                assert c.nodes[root[0]].kind == "bot", "choice box content must be rooted by bot"
                validate(c)
        else:
            raise AssertionError(f"unknown node kind {n.kind}")


def count_units(a: Formula) -> int:
    if a.kind == "one":
        return 1
    if a.kind == "tensor":
        return count_units(a.sub[0]) + count_units(a.sub[1])
    return 0


# ---------------------------------------------------------------------------
# Correctness (switching acyclicity)

_MAX_SWITCHINGS = 4096


def check_correct(net: Net) -> str | None:
    """Return None if no switching path is cyclic, else a description.

    A switching keeps exactly one premise of every par/contraction node and
    exactly one conclusion of every sync node, then the remaining undirected
    graph must be acyclic.  All switchings are enumerated when few enough;
    otherwise a fixed-seed sample is checked.  Box contents are checked
    recursively, with boxes opaque at their own level.
    """
    concl_of = net.concl_of()
    prem_of = net.prem_of()
    switch_groups: list[list[int]] = []  # per switched node: its removable edges
    for n in net.nodes.values():
        if n.kind in ("par", "contr"):
            switch_groups.append(list(n.prem))
        elif n.kind == "sync" and len(n.concl) > 1:
            switch_groups.append(list(n.concl))

    base_edges = []
    for eid in net.edges:
        a = concl_of.get(eid)
        b = prem_of.get(eid)
        if a and b:
            base_edges.append((eid, a[0], b[0]))

    def acyclic(removed: set[int]) -> bool:
        parent: dict[int, int] = {}

        def find(x):
            while parent.get(x, x) != x:
                parent[x] = parent.get(parent[x], parent[x])
                x = parent[x]
            return x

        for eid, u, v in base_edges:
            if eid in removed:
                continue
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True

    def choices():
        total = 1
        for g in switch_groups:
            total *= len(g)
        if total <= _MAX_SWITCHINGS:
            yield from itertools.product(*switch_groups)
        else:
            rng = _random.Random(0)
            for _ in range(_MAX_SWITCHINGS):
                yield tuple(rng.choice(g) for g in switch_groups)

    if not switch_groups:
        if not acyclic(set()):
            return "cyclic switching path at depth 0"
    else:
        for kept in choices():
            removed = set()
            for g, keep in zip(switch_groups, kept):
                removed.update(e for e in g if e != keep)
            if not acyclic(removed):
                return f"cyclic switching path at depth 0 (kept {kept})"

    for n in net.nodes.values():
        for c in n.contents:
            err = check_correct(c)
            if err:
                return f"inside box {n.nid}: {err}"
    return None


# ---------------------------------------------------------------------------
# Redexes


@dataclass(frozen=True)
class NetRedex:
    kind: str  # ax | tensor_par | d_box | w_box | c_box | y_unfold | absorb | test | sync
    nodes: tuple[int, ...]  # participating node ids (cut first where applicable)

    def sort_key(self):
        return (self.kind, self.nodes)


def _box_is_closed(n: Node) -> bool:
    return len(n.concl) == 1


def find_redexes(net: Net) -> list[NetRedex]:
    concl_of = net.concl_of()
    redexes = []
    for n in net.nodes.values():
        if n.kind == "cut":
            e1, e2 = n.prem
            a_id, _ = concl_of[e1]
            b_id, _ = concl_of[e2]
            a, b = net.nodes[a_id], net.nodes[b_id]
            if a_id == b_id and a.kind == "ax":
                continue  # degenerate ax-loop: incorrect net, not a redex
            r = _classify_cut(net, n, e1, a, e2, b) or _classify_cut(net, n, e2, b, e1, a)
            if r:
                redexes.append(r)
        elif n.kind == "sync":
            if all(net.nodes[concl_of[e][0]].kind == "one" for e in n.prem):
                redexes.append(NetRedex("sync", (n.nid,)))
    return sorted(redexes, key=NetRedex.sort_key)


def _classify_cut(net: Net, cut: Node, ea: int, a: Node, eb: int, b: Node) -> NetRedex | None:
    """Classify with `a` as the active (positive/principal) side."""
    if a.kind == "ax":
        return NetRedex("ax", (cut.nid, a.nid))
    if a.kind == "tensor" and b.kind == "par":
        return NetRedex("tensor_par", (cut.nid, a.nid, b.nid))
    if a.kind in ("bangbox", "ybox") and a.concl[0] == ea and _box_is_closed(a):
        if b.kind == "der":
            kind = "d_box" if a.kind == "bangbox" else "y_unfold"
            return NetRedex(kind, (cut.nid, a.nid, b.nid))
        if b.kind == "weak":
            return NetRedex("w_box", (cut.nid, a.nid, b.nid))
        if b.kind == "contr":
            return NetRedex("c_box", (cut.nid, a.nid, b.nid))
        if b.kind in BOX_KINDS and eb in b.concl[1:]:
            return NetRedex("absorb", (cut.nid, a.nid, b.nid))
    if a.kind == "botbox" and a.concl[0] == ea and b.kind == "one":
        return NetRedex("test", (cut.nid, a.nid, b.nid))
    return None


# ---------------------------------------------------------------------------
# Reduction


def reduce(net: Net, redex: NetRedex) -> Net:
    """Apply a deterministic rule, returning a new net."""
    assert redex.kind not in ("test",), "test reduction branches: use reduce_test"
    net = copy.deepcopy(net)
    handler = {
        "ax": _reduce_ax,
        "tensor_par": _reduce_tensor_par,
        "d_box": _reduce_d_box,
        "w_box": _reduce_w_box,
        "c_box": _reduce_c_box,
        "y_unfold": _reduce_y_unfold,
        "absorb": _reduce_absorb,
        "sync": _reduce_sync,
    }[redex.kind]
    handler(net, *redex.nodes)
    return net


def reduce_test(net: Net, redex: NetRedex) -> tuple[Net, Net]:
    """Fire the choice-box cut, returning the (false, true) branch nets."""
    assert redex.kind == "test"
    return (
        _reduce_bot_branch(copy.deepcopy(net), *redex.nodes, side=0),
        _reduce_bot_branch(copy.deepcopy(net), *redex.nodes, side=1),
    )


def _cut_sides(net: Net, cut: Node, want_nid: int) -> tuple[int, int]:
    """(edge on node want_nid's side, the other cut premise)."""
    e1, e2 = cut.prem
    concl_of = net.concl_of()
    if concl_of[e1][0] == want_nid:
        return e1, e2
    assert concl_of[e2][0] == want_nid
    return e2, e1


def _reduce_ax(net: Net, cut_id: int, ax_id: int) -> None:
    cut, ax = net.nodes[cut_id], net.nodes[ax_id]
    e_ax, e_other = _cut_sides(net, cut, ax_id)
    e_o = ax.concl[0] if ax.concl[1] == e_ax else ax.concl[1]
    net.remove_node(cut_id)
    net.remove_node(ax_id)
    net.edges.pop(e_ax)
    net.replace_edge_ref(e_o, e_other)


def _reduce_tensor_par(net: Net, cut_id: int, t_id: int, p_id: int) -> None:
    t, p = net.nodes[t_id], net.nodes[p_id]
    a1, a2 = t.prem
    b1, b2 = p.prem
    for e in net.nodes[cut_id].prem:
        net.edges.pop(e)
    net.remove_node(cut_id)
    net.remove_node(t_id)
    net.remove_node(p_id)
    n1 = Node(fresh_id(), "cut", [], [a1, b1])
    n2 = Node(fresh_id(), "cut", [], [a2, b2])
    net.nodes[n1.nid] = n1
    net.nodes[n2.nid] = n2


def _open_box(net: Net, cut_id: int, box_id: int, der_id: int) -> tuple[int, Net]:
    """Shared prologue of dereliction/unfolding: delete the cut, the box
    border and the dereliction node, splice the content, and cut the
    content's principal conclusion against the dereliction premise.
    Returns (content principal conclusion edge, content)."""
    cut, box, der = net.nodes[cut_id], net.nodes[box_id], net.nodes[der_id]
    e_box, e_der = _cut_sides(net, cut, box_id)
    assert der.concl[0] == e_der
    (content,) = box.contents
    ed = der.prem[0]
    net.remove_node(cut_id)
    net.remove_node(box_id)
    net.remove_node(der_id)
    net.edges.pop(e_box)
    net.edges.pop(e_der)
    net.splice(content)
    c0 = content.conclusions[0]
    n = Node(fresh_id(), "cut", [], [c0, ed])
    net.nodes[n.nid] = n
    return c0, content


def _reduce_d_box(net: Net, cut_id: int, box_id: int, der_id: int) -> None:
    _open_box(net, cut_id, box_id, der_id)


def _reduce_y_unfold(net: Net, cut_id: int, box_id: int, der_id: int) -> None:
    # A fresh copy of the whole fixpoint box is cut against the recursion
    # port of the unfolded content.
    box = net.nodes[box_id]
    src = Net([box], [net.edges[box.concl[0]]], [box.concl[0]])
    clone = src.refresh_copy()
    _, content = _open_box(net, cut_id, box_id, der_id)
    rec_port = content.conclusions[1]
    net.splice(clone)
    n = Node(fresh_id(), "cut", [], [clone.conclusions[0], rec_port])
    net.nodes[n.nid] = n


def _reduce_w_box(net: Net, cut_id: int, box_id: int, weak_id: int) -> None:
    cut, box, weak = net.nodes[cut_id], net.nodes[box_id], net.nodes[weak_id]
    e_box, e_weak = _cut_sides(net, cut, box_id)
    assert weak.concl[0] == e_weak
    net.remove_node(cut_id)
    net.remove_node(box_id)
    net.remove_node(weak_id)
    net.edges.pop(e_box)
    net.edges.pop(e_weak)


def _reduce_c_box(net: Net, cut_id: int, box_id: int, contr_id: int) -> None:
    cut, box, contr = net.nodes[cut_id], net.nodes[box_id], net.nodes[contr_id]
    e_box, e_contr = _cut_sides(net, cut, box_id)
    assert contr.concl[0] == e_contr
    q1, q2 = contr.prem
    src = Net([box], [net.edges[e_box]], [e_box])
    net.remove_node(cut_id)
    net.remove_node(contr_id)
    net.edges.pop(e_contr)
    for q in (q1, q2):
        clone = src.refresh_copy()
        net.splice(clone)
        n = Node(fresh_id(), "cut", [], [clone.conclusions[0], q])
        net.nodes[n.nid] = n
    net.remove_node(box_id)
    net.edges.pop(e_box)


def _reduce_absorb(net: Net, cut_id: int, box_id: int, target_id: int) -> None:
    """Move a closed box through an auxiliary door into the target box."""
    cut, box, target = net.nodes[cut_id], net.nodes[box_id], net.nodes[target_id]
    e_box, e_aux = _cut_sides(net, cut, box_id)
    aux_port = target.concl.index(e_aux)
    assert aux_port >= 1
    src = Net([box], [net.edges[e_box]], [e_box])
    net.remove_node(cut_id)
    net.remove_node(box_id)
    net.edges.pop(e_box)
    target.concl.remove(e_aux)
    net.edges.pop(e_aux)
    if target.kind == "botbox":
        contents = target.contents
        ports = [aux_port] * 2
    else:
        contents = [target.contents[0]]
        # Exponential content conclusions are [principal, aux...]; fixpoint
        # ones are [principal, recursion port, aux...].
        ports = [aux_port + (1 if target.kind == "ybox" else 0)]
    for content, port in zip(contents, ports):
        caux = content.conclusions[port]
        holder = content.concl_of()[caux][0]
        if content.nodes[holder].kind == "weak":
            # A closed box against a bare weakening erases; splicing it in
            # would leave a floating component, so erase it right away.
            content.remove_node(holder)
            content.edges.pop(caux)
            content.conclusions.remove(caux)
            continue
        clone = src.refresh_copy()
        content.splice(clone)
        n = Node(fresh_id(), "cut", [], [clone.conclusions[0], caux])
        content.nodes[n.nid] = n
        content.conclusions.remove(caux)


def _reduce_bot_branch(net: Net, cut_id: int, box_id: int, one_id: int, side: int) -> Net:
    cut, box, one = net.nodes[cut_id], net.nodes[box_id], net.nodes[one_id]
    e_bot, e_one = _cut_sides(net, cut, box_id)
    assert one.concl[0] == e_one
    content = box.contents[side]
    aux_edges = box.concl[1:]
    net.remove_node(cut_id)
    net.remove_node(box_id)
    net.remove_node(one_id)
    net.edges.pop(e_bot)
    net.edges.pop(e_one)
    # Remove the content's bot root along with its conclusion edge.
    root_edge = content.conclusions[0]
    root_id = content.concl_of()[root_edge][0]
    content.remove_node(root_id)
    content.edges.pop(root_edge)
    residual = content.conclusions[1:]
    content.conclusions = []
    net.splice(content)
    for outer, inner in zip(aux_edges, residual):
        # The inner conclusion takes over the outer edge's consumers.
        net.replace_edge_ref(outer, inner)
    return net


def _reduce_sync(net: Net, sync_id: int) -> None:
    sync = net.nodes[sync_id]
    prems, concls = list(sync.prem), list(sync.concl)
    net.remove_node(sync_id)
    for p, c in zip(prems, concls):
        net.replace_edge_ref(c, p)
