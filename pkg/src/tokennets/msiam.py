"""A multi-token interaction machine over a fixed program net.

Instead of rewriting the net, finitely many tokens walk its edges.  A token
is a position (edge, formula stack, box stack): the formula stack points at
an occurrence of a unit or modality in the edge's type and fixes the travel
direction (up toward the indicated !/bot, down toward the indicated ?/1);
the box stack names the copy of each enclosing exponential box.  Tokens
spawn at one and ?d nodes of opened box copies, cross multiplicative nodes
by pushing/popping l/r, cross contractions by wrapping their head signature,
and open a box copy by parking a stable marker at its principal door.
Recursive boxes re-enter themselves through the recursion port using y(.,.)
signatures.  Memory coupling: spawning at a one node links an address,
crossing a sync node (all premise tokens of one copy at once) applies the
labeled update to the linked addresses, and hitting a choice box's principal
door tests the address and parks the token on the chosen side, opening it.
A state is final when every token is stable or has exited at a net
conclusion; the whole machine is a probabilistic rewrite system whose
terminal distribution matches net reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .memory import fresh
from .nets import Formula, Net
from .pars import Distribution, FusedSystem, Policy, converge, leftmost_policy
from .prognets import ProgramNet

DELTA = "D"

# Exponential signatures are hash-consed: each distinct signature gets a
# small-integer id, and compound signatures reference the ids of their parts.
# Stacks therefore stay flat no matter how deep the recursion nesting gets,
# keeping token comparison and hashing cheap and recursion-safe.
_SIG_IDS: dict[tuple, int] = {}
_SIG_STRUCT: list[tuple] = []


def _intern(struct: tuple) -> int:
    i = _SIG_IDS.get(struct)
    if i is None:
        i = len(_SIG_STRUCT)
        _SIG_IDS[struct] = i
        _SIG_STRUCT.append(struct)
    return i


def sig_struct(sig: int) -> tuple:
    return _SIG_STRUCT[sig]


STAR = _intern(("*",))


def l_sig(s: int) -> int:
    return _intern(("l", s))


def r_sig(s: int) -> int:
    return _intern(("r", s))


def pair_sig(a: int, b: int) -> int:
    return _intern(("p", a, b))


def y_sig(a: int, b: int) -> int:
    return _intern(("y", a, b))


def indicator(s: tuple, a: Formula) -> str | None:
    """Kind of the unit/modality occurrence the stack points at, or None."""
    if not s:
        return a.kind if a.kind in ("one", "bot") else None
    h = s[0]
    if h == DELTA:
        return None
    if h in ("l", "r"):
        if a.kind not in ("tensor", "par"):
            return None
        return indicator(s[1:], a.sub[0 if h == "l" else 1])
    # h is an interned signature id
    if a.kind not in ("bang", "quest"):
        return None
    rest = s[1:]
    if rest == (DELTA,):
        return a.kind
    return indicator(rest, a.sub[0])


# A position is (edge_key, fstack, bstack); a token is (position, origin).
# Edge keys are (level, eid) where a level is a tuple of (box node id,
# content index) pairs from the root down.


class NetIndex:
    """Static index of a net: every edge at every box level, with its type,
    producing node, consuming node, exponential depth, and door wiring."""

    def __init__(self, net: Net):
        self.edge_type: dict = {}
        self.edge_concl: dict = {}  # ekey -> (nkey, index)
        self.edge_prem: dict = {}  # ekey -> (nkey, index); absent = interface edge
        self.node: dict = {}  # nkey -> Node
        self.level_net: dict = {}  # level -> Net
        self.exp_depth: dict = {}  # level -> int
        self.ones: list = []  # (nkey, concl ekey)
        self.ders: list = []
        self.root_conclusions: list = []
        self._walk(net, (), 0)
        self.root_conclusions = [((), e) for e in net.conclusions]

    def _walk(self, net: Net, level: tuple, depth: int) -> None:
        self.level_net[level] = net
        self.exp_depth[level] = depth
        for eid, edge in net.edges.items():
            self.edge_type[(level, eid)] = edge.typ
        for nid, node in net.nodes.items():
            nkey = (level, nid)
            self.node[nkey] = node
            for i, e in enumerate(node.concl):
                self.edge_concl[(level, e)] = (nkey, i)
            for i, e in enumerate(node.prem):
                self.edge_prem[(level, e)] = (nkey, i)
            if node.kind == "one":
                self.ones.append((nkey, (level, node.concl[0])))
            elif node.kind == "der":
                self.ders.append((nkey, (level, node.concl[0])))
            for ci, content in enumerate(node.contents):
                extra = 1 if node.kind in ("bangbox", "ybox") else 0
                self._walk(content, level + ((nid, ci),), depth + extra)

    def typ(self, ekey) -> Formula:
        return self.edge_type[ekey]

    def is_root_conclusion(self, ekey) -> bool:
        return ekey[0] == () and ekey[1] in self.level_net[()].conclusions

    def content_role(self, ekey):
        """For a content-conclusion edge, return (box nkey, content index,
        conclusion position); None for other edges."""
        level, eid = ekey
        if not level or ekey in self.edge_prem:
            return None
        net = self.level_net[level]
        if eid not in net.conclusions:
            return None
        bnid, ci = level[-1]
        return ((level[:-1], bnid), ci, net.conclusions.index(eid))

    def inner_edge(self, box_nkey, ci: int, pos: int):
        level, bnid = box_nkey
        box = self.node[box_nkey]
        content = box.contents[ci]
        return (level + ((bnid, ci),), content.conclusions[pos])

    def principal_premise(self, box_nkey, ci: int = 0):
        """The content-side edge of a box's principal door (or a choice
        box side's bot root)."""
        return self.inner_edge(box_nkey, ci, 0)


def _flat(obj) -> str:
    """Deterministic string encoding of nested tuples, built iteratively so
    deeply nested recursion signatures cannot overflow the recursion limit."""
    out = []
    stack = [obj]
    while stack:
        x = stack.pop()
        if x.__class__ is tuple:
            out.append("(")
            stack.append(")")
            stack.extend(reversed(x))
        elif isinstance(x, str):
            out.append(x)
        else:
            out.append(repr(x))
    return "|".join(out)


def _sort_key(x):
    return _flat(x)


class MachineState:
    """Immutable multi-token state: tokens with origins, the address map on
    origins, and a memory.  Compared up to address permutation."""

    __slots__ = ("tokens", "ind", "memory", "_key", "_hash")

    def __init__(self, tokens: frozenset, ind: dict, memory):
        self.tokens = frozenset(tokens)
        self.ind = dict(ind)
        origins = [o for _, o in self.tokens]
        assert len(set(origins)) == len(origins), "duplicate token origin"
        assert len(set(self.ind.values())) == len(self.ind)
        self.memory = memory
        self._key = None
        self._hash = None

    def _sigma(self) -> dict:
        sigma: dict = {}
        for orig in sorted(self.ind, key=_sort_key):
            sigma[self.ind[orig]] = len(sigma)
        get = getattr(self.memory, "get", None)
        orphans = set(self.memory.support()) - set(sigma)
        for a in sorted(orphans, key=lambda a: (repr(get(a)) if get else "", a)):
            sigma[a] = len(sigma)
        return sigma

    def canonical_key(self):
        if self._key is None:
            sigma = self._sigma()
            toks = tuple(sorted(self.tokens, key=_sort_key))
            ind_c = tuple(
                sorted(((o, sigma[a]) for o, a in self.ind.items()), key=_sort_key)
            )
            self._key = (toks, ind_c, self.memory.rename(sigma))
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, MachineState) and self.canonical_key() == other.canonical_key()

    def approx_eq(self, other, tol: float = 1e-9) -> bool:
        if not isinstance(other, MachineState):
            return False
        k1, k2 = self.canonical_key(), other.canonical_key()
        return k1[0] == k2[0] and k1[1] == k2[1] and k1[2].approx_eq(k2[2], tol)

    def __hash__(self) -> int:
        # Positions carry no addresses, so the raw token set is already
        # canonical; address-sensitive parts are left to __eq__.
        return hash(self.tokens)

    def __repr__(self) -> str:
        return (
            f"MachineState({len(self.tokens)} tokens, "
            f"{len(self.ind)} addresses, memory={self.memory!r})"
        )


@dataclass(frozen=True)
class Transition:
    kind: str  # move | update | test | link | spawn
    data: tuple

    def sort_key(self):
        order = {"link": 0, "spawn": 1, "move": 2, "update": 3, "test": 4}
        return (order[self.kind], _flat(self.data))


class MsSystem:
    """The machine for one program net, as a probabilistic rewrite system."""

    def __init__(self, pn: ProgramNet):
        self.index = NetIndex(pn.net)
        self.pn_ind = {((), e): a for e, a in pn.ind.items()}
        self.initial_memory = pn.memory

    # -- token kinematics --------------------------------------------------

    def direction(self, pos) -> str:
        ekey, fstack, _ = pos
        if fstack == (DELTA,):
            return "stable"
        holder = self.index.edge_concl.get(ekey)
        if holder is not None and self.index.node[holder[0]].kind == "bot":
            return "stable"
        kind = indicator(fstack, self.index.typ(ekey))
        if kind in ("bot", "bang"):
            return "up"
        if kind in ("one", "quest"):
            return "down"
        raise AssertionError(f"invalid stack {fstack} on {self.index.typ(ekey)}")

    def copies(self, st: MachineState, box_nkey, ci: int = 0) -> set:
        """Box stacks of the copies opened for a box (per side for choice
        boxes); the whole net counts as one open copy with the empty stack."""
        if box_nkey is None:
            return {()}
        door = self.index.principal_premise(box_nkey, ci)
        kind = self.index.node[box_nkey].kind
        want_stack = (DELTA,) if kind in ("bangbox", "ybox") else ()
        return {
            pos[2]
            for pos, _ in st.tokens
            if pos[0] == door and pos[1] == want_stack
        }

    def _gate_of(self, level):
        """(box nkey, content index) immediately enclosing a level."""
        if not level:
            return None, 0
        bnid, ci = level[-1]
        return ((level[:-1], bnid), ci)

    def token_step(self, st: MachineState, pos):
        """Classify the unique pending action of a non-stable token:
        ("move", newpos) | ("sync", sync nkey, t) | ("test",) | None."""
        ekey, fstack, bstack = pos
        d = self.direction(pos)
        if d == "stable":
            return None
        idx = self.index
        if d == "down":
            prem = idx.edge_prem.get(ekey)
            if prem is None:
                role = idx.content_role(ekey)
                if role is None:
                    return None  # exited at a net conclusion
                return self._exit_door(st, pos, role)
            nkey, i = prem
            node = idx.node[nkey]
            level = ekey[0]
            if node.kind == "cut":
                other = node.prem[1 - i]
                return ("move", ((level, other), fstack, bstack))
            if node.kind in ("tensor", "par"):
                tag = "l" if i == 0 else "r"
                return ("move", ((level, node.concl[0]), (tag,) + fstack, bstack))
            if node.kind == "contr":
                wrap = l_sig if i == 0 else r_sig
                return ("move", ((level, node.concl[0]), (wrap(fstack[0]),) + fstack[1:], bstack))
            if node.kind == "der":
                return ("move", ((level, node.concl[0]), (STAR,) + fstack, bstack))
            if node.kind == "sync":
                return ("sync", nkey, bstack)
            return None
        # upward
        concl = idx.edge_concl.get(ekey)
        if concl is None:
            return None  # upward at an interface edge with no producer
        nkey, j = concl
        node = idx.node[nkey]
        level = ekey[0]
        if node.kind == "ax":
            other = node.concl[1 - j]
            return ("move", ((level, other), fstack, bstack))
        if node.kind in ("tensor", "par"):
            tag, rest = fstack[0], fstack[1:]
            assert tag in ("l", "r")
            target = node.prem[0 if tag == "l" else 1]
            return ("move", ((level, target), rest, bstack))
        if node.kind == "contr":
            sig, rest = fstack[0], fstack[1:]
            struct = sig_struct(sig)
            if struct[0] == "l":
                return ("move", ((level, node.prem[0]), (struct[1],) + rest, bstack))
            if struct[0] == "r":
                return ("move", ((level, node.prem[1]), (struct[1],) + rest, bstack))
            return None
        if node.kind == "der":
            sig, rest = fstack[0], fstack[1:]
            if sig == STAR:
                return ("move", ((level, node.prem[0]), rest, bstack))
            return None
        if node.kind in ("bangbox", "ybox"):
            return self._enter_exp_box(st, pos, nkey, j, node.kind)
        if node.kind == "botbox":
            if j == 0:
                return ("test",)
            return self._enter_bot_aux(st, pos, nkey, j)
        return None

    def _enter_exp_box(self, st, pos, box_nkey, j, kind):
        ekey, fstack, bstack = pos
        sig, rest = fstack[0], fstack[1:]
        port = j if j == 0 else (j + 1 if kind == "ybox" else j)
        if j == 0:
            inner = self.index.inner_edge(box_nkey, 0, 0)
            if rest == (DELTA,):
                # The token found its box: it parks as the stable marker
                # that opens copy `sig`.
                return ("move", (inner, (DELTA,), bstack + (sig,)))
            if bstack + (sig,) in self.copies(st, box_nkey):
                return ("move", (inner, rest, bstack + (sig,)))
            return None
        # auxiliary door: the signature pairs the box copy with the inner one
        struct = sig_struct(sig)
        if struct[0] != "p":
            return None
        box_copy, inner_sig = struct[1], struct[2]
        if bstack + (box_copy,) not in self.copies(st, box_nkey):
            return None
        inner = self.index.inner_edge(box_nkey, 0, port)
        return ("move", (inner, (inner_sig,) + rest, bstack + (box_copy,)))

    def _enter_bot_aux(self, st, pos, box_nkey, j):
        ekey, fstack, bstack = pos
        for ci in (0, 1):
            if bstack in self.copies(st, box_nkey, ci):
                inner = self.index.inner_edge(box_nkey, ci, j)
                return ("move", (inner, fstack, bstack))
        return None

    def _exit_door(self, st, pos, role):
        ekey, fstack, bstack = pos
        box_nkey, ci, cpos = role
        kind = self.index.node[box_nkey].kind
        level, bnid = box_nkey
        node = self.index.node[box_nkey]
        if kind == "botbox":
            assert cpos >= 1
            return ("move", ((level, node.concl[cpos]), fstack, bstack))
        if cpos == 0:
            copy = bstack[-1]
            struct = sig_struct(copy)
            if struct[0] == "y":
                # Retrace into the copy that requested this one, at the
                # recursion port.
                c0, sig = struct[1], struct[2]
                port = self.index.inner_edge(box_nkey, 0, 1)
                return ("move", (port, (sig,) + fstack, bstack[:-1] + (c0,)))
            return ("move", ((level, node.concl[0]), (copy,) + fstack, bstack[:-1]))
        if kind == "ybox" and cpos == 1:
            # Downward at the recursion port: request a new copy of the box.
            sig, rest = fstack[0], fstack[1:]
            c0 = bstack[-1]
            new_copy = y_sig(c0, sig)
            inner = self.index.inner_edge(box_nkey, 0, 0)
            if rest == (DELTA,):
                return ("move", (inner, (DELTA,), bstack[:-1] + (new_copy,)))
            if bstack[:-1] + (new_copy,) in self.copies(st, box_nkey):
                return ("move", (inner, rest, bstack[:-1] + (new_copy,)))
            return None
        # exponential auxiliary door: wrap the inner signature with the copy
        out_pos = cpos - (1 if kind == "ybox" else 0)
        sig, rest = fstack[0], fstack[1:]
        copy = bstack[-1]
        return (
            "move",
            ((level, node.concl[out_pos]), (pair_sig(copy, sig),) + rest, bstack[:-1]),
        )

    # -- transition enumeration -------------------------------------------

    def enumerate_redexes(self, st: MachineState) -> list[Transition]:
        out: list[Transition] = []
        sync_tokens: dict = {}
        for pos, orig in st.tokens:
            act = self.token_step(st, pos)
            if act is None:
                continue
            if act[0] == "move":
                out.append(Transition("move", (orig,)))
            elif act[0] == "test":
                out.append(Transition("test", (orig,)))
            elif act[0] == "sync":
                sync_tokens.setdefault((act[1], act[2]), set()).add(pos[0])
        for (sync_nkey, t), prem_edges in sync_tokens.items():
            node = self.index.node[sync_nkey]
            level = sync_nkey[0]
            if all((level, e) in prem_edges for e in node.prem):
                out.append(Transition("update", (sync_nkey, t)))
        used = {orig for _, orig in st.tokens}
        for sites, kind in ((self.index.ones, "link"), (self.index.ders, "spawn")):
            for nkey, ekey in sites:
                box_nkey, ci = self._gate_of(nkey[0])
                fstack = () if kind == "link" else (STAR, DELTA)
                for t in self.copies(st, box_nkey, ci):
                    p = (ekey, fstack, t)
                    if p not in used:
                        out.append(Transition(kind, (nkey, t)))
        return sorted(out, key=Transition.sort_key)

    # -- transition application -------------------------------------------

    def apply(self, st: MachineState, tr: Transition) -> Distribution:
        if tr.kind in ("link", "spawn"):
            nkey, t = tr.data
            node = self.index.node[nkey]
            ekey = (nkey[0], node.concl[0])
            fstack = () if tr.kind == "link" else (STAR, DELTA)
            p = (ekey, fstack, t)
            tokens = st.tokens | {(p, p)}
            if tr.kind == "spawn":
                return Distribution.dirac(MachineState(tokens, st.ind, st.memory))
            if not t and ekey in self.pn_ind:
                i = self.pn_ind[ekey]
            else:
                i = fresh(
                    st.memory,
                    set(st.ind.values()) | set(self.pn_ind.values()),
                )
            ind = dict(st.ind)
            ind[p] = i
            return Distribution.dirac(MachineState(tokens, ind, st.memory))
        if tr.kind == "move":
            (orig,) = tr.data
            (pos, _) = next(tk for tk in st.tokens if tk[1] == orig)
            act = self.token_step(st, pos)
            assert act is not None and act[0] == "move"
            tokens = (st.tokens - {(pos, orig)}) | {(act[1], orig)}
            return Distribution.dirac(MachineState(tokens, st.ind, st.memory))
        if tr.kind == "update":
            sync_nkey, t = tr.data
            node = self.index.node[sync_nkey]
            level = sync_nkey[0]
            addrs = []
            tokens = set(st.tokens)
            for i, e in enumerate(node.prem):
                pos = ((level, e), (), t)
                tok = next(tk for tk in st.tokens if tk[0] == pos)
                addrs.append(st.ind[tok[1]])
                tokens.discard(tok)
                tokens.add((((level, node.concl[i]), (), t), tok[1]))
            m2 = st.memory.update(tuple(addrs), node.label)
            return Distribution.dirac(MachineState(frozenset(tokens), st.ind, m2))
        if tr.kind == "test":
            (orig,) = tr.data
            (pos, _) = next(tk for tk in st.tokens if tk[1] == orig)
            ekey, fstack, bstack = pos
            box_nkey, j = self.index.edge_concl[ekey]
            assert j == 0 and self.index.node[box_nkey].kind == "botbox"
            i = st.ind[orig]
            out = []
            for (outcome, m2), p in st.memory.test(i):
                side = 1 if outcome else 0
                root = self.index.principal_premise(box_nkey, side)
                tokens = (st.tokens - {(pos, orig)}) | {((root, fstack, bstack), orig)}
                out.append((MachineState(tokens, st.ind, m2), p))
            return Distribution(out)
        raise AssertionError(tr.kind)

    # -- classification ----------------------------------------------------

    def is_final(self, st: MachineState) -> bool:
        for pos, _ in st.tokens:
            d = self.direction(pos)
            if d == "stable":
                continue
            if d == "down" and self.index.is_root_conclusion(pos[0]) and not pos[2]:
                continue
            return False
        return True

    def classify(self, st: MachineState) -> str:
        if self.is_final(st):
            return "final"
        if not self.enumerate_redexes(st):
            return "deadlock"
        return "running"

    def is_terminal(self, st: MachineState) -> bool:
        return self.is_final(st)

    def is_branching(self, st: MachineState, tr: Transition) -> bool:
        return tr.kind == "test"

    # -- initial state ------------------------------------------------------

    def initial_state(self) -> MachineState:
        tokens = set()
        ind = {}
        for ekey in self.index.root_conclusions:
            for s in _up_stacks(self.index.typ(ekey)):
                p = (ekey, s, ())
                tokens.add((p, p))
                if s == () and ekey in self.pn_ind:
                    ind[p] = self.pn_ind[ekey]
        return MachineState(frozenset(tokens), ind, self.initial_memory)


def _up_stacks(a: Formula, prefix: tuple = ()):
    """All stacks indicating a bot occurrence in a modality-free formula."""
    if a.kind == "bot":
        yield prefix
    elif a.kind in ("tensor", "par"):
        yield from _up_stacks(a.sub[0], prefix + ("l",))
        yield from _up_stacks(a.sub[1], prefix + ("r",))
    elif a.kind in ("bang", "quest"):
        raise NotImplementedError("initial tokens under modalities")


def run(
    pn: ProgramNet,
    horizon: int,
    tol: float = 1e-9,
    policy: Policy = leftmost_policy,
    budget: int = 500,
):
    """Convergence probability of the machine for `pn`, with macro-steps."""
    sys = MsSystem(pn)
    fused = FusedSystem(sys, budget=budget)
    start = fused.prepare(sys.initial_state())
    return converge(Distribution.dirac(start), fused, policy, horizon=horizon, tol=tol)
