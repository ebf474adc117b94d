"""A linearly typed call-by-value language with memory effects.

Terms:  x | \\x. M | M N | <M, N> | let <x,y> = M in N |
        letrec f x = M in N | new | c | if P then M else N

`new` allocates a fresh memory address of base type; constants are the
backend's labeled operations at type a^(x)n -o a^(x)n; `if` destructively
tests its base-typed guard.  The type system is linear: non-! variables are
used exactly once, duplicable values live at types !(A -o B) introduced by
promotion, and `if` branches may only capture !-typed variables.  Types are
inferred by unification, with promotions inserted where a value is checked
against a !-type.

The abstract machine rewrites closures (term, address map, memory): `new`
links a fresh address, a constant applied to a tuple of linked variables
updates the memory, `if` on a linked variable branches through the memory
test, and beta/let/letrec steps are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .memory import OperationLabel, fresh
from .pars import Distribution


# ---------------------------------------------------------------------------
# Terms (identity equality: nodes carry type annotations after checking)


@dataclass(eq=False)
class Term:
    pass


@dataclass(eq=False)
class Var(Term):
    name: str


@dataclass(eq=False)
class Lam(Term):
    var: str
    body: Term


@dataclass(eq=False)
class App(Term):
    fun: Term
    arg: Term


@dataclass(eq=False)
class Pair(Term):
    left: Term
    right: Term


@dataclass(eq=False)
class LetPair(Term):
    left: str
    right: str
    subject: Term
    body: Term


@dataclass(eq=False)
class LetRec(Term):
    fun: str
    var: str
    fbody: Term
    body: Term


@dataclass(eq=False)
class New(Term):
    pass


@dataclass(eq=False)
class Const(Term):
    label: OperationLabel


@dataclass(eq=False)
class If(Term):
    guard: Term
    then: Term
    els: Term


def term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Lam):
        return f"\\{t.var}. {term_str(t.body)}"
    if isinstance(t, App):
        f = term_str(t.fun)
        a = term_str(t.arg)
        if isinstance(t.fun, (Lam, If, LetPair, LetRec)):
            f = f"({f})"
        if isinstance(t.arg, (App, Lam, If, LetPair, LetRec)):
            a = f"({a})"
        return f"{f} {a}"
    if isinstance(t, Pair):
        return f"<{term_str(t.left)}, {term_str(t.right)}>"
    if isinstance(t, LetPair):
        return f"let <{t.left}, {t.right}> = {term_str(t.subject)} in {term_str(t.body)}"
    if isinstance(t, LetRec):
        return f"letrec {t.fun} {t.var} = {term_str(t.fbody)} in {term_str(t.body)}"
    if isinstance(t, New):
        return "new"
    if isinstance(t, Const):
        return t.label.name
    if isinstance(t, If):
        return f"if {term_str(t.guard)} then {term_str(t.then)} else {term_str(t.els)}"
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Parsing


class ParseError(Exception):
    pass


_KEYWORDS = {"let", "in", "letrec", "if", "then", "else", "new"}
_PUNCT = ("\\", ".", "<", ">", ",", "(", ")", "=")


def tokenize(src: str) -> list[str]:
    tokens = []
    for line in src.splitlines():
        line = line.split("--")[0]
        i = 0
        while i < len(line):
            ch = line[i]
            if ch.isspace():
                i += 1
            elif ch in "\\.<>,()=":
                tokens.append(ch)
                i += 1
            elif ch.isalnum() or ch == "_":
                j = i
                while j < len(line) and (line[j].isalnum() or line[j] == "_"):
                    j += 1
                tokens.append(line[i:j])
                i = j
            else:
                raise ParseError(f"unexpected character {ch!r}")
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], ops: dict[str, OperationLabel]):
        self.tokens = tokens
        self.pos = 0
        self.ops = ops

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def ident(self) -> str:
        tok = self.next()
        if not tok[0].isalpha() or tok in _KEYWORDS or tok in self.ops:
            raise ParseError(f"expected identifier, got {tok!r}")
        return tok

    def term(self) -> Term:
        tok = self.peek()
        if tok == "\\":
            self.next()
            var = self.ident()
            self.expect(".")
            return Lam(var, self.term())
        if tok == "let":
            self.next()
            self.expect("<")
            a = self.ident()
            self.expect(",")
            b = self.ident()
            self.expect(">")
            self.expect("=")
            subject = self.term()
            self.expect("in")
            return LetPair(a, b, subject, self.term())
        if tok == "letrec":
            self.next()
            f = self.ident()
            x = self.ident()
            self.expect("=")
            fbody = self.term()
            self.expect("in")
            return LetRec(f, x, fbody, self.term())
        if tok == "if":
            self.next()
            guard = self.term()
            self.expect("then")
            then = self.term()
            self.expect("else")
            return If(guard, then, self.term())
        return self.app()

    def app(self) -> Term:
        t = self.atom()
        while self.peek() is not None and (
            self.peek() not in (")", ">", ",", "in", "then", "else")
        ):
            t = App(t, self.atom())
        return t

    def atom(self) -> Term:
        tok = self.next()
        if tok == "new":
            return New()
        if tok == "(":
            t = self.term()
            self.expect(")")
            return t
        if tok == "<":
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(">")
            return Pair(a, b)
        if tok in self.ops:
            return Const(self.ops[tok])
        if tok[0].isalpha() and tok not in _KEYWORDS:
            return Var(tok)
        raise ParseError(f"unexpected token {tok!r}")


def parse(src: str, ops: dict[str, OperationLabel]) -> Term:
    p = _Parser(tokenize(src), ops)
    t = p.term()
    if p.peek() is not None:
        raise ParseError(f"trailing input at {p.peek()!r}")
    return t


# ---------------------------------------------------------------------------
# Types and inference


class TypecheckError(Exception):
    pass


@dataclass(eq=False)
class TVar:
    ref: "Ty | None" = None


@dataclass(frozen=True)
class Ty:
    kind: str  # base | lolli | tensor | bang
    sub: tuple = ()

    def __repr__(self):
        if self.kind == "base":
            return "a"
        if self.kind == "lolli":
            return f"({self.sub[0]} -o {self.sub[1]})"
        if self.kind == "tensor":
            return f"({self.sub[0]} * {self.sub[1]})"
        return f"!{self.sub[0]}"


BASE = Ty("base")


def lolli(a, b):
    return Ty("lolli", (a, b))


def tensor_t(a, b):
    return Ty("tensor", (a, b))


def bang_t(a):
    return Ty("bang", (a,))


def resolve(t):
    while isinstance(t, TVar) and t.ref is not None:
        t = t.ref
    return t


def occurs(v: TVar, t) -> bool:
    t = resolve(t)
    if t is v:
        return True
    if isinstance(t, Ty):
        return any(occurs(v, s) for s in t.sub)
    return False


def unify(a, b) -> None:
    a, b = resolve(a), resolve(b)
    if a is b:
        return
    if isinstance(a, TVar):
        if occurs(a, b):
            raise TypecheckError("recursive type")
        a.ref = b
        return
    if isinstance(b, TVar):
        unify(b, a)
        return
    if a.kind != b.kind or len(a.sub) != len(b.sub):
        raise TypecheckError(f"type mismatch: {ground(a)} vs {ground(b)}")
    for x, y in zip(a.sub, b.sub):
        unify(x, y)


def ground(t) -> Ty:
    """Fully resolve, defaulting leftover variables to the base type."""
    t = resolve(t)
    if isinstance(t, TVar):
        t.ref = BASE
        return BASE
    return Ty(t.kind, tuple(ground(s) for s in t.sub))


def tuple_type(n: int) -> Ty:
    return BASE if n == 1 else tensor_t(BASE, tuple_type(n - 1))


def is_value(t: Term) -> bool:
    if isinstance(t, (Var, Lam, Const)):
        return True
    if isinstance(t, Pair):
        return is_value(t.left) and is_value(t.right)
    return False


def count_occurrences(t: Term, name: str) -> int:
    if isinstance(t, Var):
        return 1 if t.name == name else 0
    if isinstance(t, Lam):
        return 0 if t.var == name else count_occurrences(t.body, name)
    if isinstance(t, App):
        return count_occurrences(t.fun, name) + count_occurrences(t.arg, name)
    if isinstance(t, Pair):
        return count_occurrences(t.left, name) + count_occurrences(t.right, name)
    if isinstance(t, LetPair):
        n = count_occurrences(t.subject, name)
        if name not in (t.left, t.right):
            n += count_occurrences(t.body, name)
        return n
    if isinstance(t, LetRec):
        n = 0
        if name not in (t.fun, t.var):
            n += count_occurrences(t.fbody, name)
        if name != t.fun:
            n += count_occurrences(t.body, name)
        return n
    if isinstance(t, If):
        return (
            count_occurrences(t.guard, name)
            + count_occurrences(t.then, name)
            + count_occurrences(t.els, name)
        )
    return 0


class Checker:
    """Unification-based inference with promotion insertion.

    A binder whose variable occurs zero or several times in its scope is
    forced to a !(A -o B) type; a once-used binder gets a plain variable,
    which can never resolve to a !-type because checking against a !-type
    promotes first.  `promotions` collects term nodes that are boxed by the
    translation; `use` records for each variable occurrence whether it is a
    linear use or a dereliction of a !-variable.
    """

    def __init__(self):
        self.promotions: set[int] = set()
        self.use: dict[int, str] = {}
        self.types: dict[int, object] = {}
        self.binders: dict[int, dict[str, object]] = {}

    def binder_type(self, term: Term, name: str):
        n = count_occurrences(term, name)
        if n == 1:
            return TVar()
        return bang_t(lolli(TVar(), TVar()))

    def infer(self, ctx: dict, t: Term):
        ty = self._infer(ctx, t)
        self.types[id(t)] = ty
        return ty

    def _infer(self, ctx: dict, t: Term):
        if isinstance(t, Var):
            if t.name not in ctx:
                raise TypecheckError(f"unbound variable {t.name}")
            d = resolve(ctx[t.name])
            if isinstance(d, Ty) and d.kind == "bang":
                self.use[id(t)] = "bang"
                return d.sub[0]
            self.use[id(t)] = "linear"
            return d
        if isinstance(t, Lam):
            d = self.binder_type(t.body, t.var)
            self.binders[id(t)] = {t.var: d}
            body = self.infer({**ctx, t.var: d}, t.body)
            return lolli(d, body)
        if isinstance(t, App):
            tf = self.infer(ctx, t.fun)
            a, b = TVar(), TVar()
            unify(tf, lolli(a, b))
            self.check(ctx, t.arg, a)
            return b
        if isinstance(t, Pair):
            return tensor_t(self.infer(ctx, t.left), self.infer(ctx, t.right))
        if isinstance(t, LetPair):
            da = self.binder_type(t.body, t.left)
            db = self.binder_type(t.body, t.right)
            if t.left == t.right:
                raise TypecheckError("pair pattern variables must be distinct")
            self.binders[id(t)] = {t.left: da, t.right: db}
            self.check(ctx, t.subject, tensor_t(da, db))
            return self.infer({**ctx, t.left: da, t.right: db}, t.body)
        if isinstance(t, LetRec):
            a, b = TVar(), TVar()
            df = bang_t(lolli(a, b))
            dx = self.binder_type(t.fbody, t.var)
            unify(a, dx)
            self.binders[id(t)] = {t.fun: df, t.var: dx}
            self.check({**ctx, t.fun: df, t.var: dx}, t.fbody, b)
            return self.infer({**ctx, t.fun: df}, t.body)
        if isinstance(t, New):
            return BASE
        if isinstance(t, Const):
            n = t.label.arity
            return lolli(tuple_type(n), tuple_type(n))
        if isinstance(t, If):
            self.check(ctx, t.guard, BASE)
            ty = self.infer(ctx, t.then)
            self.check(ctx, t.els, ty)
            return ty
        raise TypeError(t)

    def check(self, ctx: dict, t: Term, expected) -> None:
        e = resolve(expected)
        if isinstance(e, Ty) and e.kind == "bang":
            if not is_value(t):
                raise TypecheckError(f"only values can be promoted: {term_str(t)}")
            self.promotions.add(id(t))
            # A !-typed variable re-promotes through its dereliction.
            self.check(ctx, t, e.sub[0])
            return
        unify(self.infer(ctx, t), expected)


def check_linearity(t: Term, ctx: dict[str, str], boxed: frozenset = frozenset()) -> dict[str, int]:
    """Enforce linear usage; returns the use count of free variables.

    `ctx` maps variables to "linear" or "bang".  Linear variables must be
    used exactly once and may not occur inside if-branches or boxed subterms
    (promoted values, recursive function bodies) from outside.
    """

    def walk(t: Term, ctx, banned: frozenset) -> dict[str, int]:
        counts: dict[str, int] = {}

        def merge(sub: dict[str, int]):
            for k, v in sub.items():
                counts[k] = counts.get(k, 0) + v

        if isinstance(t, Var):
            if t.name in banned:
                raise TypecheckError(
                    f"linear variable {t.name} crosses a duplicable boundary"
                )
            return {t.name: 1}
        if isinstance(t, Lam):
            kind = "linear" if count_occurrences(t.body, t.var) == 1 else "bang"
            inner = walk(t.body, {**ctx, t.var: kind}, banned - {t.var})
            _leave(inner, t.var, kind)
            return {k: v for k, v in inner.items() if k != t.var}
        if isinstance(t, App):
            merge(walk(t.fun, ctx, banned))
            merge(walk(t.arg, ctx, banned))
        elif isinstance(t, Pair):
            merge(walk(t.left, ctx, banned))
            merge(walk(t.right, ctx, banned))
        elif isinstance(t, LetPair):
            merge(walk(t.subject, ctx, banned))
            kinds = {
                v: ("linear" if count_occurrences(t.body, v) == 1 else "bang")
                for v in (t.left, t.right)
            }
            inner = walk(t.body, {**ctx, **kinds}, banned - set(kinds))
            for v, kind in kinds.items():
                _leave(inner, v, kind)
            merge({k: v for k, v in inner.items() if k not in kinds})
        elif isinstance(t, LetRec):
            linear_here = {v for v, k in ctx.items() if k == "linear"}
            xkind = "linear" if count_occurrences(t.fbody, t.var) == 1 else "bang"
            inner = walk(
                t.fbody,
                {**ctx, t.fun: "bang", t.var: xkind},
                (banned | linear_here) - {t.fun, t.var},
            )
            _leave(inner, t.var, xkind)
            merge({k: v for k, v in inner.items() if k not in (t.fun, t.var)})
            inner = walk(t.body, {**ctx, t.fun: "bang"}, banned - {t.fun})
            merge({k: v for k, v in inner.items() if k != t.fun})
        elif isinstance(t, If):
            merge(walk(t.guard, ctx, banned))
            linear_here = {v for v, k in ctx.items() if k == "linear"}
            for branch in (t.then, t.els):
                merge(walk(branch, ctx, banned | linear_here))
        return counts

    def _leave(counts: dict[str, int], var: str, kind: str) -> None:
        if kind == "linear" and counts.get(var, 0) != 1:
            raise TypecheckError(f"linear variable {var} used {counts.get(var, 0)} times")

    top = walk(t, ctx, frozenset())
    for v, kind in ctx.items():
        if kind == "linear" and top.get(v, 0) != 1:
            raise TypecheckError(f"linear variable {v} used {top.get(v, 0)} times")
    return top


@dataclass
class TypedProgram:
    term: Term
    type: Ty
    types: dict[int, Ty]        # node id -> ground type (pre-promotion)
    binders: dict[int, dict[str, Ty]]  # binder node id -> var -> ground type
    use: dict[int, str]         # Var node id -> "linear" | "bang"
    promotions: set[int]        # node ids wrapped in a !-box
    free: dict[str, Ty]


def typecheck(term: Term, free: dict[str, Ty] | None = None) -> TypedProgram:
    """Infer the type of `term` with free variables at the given types."""
    free = dict(free or {})
    checker = Checker()
    ty = checker.infer(dict(free), term)
    result = ground(ty)
    types = {k: ground(v) for k, v in checker.types.items()}
    binders = {
        k: {v: ground(d) for v, d in bs.items()} for k, bs in checker.binders.items()
    }
    free_g = {v: ground(t) for v, t in free.items()}
    kinds = {v: ("bang" if t.kind == "bang" else "linear") for v, t in free_g.items()}
    check_linearity(term, kinds)

    def bang_shapes(ty: Ty):
        if ty.kind == "bang" and ty.sub[0].kind != "lolli":
            raise TypecheckError(f"!-types must wrap functions: {ty}")
        for s in ty.sub:
            bang_shapes(s)

    for ty2 in list(types.values()) + [d for bs in binders.values() for d in bs.values()]:
        bang_shapes(ty2)
    return TypedProgram(
        term, result, types, binders, checker.use, checker.promotions, free_g
    )


# ---------------------------------------------------------------------------
# Closures and the abstract machine


class Closure:
    __slots__ = ("term", "ind", "memory", "_key", "_hash")

    def __init__(self, term: Term, ind: dict[str, int], memory):
        self.term = term
        self.ind = dict(ind)
        self.memory = memory
        assert len(set(self.ind.values())) == len(self.ind)
        self._key = None
        self._hash = None

    def canonical_key(self):
        if self._key is None:
            order: list[str] = []
            seen = set()

            def first_use(t: Term, bound: frozenset):
                if isinstance(t, Var):
                    if t.name not in bound and t.name not in seen:
                        seen.add(t.name)
                        order.append(t.name)
                elif isinstance(t, Lam):
                    first_use(t.body, bound | {t.var})
                elif isinstance(t, App):
                    first_use(t.fun, bound)
                    first_use(t.arg, bound)
                elif isinstance(t, Pair):
                    first_use(t.left, bound)
                    first_use(t.right, bound)
                elif isinstance(t, LetPair):
                    first_use(t.subject, bound)
                    first_use(t.body, bound | {t.left, t.right})
                elif isinstance(t, LetRec):
                    first_use(t.fbody, bound | {t.fun, t.var})
                    first_use(t.body, bound | {t.fun})
                elif isinstance(t, If):
                    first_use(t.guard, bound)
                    first_use(t.then, bound)
                    first_use(t.els, bound)

            first_use(self.term, frozenset())
            assert all(v in self.ind for v in order), "free variable without address"
            sigma: dict[int, int] = {}
            for v in order:
                sigma[self.ind[v]] = len(sigma)
            for a in sorted(self.ind.values()):
                if a not in sigma:
                    sigma[a] = len(sigma)
            get = getattr(self.memory, "get", None)
            orphans = set(self.memory.support()) - set(sigma)
            for a in sorted(orphans, key=lambda a: (repr(get(a)) if get else "", a)):
                sigma[a] = len(sigma)

            def canon(t: Term, env: dict[str, object]):
                if isinstance(t, Var):
                    v = env.get(t.name)
                    if v is None:
                        return ("fvar", sigma[self.ind[t.name]])
                    return ("bvar", v)
                if isinstance(t, Lam):
                    return ("lam", canon(t.body, {**env, t.var: len(env)}))
                if isinstance(t, App):
                    return ("app", canon(t.fun, env), canon(t.arg, env))
                if isinstance(t, Pair):
                    return ("pair", canon(t.left, env), canon(t.right, env))
                if isinstance(t, LetPair):
                    e2 = {**env, t.left: len(env), t.right: len(env) + 1}
                    return ("letpair", canon(t.subject, env), canon(t.body, e2))
                if isinstance(t, LetRec):
                    e1 = {**env, t.fun: len(env), t.var: len(env) + 1}
                    e2 = {**env, t.fun: len(env)}
                    return ("letrec", canon(t.fbody, e1), canon(t.body, e2))
                if isinstance(t, New):
                    return ("new",)
                if isinstance(t, Const):
                    return ("const", t.label)
                if isinstance(t, If):
                    return (
                        "if",
                        canon(t.guard, env),
                        canon(t.then, env),
                        canon(t.els, env),
                    )
                raise TypeError(t)

            self._key = (canon(self.term, {}), self.memory.rename(sigma))
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Closure) and self.canonical_key() == other.canonical_key()

    def approx_eq(self, other, tol: float = 1e-9) -> bool:
        if not isinstance(other, Closure):
            return False
        k1, k2 = self.canonical_key(), other.canonical_key()
        return k1[0] == k2[0] and k1[1].approx_eq(k2[1], tol)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.canonical_key())
        return self._hash

    def __repr__(self) -> str:
        return f"Closure({term_str(self.term)!r}, ind={self.ind}, memory={self.memory!r})"


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    if isinstance(t, Pair):
        return free_vars(t.left) | free_vars(t.right)
    if isinstance(t, LetPair):
        return free_vars(t.subject) | (free_vars(t.body) - {t.left, t.right})
    if isinstance(t, LetRec):
        return (free_vars(t.fbody) - {t.fun, t.var}) | (free_vars(t.body) - {t.fun})
    if isinstance(t, If):
        return free_vars(t.guard) | free_vars(t.then) | free_vars(t.els)
    return set()


def all_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Lam):
        return all_vars(t.body) | {t.var}
    if isinstance(t, App):
        return all_vars(t.fun) | all_vars(t.arg)
    if isinstance(t, Pair):
        return all_vars(t.left) | all_vars(t.right)
    if isinstance(t, LetPair):
        return all_vars(t.subject) | all_vars(t.body) | {t.left, t.right}
    if isinstance(t, LetRec):
        return all_vars(t.fbody) | all_vars(t.body) | {t.fun, t.var}
    if isinstance(t, If):
        return all_vars(t.guard) | all_vars(t.then) | all_vars(t.els)
    return set()


_rename_counter = itertools.count()


def _fresh_name(avoid: set[str], base: str = "v") -> str:
    while True:
        name = f"{base}_{next(_rename_counter)}"
        if name not in avoid:
            return name


def subst(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding substitution (value free variables are protected)."""
    fv = free_vars(value)

    def go(t: Term, name: str) -> Term:
        if isinstance(t, Var):
            return copy_term(value) if t.name == name else Var(t.name)
        if isinstance(t, Lam):
            if t.var == name:
                return Lam(t.var, copy_term(t.body))
            if t.var in fv:
                newv = _fresh_name(fv | all_vars(t.body) | {name})
                return Lam(newv, go(subst(t.body, t.var, Var(newv)), name))
            return Lam(t.var, go(t.body, name))
        if isinstance(t, App):
            return App(go(t.fun, name), go(t.arg, name))
        if isinstance(t, Pair):
            return Pair(go(t.left, name), go(t.right, name))
        if isinstance(t, LetPair):
            subj = go(t.subject, name)
            l, r, body = t.left, t.right, t.body
            if name in (l, r):
                return LetPair(l, r, subj, copy_term(body))
            for v in (l, r):
                if v in fv:
                    newv = _fresh_name(fv | all_vars(body) | {name, l, r})
                    body = subst(body, v, Var(newv))
                    if v == l:
                        l = newv
                    else:
                        r = newv
            return LetPair(l, r, subj, go(body, name))
        if isinstance(t, LetRec):
            f, x, fbody, body = t.fun, t.var, t.fbody, t.body
            if f in fv or x in fv:
                for v in (f, x):
                    if v in fv:
                        newv = _fresh_name(fv | all_vars(fbody) | all_vars(body) | {name})
                        fbody = subst(fbody, v, Var(newv))
                        if v == f:
                            body = subst(body, v, Var(newv))
                            f = newv
                        else:
                            x = newv
            fbody2 = copy_term(fbody) if name in (f, x) else go(fbody, name)
            body2 = copy_term(body) if name == f else go(body, name)
            return LetRec(f, x, fbody2, body2)
        if isinstance(t, New):
            return New()
        if isinstance(t, Const):
            return Const(t.label)
        if isinstance(t, If):
            return If(go(t.guard, name), go(t.then, name), go(t.els, name))
        raise TypeError(t)

    return go(t, name)


def copy_term(t: Term) -> Term:
    if isinstance(t, Var):
        return Var(t.name)
    if isinstance(t, Lam):
        return Lam(t.var, copy_term(t.body))
    if isinstance(t, App):
        return App(copy_term(t.fun), copy_term(t.arg))
    if isinstance(t, Pair):
        return Pair(copy_term(t.left), copy_term(t.right))
    if isinstance(t, LetPair):
        return LetPair(t.left, t.right, copy_term(t.subject), copy_term(t.body))
    if isinstance(t, LetRec):
        return LetRec(t.fun, t.var, copy_term(t.fbody), copy_term(t.body))
    if isinstance(t, New):
        return New()
    if isinstance(t, Const):
        return Const(t.label)
    if isinstance(t, If):
        return If(copy_term(t.guard), copy_term(t.then), copy_term(t.els))
    raise TypeError(t)


def _tuple_vars(t: Term) -> list[str] | None:
    """Variable names of a var-tuple <x1, <x2, ...>> (or a single var)."""
    if isinstance(t, Var):
        return [t.name]
    if isinstance(t, Pair):
        l = _tuple_vars(t.left)
        r = _tuple_vars(t.right)
        if l is not None and r is not None:
            return l + r
    return None


def find_redex(t: Term):
    """Locate the head redex: returns (redex kind, node, rebuild) or None."""

    def descend(t: Term, rebuild):
        root = root_redex(t)
        if root is not None:
            return root[0], t, rebuild
        if isinstance(t, App):
            if not is_value(t.fun):
                return descend(t.fun, lambda h: rebuild(App(h, t.arg)))
            if not is_value(t.arg):
                return descend(t.arg, lambda h: rebuild(App(t.fun, h)))
        elif isinstance(t, Pair):
            if not is_value(t.left):
                return descend(t.left, lambda h: rebuild(Pair(h, t.right)))
            if not is_value(t.right):
                return descend(t.right, lambda h: rebuild(Pair(t.left, h)))
        elif isinstance(t, LetPair):
            if not is_value(t.subject):
                return descend(
                    t.subject,
                    lambda h: rebuild(LetPair(t.left, t.right, h, t.body)),
                )
        elif isinstance(t, If):
            if not is_value(t.guard):
                return descend(t.guard, lambda h: rebuild(If(h, t.then, t.els)))
        return None

    def root_redex(t: Term):
        if isinstance(t, New):
            return ("link",)
        if isinstance(t, LetRec):
            return ("letrec",)
        if isinstance(t, App) and isinstance(t.fun, Lam) and is_value(t.arg):
            return ("beta",)
        if isinstance(t, App) and isinstance(t.fun, Const) and is_value(t.arg):
            if _tuple_vars(t.arg) is not None:
                return ("update",)
        if isinstance(t, LetPair) and is_value(t.subject) and isinstance(t.subject, Pair):
            return ("letpair",)
        if isinstance(t, If) and isinstance(t.guard, Var):
            return ("test",)
        return None

    return descend(t, lambda h: h)


def closure_step(cl: Closure, redex=None) -> Distribution:
    found = find_redex(cl.term) if redex is None else redex
    assert found is not None
    kind, node, rebuild = found
    if kind == "link":
        i = fresh(cl.memory, set(cl.ind.values()))
        name = _fresh_name(all_vars(cl.term) | set(cl.ind), base="x")
        ind2 = dict(cl.ind)
        ind2[name] = i
        return Distribution.dirac(Closure(rebuild(Var(name)), ind2, cl.memory))
    if kind == "letrec":
        assert isinstance(node, LetRec)
        unrolled = Lam(
            node.var,
            LetRec(node.fun, node.var, copy_term(node.fbody), copy_term(node.fbody)),
        )
        return Distribution.dirac(
            Closure(rebuild(subst(node.body, node.fun, unrolled)), cl.ind, cl.memory)
        )
    if kind == "beta":
        assert isinstance(node, App) and isinstance(node.fun, Lam)
        out = subst(node.fun.body, node.fun.var, node.arg)
        return Distribution.dirac(Closure(rebuild(out), cl.ind, cl.memory))
    if kind == "update":
        assert isinstance(node, App) and isinstance(node.fun, Const)
        names = _tuple_vars(node.arg)
        addrs = tuple(cl.ind[n] for n in names)
        m2 = cl.memory.update(addrs, node.fun.label)
        return Distribution.dirac(Closure(rebuild(copy_term(node.arg)), cl.ind, m2))
    if kind == "letpair":
        assert isinstance(node, LetPair) and isinstance(node.subject, Pair)
        out = subst(node.body, node.left, node.subject.left)
        out = subst(out, node.right, node.subject.right)
        return Distribution.dirac(Closure(rebuild(out), cl.ind, cl.memory))
    if kind == "test":
        assert isinstance(node, If) and isinstance(node.guard, Var)
        i = cl.ind[node.guard.name]
        ind2 = {v: a for v, a in cl.ind.items() if v != node.guard.name}
        out = []
        for (outcome, m2), p in cl.memory.test(i):
            branch = node.then if outcome else node.els
            out.append((Closure(rebuild(copy_term(branch)), ind2, m2), p))
        return Distribution(out)
    raise AssertionError(kind)


class PcfSystem:
    """PCF_AM closures as a probabilistic rewrite system."""

    def enumerate_redexes(self, cl: Closure):
        found = find_redex(cl.term)
        return [found] if found is not None else []

    def apply(self, cl: Closure, r) -> Distribution:
        return closure_step(cl, r)

    def is_terminal(self, cl: Closure) -> bool:
        return find_redex(cl.term) is None

    def is_branching(self, cl: Closure, r) -> bool:
        return r[0] == "test"
