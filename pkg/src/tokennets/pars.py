"""Probabilistic abstract rewrite systems over finite-support distributions.

A rewrite system maps elements to redexes, and firing a redex yields a
finite-support sub-probability distribution over elements.  The lifted step
reduces every non-terminal element of a distribution at once, under a policy
that picks one redex per element.  On systems with the diamond property the
terminal mass reached at each step count is independent of the policy, which
is what the bundled diamond checker verifies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Protocol

TOL = 1e-9
PRUNE = 1e-15

Element = Hashable
Redex = Any


class RewriteSystem(Protocol):
    def enumerate_redexes(self, a: Element) -> list[Redex]: ...

    def apply(self, a: Element, r: Redex) -> "Distribution": ...

    def is_terminal(self, a: Element) -> bool: ...


Policy = Callable[[Element, list[Redex]], Redex]


def leftmost_policy(a: Element, redexes: list[Redex]) -> Redex:
    return redexes[0]


def rightmost_policy(a: Element, redexes: list[Redex]) -> Redex:
    return redexes[-1]


def seeded_policy(seed: int) -> Policy:
    rng = random.Random(seed)

    def pick(a: Element, redexes: list[Redex]) -> Redex:
        return redexes[rng.randrange(len(redexes))]

    return pick


class Distribution:
    """Finite-support sub-probability distribution.

    Entries are strictly positive and sum to at most 1 (within tolerance);
    entries below the pruning threshold are dropped on construction.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: dict[Element, float] | Iterable[tuple[Element, float]] = ()):
        items = entries.items() if isinstance(entries, dict) else entries
        acc: dict[Element, float] = {}
        for a, p in items:
            if p < 0:
                raise ValueError(f"negative probability {p}")
            acc[a] = acc.get(a, 0.0) + p
        self.entries = {a: p for a, p in acc.items() if p >= PRUNE}
        total = sum(self.entries.values())
        if total > 1 + TOL:
            raise ValueError(f"distribution mass {total} exceeds 1")

    @classmethod
    def dirac(cls, a: Element) -> "Distribution":
        return cls({a: 1.0})

    def __getitem__(self, a: Element) -> float:
        return self.entries.get(a, 0.0)

    def __iter__(self):
        return iter(self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and self.entries == other.entries

    def __repr__(self) -> str:
        body = ", ".join(f"{a!r}: {p:.6g}" for a, p in self.entries.items())
        return "{" + body + "}"

    def support(self) -> list[Element]:
        return list(self.entries)

    def mass(self) -> float:
        return sum(self.entries.values())

    def scale(self, c: float) -> "Distribution":
        return Distribution({a: c * p for a, p in self.entries.items()})

    def map(self, f: Callable[[Element], Element]) -> "Distribution":
        return Distribution([(f(a), p) for a, p in self.entries.items()])

    def close_to(self, other: "Distribution", tol: float = TOL) -> bool:
        keys = set(self.entries) | set(other.entries)
        return all(abs(self[a] - other[a]) <= tol for a in keys)


def terminal_split(mu: Distribution, sys: RewriteSystem) -> tuple[Distribution, Distribution]:
    """Split mu into its terminal and reducible parts (pointwise sum is mu)."""
    term = {a: p for a, p in mu if sys.is_terminal(a)}
    red = {a: p for a, p in mu if a not in term}
    return Distribution(term), Distribution(red)


def degree_of_termination(mu: Distribution, sys: RewriteSystem) -> float:
    return sum(p for a, p in mu if sys.is_terminal(a))


def lift_step(mu: Distribution, sys: RewriteSystem, policy: Policy) -> Distribution:
    """One parallel step: every non-terminal support element is reduced once."""
    out: list[tuple[Element, float]] = []
    for a, p in mu:
        if sys.is_terminal(a):
            out.append((a, p))
        else:
            redexes = sys.enumerate_redexes(a)
            rho = sys.apply(a, policy(a, redexes))
            out.extend((b, p * q) for b, q in rho)
    return Distribution(out)


def iterate(mu: Distribution, n: int, sys: RewriteSystem, policy: Policy) -> Distribution:
    for _ in range(n):
        mu = lift_step(mu, sys, policy)
    return mu


def converge(
    mu: Distribution,
    sys: RewriteSystem,
    policy: Policy,
    horizon: int,
    tol: float = TOL,
) -> tuple[float, bool]:
    """Iterate the lifted step up to `horizon`, tracking the terminal mass.

    Stops early only once the remaining reducible mass falls below `tol`
    (from that point the terminal degree can no longer change by >= tol), and
    reports whether the horizon cut the run short.  A stall in the terminal
    degree is not a stopping criterion: a looping system keeps mass reducible
    forever and must report hitting the horizon.
    """
    for _ in range(horizon):
        _, red = terminal_split(mu, sys)
        if red.mass() < tol:
            return degree_of_termination(mu, sys), False
        mu = lift_step(mu, sys, policy)
    _, red = terminal_split(mu, sys)
    return degree_of_termination(mu, sys), red.mass() >= tol


def converge_trace(
    mu: Distribution, sys: RewriteSystem, policy: Policy, horizon: int
) -> list[float]:
    """Terminal degree after 0..horizon lifted steps (stops when mass settles)."""
    trace = [degree_of_termination(mu, sys)]
    for _ in range(horizon):
        _, red = terminal_split(mu, sys)
        if red.mass() < PRUNE:
            break
        mu = lift_step(mu, sys, policy)
        trace.append(degree_of_termination(mu, sys))
    return trace


@dataclass
class DiamondReport:
    passed: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def _terminal_parts_equal(nu: Distribution, xi: Distribution, sys: RewriteSystem, tol: float) -> bool:
    nu0, _ = terminal_split(nu, sys)
    xi0, _ = terminal_split(xi, sys)
    return nu0.close_to(xi0, tol)


def check_diamond(
    sys: RewriteSystem,
    seeds: list[Element],
    depth: int,
    policies: tuple[Policy, Policy],
    tol: float = TOL,
) -> DiamondReport:
    """Bounded diamond-property check.

    For each seed element, runs the lifted step `depth` times under both
    policies and requires equal terminal parts at every step count; for each
    genuine one-step divergence it additionally requires the two reducts to be
    joinable with one more step.
    """
    p1, p2 = policies
    report = DiamondReport(True)
    for seed in seeds:
        mu1 = mu2 = Distribution.dirac(seed)
        for k in range(1, depth + 1):
            mu1 = lift_step(mu1, sys, p1)
            mu2 = lift_step(mu2, sys, p2)
            if not _terminal_parts_equal(mu1, mu2, sys, tol):
                report.passed = False
                report.failures.append(
                    f"seed {seed!r}: terminal parts differ at step {k}: "
                    f"{terminal_split(mu1, sys)[0]!r} vs {terminal_split(mu2, sys)[0]!r}"
                )
                break
        if not sys.is_terminal(seed):
            nu = lift_step(Distribution.dirac(seed), sys, p1)
            xi = lift_step(Distribution.dirac(seed), sys, p2)
            if nu != xi:
                nu2 = lift_step(nu, sys, p2)
                xi2 = lift_step(xi, sys, p1)
                if not (nu2.close_to(xi2, tol) or nu.close_to(xi, tol)):
                    report.passed = False
                    report.failures.append(
                        f"seed {seed!r}: one-step divergence not joinable in one step: "
                        f"{nu2!r} vs {xi2!r}"
                    )
    return report


CONTINUE = "continue"


class FusedSystem:
    """Adapter that fuses runs of deterministic (Dirac) steps into one step.

    The underlying system tags each redex as branching or not via
    `sys.is_branching(a, r)`; non-branching redexes must be Dirac.  Elements
    of the fused system are kept closure-normal: all non-branching redexes are
    exhausted (up to a step budget) before the element is exposed.  A fused
    step then fires one branching redex and re-closes every branch, so one
    step of this system corresponds to one observable choice point.  On
    diamond systems this leaves terminal parts unchanged while collapsing
    long deterministic runs.

    When the budget interrupts a closure mid-run (a diverging deterministic
    spine), the element is exposed with a single `CONTINUE` redex that simply
    resumes the closure, so the element stays non-terminal.
    """

    def __init__(self, sys, budget: int = 500):
        self.sys = sys
        self.budget = budget

    def _closure(self, a: Element) -> Element:
        for _ in range(self.budget):
            redexes = self.sys.enumerate_redexes(a)
            det = [r for r in redexes if not self.sys.is_branching(a, r)]
            if not det:
                return a
            rho = self.sys.apply(a, det[0])
            if len(rho) != 1:
                raise AssertionError("non-branching redex produced a branching step")
            (a,) = rho.support()
        return a

    def prepare(self, a: Element) -> Element:
        return self._closure(a)

    def enumerate_redexes(self, a: Element) -> list[Redex]:
        redexes = self.sys.enumerate_redexes(a)
        branching = [r for r in redexes if self.sys.is_branching(a, r)]
        if branching:
            return branching
        if redexes:
            return [CONTINUE]
        return []

    def apply(self, a: Element, r: Redex) -> Distribution:
        if r == CONTINUE:
            return Distribution.dirac(self._closure(a))
        rho = self.sys.apply(a, r)
        return rho.map(self._closure)

    def is_terminal(self, a: Element) -> bool:
        return not self.enumerate_redexes(a)
