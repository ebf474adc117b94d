"""Parametric memory structures: addresses, labeled updates, boolean tests.

A memory structure provides `test(i)` returning a proper distribution over
(outcome, next-memory) pairs, a partial `update(addrs, label)` defined on
pairwise-distinct address tuples of the label's arity, a finite `support`,
renaming along address permutations, and fresh-address allocation.  Three
instances are provided: natural-number registers (deterministic test for
zero), probabilistic boolean registers (biased-coin test), and a quantum
state vector with dynamically bound qubit addresses (destructive
measurement).  Tests and updates on disjoint addresses commute; the test
suite checks those equations on randomized instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .pars import Distribution, PRUNE, TOL

Address = int


@dataclass(frozen=True)
class OperationLabel:
    name: str
    arity: int


def fresh(m, used: set[Address] = frozenset()) -> Address:
    """Smallest natural number outside support(m) and `used`."""
    taken = set(m.support()) | set(used)
    i = 0
    while i in taken:
        i += 1
    return i


def _check_update_args(addrs: tuple[Address, ...], label: OperationLabel) -> None:
    if len(addrs) != label.arity:
        raise ValueError(f"{label.name} expects {label.arity} addresses, got {len(addrs)}")
    if len(set(addrs)) != len(addrs):
        raise ValueError(f"duplicate addresses in update {label.name}{addrs}")


# ---------------------------------------------------------------------------
# Integer registers


S = OperationLabel("S", 1)
P = OperationLabel("P", 1)
MAX = OperationLabel("max", 2)


class IntRegisterMemory:
    """Map from addresses to naturals, absent entries read as 0.

    The test is deterministic: true iff the value at the address is zero, and
    the memory is left unchanged.
    """

    __slots__ = ("values",)
    labels = {l.name: l for l in (S, P, MAX)}

    def __init__(self, values: dict[Address, int] = ()):  # type: ignore[assignment]
        self.values = {i: v for i, v in dict(values).items() if v != 0}

    def get(self, i: Address) -> int:
        return self.values.get(i, 0)

    def support(self) -> set[Address]:
        return set(self.values)

    def test(self, i: Address) -> Distribution:
        return Distribution.dirac((self.get(i) == 0, self))

    def update(self, addrs: tuple[Address, ...], label: OperationLabel) -> "IntRegisterMemory":
        _check_update_args(addrs, label)
        vals = dict(self.values)

        def put(i, v):
            if v:
                vals[i] = v
            else:
                vals.pop(i, None)

        if label == S:
            put(addrs[0], self.get(addrs[0]) + 1)
        elif label == P:
            put(addrs[0], max(self.get(addrs[0]) - 1, 0))
        elif label == MAX:
            put(addrs[0], max(self.get(addrs[0]), self.get(addrs[1])))
        else:
            raise ValueError(f"unknown integer-register operation {label.name}")
        return IntRegisterMemory(vals)

    def rename(self, sigma: dict[Address, Address]) -> "IntRegisterMemory":
        return IntRegisterMemory({sigma.get(i, i): v for i, v in self.values.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, IntRegisterMemory) and self.values == other.values

    def __hash__(self) -> int:
        return hash(frozenset(self.values.items()))

    def approx_eq(self, other, tol: float = TOL) -> bool:
        return self == other

    def __repr__(self) -> str:
        return f"IntRegisterMemory({self.values})"


# ---------------------------------------------------------------------------
# Probabilistic boolean registers


COIN = OperationLabel("c", 1)


class ProbRegisterMemory:
    """Map from addresses to probabilities in [0, 1], absent entries read 0.

    Testing address i yields true (setting the register to 1) with
    probability m(i) and false (setting it to 0) otherwise.  The only update
    places a fair coin: m(i) := 1/2.
    """

    __slots__ = ("values",)
    labels = {COIN.name: COIN}

    def __init__(self, values: dict[Address, float] = ()):  # type: ignore[assignment]
        vals = dict(values)
        for v in vals.values():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"register value {v} outside [0, 1]")
        self.values = {i: v for i, v in vals.items() if v != 0.0}

    def get(self, i: Address) -> float:
        return self.values.get(i, 0.0)

    def support(self) -> set[Address]:
        return set(self.values)

    def _set(self, i: Address, v: float) -> "ProbRegisterMemory":
        vals = dict(self.values)
        if v:
            vals[i] = v
        else:
            vals.pop(i, None)
        return ProbRegisterMemory(vals)

    def test(self, i: Address) -> Distribution:
        p = self.get(i)
        return Distribution(
            [((True, self._set(i, 1.0)), p), ((False, self._set(i, 0.0)), 1.0 - p)]
        )

    def update(self, addrs: tuple[Address, ...], label: OperationLabel) -> "ProbRegisterMemory":
        _check_update_args(addrs, label)
        if label != COIN:
            raise ValueError(f"unknown probabilistic-register operation {label.name}")
        return self._set(addrs[0], 0.5)

    def rename(self, sigma: dict[Address, Address]) -> "ProbRegisterMemory":
        return ProbRegisterMemory({sigma.get(i, i): v for i, v in self.values.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, ProbRegisterMemory) and self.values == other.values

    def __hash__(self) -> int:
        return hash(frozenset(self.values.items()))

    def approx_eq(self, other, tol: float = TOL) -> bool:
        if not isinstance(other, ProbRegisterMemory):
            return False
        keys = set(self.values) | set(other.values)
        return all(abs(self.get(i) - other.get(i)) <= tol for i in keys)

    def __repr__(self) -> str:
        return f"ProbRegisterMemory({self.values})"


# ---------------------------------------------------------------------------
# Quantum state vector


_S2 = sqrt(0.5)

BUILTIN_GATES: dict[str, tuple[int, np.ndarray]] = {
    "H": (1, np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex)),
    "X": (1, np.array([[0, 1], [1, 0]], dtype=complex)),
    "Z": (1, np.array([[1, 0], [0, -1]], dtype=complex)),
    # |x y> -> |x XOR y> |y>: the first address of the tuple is the target.
    "CNOT": (2, np.array(
        [[1, 0, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0],
         [0, 1, 0, 0]], dtype=complex)),
}


def check_unitary(mat: np.ndarray, name: str = "gate") -> None:
    n = mat.shape[0]
    if mat.shape != (n, n) or np.abs(mat.conj().T @ mat - np.eye(n)).max() > TOL:
        raise ValueError(f"{name} is not unitary")


def load_gate_config(path: str) -> dict[str, tuple[int, np.ndarray]]:
    """Parse a gate configuration file.

    Each non-empty, non-comment line reads `name, arity, e_1, ..., e_{4^n}`
    with the matrix entries row-major complex literals like `0.5+0.5i`.
    """
    gates: dict[str, tuple[int, np.ndarray]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#")[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: malformed gate line")
            name, arity = parts[0], int(parts[1])
            dim = 2**arity
            entries = parts[2:]
            if len(entries) != dim * dim:
                raise ValueError(
                    f"{path}:{lineno}: gate {name} needs {dim * dim} entries, got {len(entries)}"
                )
            vals = [complex(e.replace(" ", "").replace("i", "j")) for e in entries]
            mat = np.array(vals, dtype=complex).reshape(dim, dim)
            check_unitary(mat, name)
            gates[name] = (arity, mat)
    return gates


class QuantumMemory:
    """State vector over dynamically bound qubit addresses.

    `bound` is kept sorted ascending; amplitude index bit j (most significant
    first) corresponds to bound[j].  Unbound addresses are implicitly |0> and
    are bound on first use.  Measurement is destructive: the outcome qubit is
    projected, the state renormalized, and the address removed from `bound`.
    """

    __slots__ = ("bound", "amps", "gates")

    def __init__(self, bound=(), amps=None, gates=None):
        self.bound = tuple(bound)
        if sorted(set(self.bound)) != list(self.bound):
            raise ValueError(f"bound addresses must be sorted and distinct: {bound}")
        if amps is None:
            amps = np.zeros(2 ** len(self.bound), dtype=complex)
            amps[0] = 1.0
        self.amps = np.asarray(amps, dtype=complex)
        if self.amps.shape != (2 ** len(self.bound),):
            raise ValueError("amplitude vector length does not match bound addresses")
        if abs(np.sum(np.abs(self.amps) ** 2) - 1.0) > TOL:
            raise ValueError("state vector is not normalized")
        self.gates = dict(BUILTIN_GATES) if gates is None else gates

    def support(self) -> set[Address]:
        return set(self.bound)

    def _with(self, bound, amps) -> "QuantumMemory":
        return QuantumMemory(bound, amps, self.gates)

    def _bind(self, addrs: tuple[Address, ...]) -> "QuantumMemory":
        """Bind any unbound addresses as |0> (keeping `bound` sorted)."""
        m = self
        for i in sorted(set(addrs) - set(m.bound)):
            pos = sum(1 for b in m.bound if b < i)
            tensor = m.amps.reshape([2] * len(m.bound) or [1])
            expanded = np.stack([tensor, np.zeros_like(tensor)], axis=pos)
            bound = m.bound[:pos] + (i,) + m.bound[pos:]
            m = m._with(bound, expanded.reshape(-1))
        return m

    def update(self, addrs: tuple[Address, ...], label: OperationLabel) -> "QuantumMemory":
        _check_update_args(addrs, label)
        if label.name not in self.gates:
            raise ValueError(f"unknown gate {label.name}")
        arity, mat = self.gates[label.name]
        if arity != label.arity:
            raise ValueError(f"gate {label.name} has arity {arity}, label says {label.arity}")
        m = self._bind(addrs)
        n = len(m.bound)
        slots = [m.bound.index(i) for i in addrs]
        tensor = m.amps.reshape([2] * n)
        gate = mat.reshape([2] * (2 * arity))
        # Contract gate input axes against the addressed qubit axes; the gate
        # output axes land first, followed by the untouched axes in order.
        tensor = np.tensordot(gate, tensor, axes=(list(range(arity, 2 * arity)), slots))
        rest = [ax for ax in range(n) if ax not in slots]
        tensor = np.moveaxis(tensor, list(range(n)), slots + rest)
        return m._with(m.bound, tensor.reshape(-1))

    def test(self, i: Address) -> Distribution:
        if i not in self.bound:
            # A fresh qubit is |0>, so measuring it deterministically yields
            # false and leaves the state untouched.
            return Distribution.dirac((False, self))
        n = len(self.bound)
        slot = self.bound.index(i)
        tensor = self.amps.reshape([2] * n)
        new_bound = tuple(b for b in self.bound if b != i)
        branches = []
        for outcome in (False, True):
            sub = np.take(tensor, 1 if outcome else 0, axis=slot).reshape(-1)
            p = float(np.sum(np.abs(sub) ** 2))
            if p >= PRUNE:
                branches.append(((outcome, self._with(new_bound, sub / sqrt(p))), p))
        return Distribution(branches)

    def rename(self, sigma: dict[Address, Address]) -> "QuantumMemory":
        renamed = [sigma.get(b, b) for b in self.bound]
        order = np.argsort(renamed, kind="stable")
        tensor = self.amps.reshape([2] * len(self.bound) or [1])
        tensor = np.transpose(tensor, axes=list(order)) if self.bound else tensor
        return self._with(tuple(sorted(renamed)), tensor.reshape(-1))

    def __eq__(self, other) -> bool:
        # Amplitude comparison is tolerant so that states reached through
        # different but equivalent operation orders merge in distributions;
        # the hash rounds amplitudes coarsely enough to stay consistent for
        # any amplitudes further than 1e-9 from a rounding boundary.
        return self.approx_eq(other)

    def __hash__(self) -> int:
        # Adding 0.0 maps any -0.0 component to +0.0 before hashing.
        return hash((self.bound, (np.round(self.amps, 6) + 0.0).tobytes()))

    def approx_eq(self, other, tol: float = TOL) -> bool:
        return (
            isinstance(other, QuantumMemory)
            and self.bound == other.bound
            and self.amps.shape == other.amps.shape
            and bool(np.all(np.abs(self.amps - other.amps) <= tol))
        )

    def __repr__(self) -> str:
        terms = []
        for idx, a in enumerate(self.amps):
            if abs(a) > PRUNE:
                ket = format(idx, f"0{len(self.bound)}b") if self.bound else ""
                terms.append(f"{a:.4g}|{ket}>")
        return f"QuantumMemory(bound={self.bound}, {' + '.join(terms) or '1|>'})"


# ---------------------------------------------------------------------------
# Backends


class Backend:
    """Bundle of an initial memory constructor and its operation labels."""

    def __init__(self, name: str, labels: dict[str, OperationLabel], make_initial):
        self.name = name
        self.labels = labels
        self.make_initial = make_initial

    def initial(self):
        return self.make_initial()


def int_backend() -> Backend:
    return Backend("int", dict(IntRegisterMemory.labels), IntRegisterMemory)


def prob_backend() -> Backend:
    return Backend("prob", dict(ProbRegisterMemory.labels), ProbRegisterMemory)


def quantum_backend(gate_config: str | None = None) -> Backend:
    gates = dict(BUILTIN_GATES)
    if gate_config:
        gates.update(load_gate_config(gate_config))
    labels = {name: OperationLabel(name, arity) for name, (arity, _) in gates.items()}
    return Backend("quantum", labels, lambda: QuantumMemory(gates=gates))
