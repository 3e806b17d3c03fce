"""Flat gate-list circuit representation with a line-based text format.

Grammar (one statement per line, ``#`` starts a comment):

    qubits <n>          required first statement
    clbits <n>          optional
    x q | y q | z q | h q | s q | sdg q
    cx q q | cz q q
    measure q -> c
    reset q
    condx c q | condz c q    apply X/Z to qubit q iff classical bit c == 1

Qubit/classical-bit index 0 is the leftmost character in emitted bitstrings
(big-endian reading order); every consumer of measurement strings in this
package follows that convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class GateKind(Enum):
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDAG = "sdg"
    CX = "cx"
    CZ = "cz"
    MEASURE = "measure"
    RESET = "reset"
    CONDX = "condx"
    CONDZ = "condz"


# qubit operand count per kind
_QUBIT_ARITY = {
    GateKind.X: 1, GateKind.Y: 1, GateKind.Z: 1, GateKind.H: 1,
    GateKind.S: 1, GateKind.SDAG: 1,
    GateKind.CX: 2, GateKind.CZ: 2,
    GateKind.MEASURE: 1, GateKind.RESET: 1,
    GateKind.CONDX: 1, GateKind.CONDZ: 1,
}

# kinds counted as transversal-compilable in the gate census
_TRANSVERSAL_KINDS = frozenset({
    GateKind.X, GateKind.Y, GateKind.Z, GateKind.S, GateKind.SDAG,
    GateKind.CX, GateKind.CZ, GateKind.CONDX, GateKind.CONDZ,
})

_COND_KINDS = frozenset({GateKind.CONDX, GateKind.CONDZ})


class CircuitError(ValueError):
    """Malformed circuit: bad index, arity, or ordering."""


class CircuitSyntaxError(CircuitError):
    """Text-format parse failure; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def qubit_arity(kind: GateKind) -> int:
    return _QUBIT_ARITY[kind]


@dataclass(frozen=True)
class Gate:
    """A single operation: kind + qubit operands + classical-bit operands."""

    kind: GateKind
    qubits: tuple[int, ...]
    clbits: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "clbits", tuple(self.clbits))
        if len(self.qubits) != _QUBIT_ARITY[self.kind]:
            raise CircuitError(
                f"{self.kind.value} takes {_QUBIT_ARITY[self.kind]} qubit operand(s), "
                f"got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.kind.value} has repeated qubit operands {self.qubits}")
        expected_cl = 1 if (self.kind is GateKind.MEASURE or self.kind in _COND_KINDS) else 0
        if len(self.clbits) != expected_cl:
            raise CircuitError(
                f"{self.kind.value} takes {expected_cl} classical operand(s), got {len(self.clbits)}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over fixed qubit / classical registers.

    Immutable after construction; safe to share across threads.
    """

    num_qubits: int
    num_clbits: int = 0
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        if self.num_clbits < 0:
            raise CircuitError("negative classical register size")
        writes = [0] * self.num_clbits
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(f"gate {i} ({g.kind.value}): qubit {q} out of range")
            for c in g.clbits:
                if not 0 <= c < self.num_clbits:
                    raise CircuitError(f"gate {i} ({g.kind.value}): clbit {c} out of range")
            if g.kind is GateKind.MEASURE:
                writes[g.clbits[0]] += 1
            elif g.kind in _COND_KINDS:
                if writes[g.clbits[0]] > 1:
                    raise CircuitError(
                        f"gate {i}: clbit {g.clbits[0]} measured {writes[g.clbits[0]]} times "
                        "before being read")

    def __len__(self) -> int:
        return len(self.gates)

    def extended(self, extra: "Circuit") -> "Circuit":
        """Concatenate another circuit over registers at least as large."""
        return Circuit(
            max(self.num_qubits, extra.num_qubits),
            max(self.num_clbits, extra.num_clbits),
            self.gates + extra.gates,
        )


@dataclass(frozen=True)
class GateCensus:
    """Counts feeding the failure-budget formula c = t + 3h."""

    t: int  # transversal-compilable gates
    h: int  # Hadamard gates

    @property
    def c(self) -> int:
        return self.t + 3 * self.h


def parse_circuit(text: str) -> Circuit:
    """Parse the line-based text format into a Circuit.

    Raises CircuitSyntaxError with a 1-based line number on bad syntax,
    out-of-range indices, or arity mismatches.
    """
    num_qubits = None
    num_clbits = 0
    gates: list[Gate] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head, args = tokens[0], tokens[1:]

        if head == "qubits":
            if num_qubits is not None:
                raise CircuitSyntaxError(line_no, "duplicate qubits declaration")
            if gates:
                raise CircuitSyntaxError(line_no, "qubits declaration must come first")
            num_qubits = _parse_count(line_no, args, "qubits")
            continue
        if head == "clbits":
            num_clbits = _parse_count(line_no, args, "clbits")
            continue
        if num_qubits is None:
            raise CircuitSyntaxError(line_no, "missing qubits declaration")

        try:
            kind = GateKind(head)
        except ValueError:
            raise CircuitSyntaxError(line_no, f"unknown gate {head!r}") from None

        if kind is GateKind.MEASURE:
            if len(args) != 3 or args[1] != "->":
                raise CircuitSyntaxError(line_no, "measure syntax is: measure <q> -> <c>")
            qubits = (_parse_index(line_no, args[0]),)
            clbits = (_parse_index(line_no, args[2]),)
        elif kind in _COND_KINDS:
            if len(args) != 2:
                raise CircuitSyntaxError(line_no, f"{head} syntax is: {head} <c> <q>")
            clbits = (_parse_index(line_no, args[0]),)
            qubits = (_parse_index(line_no, args[1]),)
        else:
            arity = _QUBIT_ARITY[kind]
            if len(args) != arity:
                raise CircuitSyntaxError(line_no, f"{head} takes {arity} qubit operand(s)")
            qubits = tuple(_parse_index(line_no, a) for a in args)
            clbits = ()

        try:
            gate = Gate(kind, qubits, clbits)
            _check_ranges(gate, num_qubits, num_clbits)
        except CircuitError as exc:
            raise CircuitSyntaxError(line_no, str(exc)) from None
        gates.append(gate)

    if num_qubits is None:
        raise CircuitSyntaxError(1, "missing qubits declaration")
    return Circuit(num_qubits, num_clbits, tuple(gates))


def _parse_count(line_no: int, args: list[str], what: str) -> int:
    if len(args) != 1:
        raise CircuitSyntaxError(line_no, f"{what} takes one integer")
    n = _parse_index(line_no, args[0])
    if what == "qubits" and n < 1:
        raise CircuitSyntaxError(line_no, "qubits must be >= 1")
    return n


def _parse_index(line_no: int, token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise CircuitSyntaxError(line_no, f"expected integer, got {token!r}") from None
    if value < 0:
        raise CircuitSyntaxError(line_no, f"negative index {value}")
    return value


def _check_ranges(gate: Gate, num_qubits: int, num_clbits: int) -> None:
    for q in gate.qubits:
        if q >= num_qubits:
            raise CircuitError(f"qubit {q} out of range")
    for c in gate.clbits:
        if c >= num_clbits:
            raise CircuitError(f"clbit {c} out of range")


def serialize_circuit(circuit: Circuit) -> str:
    """Emit canonical text; parse_circuit(serialize_circuit(c)) == c."""
    lines = [f"qubits {circuit.num_qubits}"]
    if circuit.num_clbits:
        lines.append(f"clbits {circuit.num_clbits}")
    for g in circuit.gates:
        if g.kind is GateKind.MEASURE:
            lines.append(f"measure {g.qubits[0]} -> {g.clbits[0]}")
        elif g.kind in _COND_KINDS:
            lines.append(f"{g.kind.value} {g.clbits[0]} {g.qubits[0]}")
        else:
            lines.append(f"{g.kind.value} " + " ".join(str(q) for q in g.qubits))
    return "\n".join(lines)


def gate_census(circuit: Circuit) -> GateCensus:
    """Count transversal-compilable gates (t) and Hadamards (h).

    Measure and Reset are excluded: they are not failure locations in the
    t + 3h budget.
    """
    t = h = 0
    for g in circuit.gates:
        if g.kind in _TRANSVERSAL_KINDS:
            t += 1
        elif g.kind is GateKind.H:
            h += 1
        elif g.kind in (GateKind.MEASURE, GateKind.RESET):
            continue
        else:  # pragma: no cover - enum is closed
            raise CircuitError(f"unsupported gate kind {g.kind}")
    return GateCensus(t, h)


def remap_circuit(
    circuit: Circuit,
    qubit_map: dict[int, int],
    clbit_map: dict[int, int] | None = None,
    *,
    num_qubits: int,
    num_clbits: int = 0,
) -> Circuit:
    """Re-index a circuit fragment onto larger registers."""
    clbit_map = clbit_map or {}
    gates = tuple(
        Gate(g.kind, tuple(qubit_map[q] for q in g.qubits), tuple(clbit_map[c] for c in g.clbits))
        for g in circuit.gates
    )
    return Circuit(num_qubits, num_clbits, gates)
