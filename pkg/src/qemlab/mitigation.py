"""Detection-based mitigation: DM / DSM / SS post-selection, Hamming-band
correction, and the check-sandwich construction.

All decode functions return the logical bitstring on acceptance and None on
rejection. A shot is rejected whole: if any logical block rejects, the
entire readout is discarded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .circuit import Circuit, CircuitError, Gate, GateKind
from .codes import (
    CodeSpec,
    EncodedCircuit,
    PauliString,
    is_stabilizer_element,
    stabilizer_generators,
)
from .tableau import OutcomeHistogram, conjugate_pauli_through

_STEANE_ROWS = ((0, 2, 4, 6), (0, 1, 5, 6), (3, 4, 5, 6))


class Strategy(Enum):
    DM = "dm"
    DSM = "dsm"
    SS = "ss"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown strategy {name!r}") from None


class DecodePolicy(Enum):
    POST_SELECT = "postselect"
    CORRECT = "correct"
    CORRECT_ONE_SIGMA = "correct_onesigma"

    @classmethod
    def parse(cls, name: str) -> "DecodePolicy":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown policy {name!r}") from None


@dataclass(frozen=True)
class ReadoutLayout:
    """Positions of the decode-relevant bits inside a readout string.

    meas_blocks: per logical qubit, the clbit positions of its data block
    (replica order; position 0 is the decoded/primary qubit for DSM).
    syndrome_pairs: cat-readout clbit pairs, one per extracted generator.
    """

    meas_blocks: tuple[tuple[int, ...], ...]
    syndrome_pairs: tuple[tuple[int, int], ...] = ()

    def data_positions(self) -> tuple[int, ...]:
        return tuple(p for block in self.meas_blocks for p in block)


@dataclass
class MitigationResult:
    logical_counts: dict[str, float]
    accepted: float
    total: float
    post_rate: float

    def __post_init__(self):
        if self.accepted > self.total + 1e-9:
            raise ValueError("accepted exceeds total")

    def to_json(self, strategy: Strategy | None = None,
                policy: DecodePolicy | None = None) -> str:
        doc = {
            "strategy": strategy.value if strategy else None,
            "policy": policy.value if policy else None,
            "accepted": self.accepted,
            "total": self.total,
            "post_rate": self.post_rate,
            "logical_counts": self.logical_counts,
        }
        return json.dumps(doc, sort_keys=True)


def _decode_repetition_block(block_bits: str, d: int, policy: DecodePolicy) -> str | None:
    if d == 1:
        # no encoding: nothing to verify or correct under any policy
        return block_bits
    w = block_bits.count("1")
    if policy is DecodePolicy.POST_SELECT:
        if w == 0:
            return "0"
        if w == d:
            return "1"
        return None
    if policy is DecodePolicy.CORRECT:
        if 2 * w == d:
            return None  # exact tie: never guess
        value = "1" if 2 * w > d else "0"
        assert min(w, d - w) <= (d - 1) // 2  # correction capacity bound
        return value
    # CORRECT_ONE_SIGMA: discard the band within one binomial(d, 1/2)
    # standard deviation of d/2, majority-vote the rest
    if abs(w - d / 2) <= math.sqrt(d) / 2:
        return None
    return "1" if 2 * w > d else "0"


def _decode_steane_block(block_bits: str) -> str | None:
    for row in _STEANE_ROWS:
        if sum(int(block_bits[q]) for q in row) % 2:
            return None
    return str(block_bits.count("1") % 2)  # parity on the logical-Z support


def dm_decode(bits: str, layout: ReadoutLayout | tuple[tuple[int, ...], ...],
              code: CodeSpec, policy: DecodePolicy = DecodePolicy.POST_SELECT) -> str | None:
    """Computational-basis decode: keep only readouts in the codeword set
    (or correct them, per policy), block by block."""
    blocks = layout.meas_blocks if isinstance(layout, ReadoutLayout) else layout
    if max((p for block in blocks for p in block), default=-1) >= len(bits):
        raise ValueError("readout string shorter than the layout expects")
    if not code.is_repetition and policy is not DecodePolicy.POST_SELECT:
        raise ValueError("correction policies apply only to the repetition code")
    out = []
    for block in blocks:
        block_bits = "".join(bits[p] for p in block)
        if code.is_repetition:
            value = _decode_repetition_block(block_bits, code.distance, policy)
        else:
            value = _decode_steane_block(block_bits)
        if value is None:
            return None
        out.append(value)
    return "".join(out)


def dsm_postselect(bits: str, layout: ReadoutLayout | tuple[tuple[int, ...], ...]) -> str | None:
    """Post-decode selection: every non-primary position must read 0; the
    logical bit is the block's primary (position-0) bit."""
    blocks = layout.meas_blocks if isinstance(layout, ReadoutLayout) else layout
    if max((p for block in blocks for p in block), default=-1) >= len(bits):
        raise ValueError("readout string shorter than the layout expects")
    out = []
    for block in blocks:
        if any(bits[p] != "0" for p in block[1:]):
            return None
        out.append(bits[block[0]])
    return "".join(out)


def ss_postselect(data_bits: str, syndrome_bits: str,
                  layout: ReadoutLayout | tuple[tuple[int, ...], ...],
                  code: CodeSpec) -> str | None:
    """Accept iff every cat-pair parity is 0, then decode the data readout
    by the plain post-selection rule."""
    if len(syndrome_bits) % 2:
        raise ValueError("syndrome bits must come in cat pairs")
    for i in range(0, len(syndrome_bits), 2):
        if (int(syndrome_bits[i]) + int(syndrome_bits[i + 1])) % 2:
            return None
    return dm_decode(data_bits, layout, code, DecodePolicy.POST_SELECT)


def mitigate(hist: OutcomeHistogram | Mapping[str, float],
             layout: ReadoutLayout, code: CodeSpec, strategy: Strategy,
             policy: DecodePolicy = DecodePolicy.POST_SELECT) -> MitigationResult:
    """Fold a readout histogram into accepted logical counts.

    Works on integer shot counts and on exact probability weights alike.
    """
    counts = hist.counts if isinstance(hist, OutcomeHistogram) else hist
    if strategy in (Strategy.DSM, Strategy.SS) and policy is not DecodePolicy.POST_SELECT:
        raise ValueError("correction policies apply only to the DM strategy")
    if strategy is Strategy.SS and not layout.syndrome_pairs:
        raise ValueError("SS mitigation requires extraction syndrome bits in the layout")

    logical: dict[str, float] = {}
    accepted = 0.0
    total = 0.0
    for key, count in counts.items():
        total += count
        if strategy is Strategy.DM:
            value = dm_decode(key, layout, code, policy)
        elif strategy is Strategy.DSM:
            value = dsm_postselect(key, layout)
        else:
            syndrome = "".join(key[a] + key[b] for a, b in layout.syndrome_pairs)
            value = ss_postselect(key, syndrome, layout, code)
        if value is None:
            continue
        accepted += count
        logical[value] = logical.get(value, 0.0) + count
    post_rate = accepted / total if total else 0.0
    return MitigationResult(logical, accepted, total, post_rate)


@dataclass(frozen=True)
class PcsCircuit:
    """Check-sandwiched payload; post-select each check clbit on 0."""

    circuit: Circuit
    check_clbits: tuple[int, ...]
    payload_gates: tuple[int, int]  # [start, stop) indices of payload gates


def _emit_controlled_pauli(gates: list[Gate], ancilla: int, pauli: PauliString) -> None:
    for q, letter in enumerate(pauli.letters):
        if letter == "X":
            gates.append(Gate(GateKind.CX, (ancilla, q)))
        elif letter == "Z":
            gates.append(Gate(GateKind.CZ, (ancilla, q)))
        elif letter == "Y":
            gates.append(Gate(GateKind.CZ, (ancilla, q)))
            gates.append(Gate(GateKind.CX, (ancilla, q)))
            gates.append(Gate(GateKind.S, (ancilla,)))
    if pauli.phase == -1:
        gates.append(Gate(GateKind.Z, (ancilla,)))
    elif pauli.phase == 1j:
        gates.append(Gate(GateKind.S, (ancilla,)))
    elif pauli.phase == -1j:
        gates.append(Gate(GateKind.SDAG, (ancilla,)))


def build_pcs_circuit(payload: EncodedCircuit,
                      checks: list[tuple[PauliString, PauliString]]) -> PcsCircuit:
    """Sandwich a compiled payload between controlled Pauli checks.

    Each (left, right) pair rides its own ancilla prepared in |+>, with the
    controlled left check before the payload and the controlled right check
    after; the ancilla is read out in the X basis and the shot is kept when
    every check bit is 0. Checks must be stabilizer elements of the
    payload's code space and must satisfy right * U * left = U, which is
    verified by conjugating the left check through the payload.
    """
    phys = payload.physical
    if payload.injections:
        raise CircuitError("check sandwiching a payload with fault injections is not supported")
    n = phys.num_qubits
    gens = [
        g.embedded(block, n)
        for block in payload.layout.values()
        for g in stabilizer_generators(payload.code)
    ]
    for left, right in checks:
        if len(left) != n or len(right) != n:
            raise CircuitError("check length does not match the payload register")
        for name, check in (("left", left), ("right", right)):
            if not is_stabilizer_element(check, gens):
                raise CircuitError(f"{name} check {check.letters} is not a stabilizer element")
        propagated = conjugate_pauli_through(phys, left)
        if propagated != right:
            raise CircuitError(
                f"checks do not satisfy the sandwich identity: U L U+ = "
                f"{propagated.phase} {propagated.letters}, expected {right.letters}")

    k = len(checks)
    ancillas = tuple(range(n, n + k))
    clbase = phys.num_clbits
    check_clbits = tuple(range(clbase, clbase + k))
    gates: list[Gate] = []
    for a, (left, _) in zip(ancillas, checks):
        gates.append(Gate(GateKind.H, (a,)))
        _emit_controlled_pauli(gates, a, left.embedded(tuple(range(n)), n + k))
    payload_start = len(gates)
    gates.extend(Gate(g.kind, g.qubits, g.clbits) for g in phys.gates)
    payload_stop = len(gates)
    for a, c, (_, right) in zip(ancillas, check_clbits, checks):
        _emit_controlled_pauli(gates, a, right.embedded(tuple(range(n)), n + k))
        gates.append(Gate(GateKind.H, (a,)))
        gates.append(Gate(GateKind.MEASURE, (a,), (c,)))
    circuit = Circuit(n + k, clbase + k, tuple(gates))
    return PcsCircuit(circuit, check_clbits, (payload_start, payload_stop))
