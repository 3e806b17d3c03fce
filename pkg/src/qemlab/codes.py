"""Code definitions and the logical-to-physical compiler.

Supported codes: the length-d repetition (bit-flip) code with stabilizers
Z_i Z_{i+1}, and the 7-qubit CSS code built from the [7,4] Hamming parity
checks. d = 1 means no encoding: the compiler is the identity.

Logical gate map, repetition code (exact on the code space for every d,
even or odd):

    X  -> X on every replica              Z  -> Z on replica 0
    Y  -> Y on replica 0, X on the rest   S / Sdg -> on replica 0
    CX -> replica-wise CX                 CZ -> CZ between replica-0 pairs
    H  -> per HadamardMode (see below)    Measure -> replica-wise Z readout

Seven-qubit code: everything is applied to all 7 qubits; S and Sdg swap
(transversal S implements the adjoint logical phase on this code), and H is
always transversal, so the NonFT mode is rejected.

Hadamard modes for the repetition code:
    NonFT            decode cascade, H on replica 0, re-encode
    FTGadget         one-bit teleportation onto a fresh |+>_L cat block:
                     CZ into the block, transversal X-basis readout of the
                     data block, X_L correction conditioned on each readout
                     bit (their XOR is the logical outcome)
    IdealizedAncilla same gadget with a noiseless cat preparation plus a
                     single injected logical fault at rate kappa * p**d
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .circuit import Circuit, CircuitError, Gate, GateKind, gate_census
from .noise import Injection

_PHASES = (1 + 0j, -1 + 0j, 1j, -1j)


@dataclass(frozen=True)
class PauliString:
    """Phased Pauli operator: phase * letters, one letter per qubit."""

    phase: complex
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "phase", complex(self.phase))
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be a fourth root of unity, got {self.phase}")
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"bad pauli letters {self.letters!r}")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    def commutes_with(self, other: "PauliString") -> bool:
        """Symplectic product: counts anticommuting qubit pairs mod 2."""
        anti = 0
        for a, b in zip(self.letters, other.letters):
            if a != "I" and b != "I" and a != b:
                anti ^= 1
        return anti == 0

    def to_xz_bits(self) -> tuple[list[int], list[int], int]:
        """(x, z, exp) with the operator equal to i**exp * prod X^x Z^z."""
        phase_exp = {1 + 0j: 0, 1j: 1, -1 + 0j: 2, -1j: 3}[self.phase]
        x = [1 if c in "XY" else 0 for c in self.letters]
        z = [1 if c in "ZY" else 0 for c in self.letters]
        n_y = self.letters.count("Y")  # Y = i * XZ
        return x, z, (phase_exp + n_y) % 4

    @classmethod
    def from_xz_bits(cls, x, z, exp: int) -> "PauliString":
        letters = "".join("IXZY"[xb + 2 * zb] for xb, zb in zip(x, z))
        n_y = sum(1 for xb, zb in zip(x, z) if xb and zb)
        phase = (1, 1j, -1, -1j)[(exp - n_y) % 4]
        return cls(phase, letters)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if len(other) != len(self):
            raise ValueError("length mismatch")
        x1, z1, e1 = self.to_xz_bits()
        x2, z2, e2 = other.to_xz_bits()
        # reorder Z^z1 X^x2 -> (-1)^(z1.x2) X^x2 Z^z1
        swaps = sum(a & b for a, b in zip(z1, x2))
        x = [a ^ b for a, b in zip(x1, x2)]
        z = [a ^ b for a, b in zip(z1, z2)]
        return PauliString.from_xz_bits(x, z, (e1 + e2 + 2 * swaps) % 4)

    def embedded(self, positions: tuple[int, ...] | list[int], num_qubits: int) -> "PauliString":
        """Place this operator's letters at the given global positions."""
        letters = ["I"] * num_qubits
        for letter, pos in zip(self.letters, positions):
            letters[pos] = letter
        return PauliString(self.phase, "".join(letters))

    @classmethod
    def from_support(cls, letter: str, support, num_qubits: int,
                     phase: complex = 1.0) -> "PauliString":
        letters = ["I"] * num_qubits
        for q in support:
            letters[q] = letter
        return cls(phase, "".join(letters))


class HadamardMode(Enum):
    NONFT = "nonft"
    FT_GADGET = "ft"
    IDEALIZED_ANCILLA = "ideal"

    @classmethod
    def parse(cls, name: str) -> "HadamardMode":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown hadamard mode {name!r} "
                             f"(expected one of {[m.value for m in cls]})") from None


_STEANE_ROWS = ((0, 2, 4, 6), (0, 1, 5, 6), (3, 4, 5, 6))
_STEANE_PIVOTS = (2, 1, 3)   # one pivot per row, unique to that row
_STEANE_X_LOGICAL = (0, 4, 5)  # X_L support; the logical value rides on qubit 0


@dataclass(frozen=True)
class CodeSpec:
    """repetition(d) or the 7-qubit CSS code."""

    kind: str
    distance: int

    def __post_init__(self):
        if self.kind == "repetition":
            if self.distance < 1:
                raise ValueError("repetition distance must be >= 1")
        elif self.kind == "steane":
            if self.distance != 3:
                raise ValueError("the 7-qubit code has distance 3")
        else:
            raise ValueError(f"unknown code kind {self.kind!r}")

    @classmethod
    def repetition(cls, d: int) -> "CodeSpec":
        return cls("repetition", d)

    @classmethod
    def steane(cls) -> "CodeSpec":
        return cls("steane", 3)

    @classmethod
    def parse(cls, text: str) -> "CodeSpec":
        if text == "steane":
            return cls.steane()
        if text.startswith("rep:"):
            return cls.repetition(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown code spec {text!r} (expected rep:<d> or steane)")

    @property
    def block_size(self) -> int:
        return 7 if self.kind == "steane" else self.distance

    @property
    def is_repetition(self) -> bool:
        return self.kind == "repetition"

    def label(self) -> str:
        return "steane" if self.kind == "steane" else f"rep:{self.distance}"


@dataclass(frozen=True)
class EncodedCircuit:
    """Compiled physical circuit plus the bookkeeping mitigation needs.

    layout maps each logical qubit to its (final, post-gadget) physical
    block; clbit_blocks maps each logical classical bit to its replica
    bits. ancilla_map records gadget blocks and their readout bits.
    """

    physical: Circuit
    layout: dict[int, tuple[int, ...]]
    clbit_blocks: dict[int, tuple[int, ...]]
    code: CodeSpec
    ancilla_map: dict = field(default_factory=dict)
    noiseless_gates: frozenset[int] = frozenset()
    injections: tuple[Injection, ...] = ()

    def sidecar_json(self) -> str:
        doc = {
            "code": self.code.label(),
            "logical_qubits": {str(j): list(block) for j, block in self.layout.items()},
            "logical_clbits": {str(c): list(block) for c, block in self.clbit_blocks.items()},
            "ancillas": self.ancilla_map,
            "noiseless_gates": sorted(self.noiseless_gates),
            "injections": [
                {"position": inj.position, "qubits": list(inj.qubits),
                 "paulis": list(inj.paulis), "rate": inj.rate,
                 "rate_exponent": inj.rate_exponent}
                for inj in self.injections
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def stabilizer_generators(code: CodeSpec) -> list[PauliString]:
    """Block-local stabilizer generators."""
    n = code.block_size
    if code.is_repetition:
        return [
            PauliString.from_support("Z", (i, i + 1), n)
            for i in range(code.distance - 1)
        ]
    gens = [PauliString.from_support("X", row, 7) for row in _STEANE_ROWS]
    gens += [PauliString.from_support("Z", row, 7) for row in _STEANE_ROWS]
    return gens


def is_stabilizer_element(candidate: PauliString, generators: list[PauliString]) -> bool:
    """Group membership by GF(2) elimination over symplectic vectors,
    then an exact phase check on the reconstructed product."""
    if not generators:
        return candidate.weight == 0 and candidate.phase == 1
    n = len(candidate)
    rows = []
    for g in generators:
        x, z, _ = g.to_xz_bits()
        rows.append(x + z)
    cx, cz, _ = candidate.to_xz_bits()
    target = cx + cz

    # gaussian elimination, tracking which generators enter the combination
    m = len(rows)
    width = 2 * n
    combos = [1 << i for i in range(m)]
    vecs = [int("".join(map(str, r)), 2) if any(r) else 0 for r in rows]
    tvec = int("".join(map(str, target)), 2) if any(target) else 0
    pivot_rows: list[tuple[int, int, int]] = []  # (bit, vec, combo)
    for vec, combo in zip(vecs, combos):
        for bit, pvec, pcombo in pivot_rows:
            if vec >> bit & 1:
                vec ^= pvec
                combo ^= pcombo
        if vec:
            pivot_rows.append((vec.bit_length() - 1, vec, combo))
    combo = 0
    for bit, pvec, pcombo in pivot_rows:
        if tvec >> bit & 1:
            tvec ^= pvec
            combo ^= pcombo
    if tvec:
        return False
    product = PauliString(1.0, "I" * n)
    for i in range(m):
        if combo >> i & 1:
            product = product * generators[i]
    return product == candidate


def logical_operator(code: CodeSpec, kind: str) -> PauliString:
    """Block-local X_L or Z_L representative."""
    n = code.block_size
    if code.is_repetition:
        if kind == "X":
            return PauliString.from_support("X", range(n), n)
        return PauliString.from_support("Z", (0,), n)
    if kind == "X":
        return PauliString.from_support("X", _STEANE_X_LOGICAL, 7)
    return PauliString.from_support("Z", range(7), 7)


def layout_blocks(code: CodeSpec, num_logical: int, scheme: str = "blocked") -> list[tuple[int, ...]]:
    """Physical qubit block per logical qubit.

    blocked: logical j, replica k -> j*d + k (contiguous blocks).
    interleaved: logical j, replica k -> k*L + j (replica-k qubits adjacent,
    the hardware-motivated ordering).
    """
    d = code.block_size
    if scheme == "blocked":
        return [tuple(j * d + k for k in range(d)) for j in range(num_logical)]
    if scheme == "interleaved":
        return [tuple(k * num_logical + j for k in range(d)) for j in range(num_logical)]
    raise ValueError(f"unknown layout scheme {scheme!r}")


def _steane_encoder_gates(block: tuple[int, ...]) -> list[Gate]:
    """Input-carrying encoder: alpha|0> + beta|1> on block[0] -> logical."""
    gates = [Gate(GateKind.CX, (block[0], block[t])) for t in _STEANE_X_LOGICAL[1:]]
    for row, pivot in zip(_STEANE_ROWS, _STEANE_PIVOTS):
        gates.append(Gate(GateKind.H, (block[pivot],)))
        gates.extend(Gate(GateKind.CX, (block[pivot], block[t])) for t in row if t != pivot)
    return gates


def state_prep(code: CodeSpec, basis: str, layout: str = "blocked") -> Circuit:
    """Circuit preparing the logical computational-basis state ``basis``.

    Repetition: transversal X on the blocks of the 1 bits (the all-zeros
    physical state is already the logical ground state). Seven-qubit code:
    X on the input qubit where needed, then the CSS encoder per block.
    """
    if set(basis) - {"0", "1"}:
        raise ValueError(f"basis must be a bitstring, got {basis!r}")
    blocks = layout_blocks(code, len(basis), layout)
    num_qubits = code.block_size * len(basis)
    gates: list[Gate] = []
    for bit, block in zip(basis, blocks):
        if code.is_repetition:
            if bit == "1":
                gates.extend(Gate(GateKind.X, (q,)) for q in block)
        else:
            if bit == "1":
                gates.append(Gate(GateKind.X, (block[0],)))
            gates.extend(_steane_encoder_gates(block))
    return Circuit(num_qubits, 0, tuple(gates))


def decoding_circuit(code: CodeSpec) -> Circuit:
    """Block-local decoder.

    Repetition: the CX cascade mapping |x...x> -> |x,0,...,0>; it conjugates
    each chain generator Z_i Z_{i+1} to the single-qubit Z_{i+1}, so the
    post-selection ancillas are exactly qubits 1..d-1. Seven-qubit code:
    inverse of the encoder (logical value lands on qubit 0).
    """
    n = code.block_size
    if code.is_repetition:
        gates = [Gate(GateKind.CX, (k, k + 1)) for k in range(code.distance - 2, -1, -1)]
        return Circuit(max(n, 1), 0, tuple(gates))
    enc = _steane_encoder_gates(tuple(range(7)))
    return Circuit(7, 0, tuple(reversed(enc)))  # H and CX are self-inverse


def ss_extraction_circuit(code: CodeSpec, gen: PauliString) -> Circuit:
    """Shor-style extraction of one weight-2 Z generator via a cat ancilla.

    Local wiring: qubits 0..d-1 are the data block, d and d+1 the cat pair;
    clbits 0 and 1 hold the cat readout, whose parity is the syndrome bit.
    Every gate is an ordinary circuit gate and receives noise like any
    other.
    """
    if not code.is_repetition:
        raise CircuitError("cat-state extraction is implemented for the repetition code")
    if gen.weight != 2 or set(gen.letters) - {"I", "Z"}:
        raise CircuitError(f"expected a weight-2 Z-type generator, got {gen.letters}")
    i, j = gen.support
    d = code.block_size
    a0, a1 = d, d + 1
    gates = (
        Gate(GateKind.H, (a0,)),
        Gate(GateKind.CX, (a0, a1)),
        Gate(GateKind.CX, (i, a0)),
        Gate(GateKind.CX, (j, a1)),
        Gate(GateKind.MEASURE, (a0,), (0,)),
        Gate(GateKind.MEASURE, (a1,), (1,)),
    )
    return Circuit(d + 2, 2, gates)


def census_c(logical: Circuit) -> int:
    """Failure-budget count c = t + 3h of a logical circuit."""
    return gate_census(logical).c


class _Compiler:
    def __init__(self, code: CodeSpec, logical: Circuit, hmode: HadamardMode, layout: str):
        self.code = code
        self.hmode = hmode
        self.d = code.block_size
        self.logical = logical
        self.blocks = [list(b) for b in layout_blocks(code, logical.num_qubits, layout)]
        self.clblocks = [
            tuple(c * self.d + k for k in range(self.d)) for c in range(logical.num_clbits)]
        self.next_qubit = code.block_size * logical.num_qubits
        self.next_clbit = self.d * logical.num_clbits
        self.gates: list[Gate] = []
        self.quiet: set[int] = set()
        self.injections: list[Injection] = []
        self.gadgets: list[dict] = []

    def emit(self, kind: GateKind, qubits, clbits=()) -> None:
        self.gates.append(Gate(kind, tuple(qubits), tuple(clbits)))

    def run(self) -> EncodedCircuit:
        for gate in self.logical.gates:
            self.compile_gate(gate)
        physical = Circuit(self.next_qubit, self.next_clbit, tuple(self.gates))
        return EncodedCircuit(
            physical=physical,
            layout={j: tuple(b) for j, b in enumerate(self.blocks)},
            clbit_blocks={c: b for c, b in enumerate(self.clblocks)},
            code=self.code,
            ancilla_map={"gadgets": self.gadgets} if self.gadgets else {},
            noiseless_gates=frozenset(self.quiet),
            injections=tuple(self.injections),
        )

    def compile_gate(self, gate: Gate) -> None:
        kind = gate.kind
        rep = self.code.is_repetition
        if kind is GateKind.X:
            for q in self.blocks[gate.qubits[0]]:
                self.emit(GateKind.X, (q,))
        elif kind is GateKind.Z:
            if rep:
                self.emit(GateKind.Z, (self.blocks[gate.qubits[0]][0],))
            else:
                for q in self.blocks[gate.qubits[0]]:
                    self.emit(GateKind.Z, (q,))
        elif kind is GateKind.Y:
            block = self.blocks[gate.qubits[0]]
            if rep:
                self.emit(GateKind.Y, (block[0],))
                for q in block[1:]:
                    self.emit(GateKind.X, (q,))
            else:
                for q in block:
                    self.emit(GateKind.Y, (q,))
        elif kind in (GateKind.S, GateKind.SDAG):
            block = self.blocks[gate.qubits[0]]
            if rep:
                self.emit(kind, (block[0],))
            else:
                # transversal S on this code is the adjoint logical phase
                swapped = GateKind.SDAG if kind is GateKind.S else GateKind.S
                for q in block:
                    self.emit(swapped, (q,))
        elif kind is GateKind.CX:
            a, b = (self.blocks[q] for q in gate.qubits)
            for qa, qb in zip(a, b):
                self.emit(GateKind.CX, (qa, qb))
        elif kind is GateKind.CZ:
            a, b = (self.blocks[q] for q in gate.qubits)
            if rep:
                self.emit(GateKind.CZ, (a[0], b[0]))
            else:
                for qa, qb in zip(a, b):
                    self.emit(GateKind.CZ, (qa, qb))
        elif kind is GateKind.H:
            self.compile_h(gate.qubits[0])
        elif kind is GateKind.MEASURE:
            block = self.blocks[gate.qubits[0]]
            cl = self.clblocks[gate.clbits[0]]
            for q, c in zip(block, cl):
                self.emit(GateKind.MEASURE, (q,), (c,))
        elif kind is GateKind.RESET:
            block = self.blocks[gate.qubits[0]]
            for q in block:
                self.emit(GateKind.RESET, (q,))
            if not rep:
                for g in _steane_encoder_gates(tuple(block)):
                    self.gates.append(g)
        elif kind is GateKind.CONDX:
            block = self.blocks[gate.qubits[0]]
            cl = self.clblocks[gate.clbits[0]]
            for q, c in zip(block, cl):
                self.emit(GateKind.CONDX, (q,), (c,))
        elif kind is GateKind.CONDZ:
            block = self.blocks[gate.qubits[0]]
            cl = self.clblocks[gate.clbits[0]]
            if rep:
                self.emit(GateKind.CONDZ, (block[0],), (cl[0],))
            else:
                for q, c in zip(block, cl):
                    self.emit(GateKind.CONDZ, (q,), (c,))
        else:  # pragma: no cover
            raise CircuitError(f"cannot compile gate kind {kind}")

    def compile_h(self, logical_q: int) -> None:
        block = self.blocks[logical_q]
        if not self.code.is_repetition:
            for q in block:
                self.emit(GateKind.H, (q,))
            return
        if self.hmode is HadamardMode.NONFT:
            d = self.d
            for k in range(d - 2, -1, -1):
                self.emit(GateKind.CX, (block[k], block[k + 1]))
            self.emit(GateKind.H, (block[0],))
            for k in range(d - 1):
                self.emit(GateKind.CX, (block[k], block[k + 1]))
            return
        self.compile_h_gadget(logical_q)

    def compile_h_gadget(self, logical_q: int) -> None:
        """Teleport through a |+>_L cat block; the block becomes the output."""
        d = self.d
        data = self.blocks[logical_q]
        anc = list(range(self.next_qubit, self.next_qubit + d))
        self.next_qubit += d
        mbits = list(range(self.next_clbit, self.next_clbit + d))
        self.next_clbit += d

        prep_start = len(self.gates)
        self.emit(GateKind.H, (anc[0],))
        for q in anc[1:]:
            self.emit(GateKind.CX, (anc[0], q))
        if self.hmode is HadamardMode.IDEALIZED_ANCILLA:
            self.quiet.update(range(prep_start, len(self.gates)))
            x_l = "X" * d
            z_l = "Z" + "I" * (d - 1)
            y_l = "Y" + "X" * (d - 1)
            self.injections.append(Injection(
                position=len(self.gates), qubits=tuple(anc),
                paulis=(x_l, y_l, z_l), rate_exponent=d))

        self.emit(GateKind.CZ, (data[0], anc[0]))
        for q in data:
            self.emit(GateKind.H, (q,))
        for q, c in zip(data, mbits):
            self.emit(GateKind.MEASURE, (q,), (c,))
        # X_L correction conditioned on each readout bit: the product over
        # bits applies X_L^(parity), the logical X-measurement outcome
        for c in mbits:
            for q in anc:
                self.emit(GateKind.CONDX, (q,), (c,))

        self.gadgets.append({
            "logical": logical_q,
            "mode": self.hmode.value,
            "data_block": list(data),
            "ancilla_block": list(anc),
            "meas_clbits": list(mbits),
        })
        self.blocks[logical_q] = anc


def compile_logical(code: CodeSpec, logical: Circuit, hmode: HadamardMode,
                    layout: str = "blocked") -> EncodedCircuit:
    """Compile a logical circuit onto physical qubits.

    The compiled gates act on an already-encoded input state; pair with
    state_prep for the initial logical basis state (a no-op for the
    repetition ground state). With a noiseless model, prep + compiled
    circuit reproduces the unencoded circuit's logical output distribution
    exactly; that equivalence is asserted by tests for every mode, not
    assumed.
    """
    if code.kind == "steane" and hmode is HadamardMode.NONFT:
        raise CircuitError("the 7-qubit code has a transversal H; NonFT mode is not defined for it")
    if code.is_repetition and code.distance == 1:
        return EncodedCircuit(
            physical=logical,
            layout={j: (j,) for j in range(logical.num_qubits)},
            clbit_blocks={c: (c,) for c in range(logical.num_clbits)},
            code=code,
        )
    return _Compiler(code, logical, hmode, layout).run()
