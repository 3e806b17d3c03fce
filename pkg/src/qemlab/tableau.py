"""Scalable Monte Carlo backend: stabilizer tableau + sampled Pauli frames.

The circuit is simulated once on an Aaronson-Gottesman tableau (the
reference pass). Each trajectory then only tracks a Pauli frame relative to
the reference state: depolarizing faults toggle frame bits, Cliffords
propagate them, classically conditioned corrections XOR the difference
between the shot's and the reference's classical bits. Where the reference
measurement is non-deterministic, the anticommuting stabilizer recorded at
collapse time maps the reference branch onto the other branch, so a fair
coin per shot decides which branch the trajectory takes. This unraveling is
exact in distribution for Pauli noise.

Frames are propagated for all shots at once as bit matrices, and every
random draw is a counter-based hash of (seed, shot index, draw site), so a
histogram is bit-identical for a fixed (circuit, model, shots, seed) no
matter how shots are chunked across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, GateKind
from .codes import PauliString
from .noise import Injection, NoiseModel

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# draw-site offsets within a gate's stride
_SLOT_STRIDE = 8
_SLOT_FAULT_U = 0
_SLOT_FAULT_PICK = 1
_SLOT_FAULT_U2 = 2
_SLOT_FAULT_PICK2 = 3
_SLOT_COIN = 4
_SLOT_MEAS_FLIP = 5


def _mix64(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64, copy=True)
    v ^= v >> np.uint64(30)
    v *= _MIX1
    v ^= v >> np.uint64(27)
    v *= _MIX2
    v ^= v >> np.uint64(31)
    return v


class CounterRng:
    """Counter-based random words: word(shot, site) is order-independent."""

    def __init__(self, seed: int):
        with np.errstate(over="ignore"):
            base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + np.uint64(1)
            self._seed_hash = _mix64(np.array([base]))[0]

    def words(self, site: int, shots: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            x = (np.uint64(site) << np.uint64(44)) + shots.astype(np.uint64)
            return _mix64(x * _GOLDEN + self._seed_hash)

    def uniform(self, site: int, shots: np.ndarray) -> np.ndarray:
        return (self.words(site, shots) >> np.uint64(11)) * (2.0 ** -53)

    def bits(self, site: int, shots: np.ndarray) -> np.ndarray:
        return (self.words(site, shots) & np.uint64(1)).astype(np.uint8)


@dataclass
class OutcomeHistogram:
    """Measured bitstring counts over a fixed number of shots."""

    counts: dict[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("histogram counts do not sum to shots")

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def merged(self, other: "OutcomeHistogram") -> "OutcomeHistogram":
        counts = dict(self.counts)
        for k, v in other.counts.items():
            counts[k] = counts.get(k, 0) + v
        return OutcomeHistogram(counts, self.shots + other.shots)


class Tableau:
    """Aaronson-Gottesman stabilizer tableau over n qubits.

    Rows 0..n-1 are destabilizers, rows n..2n-1 stabilizers; r holds sign
    bits (1 means -1). The symplectic basis invariant is checked by tests,
    not at runtime.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("tableau needs at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    def apply(self, kind: GateKind, qubits: tuple[int, ...]) -> None:
        x, z, r = self.x, self.z, self.r
        if kind is GateKind.H:
            q = qubits[0]
            r ^= x[:, q] & z[:, q]
            x[:, q], z[:, q] = z[:, q].copy(), x[:, q].copy()
        elif kind is GateKind.S:
            q = qubits[0]
            r ^= x[:, q] & z[:, q]
            z[:, q] ^= x[:, q]
        elif kind is GateKind.SDAG:
            q = qubits[0]
            r ^= x[:, q] & (z[:, q] ^ 1)
            z[:, q] ^= x[:, q]
        elif kind is GateKind.X:
            r ^= z[:, qubits[0]]
        elif kind is GateKind.Y:
            r ^= x[:, qubits[0]] ^ z[:, qubits[0]]
        elif kind is GateKind.Z:
            r ^= x[:, qubits[0]]
        elif kind is GateKind.CX:
            c, t = qubits
            r ^= x[:, c] & z[:, t] & (x[:, t] ^ z[:, c] ^ 1)
            x[:, t] ^= x[:, c]
            z[:, c] ^= z[:, t]
        elif kind is GateKind.CZ:
            c, t = qubits
            self.apply(GateKind.H, (t,))
            self.apply(GateKind.CX, (c, t))
            self.apply(GateKind.H, (t,))
        else:
            raise ValueError(f"not a unitary Clifford gate: {kind}")

    def _rowsum_phase(self, hx, hz, hr, ix, iz, ir) -> int:
        """Phase exponent (mod 4) of multiplying row i into row h."""
        x1, z1, x2, z2 = ix.astype(np.int8), iz.astype(np.int8), hx.astype(np.int8), hz.astype(np.int8)
        g = np.zeros(self.n, dtype=np.int8)
        y = (x1 == 1) & (z1 == 1)
        g[y] = (z2 - x2)[y]
        xo = (x1 == 1) & (z1 == 0)
        g[xo] = (z2 * (2 * x2 - 1))[xo]
        zo = (x1 == 0) & (z1 == 1)
        g[zo] = (x2 * (1 - 2 * z2))[zo]
        return (2 * int(hr) + 2 * int(ir) + int(g.sum())) % 4

    def _rowsum(self, h: int, i: int) -> None:
        phase = self._rowsum_phase(self.x[h], self.z[h], self.r[h],
                                   self.x[i], self.z[i], self.r[i])
        self.r[h] = 0 if phase == 0 else 1
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, q: int, *, rng: np.random.Generator | None = None,
                force: int | None = None) -> tuple[int, bool, tuple[np.ndarray, np.ndarray] | None]:
        """Measure Z on qubit q; returns (outcome, was_random, branch_swap).

        When the outcome is non-deterministic the collapse value comes from
        ``force`` if given, else a fair coin from ``rng`` (0 without one),
        and branch_swap holds the (x, z) mask of the anticommuting
        stabilizer that maps this branch onto the other one.
        """
        n = self.n
        anticommuting = np.nonzero(self.x[n:, q])[0]
        if anticommuting.size:
            p = n + int(anticommuting[0])
            mask = (self.x[p].copy(), self.z[p].copy())
            if force is not None:
                outcome = int(force)
            elif rng is not None:
                outcome = int(rng.integers(2))
            else:
                outcome = 0
            for i in range(2 * n):
                if i != p and self.x[i, q]:
                    self._rowsum(i, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            self.r[p] = outcome
            return outcome, True, mask
        # deterministic: accumulate the stabilizer product fixing Z_q
        sx = np.zeros(self.n, dtype=np.uint8)
        sz = np.zeros(self.n, dtype=np.uint8)
        sr = 0
        for i in range(n):
            if self.x[i, q]:
                phase = self._rowsum_phase(sx, sz, sr, self.x[n + i], self.z[n + i], self.r[n + i])
                sr = 0 if phase == 0 else 1
                sx ^= self.x[n + i]
                sz ^= self.z[n + i]
        return int(sr), False, None

    def stabilizer_signs(self) -> np.ndarray:
        return self.r[self.n:].copy()


def conjugate_pauli_through(circuit: Circuit, pauli: PauliString) -> PauliString:
    """Heisenberg propagation U P U† through a unitary Clifford circuit."""
    n = circuit.num_qubits
    if len(pauli.letters) != n:
        raise ValueError("pauli length does not match circuit register")
    x, z, exp = _pauli_to_bits(pauli)

    def step(kind: GateKind, qubits: tuple[int, ...]) -> None:
        nonlocal exp
        if kind is GateKind.H:
            q = qubits[0]
            exp = (exp + 2 * (x[q] & z[q])) % 4
            x[q], z[q] = z[q], x[q]
        elif kind is GateKind.S:
            q = qubits[0]
            exp = (exp + 2 * (x[q] & z[q])) % 4
            z[q] ^= x[q]
        elif kind is GateKind.SDAG:
            q = qubits[0]
            exp = (exp + 2 * (x[q] & (z[q] ^ 1))) % 4
            z[q] ^= x[q]
        elif kind is GateKind.X:
            exp = (exp + 2 * z[qubits[0]]) % 4
        elif kind is GateKind.Y:
            exp = (exp + 2 * (x[qubits[0]] ^ z[qubits[0]])) % 4
        elif kind is GateKind.Z:
            exp = (exp + 2 * x[qubits[0]]) % 4
        elif kind is GateKind.CX:
            c, t = qubits
            exp = (exp + 2 * (x[c] & z[t] & (x[t] ^ z[c] ^ 1))) % 4
            x[t] ^= x[c]
            z[c] ^= z[t]
        elif kind is GateKind.CZ:
            c, t = qubits
            step(GateKind.H, (t,))
            step(GateKind.CX, (c, t))
            step(GateKind.H, (t,))
        else:
            raise ValueError(f"cannot conjugate through non-unitary gate {kind}")

    for g in circuit.gates:
        step(g.kind, g.qubits)
    return _bits_to_pauli(x, z, exp)


def _pauli_to_bits(pauli: PauliString) -> tuple[list[int], list[int], int]:
    x, z, exp = pauli.to_xz_bits()
    return list(x), list(z), exp


def _bits_to_pauli(x: list[int], z: list[int], exp: int) -> PauliString:
    return PauliString.from_xz_bits(x, z, exp)


# ---------------------------------------------------------------------------
# reference pass + vectorized frame propagation


@dataclass
class _RefOp:
    kind: GateKind
    qubits: tuple[int, ...]
    clbit: int = -1
    ref_bit: int = 0
    index: int = 0
    noisy: bool = True
    branch_swap: tuple[np.ndarray, np.ndarray] | None = None
    injections: tuple[tuple[Injection, int], ...] = ()  # (injection, site)


@dataclass
class _CompiledCircuit:
    n: int
    ncl: int
    ops: list[_RefOp] = field(default_factory=list)


def _reference_pass(circuit: Circuit, noiseless_gates: frozenset[int],
                    injections: dict[int, list[tuple[Injection, int]]]) -> _CompiledCircuit:
    tab = Tableau(circuit.num_qubits)
    ref_bits = [0] * circuit.num_clbits
    compiled = _CompiledCircuit(circuit.num_qubits, circuit.num_clbits)
    for idx, gate in enumerate(circuit.gates):
        op = _RefOp(gate.kind, gate.qubits, index=idx, noisy=idx not in noiseless_gates,
                    injections=tuple(injections.get(idx, ())))
        if gate.kind is GateKind.MEASURE:
            q, c = gate.qubits[0], gate.clbits[0]
            outcome, _, swap = tab.measure(q, force=0)
            op.clbit = c
            op.ref_bit = outcome
            op.branch_swap = swap
            ref_bits[c] = outcome
        elif gate.kind is GateKind.RESET:
            q = gate.qubits[0]
            outcome, _, swap = tab.measure(q, force=0)
            if outcome:
                tab.apply(GateKind.X, (q,))
            op.branch_swap = swap
        elif gate.kind in (GateKind.CONDX, GateKind.CONDZ):
            c = gate.clbits[0]
            op.clbit = c
            op.ref_bit = ref_bits[c]
            if op.ref_bit:
                tab.apply(GateKind.X if gate.kind is GateKind.CONDX else GateKind.Z, gate.qubits)
        else:
            tab.apply(gate.kind, gate.qubits)
        compiled.ops.append(op)
    return compiled


_LETTER_X = {"I": 0, "X": 1, "Y": 1, "Z": 0}
_LETTER_Z = {"I": 0, "X": 0, "Y": 1, "Z": 1}


def _frame_pass(compiled: _CompiledCircuit, model: NoiseModel, rng: CounterRng,
                shot_indices: np.ndarray, tail_injections: tuple[tuple[Injection, int], ...]) -> np.ndarray:
    """Propagate frames for a batch of shots; returns bits (ncl, batch)."""
    n, ncl = compiled.n, compiled.ncl
    batch = shot_indices.size
    fx = np.zeros((n, batch), dtype=np.uint8)
    fz = np.zeros((n, batch), dtype=np.uint8)
    bits = np.zeros((max(ncl, 1), batch), dtype=np.uint8)

    for op in compiled.ops:
        for inj, site in op.injections:
            _apply_injection(inj, site, model, rng, shot_indices, fx, fz)
        kind = op.kind
        if kind is GateKind.H:
            q = op.qubits[0]
            fx[q], fz[q] = fz[q].copy(), fx[q].copy()
        elif kind in (GateKind.S, GateKind.SDAG):
            q = op.qubits[0]
            fz[q] ^= fx[q]
        elif kind in (GateKind.X, GateKind.Y, GateKind.Z):
            pass  # Pauli gates commute with Pauli frames up to phase
        elif kind is GateKind.CX:
            c, t = op.qubits
            fx[t] ^= fx[c]
            fz[c] ^= fz[t]
        elif kind is GateKind.CZ:
            c, t = op.qubits
            fz[t] ^= fx[c]
            fz[c] ^= fx[t]
        elif kind is GateKind.CONDX:
            diff = bits[op.clbit] ^ op.ref_bit
            fx[op.qubits[0]] ^= diff
        elif kind is GateKind.CONDZ:
            diff = bits[op.clbit] ^ op.ref_bit
            fz[op.qubits[0]] ^= diff
        elif kind is GateKind.MEASURE:
            q = op.qubits[0]
            if op.branch_swap is not None:
                coin = rng.bits(op.index * _SLOT_STRIDE + _SLOT_COIN, shot_indices)
                fx ^= op.branch_swap[0][:, None] & coin[None, :]
                fz ^= op.branch_swap[1][:, None] & coin[None, :]
            outcome = op.ref_bit ^ fx[q]
            if model.p_meas > 0.0:
                flip = rng.uniform(op.index * _SLOT_STRIDE + _SLOT_MEAS_FLIP, shot_indices) < model.p_meas
                outcome = outcome ^ flip.astype(np.uint8)
            bits[op.clbit] = outcome
            continue  # no gate noise on measurement
        elif kind is GateKind.RESET:
            q = op.qubits[0]
            if op.branch_swap is not None:
                coin = rng.bits(op.index * _SLOT_STRIDE + _SLOT_COIN, shot_indices)
                fx ^= op.branch_swap[0][:, None] & coin[None, :]
                fz ^= op.branch_swap[1][:, None] & coin[None, :]
            fx[q] = 0
            fz[q] = 0
        if op.noisy:
            _apply_gate_noise(op, model, rng, shot_indices, fx, fz)

    for inj, site in tail_injections:
        _apply_injection(inj, site, model, rng, shot_indices, fx, fz)
    return bits[:ncl]


def _apply_gate_noise(op: _RefOp, model: NoiseModel, rng: CounterRng,
                      shots: np.ndarray, fx: np.ndarray, fz: np.ndarray) -> None:
    base = op.index * _SLOT_STRIDE
    if len(op.qubits) == 1:
        if model.p1 == 0.0:
            return
        _inject_1q(op.qubits[0], model.p1, base, rng, shots, fx, fz)
        return
    if model.two_qubit_mode == "independent":
        if model.p2 == 0.0:
            return
        _inject_1q(op.qubits[0], model.p2, base, rng, shots, fx, fz)
        _inject_1q(op.qubits[1], model.p2, base + _SLOT_FAULT_U2, rng, shots, fx, fz)
        return
    if model.p2 == 0.0:
        return
    qa, qb = op.qubits
    hit = rng.uniform(base + _SLOT_FAULT_U, shots) < model.p2
    pick = (rng.words(base + _SLOT_FAULT_PICK, shots) % np.uint64(15) + np.uint64(1)).astype(np.uint8)
    pa, pb = pick >> 2, pick & 3  # 0=I 1=X 2=Y 3=Z
    hit = hit.astype(np.uint8)
    fx[qa] ^= hit & ((pa == 1) | (pa == 2))
    fz[qa] ^= hit & ((pa == 2) | (pa == 3))
    fx[qb] ^= hit & ((pb == 1) | (pb == 2))
    fz[qb] ^= hit & ((pb == 2) | (pb == 3))


def _inject_1q(q: int, p: float, site: int, rng: CounterRng, shots: np.ndarray,
               fx: np.ndarray, fz: np.ndarray) -> None:
    hit = (rng.uniform(site + _SLOT_FAULT_U, shots) < p).astype(np.uint8)
    pick = (rng.words(site + _SLOT_FAULT_PICK, shots) % np.uint64(3)).astype(np.uint8)
    fx[q] ^= hit & (pick != 2)  # X or Y
    fz[q] ^= hit & (pick != 0)  # Y or Z


def _apply_injection(inj: Injection, site: int, model: NoiseModel, rng: CounterRng,
                     shots: np.ndarray, fx: np.ndarray, fz: np.ndarray) -> None:
    rate = inj.resolved_rate(model)
    if rate <= 0.0:
        return
    hit = (rng.uniform(site + _SLOT_FAULT_U, shots) < rate).astype(np.uint8)
    pick = (rng.words(site + _SLOT_FAULT_PICK, shots) % np.uint64(len(inj.paulis))).astype(np.uint8)
    for k, letters in enumerate(inj.paulis):
        mask = hit & (pick == k)
        for letter, q in zip(letters, inj.qubits):
            fx[q] ^= mask & _LETTER_X[letter]
            fz[q] ^= mask & _LETTER_Z[letter]


def run_trajectories(
    circuit: Circuit,
    model: NoiseModel,
    shots: int,
    seed: int,
    *,
    workers: int = 1,
    noiseless_gates: frozenset[int] | set[int] = frozenset(),
    injections: tuple[Injection, ...] | list[Injection] = (),
    chunk: int = 1 << 16,
) -> OutcomeHistogram:
    """Sample measurement records for ``shots`` trajectories.

    Deterministic for fixed (circuit, model, shots, seed); shot k draws from
    a stream derived from (seed, k), so the histogram does not depend on
    chunking or worker count.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    inj_by_pos: dict[int, list[tuple[Injection, int]]] = {}
    tail: list[tuple[Injection, int]] = []
    for ordinal, inj in enumerate(injections):
        if not 0 <= inj.position <= len(circuit.gates):
            raise ValueError(f"injection position {inj.position} out of range")
        site = (len(circuit.gates) + ordinal) * _SLOT_STRIDE
        if inj.position == len(circuit.gates):
            tail.append((inj, site))
        else:
            inj_by_pos.setdefault(inj.position, []).append((inj, site))

    compiled = _reference_pass(circuit, frozenset(noiseless_gates), inj_by_pos)
    rng = CounterRng(seed)
    ranges = [(start, min(chunk, shots - start)) for start in range(0, shots, chunk)]

    def run_batch(rng_range: tuple[int, int]) -> dict[str, int]:
        start, count = rng_range
        idx = np.arange(start, start + count, dtype=np.uint64)
        bits = _frame_pass(compiled, model, rng, idx, tuple(tail))
        return _tally(bits)

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run_batch, ranges))
    else:
        partials = [run_batch(r) for r in ranges]

    counts: dict[str, int] = {}
    for part in partials:
        for key, v in part.items():
            counts[key] = counts.get(key, 0) + v
    return OutcomeHistogram(counts, shots)


def _tally(bits: np.ndarray) -> dict[str, int]:
    ncl, batch = bits.shape
    if ncl == 0:
        return {"": batch}
    rows = np.packbits(bits.T, axis=1)
    uniq, inverse_counts = np.unique(rows, axis=0, return_counts=True)
    out: dict[str, int] = {}
    for row, count in zip(uniq, inverse_counts):
        key = "".join(str(b) for b in np.unpackbits(row)[:ncl])
        out[key] = int(count)
    return out
