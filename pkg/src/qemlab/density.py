"""Exact backend: density-matrix evolution with exact outcome probabilities.

Mid-circuit measurements are handled by probability-weighted branching, not
sampling, so classically conditioned corrections (the teleportation gadget)
come out exact. Branch count is bounded by 2**(number of measurements);
branches below ``branch_tol`` are dropped.

Noiseless runs are dispatched to a pure statevector with the same branching
semantics, which raises the practical qubit cap from 12 to 16 while staying
exact to machine precision.
"""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, Gate, GateKind
from .noise import Injection, NoiseModel, depolarizing_channel

_SQ = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.diag([1.0, -1.0]).astype(complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0),
    GateKind.S: np.diag([1.0, 1j]),
    GateKind.SDAG: np.diag([1.0, -1j]),
}
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

_PAULI_MAT = {
    "I": np.eye(2, dtype=complex),
    "X": _SQ[GateKind.X],
    "Y": _SQ[GateKind.Y],
    "Z": _SQ[GateKind.Z],
}


class SimulationError(RuntimeError):
    pass


class PureState:
    """Statevector as a (2,)*n tensor; qubit 0 is the leftmost axis."""

    def __init__(self, n: int, tensor: np.ndarray | None = None):
        self.n = n
        if tensor is None:
            tensor = np.zeros((2,) * n, dtype=complex)
            tensor[(0,) * n] = 1.0
        self.tensor = tensor

    def copy(self) -> "PureState":
        return PureState(self.n, self.tensor)  # tensors are treated as immutable

    def apply_unitary(self, mat: np.ndarray, qubits: tuple[int, ...]) -> None:
        k = len(qubits)
        op = mat.reshape((2,) * (2 * k))
        moved = np.tensordot(op, self.tensor, axes=(tuple(range(k, 2 * k)), qubits))
        self.tensor = np.moveaxis(moved, tuple(range(k)), qubits)

    def measure_probs(self, q: int) -> tuple[float, float]:
        marg = np.abs(self.tensor) ** 2
        p1 = float(np.sum(np.take(marg, 1, axis=q)))
        return max(0.0, 1.0 - p1), p1

    def project(self, q: int, outcome: int, prob: float) -> "PureState":
        out = np.zeros_like(self.tensor)
        idx = [slice(None)] * self.n
        idx[q] = outcome
        out[tuple(idx)] = np.take(self.tensor, outcome, axis=q) / np.sqrt(prob)
        return PureState(self.n, out)

    def statevector(self) -> np.ndarray:
        return self.tensor.reshape(-1)


class DensityState:
    """Density operator as a (2,)*2n tensor: row axes 0..n-1, column axes n..2n-1."""

    def __init__(self, n: int, tensor: np.ndarray | None = None):
        self.n = n
        if tensor is None:
            tensor = np.zeros((2,) * (2 * n), dtype=complex)
            tensor[(0,) * (2 * n)] = 1.0
        self.tensor = tensor

    @classmethod
    def from_pure(cls, psi: np.ndarray) -> "DensityState":
        n = int(round(np.log2(psi.size)))
        rho = np.outer(psi, psi.conj())
        return cls(n, rho.reshape((2,) * (2 * n)))

    def copy(self) -> "DensityState":
        return DensityState(self.n, self.tensor)

    def matrix(self) -> np.ndarray:
        d = 2 ** self.n
        return self.tensor.reshape(d, d)

    def trace(self) -> float:
        return float(np.trace(self.matrix()).real)

    def purity(self) -> float:
        m = self.matrix()
        return float(np.trace(m @ m).real)

    def apply_unitary(self, mat: np.ndarray, qubits: tuple[int, ...]) -> None:
        k = len(qubits)
        op = mat.reshape((2,) * (2 * k))
        rows = tuple(qubits)
        cols = tuple(self.n + q for q in qubits)
        t = np.tensordot(op, self.tensor, axes=(tuple(range(k, 2 * k)), rows))
        t = np.moveaxis(t, tuple(range(k)), rows)
        t = np.tensordot(op.conj(), t, axes=(tuple(range(k, 2 * k)), cols))
        self.tensor = np.moveaxis(t, tuple(range(k)), cols)

    def apply_pauli_mixture(self, terms: list[tuple[float, str]], qubits: tuple[int, ...]) -> None:
        """rho -> sum_i w_i P_i rho P_i over (weight, letters) terms."""
        acc = None
        for weight, letters in terms:
            if weight == 0.0:
                continue
            if set(letters) <= {"I"}:
                contrib = weight * self.tensor
            else:
                branch = DensityState(self.n, self.tensor)
                for letter, q in zip(letters, qubits):
                    if letter != "I":
                        branch.apply_unitary(_PAULI_MAT[letter], (q,))
                contrib = weight * branch.tensor
            acc = contrib if acc is None else acc + contrib
        self.tensor = acc

    def measure_probs(self, q: int) -> tuple[float, float]:
        d = 2 ** (self.n - 1)
        sub = np.take(np.take(self.tensor, 1, axis=q), 1, axis=self.n + q - 1)
        p1 = float(np.trace(sub.reshape(d, d)).real)
        return max(0.0, 1.0 - p1), p1

    def project(self, q: int, outcome: int, prob: float) -> "DensityState":
        out = np.zeros_like(self.tensor)
        idx = [slice(None)] * (2 * self.n)
        idx[q] = outcome
        idx[self.n + q] = outcome
        sub = np.take(np.take(self.tensor, outcome, axis=q), outcome, axis=self.n + q - 1)
        out[tuple(idx)] = sub / prob
        return DensityState(self.n, out)


def _channel_for_gate(gate: Gate, model: NoiseModel) -> list[tuple[list[tuple[float, str]], tuple[int, ...]]]:
    """Noise applications (terms, qubits) following one gate."""
    if gate.kind is GateKind.MEASURE:
        return []
    if len(gate.qubits) == 1:
        if model.p1 == 0.0:
            return []
        return [(depolarizing_channel(1, model.p1), gate.qubits)]
    if model.two_qubit_mode == "independent":
        if model.p2 == 0.0:
            return []
        ch = depolarizing_channel(1, model.p2)
        return [(ch, (gate.qubits[0],)), (ch, (gate.qubits[1],))]
    if model.p2 == 0.0:
        return []
    return [(depolarizing_channel(2, model.p2), gate.qubits)]


def _injection_terms(inj: Injection, model: NoiseModel) -> list[tuple[float, str]]:
    rate = inj.resolved_rate(model)
    terms = [(1.0 - rate, "I" * len(inj.qubits))]
    terms.extend((rate / len(inj.paulis), p) for p in inj.paulis)
    return terms


def run_dm(
    circuit: Circuit,
    model: NoiseModel | None = None,
    *,
    noiseless_gates: frozenset[int] | set[int] = frozenset(),
    injections: tuple[Injection, ...] | list[Injection] = (),
    max_qubits: int = 12,
    max_statevector_qubits: int = 16,
    branch_tol: float = 1e-14,
) -> dict[str, float]:
    """Exact outcome distribution over the classical register.

    Keys are bitstrings of length num_clbits (clbit 0 leftmost; unmeasured
    bits read 0). Gates whose index is in ``noiseless_gates`` receive no
    depolarizing noise. ``injections`` add stochastic Pauli faults at fixed
    circuit positions (idealized-ancilla machinery).
    """
    model = model or NoiseModel.noiseless()
    live_injections = [
        inj for inj in injections if inj.resolved_rate(model) > 0.0]
    pure_ok = model.is_noiseless and not live_injections
    cap = max_statevector_qubits if pure_ok else max_qubits
    if circuit.num_qubits > cap:
        raise SimulationError(
            f"{circuit.num_qubits} qubits exceeds the exact-backend cap of {cap}")

    by_position: dict[int, list[Injection]] = {}
    for inj in live_injections:
        if not 0 <= inj.position <= len(circuit.gates):
            raise SimulationError(f"injection position {inj.position} out of range")
        by_position.setdefault(inj.position, []).append(inj)

    state = PureState(circuit.num_qubits) if pure_ok else DensityState(circuit.num_qubits)
    out: dict[str, float] = {}
    _walk(state, circuit, model, set(noiseless_gates), by_position, 0,
          [0] * circuit.num_clbits, 1.0, out, branch_tol)

    total = sum(out.values())
    if abs(total - 1.0) > 1e-10:
        raise SimulationError(f"distribution sums to {total}, not 1")
    return out


def final_statevector(circuit: Circuit) -> np.ndarray:
    """Noiseless statevector of a circuit without measurement or reset."""
    for g in circuit.gates:
        if g.kind in (GateKind.MEASURE, GateKind.RESET, GateKind.CONDX, GateKind.CONDZ):
            raise SimulationError("final_statevector requires a unitary circuit")
    state = PureState(circuit.num_qubits)
    for g in circuit.gates:
        _apply_unitary_gate(state, g, [0] * max(1, circuit.num_clbits))
    return state.statevector()


def pauli_expectation(psi: np.ndarray, letters: str, phase: complex = 1.0) -> complex:
    """<psi| phase * P |psi> for a Pauli letter string (qubit 0 leftmost)."""
    n = len(letters)
    state = PureState(n, psi.reshape((2,) * n))
    for q, letter in enumerate(letters):
        if letter != "I":
            state.apply_unitary(_PAULI_MAT[letter], (q,))
    return phase * complex(np.vdot(psi, state.statevector()))


def _apply_unitary_gate(state, gate: Gate, clbits: list[int]) -> None:
    kind = gate.kind
    if kind in _SQ:
        state.apply_unitary(_SQ[kind], gate.qubits)
    elif kind is GateKind.CX:
        state.apply_unitary(_CX, gate.qubits)
    elif kind is GateKind.CZ:
        state.apply_unitary(_CZ, gate.qubits)
    elif kind is GateKind.CONDX:
        if clbits[gate.clbits[0]]:
            state.apply_unitary(_SQ[GateKind.X], gate.qubits)
    elif kind is GateKind.CONDZ:
        if clbits[gate.clbits[0]]:
            state.apply_unitary(_SQ[GateKind.Z], gate.qubits)
    else:  # pragma: no cover
        raise SimulationError(f"not a unitary gate: {kind}")


def _walk(state, circuit: Circuit, model: NoiseModel, quiet: set[int],
          injections: dict[int, list[Injection]], start: int,
          clbits: list[int], weight: float, out: dict[str, float],
          tol: float) -> None:
    gates = circuit.gates
    i = start
    while i <= len(gates):
        for inj in injections.get(i, ()):
            _apply_noise(state, _injection_terms(inj, model), inj.qubits)
        if i == len(gates):
            break
        gate = gates[i]
        kind = gate.kind

        if kind is GateKind.MEASURE:
            q, c = gate.qubits[0], gate.clbits[0]
            probs = state.measure_probs(q)
            for outcome in (0, 1):
                p = probs[outcome]
                if p * weight <= tol:
                    continue
                branch = state.project(q, outcome, p)
                for recorded, w_rec in ((outcome, 1.0 - model.p_meas), (1 - outcome, model.p_meas)):
                    if w_rec == 0.0:
                        continue
                    nxt = list(clbits)
                    nxt[c] = recorded
                    _walk(branch.copy(), circuit, model, quiet, injections, i + 1,
                          nxt, weight * p * w_rec, out, tol)
            return

        if kind is GateKind.RESET:
            q = gate.qubits[0]
            if isinstance(state, DensityState):
                probs = state.measure_probs(q)
                acc = None
                for outcome in (0, 1):
                    if probs[outcome] <= 0.0:
                        continue
                    branch = state.project(q, outcome, probs[outcome])
                    if outcome == 1:
                        branch.apply_unitary(_SQ[GateKind.X], (q,))
                    part = probs[outcome] * branch.tensor
                    acc = part if acc is None else acc + part
                state = DensityState(state.n, acc)
                if i not in quiet:
                    _apply_reset_noise(state, model, q)
                i += 1
                continue
            # pure path: branch like a measurement but record nothing
            probs = state.measure_probs(q)
            for outcome in (0, 1):
                p = probs[outcome]
                if p * weight <= tol:
                    continue
                branch = state.project(q, outcome, p)
                if outcome == 1:
                    branch.apply_unitary(_SQ[GateKind.X], (q,))
                _walk(branch, circuit, model, quiet, injections, i + 1,
                      list(clbits), weight * p, out, tol)
            return

        _apply_unitary_gate(state, gate, clbits)
        if i not in quiet:
            for terms, qubits in _channel_for_gate(gate, model):
                _apply_noise(state, terms, qubits)
        i += 1

    key = "".join(str(b) for b in clbits)
    out[key] = out.get(key, 0.0) + weight


def _apply_noise(state, terms: list[tuple[float, str]], qubits: tuple[int, ...]) -> None:
    if isinstance(state, PureState):
        raise SimulationError("noise channel on the statevector path")
    state.apply_pauli_mixture(terms, qubits)
    trace = state.trace()
    if abs(trace - 1.0) > 1e-10:
        raise SimulationError(f"trace drifted to {trace} after channel application")


def _apply_reset_noise(state, model: NoiseModel, q: int) -> None:
    if model.p1 > 0.0:
        _apply_noise(state, depolarizing_channel(1, model.p1), (q,))
