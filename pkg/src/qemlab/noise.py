"""Depolarizing noise shared by both backends.

The channel convention: "error rate p" is the total non-identity Pauli
probability. A rate-p channel applies identity with probability 1-p and one
of the 3 (single-qubit) or 15 (two-qubit) non-identity Paulis uniformly
otherwise. The exact density-matrix backend applies the channel; the
trajectory backend samples Pauli faults from it. Both consume the same
NoiseModel, so their outputs agree in distribution.

``two_qubit_mode="independent"`` switches two-qubit gates to an independent
single-qubit channel of rate p2 on each operand. With p2 = 3p/4 this equals
the "replace with I/2" textbook channel of mixing parameter p on each qubit,
which is the convention under which the closed-form Hadamard error rate in
the analysis module is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Gate, GateKind, qubit_arity

_PAULI1 = ("X", "Y", "Z")
_PAULI2 = tuple(a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II")

# kinds that receive no gate noise (measurement flips are handled separately)
_NOISELESS_KINDS = frozenset({GateKind.MEASURE})


@dataclass(frozen=True)
class NoiseModel:
    """Gate-attached depolarizing rates.

    p1 / p2: single- and two-qubit gate error rates. p_meas: classical
    readout flip probability. kappa: constant in the idealized-ancilla
    logical fault rate kappa * max(p1, p2)**d.
    """

    p1: float
    p2: float
    p_meas: float = 0.0
    kappa: float = 1.0
    two_qubit_mode: str = "paulis"  # "paulis" | "independent"

    def __post_init__(self):
        for name in ("p1", "p2", "p_meas"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.two_qubit_mode not in ("paulis", "independent"):
            raise ValueError(f"unknown two_qubit_mode {self.two_qubit_mode!r}")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p_meas == 0.0

    def gate_rate(self, kind: GateKind) -> float:
        if kind in _NOISELESS_KINDS:
            return 0.0
        return self.p2 if qubit_arity(kind) == 2 else self.p1

    def ancilla_rate(self, d: int) -> float:
        """Logical fault rate of an offline ancilla block of distance d."""
        return min(1.0, self.kappa * max(self.p1, self.p2) ** d)

    def to_json(self) -> dict:
        out = {"p1": self.p1, "p2": self.p2, "p_meas": self.p_meas, "kappa": self.kappa}
        if self.two_qubit_mode != "paulis":
            out["two_qubit_mode"] = self.two_qubit_mode
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseModel":
        return cls(
            p1=float(obj.get("p1", 0.0)),
            p2=float(obj.get("p2", 0.0)),
            p_meas=float(obj.get("p_meas", 0.0)),
            kappa=float(obj.get("kappa", 1.0)),
            two_qubit_mode=obj.get("two_qubit_mode", "paulis"),
        )

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class PauliFault:
    """A sampled non-identity Pauli on a gate's support."""

    location: int  # gate index
    qubits: tuple[int, ...]
    letters: str  # per-qubit symbols from IXYZ, same length as qubits

    def __post_init__(self):
        if set(self.letters) <= {"I"}:
            raise ValueError("fault must be non-identity")
        if len(self.letters) != len(self.qubits):
            raise ValueError("letters/qubits length mismatch")


@dataclass(frozen=True)
class Injection:
    """Stochastic Pauli fault attached to a circuit position.

    Applied just before gate index ``position``: with probability ``rate``
    one of ``paulis`` (uniformly) acts on ``qubits``. ``rate=None`` defers to
    NoiseModel.ancilla_rate(rate_exponent) at run time — used for the
    idealized offline Hadamard ancilla.
    """

    position: int
    qubits: tuple[int, ...]
    paulis: tuple[str, ...]
    rate: float | None = None
    rate_exponent: int | None = None

    def resolved_rate(self, model: NoiseModel) -> float:
        if self.rate is not None:
            return self.rate
        if self.rate_exponent is None:
            raise ValueError("injection needs rate or rate_exponent")
        return model.ancilla_rate(self.rate_exponent)


def depolarizing_channel(arity: int, p: float) -> list[tuple[float, str]]:
    """Return the channel as (probability, pauli-letters) terms.

    Identity with probability 1-p, then the 3 or 15 non-identity Paulis
    uniformly. Probabilities sum to 1 (trace preserving).
    """
    if arity not in (1, 2):
        raise ValueError(f"depolarizing arity must be 1 or 2, got {arity}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    paulis = _PAULI1 if arity == 1 else _PAULI2
    terms = [(1.0 - p, "I" * arity)]
    terms.extend((p / len(paulis), letters) for letters in paulis)
    return terms


def sample_fault(gate_and_index: tuple[Gate, int] | Gate, model: NoiseModel,
                 rng: np.random.Generator) -> PauliFault | None:
    """Draw an after-gate fault; None when the gate executes cleanly.

    Deterministic given the rng state. Measure gates never fault here
    (p_meas is a classical flip applied at readout).
    """
    gate, location = gate_and_index if isinstance(gate_and_index, tuple) else (gate_and_index, 0)
    if gate.kind in _NOISELESS_KINDS:
        return None
    arity = qubit_arity(gate.kind)
    if arity == 2 and model.two_qubit_mode == "independent":
        letters = "".join(_sample_letter(model.p2, rng) for _ in range(2))
        if set(letters) <= {"I"}:
            return None
        return PauliFault(location, gate.qubits, letters)
    p = model.gate_rate(gate.kind)
    if p == 0.0 or rng.random() >= p:
        return None
    if arity == 1:
        letters = _PAULI1[rng.integers(3)]
    else:
        letters = _PAULI2[rng.integers(15)]
    return PauliFault(location, gate.qubits, letters)


def _sample_letter(p: float, rng: np.random.Generator) -> str:
    if p == 0.0 or rng.random() >= p:
        return "I"
    return _PAULI1[rng.integers(3)]
