"""Dense statevector simulator with an explicit gate IR.

Conventions:
    * Qubit 0 is the least significant bit of a basis-state index, so basis
      index ``i`` assigns qubit ``q`` the bit ``(i >> q) & 1``.
    * Histogram keys render most-significant-first: for ``qubits=(a, b, c)``
      the key reads ``bit(c) bit(b) bit(a)``.

States are immutable and every operation returns a new value. Circuits are
mutable builders, but simulation never modifies them, so a built circuit can
be shared across worker threads. RNG state is always a per-call seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidCircuitError, InvalidGateError, ZeroProbabilityError

UNITARY_ATOL = 1e-10

_SQRT1_2 = 1.0 / math.sqrt(2.0)


class GateKind(Enum):
    HADAMARD = "h"
    PAULI_X = "x"
    PAULI_Y = "y"
    PAULI_Z = "z"
    RY = "ry"
    SWAP = "swap"
    UNITARY = "unitary"


_FIXED_MATRICES = {
    GateKind.HADAMARD: np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex),
    GateKind.PAULI_X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.PAULI_Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.PAULI_Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.SWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}

_SINGLE_TARGET = {
    GateKind.HADAMARD,
    GateKind.PAULI_X,
    GateKind.PAULI_Y,
    GateKind.PAULI_Z,
    GateKind.RY,
}


@dataclass(frozen=True, eq=False)
class Gate:
    """One circuit operation: a unitary on ``targets`` plus optional controls.

    ``controls`` holds ``(qubit, polarity)`` pairs. Polarity 1 fires when the
    control qubit is |1> (filled dot), polarity 0 when it is |0> (open dot).
    For ``UNITARY`` gates the matrix acts on the targets with ``targets[0]``
    as the least significant bit of the block index.
    """

    kind: GateKind
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    angle: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        targets = tuple(int(t) for t in self.targets)
        controls = tuple((int(q), int(p)) for q, p in self.controls)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "controls", controls)
        if not targets or len(set(targets)) != len(targets):
            raise InvalidGateError(f"targets must be non-empty and unique, got {targets}")
        control_qubits = [q for q, _ in controls]
        if len(set(control_qubits)) != len(control_qubits):
            raise InvalidGateError("duplicate control qubits")
        if set(control_qubits) & set(targets):
            raise InvalidGateError("targets and controls must be disjoint")
        if any(p not in (0, 1) for _, p in controls):
            raise InvalidGateError("control polarity must be 0 or 1")
        if min(targets + tuple(control_qubits), default=0) < 0:
            raise InvalidGateError("negative qubit index")
        if self.kind in _SINGLE_TARGET and len(targets) != 1:
            raise InvalidGateError(f"{self.kind.value} takes exactly one target")
        if self.kind is GateKind.SWAP and len(targets) != 2:
            raise InvalidGateError("swap takes exactly two targets")
        if self.kind is GateKind.RY:
            if self.angle is None or not math.isfinite(float(self.angle)):
                raise InvalidGateError("ry needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        if self.kind is GateKind.UNITARY:
            if self.matrix is None:
                raise InvalidGateError("unitary gate needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            dim = 2 ** len(targets)
            if m.shape != (dim, dim):
                raise InvalidGateError(
                    f"matrix shape {m.shape} does not act on {len(targets)} qubit(s)"
                )
            if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > UNITARY_ATOL:
                raise InvalidGateError("matrix is not unitary within 1e-10")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def resolved_matrix(self) -> np.ndarray:
        if self.kind is GateKind.UNITARY:
            return self.matrix
        if self.kind is GateKind.RY:
            half = 0.5 * self.angle
            c, s = math.cos(half), math.sin(half)
            return np.array([[c, -s], [s, c]], dtype=complex)
        return _FIXED_MATRICES[self.kind]

    def dagger(self) -> "Gate":
        if self.kind is GateKind.RY:
            return Gate(GateKind.RY, self.targets, self.controls, angle=-self.angle)
        if self.kind is GateKind.UNITARY:
            return Gate(
                GateKind.UNITARY,
                self.targets,
                self.controls,
                matrix=np.array(self.matrix).conj().T,
            )
        return self


class StateVector:
    """Unit-norm complex amplitudes over ``2**num_qubits`` basis states."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes, *, validate: bool = True):
        arr = np.array(amplitudes, dtype=complex)
        if arr.shape != (2**num_qubits,):
            raise ValueError(
                f"expected {2**num_qubits} amplitudes for {num_qubits} qubit(s), got {arr.shape}"
            )
        if validate:
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"amplitudes must have unit norm, got {norm}")
            arr = arr / norm
        arr.setflags(write=False)
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "amplitudes", arr)

    def __setattr__(self, name, value):  # immutable by contract
        raise AttributeError("StateVector is immutable")

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps, validate=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


class Circuit:
    """Ordered gate list over ``num_qubits`` qubits with named registers."""

    def __init__(
        self,
        num_qubits: int,
        registers: Mapping[str, Sequence[int]] | None = None,
    ):
        if num_qubits < 1:
            raise InvalidCircuitError("a circuit needs at least one qubit")
        self.num_qubits = int(num_qubits)
        self.gates: list[Gate] = []
        self.register_map: dict[str, tuple[int, ...]] = {}
        if registers:
            for name, qubits in registers.items():
                self.add_register(name, qubits)

    def add_register(self, name: str, qubits: Sequence[int]) -> "Circuit":
        qubits = tuple(int(q) for q in qubits)
        if any(q < 0 or q >= self.num_qubits for q in qubits):
            raise InvalidCircuitError(f"register {name!r} out of range")
        used = {q for qs in self.register_map.values() for q in qs}
        if used & set(qubits):
            raise InvalidCircuitError(f"register {name!r} overlaps an existing register")
        self.register_map[name] = qubits
        return self

    def add(self, gate: Gate) -> "Circuit":
        if max(gate.qubits()) >= self.num_qubits:
            raise InvalidCircuitError(
                f"gate on qubits {gate.qubits()} does not fit in {self.num_qubits} qubit(s)"
            )
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for gate in gates:
            self.add(gate)
        return self

    def h(self, qubit: int, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.HADAMARD, (qubit,), tuple(controls)))

    def x(self, qubit: int, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.PAULI_X, (qubit,), tuple(controls)))

    def y(self, qubit: int, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.PAULI_Y, (qubit,), tuple(controls)))

    def z(self, qubit: int, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.PAULI_Z, (qubit,), tuple(controls)))

    def ry(self, qubit: int, angle: float, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.RY, (qubit,), tuple(controls), angle=angle))

    def swap(self, a: int, b: int, controls=()) -> "Circuit":
        return self.add(Gate(GateKind.SWAP, (a, b), tuple(controls)))

    def unitary(self, matrix, targets: Sequence[int], controls=()) -> "Circuit":
        return self.add(
            Gate(GateKind.UNITARY, tuple(targets), tuple(controls), matrix=matrix)
        )

    def inverse(self) -> "Circuit":
        inv = Circuit(self.num_qubits, self.register_map)
        inv.gates = [g.dagger() for g in reversed(self.gates)]
        return inv

    def __len__(self) -> int:
        return len(self.gates)


def inverted_gates(gates: Sequence[Gate]) -> list[Gate]:
    """Gate-reversed adjoint of a gate list."""
    return [g.dagger() for g in reversed(gates)]


def _apply_gate(vec: np.ndarray, gate: Gate) -> np.ndarray:
    dim = vec.shape[0]
    idx = np.arange(dim)
    mask = np.ones(dim, dtype=bool)
    for q, pol in gate.controls:
        mask &= ((idx >> q) & 1) == pol
    for t in gate.targets:
        mask &= ((idx >> t) & 1) == 0
    base = idx[mask]
    if base.size == 0:
        return vec
    span = 1 << len(gate.targets)
    offsets = np.array(
        [sum(((j >> p) & 1) << t for p, t in enumerate(gate.targets)) for j in range(span)],
        dtype=np.int64,
    )
    gather = base[None, :] + offsets[:, None]
    out = vec.copy()
    out[gather] = np.tensordot(gate.resolved_matrix(), vec[gather], axes=(1, 0))
    return out


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    """Apply the circuit's gates in order; returns the exact output state."""
    if state.num_qubits != circuit.num_qubits:
        raise InvalidCircuitError(
            f"state has {state.num_qubits} qubit(s) but circuit expects {circuit.num_qubits}"
        )
    vec = np.array(state.amplitudes, dtype=complex)
    for gate in circuit.gates:
        vec = _apply_gate(vec, gate)
    return StateVector(circuit.num_qubits, vec, validate=False)


def circuit_matrix(circuit: Circuit) -> np.ndarray:
    """Full unitary of the circuit; intended for small test circuits."""
    dim = 2**circuit.num_qubits
    mat = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        mat = _apply_gate(mat, gate)
    return mat


def postselect(state: StateVector, qubit: int, outcome: int) -> tuple[StateVector, float]:
    """Project one qubit onto ``outcome`` and renormalize.

    Returns the conditional state (full dimension, qubit collapsed) and the
    probability of the outcome.
    """
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    idx = np.arange(state.amplitudes.shape[0])
    keep = ((idx >> qubit) & 1) == outcome
    prob = float(np.sum(np.abs(state.amplitudes[keep]) ** 2))
    if prob < 1e-15:
        raise ZeroProbabilityError(
            f"outcome {outcome} on qubit {qubit} has probability {prob:.3e}"
        )
    new = np.where(keep, state.amplitudes, 0.0) / math.sqrt(prob)
    return StateVector(state.num_qubits, new, validate=False), prob


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome probabilities for a subset of qubits.

    ``qubits[i]`` contributes bit ``i`` of the outcome index, matching the
    global least-significant-first convention.
    """
    qubits = tuple(int(q) for q in qubits)
    if not qubits:
        raise ValueError("at least one qubit is required")
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be unique")
    if any(q < 0 or q >= state.num_qubits for q in qubits):
        raise ValueError("qubit index out of range")
    n = state.num_qubits
    probs = np.abs(state.amplitudes.reshape([2] * n)) ** 2
    # axis (n - 1 - q) holds qubit q; order kept axes most-significant-first
    front = [n - 1 - q for q in reversed(qubits)]
    rest = [ax for ax in range(n) if ax not in front]
    probs = np.transpose(probs, front + rest)
    probs = probs.reshape(2 ** len(qubits), -1).sum(axis=1)
    return probs


def sample(
    state: StateVector, qubits: Sequence[int], shots: int, seed: int | None = None
) -> dict[str, int]:
    """Shot histogram over the listed qubits; deterministic for a fixed seed."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    probs = marginal_probabilities(state, qubits)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    width = len(tuple(qubits))
    return {format(i, f"0{width}b"): int(c) for i, c in enumerate(counts) if c}


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the left argument conjugated."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states must have the same number of qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def state_preparation_matrix(vector) -> np.ndarray:
    """A unitary whose first column is the given unit vector.

    Used to prepare an arbitrary register state from |0...0>.
    """
    vec = np.asarray(vector, dtype=complex).reshape(-1)
    dim = vec.shape[0]
    if dim & (dim - 1) or dim == 0:
        raise ValueError("vector length must be a power of two")
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        raise ValueError("cannot prepare the zero vector")
    vec = vec / norm
    basis = np.eye(dim, dtype=complex)
    basis[:, 0] = vec
    q, r = np.linalg.qr(basis)
    # align the first column with vec exactly (QR fixes phase arbitrarily)
    phase = np.vdot(q[:, 0], vec)
    q[:, 0] *= phase / abs(phase)
    return q


@dataclass(frozen=True)
class NoiseSpec:
    """Stochastic Pauli insertion after each gate; one trajectory per seed."""

    per_gate_pauli_probability: float
    rng_seed: int = 0

    def __post_init__(self) -> None:
        p = float(self.per_gate_pauli_probability)
        if not 0.0 <= p <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        object.__setattr__(self, "per_gate_pauli_probability", p)


_PAULI_KINDS = (GateKind.PAULI_X, GateKind.PAULI_Y, GateKind.PAULI_Z)


def inject_noise(circuit: Circuit, spec: NoiseSpec) -> Circuit:
    """Insert a uniformly chosen Pauli on one involved qubit after each gate."""
    rng = np.random.default_rng(spec.rng_seed)
    noisy = Circuit(circuit.num_qubits, circuit.register_map)
    for gate in circuit.gates:
        noisy.add(gate)
        if rng.random() < spec.per_gate_pauli_probability:
            qubits = gate.qubits()
            qubit = int(qubits[int(rng.integers(len(qubits)))])
            kind = _PAULI_KINDS[int(rng.integers(3))]
            noisy.add(Gate(kind, (qubit,)))
    return noisy


@dataclass(frozen=True)
class GateReport:
    gate_count: int
    two_qubit_count: int
    depth: int


def gate_report(circuit: Circuit) -> GateReport:
    """Logical-IR counts; depth by greedy layering of disjoint supports."""
    frontier = [0] * circuit.num_qubits
    depth = 0
    two_qubit = 0
    for gate in circuit.gates:
        qubits = gate.qubits()
        layer = 1 + max(frontier[q] for q in qubits)
        for q in qubits:
            frontier[q] = layer
        depth = max(depth, layer)
        if len(qubits) == 2:
            two_qubit += 1
    return GateReport(len(circuit.gates), two_qubit, depth)
