"""Quantum linear system problems: model, generators, exact solutions.

A problem holds a Hermitian matrix with spectral norm at most 1 (inputs with
larger spectra are scaled down and the factor recorded), a unit right-hand
side, and a cached eigendecomposition.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidProblemError, SingularProblemError

HERMITIAN_ATOL = 1e-10
SINGULAR_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    eigenvector: np.ndarray
    projection: complex


@dataclass(frozen=True, eq=False)
class ClassicalSolution:
    state_x: np.ndarray
    raw_norm: float


class QLSP:
    """Hermitian system A x = b with cached spectrum and condition number."""

    def __init__(self, matrix_a, vector_b, scale: float = 1.0):
        a = np.array(matrix_a, dtype=complex)
        b = np.array(vector_b, dtype=complex).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidProblemError(f"matrix must be square, got shape {a.shape}")
        n = a.shape[0]
        if n < 2 or n & (n - 1):
            raise InvalidProblemError(f"dimension must be a power of two >= 2, got {n}")
        if b.shape[0] != n:
            raise InvalidProblemError("right-hand side length does not match the matrix")
        if np.max(np.abs(a - a.conj().T)) > HERMITIAN_ATOL:
            raise InvalidProblemError("matrix is not Hermitian within 1e-10")
        norm_b = float(np.linalg.norm(b))
        if norm_b < 1e-12:
            raise InvalidProblemError("right-hand side is the zero vector")
        b = b / norm_b

        eigenvalues, vectors = np.linalg.eigh(a)
        largest = float(np.max(np.abs(eigenvalues)))
        if largest < SINGULAR_ATOL:
            raise SingularProblemError("matrix is numerically zero")
        if largest > 1.0 + 1e-12:
            a = a / largest
            eigenvalues = eigenvalues / largest
            scale = float(scale) * largest
        if float(np.min(np.abs(eigenvalues))) < SINGULAR_ATOL:
            raise SingularProblemError("matrix is numerically singular")

        pairs = []
        for i in range(n):
            vec = np.array(vectors[:, i])
            vec.setflags(write=False)
            pairs.append(EigenPair(float(eigenvalues[i]), vec, complex(np.vdot(vec, b))))

        a.setflags(write=False)
        b.setflags(write=False)
        self.matrix_a = a
        self.vector_b = b
        self.scale = float(scale)
        self.spectrum = tuple(pairs)
        abs_eigs = np.abs(eigenvalues)
        self.condition_number = float(np.max(abs_eigs) / np.min(abs_eigs))

    @property
    def dimension(self) -> int:
        return self.matrix_a.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dimension.bit_length() - 1

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.spectrum])

    @property
    def has_negative_eigenvalues(self) -> bool:
        return bool(np.any(self.eigenvalues < 0))

    @property
    def max_abs_eigenvalue(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def to_json(self) -> str:
        def pairs(z):
            return [[float(v.real), float(v.imag)] for v in z]

        return json.dumps(
            {
                "matrix": [pairs(row) for row in self.matrix_a],
                "vector_b": pairs(self.vector_b),
                "scale": self.scale,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QLSP":
        doc = json.loads(text)
        matrix = np.array(
            [[complex(re, im) for re, im in row] for row in doc["matrix"]]
        )
        vector = np.array([complex(re, im) for re, im in doc["vector_b"]])
        return cls(matrix, vector, scale=float(doc.get("scale", 1.0)))


def eigendecompose(qlsp: QLSP) -> tuple[tuple[EigenPair, ...], float]:
    """The cached spectrum and condition number of a problem."""
    return qlsp.spectrum, qlsp.condition_number


def hermitian_dilation(a, b) -> QLSP:
    """Embed a general square system into a Hermitian one of twice the size.

    Builds [[0, A], [A^H, 0]] with right-hand side (b, 0); the dilated
    spectrum is symmetric about zero.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex).reshape(-1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidProblemError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if b.shape[0] != n:
        raise InvalidProblemError("right-hand side length does not match the matrix")
    if float(np.linalg.norm(b)) < 1e-12:
        raise InvalidProblemError("right-hand side is the zero vector")
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    block[:n, n:] = a
    block[n:, :n] = a.conj().T
    rhs = np.concatenate([b, np.zeros(n, dtype=complex)])
    return QLSP(block, rhs)


def classical_solution(qlsp: QLSP) -> ClassicalSolution:
    """Exact normalized solution built from the cached spectrum."""
    raw = np.zeros(qlsp.dimension, dtype=complex)
    for pair in qlsp.spectrum:
        raw += (pair.projection / pair.eigenvalue) * pair.eigenvector
    raw_norm = float(np.linalg.norm(raw))
    state = raw / raw_norm
    state.setflags(write=False)
    return ClassicalSolution(state, raw_norm)


def generate_n2(lambda_param: float) -> QLSP:
    """Two-dimensional test family with eigenvalues ``lam`` and ``1 - lam``.

    The right-hand side projects equally onto both eigenvectors.
    """
    lam = float(lambda_param)
    if not 0.0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 0.5), got {lam}")
    a = np.array([[0.5, lam - 0.5], [lam - 0.5, 0.5]])
    return QLSP(a, np.array([1.0, 0.0]))


def generate_n4(eigenvalues, pair, seed: int) -> QLSP:
    """Four-dimensional problem with a seeded random orthonormal eigenbasis.

    ``pair`` selects the two eigenvectors whose equal superposition becomes
    the right-hand side. The same seed always yields the same basis.
    """
    eigs = tuple(float(v) for v in eigenvalues)
    if len(eigs) != 4:
        raise ValueError("exactly four eigenvalues are required")
    if len(set(eigs)) != 4:
        raise ValueError("eigenvalues must be distinct")
    if any(abs(v) < SINGULAR_ATOL for v in eigs):
        raise ValueError("eigenvalues must be nonzero")
    if any(abs(v) > 1.0 + 1e-12 for v in eigs):
        raise ValueError("eigenvalues must have magnitude at most 1")
    i, j = (int(p) for p in pair)
    if i == j:
        raise ValueError("pair indices must be distinct")
    if not (0 <= i < 4 and 0 <= j < 4):
        raise ValueError("pair indices must select one of the four eigenvalues")

    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((4, 4)))
    q = q * np.sign(np.diag(r))  # pin column signs so the basis is reproducible
    a = q @ np.diag(eigs) @ q.T
    b = (q[:, i] + q[:, j]) / math.sqrt(2.0)
    return QLSP(a, b)


def evolution_unitary(qlsp: QLSP, time: float, power: int = 1, big_t: int = 1) -> np.ndarray:
    """exp(i A t power / big_t) built from the cached eigendecomposition."""
    phases = np.exp(1j * qlsp.eigenvalues * float(time) * int(power) / int(big_t))
    vectors = np.column_stack([p.eigenvector for p in qlsp.spectrum])
    return (vectors * phases) @ vectors.conj().T
