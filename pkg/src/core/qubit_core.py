"""Exact linear algebra for real-amplitude polarization qubits.

Operators are stored by their Pauli-basis coefficients, so every
HermitianOp2 is Hermitian by construction and its spectrum has a closed
form. Angles are radians; psi and theta are measured from |H>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Discriminants this close below zero are floating-point cancellation.
_DISCRIMINANT_CLAMP = 1e-14

_IDENTITY = np.eye(2, dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


@dataclass(frozen=True)
class QubitState:
    """Pure linear polarization state cos(psi)|H> + sin(psi)|V>."""
    psi: float

    def vector(self) -> np.ndarray:
        """Amplitudes in the {|H>, |V>} basis."""
        return np.array([math.cos(self.psi), math.sin(self.psi)], dtype=complex)

    def bloch(self) -> tuple[float, float]:
        """Return (<Z>, <X>); <Y> is zero for real amplitudes."""
        return math.cos(2.0 * self.psi), math.sin(2.0 * self.psi)


@dataclass(frozen=True)
class ObservableParams:
    """The (a, b, r, beta) tuple defining the operator pair A and B."""
    a: float
    b: float
    r: float
    beta: float

    def __post_init__(self):
        errors = []
        if not self.a > 0:
            errors.append(f"'a': {self.a} must be > 0")
        if not self.b > 0:
            errors.append(f"'b': {self.b} must be > 0")
        if not 0.0 <= self.r <= 1.0:
            errors.append(f"'r': {self.r} is outside the allowed range [0, 1]")
        if not math.isfinite(self.beta):
            errors.append(f"'beta': {self.beta} must be a finite angle in radians")
        if errors:
            raise ValueError("Invalid observable parameters:\n" + "\n".join(f"  - {e}" for e in errors))

    @property
    def ratio(self) -> float:
        """The a/b ratio bounded by the feasibility window."""
        return self.a / self.b


@dataclass(frozen=True)
class HermitianOp2:
    """A 2x2 Hermitian operator c0*1 + cz*Z + cx*X + cy*Y."""
    c0: float
    cz: float
    cx: float
    cy: float = 0.0

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, atol: float = 1e-12) -> HermitianOp2:
        """Project a Hermitian 2x2 array onto Pauli coefficients.

        Raises:
            ValueError: If the array is not 2x2 or not Hermitian within atol.
        """
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Expected a 2x2 matrix, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=atol):
            raise ValueError("Matrix is not Hermitian")
        return cls(
            c0=float(np.trace(m).real / 2.0),
            cz=float(np.trace(m @ _PAULI_Z).real / 2.0),
            cx=float(np.trace(m @ _PAULI_X).real / 2.0),
            cy=float(np.trace(m @ _PAULI_Y).real / 2.0),
        )

    @property
    def bloch_norm(self) -> float:
        """Length of the (cz, cx, cy) vector."""
        return math.sqrt(self.cz * self.cz + self.cx * self.cx + self.cy * self.cy)

    def matrix(self) -> np.ndarray:
        return self.c0 * _IDENTITY + self.cz * _PAULI_Z + self.cx * _PAULI_X + self.cy * _PAULI_Y

    def __add__(self, other: HermitianOp2) -> HermitianOp2:
        return HermitianOp2(self.c0 + other.c0, self.cz + other.cz, self.cx + other.cx, self.cy + other.cy)

    def __sub__(self, other: HermitianOp2) -> HermitianOp2:
        return HermitianOp2(self.c0 - other.c0, self.cz - other.cz, self.cx - other.cx, self.cy - other.cy)

    def __mul__(self, scalar: float) -> HermitianOp2:
        return HermitianOp2(scalar * self.c0, scalar * self.cz, scalar * self.cx, scalar * self.cy)

    __rmul__ = __mul__

    def square(self) -> HermitianOp2:
        """Exact square: (c0 + c.sigma)^2 = c0^2 + |c|^2 + 2 c0 c.sigma."""
        norm_sq = self.cz * self.cz + self.cx * self.cx + self.cy * self.cy
        return HermitianOp2(
            self.c0 * self.c0 + norm_sq,
            2.0 * self.c0 * self.cz,
            2.0 * self.c0 * self.cx,
            2.0 * self.c0 * self.cy,
        )

    def eigenvalues(self) -> tuple[float, float]:
        """Roots of the characteristic polynomial, nondecreasing."""
        trace = 2.0 * self.c0
        det = self.c0 * self.c0 - (self.cz * self.cz + self.cx * self.cx + self.cy * self.cy)
        disc = trace * trace - 4.0 * det
        if disc < 0.0:
            if disc < -_DISCRIMINANT_CLAMP:
                raise ArithmeticError(f"Negative discriminant {disc} for a Hermitian operator")
            disc = 0.0
        root = math.sqrt(disc)
        return (trace - root) / 2.0, (trace + root) / 2.0

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed-form eigen-decomposition.

        Returns:
            (eigenvalues, vectors) with eigenvalues nondecreasing and the
            matching orthonormal eigenvectors as the columns of `vectors`.
        """
        low, high = self.eigenvalues()
        norm = self.bloch_norm
        if norm == 0.0:
            return np.array([low, high]), _IDENTITY.copy()

        # Upper eigenvector points along the Bloch direction (polar from +Z).
        polar = math.acos(max(-1.0, min(1.0, self.cz / norm)))
        azimuth = math.atan2(self.cy, self.cx)
        phase = complex(math.cos(azimuth), math.sin(azimuth))
        upper = np.array([math.cos(polar / 2.0), phase * math.sin(polar / 2.0)], dtype=complex)
        lower = np.array([-phase.conjugate() * math.sin(polar / 2.0), math.cos(polar / 2.0)], dtype=complex)
        return np.array([low, high]), np.column_stack([lower, upper])


def build_A(params: ObservableParams) -> HermitianOp2:
    """A = a (1 + Z)/2, a times the projector onto |H>."""
    return HermitianOp2(params.a / 2.0, params.a / 2.0, 0.0)


def build_B(params: ObservableParams) -> HermitianOp2:
    """B = b (1 + r cos(beta) Z + r sin(beta) X)/2."""
    half_b = params.b / 2.0
    return HermitianOp2(
        half_b,
        half_b * params.r * math.cos(params.beta),
        half_b * params.r * math.sin(params.beta),
    )


def projector(theta: float) -> HermitianOp2:
    """Projector onto cos(theta)|H> + sin(theta)|V>."""
    return HermitianOp2(0.5, 0.5 * math.cos(2.0 * theta), 0.5 * math.sin(2.0 * theta))


def decompose_B(params: ObservableParams) -> tuple[float, float, float, float]:
    """Split B into two weighted orthogonal polarization projectors.

    Returns:
        (weight1, angle1, weight2, angle2) with
        B = weight1 * P(angle1) + weight2 * P(angle2).
    """
    return (
        params.b * (1.0 + params.r) / 2.0,
        params.beta / 2.0,
        params.b * (1.0 - params.r) / 2.0,
        (params.beta + math.pi) / 2.0,
    )


def expectation(op: HermitianOp2, state: QubitState) -> float:
    z, x = state.bloch()
    return op.c0 + op.cz * z + op.cx * x


def expectation_sq(op: HermitianOp2, state: QubitState) -> float:
    return expectation(op.square(), state)


def min_eigenvalue(op: HermitianOp2) -> float:
    return op.eigenvalues()[0]


def born_probability(theta, state: QubitState):
    """Malus-law probability cos^2(theta - psi) of passing P(theta).

    theta may be a float or a numpy array of per-gate settings.
    """
    return np.cos(theta - state.psi) ** 2
