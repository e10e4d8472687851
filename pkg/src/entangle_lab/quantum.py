"""Exact two-qubit reference predictions via small dense complex algebra.

Joint outcome probabilities of product spin measurements are computed as
P_ij = Tr[rho (P_i(a) x P_j(b))] with the projectors built branch-free from
(I +/- n.sigma)/2.  For the singlet this yields E(a, b) = -a.b and, on the
standard coplanar axis family, the textbook CHSH values including the
Tsirelson point 2*sqrt(2) at alpha = pi/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probability import ChshQuantities, ExperimentTable, InvariantViolation, JointDistribution, chsh

AXIS_NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
IDENTITY_2 = np.eye(2, dtype=complex)


def unit_axis(v: Sequence[float]) -> np.ndarray:
    """Validate a measurement direction: real 3-vector of unit norm."""
    axis = np.asarray(v, dtype=float)
    if axis.shape != (3,):
        raise ValueError(f"axis must be a 3-vector, got shape {axis.shape}")
    if abs(np.linalg.norm(axis) - 1.0) > AXIS_NORM_TOL:
        raise InvariantViolation(f"axis norm {np.linalg.norm(axis)!r} deviates from 1")
    return axis


def axis_in_xz_plane(theta: float) -> np.ndarray:
    """Direction at angle ``theta`` from +z, rotated toward +x."""
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


@dataclass(frozen=True, eq=False)
class AxisQuad:
    """The four measurement directions of a CHSH experiment."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            object.__setattr__(self, name, unit_axis(getattr(self, name)))


def validate_state(rho: np.ndarray, *, check_psd: bool = True) -> np.ndarray:
    """Check the density-matrix invariants of a 4x4 state.

    Hermitian within 1e-12, unit trace within 1e-12 and, when ``check_psd``,
    smallest eigenvalue >= -1e-10.  Raises InvariantViolation otherwise.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"state must be 4x4, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise InvariantViolation("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
        raise InvariantViolation(f"state trace {np.trace(rho)!r} deviates from 1")
    if check_psd:
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -PSD_TOL:
            raise InvariantViolation(f"state is not positive semidefinite (min eigenvalue {min_eig})")
    return rho


def singlet_state() -> np.ndarray:
    """Density matrix of the rotationally invariant two-spin singlet."""
    ket = np.zeros(4, dtype=complex)
    ket[1] = 1.0 / math.sqrt(2.0)  # |+->
    ket[2] = -1.0 / math.sqrt(2.0)  # |-+>
    return np.outer(ket, ket.conj())


def maximally_mixed_state() -> np.ndarray:
    return np.eye(4, dtype=complex) / 4.0


def qubit_state(bloch: Sequence[float]) -> np.ndarray:
    """Single-qubit density matrix (I + r.sigma)/2 from a Bloch vector."""
    r = np.asarray(bloch, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must be a 3-vector, got shape {r.shape}")
    if np.linalg.norm(r) > 1.0 + AXIS_NORM_TOL:
        raise InvariantViolation(f"Bloch vector norm {np.linalg.norm(r)!r} exceeds 1")
    rho = IDENTITY_2.copy() / 2.0
    for component, pauli in zip(r, PAULIS):
        rho += 0.5 * component * pauli
    return rho


def product_state(alice_bloch: Sequence[float], bob_bloch: Sequence[float]) -> np.ndarray:
    """Two-qubit product state from the per-side Bloch vectors."""
    return np.kron(qubit_state(alice_bloch), qubit_state(bob_bloch))


def _projector_pair(axis: Sequence[float]) -> dict[int, np.ndarray]:
    n = unit_axis(axis)
    n_dot_sigma = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    return {1: (IDENTITY_2 + n_dot_sigma) / 2.0, -1: (IDENTITY_2 - n_dot_sigma) / 2.0}


def projector(axis: Sequence[float], sign: int) -> np.ndarray:
    """Spin projector (I + sign * n.sigma)/2 along a unit axis."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return _projector_pair(axis)[sign]


def _joint_probs(rho: np.ndarray, alice_axis, bob_axis) -> JointDistribution:
    proj_a = _projector_pair(alice_axis)
    proj_b = _projector_pair(bob_axis)
    probs = []
    for i in (1, -1):
        for j in (1, -1):
            # Tr(rho M) without forming the full product
            value = np.einsum("ij,ji->", rho, np.kron(proj_a[i], proj_b[j]))
            probs.append(float(value.real))
    return JointDistribution(*probs)


def joint_distribution(rho: np.ndarray, alice_axis, bob_axis) -> JointDistribution:
    """Joint outcome probabilities of product spin measurements on a state."""
    return _joint_probs(validate_state(rho), alice_axis, bob_axis)


def table_for_axes(rho: np.ndarray, axes: AxisQuad) -> ExperimentTable:
    rho = validate_state(rho)
    return ExperimentTable(
        ab=_joint_probs(rho, axes.a, axes.b),
        ab_prime=_joint_probs(rho, axes.a, axes.b_prime),
        a_prime_b=_joint_probs(rho, axes.a_prime, axes.b),
        a_prime_b_prime=_joint_probs(rho, axes.a_prime, axes.b_prime),
    )


def chsh_for_axes(rho: np.ndarray, axes: AxisQuad) -> ChshQuantities:
    return chsh(table_for_axes(rho, axes))


def coplanar_axes(alpha: float) -> AxisQuad:
    """The standard coplanar CHSH family at relative angle ``alpha``.

    All axes lie in the x-z plane: A along +z, B at alpha, A' at pi/2 and B'
    at alpha + pi/2.  At alpha = pi/4 this realizes the angle pattern
    (A,B) = pi/4, (A,B') = 3pi/4, (A',B) = pi/4, (A,A') = (B,B') = pi/2,
    for which the singlet gives B_CHSH = -2*sqrt(2).
    """
    return AxisQuad(
        a=axis_in_xz_plane(0.0),
        a_prime=axis_in_xz_plane(math.pi / 2.0),
        b=axis_in_xz_plane(alpha),
        b_prime=axis_in_xz_plane(alpha + math.pi / 2.0),
    )


def scan_tsirelson(rho: np.ndarray, alphas: Sequence[float]) -> list[tuple[float, float]]:
    """Sweep the coplanar family: (alpha, max |CHSH quantity|) per grid point."""
    alphas = list(alphas)
    if not alphas:
        raise ValueError("angle grid must be non-empty")
    rho = validate_state(rho)
    out = []
    for alpha in alphas:
        axes = coplanar_axes(float(alpha))
        table = ExperimentTable(
            ab=_joint_probs(rho, axes.a, axes.b),
            ab_prime=_joint_probs(rho, axes.a, axes.b_prime),
            a_prime_b=_joint_probs(rho, axes.a_prime, axes.b),
            a_prime_b_prime=_joint_probs(rho, axes.a_prime, axes.b_prime),
        )
        out.append((float(alpha), float(chsh(table).max_abs())))
    return out
