"""Hidden-measurement mechanics on the Bloch sphere, and its two-qubit extension.

A two-outcome measurement is represented by the diameter between the two
outcome directions n+ and -n+.  The state first decoheres onto the diameter
along a straight path, landing at the point that splits the diameter into
segments whose relative sizes are the outcome probabilities; an abstract
elastic band over the diameter then breaks at a random point, and the side
containing the break decides the outcome.  A uniform break distribution
reproduces the Born statistics exactly; non-uniform (piecewise-constant)
distributions span the classical-to-solipsistic spectrum, and averaging over
random distributions recovers the Born values again.

For two qubits the analogous representation lives in 15 dimensions: a state
decomposes into the two local Bloch vectors plus a 9-component block
describing their connection, which for product states is fixed by the local
vectors and for entangled states is an independent piece of the description.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probability import InvariantViolation
from .quantum import HERMITICITY_TOL, IDENTITY_2, PAULIS, TRACE_TOL

BLOCH_NORM_TOL = 1e-12
WEIGHT_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10

#: Normalization making the 15 generators satisfy Tr(G_i G_j) = 2 delta_ij.
_GEN_SCALE = 1.0 / math.sqrt(2.0)
_DECOMP_SCALE = 2.0 / math.sqrt(6.0)


def bloch_vector(v: Sequence[float]) -> np.ndarray:
    """Validate a single-qubit Bloch vector: real 3-vector, |r| <= 1."""
    r = np.asarray(v, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"Bloch vector must be a 3-vector, got shape {r.shape}")
    if np.linalg.norm(r) > 1.0 + BLOCH_NORM_TOL:
        raise InvariantViolation(f"Bloch vector norm {np.linalg.norm(r)!r} exceeds 1")
    return r


@dataclass(frozen=True, eq=False)
class MeasurementFrame:
    """A two-outcome spin measurement: outcome directions n+ and n- = -n+."""

    n_plus: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n_plus, dtype=float)
        if n.shape != (3,):
            raise ValueError(f"n_plus must be a 3-vector, got shape {n.shape}")
        if abs(np.linalg.norm(n) - 1.0) > BLOCH_NORM_TOL:
            raise InvariantViolation(f"n_plus norm {np.linalg.norm(n)!r} deviates from 1")
        object.__setattr__(self, "n_plus", n)

    @property
    def n_minus(self) -> np.ndarray:
        return -self.n_plus


def outcome_probabilities(r: Sequence[float], frame: MeasurementFrame) -> tuple[float, float]:
    """Born probabilities (p+, p-) = ((1 +/- r.n+)/2) of the two outcomes.

    Geometrically these are the relative sizes of the two diameter segments
    cut by the decohered state.
    """
    c = float(np.dot(bloch_vector(r), frame.n_plus))
    return (1.0 + c) / 2.0, (1.0 - c) / 2.0


def decohere(r: Sequence[float], frame: MeasurementFrame, tau: float) -> np.ndarray:
    """Point at fraction ``tau`` along the straight path onto the diameter.

    r_tau = (1 - tau) r + tau r_par with r_par = (r.n+) n+; tau = 0 is the
    initial state, tau = 1 the fully decohered on-diameter state.  Both
    outcome directions are fixed points of the whole path.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    r = bloch_vector(r)
    r_par = float(np.dot(r, frame.n_plus)) * frame.n_plus
    return (1.0 - tau) * r + tau * r_par


@dataclass(frozen=True, eq=False)
class BreakDistribution:
    """Break-point distribution over the diameter, in uniform-measure coordinates.

    ``weights`` is None for the uniform distribution, else one weight per
    equal-size cell of the diameter (non-negative, summing to one).  A point
    of the diameter is addressed by its uniform measure m in [0, 1), with
    lambda = 2m - 1 the usual coordinate from n- to n+.
    """

    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.weights is None:
            return
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if np.any(w < 0):
            raise InvariantViolation("cell weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise InvariantViolation(f"cell weights sum to {float(w.sum())!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls) -> "BreakDistribution":
        return cls(weights=None)

    @classmethod
    def piecewise(cls, weights: Sequence[float]) -> "BreakDistribution":
        return cls(weights=np.asarray(weights, dtype=float))

    @property
    def n_cells(self) -> int:
        return 1 if self.weights is None else int(self.weights.size)

    def measure_from_uniform(self, u):
        """Map uniform draws to break positions in measure coordinates.

        Scalar or array.  Cell k is chosen when the cumulative weight passes
        u, and the position inside the cell is the rescaled remainder.
        """
        if self.weights is None:
            return u
        cum = np.cumsum(self.weights)
        k = np.searchsorted(cum, u, side="right")
        k = np.minimum(k, self.weights.size - 1)
        lower = np.where(k > 0, cum[k - 1], 0.0)
        width = self.weights[k]
        frac = np.where(width > 0, (u - lower) / np.where(width > 0, width, 1.0), 0.0)
        return (k + frac) / self.weights.size

    def plus_probability(self, p_plus: float) -> float:
        """Exact probability that the break lands on the + side of the split.

        The + segment covers uniform measure [0, p_plus); each cell
        contributes its weight times the clipped overlap.
        """
        if self.weights is None:
            return float(p_plus)
        n = self.weights.size
        overlap = np.clip(p_plus * n - np.arange(n), 0.0, 1.0)
        return float(np.dot(self.weights, overlap))


def sample_collapse(
    r: Sequence[float],
    frame: MeasurementFrame,
    dist: BreakDistribution,
    rng: np.random.Generator,
) -> tuple[int, float]:
    """One collapse: draw the break point, return (outcome, lambda).

    The outcome is +1 iff the break lies in the segment reaching from n-
    to the decohered state, i.e. iff its uniform measure is below p+; a
    break exactly at the split point counts as -1.  lambda is reported in
    diameter coordinates ([-1, 1], n- to n+).
    """
    p_plus, _ = outcome_probabilities(r, frame)
    m = float(dist.measure_from_uniform(rng.random()))
    return (1 if m < p_plus else -1), 2.0 * m - 1.0


def collapse_counts(
    r: Sequence[float],
    frame: MeasurementFrame,
    dist: BreakDistribution,
    n_samples: int,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Vectorized tally of :func:`sample_collapse`: (n_plus, n_minus).

    Sample i consumes the i-th uniform of ``rng``, exactly as n_samples
    scalar calls would.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    p_plus, _ = outcome_probabilities(r, frame)
    m = dist.measure_from_uniform(rng.random(n_samples))
    n_plus = int(np.count_nonzero(m < p_plus))
    return n_plus, n_samples - n_plus


def universal_average(
    r: Sequence[float],
    frame: MeasurementFrame,
    cells: int,
    n_distributions: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Average outcome probability over random piecewise-constant distributions.

    Each distribution has ``cells`` equal cells with weights drawn as
    normalized independent uniforms; its exact + probability is computed in
    closed form and the average over ``n_distributions`` draws is returned.
    The construction is cell-permutation symmetric, so the average converges
    to the Born probabilities; with a single cell every draw is uniform and
    the Born values are returned exactly.
    """
    if cells < 1:
        raise ValueError(f"cells must be >= 1, got {cells}")
    if n_distributions < 1:
        raise ValueError(f"n_distributions must be >= 1, got {n_distributions}")
    p_plus, _ = outcome_probabilities(r, frame)
    raw = rng.random((n_distributions, cells))
    weights = raw / raw.sum(axis=1, keepdims=True)
    overlap = np.clip(p_plus * cells - np.arange(cells), 0.0, 1.0)
    averaged = float(np.mean(weights @ overlap))
    return averaged, 1.0 - averaged


def lambda_basis() -> list[np.ndarray]:
    """The 15 orthogonal generators of the two-qubit Bloch representation.

    Ordered as sigma_i x I (3), I x sigma_i (3), then sigma_j x sigma_k in
    row-major (j, k) order (9), all scaled by 1/sqrt(2) so that
    Tr(G_i G_j) = 2 delta_ij.  The ordering is frozen: serialized
    15-vectors index into exactly this list.
    """
    basis = [_GEN_SCALE * np.kron(sigma, IDENTITY_2) for sigma in PAULIS]
    basis += [_GEN_SCALE * np.kron(IDENTITY_2, sigma) for sigma in PAULIS]
    basis += [
        _GEN_SCALE * np.kron(sigma_j, sigma_k) for sigma_j in PAULIS for sigma_k in PAULIS
    ]
    return basis


_LAMBDA_BASIS = lambda_basis()


@dataclass(frozen=True, eq=False)
class BlochVector15:
    """Two-qubit generalized Bloch vector with its direct-sum views.

    Components 0-2 are the Alice block scaled by 1/sqrt(3), components 3-5
    the Bob block likewise, components 6-14 the connection block as-is.
    Pure states have unit norm; mixed states are shorter.
    """

    r15: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r15, dtype=float)
        if r.shape != (15,):
            raise ValueError(f"r15 must have 15 components, got shape {r.shape}")
        object.__setattr__(self, "r15", r)

    @property
    def r_alice(self) -> np.ndarray:
        return math.sqrt(3.0) * self.r15[0:3]

    @property
    def r_bob(self) -> np.ndarray:
        return math.sqrt(3.0) * self.r15[3:6]

    @property
    def r_conn(self) -> np.ndarray:
        return self.r15[6:15]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r15))

    def to_json_dict(self) -> dict:
        return {
            "r15": [float(x) for x in self.r15],
            "r_alice": [float(x) for x in self.r_alice],
            "r_bob": [float(x) for x in self.r_bob],
            "r_conn": [float(x) for x in self.r_conn],
        }


def _check_decomposable(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"state must be 4x4, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise InvariantViolation("state is not Hermitian")
    trace = np.trace(rho)
    if abs(trace.real - 1.0) > TRACE_TOL or abs(trace.imag) > TRACE_TOL:
        raise InvariantViolation(f"state trace {trace!r} deviates from 1")
    return rho


def decompose(rho: np.ndarray) -> BlochVector15:
    """Generalized Bloch vector of a two-qubit state: r_i = (2/sqrt(6)) Tr(rho G_i)."""
    rho = _check_decomposable(rho)
    r15 = np.array([_DECOMP_SCALE * np.trace(rho @ gen).real for gen in _LAMBDA_BASIS])
    return BlochVector15(r15=r15)


def reconstruct(vec: BlochVector15 | Sequence[float]) -> np.ndarray:
    """Density matrix from a generalized Bloch vector: (I + sqrt(6) r.G)/4."""
    r15 = vec.r15 if isinstance(vec, BlochVector15) else np.asarray(vec, dtype=float)
    if r15.shape != (15,):
        raise ValueError(f"expected 15 components, got shape {r15.shape}")
    rho = np.eye(4, dtype=complex)
    for component, gen in zip(r15, _LAMBDA_BASIS):
        rho += math.sqrt(6.0) * component * gen
    return rho / 4.0


def rank_one_residual(r_conn: Sequence[float]) -> float:
    """Distance of the 3x3 connection block from its best rank-1 approximation.

    Zero (to round-off) exactly when the block factorizes as an outer
    product, as it does for product states; entangled states leave a
    residual.
    """
    matrix = np.asarray(r_conn, dtype=float).reshape(3, 3)
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    return float(np.linalg.norm(singular_values[1:]))
