"""Validated dense linear algebra over a finite-dimensional Hilbert space.

Wrapper types enforce the structural invariants (hermiticity, unitarity,
unit trace, positive semidefiniteness, unit norm) at construction time and
are immutable afterwards.  Constructors reject bad input rather than fixing
it; ``DensityMatrix.renormalize`` is the one explicit repair hook.  All
tolerances used by the invariant checks live here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Invariant tolerances, fixed package-wide.
HERMITICITY_TOL = 1e-12  # max-abs entry of A - A_dagger
UNITARITY_TOL = 1e-10    # max-abs entry of U_dagger U - identity
# Unit-trace gate.  Repeated conjugation by one rounded exponential drifts the
# trace systematically at ~1 ulp per step, so states carried through 10^4-step
# runs reach a few 1e-12; the gate sits above that, while trajectory trace
# drift is monitored against the tighter flow bound (see eqm_lab.flow).
TRACE_TOL = 5e-11
PSD_SLACK = 1e-10        # how far below zero the smallest eigenvalue may sit
NORM_TOL = 1e-12         # deviation of a state vector from unit norm
PURITY_TOL = 1e-10       # 1 - Tr(rho^2) allowed for inputs declared pure

MIN_DIM = 2
MAX_DIM = 64

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def max_abs(a: np.ndarray) -> float:
    """Largest entry magnitude; zero for empty input."""
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_complex_matrix(entries) -> np.ndarray:
    """Coerce to a square complex matrix with finite entries (fresh copy)."""
    mat = np.array(entries, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if mat.shape[0] == 0:
        raise ValueError("matrix must be nonempty")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    return mat


def _hermiticity_defect(mat: np.ndarray) -> float:
    return max_abs(mat - mat.conj().T)


def _require_same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A self-adjoint operator; hermiticity is checked within HERMITICITY_TOL."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        defect = _hermiticity_defect(mat)
        if defect > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian: max |A - A†| = {defect:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """A unitary operator; U_dagger U = identity within UNITARITY_TOL."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        defect = max_abs(mat.conj().T @ mat - np.eye(mat.shape[0]))
        if defect > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary: max |U†U - 1| = {defect:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A state: Hermitian, unit trace, positive semidefinite (within PSD_SLACK)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        defect = _hermiticity_defect(mat)
        if defect > HERMITICITY_TOL:
            raise ValueError(f"state is not Hermitian: max |A - A†| = {defect:.3e}")
        trace = np.trace(mat)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"state must have unit trace, got Tr = {trace.real:.17g}")
        lowest = float(np.linalg.eigvalsh(mat)[0])
        if lowest < -PSD_SLACK:
            raise ValueError(f"state is not positive semidefinite: lowest eigenvalue {lowest:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        """Tr(rho^2), equal to 1 exactly for one-dimensional projections."""
        return float(np.trace(self.matrix @ self.matrix).real)

    @classmethod
    def renormalize(cls, entries) -> "DensityMatrix":
        """Escape hatch: symmetrize (A + A_dagger)/2 and rescale to unit trace.

        Positivity is still enforced; this repairs hermiticity and trace only.
        """
        mat = as_complex_matrix(entries)
        sym = 0.5 * (mat + mat.conj().T)
        trace = float(np.trace(sym).real)
        if abs(trace) < 1e-12:
            raise ValueError("cannot renormalize a traceless matrix")
        return cls(sym / trace)


@dataclass(frozen=True, eq=False)
class StateVector:
    """A normalized vector in the underlying Hilbert space."""

    vector: np.ndarray

    def __post_init__(self):
        vec = np.array(self.vector, dtype=complex)
        if vec.ndim != 1 or vec.shape[0] == 0:
            raise ValueError(f"expected a nonempty vector, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("vector entries must be finite")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"vector must be normalized, got norm = {norm:.17g}")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def commutator(a: HermitianOperator, b: HermitianOperator) -> np.ndarray:
    """AB - BA.  Anti-Hermitian for Hermitian inputs, so i*[A, B] is Hermitian."""
    _require_same_dim(a, b)
    return a.matrix @ b.matrix - b.matrix @ a.matrix


def trace_pairing(rho: DensityMatrix, a: HermitianOperator) -> float:
    """Re Tr(rho A), the duality pairing between states and observables.

    The imaginary part of the trace vanishes for valid inputs and is asserted
    to be below HERMITICITY_TOL; a larger value signals corrupted inputs.
    """
    _require_same_dim(rho, a)
    value = complex(np.trace(rho.matrix @ a.matrix))
    if abs(value.imag) > HERMITICITY_TOL:
        raise ValueError(f"trace pairing has a non-negligible imaginary part: {value.imag:.3e}")
    return value.real


def transition_probability(p: DensityMatrix, q: DensityMatrix) -> float:
    """Tr(PQ) for two one-dimensional projections: |<psi|phi>|^2."""
    _require_same_dim(p, q)
    for name, state in (("first", p), ("second", q)):
        pur = state.purity()
        if pur < 1.0 - PURITY_TOL:
            raise ValueError(f"{name} argument is not pure: purity = {pur:.17g}")
    return float(np.trace(p.matrix @ q.matrix).real)


def expm_hermitian(mat: np.ndarray, s: float) -> np.ndarray:
    """exp(-i s A) for Hermitian A, via eigendecomposition (unitary by construction)."""
    eigvals, eigvecs = np.linalg.eigh(mat)
    phases = np.exp(-1j * s * eigvals)
    return (eigvecs * phases) @ eigvecs.conj().T


def unitary_exponential(a: HermitianOperator, s: float) -> UnitaryOperator:
    """exp(-i s A) as a validated unitary."""
    if not np.isfinite(s):
        raise ValueError("exponent parameter must be finite")
    return UnitaryOperator(expm_hermitian(a.matrix, s))


def projector(psi: StateVector) -> DensityMatrix:
    """The one-dimensional projection |psi><psi|; invariant under global phase."""
    return DensityMatrix(np.outer(psi.vector, psi.vector.conj()))


def spectrum(rho: DensityMatrix) -> np.ndarray:
    """Eigenvalues of the state in descending order."""
    return np.linalg.eigvalsh(rho.matrix)[::-1]


def matrix_from_pairs(doc) -> np.ndarray:
    """Parse the shared matrix literal: nested rows of [re, im] pairs, row-major."""
    try:
        arr = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"matrix literal entries must be numbers: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"matrix literal must be rows of [re, im] pairs, got shape {arr.shape}")
    return as_complex_matrix(arr[..., 0] + 1j * arr[..., 1])


def matrix_to_pairs(mat: np.ndarray) -> list:
    """Inverse of matrix_from_pairs."""
    mat = np.asarray(mat, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in mat]


def vector_from_pairs(doc) -> np.ndarray:
    """Parse a vector literal: a list of [re, im] pairs."""
    try:
        arr = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"vector literal entries must be numbers: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"vector literal must be a list of [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def vector_to_pairs(vec: np.ndarray) -> list:
    """Inverse of vector_from_pairs."""
    return [[float(v.real), float(v.imag)] for v in np.asarray(vec, dtype=complex)]
