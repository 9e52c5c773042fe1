"""Dense operator algebra over tensor-product Hilbert spaces.

Provides the ordered tensor-factor layout (`HilbertSpec`), dense complex
operators bound to it (`Operator`), ladder and Pauli operators embedded in
the full product space, Hermitian eigendecomposition, and matrix
exponentials.  Everything is dense and aimed at desk-scale dimensions
(up to ~10^4); values are immutable after construction and safe to share
across threads.

Conventions: hbar = 1 and eps0 = 1 throughout the package.  Fock states are
ordered |0>, |1>, ..., |N>; a two-level matter factor is ordered |e>, |g>,
so that sigma_z = diag(+1, -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import InvariantViolation

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
EIG_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a photon mode with a Fock cutoff, or a matter system.

    For photon factors ``dim = fock_cutoff + 1`` (states |0> .. |N>).
    """

    kind: str  # "photon" | "matter"
    dim: int

    def __post_init__(self):
        if self.kind not in ("photon", "matter"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("factor dimension must be >= 1")

    @property
    def fock_cutoff(self) -> int:
        if self.kind != "photon":
            raise ValueError("fock_cutoff only defined for photon factors")
        return self.dim - 1


def photon(fock_cutoff: int) -> Factor:
    """Photon factor with Fock states |0> .. |fock_cutoff|."""
    if fock_cutoff < 0:
        raise ValueError("fock_cutoff must be >= 0")
    return Factor("photon", fock_cutoff + 1)


def matter_levels(dim: int) -> Factor:
    """Matter factor with `dim` energy levels."""
    return Factor("matter", dim)


@dataclass(frozen=True)
class HilbertSpec:
    """Ordered list of tensor factors defining the full Hilbert space."""

    factors: tuple[Factor, ...]

    def __init__(self, factors: Iterable[Factor]):
        factors = tuple(factors)
        if not factors:
            raise ValueError("HilbertSpec needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        d = 1
        for f in self.factors:
            d *= f.dim
        return d

    @property
    def photon_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.factors) if f.kind == "photon")

    @property
    def matter_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.factors) if f.kind == "matter")

    def embed(self, index: int, local: np.ndarray) -> np.ndarray:
        """Embed a single-factor matrix into the full space by Kronecker products."""
        if not 0 <= index < len(self.factors):
            raise IndexError(f"factor index {index} out of range")
        local = np.asarray(local, dtype=complex)
        if local.shape != (self.factors[index].dim,) * 2:
            raise ValueError("local matrix does not match factor dimension")
        out = np.eye(1, dtype=complex)
        for i, f in enumerate(self.factors):
            out = np.kron(out, local if i == index else np.eye(f.dim, dtype=complex))
        return out


def max_abs(m: np.ndarray) -> float:
    """Entrywise max-abs norm, zero for empty arrays."""
    return float(np.abs(m).max()) if m.size else 0.0


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix bound to a HilbertSpec.

    The ``hermitian``/``unitary`` flags are *verified* at construction when
    claimed (never merely asserted): claiming a property that the matrix does
    not satisfy raises ``InvariantViolation``.  A flag value of ``None`` means
    unchecked.
    """

    matrix: np.ndarray
    space: HilbertSpec
    hermitian: Optional[bool] = field(default=None)
    unitary: Optional[bool] = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if m.shape[0] != self.space.dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} != space dimension {self.space.dim}"
            )
        if self.hermitian:
            dev = max_abs(m - m.conj().T)
            if dev >= HERMITIAN_TOL:
                raise InvariantViolation(f"hermitian flag set but ||M - M^dag||_max = {dev:.3e}")
        if self.unitary:
            dev = max_abs(m.conj().T @ m - np.eye(m.shape[0]))
            if dev >= UNITARY_TOL:
                raise InvariantViolation(f"unitary flag set but ||M^dag M - 1||_max = {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space,
                        hermitian=self.hermitian, unitary=self.unitary)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return max_abs(self.matrix - self.matrix.conj().T) < tol

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return max_abs(self.matrix.conj().T @ self.matrix - np.eye(self.dim)) < tol

    def _wrap(self, m: np.ndarray) -> "Operator":
        return Operator(m, self.space)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Operator):
            if other.space != self.space:
                raise ValueError("operators live on different spaces")
            return other.matrix
        return np.asarray(other, dtype=complex)

    def __add__(self, other):
        if np.isscalar(other):
            return self._wrap(self.matrix + other * np.eye(self.dim))
        return self._wrap(self.matrix + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self._wrap(self.matrix - other * np.eye(self.dim))
        return self._wrap(self.matrix - self._coerce(other))

    def __mul__(self, scalar):
        return self._wrap(self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return self._wrap(self.matrix @ self._coerce(other))
        return self.matrix @ np.asarray(other, dtype=complex)


def ladder_matrix(fock_cutoff: int) -> np.ndarray:
    """Truncated annihilation matrix with <n-1|a|n> = sqrt(n)."""
    a = np.zeros((fock_cutoff + 1, fock_cutoff + 1), dtype=complex)
    for n in range(1, fock_cutoff + 1):
        a[n - 1, n] = np.sqrt(n)
    return a


def ladder(space: HilbertSpec, mode_index: int) -> Operator:
    """Annihilation operator of one photon factor, embedded in the full space.

    `mode_index` counts photon factors (0-based, in factor order).
    """
    photon_idx = space.photon_indices
    if not 0 <= mode_index < len(photon_idx):
        raise IndexError(f"mode index {mode_index} out of range (have {len(photon_idx)} photon factors)")
    fi = photon_idx[mode_index]
    local = ladder_matrix(space.factors[fi].fock_cutoff)
    return Operator(space.embed(fi, local), space)


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def pauli(space: HilbertSpec, matter_index: int) -> tuple[Operator, Operator, Operator]:
    """(sigma_x, sigma_y, sigma_z) of a two-level matter factor, embedded.

    Basis order is |e>, |g>, so sigma_z = |e><e| - |g><g| = diag(+1, -1).
    """
    matter_idx = space.matter_indices
    if not 0 <= matter_index < len(matter_idx):
        raise IndexError(f"matter index {matter_index} out of range")
    fi = matter_idx[matter_index]
    if space.factors[fi].dim != 2:
        raise ValueError(f"matter factor has dim {space.factors[fi].dim}, need 2 for Pauli algebra")
    return tuple(
        Operator(space.embed(fi, p), space, hermitian=True)
        for p in (PAULI_X, PAULI_Y, PAULI_Z)
    )


def herm_eig(op: Operator, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, Operator]:
    """Eigendecomposition of a Hermitian operator.

    Returns eigenvalues in ascending order and the unitary of column
    eigenvectors; the reconstruction residual ||M V - V diag(lam)||_max is
    checked against 1e-10.  Non-Hermitian input is rejected.
    """
    m = op.matrix
    dev = max_abs(m - m.conj().T)
    if dev >= tol:
        raise InvariantViolation(f"herm_eig requires Hermitian input, ||M - M^dag||_max = {dev:.3e}")
    vals, vecs = np.linalg.eigh(m)
    resid = max_abs(m @ vecs - vecs * vals)
    scale = max(1.0, float(np.abs(vals).max()) if vals.size else 1.0)
    if resid >= EIG_RESIDUAL_TOL * scale:
        raise InvariantViolation(f"eigendecomposition residual {resid:.3e} too large")
    return vals, Operator(vecs, op.space, unitary=True)


def matrix_exp(op: Operator) -> Operator:
    """Matrix exponential exp(M).

    Hermitian and anti-Hermitian inputs go through an eigendecomposition
    (anti-Hermitian input yields an output whose unitary flag is verified);
    everything else uses scaling-and-squaring Pade.
    """
    m = op.matrix
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix_exp: non-finite entries")
    herm_dev = max_abs(m - m.conj().T)
    anti_dev = max_abs(m + m.conj().T)
    scale = max(1.0, max_abs(m))
    if anti_dev < HERMITIAN_TOL * scale:
        # M = iH with H Hermitian: exp(M) = V exp(i lam) V^dag, exactly unitary
        h = (-1j * m + (-1j * m).conj().T) / 2
        vals, vecs = np.linalg.eigh(h)
        e = (vecs * np.exp(1j * vals)) @ vecs.conj().T
        return Operator(e, op.space, unitary=True)
    if herm_dev < HERMITIAN_TOL * scale:
        h = (m + m.conj().T) / 2
        vals, vecs = np.linalg.eigh(h)
        e = (vecs * np.exp(vals)) @ vecs.conj().T
        return Operator(e, op.space, hermitian=True)
    return Operator(scipy.linalg.expm(m), op.space)


class HermitianGenerator:
    """Cached eigendecomposition of a Hermitian generator X.

    unitary(s) returns exp(i s X) as an exactly-unitary matrix; repeated
    evaluations (gauge sweeps, time-dependent couplings) reuse the
    factorization.
    """

    def __init__(self, matrix: np.ndarray, space: HilbertSpec):
        matrix = np.asarray(matrix, dtype=complex)
        dev = max_abs(matrix - matrix.conj().T)
        if dev >= HERMITIAN_TOL * max(1.0, max_abs(matrix)):
            raise InvariantViolation(f"generator is not Hermitian, deviation {dev:.3e}")
        self.space = space
        self.matrix = matrix
        self._vals, self._vecs = np.linalg.eigh((matrix + matrix.conj().T) / 2)

    def unitary(self, s: float) -> Operator:
        u = (self._vecs * np.exp(1j * s * self._vals)) @ self._vecs.conj().T
        return Operator(u, self.space, unitary=True)

    def conjugate(self, s: float, m: np.ndarray) -> np.ndarray:
        """exp(i s X) M exp(-i s X) as a plain matrix."""
        u = self.unitary(s).matrix
        return u @ m @ u.conj().T
