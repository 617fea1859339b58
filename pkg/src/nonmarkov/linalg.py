"""Dense complex linear algebra for 2x2 and 4x4 operators.

Everything in here is a pure function on small numpy arrays.  Hermitian
eigenproblems go through :func:`herm_eig`, which symmetrizes round-off
before calling LAPACK; all entropic quantities downstream use base-2 logs.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

# Pauli basis. PAULIS[0] is the identity.
I2 = np.eye(2, dtype=complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

I4 = np.eye(4, dtype=complex)

# SWAP = (1/2) sum_i sigma_i (x) sigma_i; the two-time correlation operator.
SWAP = 0.5 * sum(np.kron(s, s) for s in PAULIS)

HERM_TOL = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conjugate(a.T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product (thin alias kept for a uniform operator vocabulary)."""
    return np.kron(a, b)


def herm_defect(a: np.ndarray) -> float:
    """Largest entrywise deviation from hermiticity."""
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return a.shape[0] == a.shape[1] and herm_defect(a) <= tol


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def _require_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")


def herm_eig(a: np.ndarray, tol_herm: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns).  The input is
    symmetrized before the solve; deviations beyond ``tol_herm`` raise.
    """
    _require_square(a)
    defect = herm_defect(a)
    if defect > tol_herm:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e} > {tol_herm:.1e})")
    w, v = np.linalg.eigh(hermitize(a))
    return w, v


def herm_eigvals(a: np.ndarray, tol_herm: float = HERM_TOL) -> np.ndarray:
    _require_square(a)
    defect = herm_defect(a)
    if defect > tol_herm:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e} > {tol_herm:.1e})")
    return np.linalg.eigvalsh(hermitize(a))


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values; for Hermitian input, sum of |eigenvalues|."""
    _require_square(a)
    if is_hermitian(a):
        return float(np.abs(np.linalg.eigvalsh(hermitize(a))).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def partial_transpose(a: np.ndarray, subsystem: str = "first") -> np.ndarray:
    """Partial transpose of a 4x4 operator on a 2 (x) 2 space.

    ``subsystem`` selects which tensor factor gets transposed.
    """
    if a.shape != (4, 4):
        raise DimensionError(f"partial transpose needs a 4x4 matrix, got {a.shape}")
    t = a.reshape(2, 2, 2, 2)
    if subsystem == "first":
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == "second":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'first' or 'second', got {subsystem!r}")
    return t.reshape(4, 4)


def partial_trace(a: np.ndarray, traced: str = "second") -> np.ndarray:
    """Trace out one factor of a 4x4 operator, returning a 2x2 matrix."""
    if a.shape != (4, 4):
        raise DimensionError(f"partial trace needs a 4x4 matrix, got {a.shape}")
    t = a.reshape(2, 2, 2, 2)
    if traced == "second":
        return np.trace(t, axis1=1, axis2=3)
    if traced == "first":
        return np.trace(t, axis1=0, axis2=2)
    raise ValueError(f"traced must be 'first' or 'second', got {traced!r}")


def density_from_bloch(x) -> np.ndarray:
    """rho = (I + x . sigma) / 2.  Output is PSD iff |x| <= 1 (not enforced)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (I2 + x[0] * SX + x[1] * SY + x[2] * SZ)


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    return np.array([np.trace(s @ rho).real for s in (SX, SY, SZ)])


def bloch_is_physical(x, tol: float = 1e-9) -> bool:
    return float(np.linalg.norm(np.asarray(x, dtype=float))) <= 1.0 + tol


def matrix_log_psd(a: np.ndarray, zero_floor: float = 1e-15, base: float = 2.0,
                   psd_tol: float = 1e-10) -> np.ndarray:
    """Matrix logarithm of a PSD Hermitian matrix via eigendecomposition.

    Eigenvalues below ``zero_floor`` are clamped to it; callers own the
    0*log(0) = 0 convention on the support.  Logs are base-2 by default.
    """
    w, v = herm_eig(a)
    if w.min() < -psd_tol:
        raise DomainError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.maximum(w, zero_floor)
    lw = np.log(w) / np.log(base)
    return (v * lw) @ dagger(v)


def psd_project(a: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix: clip negative eigenvalues."""
    w, v = np.linalg.eigh(hermitize(a))
    w = np.maximum(w, 0.0)
    return (v * w) @ dagger(v)


def psd_project_stack(mats: np.ndarray) -> np.ndarray:
    """PSD-project a stack of Hermitian matrices (batched eigh)."""
    h = 0.5 * (mats + np.conjugate(np.swapaxes(mats, -1, -2)))
    w, v = np.linalg.eigh(h)
    w = np.maximum(w, 0.0)
    return np.einsum("...ij,...j,...kj->...ik", v, w, np.conjugate(v))


def fibonacci_directions(n: int) -> np.ndarray:
    """n roughly uniform unit vectors on the sphere (golden-angle lattice)."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    phi = k * np.pi * (3.0 - np.sqrt(5.0))
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
