"""Intermediate maps, CP/P-divisibility verdicts and canonical decay rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import AffineMap, DynamicalMap, choi_from_affine
from .errors import ValidationError
from .families import phase_cov_rates
from .linalg import fibonacci_directions, herm_eigvals

COND_THRESHOLD = 1e12
DEFAULT_EPS_FACTOR = 1e-4


@dataclass(frozen=True)
class IntermediateMap:
    """V(to_t, from_t) = F(to_t) F(from_t)^{-1} in the Bloch-affine picture."""

    from_t: float
    to_t: float
    affine: AffineMap
    choi: np.ndarray
    min_choi_eig: float
    pseudo_inverse_used: bool


def intermediate(fam: DynamicalMap, s: float, t: float,
                 cond_threshold: float = COND_THRESHOLD) -> IntermediateMap:
    """Intermediate map between times s <= t.

    A singular F(s) (condition number above ``cond_threshold``) falls back to
    the Moore-Penrose pseudo-inverse and is flagged, never raised.
    """
    if not (fam.domain[0] - 1e-12 <= s <= t):
        raise ValueError(f"need t0 <= s <= t, got s = {s}, t = {t}")
    f_t = fam.affine(t)
    f_s = fam.affine(s)
    f_s_inv, used_pinv = f_s.inverse(cond_threshold=cond_threshold)
    v = f_t.compose(f_s_inv)
    chi = choi_from_affine(v)
    min_eig = float(herm_eigvals(chi).min())
    return IntermediateMap(from_t=float(s), to_t=float(t), affine=v, choi=chi,
                           min_choi_eig=min_eig, pseudo_inverse_used=used_pinv)


def intermediate_step(fam: DynamicalMap, t: float, eps: float,
                      cond_threshold: float = COND_THRESHOLD) -> IntermediateMap:
    return intermediate(fam, t, t + eps, cond_threshold=cond_threshold)


def is_p_divisible_step(v: IntermediateMap, n_probe: int = 200,
                        tol: float = 1e-9) -> bool:
    """True iff V keeps n_probe Bloch-boundary states inside the ball."""
    if n_probe < 100:
        raise ValueError("n_probe must be at least 100")
    dirs = fibonacci_directions(n_probe)
    imgs = dirs @ v.affine.m.T + v.affine.kappa
    return bool(np.linalg.norm(imgs, axis=1).max() <= 1.0 + tol)


# Pauli-channel rate extraction: lambda_i' = -2 (gamma_j + gamma_k) lambda_i.
# Solving the 3x3 system for gamma from the log-derivatives s_i = lambda_i'/lambda_i.
_PAIR_MATRIX = np.array([[0.0, 1.0, 1.0],
                         [1.0, 0.0, 1.0],
                         [1.0, 1.0, 0.0]])


def canonical_rates(fam: DynamicalMap, t: float, dt: float = 1e-5) -> np.ndarray:
    """Canonical decay rates gamma_i(t) of a Pauli-diagonal or phase-covariant map.

    Pauli families solve the linear system from {lambda_i, lambda_i'} with
    central differences of step ``dt``; phase-covariant families delegate to
    :func:`phase_cov_rates` (returned as [gamma_plus/2... ] -> the three Choi
    eigenvalue rates [gamma_plus/2, gamma_minus/2, gamma_z]).
    """
    if fam.pauli_lambdas is not None:
        lo = max(t - dt, fam.domain[0])
        hi = t + dt
        lam_mid = np.asarray(fam.pauli_lambdas(t), dtype=float)
        if np.any(lam_mid <= 0.0):
            raise ValidationError(
                f"singular rate extraction at t = {t:.6g}: lambda <= 0")
        dlam = (np.asarray(fam.pauli_lambdas(hi), dtype=float)
                - np.asarray(fam.pauli_lambdas(lo), dtype=float)) / (hi - lo)
        s = dlam / lam_mid
        return np.linalg.solve(_PAIR_MATRIX, -0.5 * s)
    if fam.pc_funcs is not None:
        r = phase_cov_rates(fam, t, step=dt)
        return np.array([0.5 * r["gamma_plus"], 0.5 * r["gamma_minus"], r["gamma_z"]])
    raise ValidationError(
        f"map '{fam.name}' is neither Pauli-diagonal nor phase-covariant")
