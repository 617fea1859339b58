"""Qubit dynamical-map representations, conversions and validation.

A channel at fixed time is held as an :class:`AffineMap` (Bloch picture
x -> m @ x + kappa, i.e. the 4x4 block matrix [[1, 0], [kappa, m]]).
A one-parameter family of channels is a :class:`DynamicalMap`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (CpDomainError, DimensionError, IntegrationError,
                     NotCompletelyPositiveError, ValidationError)
from .linalg import (HERM_TOL, I2, PAULIS, SX, SY, SZ, dagger, herm_eigvals,
                     hermitize, partial_trace)

KRAUS_COMPLETENESS_TOL = 1e-9
IDENTITY_AT_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class AffineMap:
    """Bloch-affine form of a qubit map: x -> m @ x + kappa."""

    m: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        k = np.array(self.kappa, dtype=float).reshape(3)
        if m.shape != (3, 3):
            raise DimensionError(f"affine m must be 3x3, got {m.shape}")
        m.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "kappa", k)

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(np.eye(3), np.zeros(3))

    def matrix4(self) -> np.ndarray:
        """The 4x4 block matrix [[1, 0], [kappa, m]] acting on (1, x)."""
        f = np.zeros((4, 4))
        f[0, 0] = 1.0
        f[1:, 0] = self.kappa
        f[1:, 1:] = self.m
        return f

    @staticmethod
    def from_matrix4(f: np.ndarray) -> "AffineMap":
        return AffineMap(f[1:, 1:], f[1:, 0])

    def is_unital(self, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(self.kappa)) <= tol

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other (apply ``other`` first)."""
        return AffineMap(self.m @ other.m, self.kappa + self.m @ other.kappa)

    def apply_bloch(self, x) -> np.ndarray:
        return self.m @ np.asarray(x, dtype=float) + self.kappa

    def apply_matrix(self, b: np.ndarray) -> np.ndarray:
        """Action on an arbitrary 2x2 operator via its (complex) Pauli expansion."""
        b0 = 0.5 * np.trace(b)
        coeffs = np.array([0.5 * np.trace(s @ b) for s in (SX, SY, SZ)])
        out_coeffs = self.m @ coeffs
        out = b0 * (I2 + self.kappa[0] * SX + self.kappa[1] * SY + self.kappa[2] * SZ)
        return out + out_coeffs[0] * SX + out_coeffs[1] * SY + out_coeffs[2] * SZ

    def apply_density(self, rho: np.ndarray) -> np.ndarray:
        return self.apply_matrix(rho)

    def inverse(self, cond_threshold: float = 1e12):
        """Inverse affine map; falls back to Moore-Penrose above ``cond_threshold``.

        Returns (inverse_map, used_pseudo_inverse).
        """
        cond = np.linalg.cond(self.m)
        if not np.isfinite(cond) or cond > cond_threshold:
            minv = np.linalg.pinv(self.m)
            used_pinv = True
        else:
            minv = np.linalg.inv(self.m)
            used_pinv = False
        return AffineMap(minv, -minv @ self.kappa), used_pinv


@dataclass(frozen=True)
class KrausSet:
    """A finite set of 2x2 Kraus operators with sum_j K_j^dag K_j = I."""

    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.operators)
        for k in ops:
            if k.shape != (2, 2):
                raise DimensionError(f"Kraus operators must be 2x2, got {k.shape}")
            k.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        defect = self.completeness_defect()
        if defect > KRAUS_COMPLETENESS_TOL:
            raise ValidationError(
                f"Kraus completeness violated: |sum K^dag K - I| = {defect:.3e}")

    def completeness_defect(self) -> float:
        s = sum(dagger(k) @ k for k in self.operators)
        return float(np.max(np.abs(s - I2)))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.operators)


def affine_from_kraus(kraus: KrausSet) -> AffineMap:
    """Pauli-basis matrix elements m_ij = Tr(sigma_i K[sigma_j]) / 2."""
    m = np.empty((3, 3))
    for j, sj in enumerate((SX, SY, SZ)):
        img = kraus.apply(sj)
        for i, si in enumerate((SX, SY, SZ)):
            m[i, j] = 0.5 * np.trace(si @ img).real
    img_id = kraus.apply(I2)
    kappa = np.array([0.5 * np.trace(s @ img_id).real for s in (SX, SY, SZ)])
    return AffineMap(m, kappa)


def choi_from_affine(affine: AffineMap) -> np.ndarray:
    """Choi matrix (I (x) Lambda)[|Psi><Psi|], |Psi> = |00> + |11> unnormalized."""
    chi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1.0
            chi[2 * i:2 * i + 2, 2 * j:2 * j + 2] = affine.apply_matrix(e)
    return hermitize(chi)


def apply_channel_4x4(affine: AffineMap, x: np.ndarray) -> np.ndarray:
    """(I (x) Lambda)[X] for a 4x4 operator X, acting on the second factor."""
    y = np.empty((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            y[2 * i:2 * i + 2, 2 * j:2 * j + 2] = affine.apply_matrix(
                x[2 * i:2 * i + 2, 2 * j:2 * j + 2])
    return y


def kraus_from_affine(affine: AffineMap, tol: float = 1e-9) -> KrausSet:
    """Kraus operators from the eigendecomposition of the Choi matrix.

    Raises :class:`NotCompletelyPositiveError` carrying the minimum Choi
    eigenvalue when the map is not CP.
    """
    chi = choi_from_affine(affine)
    w, v = np.linalg.eigh(chi)
    if w.min() < -tol:
        raise NotCompletelyPositiveError(
            f"affine map is not CP: min Choi eigenvalue {w.min():.6e}",
            min_choi_eig=float(w.min()))
    ops = []
    for val, vec in zip(w, v.T):
        if val > tol:
            ops.append(np.sqrt(val) * vec.reshape(2, 2).T)
    return KrausSet(tuple(ops))


@dataclass(frozen=True)
class CptpReport:
    cp: bool
    min_choi_eig: float
    tp_defect: float


def is_cptp_affine(affine: AffineMap, tol: float = 1e-9) -> CptpReport:
    chi = choi_from_affine(affine)
    min_eig = float(herm_eigvals(chi).min())
    tp = float(np.linalg.norm(partial_trace(chi, traced="second") - I2))
    return CptpReport(cp=min_eig >= -tol, min_choi_eig=min_eig, tp_defect=tp)


@dataclass(frozen=True)
class GeneratorSpec:
    """Time-local generator: sum_j gamma_j(t) (L_j . L_j^dag - {L_j^dag L_j, .}/2).

    ``lindblad_ops`` is a sequence of (L_j, rate_fn) pairs; ``hamiltonian_fn``
    optionally adds -i[H(t), .].
    """

    lindblad_ops: tuple
    hamiltonian_fn: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        ops = tuple((np.array(L, dtype=complex), fn) for (L, fn) in self.lindblad_ops)
        object.__setattr__(self, "lindblad_ops", ops)

    def check_rates(self, t: float, bound: float = 1e8) -> None:
        """Raise when any rate is non-finite (or absurdly large) at time t."""
        for _, rate_fn in self.lindblad_ops:
            try:
                g = rate_fn(t)
            except ZeroDivisionError:
                raise IntegrationError(f"decay rate singular at t = {t:.9g}", t=t) from None
            if not np.isfinite(g) or abs(g) > bound:
                raise IntegrationError(f"decay rate singular at t = {t:.9g}", t=t)

    def act(self, rho: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        if self.hamiltonian_fn is not None:
            h = self.hamiltonian_fn(t)
            out += -1j * (h @ rho - rho @ h)
        for L, rate_fn in self.lindblad_ops:
            g = rate_fn(t)
            if not np.isfinite(g):
                raise IntegrationError(f"decay rate singular at t = {t:.9g}", t=t)
            Ld = dagger(L)
            LdL = Ld @ L
            out += g * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
        return out

    def bloch_generator(self, t: float) -> np.ndarray:
        """4x4 real generator of the (1, x) vector: d/dt (1, x) = G (1, x)."""
        g = np.zeros((4, 4))
        img_id = self.act(I2, t)
        for k, sk in enumerate((SX, SY, SZ)):
            g[k + 1, 0] = 0.5 * np.trace(sk @ img_id).real
        for i, si in enumerate((SX, SY, SZ)):
            img = self.act(si, t)
            for k, sk in enumerate((SX, SY, SZ)):
                g[k + 1, i + 1] = 0.5 * np.trace(sk @ img).real
        return g


def propagate_generator(gen: GeneratorSpec, t: float, dt: float,
                        f0: Optional[np.ndarray] = None, t0: float = 0.0) -> AffineMap:
    """Time-ordered product of midpoint-rule exponentials up to time t.

    Steps have size <= dt (second-order midpoint exponential stepping).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t < t0:
        raise ValueError("t must be >= t0")
    f = np.eye(4) if f0 is None else np.array(f0, dtype=float)
    span = t - t0
    if span == 0:
        return AffineMap.from_matrix4(f)
    nsteps = max(1, int(np.ceil(span / dt)))
    h = span / nsteps
    gen.check_rates(t0)
    for k in range(nsteps):
        tm = t0 + (k + 0.5) * h
        gen.check_rates(tm)
        gen.check_rates(t0 + (k + 1) * h)
        g = gen.bloch_generator(tm)
        f = expm(g * h) @ f
    return AffineMap.from_matrix4(f)


class DynamicalMap:
    """A one-parameter family of qubit channels on a time domain.

    The Bloch-affine representation is always available; Kraus and generator
    representations are attached when the family provides them.
    """

    def __init__(self, name: str, affine_fn: Callable[[float], AffineMap],
                 domain: tuple = (0.0, np.inf),
                 kraus_fn: Optional[Callable[[float], KrausSet]] = None,
                 generator: Optional[GeneratorSpec] = None,
                 params: object = None,
                 pauli_lambdas: Optional[Callable[[float], np.ndarray]] = None,
                 pc_funcs: Optional[dict] = None,
                 check_identity: bool = True):
        self.name = name
        self._affine_fn = affine_fn
        self.domain = (float(domain[0]), float(domain[1]))
        self._kraus_fn = kraus_fn
        self.generator = generator
        self.params = params
        self.pauli_lambdas = pauli_lambdas
        self.pc_funcs = pc_funcs
        if check_identity:
            a0 = affine_fn(self.domain[0])
            defect = max(np.max(np.abs(a0.m - np.eye(3))), np.max(np.abs(a0.kappa)))
            if defect > IDENTITY_AT_ZERO_TOL:
                raise ValidationError(
                    f"map '{name}' is not the identity at t0 (defect {defect:.3e})")

    def _check_domain(self, t: float) -> None:
        lo, hi = self.domain
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise ValueError(f"t = {t} outside domain [{lo}, {hi}] of map '{self.name}'")

    def affine(self, t: float) -> AffineMap:
        self._check_domain(t)
        return self._affine_fn(t)

    def kraus(self, t: float) -> KrausSet:
        self._check_domain(t)
        if self._kraus_fn is not None:
            return self._kraus_fn(t)
        return kraus_from_affine(self.affine(t))

    def choi(self, t: float) -> np.ndarray:
        return choi_from_affine(self.affine(t))

    def apply(self, rho: np.ndarray, t: float) -> np.ndarray:
        return self.affine(t).apply_density(rho)

    def is_cptp(self, t: float, tol: float = 1e-9) -> CptpReport:
        return is_cptp_affine(self.affine(t), tol=tol)

    def require_cptp(self, t: float, tol: float = 1e-9) -> None:
        rep = self.is_cptp(t, tol=tol)
        if not rep.cp:
            raise CpDomainError(
                f"map '{self.name}' is not CP at t = {t:.6g} "
                f"(min Choi eigenvalue {rep.min_choi_eig:.3e})",
                t=t, min_choi_eig=rep.min_choi_eig)


def from_generator(name: str, gen: GeneratorSpec, domain: tuple,
                   dt: float = 1e-4, params: object = None) -> DynamicalMap:
    """Dynamical map obtained by propagating a generator.

    Propagation is incremental: results are checkpointed on a grid of step
    ``dt`` so sweeps over ascending time grids stay O(n).
    """
    cache = {0: np.eye(4)}

    def affine_fn(t: float) -> AffineMap:
        key = int(np.floor((t - domain[0]) / dt + 1e-12))
        if key not in cache:
            below = max(k for k in cache if k <= key)
            f = cache[below]
            for k in range(below, key):
                tk = domain[0] + k * dt
                g = gen.bloch_generator(tk + 0.5 * dt)
                f = expm(g * dt) @ f
                cache[k + 1] = f
        t_reached = domain[0] + key * dt
        if t - t_reached > 1e-15:
            return propagate_generator(gen, t, dt, f0=cache[key], t0=t_reached)
        return AffineMap.from_matrix4(cache[key])

    return DynamicalMap(name, affine_fn, domain=domain, generator=gen, params=params)


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2); in [1/2, 1] for qubit states."""
    return float(np.trace(rho @ rho).real)
