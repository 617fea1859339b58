"""The concrete qubit channel families studied by the package.

Four families: a dephasing channel with a sign-changing rate, a purely
non-unital generalized amplitude damping (GAD) channel, a piecewise
phase-covariant channel built from sigmoid-blended stages, and an eternally
non-Markovian (ENM) Pauli channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channels import (AffineMap, DynamicalMap, GeneratorSpec, KrausSet,
                       is_cptp_affine)
from .errors import ConfigError, CpDomainError, ValidationError
from .linalg import I2, SX, SY, SZ


# ---------------------------------------------------------------------------
# Parameter records (serializable channel configs)

@dataclass(frozen=True)
class DephasingParams:
    """gamma_z(t) = (1 + alpha e^{-t}) / (2 (1 - alpha sinh t))."""
    alpha: float = 5.0


@dataclass(frozen=True)
class GadParams:
    """Non-unital GAD: p(t) = sin^2(omega_p t), nu(t) = 1 - e^{-t}."""
    omega_p: float = 5.0


@dataclass(frozen=True)
class CounterexampleParams:
    """Three-stage sigmoid-blended phase-covariant channel.

    ``a_kappa`` has no default on purpose: it must be supplied explicitly.
    """
    a_par: float = 0.01
    a_perp: float = 1.01
    a_kappa: float = None
    mu1: float = 5.0
    mu2: float = 4.0
    alpha_s: float = 5.0
    t_ref: float = 1.0

    def __post_init__(self):
        if self.a_kappa is None:
            raise ConfigError("counterexample channel requires an explicit a_kappa")


@dataclass(frozen=True)
class EnmParams:
    """Eternally non-Markovian channel; ``route`` picks the construction."""
    c: float = 3.0
    route: str = "generator"

    def __post_init__(self):
        if self.route not in ("generator", "kraus"):
            raise ConfigError(f"enm route must be 'generator' or 'kraus', got {self.route!r}")


# ---------------------------------------------------------------------------
# Dephasing with rate gamma_z(t) = (1 + a e^{-t}) / (2 (1 - a sinh t))

def dephasing_rate(alpha: float) -> Callable[[float], float]:
    def gamma_z(t: float) -> float:
        den = 1.0 - alpha * np.sinh(t)
        if den == 0.0:
            return np.inf
        return (1.0 + alpha * np.exp(-t)) / (2.0 * den)
    return gamma_z


def dephasing_lambda(alpha: float) -> Callable[[float], float]:
    """Exact solution of lambda' = -2 gamma_z lambda: e^{-t} (1 - alpha sinh t)."""
    return lambda t: np.exp(-t) * (1.0 - alpha * np.sinh(t))


def family_dephasing(alpha: float = 5.0, t_max: float = 3.0) -> DynamicalMap:
    lam = dephasing_lambda(alpha)
    rate = dephasing_rate(alpha)

    def affine_fn(t):
        lv = lam(t)
        return AffineMap(np.diag([lv, lv, 1.0]), np.zeros(3))

    def kraus_fn(t):
        lv = lam(t)
        if abs(lv) > 1.0 + 1e-12:
            raise CpDomainError(
                f"dephasing map not CP at t = {t:.6g} (|lambda| = {abs(lv):.6f} > 1)",
                t=t, min_choi_eig=1.0 - abs(lv))
        q = min(max((1.0 - lv) / 2.0, 0.0), 1.0)
        return KrausSet((np.sqrt(1.0 - q) * I2, np.sqrt(q) * SZ))

    gen = GeneratorSpec(lindblad_ops=((SZ, rate),))
    return DynamicalMap(
        "dephasing", affine_fn, domain=(0.0, t_max), kraus_fn=kraus_fn,
        generator=gen, params=DephasingParams(alpha=alpha),
        pauli_lambdas=lambda t: np.array([lam(t), lam(t), 1.0]))


# ---------------------------------------------------------------------------
# Phase-covariant machinery (shared by GAD, counterexample and generic use)

def _phase_cov_affine(eta_par, eta_perp, kappa_z, phi):
    c, s = np.cos(phi), np.sin(phi)
    m = np.array([[eta_perp * c, -eta_perp * s, 0.0],
                  [eta_perp * s, eta_perp * c, 0.0],
                  [0.0, 0.0, eta_par]])
    return AffineMap(m, np.array([0.0, 0.0, kappa_z]))


def _phase_cov_kraus(eta_par, eta_perp, kappa_z, varphi):
    """The four canonical Kraus operators of a phase-covariant channel."""
    a2 = (1.0 - eta_par + kappa_z) / 2.0
    b2 = (1.0 - eta_par - kappa_z) / 2.0
    s = np.sqrt(kappa_z ** 2 + 4.0 * eta_perp ** 2)
    gp = (1.0 + eta_par + s) / 2.0
    gm = (1.0 + eta_par - s) / 2.0
    tol = 1e-12
    if min(a2, b2, gm) < -tol:
        raise CpDomainError(
            f"phase-covariant parameters violate CP "
            f"(min of [{a2:.3e}, {b2:.3e}, {gm:.3e}] < 0)",
            min_choi_eig=min(a2, b2, gm))
    a2, b2, gm = max(a2, 0.0), max(b2, 0.0), max(gm, 0.0)
    phi_mix = np.arctan2(2.0 * eta_perp, kappa_z + s)  # cot(phi) = (kappa + s) / (2 eta_perp)
    cp_, sp_ = np.cos(phi_mix), np.sin(phi_mix)
    e = np.exp(1j * varphi)
    k1 = np.sqrt(a2) * np.array([[0, 1], [0, 0]], dtype=complex)
    k2 = np.sqrt(b2) * np.array([[0, 0], [1, 0]], dtype=complex)
    k3 = np.sqrt(gp) * np.array([[cp_, 0], [0, sp_ * e]], dtype=complex)
    k4 = np.sqrt(gm) * np.array([[-sp_, 0], [0, cp_ * e]], dtype=complex)
    return KrausSet((k1, k2, k3, k4))


def family_phase_covariant(eta_par_fn: Callable[[float], float],
                           eta_perp_fn: Callable[[float], float],
                           kappa_fn: Callable[[float], float],
                           omega: float = 0.0,
                           theta_fn: Optional[Callable[[float], float]] = None,
                           domain: tuple = (0.0, 3.0),
                           name: str = "phase_covariant",
                           params: object = None,
                           validate: bool = True) -> DynamicalMap:
    """Phase-covariant family from its (eta_par, eta_perp, kappa) functions."""
    theta = theta_fn if theta_fn is not None else (lambda t: 0.0)

    def varphi(t):
        return omega * t + theta(t)

    def affine_fn(t):
        return _phase_cov_affine(eta_par_fn(t), eta_perp_fn(t), kappa_fn(t), varphi(t))

    def kraus_fn(t):
        return _phase_cov_kraus(eta_par_fn(t), eta_perp_fn(t), kappa_fn(t), varphi(t))

    pc = {"eta_par": eta_par_fn, "eta_perp": eta_perp_fn, "kappa": kappa_fn,
          "theta": theta, "omega": omega}
    fam = DynamicalMap(name, affine_fn, domain=domain, kraus_fn=kraus_fn,
                       params=params, pc_funcs=pc)
    if validate:
        for t in np.linspace(domain[0], domain[1], 65):
            rep = is_cptp_affine(affine_fn(float(t)))
            if not rep.cp:
                raise CpDomainError(
                    f"{name}: CP violated at t = {t:.4f} "
                    f"(min Choi eigenvalue {rep.min_choi_eig:.3e})",
                    t=float(t), min_choi_eig=rep.min_choi_eig)
    return fam


def phase_cov_rates(fam: DynamicalMap, t: float, step: Optional[float] = None) -> dict:
    """Rates {h, gamma_plus, gamma_minus, gamma_z} of the phase-covariant
    master equation, from central differences of the channel functions.

    gamma_pm = +/- (kappa' -/+ (eta_par'/eta_par)(1 +/- kappa)) / 2
    gamma_z  = (eta_par'/eta_par - 2 eta_perp'/eta_perp) / 4
    """
    if fam.pc_funcs is None:
        raise ValidationError(f"map '{fam.name}' carries no phase-covariant functions")
    pc = fam.pc_funcs
    span = fam.domain[1] - fam.domain[0]
    h = step if step is not None else 1e-5 * max(span, 1.0)
    lo = max(t - h, fam.domain[0])
    hi = t + h

    def d(fn):
        return (fn(hi) - fn(lo)) / (hi - lo)

    ep, et, kz = pc["eta_par"](t), pc["eta_perp"](t), pc["kappa"](t)
    if ep == 0.0 or et == 0.0:
        raise ValidationError(f"singular rates at t = {t:.6g}: eta hit zero")
    dep, det, dkz = d(pc["eta_par"]), d(pc["eta_perp"]), d(pc["kappa"])
    sp = dep / ep
    se = det / et
    gp = 0.5 * (dkz - sp * (1.0 + kz))
    gm = -0.5 * (dkz + sp * (1.0 - kz))
    gz = 0.25 * (sp - 2.0 * se)
    return {"h": d(pc["theta"]), "gamma_plus": gp, "gamma_minus": gm, "gamma_z": gz}


# ---------------------------------------------------------------------------
# Purely non-unital GAD channel

def family_gad(omega_p: float = 5.0, t_max: float = 3.0,
               p_fn: Optional[Callable[[float], float]] = None,
               nu_fn: Optional[Callable[[float], float]] = None) -> DynamicalMap:
    """GAD with eta_par = 1 - nu, eta_perp = sqrt(1 - nu), kappa = (1 - 2p) nu."""
    p = p_fn if p_fn is not None else (lambda t: np.sin(omega_p * t) ** 2)
    nu = nu_fn if nu_fn is not None else (lambda t: 1.0 - np.exp(-t))

    def check(t):
        nv = nu(t)
        if not (0.0 <= nv <= 1.0):
            raise ValidationError(f"GAD nu(t) = {nv:.4f} outside [0, 1] at t = {t:.4g}")
        return nv

    def eta_par(t):
        return 1.0 - check(t)

    def eta_perp(t):
        return np.sqrt(1.0 - check(t))

    def kappa(t):
        return (1.0 - 2.0 * p(t)) * nu(t)

    def kraus_fn(t):
        nv, pv = check(t), p(t)
        k1 = np.sqrt(1 - pv) * np.array([[1, 0], [0, np.sqrt(1 - nv)]], dtype=complex)
        k2 = np.sqrt(1 - pv) * np.array([[0, np.sqrt(nv)], [0, 0]], dtype=complex)
        k3 = np.sqrt(pv) * np.array([[np.sqrt(1 - nv), 0], [0, 1]], dtype=complex)
        k4 = np.sqrt(pv) * np.array([[0, 0], [np.sqrt(nv), 0]], dtype=complex)
        return KrausSet((k1, k2, k3, k4))

    def affine_fn(t):
        return _phase_cov_affine(eta_par(t), eta_perp(t), kappa(t), 0.0)

    pc = {"eta_par": eta_par, "eta_perp": eta_perp, "kappa": kappa,
          "theta": lambda t: 0.0, "omega": 0.0}
    return DynamicalMap("gad", affine_fn, domain=(0.0, t_max), kraus_fn=kraus_fn,
                        params=GadParams(omega_p=omega_p), pc_funcs=pc)


# ---------------------------------------------------------------------------
# Sigmoid-blended three-stage counterexample channel

def _sigmoid(x, alpha):
    return 1.0 / (1.0 + np.exp(-alpha * x))


def counterexample_eta(params: CounterexampleParams, a_last: float) -> Callable:
    mu1, mu2, als = params.mu1, params.mu2, params.alpha_s

    def eta(tau):
        return (np.exp(-mu1 * tau) * _sigmoid(1.0 - tau, als)
                + np.exp(-mu1) * np.exp(-mu2 * (tau - 1.0))
                * _sigmoid(tau - 1.0, als) * _sigmoid(2.0 - tau, als)
                + np.exp(-mu1 - mu2) * ((3.0 - tau) + a_last * (tau - 2.0))
                * _sigmoid(tau - 2.0, als))
    return eta


def counterexample_kappa(params: CounterexampleParams) -> Callable:
    ak, apar, als = params.a_kappa, params.a_par, params.alpha_s

    def kappa(tau):
        return (ak * tau * _sigmoid(2.0 - tau, als)
                + 2.0 * ak * ((3.0 - tau) + apar * (tau - 2.0))
                * _sigmoid(tau - 2.0, als))
    return kappa


def family_counterexample(params: CounterexampleParams,
                          tau_max: float = 3.0) -> DynamicalMap:
    """The stage-blended phase-covariant channel, gauged to the identity at 0.

    The raw stage functions give eta(0) slightly below 1 (sigmoid tails), so
    the family is right-composed with the inverse of its t = 0 slice; this
    leaves every intermediate map and all decay rates unchanged.
    """
    T = params.t_ref
    eta_par_raw = counterexample_eta(params, params.a_par)
    eta_perp_raw = counterexample_eta(params, params.a_perp)
    kappa_raw = counterexample_kappa(params)
    ep0, et0, k0 = eta_par_raw(0.0), eta_perp_raw(0.0), kappa_raw(0.0)

    def eta_par(t):
        return eta_par_raw(t / T) / ep0

    def eta_perp(t):
        return eta_perp_raw(t / T) / et0

    def kappa(t):
        return kappa_raw(t / T) - (eta_par_raw(t / T) / ep0) * k0

    return family_phase_covariant(
        eta_par, eta_perp, kappa, omega=0.0, domain=(0.0, tau_max * T),
        name="counterexample", params=params)


# ---------------------------------------------------------------------------
# Eternally non-Markovian channel

def family_enm(c: float = 3.0, route: str = "generator",
               t_max: float = 3.0) -> DynamicalMap:
    """ENM Pauli channel.

    route='generator': rates gamma_1 = gamma_2 = c/2, gamma_3 = -(c/2) tanh t,
      giving lambda_1 = lambda_2 = (e^{-t} cosh t)^c and lambda_3 = e^{-2ct}.
    route='kraus': Pauli mixture {sqrt(1-2k) I, sqrt(k) sx, sqrt(k) sy} with
      k(t) = (1 - e^{-ct})/4, giving lambda_1 = lambda_2 = (1 + e^{-ct})/2 and
      lambda_3 = e^{-ct}.  The identity weight is fixed by completeness.
    """
    params = EnmParams(c=c, route=route)
    if route == "generator":
        def lambdas(t):
            l12 = (np.exp(-t) * np.cosh(t)) ** c
            return np.array([l12, l12, np.exp(-2.0 * c * t)])

        gen = GeneratorSpec(lindblad_ops=(
            (SX, lambda t: c / 2.0),
            (SY, lambda t: c / 2.0),
            (SZ, lambda t: -(c / 2.0) * np.tanh(t)),
        ))
        kraus_fn = None
    else:
        def lambdas(t):
            e = np.exp(-c * t)
            return np.array([(1.0 + e) / 2.0, (1.0 + e) / 2.0, e])

        def kraus_fn(t):
            k = 0.25 * (1.0 - np.exp(-c * t))
            return KrausSet((np.sqrt(1.0 - 2.0 * k) * I2,
                             np.sqrt(k) * SX, np.sqrt(k) * SY))

        gen = None

    def affine_fn(t):
        return AffineMap(np.diag(lambdas(t)), np.zeros(3))

    return DynamicalMap("enm", affine_fn, domain=(0.0, t_max), kraus_fn=kraus_fn,
                        generator=gen, params=params, pauli_lambdas=lambdas)


# ---------------------------------------------------------------------------
# Config-record plumbing

_FAMILY_BUILDERS = {
    "dephasing": lambda cfg, t_max: family_dephasing(
        alpha=float(cfg.get("alpha", 5.0)), t_max=t_max),
    "gad": lambda cfg, t_max: family_gad(
        omega_p=float(cfg.get("omega_p", 5.0)), t_max=t_max),
    "counterexample": lambda cfg, t_max: family_counterexample(
        CounterexampleParams(
            a_par=float(cfg.get("a_par", 0.01)),
            a_perp=float(cfg.get("a_perp", 1.01)),
            a_kappa=(float(cfg["a_kappa"]) if "a_kappa" in cfg and cfg["a_kappa"] is not None
                     else None),
            mu1=float(cfg.get("mu1", 5.0)),
            mu2=float(cfg.get("mu2", 4.0)),
            alpha_s=float(cfg.get("alpha_s", 5.0)),
            t_ref=float(cfg.get("t_ref", 1.0))),
        tau_max=t_max / float(cfg.get("t_ref", 1.0))),
    "enm": lambda cfg, t_max: family_enm(
        c=float(cfg.get("c", 3.0)), route=str(cfg.get("route", "generator")),
        t_max=t_max),
}


def family_from_config(cfg: dict, t_max: float = 3.0) -> DynamicalMap:
    """Build a named family from a plain config dict ({'family': ..., params})."""
    cfg = dict(cfg)
    name = cfg.pop("family", None)
    if name not in _FAMILY_BUILDERS:
        raise ConfigError(
            f"unknown channel family {name!r}; expected one of {sorted(_FAMILY_BUILDERS)}")
    return _FAMILY_BUILDERS[name](cfg, t_max)


def family_to_config(fam: DynamicalMap) -> dict:
    p = fam.params
    if isinstance(p, DephasingParams):
        return {"family": "dephasing", "alpha": p.alpha}
    if isinstance(p, GadParams):
        return {"family": "gad", "omega_p": p.omega_p}
    if isinstance(p, CounterexampleParams):
        return {"family": "counterexample", "a_par": p.a_par, "a_perp": p.a_perp,
                "a_kappa": p.a_kappa, "mu1": p.mu1, "mu2": p.mu2,
                "alpha_s": p.alpha_s, "t_ref": p.t_ref}
    if isinstance(p, EnmParams):
        return {"family": "enm", "c": p.c, "route": p.route}
    raise ConfigError(f"map '{fam.name}' has no serializable parameter record")
