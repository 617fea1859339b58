"""Distance-based and pseudo-density-matrix witnesses of non-Markovianity.

Witness conventions:
  * trace distance D = ||rho1 - rho2||_1 / 2
  * square-root quantum Jensen-Shannon divergence, base-2 logs
  * LCM: F(t) = log2 ||R(t)||_1 for the two-time pseudo-density matrix R
  * CCM: mu(t), the short-time rate of intermediate-map trace-norm excess;
    two routes, see :func:`ccm_mu`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import DynamicalMap, apply_channel_4x4
from .divisibility import intermediate_step
from .errors import ValidationError
from .linalg import (I2, SWAP, fibonacci_directions, herm_eig, kron,
                     trace_norm)

WITNESS_KINDS = ("TD", "QJSD", "LCM", "CCM_mu", "TSW")
MEASURE_KINDS = ("BLP_TD", "BLP_QJSD", "N_LCM", "N_CCM",
                 "N_TSW_raw", "N_TSW_normalized")

MAX_MIX = 0.5 * I2

DEFAULT_CCM_EPS_FACTOR = 1e-4


# ---------------------------------------------------------------------------
# Elementary distances and entropies

def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    return 0.5 * trace_norm(rho1 - rho2)


def vn_entropy_bits(rho: np.ndarray, floor: float = 1e-15) -> float:
    w, _ = herm_eig(rho)
    w = w[w > floor]
    return float(-(w * np.log2(w)).sum())


def rel_entropy_bits(x: np.ndarray, y: np.ndarray, floor: float = 1e-15) -> float:
    """Umegaki relative entropy Tr(x log x - x log y) in bits.

    Spectral form with the 0 log 0 = 0 convention; +inf when the support of
    x leaks outside the support of y.
    """
    wx, vx = herm_eig(x)
    wy, vy = herm_eig(y)
    overlap = np.abs(vx.conj().T @ vy) ** 2
    sx = float(sum(a * np.log2(a) for a in wx if a > floor))
    cross = 0.0
    for i, a in enumerate(wx):
        if a <= floor:
            continue
        for j, b in enumerate(wy):
            o = overlap[i, j]
            if o <= 1e-16:
                continue
            if b <= floor:
                return np.inf
            cross += a * o * np.log2(b)
    return sx - cross


def qjsd_divergence(rho1: np.ndarray, rho2: np.ndarray) -> float:
    m = 0.5 * (rho1 + rho2)
    return 0.5 * (rel_entropy_bits(rho1, m) + rel_entropy_bits(rho2, m))


def qjsd_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Square root of the quantum Jensen-Shannon divergence (a metric)."""
    return float(np.sqrt(max(qjsd_divergence(rho1, rho2), 0.0)))


# ---------------------------------------------------------------------------
# Traces and measures as data

@dataclass(frozen=True)
class WitnessTrace:
    times: np.ndarray
    values: np.ndarray
    witness_kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if self.witness_kind not in WITNESS_KINDS:
            raise ValidationError(f"unknown witness kind {self.witness_kind!r}")
        if t.shape != v.shape or t.ndim != 1:
            raise ValidationError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def csv_lines(self, header: Optional[dict] = None, timestamp: Optional[str] = None):
        lines = [f"# witness: {self.witness_kind}"]
        merged = dict(self.meta)
        if header:
            merged.update(header)
        for key in sorted(merged):
            lines.append(f"# {key}: {json.dumps(merged[key], sort_keys=True, default=str)}")
        if timestamp is not None:
            lines.append(f"# generated: {timestamp}")
        lines.append("t,value")
        for t, v in zip(self.times, self.values):
            lines.append(f"{t:.17g},{v:.17g}")
        return lines

    def to_csv(self, path, header: Optional[dict] = None, timestamp: Optional[str] = None):
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(self.csv_lines(header, timestamp)) + "\n")

    def to_json_dict(self) -> dict:
        return {"witness_kind": self.witness_kind,
                "times": self.times.tolist(),
                "values": self.values.tolist(),
                "meta": self.meta}


@dataclass(frozen=True)
class MeasureResult:
    value: float
    kind: str
    grid: dict = field(default_factory=dict)
    optimization: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    trace: Optional[WitnessTrace] = None

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValidationError(f"unknown measure kind {self.kind!r}")
        if self.value < -1e-12:
            raise ValidationError(f"measure value must be >= 0, got {self.value}")

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "grid": self.grid,
                "optimization": self.optimization, "extras": self.extras}


def make_grid(t0: float, t1: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ValidationError("grid needs at least 2 steps")
    if not t0 < t1:
        raise ValidationError("grid needs t0 < t1")
    return np.linspace(t0, t1, steps)


def slope(values: np.ndarray, h: float) -> np.ndarray:
    """Central differences with one-sided endpoints."""
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    d[0] = (values[1] - values[0]) / h
    d[-1] = (values[-1] - values[-2]) / h
    return d


def positive_slope_integral(values: np.ndarray, h: float) -> float:
    """Trapezoid of the clipped derivative (the BLP-style integral)."""
    return float(np.trapezoid(np.maximum(slope(values, h), 0.0), dx=h))


# ---------------------------------------------------------------------------
# BLP distinguishability measure

def _h2_bits(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 1e-300, 1.0)
    q = np.clip(1.0 - p, 1e-300, 1.0)
    return -(p * np.log2(p) + q * np.log2(q))


def _affine_arrays(fam: DynamicalMap, grid: np.ndarray):
    ms = np.empty((grid.size, 3, 3))
    ks = np.empty((grid.size, 3))
    for i, t in enumerate(grid):
        a = fam.affine(float(t))
        ms[i] = a.m
        ks[i] = a.kappa
    return ms, ks


def _check_cp_on_grid(fam: DynamicalMap, grid: np.ndarray) -> None:
    for t in grid:
        fam.require_cptp(float(t))


def pair_directions(n_pairs: int = 64, include_axes: bool = True) -> np.ndarray:
    dirs = fibonacci_directions(n_pairs)
    if include_axes:
        dirs = np.vstack([dirs, np.eye(3)])
    return dirs


def blp_measure(fam: DynamicalMap, distance_kind: str, grid: np.ndarray,
                n_pairs: int = 64, include_axes: bool = True,
                check_cp: bool = True) -> MeasureResult:
    """BLP measure: positive-slope integral of the pair distance, maximized
    over antipodal pure-state pairs on a Fibonacci direction grid.

    For qubits both distances are evaluated in closed form from Bloch images:
    D_TD = |M v| and the QJSD entropies are functions of the Bloch norms.
    """
    if distance_kind not in ("td", "qjsd"):
        raise ValidationError(f"distance_kind must be 'td' or 'qjsd', got {distance_kind!r}")
    if check_cp:
        _check_cp_on_grid(fam, grid)
    h = float(grid[1] - grid[0])
    ms, ks = _affine_arrays(fam, grid)
    dirs = pair_directions(n_pairs, include_axes)
    imgs = np.einsum("tij,pj->tpi", ms, dirs)        # M(t) v_p
    if distance_kind == "td":
        dvals = np.linalg.norm(imgs, axis=-1)        # (T, P)
    else:
        plus = imgs + ks[:, None, :]
        minus = -imgs + ks[:, None, :]
        n_plus = np.linalg.norm(plus, axis=-1)
        n_minus = np.linalg.norm(minus, axis=-1)
        n_mid = np.linalg.norm(ks, axis=-1)[:, None]
        div = _h2_bits((1 + n_mid) / 2) - 0.5 * (_h2_bits((1 + n_plus) / 2)
                                                 + _h2_bits((1 + n_minus) / 2))
        dvals = np.sqrt(np.maximum(div, 0.0))
    # best pair by measure; ties broken by mean distance so the reported
    # trace is the optimal-distinguishability pair even when all integrals are 0
    best_val, best_p, best_avg = -1.0, 0, -1.0
    for p in range(dirs.shape[0]):
        val = positive_slope_integral(dvals[:, p], h)
        avg = float(dvals[:, p].mean())
        if val > best_val + 1e-15 or (abs(val - best_val) <= 1e-15 and avg > best_avg):
            best_val, best_p, best_avg = val, p, avg
    kind = "BLP_TD" if distance_kind == "td" else "BLP_QJSD"
    trace = WitnessTrace(grid, dvals[:, best_p],
                         "TD" if distance_kind == "td" else "QJSD",
                         meta={"direction": dirs[best_p].tolist()})
    return MeasureResult(
        value=float(best_val), kind=kind,
        grid={"t0": float(grid[0]), "t1": float(grid[-1]), "steps": int(grid.size)},
        optimization={"n_pairs": int(dirs.shape[0]),
                      "pair_strategy": "antipodal-fibonacci+axes" if include_axes
                      else "antipodal-fibonacci",
                      "best_direction": dirs[best_p].tolist()},
        trace=trace)


# ---------------------------------------------------------------------------
# Pseudo-density matrix, LCM and CCM

@dataclass(frozen=True)
class PseudoDensityMatrix:
    r: np.ndarray
    input_state: np.ndarray
    source: tuple

    def __post_init__(self):
        r = np.asarray(self.r, dtype=complex)
        if r.shape != (4, 4):
            raise ValidationError(f"PDM must be 4x4, got {r.shape}")
        if abs(np.trace(r).real - 1.0) > 1e-9 or abs(np.trace(r).imag) > 1e-9:
            raise ValidationError(f"PDM trace must be 1, got {np.trace(r)}")
        if np.max(np.abs(r - r.conj().T)) > 1e-9:
            raise ValidationError("PDM must be Hermitian")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    def trace_norm(self) -> float:
        return trace_norm(self.r)

    def causality_f(self) -> float:
        """f = ||R||_1 - 1, the negativity-style causality monotone."""
        return self.trace_norm() - 1.0

    def log_causality(self) -> float:
        """F = log2 ||R||_1."""
        return float(np.log2(self.trace_norm()))


def pdm_base(rho: np.ndarray) -> np.ndarray:
    """{rho (x) I/2, S} with S the two-time correlation (SWAP) operator."""
    a = kron(rho, MAX_MIX)
    return a @ SWAP + SWAP @ a


def pdm(rho: np.ndarray, fam: DynamicalMap, t: float,
        check_cp: bool = True) -> PseudoDensityMatrix:
    """Two-point PDM R(t) = (I (x) Lambda(t))[{rho (x) I/2, S}]."""
    if check_cp:
        fam.require_cptp(t)
    r = apply_channel_4x4(fam.affine(t), pdm_base(rho))
    return PseudoDensityMatrix(r, rho, ("full", float(t)))


def lcm(rho: np.ndarray, fam: DynamicalMap, t: float, check_cp: bool = True) -> float:
    """Logarithmic causality F(t) = log2 ||R(t)||_1 (base 2: identity -> 1)."""
    return pdm(rho, fam, t, check_cp=check_cp).log_causality()


def lcm_trace(rho: np.ndarray, fam: DynamicalMap, grid: np.ndarray,
              check_cp: bool = True) -> WitnessTrace:
    if check_cp:
        _check_cp_on_grid(fam, grid)
    vals = [pdm(rho, fam, float(t), check_cp=False).log_causality() for t in grid]
    return WitnessTrace(grid, np.array(vals), "LCM")


def lcm_measure(rho: np.ndarray, fam: DynamicalMap, grid: np.ndarray,
                check_cp: bool = True) -> MeasureResult:
    trace = lcm_trace(rho, fam, grid, check_cp=check_cp)
    h = float(grid[1] - grid[0])
    val = positive_slope_integral(trace.values, h)
    return MeasureResult(value=val, kind="N_LCM",
                         grid={"t0": float(grid[0]), "t1": float(grid[-1]),
                               "steps": int(grid.size)},
                         trace=trace)


def ccm_mu(fam: DynamicalMap, t: float, eps: Optional[float] = None,
           rho: Optional[np.ndarray] = None, route: str = "pdm",
           baseline: str = "identity", richardson: bool = False):
    """Continuous causality witness mu(t) from the intermediate map V(t+eps, t).

    route='pdm' (default): mu = (||R_eps||_1 - B)/eps with R_eps the partial-
      transposed-Choi-style PDM of V and B the identity-map baseline
      (baseline='identity', B = ||{rho (x) I/2, S}||_1 = 2 for rho = I/2) or
      the literal constant 1 (baseline='literal', divergent as eps -> 0).
      Equals -2 * sum of canonical decay rates in the eps -> 0 limit.
    route='choi': mu = (||chi_V||_1/2 - 1)/eps on the trace-normalized
      intermediate Choi matrix; equals twice the summed magnitude of the
      negative canonical rates (an RHP-style negativity rate).

    Returns (mu, pseudo_inverse_used).
    """
    if route not in ("pdm", "choi"):
        raise ValidationError(f"route must be 'pdm' or 'choi', got {route!r}")
    if baseline not in ("identity", "literal"):
        raise ValidationError(f"baseline must be 'identity' or 'literal', got {baseline!r}")
    if rho is None:
        rho = MAX_MIX
    if eps is None:
        eps = DEFAULT_CCM_EPS_FACTOR * (fam.domain[1] - fam.domain[0])
    base = pdm_base(rho)
    b_val = trace_norm(base) if baseline == "identity" else 1.0

    def mu_at(e):
        if t + e > fam.domain[1] + 1e-12:
            v = intermediate_step(fam, t - e, e)  # left-sided step at the edge
        else:
            v = intermediate_step(fam, t, e)
        if route == "pdm":
            r_eps = apply_channel_4x4(v.affine, base)
            return (trace_norm(r_eps) - b_val) / e, v.pseudo_inverse_used
        chi = v.choi / 2.0
        return (trace_norm(chi) - 1.0) / e, v.pseudo_inverse_used

    if richardson:
        m1, p1 = mu_at(eps)
        m2, p2 = mu_at(eps / 2.0)
        return 2.0 * m2 - m1, (p1 or p2)
    return mu_at(eps)


def ccm_trace(fam: DynamicalMap, grid: np.ndarray, eps: Optional[float] = None,
              rho: Optional[np.ndarray] = None, route: str = "pdm",
              baseline: str = "identity", richardson: bool = False) -> WitnessTrace:
    vals = np.empty(grid.size)
    pinv_times = []
    for i, t in enumerate(grid):
        vals[i], used_pinv = ccm_mu(fam, float(t), eps=eps, rho=rho, route=route,
                                    baseline=baseline, richardson=richardson)
        if used_pinv:
            pinv_times.append(float(t))
    meta = {"route": route, "baseline": baseline}
    if pinv_times:
        meta["warning_pseudo_inverse_at"] = pinv_times
    return WitnessTrace(grid, vals, "CCM_mu", meta=meta)


def ccm_measure(fam: DynamicalMap, grid: np.ndarray, eps: Optional[float] = None,
                rho: Optional[np.ndarray] = None, route: str = "pdm",
                baseline: str = "identity", richardson: bool = False) -> MeasureResult:
    """Normalized CCM measure: int tanh(mu^+) / int chi, with 0/0 = 0.

    chi is the indicator of {mu > 0}.  The unnormalized integral of mu^+ is
    reported in ``extras['raw']``.
    """
    trace = ccm_trace(fam, grid, eps=eps, rho=rho, route=route,
                      baseline=baseline, richardson=richardson)
    h = float(grid[1] - grid[0])
    mu_pos = np.maximum(trace.values, 0.0)
    chi = (trace.values > 0.0).astype(float)
    denom = float(np.trapezoid(chi, dx=h))
    numer = float(np.trapezoid(np.tanh(mu_pos), dx=h))
    norm = 0.0 if denom == 0.0 else numer / denom
    raw = float(np.trapezoid(mu_pos, dx=h))
    return MeasureResult(value=norm, kind="N_CCM",
                         grid={"t0": float(grid[0]), "t1": float(grid[-1]),
                               "steps": int(grid.size)},
                         extras={"raw": raw, "route": route, "baseline": baseline,
                                 "support_measure": denom},
                         trace=trace)
