"""Temporal steering: assemblages, the temporal steerable weight (TSW), and
its non-Markovianity measure.

The TSW of an assemblage {sigma_{a|x}} is W = 1 - w' where w' solves

    maximize   Tr sum_lambda Y_lambda
    subject to sigma_{a|x} - sum_lambda q_lambda(a|x) Y_lambda >= 0  (all a, x)
               Y_lambda >= 0,

with q_lambda the deterministic response functions.  The substitution
Y_lambda = w * sigma_lambda absorbs the weight, so w' = Tr sum Y at optimum.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channels import DynamicalMap
from .errors import SolverError, ValidationError
from .linalg import I2, SX, SY, SZ, density_from_bloch, herm_eigvals, trace_norm
from .sdp import (STATUS_OPTIMAL, SdpConstraint, SdpProblem, solve_admm,
                  solve_oracle)
from .witnesses import MeasureResult, WitnessTrace, slope

PROJECTOR_TOL = 1e-10
PSD_TOL = 1e-9
NO_SIGNALING_TOL = 1e-9


@dataclass(frozen=True)
class MeasurementSet:
    """Projective qubit measurements; each setting is a (P_plus, P_minus) pair."""

    settings: tuple

    def __post_init__(self):
        sets = []
        for pair in self.settings:
            ops = tuple(np.array(p, dtype=complex) for p in pair)
            if len(ops) != 2:
                raise ValidationError("each setting needs exactly two projectors")
            for p in ops:
                if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                    raise ValidationError("projectors must be idempotent")
            if np.max(np.abs(ops[0] + ops[1] - I2)) > PROJECTOR_TOL:
                raise ValidationError("projectors of a setting must sum to identity")
            sets.append(ops)
        object.__setattr__(self, "settings", tuple(sets))

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @staticmethod
    def from_directions(directions) -> "MeasurementSet":
        pairs = []
        for v in directions:
            v = np.asarray(v, dtype=float)
            v = v / np.linalg.norm(v)
            pairs.append((density_from_bloch(v), density_from_bloch(-v)))
        return MeasurementSet(tuple(pairs))

    @staticmethod
    def pauli() -> "MeasurementSet":
        return MeasurementSet.from_directions(np.eye(3))


@dataclass(frozen=True)
class DeterministicStrategies:
    """q_lambda(a|x) tables: every deterministic answer assignment."""

    table: np.ndarray  # (n_lambda, n_settings), entries in {0, 1}

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        if t.ndim != 2 or not np.isin(t, (0, 1)).all():
            raise ValidationError("strategy table must be binary (n_lambda, n_settings)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n_strategies(self) -> int:
        return self.table.shape[0]

    def q(self, lam: int, a: int, x: int) -> int:
        return int(self.table[lam, x] == a)

    @staticmethod
    def all_deterministic(n_settings: int) -> "DeterministicStrategies":
        rows = list(itertools.product((0, 1), repeat=n_settings))
        return DeterministicStrategies(np.array(rows, dtype=int))


@dataclass(frozen=True)
class Assemblage:
    """Subnormalized conditional states sigma_{a|x}; traces carry p(a|x)."""

    members: dict  # (a, x) -> 2x2 ndarray
    t: float = 0.0

    def __post_init__(self):
        mem = {}
        n_set = 1 + max(x for _, x in self.members)
        reduced = None
        for x in range(n_set):
            tot = np.zeros((2, 2), dtype=complex)
            for a in (0, 1):
                if (a, x) not in self.members:
                    raise ValidationError(f"missing assemblage member (a={a}, x={x})")
                m = np.array(self.members[(a, x)], dtype=complex)
                if herm_min_eig(m) < -PSD_TOL:
                    raise ValidationError(
                        f"assemblage member (a={a}, x={x}) is not PSD")
                m.setflags(write=False)
                mem[(a, x)] = m
                tot = tot + m
            if reduced is None:
                reduced = tot
            elif np.max(np.abs(tot - reduced)) > NO_SIGNALING_TOL:
                raise ValidationError("no-signaling violated across settings")
        object.__setattr__(self, "members", mem)

    @property
    def n_settings(self) -> int:
        return 1 + max(x for _, x in self.members)

    def reduced_state(self) -> np.ndarray:
        return sum(self.members[(a, 0)] for a in (0, 1))

    def no_signaling_defect(self, state: Optional[np.ndarray] = None) -> float:
        ref = self.reduced_state() if state is None else state
        worst = 0.0
        for x in range(self.n_settings):
            tot = sum(self.members[(a, x)] for a in (0, 1))
            worst = max(worst, trace_norm(tot - ref))
        return worst

    def to_json_dict(self) -> dict:
        out = {"t": self.t, "members": {}}
        for (a, x), m in sorted(self.members.items()):
            out["members"][f"{a}|{x}"] = {"re": np.real(m).tolist(),
                                          "im": np.imag(m).tolist()}
        return out

    @staticmethod
    def from_json_dict(d: dict) -> "Assemblage":
        members = {}
        for key, m in d["members"].items():
            a, x = (int(s) for s in key.split("|"))
            members[(a, x)] = np.array(m["re"]) + 1j * np.array(m["im"])
        return Assemblage(members, t=float(d.get("t", 0.0)))


def herm_min_eig(a: np.ndarray) -> float:
    return float(herm_eigvals(0.5 * (a + a.conj().T)).min())


def make_assemblage(rho: np.ndarray, meas: MeasurementSet, fam: DynamicalMap,
                    t: float, check_cp: bool = True) -> Assemblage:
    """sigma_{a|x}(t) = Lambda(t)[Pi_{a|x} rho Pi_{a|x}] (subnormalized)."""
    if check_cp:
        fam.require_cptp(t)
    affine = fam.affine(t)
    members = {}
    for x, (p_plus, p_minus) in enumerate(meas.settings):
        for a, proj in enumerate((p_plus, p_minus)):
            members[(a, x)] = affine.apply_matrix(proj @ rho @ proj)
    return Assemblage(members, t=float(t))


def lhs_assemblage(strategies: DeterministicStrategies, weights, states,
                   t: float = 0.0) -> Assemblage:
    """Unsteerable assemblage sum_lambda P(lambda) q_lambda(a|x) sigma_lambda."""
    n_set = strategies.table.shape[1]
    members = {(a, x): np.zeros((2, 2), dtype=complex)
               for a in (0, 1) for x in range(n_set)}
    for lam in range(strategies.n_strategies):
        for x in range(n_set):
            a = int(strategies.table[lam, x])
            members[(a, x)] += weights[lam] * states[lam]
    return Assemblage(members, t=t)


# ---------------------------------------------------------------------------
# The TSW SDP

def tsw_problem(asm: Assemblage,
                strategies: Optional[DeterministicStrategies] = None) -> SdpProblem:
    if strategies is None:
        strategies = DeterministicStrategies.all_deterministic(asm.n_settings)
    n_lam = strategies.n_strategies
    variables = [(f"Y{lam}", 2) for lam in range(n_lam)]
    objective = {f"Y{lam}": np.eye(2, dtype=complex) for lam in range(n_lam)}
    constraints = [SdpConstraint(f"psd_Y{lam}", np.zeros((2, 2), dtype=complex),
                                 {f"Y{lam}": 1.0}) for lam in range(n_lam)]
    for (a, x), sigma in sorted(asm.members.items()):
        terms = {f"Y{lam}": -1.0 for lam in range(n_lam)
                 if strategies.q(lam, a, x)}
        constraints.append(SdpConstraint(f"m_{a}_{x}", sigma.astype(complex), terms))
    return SdpProblem(variables=variables, objective=objective,
                      constraints=constraints)


def tsw(asm: Assemblage, strategies: Optional[DeterministicStrategies] = None,
        tol: float = 1e-7, max_iter: int = 50_000,
        warm_start: Optional[tuple] = None) -> dict:
    """Temporal steerable weight of an assemblage.

    Returns {'W', 'primal', 'dual', 'gap', 'iterations', 'warm_state'}.
    Raises SolverError on non-convergence; the duality gap of an accepted
    solve is at most ``tol``.
    """
    problem = tsw_problem(asm, strategies)
    sol = solve_admm(problem, tol=tol, max_iter=max_iter, warm_start=warm_start)
    if sol.status != STATUS_OPTIMAL:
        raise SolverError(
            f"TSW solve did not converge (status {sol.status}, "
            f"residuals {sol.residuals})", residuals=sol.residuals, t=asm.t)
    w_prime = sol.objective_value
    w = 1.0 - w_prime
    if w < -1e-5 or w > 1.0 + 1e-5:
        raise SolverError(f"TSW out of range: W = {w}", t=asm.t)
    return {"W": float(min(max(w, 0.0), 1.0)), "primal": w_prime,
            "dual": sol.dual_objective, "gap": sol.gap,
            "iterations": sol.iterations, "warm_state": sol.warm_state}


def tsw_oracle_value(asm: Assemblage,
                     strategies: Optional[DeterministicStrategies] = None,
                     tol: float = 2e-6) -> float:
    """W from the independent barrier oracle (verification path)."""
    sol = solve_oracle(tsw_problem(asm, strategies), tol=tol)
    if sol.status != STATUS_OPTIMAL:
        raise SolverError(f"oracle TSW solve failed (status {sol.status})", t=asm.t)
    return float(1.0 - sol.objective_value)


# ---------------------------------------------------------------------------
# Traces and the measure

N_CHUNKS = 16  # fixed warm-start partition, independent of worker count


def _trace_chunk(args):
    (rho, meas, fam, times, tol, max_iter, check_cp) = args
    out = np.empty(len(times))
    gaps = np.empty(len(times))
    warm = None
    for i, t in enumerate(times):
        asm = make_assemblage(rho, meas, fam, float(t), check_cp=check_cp)
        try:
            res = tsw(asm, tol=tol, max_iter=max_iter, warm_start=warm)
        except SolverError as exc:
            raise SolverError(f"TSW solver failed at t = {t:.9g}: {exc}",
                              residuals=exc.residuals, t=float(t)) from exc
        out[i] = res["W"]
        gaps[i] = res["gap"]
        warm = res["warm_state"]
    return out, gaps


def tsw_trace(rho: np.ndarray, meas: MeasurementSet, fam: DynamicalMap,
              grid: np.ndarray, tol: float = 1e-7, max_iter: int = 50_000,
              check_cp: bool = True, workers: int = 1) -> WitnessTrace:
    """W(t) over a time grid.

    Consecutive solves are warm-started inside a fixed partition of the grid
    (N_CHUNKS chunks), so results do not depend on the worker count.
    """
    chunks = np.array_split(np.arange(grid.size), min(N_CHUNKS, grid.size))
    jobs = [(rho, meas, fam, grid[ix], tol, max_iter, check_cp)
            for ix in chunks if ix.size]
    if workers > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            results = pool.map(_trace_chunk, jobs)
    else:
        results = [_trace_chunk(j) for j in jobs]
    values = np.concatenate([r[0] for r in results])
    gaps = np.concatenate([r[1] for r in results])
    return WitnessTrace(grid, values, "TSW",
                        meta={"solver_tol": tol, "max_gap": float(gaps.max())})


def tsw_measure(trace: WitnessTrace):
    """N = int |dW/dt| dt + (W(t_max) - W(t_0)); normalized N/(1+N).

    Returns (raw, normalized) MeasureResults.  The trapezoid of |central
    differences| telescopes, so a monotone non-increasing W gives N = 0
    exactly.
    """
    h = float(trace.times[1] - trace.times[0])
    total_variation = float(np.trapezoid(np.abs(slope(trace.values, h)), dx=h))
    n_raw = total_variation + float(trace.values[-1] - trace.values[0])
    n_raw = max(n_raw, 0.0)
    grid_meta = {"t0": float(trace.times[0]), "t1": float(trace.times[-1]),
                 "steps": int(trace.times.size)}
    raw = MeasureResult(value=n_raw, kind="N_TSW_raw", grid=grid_meta, trace=trace)
    norm = MeasureResult(value=n_raw / (1.0 + n_raw), kind="N_TSW_normalized",
                         grid=grid_meta, extras={"raw": n_raw})
    return raw, norm
