"""A small dense semidefinite-program solver with an independent oracle.

Problems are stated in the "max" form

    maximize   sum_i Tr(C_i Y_i)
    subject to K_j + sum_i w_ji Y_i  >= 0   (PSD) for every constraint j,

over Hermitian variable blocks Y_i.  Variable positivity is expressed as an
ordinary constraint (K = 0, weight +1).

Two solvers:

* :func:`solve_admm` - operator splitting: alternating projections onto the
  affine constraint set (one dense factorization, reused) and the PSD cone
  (per-block eigendecomposition), with over-relaxation and residual-balanced
  penalty updates.  Deterministic: fixed iteration order, no randomization.

* :func:`solve_oracle` - an unrelated algorithm used for cross-checks: a
  log-det barrier path-following method on the reduced dual problem, with a
  rigorous duality-gap certificate from the central path.  It shares no
  projection or factorization code with the ADMM path (its 2x2 spectral
  steps are closed-form).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SolverError, ValidationError
from .linalg import herm_defect, psd_project_stack

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible"


# ---------------------------------------------------------------------------
# Hermitian <-> isometric real vector

def herm_basis(d: int):
    basis = []
    for i in range(d):
        b = np.zeros((d, d), dtype=complex)
        b[i, i] = 1.0
        basis.append(b)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            b = np.zeros((d, d), dtype=complex)
            b[i, j] = b[j, i] = inv_sqrt2
            basis.append(b)
            b = np.zeros((d, d), dtype=complex)
            b[i, j] = -1j * inv_sqrt2
            b[j, i] = 1j * inv_sqrt2
            basis.append(b)
    return basis


def herm_to_rvec(a: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    out = np.empty(d * d)
    k = 0
    for i in range(d):
        out[k] = a[i, i].real
        k += 1
    s2 = np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            out[k] = s2 * a[i, j].real
            out[k + 1] = -s2 * a[i, j].imag
            k += 2
    return out


def rvec_to_herm(x: np.ndarray, d: int) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    k = 0
    for i in range(d):
        a[i, i] = x[k]
        k += 1
    inv_s2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            re, im = x[k] * inv_s2, -x[k + 1] * inv_s2
            a[i, j] = re + 1j * im
            a[j, i] = re - 1j * im
            k += 2
    return a


# ---------------------------------------------------------------------------
# Problem statement

@dataclass(frozen=True)
class SdpConstraint:
    name: str
    constant: np.ndarray
    terms: dict  # variable name -> real weight

    def dim(self) -> int:
        return self.constant.shape[0]


@dataclass
class SdpProblem:
    """Block SDP in max form; see the module docstring."""

    variables: list          # (name, dim) pairs
    objective: dict          # name -> Hermitian coefficient matrix
    constraints: list        # SdpConstraint

    def __post_init__(self):
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable names")
        dims = dict(self.variables)
        for n, c in self.objective.items():
            if n not in dims:
                raise ValidationError(f"objective references unknown variable {n!r}")
            if c.shape != (dims[n], dims[n]) or herm_defect(c) > 1e-10:
                raise ValidationError(f"objective coefficient for {n!r} must be Hermitian")
        for con in self.constraints:
            if herm_defect(con.constant) > 1e-10:
                raise ValidationError(f"constraint {con.name!r} constant must be Hermitian")
            for n in con.terms:
                if n not in dims:
                    raise ValidationError(f"constraint {con.name!r} references {n!r}")
                if dims[n] != con.dim():
                    raise ValidationError(
                        f"constraint {con.name!r}: block dim mismatch for {n!r}")

    def to_json_dict(self) -> dict:
        def mat(m):
            return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

        return {
            "variables": [[n, d] for n, d in self.variables],
            "objective": {n: mat(c) for n, c in self.objective.items()},
            "constraints": [{"name": c.name, "constant": mat(c.constant),
                             "terms": c.terms} for c in self.constraints],
        }

    def dump_json(self, path):
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


@dataclass
class SdpSolution:
    blocks: dict
    objective_value: float
    dual_objective: float
    gap: float
    iterations: int
    status: str
    residuals: dict = field(default_factory=dict)
    warm_state: Optional[tuple] = None


# ---------------------------------------------------------------------------
# ADMM solver

class _AdmmWorkspace:
    """Precomputed geometry of one SdpProblem (reusable across solves whose
    constants K_j change but whose structure does not)."""

    def __init__(self, problem: SdpProblem):
        self.problem = problem
        self.var_names = [n for n, _ in problem.variables]
        self.var_dims = dict(problem.variables)
        self.var_off = {}
        off = 0
        for n, d in problem.variables:
            self.var_off[n] = off
            off += d * d
        self.n_var = off
        self.con_off = {}
        self.con_dims = []
        for con in problem.constraints:
            self.con_off[con.name] = off
            self.con_dims.append(con.dim())
            off += con.dim() ** 2
        self.n_total = off
        self.m = self.n_total - self.n_var

        # constraint scaling by Frobenius norm of the constant block
        self.scale = np.ones(len(problem.constraints))
        for j, con in enumerate(problem.constraints):
            nf = float(np.linalg.norm(con.constant))
            if nf > 1e-6:
                self.scale[j] = 1.0 / nf

        a = np.zeros((self.m, self.n_total))
        b = np.zeros(self.m)
        row = 0
        for j, con in enumerate(problem.constraints):
            d2 = con.dim() ** 2
            f = self.scale[j]
            a[row:row + d2, self.con_off[con.name]:self.con_off[con.name] + d2] = np.eye(d2)
            for nme, w in con.terms.items():
                o = self.var_off[nme]
                a[row:row + d2, o:o + d2] -= f * w * np.eye(d2)
            b[row:row + d2] = f * herm_to_rvec(con.constant)
            row += d2
        self.a = a
        self.b = b
        self.chol = cho_factor(a @ a.T + 1e-13 * np.eye(self.m))

        c = np.zeros(self.n_total)
        for n, coef in problem.objective.items():
            o = self.var_off[n]
            d = self.var_dims[n]
            c[o:o + d * d] = -herm_to_rvec(coef)  # min form
        self.c = c

        # slack blocks grouped by dim for batched PSD projection
        self.groups = {}
        for con in problem.constraints:
            d = con.dim()
            self.groups.setdefault(d, []).append(self.con_off[con.name])

    def project_cone(self, x: np.ndarray) -> np.ndarray:
        z = x.copy()
        for d, offs in self.groups.items():
            mats = np.empty((len(offs), d, d), dtype=complex)
            for k, o in enumerate(offs):
                mats[k] = rvec_to_herm(x[o:o + d * d], d)
            proj = psd_project_stack(mats)
            for k, o in enumerate(offs):
                z[o:o + d * d] = herm_to_rvec(proj[k])
        return z

    def extract_blocks(self, x: np.ndarray) -> dict:
        out = {}
        for n, d in self.problem.variables:
            o = self.var_off[n]
            out[n] = rvec_to_herm(x[o:o + d * d], d)
        return out

    def primal_objective(self, x: np.ndarray) -> float:
        return float(-self.c @ x)


def solve_admm(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 50_000,
               rho: float = 1.0, over_relax: float = 1.6,
               warm_start: Optional[tuple] = None,
               workspace: Optional[_AdmmWorkspace] = None) -> SdpSolution:
    """Operator-splitting solve; see the module docstring.

    Exceeding ``max_iter`` returns status 'max_iter' with residuals attached,
    leaving the decision to the caller.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ws = workspace if workspace is not None else _AdmmWorkspace(problem)
    n = ws.n_total
    if warm_start is not None:
        z, u, rho = warm_start
        z, u = z.copy(), u.copy()
    else:
        z = np.zeros(n)
        u = np.zeros(n)
    a, b, c = ws.a, ws.b, ws.c
    x = z
    p_obj = d_obj = 0.0
    res_p = res_d = gap_rel = np.inf
    check_every = 10
    for it in range(1, max_iter + 1):
        v = z - u - c / rho
        nu = cho_solve(ws.chol, a @ v - b)
        x = v - a.T @ nu
        x_relax = over_relax * x + (1.0 - over_relax) * z
        z_prev = z
        z = ws.project_cone(x_relax + u)
        u = u + x_relax - z

        if it % check_every == 0 or it == max_iter:
            p_obj = ws.primal_objective(z)
            d_obj = rho * float(b @ nu)
            res_p = np.linalg.norm(x - z) / max(np.linalg.norm(x), np.linalg.norm(z), 1.0)
            res_d = rho * np.linalg.norm(z - z_prev) / max(rho * np.linalg.norm(u), 1.0)
            gap_rel = abs(p_obj - d_obj) / max(1.0, abs(p_obj), abs(d_obj))
            if res_p <= tol and res_d <= tol and gap_rel <= tol:
                return SdpSolution(
                    blocks=ws.extract_blocks(z), objective_value=p_obj,
                    dual_objective=d_obj, gap=abs(p_obj - d_obj), iterations=it,
                    status=STATUS_OPTIMAL,
                    residuals={"primal": float(res_p), "dual": float(res_d)},
                    warm_state=(z.copy(), u.copy(), rho))
            # residual balancing with bounded penalty
            if it % 50 == 0:
                if res_p > 10.0 * res_d and rho < 1e4:
                    rho *= 2.0
                    u /= 2.0
                elif res_d > 10.0 * res_p and rho > 1e-4:
                    rho /= 2.0
                    u *= 2.0
    return SdpSolution(
        blocks=ws.extract_blocks(z), objective_value=p_obj, dual_objective=d_obj,
        gap=abs(p_obj - d_obj), iterations=max_iter, status=STATUS_MAX_ITER,
        residuals={"primal": float(res_p), "dual": float(res_d),
                   "gap_rel": float(gap_rel)},
        warm_state=(z.copy(), u.copy(), rho))


# ---------------------------------------------------------------------------
# Oracle: log-det barrier on the reduced dual

def _eig2_closed(a: np.ndarray):
    """Closed-form eigenvalues of a 2x2 Hermitian matrix (no LAPACK)."""
    tr = (a[0, 0] + a[1, 1]).real
    det = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    disc = max(tr * tr / 4.0 - det, 0.0)
    r = np.sqrt(disc)
    return tr / 2.0 - r, tr / 2.0 + r


def _min_eig(a: np.ndarray) -> float:
    if a.shape[0] == 2:
        return _eig2_closed(a)[0]
    # generic fallback: characteristic-poly-free bisection via Cholesky shift
    lo, hi = -np.linalg.norm(a, 1), np.linalg.norm(a, 1)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        try:
            np.linalg.cholesky(a - mid * np.eye(a.shape[0]))
            lo = mid
        except np.linalg.LinAlgError:
            hi = mid
    return lo


class _OracleReduction:
    """Reduced dual of a problem in which every variable carries a plain
    PSD constraint (constant 0, single weight +1)."""

    def __init__(self, problem: SdpProblem):
        dims = dict(problem.variables)
        pure = {}
        mixed = []
        for con in problem.constraints:
            is_pure = (np.max(np.abs(con.constant)) < 1e-14
                       and len(con.terms) == 1
                       and abs(list(con.terms.values())[0] - 1.0) < 1e-14)
            if is_pure:
                vname = next(iter(con.terms))
                if vname not in pure:
                    pure[vname] = con
                    continue
            mixed.append(con)
        missing = [n for n in dims if n not in pure]
        if missing:
            raise ValidationError(
                "oracle requires an explicit PSD constraint on every variable; "
                f"missing for {missing}")
        self.problem = problem
        self.var_names = [n for n, _ in problem.variables]
        self.var_dims = dims
        self.mixed = mixed
        self.z_dims = [c.dim() for c in mixed]
        self.z_off = np.concatenate([[0], np.cumsum([d * d for d in self.z_dims])])
        self.n = int(self.z_off[-1])
        self.bases = {d: herm_basis(d) for d in set(self.z_dims) | set(dims.values())}
        # objective coefficients (zero if a variable is unpenalized)
        self.cmats = {n: problem.objective.get(n, np.zeros((d, d), dtype=complex))
                      for n, d in problem.variables}

    def z_blocks(self, zv: np.ndarray):
        return [rvec_to_herm(zv[self.z_off[j]:self.z_off[j + 1]], d)
                for j, d in enumerate(self.z_dims)]

    def p_blocks(self, zmats):
        out = {}
        for i, n in enumerate(self.var_names):
            d = self.var_dims[n]
            p = -self.cmats[n].astype(complex).copy()
            for j, con in enumerate(self.mixed):
                w = con.terms.get(n, 0.0)
                if w != 0.0:
                    p -= w * zmats[j]
            out[n] = p
        return out

    def dual_value(self, zmats) -> float:
        return float(sum(np.trace(zmats[j] @ con.constant).real
                         for j, con in enumerate(self.mixed)))

    def strictly_feasible_start(self, margin: float = 1e-6) -> np.ndarray:
        for beta in [1.0, 2.0, 4.0, 16.0, 64.0, 512.0, 4096.0, 0.5, 0.125, 2 ** -8]:
            zv = np.zeros(self.n)
            for j, d in enumerate(self.z_dims):
                zv[self.z_off[j]:self.z_off[j + 1]] = herm_to_rvec(
                    beta * np.eye(d, dtype=complex))
            zmats = self.z_blocks(zv)
            pmats = self.p_blocks(zmats)
            if all(_min_eig(p) > margin for p in pmats.values()) and beta > margin:
                return zv
        raise SolverError(
            "oracle: no strictly feasible dual start found (problem may be unbounded)")


def _metric_logdet(minv: np.ndarray, basis) -> np.ndarray:
    u = np.stack([minv @ bk for bk in basis])
    return np.einsum("kab,lba->kl", u, u).real


def _max_step_psd(m: np.ndarray, delta: np.ndarray) -> float:
    """sup {alpha >= 0 : m + alpha*delta > 0} for Hermitian m > 0 (closed form
    for 2x2 via det(m + alpha*delta) = 0; generic fallback by bisection)."""
    d = m.shape[0]
    if d == 2:
        det_m = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        det_d = (delta[0, 0] * delta[1, 1] - delta[0, 1] * delta[1, 0]).real
        # adj(m) = tr(m) I - m for 2x2
        b = (np.trace(m) * np.trace(delta) - np.trace(m @ delta)).real
        roots = np.roots([det_d, b, det_m])
        pos = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 1e-16]
        return min(pos) if pos else np.inf
    lo, hi = 0.0, 1.0
    while hi < 1e8 and _min_eig(m + hi * delta) > 0:
        lo, hi = hi, 2.0 * hi
    if hi >= 1e8:
        return np.inf
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _min_eig(m + mid * delta) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def solve_oracle(problem: SdpProblem, tol: float = 2e-6,
                 infeas_threshold: float = 1e7) -> SdpSolution:
    """Barrier path-following on the reduced dual.

    Requires every variable to carry a plain PSD constraint.  Detects primal
    infeasibility as dual unboundedness (objective below -infeas_threshold).

    The reported ``objective_value`` is the final dual value: a one-sided
    estimate lying within ``gap`` (= total barrier parameter / final t) above
    the true optimum.  Variable blocks are a best-effort primal recovery and
    carry no certificate; cross-checks must compare objective values only.
    """
    red = _OracleReduction(problem)
    nu_total = sum(red.z_dims) + sum(red.var_dims.values())
    if red.n == 0:
        # no mixed constraints: optimum is finite only if all -C_i PSD
        pm = red.p_blocks([])
        if any(_min_eig(p) < -1e-12 for p in pm.values()):
            raise SolverError("oracle: problem unbounded (no capping constraints)")
        blocks = {n: np.zeros((d, d), dtype=complex) for n, d in problem.variables}
        return SdpSolution(blocks=blocks, objective_value=0.0, dual_objective=0.0,
                           gap=0.0, iterations=0, status=STATUS_OPTIMAL)

    zv = red.strictly_feasible_start()
    t = 1.0
    mu = 10.0
    newton_total = 0
    cert_t = None  # largest t at which full centering was certified

    def phi_parts(zv_):
        zm = red.z_blocks(zv_)
        pm = red.p_blocks(zm)
        return zm, pm

    def barrier_value(zv_, t_):
        zm, pm = phi_parts(zv_)
        val = t_ * red.dual_value(zm)
        for m in list(zm) + list(pm.values()):
            # Cholesky doubles as the strict-positivity check (slogdet alone
            # would accept the negative-definite branch in even dimensions)
            try:
                ch = np.linalg.cholesky(m)
            except np.linalg.LinAlgError:
                return np.inf
            val -= 2.0 * float(np.log(np.abs(np.diag(ch))).sum())
        return val

    def center(zv, t):
        """Newton centering; returns (zv, certified)."""
        nonlocal newton_total
        for _ in range(250):
            newton_total += 1
            zm, pm = phi_parts(zv)
            pinv = {n: np.linalg.inv(p) for n, p in pm.items()}
            zinv = [np.linalg.inv(m) for m in zm]
            grad = np.zeros(red.n)
            for j, con in enumerate(red.mixed):
                seg = slice(red.z_off[j], red.z_off[j + 1])
                g = t * con.constant.astype(complex) - zinv[j]
                for n in red.var_names:
                    w = con.terms.get(n, 0.0)
                    if w != 0.0:
                        g = g + w * pinv[n]
                grad[seg] = herm_to_rvec(g)
            hess = np.zeros((red.n, red.n))
            for j, d in enumerate(red.z_dims):
                seg = slice(red.z_off[j], red.z_off[j + 1])
                hess[seg, seg] += _metric_logdet(zinv[j], red.bases[d])
            for n in red.var_names:
                d = red.var_dims[n]
                q = _metric_logdet(pinv[n], red.bases[d])
                involved = [(j, red.mixed[j].terms.get(n, 0.0))
                            for j in range(len(red.mixed))
                            if red.mixed[j].terms.get(n, 0.0) != 0.0]
                for j, wj in involved:
                    sj = slice(red.z_off[j], red.z_off[j + 1])
                    for k, wk in involved:
                        sk = slice(red.z_off[k], red.z_off[k + 1])
                        hess[sj, sk] += wj * wk * q
            # diagonally preconditioned Newton solve
            dscale = 1.0 / np.sqrt(np.maximum(np.diag(hess), 1e-300))
            hs = hess * dscale[:, None] * dscale[None, :]
            try:
                step = dscale * np.linalg.solve(
                    hs + 1e-14 * np.eye(red.n), -(grad * dscale))
            except np.linalg.LinAlgError:
                raise SolverError("oracle: singular Newton system")
            decrement = float(-grad @ step)
            if decrement < 0:
                return zv, False
            if decrement < 1e-7:
                return zv, True
            # fraction-to-boundary cap, then Armijo backtracking
            alpha_cap = 1.0
            dmats = red.z_blocks(step)
            for j, m in enumerate(zm):
                alpha_cap = min(alpha_cap, 0.985 * _max_step_psd(m, dmats[j]))
            pstep = red.p_blocks(dmats)
            czero = red.p_blocks([np.zeros_like(m) for m in zm])
            for n in red.var_names:
                dp = pstep[n] - czero[n]  # linear part of P along the step
                alpha_cap = min(alpha_cap, 0.985 * _max_step_psd(pm[n], dp))
            alpha = min(1.0, alpha_cap)
            base = barrier_value(zv, t)
            improved = False
            while alpha > 1e-14:
                cand = zv + alpha * step
                val = barrier_value(cand, t)
                if np.isfinite(val) and val <= base - 0.25 * alpha * decrement:
                    zv = cand
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                return zv, False
        return zv, False

    while True:
        zv, certified = center(zv, t)
        if certified:
            cert_t = t
        zm, pm = phi_parts(zv)
        d_val = red.dual_value(zm)
        if d_val < -infeas_threshold:
            return SdpSolution(blocks={}, objective_value=-np.inf,
                               dual_objective=d_val, gap=np.inf,
                               iterations=newton_total, status=STATUS_INFEASIBLE)
        if nu_total / t <= tol or not certified:
            break
        t *= mu

    # best-effort primal recovery from the central path: Y_i = P_i^{-1} / t
    blocks = {}
    for n, d in problem.variables:
        blocks[n] = np.linalg.inv(pm[n]) / t
    gap = nu_total / cert_t if cert_t is not None else np.inf
    return SdpSolution(blocks=blocks, objective_value=d_val, dual_objective=d_val,
                       gap=gap, iterations=newton_total,
                       status=STATUS_OPTIMAL if gap <= tol else STATUS_MAX_ITER)
