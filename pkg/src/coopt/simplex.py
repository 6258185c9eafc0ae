"""Bounded-variable revised simplex with a dense, periodically refactorized basis.

The solver works on the equality form ``A x + s = b`` where every row gets a
slack whose bounds encode the row sense.  Cold starts run a phase-1 with
artificial columns (sum of infeasibilities) followed by phase-2; warm starts
reuse a caller-supplied basis, running plain phase-2 when it is primal
feasible and a bounded dual simplex when it is only dual feasible (the common
case after branch-and-bound bound changes).

Pricing is Dantzig (most negative reduced cost, lowest index on ties) with an
automatic switch to Bland's lowest-index rule after a degeneracy stall, which
keeps the pivot sequence deterministic and cycle-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linear import EQ, GE, LE, MAX, MIN, LinearModel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
SINGULAR = "singular"

FEAS_TOL = 1e-7
OPT_TOL = 1e-8
PIV_TOL = 1e-9
REFACTOR_EVERY = 50
STALL_LIMIT = 500

_BASIC, _AT_LB, _AT_UB, _FREE = 0, 1, 2, 3


@dataclass
class WarmStart:
    """Basis snapshot that lets a later solve skip phase 1."""

    basis: np.ndarray
    vstat: np.ndarray


@dataclass
class LpSolution:
    status: str
    primal: np.ndarray | None
    dual: np.ndarray | None
    objective: float
    iterations: int
    warm: WarmStart | None = None

    def value(self, model: LinearModel, name: str) -> float:
        return float(self.primal[model.index(name)])


@dataclass
class CertificateReport:
    """Residuals of an optimal solution; report-only, never raises."""

    primal_residual: float
    bound_residual: float
    dual_residual: float
    complementary_slackness: float
    duality_gap: float

    def within(self, tol: float = 1e-6) -> bool:
        return (
            self.primal_residual <= tol
            and self.bound_residual <= tol
            and self.dual_residual <= tol
            and self.complementary_slackness <= tol
            and self.duality_gap <= tol
        )


class SimplexSolver:
    """Reusable solver bound to one model structure.

    Bounds and right-hand sides may be overridden per solve, which is what
    branch-and-bound and the frontier refinement rely on; the constraint
    matrix itself is fixed at construction.
    """

    def __init__(self, model: LinearModel):
        self.model = model
        ns, m = model.n, model.m
        self.ns = ns
        self.m = m
        self.nsm = ns + m
        self.ncols = ns + 2 * m
        self._binv_cache: dict[bytes, np.ndarray] = {}

        A = np.zeros((m, ns + m))
        b = np.zeros(m)
        slack_lb = np.zeros(m)
        slack_ub = np.zeros(m)
        for i, con in enumerate(model.constraints):
            for j, cval in con.coeffs.items():
                A[i, j] += cval
            A[i, ns + i] = 1.0
            b[i] = con.rhs
            if con.sense == LE:
                slack_lb[i], slack_ub[i] = 0.0, math.inf
            elif con.sense == GE:
                slack_lb[i], slack_ub[i] = -math.inf, 0.0
            else:
                slack_lb[i], slack_ub[i] = 0.0, 0.0
        self.A = A
        self.base_b = b
        self.base_lb = np.array([v.lb for v in model.variables] + list(slack_lb))
        self.base_ub = np.array([v.ub for v in model.variables] + list(slack_ub))

        sign = 1.0 if model.sense == MIN else -1.0
        cost = np.zeros(self.ncols)
        for j, cval in model.objective.items():
            cost[j] = sign * cval
        self.cost = cost
        self.obj_sign = sign

    # -- per-solve state ---------------------------------------------------

    def solve(self, *, lb=None, ub=None, rhs=None, warm: WarmStart | None = None) -> LpSolution:
        m, nsm, ncols = self.m, self.nsm, self.ncols
        self.lb = np.full(ncols, 0.0)
        self.ub = np.full(ncols, 0.0)
        self.lb[:nsm] = self.base_lb
        self.ub[:nsm] = self.base_ub
        if lb is not None:
            self.lb[: self.ns] = lb
        if ub is not None:
            self.ub[: self.ns] = ub
        self.b = self.base_b.copy() if rhs is None else np.asarray(rhs, dtype=float).copy()
        if np.any(self.lb[: nsm] > self.ub[: nsm] + 1e-12):
            return self._finish(INFEASIBLE)

        self.art_sign = np.ones(m)
        self.x = np.zeros(ncols)
        self.stat = np.full(ncols, _AT_LB, dtype=np.int8)
        self.basis = np.arange(m) + nsm
        self.Binv = np.eye(m)
        self.iterations = 0
        self.pivots_since_refactor = 0

        state = None
        if warm is not None:
            state = self._try_warm(warm)
        if state is None:
            status = self._cold_start()
        else:
            status = state
        return self._finish(status)

    def _finish(self, status: str) -> LpSolution:
        if status != OPTIMAL:
            obj = math.inf if status == INFEASIBLE else -math.inf
            if self.model.sense == MAX:
                obj = -obj
            if status == SINGULAR:
                obj = math.nan
            return LpSolution(status, None, None, obj, getattr(self, "iterations", 0))
        if self.m and np.all(self.basis < self.nsm):
            self._cache_binv(self.basis.tobytes())  # children warm-start from here
        self._recompute_x()
        bl = self.lb[self.basis]
        bu = self.ub[self.basis]
        xb = self.x[self.basis]
        snapped = np.clip(xb, np.maximum(bl, xb - FEAS_TOL * 10), np.minimum(bu, xb + FEAS_TOL * 10))
        self.x[self.basis] = snapped
        y = self.cost[self.basis] @ self.Binv
        dual = y if self.model.sense == MIN else -y
        z_internal = float(self.cost @ self.x)
        objective = z_internal * (1.0 if self.model.sense == MIN else -1.0)
        warm = WarmStart(self.basis.copy(), self.stat.copy())
        return LpSolution(OPTIMAL, self.x[: self.ns].copy(), dual.copy(), objective, self.iterations, warm)

    # -- linear algebra helpers --------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.nsm:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[j - self.nsm] = self.art_sign[j - self.nsm]
        return col

    def _ftran(self, j: int) -> np.ndarray:
        if j < self.nsm:
            return self.Binv @ self.A[:, j]
        i = j - self.nsm
        return self.art_sign[i] * self.Binv[:, i]

    def _reduced_costs(self, c: np.ndarray) -> np.ndarray:
        y = c[self.basis] @ self.Binv
        d = np.empty(self.ncols)
        d[: self.nsm] = c[: self.nsm] - y @ self.A
        d[self.nsm :] = c[self.nsm :] - y * self.art_sign
        return d

    def _alpha_row(self, r: int) -> np.ndarray:
        rho = self.Binv[r]
        alpha = np.empty(self.ncols)
        alpha[: self.nsm] = rho @ self.A
        alpha[self.nsm :] = rho * self.art_sign
        return alpha

    def _refactor(self) -> bool:
        if not self._factor_basis():
            return False
        self._recompute_x()
        return True

    def _factor_basis(self) -> bool:
        m = self.m
        if m == 0:
            self.Binv = np.zeros((0, 0))
            self.pivots_since_refactor = 0
            return True
        # bases repeat heavily across warm-started solves; cache their inverses
        # with their update age so accumulated eta error stays bounded
        # (artificial columns change sign per solve, so those bases are exempt)
        cacheable = bool(np.all(self.basis < self.nsm))
        key = self.basis.tobytes() if cacheable else b""
        cached = self._binv_cache.get(key) if cacheable else None
        if cached is not None:
            binv, age = cached
            self.Binv = binv.copy()
            self.pivots_since_refactor = age
            return True
        B = np.zeros((m, m))
        for r, j in enumerate(self.basis):
            B[:, r] = self._column(j)
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        self.pivots_since_refactor = 0
        if cacheable:
            self._cache_binv(key)
        return True

    def _cache_binv(self, key: bytes) -> None:
        if len(self._binv_cache) > 32:
            self._binv_cache.clear()
        self._binv_cache[key] = (self.Binv.copy(), self.pivots_since_refactor)

    def _recompute_x(self) -> None:
        nonbasic = self.stat != _BASIC
        at_ub = self.stat == _AT_UB
        self.x[nonbasic] = np.where(at_ub[nonbasic], self.ub[nonbasic], self.lb[nonbasic])
        self.x[self.stat == _FREE] = 0.0
        nb_struct = np.flatnonzero(nonbasic[: self.nsm])
        rhs_eff = self.b - self.A[:, nb_struct] @ self.x[nb_struct]
        self.x[self.basis] = self.Binv @ rhs_eff

    def _nonbasic_value(self, j: int) -> float:
        s = self.stat[j]
        if s == _AT_LB:
            return self.lb[j]
        if s == _AT_UB:
            return self.ub[j]
        return 0.0

    def _eta_update(self, w: np.ndarray, r: int) -> None:
        pivot = w[r]
        self.Binv[r] /= pivot
        others = w.copy()
        others[r] = 0.0
        self.Binv -= np.outer(others, self.Binv[r])
        self.pivots_since_refactor += 1

    # -- cold start ----------------------------------------------------------

    def _cold_start(self) -> str:
        nsm = self.nsm
        for j in range(nsm):
            lo, hi = self.lb[j], self.ub[j]
            if math.isinf(lo) and math.isinf(hi):
                self.stat[j] = _FREE
                self.x[j] = 0.0
            elif math.isinf(hi) or (not math.isinf(lo) and abs(lo) <= abs(hi)):
                self.stat[j] = _AT_LB
                self.x[j] = lo
            else:
                self.stat[j] = _AT_UB
                self.x[j] = hi
        resid = self.b - self.A @ self.x[:nsm]
        self.art_sign = np.where(resid >= 0.0, 1.0, -1.0)
        self.lb[nsm:] = 0.0
        self.ub[nsm:] = math.inf
        self.basis = np.arange(self.m) + nsm
        self.stat[self.basis] = _BASIC
        self.x[nsm:] = np.abs(resid)
        self.Binv = np.diag(self.art_sign) if self.m else np.zeros((0, 0))
        self.pivots_since_refactor = 0

        c1 = np.zeros(self.ncols)
        c1[nsm:] = 1.0
        status = self._primal(c1)
        if status != OPTIMAL:
            return status if status == SINGULAR else INFEASIBLE
        feas_gap = float(c1 @ self.x)
        if feas_gap > FEAS_TOL * (1.0 + float(np.max(np.abs(self.b), initial=0.0))):
            return INFEASIBLE
        if not self._purge_artificials():
            return SINGULAR
        self.lb[nsm:] = 0.0
        self.ub[nsm:] = 0.0
        return self._primal(self.cost)

    def _purge_artificials(self) -> bool:
        nsm = self.nsm
        for r in range(self.m):
            if self.basis[r] < nsm:
                continue
            alpha = self._alpha_row(r)[:nsm]
            candidates = np.flatnonzero((self.stat[:nsm] != _BASIC) & (np.abs(alpha) > 1e-7))
            if candidates.size == 0:
                continue  # redundant row: artificial stays basic at zero
            q = int(candidates[np.argmax(np.abs(alpha[candidates]))])
            w = self._ftran(q)
            if abs(w[r]) < PIV_TOL:
                continue
            old = self.basis[r]
            self.stat[old] = _AT_LB
            self.x[old] = 0.0
            self.basis[r] = q
            self.stat[q] = _BASIC
            self._eta_update(w, r)
            if self.pivots_since_refactor >= REFACTOR_EVERY and not self._refactor():
                return False
        return True

    # -- warm start ----------------------------------------------------------

    def _try_warm(self, warm: WarmStart) -> str | None:
        if len(warm.basis) != self.m or len(warm.vstat) != self.ncols:
            return None
        self.basis = warm.basis.copy()
        self.stat = warm.vstat.copy()
        if np.count_nonzero(self.stat == _BASIC) != self.m:
            return None
        self.lb[self.nsm :] = 0.0
        self.ub[self.nsm :] = 0.0
        for j in range(self.ncols):
            if self.stat[j] == _BASIC:
                continue
            lo, hi = self.lb[j], self.ub[j]
            if self.stat[j] == _AT_LB and math.isinf(lo):
                self.stat[j] = _FREE if math.isinf(hi) else _AT_UB
            elif self.stat[j] == _AT_UB and math.isinf(hi):
                self.stat[j] = _FREE if math.isinf(lo) else _AT_LB
            elif self.stat[j] == _FREE and not (math.isinf(lo) and math.isinf(hi)):
                self.stat[j] = _AT_LB if not math.isinf(lo) else _AT_UB
            self.x[j] = self._nonbasic_value(j)
        if not self._refactor():
            return None

        xb = self.x[self.basis]
        primal_viol = float(
            np.max(
                np.maximum(self.lb[self.basis] - xb, xb - self.ub[self.basis]),
                initial=0.0,
            )
        )
        if primal_viol <= FEAS_TOL:
            return self._primal(self.cost)
        d = self._reduced_costs(self.cost)
        if self._dual_infeasibility(d) <= 1e-7:
            status = self._dual()
            if status is not None:
                return status
        return None

    def _dual_infeasibility(self, d: np.ndarray) -> float:
        movable = (self.ub - self.lb) > 0
        at_lb = (self.stat == _AT_LB) | (self.stat == _FREE)
        at_ub = (self.stat == _AT_UB) | (self.stat == _FREE)
        viol_lo = np.where(at_lb & movable, np.maximum(-d, 0.0), 0.0)
        viol_hi = np.where(at_ub & movable, np.maximum(d, 0.0), 0.0)
        return float(np.max(np.maximum(viol_lo, viol_hi), initial=0.0))

    # -- primal simplex -------------------------------------------------------

    def _primal(self, c: np.ndarray) -> str:
        max_iter = 20000 + 50 * (self.m + self.ns)
        stall = 0
        bland = False
        for _ in range(max_iter):
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                if not self._refactor():
                    return SINGULAR
            d = self._reduced_costs(c)
            movable = (self.ub - self.lb) > 0
            can_inc = ((self.stat == _AT_LB) | (self.stat == _FREE)) & movable & (d < -OPT_TOL)
            can_dec = ((self.stat == _AT_UB) | (self.stat == _FREE)) & movable & (d > OPT_TOL)
            if not (can_inc.any() or can_dec.any()):
                return OPTIMAL
            if bland:
                q = int(np.argmax(can_inc | can_dec))
            else:
                score = np.where(can_inc, -d, np.where(can_dec, d, -math.inf))
                q = int(np.argmax(score))
            direction = 1.0 if can_inc[q] else -1.0

            w = self._ftran(q)
            delta = -direction * w
            theta, r = self._primal_ratio(q, delta)
            if theta is None:
                return UNBOUNDED
            self.iterations += 1
            gain = d[q] * direction * theta
            if gain > -1e-12:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False

            self.x[self.basis] += delta * theta
            self.x[q] += direction * theta
            if r is None:
                self.stat[q] = _AT_UB if self.stat[q] == _AT_LB else _AT_LB
                self.x[q] = self._nonbasic_value(q)
            else:
                leaving = self.basis[r]
                if delta[r] > 0:
                    self.stat[leaving] = _AT_UB
                    self.x[leaving] = self.ub[leaving]
                else:
                    self.stat[leaving] = _AT_LB
                    self.x[leaving] = self.lb[leaving]
                if leaving >= self.nsm:
                    self.lb[leaving] = 0.0
                    self.ub[leaving] = 0.0
                    self.x[leaving] = 0.0
                if abs(w[r]) < PIV_TOL:
                    if not self._refactor():
                        return SINGULAR
                    continue
                self.basis[r] = q
                self.stat[q] = _BASIC
                self._eta_update(w, r)
        return SINGULAR

    def _primal_ratio(self, q: int, delta: np.ndarray):
        """Smallest step blocked by a basic bound or by the entering bound flip."""
        xb = self.x[self.basis]
        lo = self.lb[self.basis]
        hi = self.ub[self.basis]
        theta_rows = np.full(self.m, math.inf)
        up = delta > PIV_TOL
        dn = delta < -PIV_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            theta_rows[up] = (hi[up] - xb[up]) / delta[up]
            theta_rows[dn] = (lo[dn] - xb[dn]) / delta[dn]
        theta_rows = np.where(np.isnan(theta_rows), math.inf, theta_rows)
        theta_rows = np.maximum(theta_rows, 0.0)
        theta_basic = float(np.min(theta_rows, initial=math.inf))
        flip = self.ub[q] - self.lb[q]
        if math.isinf(theta_basic) and math.isinf(flip):
            return None, None
        if flip <= theta_basic:
            return flip, None
        ties = np.flatnonzero(theta_rows <= theta_basic + 1e-12)
        r = int(ties[np.argmin(self.basis[ties])])
        return theta_basic, r

    # -- dual simplex ----------------------------------------------------------

    def _dual(self) -> str | None:
        """Bounded dual simplex; returns None to request a cold restart."""
        c = self.cost
        max_iter = 20000 + 50 * (self.m + self.ns)
        d = self._reduced_costs(c)
        for _ in range(max_iter):
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                if not self._refactor():
                    return SINGULAR
                d = self._reduced_costs(c)
            xb = self.x[self.basis]
            viol_lo = self.lb[self.basis] - xb
            viol_hi = xb - self.ub[self.basis]
            vio = np.maximum(viol_lo, viol_hi)
            worst = float(np.max(vio, initial=0.0))
            if worst <= FEAS_TOL:
                return self._primal(c)
            ties = np.flatnonzero(vio >= worst - 1e-15)
            r = int(ties[np.argmin(self.basis[ties])])
            bv = self.basis[r]
            row_dir = 1.0 if viol_lo[r] >= viol_hi[r] else -1.0
            target = self.lb[bv] if row_dir > 0 else self.ub[bv]

            alpha = self._alpha_row(r)
            movable = (self.ub - self.lb) > 0
            nonbasic = self.stat != _BASIC
            at_lb = (self.stat == _AT_LB) | (self.stat == _FREE)
            at_ub = (self.stat == _AT_UB) | (self.stat == _FREE)
            elig = nonbasic & movable & (
                (at_lb & (alpha * row_dir < -PIV_TOL)) | (at_ub & (alpha * row_dir > PIV_TOL))
            )
            if not elig.any():
                return INFEASIBLE
            with np.errstate(divide="ignore", invalid="ignore"):
                key = np.where(elig, -row_dir * d / alpha, math.inf)
            key = np.where(np.isnan(key), math.inf, np.maximum(key, 0.0))
            q = int(np.argmin(key))

            t = (self.x[bv] - target) / alpha[q]
            w = self._ftran(q)
            self.iterations += 1
            self.x[self.basis] -= t * w
            self.x[q] += t
            self.x[bv] = target
            self.stat[bv] = _AT_LB if row_dir > 0 else _AT_UB
            if bv >= self.nsm:
                self.x[bv] = 0.0
            if abs(w[r]) < PIV_TOL:
                if not self._refactor():
                    return SINGULAR
                d = self._reduced_costs(c)
                continue
            self.basis[r] = q
            self.stat[q] = _BASIC
            self._eta_update(w, r)
            # rank-one reduced-cost update along the departing row
            d -= (d[q] / alpha[q]) * alpha
            d[q] = 0.0
        return None


def solve_lp(model: LinearModel, warm: WarmStart | None = None) -> LpSolution:
    """Solve a continuous model; integrality flags are ignored by design.

    Callers that relax a MILP clear the flags themselves; bounds are honored
    exactly as declared.
    """
    return SimplexSolver(model).solve(warm=warm)


def check_certificates(model: LinearModel, sol: LpSolution) -> CertificateReport:
    """Recompute optimality residuals of a solution from first principles."""
    if sol.status != OPTIMAL:
        raise ValueError(f"certificates need an optimal solution, got {sol.status!r}")
    ns, m = model.n, model.m
    sign = 1.0 if model.sense == MIN else -1.0
    c = np.zeros(ns)
    for j, cval in model.objective.items():
        c[j] = sign * cval
    y = sign * np.asarray(sol.dual, dtype=float)
    x = np.asarray(sol.primal, dtype=float)

    A = np.zeros((m, ns))
    b = np.zeros(m)
    slack_lb = np.zeros(m)
    slack_ub = np.zeros(m)
    for i, con in enumerate(model.constraints):
        for j, cval in con.coeffs.items():
            A[i, j] += cval
        b[i] = con.rhs
        if con.sense == LE:
            slack_lb[i], slack_ub[i] = 0.0, math.inf
        elif con.sense == GE:
            slack_lb[i], slack_ub[i] = -math.inf, 0.0
        else:
            slack_lb[i], slack_ub[i] = 0.0, 0.0

    slack = b - A @ x if m else np.zeros(0)
    values = np.concatenate([x, slack])
    lo = np.concatenate([[v.lb for v in model.variables], slack_lb])
    hi = np.concatenate([[v.ub for v in model.variables], slack_ub])

    viol = np.maximum(lo - values, values - hi)
    primal_residual = float(np.max(viol[ns:], initial=0.0))
    bound_residual = float(np.max(viol[:ns], initial=0.0))
    d = np.concatenate([c - y @ A, -y]) if m else c - np.zeros(0)

    interior = (values > lo + 1e-7) & (values < hi - 1e-7)
    dual_residual = float(np.max(np.abs(d[interior]), initial=0.0))

    cs = 0.0
    for j in range(len(values)):
        if d[j] > OPT_TOL and not math.isinf(lo[j]):
            cs = max(cs, d[j] * (values[j] - lo[j]))
        elif d[j] < -OPT_TOL and not math.isinf(hi[j]):
            cs = max(cs, -d[j] * (hi[j] - values[j]))

    d_eff = np.where(np.abs(d) <= 1e-7, 0.0, d)
    dual_obj = float(b @ y) if m else 0.0
    for j in range(len(values)):
        if d_eff[j] > 0:
            dual_obj += d_eff[j] * lo[j]
        elif d_eff[j] < 0:
            dual_obj += d_eff[j] * hi[j]
    z = sign * sol.objective
    duality_gap = abs(z - dual_obj) / (1.0 + abs(z))

    return CertificateReport(primal_residual, bound_residual, dual_residual, cs, duality_gap)
