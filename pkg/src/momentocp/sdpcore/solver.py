"""Primal-dual interior-point method for block LMIs.

Path-following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step, dense per-block linear algebra, and a dense
Cholesky of the Schur complement.  The problem solved is

    minimize    c.x
    subject to  S_b(x) = A0_b + sum_i x_i A_{i,b}  >= 0   for each block,

with dual multipliers X_b >= 0 satisfying sum_b <A_{i,b}, X_b> = c_i.
Everything is deterministic: no randomness, fixed iteration order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .standard import StandardSDP


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    time_budget: float | None = None  # seconds; None = unlimited
    step_fraction: float = 0.99
    verbose: bool = False


@dataclass
class SolveReport:
    status: SolveStatus
    objective: float
    x: np.ndarray
    iterations: int
    residuals: dict = field(default_factory=dict)
    dual_objective: float = float("nan")
    wall_time: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


def _sym(M):
    return 0.5 * (M + M.T)


def _chol(M):
    return sla.cholesky(M, lower=True, check_finite=False)


def _nt_scaling(X, S):
    """NT scaling point W with W S W = X, via Cholesky factors and an SVD."""
    Lx = _chol(X)
    Ls = _chol(S)
    U, d, Vt = sla.svd(Ls.T @ Lx, check_finite=False)
    G = Lx @ Vt.T / np.sqrt(d)
    return G @ G.T


def _max_step(L, Delta):
    """sup over alpha with M + alpha*Delta > 0, M = L L^T."""
    Y = sla.solve_triangular(L, Delta, lower=True, check_finite=False)
    Y = sla.solve_triangular(L, Y.T, lower=True, check_finite=False)
    lam = sla.eigvalsh(_sym(Y), check_finite=False)[0]
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def solve(sdp: StandardSDP, opts: SolverOptions | None = None) -> SolveReport:
    """Solve a block-LMI problem; never returns a silent wrong answer.

    On OPTIMAL the relative duality gap is below tol_gap and both
    feasibility residuals below tol_feas.  MAX_ITER and
    NUMERICAL_FAILURE reports carry the best iterate found and its
    residuals.
    """
    if opts is None:
        opts = SolverOptions()
    t_start = time.perf_counter()
    n = sdp.n
    blocks = sdp.blocks
    if not blocks:
        raise ValueError("problem has no blocks")

    # normalization pass: scale each block by its Frobenius-norm magnitude
    bscale = []
    for b in blocks:
        fn = max(1.0, float(np.linalg.norm(b.A0)), float(np.max(np.abs(b.w), initial=0.0)))
        bscale.append(fn)
    cnorm = max(1.0, float(np.linalg.norm(sdp.c)))
    c = sdp.c / cnorm

    def realize_all(x):
        return [b.realize(x) / f for b, f in zip(blocks, bscale)]

    def adjoint_all(Xs):
        g = np.zeros(n)
        for b, X, f in zip(blocks, Xs, bscale):
            g += b.adjoint(X, n) / f
        return g

    sizes = np.array([b.size for b in blocks])
    ns_total = float(sizes.sum())

    x = np.zeros(n)
    Xs = [np.eye(b.size) for b in blocks]
    Ss = [np.eye(b.size) for b in blocks]

    best = None
    stall_count = 0
    it = 0
    status = SolveStatus.MAX_ITER
    message = ""

    def score(pf, df, rg):
        return max(pf, df, rg)

    for it in range(1, opts.max_iter + 1):
        Ax = realize_all(x)
        rds = [Ax_b - S for Ax_b, S in zip(Ax, Ss)]
        rp = c - adjoint_all(Xs)
        gap = sum(float(np.tensordot(X, S)) for X, S in zip(Xs, Ss))
        mu = gap / ns_total

        pobj = float(c @ x)
        dobj = -sum(float(np.tensordot(b.A0 / f, X)) for b, X, f in zip(blocks, Xs, bscale))
        dfeas = max(
            float(np.linalg.norm(rd)) / (1.0 + float(np.linalg.norm(b.A0) / f))
            for rd, b, f in zip(rds, blocks, bscale)
        )
        pfeas = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(c)))
        relgap = gap / (1.0 + abs(pobj) + abs(dobj))

        cur = {
            "primal": pfeas,
            "dual": dfeas,
            "gap": relgap,
            "mu": mu,
            "pobj": pobj,
            "dobj": dobj,
        }
        if best is None or score(pfeas, dfeas, relgap) < score(
            best[1]["primal"], best[1]["dual"], best[1]["gap"]
        ):
            best = (x.copy(), cur)

        if opts.verbose:
            print(
                f"  it {it:3d}  pobj {pobj * cnorm + sdp.offset:+.6e}  "
                f"gap {relgap:.2e}  pfeas {pfeas:.2e}  dfeas {dfeas:.2e}"
            )

        if relgap <= opts.tol_gap and pfeas <= opts.tol_feas and dfeas <= opts.tol_feas:
            status = SolveStatus.OPTIMAL
            best = (x.copy(), cur)
            break
        if opts.time_budget is not None and time.perf_counter() - t_start > opts.time_budget:
            status = SolveStatus.MAX_ITER
            message = f"wall-time budget {opts.time_budget:.0f}s exhausted"
            break
        # divergence heuristic: iterates blow up while residuals stagnate
        if np.max(np.abs(x)) > 1e12 and pfeas > 1e-4:
            status = SolveStatus.INFEASIBLE
            message = "iterates diverged with stagnating residuals"
            break

        try:
            Lxs = [_chol(X) for X in Xs]
            Lss = [_chol(S) for S in Ss]
            Ws = [_nt_scaling(X, S) for X, S in zip(Xs, Ss)]

            H = np.zeros((n, n))
            for b, W, f in zip(blocks, Ws, bscale):
                b.schur_contribution(W / f, H)
            # tiny Tikhonov guard keeps the factorization alive near degeneracy
            H[np.diag_indices_from(H)] += 1e-13 * (1.0 + np.trace(H) / n)
            cho = sla.cho_factor(H, lower=True, check_finite=False)

            Sinvs = [sla.cho_solve((Ls, True), np.eye(Ls.shape[0])) for Ls in Lss]

            def schur_solve(Vs):
                rhs = -rp.copy()
                for b, V, W, rd, f in zip(blocks, Vs, Ws, rds, bscale):
                    rhs += b.adjoint(V - W @ rd @ W, n) / f
                dx = sla.cho_solve(cho, rhs)
                dSs = []
                dXs = []
                for b, V, W, rd, f in zip(blocks, Vs, Ws, rds, bscale):
                    dS = b.realize(x + dx) / f - b.realize(x) / f + rd
                    dS = _sym(dS)
                    dX = _sym(V - W @ dS @ W)
                    dSs.append(dS)
                    dXs.append(dX)
                return dx, dSs, dXs

            # predictor
            Vs_aff = [-X for X in Xs]
            dx_a, dSs_a, dXs_a = schur_solve(Vs_aff)
            ap = min(1.0, min(_max_step(Lx, dX) for Lx, dX in zip(Lxs, dXs_a)))
            ad = min(1.0, min(_max_step(Ls, dS) for Ls, dS in zip(Lss, dSs_a)))
            gap_aff = sum(
                float(np.tensordot(X + ap * dX, S + ad * dS))
                for X, dX, S, dS in zip(Xs, dXs_a, Ss, dSs_a)
            )
            sigma = min(1.0, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

            # corrector with second-order term
            Vs = []
            for X, S, Sinv, dS_a, dX_a, W in zip(Xs, Ss, Sinvs, dSs_a, dXs_a, Ws):
                WdSW = -X - dX_a  # from the predictor relation dX = -X - W dS W
                corr = _sym(WdSW @ dS_a @ Sinv)
                Vs.append(sigma * mu * Sinv - X - corr)
            dx, dSs, dXs = schur_solve(Vs)
            ap2 = min(1.0, min(_max_step(Lx, dX) for Lx, dX in zip(Lxs, dXs)))
            ad2 = min(1.0, min(_max_step(Ls, dS) for Ls, dS in zip(Lss, dSs)))

            if min(ap2, ad2) < 0.05 * min(ap, ad):
                # corrector misfired: retreat to a plain centered direction
                Vs = [sigma * mu * Sinv - X for X, Sinv in zip(Xs, Sinvs)]
                dx, dSs, dXs = schur_solve(Vs)
                ap2 = min(1.0, min(_max_step(Lx, dX) for Lx, dX in zip(Lxs, dXs)))
                ad2 = min(1.0, min(_max_step(Ls, dS) for Ls, dS in zip(Lss, dSs)))

            g = opts.step_fraction
            ap2 = min(1.0, g * ap2)
            ad2 = min(1.0, g * ad2)

            x = x + ad2 * dx
            Ss = [S + ad2 * dS for S, dS in zip(Ss, dSs)]
            Xs = [X + ap2 * dX for X, dX in zip(Xs, dXs)]

            if min(ap2, ad2) < 1e-7:
                stall_count += 1
                if stall_count >= 3:
                    status = SolveStatus.NUMERICAL_FAILURE
                    message = "step length collapsed"
                    break
            else:
                stall_count = 0
        except (sla.LinAlgError, np.linalg.LinAlgError) as exc:
            status = SolveStatus.NUMERICAL_FAILURE
            message = f"linear algebra failure: {exc}"
            break
    else:
        it = opts.max_iter

    x_best, res = best
    wall = time.perf_counter() - t_start
    return SolveReport(
        status=status,
        objective=res["pobj"] * cnorm + sdp.offset,
        x=x_best,
        iterations=it,
        residuals={"primal": res["primal"], "dual": res["dual"], "gap": res["gap"]},
        dual_objective=res["dobj"] * cnorm + sdp.offset,
        wall_time=wall,
        message=message,
    )
