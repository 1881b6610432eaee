"""Constrained optimization by linear approximation (Powell, 1994).

Minimizes ``f(x)`` subject to ``c(x) >= 0`` using only function values.
Every iteration interpolates ``f`` and each constraint linearly on a simplex
of ``n + 1`` points, takes a step inside a trust region of radius ``rho``
and shrinks ``rho`` from ``rhobeg`` to ``rhoend`` once the models stop
delivering progress. Constraint violation enters through the merit function
``f + mu * max(0, -min c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# simplex acceptability and step constants from the original method
_ALPHA = 0.25
_BETA = 2.1
_GAMMA = 0.5
_DELTA = 1.1


@dataclass
class CobylaResult:
    x: np.ndarray
    f: float
    maxcv: float
    nfev: int
    status: str
    history: list[tuple[np.ndarray, float, float]] = field(default_factory=list)


def _violation(c: np.ndarray) -> float:
    return float(max(0.0, -np.min(c))) if c.size else 0.0


def _lp_in_ball(cost, G, h, z0, nball, rho, max_iter=200):
    """Minimize ``cost @ z`` subject to ``G @ z >= h`` and
    ``||z[:nball]|| <= rho``, starting from the feasible point ``z0``.

    Active-set descent along the projected negative cost; stops at an
    optimum of the polyhedral problem or when the trust-region boundary is
    reached.
    """
    z = z0.astype(float).copy()
    scale = 1e-12 * max(1.0, rho)
    active = [i for i in range(G.shape[0]) if G[i] @ z - h[i] <= scale]
    for _ in range(max_iter):
        # release active constraints whose multipliers have the wrong sign
        while active:
            coef, *_ = np.linalg.lstsq(G[active].T, cost, rcond=None)
            if coef.min() >= -1e-12:
                break
            active.pop(int(np.argmin(coef)))
        s = -(cost - G[active].T @ coef) if active else -cost.copy()
        if np.linalg.norm(s) <= 1e-12 * max(1.0, np.linalg.norm(cost)):
            return z
        alpha = np.inf
        blocking = None
        sb = s[:nball]
        if sb @ sb > 0:
            zb = z[:nball]
            a, b, c = sb @ sb, 2 * zb @ sb, zb @ zb - rho * rho
            alpha = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
            alpha = max(alpha, 0.0)
        ball_alpha = alpha
        gs = G @ s
        for i in range(G.shape[0]):
            if i in active or gs[i] >= -1e-14:
                continue
            ai = max((h[i] - G[i] @ z) / gs[i], 0.0)
            if ai < alpha:
                alpha, blocking = ai, i
        if not np.isfinite(alpha):
            raise RuntimeError("unbounded trust-region subproblem")
        z = z + alpha * s
        if blocking is None or alpha >= ball_alpha:
            return z
        active.append(blocking)
    return z


def _trust_step(g, A, cons, rho):
    """Step ``d`` with ``||d|| <= rho`` minimizing the linear objective model
    ``g @ d`` while keeping the linearized constraint violation as small as
    possible."""
    n = g.size
    m = cons.size
    v0 = _violation(cons)
    d = np.zeros(n)
    slack = 0.0
    if v0 > 0:
        # phase one: minimize the worst linearized violation t
        G = np.vstack([np.hstack([A, np.ones((m, 1))]), np.hstack([np.zeros((1, n)), np.ones((1, 1))])])
        h = np.concatenate([-cons, [0.0]])
        cost = np.zeros(n + 1)
        cost[-1] = 1.0
        z = _lp_in_ball(cost, G, h, np.concatenate([d, [v0]]), n, rho)
        d, slack = z[:n], max(z[-1], 0.0)
        if np.linalg.norm(d) >= rho * (1 - 1e-10):
            return d
    if m:
        d = _lp_in_ball(g, A, -cons - slack, d, n, rho)
    else:
        gn = np.linalg.norm(g)
        d = -rho * g / gn if gn > 0 else d
    return d


def minimize(
    fun: Callable[[np.ndarray], float],
    x0,
    cons: Callable[[np.ndarray], np.ndarray] | None = None,
    rhobeg: float = 0.5,
    rhoend: float = 1e-4,
    maxfun: int = 1000,
    callback: Callable[[np.ndarray, float, float], None] | None = None,
    ctol: float = 1e-12,
) -> CobylaResult:
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if cons is None:
        cons = lambda x: np.zeros(0)  # noqa: E731
    if not 0 < rhoend <= rhobeg:
        raise ValueError("need 0 < rhoend <= rhobeg")

    history = []

    def evaluate(x):
        f = float(fun(x))
        c = np.asarray(cons(x), dtype=float)
        r = _violation(c)
        history.append((x.copy(), f, r))
        if callback is not None:
            callback(x.copy(), f, r)
        return f, c, r

    rho = rhobeg
    parmu = 0.0
    # vertex 0..n-1 are x_opt + disp[j]; dual[:, j] satisfies disp[i] @ dual[:, j] = delta_ij
    x_opt = x0.copy()
    f_opt, c_opt, r_opt = evaluate(x_opt)
    disp = rho * np.eye(n)
    dual = np.eye(n) / rho
    fv = np.empty(n)
    cv = np.empty((n, c_opt.size))
    rv = np.empty(n)
    for j in range(n):
        if len(history) >= maxfun:
            return CobylaResult(*_best(history, ctol), len(history), "maxfun", history)
        fv[j], cv[j], rv[j] = evaluate(x_opt + disp[j])

    ibrnch = False
    while True:
        # make the vertex with the least merit the pivot
        while True:
            phi = f_opt + parmu * r_opt
            merits = fv + parmu * rv
            l = None
            for j in range(n):
                if merits[j] < phi or (merits[j] == phi and parmu == 0 and rv[j] < r_opt):
                    if l is None or merits[j] < merits[l]:
                        l = j
            if l is None:
                break
            shift = disp[l].copy()
            x_opt = x_opt + shift
            f_opt, fv[l] = fv[l], f_opt
            c_opt, cv[l] = cv[l].copy(), c_opt
            r_opt, rv[l] = rv[l], r_opt
            disp = disp - shift
            disp[l] = -shift
            dual[:, l] = -dual.sum(axis=1)

        if np.max(np.abs(disp @ dual - np.eye(n))) > 0.1:
            dual = np.linalg.inv(disp)
        vsig = 1.0 / np.linalg.norm(dual, axis=0)
        veta = np.linalg.norm(disp, axis=1)
        acceptable = bool(np.all(veta <= _BETA * rho) and np.all(vsig >= _ALPHA * rho))

        # linear models: gradient of each function from the simplex
        g = dual @ (fv - f_opt)
        A = (dual @ (cv - c_opt)).T if c_opt.size else np.zeros((0, n))

        if len(history) >= maxfun:
            status = "maxfun"
            break

        if not (ibrnch or acceptable):
            # replace a vertex to restore the simplex geometry
            if np.any(veta > _BETA * rho):
                jdrop = int(np.argmax(veta))
            else:
                jdrop = int(np.argmin(vsig))
            dx = _GAMMA * rho * vsig[jdrop] * dual[:, jdrop]
            cvp = max(0.0, np.max(-(c_opt + A @ dx))) if c_opt.size else 0.0
            cvm = max(0.0, np.max(-(c_opt - A @ dx))) if c_opt.size else 0.0
            if parmu * (cvp - cvm) > -2 * (g @ dx):
                dx = -dx
            fv[jdrop], cv[jdrop], rv[jdrop] = evaluate(x_opt + dx)
            _replace(disp, dual, jdrop, dx)
            ibrnch = True
            continue

        d = _trust_step(g, A, c_opt, rho)
        improved = False
        if d @ d >= 0.25 * rho * rho:
            lin_c = c_opt + A @ d
            resnew = _violation(lin_c)
            prerec = r_opt - resnew
            pred_f = g @ d
            barmu = pred_f / prerec if prerec > 0 else 0.0
            if parmu < 1.5 * barmu:
                parmu = 2.0 * barmu
                phi = f_opt + parmu * r_opt
                if np.any(fv + parmu * rv < phi):
                    continue
            prerem = parmu * prerec - pred_f
            f_new, c_new, r_new = evaluate(x_opt + d)
            trured = (f_opt + parmu * r_opt) - (f_new + parmu * r_new)
            if parmu == 0 and f_new == f_opt:
                prerem = prerec
                trured = r_opt - r_new
            ratio = 0.0 if trured > 0 else 1.0
            proj = np.abs(d @ dual)
            sigbar = proj * vsig
            jdrop = None
            for j in range(n):
                if proj[j] > ratio:
                    jdrop, ratio = j, proj[j]
            edgmax = _DELTA * rho
            far = None
            for j in range(n):
                if sigbar[j] >= _ALPHA * rho or sigbar[j] >= vsig[j]:
                    dist = veta[j] if trured <= 0 else np.linalg.norm(d - disp[j])
                    if dist > edgmax:
                        far, edgmax = j, dist
            if far is not None:
                jdrop = far
            if jdrop is not None:
                fv[jdrop], cv[jdrop], rv[jdrop] = f_new, c_new, r_new
                _replace(disp, dual, jdrop, d)
                improved = trured > 0 and trured >= 0.1 * prerem
        if improved:
            continue
        if len(history) >= maxfun:
            status = "maxfun"
            break
        if not acceptable:
            ibrnch = False
            continue
        if rho <= rhoend:
            status = "rho reached rhoend"
            break
        rho *= 0.5
        if rho <= 1.5 * rhoend:
            rho = rhoend
        if parmu > 0:
            parmu = _reduce_parmu(parmu, f_opt, fv, c_opt, cv)

    x, f, r = _best(history, ctol)
    return CobylaResult(x, f, r, len(history), status, history)


def _replace(disp, dual, jdrop, dx):
    disp[jdrop] = dx
    col = dual[:, jdrop] / (dx @ dual[:, jdrop])
    proj = dx @ dual
    dual -= np.outer(col, proj)
    dual[:, jdrop] = col


def _reduce_parmu(parmu, f_opt, fv, c_opt, cv):
    allc = np.vstack([c_opt[None, :], cv]) if c_opt.size else np.zeros((fv.size + 1, 0))
    denom = 0.0
    for k in range(allc.shape[1]):
        cmin, cmax = allc[:, k].min(), allc[:, k].max()
        if cmin < 0.5 * cmax:
            temp = max(cmax, 0.0) - cmin
            denom = temp if denom <= 0 else min(denom, temp)
    allf = np.concatenate([[f_opt], fv])
    spread = allf.max() - allf.min()
    if denom == 0:
        return 0.0
    if spread < parmu * denom:
        return spread / denom
    return parmu


def _best(history, ctol):
    """Best evaluated point: feasible points (violation <= ctol) first, then
    least violation."""
    feas = [h for h in history if h[2] <= ctol]
    pool = feas if feas else history
    key = (lambda h: h[1]) if feas else (lambda h: (h[2], h[1]))
    x, f, r = min(pool, key=key)
    return x, f, r
