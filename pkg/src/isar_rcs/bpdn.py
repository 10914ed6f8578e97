"""Weighted complex basis pursuit denoise by Pareto root finding.

Solves::

    minimize  sum_j w_j |x_j|   subject to   ||A x - y||_2 <= kappa

by Newton root finding on the Pareto curve ``phi(tau)``, the optimal
residual norm of the LASSO problem ``min ||A x - y||_2 s.t. ||W x||_1 <= tau``.
Each LASSO subproblem is solved with a spectral projected gradient method
(Barzilai-Borwein step, nonmonotone projected backtracking).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .geometry import ImageGrid, MeasurementGeometry
from .signal_model import IsarOperator

logger = logging.getLogger(__name__)

CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"

_STEP_MIN = 1e-16
_STEP_MAX = 1e5
_N_PREV = 3
_LINE_MAXITER = 10
_GAMMA = 1e-4


@dataclass
class SolverConfig:
    """Solver settings.

    ``kappa=None`` resolves to ``kappa_ratio * ||y||_2`` at solve time.
    ``weights=None`` means unit weights.
    """

    kappa: float | None = None
    kappa_ratio: float = 0.01
    max_outer_iterations: int = 40
    max_matvecs: int = 20000
    optimality_tol: float = 1e-5
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kappa is not None and not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if not self.kappa_ratio >= 0:
            raise ValueError("kappa_ratio must be >= 0")
        if self.optimality_tol <= 0:
            raise ValueError("optimality_tol must be > 0")
        if self.max_outer_iterations < 1 or self.max_matvecs < 1:
            raise ValueError("iteration budgets must be >= 1")
        if self.weights is not None:
            self.weights = validate_weights(self.weights)

    def resolve_kappa(self, y: np.ndarray) -> float:
        if self.kappa is not None:
            return float(self.kappa)
        return self.kappa_ratio * float(np.linalg.norm(y))


@dataclass
class SolverReport:
    residual: float
    weighted_l1: float
    matvecs: int
    termination: str
    kappa: float = 0.0
    tau: float = 0.0
    dual_bound: float = 0.0
    outer_iterations: int = 0
    trajectory: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.termination == CONVERGED


def validate_weights(w, n: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if n is not None and w.size != n:
        raise ValueError(f"weights have length {w.size}, expected {n}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be positive and finite")
    return w


def weighted_l1(x, w) -> float:
    return float(np.sum(w * np.abs(x)))


def project_weighted_l1_ball(v, w, tau: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{u : sum_j w_j |u_j| <= tau}``.

    Each complex entry keeps its phase; only magnitudes shrink. The
    soft-threshold ``lam`` in ``|u_j| = max(|v_j| - lam w_j, 0)`` is found
    by sorting ``|v_j| / w_j`` in decreasing order (stable, so ties break
    by index) and scanning the cumulative sums.
    """
    v = np.asarray(v)
    w = np.broadcast_to(np.asarray(w, dtype=float), v.shape)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    b = np.abs(v)
    if np.sum(w * b) <= tau:
        return v.copy()
    out = np.zeros_like(v)
    if tau <= 0:
        return out
    ratio = b / w
    order = np.argsort(-ratio, kind="stable")
    bs, ws = b[order], w[order]
    lam = (np.cumsum(ws * bs) - tau) / np.cumsum(ws * ws)
    # active set is the prefix on which the threshold stays below the ratio
    k = max(1, int(np.searchsorted(~(lam < ratio[order]), True)))
    lam_k = max(lam[k - 1], 0.0)
    mag = np.maximum(b - lam_k * w, 0.0)
    nz = b > 0
    out[nz] = v[nz] * (mag[nz] / b[nz])
    return out


class _Problem:
    """Operator, data and matvec bookkeeping shared by the SPG iterations."""

    def __init__(self, op: LinearOperator, y: np.ndarray, w: np.ndarray,
                 max_matvecs: int):
        self.op = op
        self.y = y
        self.w = w
        self.max_matvecs = max_matvecs
        self.matvecs = 0

    @property
    def exhausted(self) -> bool:
        return self.matvecs >= self.max_matvecs

    def residual(self, x):
        self.matvecs += 1
        return self.y - self.op.matvec(x)

    def gradient(self, r):
        self.matvecs += 1
        return -self.op.rmatvec(r)

    def dual_norm(self, g) -> float:
        return float(np.max(np.abs(g) / self.w))

    def project(self, x, tau):
        return project_weighted_l1_ball(x, self.w, tau)


def _real_dot(a, b) -> float:
    return float(np.real(np.vdot(a, b)))


class _LassoState:
    def __init__(self, prob: _Problem, x: np.ndarray):
        self.x = x
        self.r = prob.residual(x)
        self.g = prob.gradient(self.r)
        self.f = 0.5 * _real_dot(self.r, self.r)
        dxn = float(np.max(np.abs(self.g))) if self.g.size else 0.0
        if dxn < 1.0 / _STEP_MAX:
            self.step = _STEP_MAX
        else:
            self.step = min(_STEP_MAX, max(_STEP_MIN, 1.0 / dxn))


def _line_search(prob, st, tau, step, f_ref):
    """Projected backtracking along the projection arc; falls back to a
    feasible-direction search when the arc gives no descent."""
    x, g = st.x, st.g
    scale = 1.0
    for _ in range(_LINE_MAXITER + 1):
        x_new = prob.project(x - step * scale * g, tau)
        s = x_new - x
        gts = _real_dot(g, s)
        if gts >= 0:
            break
        r_new = prob.residual(x_new)
        f_new = 0.5 * _real_dot(r_new, r_new)
        if f_new < f_ref + _GAMMA * gts:
            return x_new, r_new, f_new
        scale *= 0.5
    # feasible direction with quadratic-interpolation backtracking
    d = prob.project(x - step * g, tau) - x
    gtd = _real_dot(g, d)
    if gtd >= 0:
        return None
    alpha = 1.0
    for _ in range(_LINE_MAXITER + 1):
        x_new = x + alpha * d
        r_new = prob.residual(x_new)
        f_new = 0.5 * _real_dot(r_new, r_new)
        if f_new < f_ref + _GAMMA * alpha * gtd:
            return x_new, r_new, f_new
        if alpha <= 0.1:
            alpha *= 0.5
        else:
            t = -gtd * alpha ** 2 / (2 * (f_new - st.f - alpha * gtd))
            alpha = t if 0.1 <= t <= 0.9 * alpha else alpha * 0.5
    return None


def _lasso_gap(prob, st, tau) -> tuple[float, float]:
    gnorm = prob.dual_norm(st.g)
    gap = _real_dot(st.r, st.r - prob.y) + tau * gnorm
    return gap, gnorm


def _spg_lasso(prob: _Problem, st: _LassoState, tau: float, kappa: float,
               tol: float) -> bool:
    """Run SPG on LASSO(tau) until its duality gap is small relative to how
    far the residual still is from ``kappa``. Returns False on budget exhaustion.

    The spectral step is carried in ``st.step`` across calls.
    """
    f_hist = [st.f] * _N_PREV
    f_target = 0.5 * kappa * kappa
    tiny = np.finfo(float).tiny
    failures = 0
    it = 0
    while True:
        gap, _ = _lasso_gap(prob, st, tau)
        rgap = abs(gap) / max(st.f, tiny)
        root_err = abs(st.f - f_target) / max(st.f, tiny)
        if rgap <= max(tol, 0.1 * root_err):
            return True
        if prob.exhausted:
            return False
        res = _line_search(prob, st, tau, st.step, max(f_hist))
        if res is None:
            failures += 1
            if failures > _LINE_MAXITER:
                return True  # stalled at working precision
            st.step = max(_STEP_MIN, 0.1 * st.step)
            continue
        it += 1
        x_old, g_old = st.x, st.g
        st.x, st.r, st.f = res
        st.g = prob.gradient(st.r)
        s = st.x - x_old
        sy = _real_dot(s, st.g - g_old)
        st.step = _STEP_MAX if sy <= 0 else min(_STEP_MAX, max(_STEP_MIN, _real_dot(s, s) / sy))
        f_hist[it % _N_PREV] = st.f


def pareto_root_find(y, grid: ImageGrid, geom: MeasurementGeometry,
                     config: SolverConfig | None = None,
                     op: LinearOperator | None = None):
    """Pareto-curve root finding; returns ``(x, report)``.

    ``report.trajectory`` holds ``(tau, residual, weighted_l1, matvecs)``
    after each outer (Newton) step.
    """
    op = op if op is not None else IsarOperator(grid, geom)
    return _solve(op, y, config or SolverConfig())


def _solve(op: LinearOperator, y, config: SolverConfig):
    y = np.asarray(y, dtype=np.complex128).ravel()
    m, n = op.shape
    if y.size != m:
        raise ValueError(f"y has length {y.size}, expected {m}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    w = np.ones(n) if config.weights is None else validate_weights(config.weights, n)
    kappa = config.resolve_kappa(y)
    tol = config.optimality_tol
    ynorm = float(np.linalg.norm(y))

    x = np.zeros(n, dtype=np.complex128)
    if ynorm <= kappa:
        return x, SolverReport(residual=ynorm, weighted_l1=0.0, matvecs=0,
                               termination=CONVERGED, kappa=kappa,
                               trajectory=[(0.0, ynorm, 0.0, 0)])

    prob = _Problem(op, y, w, config.max_matvecs)
    st = _LassoState(prob, x)
    tau = 0.0
    trajectory = []
    termination = BUDGET_EXHAUSTED
    best = None
    outer = 0
    for outer in range(1, config.max_outer_iterations + 1):
        ok = _spg_lasso(prob, st, tau, kappa, tol)
        rnorm = float(np.sqrt(2.0 * st.f))
        gnorm = prob.dual_norm(st.g)
        nrm = weighted_l1(st.x, w)
        trajectory.append((tau, rnorm, nrm, prob.matvecs))
        logger.debug("outer %d tau=%.6e residual=%.6e", outer, tau, rnorm)
        if rnorm <= kappa * (1 + tol) and (best is None or nrm < best[1]):
            best = (st.x.copy(), nrm)
        if abs(rnorm - kappa) <= tol * kappa:
            bound = _dual_bound(y, st.r, -st.g, w, kappa)
            if abs(nrm - bound) <= tol * max(nrm, np.finfo(float).tiny):
                termination = CONVERGED
                break
        if not ok or gnorm == 0:
            break
        tau_new = max(0.0, tau + (rnorm - kappa) * rnorm / gnorm)
        if tau_new < tau:
            st.x = prob.project(st.x, tau_new)
            st.r = prob.residual(st.x)
            st.g = prob.gradient(st.r)
            st.f = 0.5 * _real_dot(st.r, st.r)
        tau = tau_new

    x = st.x
    if termination != CONVERGED and best is not None:
        # fall back to the sparsest iterate that met the misfit bound
        x = best[0]
    r = y - op.matvec(x)
    g = op.rmatvec(r)
    rnorm = float(np.linalg.norm(r))
    report = SolverReport(
        residual=rnorm,
        weighted_l1=weighted_l1(x, w),
        matvecs=prob.matvecs + 2,
        termination=termination,
        kappa=kappa,
        tau=tau,
        dual_bound=_dual_bound(y, r, g, w, kappa),
        outer_iterations=outer,
        trajectory=trajectory,
    )
    return x, report


def _dual_bound(y, r, g, w, kappa) -> float:
    """Weak-duality lower bound on the optimal weighted one-norm."""
    gnorm = float(np.max(np.abs(g) / w))
    if gnorm == 0:
        return 0.0
    return max(0.0, (_real_dot(y, r) - kappa * float(np.linalg.norm(r))) / gnorm)


def solve_bpdn(y, grid: ImageGrid, geom: MeasurementGeometry,
               config: SolverConfig | None = None,
               op: LinearOperator | None = None):
    """Weighted BPDN image ``x`` and its :class:`SolverReport`."""
    return pareto_root_find(y, grid, geom, config, op)


def write_iteration_log(path, report: SolverReport) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["outer_iter", "tau", "residual", "weighted_l1", "matvecs"])
        for i, (tau, res, nrm, mv) in enumerate(report.trajectory, 1):
            wr.writerow([i, repr(tau), repr(res), repr(nrm), mv])
