"""
LP Core Module
Finite linear programs solved with HiGHS through scipy, returned together
with row duals and the residuals that certify them
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import config
from .exceptions import (
    DimensionMismatchError, DomainError, MalformedProgramError, NumericalFailureError
)
from .retry_utils import DEFAULT_RETRY_CONFIG, log_progress, retry_with_progress

logger = logging.getLogger(__name__)

ROW_SENSES = ('<=', '=', '>=')

STATUS_OPTIMAL = 'optimal'
STATUS_INFEASIBLE = 'infeasible'
STATUS_UNBOUNDED = 'unbounded'
STATUS_NUMERICAL_FAILURE = 'numerical-failure'


@dataclass
class LinearProgram:
    """
    max/min c.x subject to row constraints A x (<=|=|>=) rhs and lower <= x <= upper

    A is stored as a scipy CSR matrix; infinite bounds are allowed.
    """
    sense: str
    c: np.ndarray
    A: sparse.csr_matrix
    row_senses: List[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: Optional[List[str]] = None
    row_names: Optional[List[str]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        self.A = sparse.csr_matrix(self.A, dtype=float)
        self.row_senses = list(self.row_senses)
        self.validate()

    @property
    def num_vars(self):
        return self.c.size

    @property
    def num_rows(self):
        return self.rhs.size

    def validate(self):
        """Raise MalformedProgramError on inconsistent data"""
        if self.sense not in ('max', 'min'):
            raise MalformedProgramError(f"objective sense must be 'max' or 'min', got {self.sense!r}")
        n, m = self.num_vars, self.num_rows
        if self.A.shape != (m, n):
            raise MalformedProgramError(f"A has shape {self.A.shape}, expected {(m, n)}")
        if len(self.row_senses) != m:
            raise MalformedProgramError(f"{len(self.row_senses)} row senses for {m} rows")
        bad = [s for s in self.row_senses if s not in ROW_SENSES]
        if bad:
            raise MalformedProgramError(f"unknown row sense {bad[0]!r}")
        if self.lower.size != n or self.upper.size != n:
            raise MalformedProgramError("bounds do not match the number of variables")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.rhs))
                and np.all(np.isfinite(self.A.data))):
            raise MalformedProgramError("non-finite objective, right-hand side or coefficient")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise MalformedProgramError("NaN bound")
        if np.any(self.lower > self.upper):
            raise MalformedProgramError("lower bound above upper bound")
        if self.var_names is not None and len(self.var_names) != n:
            raise MalformedProgramError("var_names length mismatch")
        if self.row_names is not None and len(self.row_names) != m:
            raise MalformedProgramError("row_names length mismatch")

    def scaled_objective(self, factor):
        """Copy with the objective multiplied by factor"""
        return LinearProgram(self.sense, self.c * factor, self.A.copy(), list(self.row_senses),
                             self.rhs.copy(), self.lower.copy(), self.upper.copy(),
                             self.var_names, self.row_names)


@dataclass
class LPSolution:
    """Solver output with duals given as shadow prices d(objective)/d(rhs)"""
    status: str
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None
    dual_objective: Optional[float] = None
    primal_infeasibility: float = math.inf
    dual_infeasibility: float = math.inf
    complementarity: float = math.inf
    method: Optional[str] = None
    tolerance: Optional[float] = None
    message: str = ''

    @property
    def optimal(self):
        return self.status == STATUS_OPTIMAL

    @property
    def gap(self):
        if self.objective is None or self.dual_objective is None:
            return math.inf
        return abs(self.dual_objective - self.objective)


@dataclass
class DualityCheck:
    """Outcome of weak_duality_check"""
    ok: bool
    gap: float
    primal_objective: float
    dual_objective: float
    primal_infeasibility: float
    dual_infeasibility: float
    problems: List[str] = field(default_factory=list)


# ==================== RESIDUALS ====================

def _row_activity(lp, x):
    return lp.A @ x


def primal_infeasibility(lp: LinearProgram, x) -> float:
    """Largest violation of a row or bound at x"""
    x = np.asarray(x, dtype=float)
    act = _row_activity(lp, x)
    senses = np.asarray(lp.row_senses)
    viol = np.zeros(lp.num_rows)
    le, eq, ge = senses == '<=', senses == '=', senses == '>='
    viol[le] = np.maximum(0.0, act[le] - lp.rhs[le])
    viol[ge] = np.maximum(0.0, lp.rhs[ge] - act[ge])
    viol[eq] = np.abs(act[eq] - lp.rhs[eq])
    bound_viol = np.maximum(np.maximum(0.0, lp.lower - x), np.maximum(0.0, x - lp.upper))
    worst = 0.0
    if viol.size:
        worst = max(worst, float(viol.max()))
    if bound_viol.size:
        worst = max(worst, float(bound_viol.max()))
    return worst


def dual_residuals(lp: LinearProgram, y, threshold: float = 0.0):
    """
    Split c - A^T y into bound multipliers and report what cannot be absorbed

    For a max problem the shadow prices satisfy: y >= 0 on <= rows, y <= 0 on
    >= rows, multipliers of lower bounds <= 0 and of upper bounds >= 0. All
    signs flip for a min problem.

    Returns:
        (dual_objective, dual_infeasibility, sign_problems)
    """
    y = np.asarray(y, dtype=float)
    s = 1.0 if lp.sense == 'max' else -1.0
    senses = np.asarray(lp.row_senses)

    sign_viol = np.zeros(lp.num_rows)
    le, ge = senses == '<=', senses == '>='
    sign_viol[le] = np.maximum(0.0, -s * y[le])
    sign_viol[ge] = np.maximum(0.0, s * y[ge])
    problems = [f"row {i} has a multiplier of the wrong sign ({y[i]:.3e})"
                for i in np.flatnonzero(sign_viol > threshold)]

    d = lp.c - lp.A.T @ y
    has_lower = np.isfinite(lp.lower)
    has_upper = np.isfinite(lp.upper)
    # lower-bound multipliers carry sign -s, upper-bound ones sign +s
    r_lower = np.where(has_lower, np.where(s * d < 0, d, 0.0), 0.0)
    r_upper = np.where(has_upper, np.where(s * d > 0, d, 0.0), 0.0)
    leftover = d - r_lower - r_upper

    dual_obj = float(lp.rhs @ y)
    dual_obj += float(np.dot(np.where(has_lower, lp.lower, 0.0), r_lower))
    dual_obj += float(np.dot(np.where(has_upper, lp.upper, 0.0), r_upper))

    infeas = 0.0
    if leftover.size:
        infeas = max(infeas, float(np.abs(leftover).max()))
    if sign_viol.size:
        infeas = max(infeas, float(sign_viol.max()))
    return dual_obj, infeas, problems


def weak_duality_check(lp: LinearProgram, primal, dual, tol: float = config.LP_DEFAULT_TOLERANCE) -> DualityCheck:
    """
    Verify a primal point and row duals against each other

    Checks primal feasibility, dual sign conditions and stationarity residuals,
    and that the primal objective does not beat the dual objective (max
    problem: primal <= dual). The gap is reported as dual - primal for max and
    primal - dual for min problems.
    """
    primal = np.asarray(primal, dtype=float).ravel()
    dual = np.asarray(dual, dtype=float).ravel()
    if primal.size != lp.num_vars:
        raise DimensionMismatchError("primal vector", lp.num_vars, primal.size)
    if dual.size != lp.num_rows:
        raise DimensionMismatchError("dual vector", lp.num_rows, dual.size)

    p_obj = float(lp.c @ primal)
    scale = tol * (1.0 + abs(p_obj))
    d_obj, d_inf, problems = dual_residuals(lp, dual, threshold=scale)
    p_inf = primal_infeasibility(lp, primal)

    if p_inf > scale:
        problems.append(f"primal infeasibility {p_inf:.3e}")
    if d_inf > scale:
        problems.append(f"dual infeasibility {d_inf:.3e}")

    gap = d_obj - p_obj if lp.sense == 'max' else p_obj - d_obj
    if gap < -scale:
        problems.append(f"primal objective beats dual objective by {-gap:.3e}")

    return DualityCheck(
        ok=not problems,
        gap=gap,
        primal_objective=p_obj,
        dual_objective=d_obj,
        primal_infeasibility=p_inf,
        dual_infeasibility=d_inf,
        problems=problems
    )


# ==================== SOLVE ====================

def _solver_options(method, tol):
    feas = max(tol / 10.0, 1e-10)
    options = {
        'presolve': True,
        'primal_feasibility_tolerance': feas,
        'dual_feasibility_tolerance': feas,
    }
    if method in ('highs', 'highs-ipm'):
        options['ipm_optimality_tolerance'] = max(tol / 10.0, 1e-12)
    return options


def _solve_once(lp: LinearProgram, tol: float, method: str, accept_tol: Optional[float] = None) -> LPSolution:
    """One HiGHS call plus residual checks; raises NumericalFailureError"""
    s_obj = -1.0 if lp.sense == 'max' else 1.0
    senses = np.asarray(lp.row_senses)
    le_idx = np.flatnonzero(senses == '<=')
    ge_idx = np.flatnonzero(senses == '>=')
    eq_idx = np.flatnonzero(senses == '=')
    ub_idx = np.concatenate([le_idx, ge_idx])

    A_ub = b_ub = A_eq = b_eq = None
    if ub_idx.size:
        flip = np.concatenate([np.ones(le_idx.size), -np.ones(ge_idx.size)])
        A_ub = sparse.diags(flip) @ lp.A[ub_idx]
        b_ub = flip * lp.rhs[ub_idx]
    if eq_idx.size:
        A_eq = lp.A[eq_idx]
        b_eq = lp.rhs[eq_idx]

    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(lp.lower, lp.upper)]

    res = linprog(s_obj * lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method=method, options=_solver_options(method, tol))

    if res.status == 2:
        return LPSolution(status=STATUS_INFEASIBLE, method=method, tolerance=tol, message=res.message)
    if res.status == 3:
        return LPSolution(status=STATUS_UNBOUNDED, method=method, tolerance=tol, message=res.message)
    if res.status != 0 or res.x is None:
        raise NumericalFailureError(f"solver status {res.status}: {res.message}", method, tol)

    duals = np.zeros(lp.num_rows)
    if ub_idx.size:
        marg = np.asarray(res.ineqlin.marginals, dtype=float)
        duals[le_idx] = s_obj * marg[:le_idx.size]
        duals[ge_idx] = -s_obj * marg[le_idx.size:]
    if eq_idx.size:
        duals[eq_idx] = s_obj * np.asarray(res.eqlin.marginals, dtype=float)

    x = np.asarray(res.x, dtype=float)
    objective = float(lp.c @ x)
    dual_obj, d_inf, _ = dual_residuals(lp, duals)
    p_inf = primal_infeasibility(lp, x)
    comp = abs(dual_obj - objective)

    solution = LPSolution(
        status=STATUS_OPTIMAL,
        x=x,
        duals=duals,
        objective=objective,
        dual_objective=dual_obj,
        primal_infeasibility=p_inf,
        dual_infeasibility=d_inf,
        complementarity=comp,
        method=method,
        tolerance=tol,
        message=res.message
    )

    limit = (accept_tol or tol) * (1.0 + abs(objective))
    if max(p_inf, d_inf, comp) > limit:
        raise NumericalFailureError(
            f"residuals primal={p_inf:.2e} dual={d_inf:.2e} gap={comp:.2e} exceed {limit:.2e}",
            method, tol
        )
    return solution


def solve(lp: LinearProgram, tol: float = config.LP_DEFAULT_TOLERANCE, retry_config=None) -> LPSolution:
    """
    Solve an LP and return primal values, shadow-price duals and residuals

    A solution whose residuals exceed tol * (1 + |objective|) is retried with a
    tighter tolerance and another HiGHS method; if every attempt fails the
    status is 'numerical-failure'.

    Args:
        lp: LinearProgram
        tol: Tolerance in [1e-12, 1e-4]
        retry_config: RetryConfig (DEFAULT_RETRY_CONFIG if None)

    Returns:
        LPSolution
    """
    if not (config.LP_MIN_TOLERANCE <= tol <= config.LP_MAX_TOLERANCE):
        raise DomainError("tol", tol, f"[{config.LP_MIN_TOLERANCE}, {config.LP_MAX_TOLERANCE}]")
    lp.validate()
    retry_config = retry_config or DEFAULT_RETRY_CONFIG

    logger.debug("solving %s LP with %d variables, %d rows", lp.sense, lp.num_vars, lp.num_rows)
    try:
        return retry_with_progress(
            _solve_once,
            args=(lp,),
            kwargs={"accept_tol": tol},
            config=retry_config,
            progress_callback=log_progress,
            tol=tol
        )
    except NumericalFailureError as e:
        logger.warning("LP solve failed: %s", e.details)
        return LPSolution(status=STATUS_NUMERICAL_FAILURE, tolerance=tol, message=e.details or e.message)


# ==================== LP FILE DUMP ====================

def _format_terms(coeffs, names):
    parts = []
    for j, v in coeffs:
        sign = '-' if v < 0 else '+'
        parts.append(f"{sign} {abs(v)!r} {names[j]}")
    if not parts:
        return '0 ' + names[0] if names else '0'
    text = ' '.join(parts)
    return text[2:] if text.startswith('+ ') else text


def write_lp_file(lp: LinearProgram, path) -> None:
    """Write the program in CPLEX LP text format for debugging"""
    names = lp.var_names or [f"x{j}" for j in range(lp.num_vars)]
    rows = lp.row_names or [f"r{i}" for i in range(lp.num_rows)]
    csr = lp.A.tocsr()

    lines = [f"\\ {config.APP_NAME} {config.APP_VERSION}",
             'Maximize' if lp.sense == 'max' else 'Minimize',
             ' obj: ' + _format_terms([(j, v) for j, v in enumerate(lp.c) if v != 0], names),
             'Subject To']
    for i in range(lp.num_rows):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        terms = list(zip(csr.indices[start:end], csr.data[start:end]))
        lines.append(f" {rows[i]}: {_format_terms(terms, names)} {lp.row_senses[i]} {lp.rhs[i]!r}")
    lines.append('Bounds')
    for j in range(lp.num_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if not np.isfinite(lo) and not np.isfinite(hi):
            lines.append(f" {names[j]} free")
        else:
            lo_s = '-inf' if not np.isfinite(lo) else repr(float(lo))
            hi_s = '+inf' if not np.isfinite(hi) else repr(float(hi))
            lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    lines.append('End')

    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')
