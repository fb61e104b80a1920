"""
Gap Bound Module
Truncated factor-revealing LP, its dual certificate, the search for violated
cut-polytope constraints on the sphere, and certificate verification
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, NamedTuple, Optional

import mpmath
import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from . import config
from . import lpcore
from .cutpoly import LinearInequality, family_inequalities, validate_inequality
from .exceptions import (
    DegreeCheckError, DimensionMismatchError, DomainError, EmptyGridError, GramCheckError,
    InequalityCheckError, InfeasibleProgramError, NumericalFailureError, SizeLimitError,
    TailRuleError, TransformCheckError, UnboundedProgramError, WeightCheckError
)
from .jacobi import JacobiBasis, decay_envelope, envelope_table, eval_all, jacobi_table
from .kernels import InvariantKernel, alpha_gw
from .streams import as_seed_sequence, map_substreams, substream

logger = logging.getLogger(__name__)

LEVEL_FLOAT = 'float'
LEVEL_HIGH_PRECISION = 'high-precision'
LEVEL_TAIL = 'tail-bounded'
LEVEL_DEGREE = 'degree-bounded'


# ==================== TYPES ====================

@dataclass
class SampleGrid:
    """Inner products t in [-1, 1), sorted and distinct, with optional weights z"""
    ts: np.ndarray
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float).ravel()
        if ts.size == 0:
            raise EmptyGridError()
        if np.any(ts < -1.0) or np.any(ts >= 1.0) or not np.all(np.isfinite(ts)):
            raise DomainError("grid point", float(ts[np.argmax(np.abs(ts))]), "[-1, 1)")
        if np.any(np.diff(ts) <= 0):
            raise DomainError("grid", "unsorted or repeated points", "sorted distinct points")
        self.ts = ts
        if self.z is not None:
            z = np.asarray(self.z, dtype=float).ravel()
            if z.size != ts.size:
                raise DimensionMismatchError("grid weights", ts.size, z.size)
            self.z = z

    def __len__(self):
        return self.ts.size

    def merged(self, extra):
        """Grid with extra points added"""
        return SampleGrid(np.unique(np.concatenate([self.ts, np.asarray(extra, dtype=float)])))


def default_grid(size: int = config.DEFAULT_GRID_SIZE, top: float = config.GRID_TOP) -> SampleGrid:
    """size equally spaced points in [-1, top]"""
    if size < 1:
        raise EmptyGridError()
    if size == 1:
        return SampleGrid(np.array([-1.0]))
    return SampleGrid(np.linspace(-1.0, top, size))


@dataclass
class CutConstraint:
    """Valid inequality placed at points of S^{n-1}, with its transform r_0..r_d"""
    inequality: LinearInequality
    points: np.ndarray
    r: np.ndarray
    y: float = 0.0
    _extended: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def size(self):
        return self.inequality.size

    @property
    def beta(self):
        return self.inequality.beta

    def gram(self):
        P = np.asarray(self.points, dtype=float)
        return P @ P.T

    def transform_through(self, kmax: int) -> np.ndarray:
        """r_0..r_kmax recomputed from the placement, cached"""
        if self._extended is None or self._extended.size <= kmax:
            P = np.atleast_2d(np.asarray(self.points, dtype=float))
            self._extended = constraint_to_rk(self.inequality, P, P.shape[1], kmax)
        return self._extended[:kmax + 1]


@dataclass
class DualCertificate:
    """(lambda, z, y) for the dual relaxation and the bound it proves"""
    n: int
    d: int
    k_check: int
    lam: float
    grid: SampleGrid
    constraints: List[CutConstraint]
    alpha: float
    verification_level: str = LEVEL_FLOAT
    meta: Dict = field(default_factory=dict)

    def dual_objective(self, precision: Optional[int] = None):
        """lambda + sum z(t) - sum y beta"""
        z = self.grid.z if self.grid.z is not None else np.zeros(len(self.grid))
        if precision is None:
            return float(self.lam + math.fsum(z) - math.fsum(c.y * c.beta for c in self.constraints))
        with mpmath.workdps(precision):
            total = mpmath.mpf(self.lam) + mpmath.fsum(mpmath.mpf(v) for v in z)
            total -= mpmath.fsum(mpmath.mpf(c.y) * mpmath.mpf(c.beta) for c in self.constraints)
            return total


class BoundSolution(NamedTuple):
    alpha: float
    kernel: InvariantKernel
    certificate: DualCertificate
    solution: lpcore.LPSolution
    degrees: tuple = ()         # columns above d in the final LP


class TailColumn(NamedTuple):
    """Envelope weights of the grid and constraint terms for degrees >= degree"""
    degree: int
    grid: np.ndarray
    constraints: np.ndarray


class Violation(NamedTuple):
    constraint: CutConstraint
    amount: float


class RoundRecord(NamedTuple):
    round: int
    bound: float
    constraints: int
    violations: int


class LoopResult(NamedTuple):
    bound: float
    certificate: DualCertificate
    history: List[RoundRecord]
    kernel: InvariantKernel


# ==================== TRANSFORMS ====================

def _normalized_points(points, n):
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != n:
        raise DimensionMismatchError("point dimension", n, P.shape[1])
    norms = np.linalg.norm(P, axis=1)
    if np.any(np.abs(norms - 1.0) > config.UNIT_VECTOR_TOLERANCE):
        raise DomainError("point norm", float(norms[np.argmax(np.abs(norms - 1.0))]), "{1}")
    return P / norms[:, None]


def _pair_terms(Z, G):
    """Diagonal contribution and (2 Z_ij, G_ij) over pairs i < j"""
    iu, ju = np.triu_indices(Z.shape[0], k=1)
    return float(np.trace(Z)), 2.0 * Z[iu, ju], np.clip(G[iu, ju], -1.0, 1.0)


def constraint_to_rk(ineq: LinearInequality, points, n: int, d: int) -> np.ndarray:
    """
    r_k = sum over x, y of Z(x, y) R_k(x . y), k = 0..d

    Raises DomainError for points further than 1e-9 from the unit sphere.
    """
    if d < 0:
        raise DomainError("d", d, "integers >= 0")
    P = _normalized_points(points, n)
    if P.shape[0] != ineq.size:
        raise DimensionMismatchError("number of points", ineq.size, P.shape[0])
    diag, weights, ts = _pair_terms(ineq.Z, P @ P.T)
    r = np.full(d + 1, diag)
    if ts.size:
        r += weights @ jacobi_table(JacobiBasis.for_dimension(n), d, ts)
    return r


def make_constraint(ineq: LinearInequality, points, n: int, d: int, y: float = 0.0) -> CutConstraint:
    P = _normalized_points(points, n)
    return CutConstraint(ineq, P, constraint_to_rk(ineq, P, n, d), y)


def _unit_gram(points):
    P = np.asarray(points, dtype=float)
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    return np.clip(P @ P.T, -1.0, 1.0)


def _constraint_tail(c: CutConstraint, basis: JacobiBasis, k: int) -> float:
    """
    Bound on r_j for every j >= k

    Pairs at inner product 1 stay exact, pairs at -1 count |Z| and the
    rest |Z| times the envelope.
    """
    diag, wts, gs = _pair_terms(c.inequality.Z, _unit_gram(c.points))
    tight_one = np.abs(gs - 1.0) <= config.DOMAIN_TOLERANCE
    rest = ~tight_one
    value = diag + float(wts[tight_one].sum())
    if rest.any():
        value += float(np.dot(np.abs(wts[rest]), envelope_table(basis, k, gs[rest])))
    return value


def tail_column(n: int, k: int, ts, constraints: List[CutConstraint]) -> Optional[TailColumn]:
    """Envelope weights at degree k, or None without a decay envelope"""
    basis = JacobiBasis.for_dimension(n)
    grid_env = envelope_table(basis, k, ts)
    if grid_env is None:
        return None
    return TailColumn(k, grid_env, np.array([_constraint_tail(c, basis, k) for c in constraints]))


def _tail_decays(n: int, k: int) -> bool:
    env = decay_envelope(JacobiBasis.for_dimension(n), k, 0.0)
    return env is not None and env < 1.0


# ==================== PRIMAL ====================

def build_primal(n: int, d: int, grid: SampleGrid, constraints: List[CutConstraint],
                 extra_degrees=(), tail: Optional[TailColumn] = None) -> lpcore.LinearProgram:
    """
    max alpha over (alpha, a_0..a_d) subject to

        sum a_k = 1
        alpha (1 - t) + sum a_k R_k(t) <= 1      for t in the grid
        sum a_k r_k >= beta                       for each constraint

    extra_degrees adds columns a_k for degrees above d. tail adds one column
    whose dual row reads lambda >= sum z(t) env(t) + sum y c, the tail rule
    at tail.degree.
    """
    if d < 1:
        raise DomainError("d", d, "integers >= 1")
    if len(grid) == 0:
        raise EmptyGridError()
    for c in constraints:
        if c.r.size != d + 1:
            raise DimensionMismatchError("constraint transform length", d + 1, c.r.size)
    extra = sorted({int(k) for k in extra_degrees})
    if extra and extra[0] <= d:
        raise DomainError("extra degree", extra[0], f"integers > d = {d}")
    if tail is not None:
        if tail.grid.size != len(grid):
            raise DimensionMismatchError("tail grid weights", len(grid), tail.grid.size)
        if tail.constraints.size != len(constraints):
            raise DimensionMismatchError("tail constraint weights", len(constraints), tail.constraints.size)

    kmax = extra[-1] if extra else d
    degrees = list(range(d + 1)) + extra
    table = jacobi_table(JacobiBasis.for_dimension(n), kmax, grid.ts)[:, degrees]
    num_a = len(degrees)

    norm = np.concatenate([[0.0], np.ones(num_a)])
    grid_block = np.hstack([(1.0 - grid.ts)[:, None], table])
    cut_block = np.array([np.concatenate([[0.0], c.r, c.transform_through(kmax)[extra] if extra else []])
                          for c in constraints]).reshape(len(constraints), 1 + num_a)
    var_names = ['alpha'] + [f"a{k}" for k in degrees]
    if tail is not None:
        norm = np.append(norm, 1.0)
        grid_block = np.hstack([grid_block, -tail.grid[:, None]])
        cut_block = np.hstack([cut_block, tail.constraints[:, None]])
        var_names.append('tail')

    rows = [sparse.csr_matrix(norm[None, :]), sparse.csr_matrix(grid_block)]
    if constraints:
        rows.append(sparse.csr_matrix(cut_block))
    A = sparse.vstack(rows).tocsr()
    num_vars = len(var_names)
    row_senses = ['='] + ['<='] * len(grid) + ['>='] * len(constraints)
    rhs = np.concatenate([[1.0], np.ones(len(grid)), [c.beta for c in constraints]])
    c = np.zeros(num_vars)
    c[0] = 1.0
    lower = np.concatenate([[-np.inf], np.zeros(num_vars - 1)])
    upper = np.full(num_vars, np.inf)

    row_names = (['norm'] + [f"grid{i}" for i in range(len(grid))]
                 + [f"cut{j}" for j in range(len(constraints))])
    return lpcore.LinearProgram('max', c, A, row_senses, rhs, lower, upper, var_names, row_names)


def _solve_checked(lp, tol):
    sol = lpcore.solve(lp, tol=tol)
    if sol.status == lpcore.STATUS_INFEASIBLE:
        raise InfeasibleProgramError("truncated gap LP")
    if sol.status == lpcore.STATUS_UNBOUNDED:
        raise UnboundedProgramError("truncated gap LP")
    if not sol.optimal:
        raise NumericalFailureError(sol.message or "gap LP did not solve", tolerance=tol)
    check = lpcore.weak_duality_check(lp, sol.x, sol.duals, tol=tol)
    if not check.ok:
        raise NumericalFailureError("; ".join(check.problems), tolerance=tol)
    return sol


def _split_duals(sol, g):
    lam = float(sol.duals[0])
    z = np.clip(sol.duals[1:1 + g], 0.0, None)
    y = np.clip(-sol.duals[1 + g:], 0.0, None)
    return lam, z, y


def high_degree_slacks(n: int, d: int, k_check: int, ts, z, constraints: List[CutConstraint], y,
                       lam: float) -> np.ndarray:
    """lambda + sum z(t) R_k(t) - sum y r_k for k = d+1..k_check, in double"""
    if k_check <= d:
        return np.zeros(0)
    z = np.asarray(z, dtype=float)
    support = z > 0
    ts = np.asarray(ts, dtype=float)[support]
    slack = np.full(k_check - d, float(lam))
    if ts.size:
        slack += z[support] @ jacobi_table(JacobiBasis.for_dimension(n), k_check, ts)[:, d + 1:]
    for c, w in zip(constraints, y):
        if w > 0:
            slack -= w * c.transform_through(k_check)[d + 1:]
    return slack


def _primal_kernel(n, d, extra, x):
    """Kernel from the a-columns, renormalized when the tail column holds mass"""
    degrees = list(range(d + 1)) + list(extra)
    coeffs = np.zeros(degrees[-1] + 1)
    coeffs[degrees] = np.clip(x[1:1 + len(degrees)], 0.0, None)
    total = coeffs.sum()
    if total <= config.KERNEL_SUM_TOLERANCE:
        raise NumericalFailureError("primal kernel has no mass outside the tail column")
    return InvariantKernel(n, coeffs / total, label=f"primal-d{d}")


def solve_bound(n: int, d: int, grid: SampleGrid, constraints: List[CutConstraint],
                tol: float = config.LP_DEFAULT_TOLERANCE, k_check: Optional[int] = None,
                extra_degrees=()) -> BoundSolution:
    """
    Solve the truncated primal and read the dual certificate off its duals

    lambda is the normalization row's dual, z the grid rows' duals and y the
    negated duals of the constraint rows. Weights below the drop threshold
    are removed and the bound recomputed.

    With k_check, degree columns above d are added while some dual slack up
    to k_check is negative, and the tail rule at k_check + 1 enters as one
    more column when the decay envelope is below 1. The certificate then
    holds termwise through k_check and its tail needs no lambda increase.
    """
    if k_check is not None and k_check < d:
        raise DomainError("K_check", k_check, f"integers >= d = {d}")
    tail = None
    if k_check is not None and _tail_decays(n, k_check + 1):
        tail = tail_column(n, k_check + 1, grid.ts, constraints)

    extra = sorted({int(k) for k in extra_degrees})
    g = len(grid)
    passes = 0
    while True:
        lp = build_primal(n, d, grid, constraints, extra, tail)
        sol = _solve_checked(lp, tol)
        lam, z, y = _split_duals(sol, g)
        if k_check is None:
            break
        slack = high_degree_slacks(n, d, k_check, grid.ts, z, constraints, y, lam)
        active = set(extra)
        order = np.argsort(slack)
        new = [d + 1 + int(i) for i in order[:config.DEGREE_COLUMNS_PER_PASS]
               if slack[i] < -config.VIOLATION_FACTOR * tol and d + 1 + int(i) not in active]
        if not new:
            break
        passes += 1
        if passes > config.MAX_DEGREE_PASSES:
            logger.warning("dual slack still negative at degree %d (%.3e) after %d passes",
                           new[0], float(slack[new[0] - d - 1]), config.MAX_DEGREE_PASSES)
            break
        extra = sorted(active.union(new))
        logger.debug("pass %d: %d degree columns above d (worst slack %.3e at k=%d)",
                     passes, len(extra), float(slack[order[0]]), d + 1 + int(order[0]))

    alpha = float(sol.x[0])
    kernel = _primal_kernel(n, d, extra, sol.x)

    keep_t = z >= config.DUAL_DROP_THRESHOLD
    cert_grid = SampleGrid(grid.ts[keep_t], z[keep_t]) if keep_t.any() else SampleGrid(grid.ts[:1], np.zeros(1))
    kept = [replace(c, y=float(weight)) for c, weight in zip(constraints, y)
            if weight >= config.DUAL_DROP_THRESHOLD]

    k_check = config.default_k_check(d) if k_check is None else k_check
    cert = DualCertificate(n=n, d=d, k_check=k_check, lam=lam,
                           grid=cert_grid, constraints=kept, alpha=0.0)
    cert.alpha = cert.dual_objective()
    logger.info("n=%d d=%d: primal %.9f, certificate %.9f (%d grid points, %d constraints, "
                "%d degree columns above d)", n, d, alpha, cert.alpha, len(cert_grid), len(kept), len(extra))
    return BoundSolution(alpha, kernel, cert, sol, tuple(extra))


# ==================== VIOLATION SEARCH ====================

def _violation_objective(kernel: InvariantKernel, ineq: LinearInequality, n: int):
    """g(v) = sum Z(i,j) K(x_i . x_j) - beta with x_i = v_i / |v_i|, and its gradient"""
    m = ineq.size
    iu, ju = np.triu_indices(m, k=1)
    zp = 2.0 * ineq.Z[iu, ju]
    diag = float(np.trace(ineq.Z))

    def fun(v):
        V = v.reshape(m, n)
        norms = np.linalg.norm(V, axis=1)
        norms = np.where(norms > 0, norms, 1.0)
        X = V / norms[:, None]
        ts = np.clip((X @ X.T)[iu, ju], -1.0, 1.0)
        value = diag + float(zp @ kernel.evaluate(ts)) - ineq.beta
        W = np.zeros((m, m))
        W[iu, ju] = zp * kernel.derivative(ts)
        W = W + W.T
        grad_x = W @ X
        grad_v = (grad_x - np.sum(grad_x * X, axis=1, keepdims=True) * X) / norms[:, None]
        return value, grad_v.ravel()

    return fun


def _search_one(kernel, ineq, n, rng, max_iter):
    fun = _violation_objective(kernel, ineq, n)
    v0 = rng.standard_normal(ineq.size * n)
    res = minimize(fun, v0, jac=True, method='L-BFGS-B', options={'maxiter': max_iter})
    V = res.x.reshape(ineq.size, n)
    X = V / np.linalg.norm(V, axis=1, keepdims=True)
    return float(fun(X.ravel())[0]), X


def search_violations(kernel: InvariantKernel, inequalities: List[LinearInequality], n: int,
                      restarts: int = config.SEARCH_RESTARTS, seed=0,
                      tol: float = config.LP_DEFAULT_TOLERANCE, threads=None,
                      max_iter: int = config.SEARCH_MAX_ITER) -> List[Violation]:
    """
    Place each inequality on the sphere to minimize its value under K

    Runs restarts random starts per inequality; an inequality is reported
    with its best placement when the minimum is below -VIOLATION_FACTOR * tol.
    Most violated first.
    """
    if n != kernel.n:
        raise DimensionMismatchError("kernel dimension", n, kernel.n)
    if restarts < 1:
        raise DomainError("restarts", restarts, "integers >= 1")
    seq = as_seed_sequence(seed, 'search')
    jobs = [(i, r) for i in range(len(inequalities)) for r in range(restarts)]
    results = map_substreams(
        lambda rng, job: _search_one(kernel, inequalities[job[0]], n, rng, max_iter),
        seq, jobs, threads
    )

    best = {}
    for (i, _), (value, X) in zip(jobs, results):
        if i not in best or value < best[i][0]:
            best[i] = (value, X)

    threshold = -config.VIOLATION_FACTOR * tol
    found = []
    for i, (value, X) in sorted(best.items()):
        if value < threshold:
            found.append(Violation(make_constraint(inequalities[i], X, n, kernel.degree), -value))
    found.sort(key=lambda v: -v.amount)
    logger.debug("violation search: %d of %d inequalities violated", len(found), len(inequalities))
    return found


# ==================== BOUND LOOP ====================

def bound_loop(n: int, d: int = config.EXPLORATION_DEGREE, grid: Optional[SampleGrid] = None,
               families=None, max_rounds: int = config.DEFAULT_ROUNDS, seed=0,
               tol: float = config.LP_DEFAULT_TOLERANCE, restarts: int = config.SEARCH_RESTARTS,
               threads=None, extra_inequalities: Optional[List[LinearInequality]] = None,
               progress_callback: Optional[Callable] = None, k_check: Optional[int] = None) -> LoopResult:
    """
    Alternate LP solves and violation searches

    max_rounds = 0 solves once with no constraints. Each round adds at most
    MAX_VIOLATIONS_PER_ROUND of the most violated placements; constraints are
    never removed, so the bound history does not increase beyond the LP
    tolerance. Every solve keeps the dual slack nonnegative through k_check
    (default max(5d, 5000)) and carries the tail column, so the final
    certificate verifies without raising lambda. The search places
    inequalities against the kernel's terms of degree <= d.
    """
    if max_rounds < 0:
        raise DomainError("max_rounds", max_rounds, "integers >= 0")
    if n < 2:
        raise DomainError("n", n, "integers >= 2")
    if n > config.MAX_LOOP_DIMENSION:
        raise SizeLimitError("sphere dimension", n, config.MAX_LOOP_DIMENSION)
    k_check = config.default_k_check(d) if k_check is None else int(k_check)
    if k_check < d:
        raise DomainError("K_check", k_check, f"integers >= d = {d}")
    grid = grid or default_grid()
    families = list(families) if families is not None else list(config.DEFAULT_FAMILIES)
    inequalities = family_inequalities(families) + list(extra_inequalities or [])

    constraints: List[CutConstraint] = []
    result = solve_bound(n, d, grid, constraints, tol, k_check)
    history = [RoundRecord(0, result.certificate.alpha, 0, 0)]
    if progress_callback:
        progress_callback(0, max_rounds, result.certificate.alpha)

    for rnd in range(1, max_rounds + 1):
        violations = search_violations(result.kernel.head(d), inequalities, n, restarts,
                                       substream(seed, f"search-round-{rnd}"), tol, threads)
        if not violations:
            logger.info("round %d: no violated inequality found", rnd)
            break
        constraints.extend(v.constraint for v in violations[:config.MAX_VIOLATIONS_PER_ROUND])
        result = solve_bound(n, d, grid, constraints, tol, k_check, result.degrees)
        history.append(RoundRecord(rnd, result.certificate.alpha, len(constraints), len(violations)))
        logger.info("round %d: bound %.9f with %d constraints", rnd, result.certificate.alpha, len(constraints))
        if progress_callback:
            progress_callback(rnd, max_rounds, result.certificate.alpha)

    cert = result.certificate
    cert.meta.update({
        'seed': seed if not isinstance(seed, np.random.SeedSequence) else None,
        'families': families,
        'rounds': len(history) - 1,
        'grid_size': len(grid),
    })
    return LoopResult(cert.alpha, cert, history, result.kernel)


# ==================== VERIFICATION ====================

@dataclass
class StepResult:
    step: int
    name: str
    ok: bool
    detail: str = ''


@dataclass
class VerificationReport:
    bound: float = math.nan
    level: str = ''
    digits: int = config.VERIFY_DIGITS
    k_check: int = 0
    lambda_increase: float = 0.0
    tail_increase: float = 0.0
    renormalization: float = 1.0
    worst_degree: Optional[int] = None
    steps: List[StepResult] = field(default_factory=list)

    def add(self, step, name, ok=True, detail=''):
        self.steps.append(StepResult(step, name, ok, detail))
        logger.debug("verify step %d (%s): %s %s", step, name, 'ok' if ok else 'FAILED', detail)

    def to_dict(self):
        return {
            'bound': repr(float(self.bound)),
            'level': self.level,
            'digits': self.digits,
            'k_check': self.k_check,
            'lambda_increase': repr(float(self.lambda_increase)),
            'tail_increase': repr(float(self.tail_increase)),
            'renormalization': repr(float(self.renormalization)),
            'worst_degree': self.worst_degree,
            'steps': [{'step': s.step, 'name': s.name, 'ok': s.ok, 'detail': s.detail} for s in self.steps],
        }


def _round_up(value):
    """Smallest double >= an mpf value"""
    out = float(value)
    if mpmath.mpf(out) < value:
        out = math.nextafter(out, math.inf)
    return out


def _check_inequalities(cert, report):
    for i, c in enumerate(cert.constraints):
        if c.size > config.MAX_ENUMERATION_SIZE:
            raise InequalityCheckError(f"size {c.size} exceeds the enumeration limit", index=i)
        check = validate_inequality(c.inequality)
        if not check.valid:
            raise InequalityCheckError(
                f"minimum over cuts {check.worst!r} is below beta {c.beta!r}", index=i)
    report.add(1, 'inequalities', detail=f"{len(cert.constraints)} validated")


def _check_grams(cert, report):
    for i, c in enumerate(cert.constraints):
        P = np.atleast_2d(np.asarray(c.points, dtype=float))
        if P.shape != (c.size, cert.n):
            raise GramCheckError(f"points have shape {P.shape}, expected {(c.size, cert.n)}", index=i)
        if not np.all(np.isfinite(P)):
            raise GramCheckError("non-finite point coordinates", index=i)
        diag = np.einsum('ij,ij->i', P, P)
        if np.any(np.abs(diag - 1.0) > config.UNIT_VECTOR_TOLERANCE):
            raise GramCheckError(f"Gram diagonal deviates from 1 by {np.abs(diag - 1.0).max():.3e}", index=i)
    report.add(2, 'gram', detail=f"unit diagonal, rank <= {cert.n}")


def _mp_pairs(c, digits):
    """Pair weights and Gram entries of the normalized points in mp"""
    with mpmath.workdps(digits):
        P = [[mpmath.mpf(float(v)) for v in row] for row in np.asarray(c.points, dtype=float)]
        norms = [mpmath.sqrt(mpmath.fsum(v * v for v in row)) for row in P]
        X = [[v / nrm for v in row] for row, nrm in zip(P, norms)]
        m = len(X)
        pairs = []
        for i in range(m):
            for j in range(i + 1, m):
                g = mpmath.fsum(a * b for a, b in zip(X[i], X[j]))
                g = max(min(g, mpmath.mpf(1)), mpmath.mpf(-1))
                pairs.append((2 * mpmath.mpf(float(c.inequality.Z[i, j])), g))
        diag = mpmath.fsum(mpmath.mpf(float(c.inequality.Z[i, i])) for i in range(m))
    return diag, pairs


def _recompute_transforms(cert, digits, report):
    """r_k for k <= d in mp, compared with the stored float transforms"""
    basis = JacobiBasis.for_dimension(cert.n)
    mp_r = []
    for i, c in enumerate(cert.constraints):
        diag, pairs = _mp_pairs(c, digits)
        with mpmath.workdps(digits):
            r = [diag] * (cert.d + 1)
            for w, g in pairs:
                vals = eval_all(basis, cert.d, g, precision=digits)
                r = [rk + w * v for rk, v in zip(r, vals)]
        mp_r.append(r)
        if c.r is not None and np.size(c.r):
            stored = np.asarray(c.r, dtype=float)
            if stored.size != cert.d + 1 or not np.all(np.isfinite(stored)):
                raise TransformCheckError("stored transform has the wrong length", index=i)
            scale = 1.0 + float(np.abs(c.inequality.Z).sum())
            diff = max(abs(float(a) - b) for a, b in zip(r, stored))
            if diff > config.TRANSFORM_TOLERANCE * scale:
                raise TransformCheckError(f"stored r_k differ by {diff:.3e}", index=i)
    report.add(3, 'transforms', detail=f"r_k recomputed for k <= {cert.d}")
    return mp_r


def _check_weights(cert, digits, report):
    """Returns the normalization sum of z(t)(1 - t) in mp"""
    z = cert.grid.z
    if z is None or z.size != len(cert.grid):
        raise WeightCheckError("grid weights are missing")
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise WeightCheckError(f"negative grid weight {float(np.min(z))!r}")
    for i, c in enumerate(cert.constraints):
        if not math.isfinite(c.y) or c.y < 0:
            raise WeightCheckError(f"negative constraint weight {c.y!r}", index=i)
    if not math.isfinite(cert.lam):
        raise WeightCheckError("lambda is not finite")
    with mpmath.workdps(digits):
        s = mpmath.fsum(mpmath.mpf(float(zi)) * (1 - mpmath.mpf(float(t)))
                        for zi, t in zip(z, cert.grid.ts))
        off = abs(s - 1)
    if off > config.NORMALIZATION_TOLERANCE:
        raise WeightCheckError(f"sum z(t)(1 - t) = {float(s)!r}, expected 1")
    with mpmath.workdps(digits):
        objective = cert.dual_objective(precision=digits)
        gap = abs(mpmath.mpf(float(cert.alpha)) - objective)
        limit = config.OBJECTIVE_TOLERANCE * max(mpmath.mpf(1), abs(objective))
    if not gap <= limit:
        raise WeightCheckError(f"stored bound {cert.alpha!r} differs from the dual objective "
                               f"{float(objective)!r} by {float(gap):.3e}")
    report.renormalization = float(s)
    report.add(4, 'weights', detail=f"sum z(t)(1 - t) - 1 = {float(s - 1):.3e}, objective matches")
    return s


def _termwise_slacks(cert, mp_r, s, digits, k_check, report):
    """
    Worst slack of lambda + sum z R_k(t) - sum y r_k over k <= k_check

    Degrees up to d run in mp; the rest in double with a rounding allowance.
    Everything is divided by s so the normalization holds exactly.
    """
    basis = JacobiBasis.for_dimension(cert.n)
    support = cert.grid.z > 0
    ts = cert.grid.ts[support]
    zs = cert.grid.z[support]
    d = cert.d

    with mpmath.workdps(digits):
        lam = mpmath.mpf(cert.lam) / s
        slack = [lam] * (d + 1)
        for t, zi in zip(ts, zs):
            w = mpmath.mpf(float(zi)) / s
            vals = eval_all(basis, d, float(t), precision=digits)
            slack = [sk + w * v for sk, v in zip(slack, vals)]
        for c, r in zip(cert.constraints, mp_r):
            w = mpmath.mpf(c.y) / s
            slack = [sk - w * rk for sk, rk in zip(slack, r)]
        worst_mp = min(range(d + 1), key=lambda k: slack[k])
        worst_value = slack[worst_mp]

    worst_k, worst = worst_mp, worst_value
    if k_check > d:
        sf = float(s)
        ks = np.arange(d + 1, k_check + 1)
        table = jacobi_table(basis, k_check, ts)[:, d + 1:] if ts.size else np.zeros((0, ks.size))
        values = cert.lam / sf + (zs / sf) @ table
        weight_mass = float(zs.sum()) / sf
        for c in cert.constraints:
            diag, wts, gs = _pair_terms(c.inequality.Z, _unit_gram(c.points))
            rk = np.full(ks.size, diag)
            if gs.size:
                rk += wts @ jacobi_table(basis, k_check, gs)[:, d + 1:]
            values -= (c.y / sf) * rk
            weight_mass += (c.y / sf) * float(np.abs(c.inequality.Z).sum())
        if not np.all(np.isfinite(values)):
            raise DegreeCheckError("termwise slack is not finite")
        allowance = config.ROUNDING_ALLOWANCE_ULPS * ks * np.finfo(float).eps * (1.0 + weight_mass)
        adjusted = values - allowance
        j = int(np.argmin(adjusted))
        if adjusted[j] < worst:
            worst_k, worst = int(ks[j]), mpmath.mpf(float(adjusted[j]))

    if not mpmath.isfinite(worst):
        raise DegreeCheckError("termwise slack is not finite")
    report.worst_degree = worst_k
    return worst


def tail_deficit(cert, k: int, s=1.0) -> Optional[float]:
    """
    Lower bound of the worst slack over degrees >= k, negated

    Grid terms use the decay envelope and constraint terms the bound of
    tail_column, the same weights the gap LP's tail column carries.
    Returns None when no envelope is available.
    """
    column = tail_column(cert.n, k, cert.grid.ts, cert.constraints)
    if column is None:
        return None
    z = cert.grid.z
    total = float(np.dot(z, column.grid)) if z is not None and z.size else 0.0
    total += float(np.dot([c.y for c in cert.constraints], column.constraints)) if cert.constraints else 0.0
    total += config.ROUNDING_ALLOWANCE_ULPS * np.finfo(float).eps * abs(total)
    return (total - cert.lam) / float(s)


def verify_certificate(cert: DualCertificate, digits: int = config.VERIFY_DIGITS,
                       k_check: Optional[int] = None, require_tail: bool = False):
    """
    Check a certificate and return the bound it proves

    Steps: (1) inequalities valid on the cut polytope, (2) points unit
    vectors of R^n, (3) transforms recomputed, (4) weights nonnegative and
    normalized (renormalized when off by at most 1e-9) with the stored bound
    equal to the dual objective, (5) termwise feasibility for k <= K_check,
    raising lambda by the worst deficit, (6) tail bound beyond K_check.

    Returns:
        (bound, VerificationReport)

    Raises:
        VerificationError subclass naming the failing step
    """
    k_check = cert.k_check if k_check is None else int(k_check)
    if k_check < cert.d:
        raise DomainError("K_check", k_check, f"integers >= d = {cert.d}")
    report = VerificationReport(digits=digits, k_check=k_check)

    _check_inequalities(cert, report)
    _check_grams(cert, report)
    mp_r = _recompute_transforms(cert, digits, report)
    s = _check_weights(cert, digits, report)

    worst = _termwise_slacks(cert, mp_r, s, digits, k_check, report)
    with mpmath.workdps(digits):
        base = cert.dual_objective(precision=digits) / s
        increase = max(mpmath.mpf(0), -worst)
        bound = base + increase
    report.lambda_increase = float(increase)
    report.add(5, 'degrees', detail=f"k <= {k_check}, lambda raised by {float(increase):.3e} "
                                    f"(worst degree {report.worst_degree})")

    adjusted = DualCertificate(cert.n, cert.d, k_check, float(cert.lam + increase * s),
                               cert.grid, cert.constraints, cert.alpha)
    deficit = tail_deficit(adjusted, k_check + 1, s)
    if deficit is not None and deficit <= config.TAIL_BUDGET:
        extra = max(0.0, deficit)
        with mpmath.workdps(digits):
            bound = bound + mpmath.mpf(extra)
        report.tail_increase = extra
        report.level = LEVEL_TAIL
        report.add(6, 'tail', detail=f"deficit {extra:.3e} beyond degree {k_check}")
    else:
        reason = ("no decay envelope for this dimension" if deficit is None
                  else f"tail deficit {deficit:.3e} exceeds budget {config.TAIL_BUDGET:.1e}")
        if require_tail:
            raise TailRuleError(reason)
        report.level = LEVEL_DEGREE
        report.add(6, "tail", detail=f"{reason}; verified up to degree {k_check}")

    report.bound = _round_up(bound)
    logger.info("certificate verified: %.9f (%s)", report.bound, report.level)
    return report.bound, report


# ==================== DEMO CERTIFICATE ====================

def point_mass_certificate(n: int = 2, t: Optional[float] = None) -> DualCertificate:
    """
    Grid weight concentrated at t (default t_GW) with lambda = z

    The weights are what instance construction needs; lambda = z keeps every
    termwise inequality true since |R_k| <= 1.
    """
    if t is None:
        t = alpha_gw().minimizer
    if not -1.0 <= t < 1.0:
        raise DomainError("t", t, "[-1, 1)")
    z = 1.0 / (1.0 - t)
    cert = DualCertificate(n=n, d=1, k_check=config.default_k_check(1), lam=z,
                           grid=SampleGrid(np.array([t]), np.array([z])),
                           constraints=[], alpha=0.0,
                           meta={'provenance': 'point-mass', 'seed': None})
    cert.alpha = cert.dual_objective()
    return cert
