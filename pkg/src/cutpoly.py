"""
Cut Polytope Module
Cut matrices, exact max-cut by enumeration, membership in the cut polytope
and hypermetric inequalities
"""

import json
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse

from . import config
from . import lpcore
from .exceptions import (
    CertificateFormatError, DimensionMismatchError, InvalidInequalityError,
    InvalidInstanceError, SizeLimitError, SolverError
)

logger = logging.getLogger(__name__)


# ==================== TYPES ====================

@dataclass
class WeightedInstance:
    """Max-cut instance: symmetric nonnegative weights with zero diagonal"""
    weights: np.ndarray
    dim_hint: Optional[int] = None

    def __post_init__(self):
        A = np.asarray(self.weights, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInstanceError(f"weights must be a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidInstanceError("weights contain non-finite entries")
        if np.any(A < 0):
            raise InvalidInstanceError("weights must be nonnegative")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(A).max(initial=0)))):
            raise InvalidInstanceError("weights must be symmetric")
        if np.any(np.diag(A) != 0):
            raise InvalidInstanceError("diagonal must be zero")
        self.weights = 0.5 * (A + A.T)

    @property
    def n_vertices(self):
        return self.weights.shape[0]

    @property
    def total_weight(self):
        """Sum of A(x, y) over ordered pairs"""
        return float(self.weights.sum())

    @classmethod
    def from_edges(cls, n_vertices, edges, dim_hint=None):
        """Build from (i, j, w) triples; A(i,j) = A(j,i) = w"""
        A = np.zeros((n_vertices, n_vertices))
        for i, j, w in edges:
            if i == j:
                raise InvalidInstanceError(f"self-loop at vertex {i}")
            A[i, j] += w
            A[j, i] += w
        return cls(A, dim_hint=dim_hint)

    @classmethod
    def cycle(cls, length, weight=1.0):
        """Cycle graph with uniform weights"""
        return cls.from_edges(length, [(i, (i + 1) % length, weight) for i in range(length)])

    def edges(self):
        """Upper-triangle (i, j, w) triples with w > 0"""
        rows, cols = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(rows, cols)]

    def scaled(self, factor):
        return WeightedInstance(self.weights * factor, dim_hint=self.dim_hint)

    def to_dict(self):
        return {
            'n_vertices': self.n_vertices,
            'dim_hint': self.dim_hint,
            'edges': [{'i': i, 'j': j, 'w': repr(w)} for i, j, w in self.edges()],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            edges = [(int(e['i']), int(e['j']), float(e['w'])) for e in data['edges']]
            return cls.from_edges(int(data['n_vertices']), edges, dim_hint=data.get('dim_hint'))
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise InvalidInstanceError(f"malformed instance data: {e}")

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=config.JSON_INDENT)
            f.write('\n')

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise CertificateFormatError(path, str(e))
        return cls.from_dict(data)


@dataclass
class LinearInequality:
    """<Z, X> >= beta for every cut matrix X of size m"""
    Z: np.ndarray
    beta: float
    provenance: str = 'custom'

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1] or Z.shape[0] == 0:
            raise InvalidInequalityError(f"Z must be a nonempty square matrix, got shape {Z.shape}")
        if not np.all(np.isfinite(Z)) or not np.isfinite(self.beta):
            raise InvalidInequalityError("non-finite coefficients")
        if not np.allclose(Z, Z.T, rtol=0, atol=1e-12):
            raise InvalidInequalityError("Z must be symmetric")
        self.Z = Z
        self.beta = float(self.beta)

    @property
    def size(self):
        return self.Z.shape[0]

    def value(self, X):
        """<Z, X> = sum of Z(x, y) X(x, y)"""
        return float(np.sum(self.Z * X))

    def to_dict(self):
        return {
            'm': self.size,
            'Z': [repr(float(v)) for v in self.Z.ravel()],
            'beta': repr(self.beta),
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            m = int(data['m'])
            Z = np.array([float(v) for v in data['Z']], dtype=float)
            if Z.size != m * m:
                raise InvalidInequalityError(f"Z has {Z.size} entries, expected {m * m}")
            return cls(Z.reshape(m, m), float(data['beta']), data.get('provenance', 'custom'))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInequalityError(f"malformed inequality data: {e}")


class MembershipResult(NamedTuple):
    """Outcome of membership_lp"""
    member: bool
    weights: Optional[np.ndarray]
    inequality: Optional[LinearInequality]
    violation: float


class ValidationResult(NamedTuple):
    valid: bool
    worst: float


# ==================== ENUMERATION ====================

def _sign_block(m, start, stop):
    """Sign vectors with f[0] = 1 for assignment indices in [start, stop)"""
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(m - 1, dtype=np.int64)) & 1
    F = np.ones((idx.size, m))
    F[:, 1:] = 1.0 - 2.0 * bits
    return F


def enumerate_sign_vectors(m: int) -> np.ndarray:
    """All 2^(m-1) sign vectors with f[0] = 1, in index order"""
    if m < 1:
        raise SizeLimitError("cut enumeration", m, "at least 1")
    if m > config.MAX_ENUMERATION_SIZE:
        raise SizeLimitError("cut enumeration", m, config.MAX_ENUMERATION_SIZE)
    return _sign_block(m, 0, 1 << (m - 1))


def enumerate_cut_matrices(m: int) -> List[np.ndarray]:
    """
    All distinct cut matrices f f^T of size m

    f and -f give the same matrix, so f[0] is fixed to 1.
    """
    return [np.outer(f, f) for f in enumerate_sign_vectors(m)]


def _min_quadratic_form(Q, limit):
    """
    Minimum of f^T Q f over sign vectors with f[0] = 1, chunked

    Returns (value, first minimizing sign vector).
    """
    m = Q.shape[0]
    if m > limit:
        raise SizeLimitError("exhaustive search", m, limit)
    total = 1 << (m - 1)
    best_val, best_f = np.inf, None
    for start in range(0, total, config.MAXCUT_CHUNK_SIZE):
        F = _sign_block(m, start, min(total, start + config.MAXCUT_CHUNK_SIZE))
        vals = np.einsum('ij,ij->i', F @ Q, F)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_f = float(vals[i]), F[i].copy()
    return best_val, best_f


def cut_value(instance: WeightedInstance, assignment) -> float:
    """sum of A(x, y)(1 - f(x) f(y)) for a +-1 assignment"""
    f = np.asarray(assignment, dtype=float)
    if f.size != instance.n_vertices:
        raise DimensionMismatchError("assignment", instance.n_vertices, f.size)
    return instance.total_weight - float(f @ instance.weights @ f)


def max_cut_exact(instance: WeightedInstance):
    """
    sdp_1(A) by exhaustive search over 2^(|V|-1) assignments

    Returns:
        (value, assignment) with value = 4 * maximum cut weight
    """
    m = instance.n_vertices
    if m > config.MAX_EXACT_MAXCUT_VERTICES:
        raise SizeLimitError("exact max-cut", m, config.MAX_EXACT_MAXCUT_VERTICES)
    if m == 0:
        return 0.0, np.zeros(0)
    q, f = _min_quadratic_form(instance.weights, config.MAX_EXACT_MAXCUT_VERTICES)
    value = instance.total_weight - q
    logger.debug("exact max-cut over %d vertices: %r", m, value)
    return max(value, 0.0), f


# ==================== INEQUALITIES ====================

def hypermetric_inequality(b: Sequence[int]) -> LinearInequality:
    """
    sum_{i<j} b_i b_j X(i,j) >= (1 - sum b_i^2) / 2 for integer b with odd sum

    Valid since (sum b_i f_i)^2 >= 1 whenever the sum is odd.
    """
    b = [int(v) for v in b]
    if not b or any(v == 0 for v in b):
        raise InvalidInequalityError("b must be a nonempty vector of nonzero integers")
    if len(b) > config.MAX_INEQUALITY_SIZE:
        raise SizeLimitError("hypermetric inequality", len(b), config.MAX_INEQUALITY_SIZE)
    if sum(b) % 2 == 0:
        raise InvalidInequalityError(f"sum of b must be odd, got {sum(b)}")

    bv = np.array(b, dtype=float)
    Z = np.outer(bv, bv) / 2.0
    np.fill_diagonal(Z, 0.0)
    beta = (1.0 - float(bv @ bv)) / 2.0

    label = ','.join(str(v) for v in b)
    kind = 'triangle' if len(b) == 3 and all(abs(v) == 1 for v in b) else 'hypermetric'
    return LinearInequality(Z, beta, provenance=f"{kind}({label})")


def validate_inequality(ineq: LinearInequality) -> ValidationResult:
    """Brute-force minimum of <Z, X> over cut matrices; valid iff >= beta - 1e-12"""
    m = ineq.size
    if m > config.MAX_ENUMERATION_SIZE:
        raise SizeLimitError("inequality validation", m, config.MAX_ENUMERATION_SIZE)
    worst, _ = _min_quadratic_form(ineq.Z, config.MAX_ENUMERATION_SIZE)
    return ValidationResult(worst >= ineq.beta - config.VALIDITY_TOLERANCE, worst)


def family_b_vectors(name: str) -> List[tuple]:
    """b-vectors of a named family, one per sign pattern"""
    info = config.get_family(name)
    if info is None:
        raise InvalidInequalityError(f"{config.ERROR_MESSAGES['unknown_family']} {name!r}")
    size, lead = info['size'], info['lead']
    vectors = []
    for neg in range(info['max_negatives'] + 1):
        rest = size - 1
        if lead == 1:
            body = [1] * (size - neg) + [-1] * neg
        else:
            if neg > rest:
                break
            body = [lead] + [1] * (rest - neg) + [-1] * neg
        vectors.append(tuple(body))
    return vectors


def family_inequalities(names) -> List[LinearInequality]:
    """Hypermetric inequalities for a list of family names"""
    if isinstance(names, str):
        names = [n.strip() for n in names.split(',') if n.strip()]
    out = []
    for name in names:
        out.extend(hypermetric_inequality(b) for b in family_b_vectors(name))
    return out


def load_custom_inequalities(path) -> List[LinearInequality]:
    """
    Read a JSON list of {m, Z (row-major), beta} and validate each entry

    Raises InvalidInequalityError on the first entry that fails validation.
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise CertificateFormatError(path, str(e))
    if not isinstance(data, list):
        raise CertificateFormatError(path, "expected a JSON list of inequalities")

    result = []
    for i, entry in enumerate(data):
        ineq = LinearInequality.from_dict({**entry, 'provenance': entry.get('provenance', f'custom[{i}]')})
        check = validate_inequality(ineq)
        if not check.valid:
            raise InvalidInequalityError(f"custom inequality {i} is not valid", worst_value=check.worst)
        result.append(ineq)
    logger.info("loaded %d custom inequalities from %s", len(result), path)
    return result


# ==================== MEMBERSHIP ====================

def _check_unit_diagonal(M, m):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError("membership matrix", "square", M.shape)
    if m is not None and M.shape[0] != m:
        raise DimensionMismatchError("membership matrix", (m, m), M.shape)
    if not np.allclose(np.diag(M), 1.0, rtol=0, atol=config.MEMBERSHIP_TOLERANCE):
        raise InvalidInstanceError("matrix must have unit diagonal")
    if not np.allclose(M, M.T, rtol=0, atol=config.MEMBERSHIP_TOLERANCE):
        raise InvalidInstanceError("matrix must be symmetric")
    return 0.5 * (M + M.T)


def membership_lp(M, m: Optional[int] = None, tol: float = config.MEMBERSHIP_TOLERANCE) -> MembershipResult:
    """
    Decide whether M lies in CUT(U) with a column LP over the cut matrices

    Minimizes the L1 residual of sum_k lambda_k X_k = M over convex weights.
    A zero residual gives the weights; otherwise the row duals give a
    hyperplane <Z, X> >= beta that every cut matrix satisfies and M violates.
    """
    M = _check_unit_diagonal(M, m)
    size = M.shape[0]
    if size > config.MAX_MEMBERSHIP_SIZE:
        raise SizeLimitError("membership LP", size, config.MAX_MEMBERSHIP_SIZE)

    F = enumerate_sign_vectors(size)
    K = F.shape[0]
    iu, ju = np.triu_indices(size, k=1)
    E = iu.size
    X = F[:, iu] * F[:, ju]            # K x E upper-triangle entries of each cut

    # variables: lambda (K), p (E), q (E)
    c = np.concatenate([np.zeros(K), np.ones(2 * E)])
    eye = sparse.identity(E, format='csr')
    A_edges = sparse.hstack([sparse.csr_matrix(X.T), eye, -eye]) if E else sparse.csr_matrix((0, K))
    A_sum = sparse.hstack([sparse.csr_matrix(np.ones((1, K))), sparse.csr_matrix((1, 2 * E))])
    A = sparse.vstack([A_edges, A_sum]).tocsr()
    rhs = np.concatenate([M[iu, ju], [1.0]])

    lp = lpcore.LinearProgram(
        sense='min', c=c, A=A, row_senses=['='] * (E + 1), rhs=rhs,
        lower=np.zeros(K + 2 * E), upper=np.full(K + 2 * E, np.inf)
    )
    sol = lpcore.solve(lp, tol=max(tol / 10.0, config.LP_MIN_TOLERANCE))
    if not sol.optimal:
        raise SolverError(f"membership LP ended with status {sol.status}", details=sol.message)

    violation = float(sol.objective)
    if violation <= tol:
        weights = np.clip(sol.x[:K], 0.0, None)
        weights /= weights.sum()
        return MembershipResult(True, weights, None, violation)

    w = sol.duals[:E]
    Z = np.zeros((size, size))
    Z[iu, ju] = -w / 2.0
    Z[ju, iu] = -w / 2.0
    worst = validate_inequality(LinearInequality(Z, 0.0)).worst
    ineq = LinearInequality(Z, worst, provenance='separating')
    logger.debug("membership LP: residual %r, separating value %r < %r",
                 violation, ineq.value(M), worst)
    return MembershipResult(False, None, ineq, violation)
