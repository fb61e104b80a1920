"""
Kernels Module
Invariant kernels on the sphere, the Grothendieck kernel and its constant,
sign functions with their Reynolds transforms, and the circle windmill
construction mixed with hyperplane rounding
"""

import functools
import json
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import config
from .exceptions import (
    CertificateFormatError, DimensionMismatchError, DomainError, InvalidKernelError,
    SampleCountError
)
from .jacobi import JacobiBasis, derivative_table, jacobi_table, project_onto_basis
from .streams import as_seed_sequence, chunk_sizes, map_substreams

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


# ==================== INVARIANT KERNELS ====================

@dataclass
class InvariantKernel:
    """
    K(t) = sum a_k R_k(t) on S^{n-1} with a_k >= 0 and sum a_k = 1

    Tiny negative coefficients left by a solver are clipped and the vector
    renormalized; anything larger is rejected.
    """
    n: int
    coefficients: np.ndarray
    label: str = ''

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidKernelError(f"sphere dimension must be an integer >= 2, got {self.n}")
        self.n = int(self.n)
        a = np.asarray(self.coefficients, dtype=float).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise InvalidKernelError("coefficients must be a nonempty finite vector")
        if a.min() < -config.KERNEL_SUM_TOLERANCE:
            raise InvalidKernelError(f"negative coefficient {a.min():.3e}")
        a = np.clip(a, 0.0, None)
        total = a.sum()
        if abs(total - 1.0) > config.KERNEL_SUM_TOLERANCE:
            raise InvalidKernelError(f"coefficients sum to {total!r}, expected 1")
        self.coefficients = a / total

    @property
    def degree(self):
        return self.coefficients.size - 1

    @property
    def basis(self):
        return JacobiBasis.for_dimension(self.n)

    @classmethod
    def single_degree(cls, n, k):
        """K = R_k"""
        a = np.zeros(k + 1)
        a[k] = 1.0
        return cls(n, a, label=f"degree-{k}")

    def evaluate(self, t):
        """K(t) for a scalar or array of inner products"""
        scalar = np.ndim(t) == 0
        values = jacobi_table(self.basis, self.degree, t) @ self.coefficients
        return float(values[0]) if scalar else values.reshape(np.shape(t))

    __call__ = evaluate

    def derivative(self, t):
        """K'(t)"""
        scalar = np.ndim(t) == 0
        values = derivative_table(self.basis, self.degree, np.atleast_1d(t)) @ self.coefficients
        return float(values[0]) if scalar else values.reshape(np.shape(t))

    def to_dict(self):
        return {
            'n': self.n,
            'degree': self.degree,
            'coefficients': [repr(float(v)) for v in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            a = [float(v) for v in data['coefficients']]
            if 'degree' in data and int(data['degree']) != len(a) - 1:
                raise InvalidKernelError(f"degree {data['degree']} does not match {len(a)} coefficients")
            return cls(int(data['n']), np.array(a))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidKernelError(f"malformed kernel data: {e}")

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=config.JSON_INDENT)
            f.write('\n')

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except (OSError, ValueError) as e:
            raise CertificateFormatError(path, str(e))

    def head(self, degree: int) -> 'KernelHead':
        """Terms of degree <= degree; the rest stays below the decay envelope away from t = +-1"""
        return KernelHead(self.n, self.coefficients[:degree + 1].copy(), self.label)


@dataclass
class KernelHead(InvariantKernel):
    """Leading terms of a kernel; the coefficients sum to at most 1"""

    def __post_init__(self):
        self.n = int(self.n)
        a = np.asarray(self.coefficients, dtype=float).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)) or a.sum() > 1.0 + config.KERNEL_SUM_TOLERANCE:
            raise InvalidKernelError("head coefficients must be finite with sum at most 1")
        self.coefficients = np.clip(a, 0.0, None)


# ==================== GROTHENDIECK KERNEL ====================

class GWConstant(NamedTuple):
    value: float
    minimizer: float


def gw_kernel(t):
    """(2/pi) arcsin t"""
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + config.DOMAIN_TOLERANCE) or np.any(np.isnan(arr)):
        raise DomainError("t", t, "[-1, 1]")
    values = (2.0 / math.pi) * np.arcsin(np.clip(arr, -1.0, 1.0))
    return float(values) if np.ndim(t) == 0 else values


def _gw_ratio(t):
    return (1.0 - gw_kernel(t)) / (1.0 - t)


@functools.lru_cache(maxsize=1)
def alpha_gw() -> GWConstant:
    """
    min over t in [-1, 1) of (1 - (2/pi) arcsin t) / (1 - t)

    The ratio equals 1 at t = -1 and t = 0 and dips in between.
    """
    res = minimize_scalar(_gw_ratio, bounds=(-1.0, 0.0), method='bounded',
                          options={'xatol': 1e-12, 'maxiter': 500})
    return GWConstant(value=float(res.fun), minimizer=float(res.x))


def gw_schoenberg(n: int, degree: int) -> InvariantKernel:
    """Truncated Schoenberg expansion of the Grothendieck kernel"""
    basis = JacobiBasis.for_dimension(n)
    a = project_onto_basis(basis, gw_kernel, degree)
    a = np.clip(a, 0.0, None)
    kernel = InvariantKernel(n, a / a.sum(), label=f"gw-d{degree}")
    logger.debug("GW expansion n=%d d=%d: dropped tail mass %.3e", n, degree, 1.0 - a.sum())
    return kernel


# ==================== SINGLE DEGREE RELAXATION ====================

class SingleDegree(NamedTuple):
    k: int
    objective: float


def best_single_degree(n: int, t: Optional[float] = None,
                       kmax: int = config.SINGLE_DEGREE_KMAX) -> SingleDegree:
    """
    Maximize 1 - sum a_k R_k(t) over probability vectors a on 0..kmax

    The optimum sits on one degree: the first argmin of R_k(t).
    """
    if n < 2:
        raise DomainError("n", n, "integers >= 2")
    if kmax < 4:
        raise DomainError("kmax", kmax, "integers >= 4")
    if t is None:
        t = alpha_gw().minimizer
    values = jacobi_table(JacobiBasis.for_dimension(n), kmax, [t])[0]
    k = int(np.argmin(values))
    return SingleDegree(k, float(1.0 - values[k]))


class Improvement(NamedTuple):
    improves: bool
    margin: float


def gw_improvement_test(kernel, tol: float = config.PSD_TOLERANCE) -> Improvement:
    """
    Compare 1 - K(t_GW) against 1 - K_GW(t_GW)

    kernel may be an InvariantKernel, any callable on [-1, 1], or the
    already estimated value K(t_GW).
    """
    t_gw = alpha_gw().minimizer
    value = float(kernel(t_gw)) if callable(kernel) else float(kernel)
    margin = (1.0 - value) - (1.0 - gw_kernel(t_gw))
    return Improvement(margin > tol, margin)


# ==================== SIGN FUNCTIONS ====================

def _angles(X):
    X = np.asarray(X, dtype=float)
    return np.arctan2(X[:, 1], X[:, 0])


class SignFunction:
    """Measurable map S^{n-1} -> {-1, 1}"""

    n = 2

    def __call__(self, X):
        raise NotImplementedError

    def arcs(self):
        """(start, end, sign) triples covering the circle once; n = 2 only"""
        raise NotImplementedError(f"{type(self).__name__} has no arc description")

    def _check_points(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise DimensionMismatchError("points", self.n, X.shape[1])
        return X


class ConstantSign(SignFunction):
    def __init__(self, n=2, value=1):
        self.n = int(n)
        self.value = 1 if value >= 0 else -1

    def __call__(self, X):
        X = self._check_points(X)
        return np.full(X.shape[0], self.value)

    def arcs(self):
        return [(0.0, TWO_PI, self.value)]


class HalfspaceSign(SignFunction):
    """f(x) = 1 if e.x >= 0 else -1"""

    def __init__(self, normal):
        e = np.asarray(normal, dtype=float)
        norm = np.linalg.norm(e)
        if norm == 0:
            raise DomainError("normal", normal, "nonzero vectors")
        self.normal = e / norm
        self.n = e.size

    @classmethod
    def standard(cls, n):
        e = np.zeros(n)
        e[0] = 1.0
        return cls(e)

    def __call__(self, X):
        X = self._check_points(X)
        return np.where(X @ self.normal >= 0, 1, -1)

    def arcs(self):
        if self.n != 2:
            return super().arcs()
        phi = math.atan2(self.normal[1], self.normal[0])
        start = (phi - math.pi / 2) % TWO_PI
        return [(start, start + math.pi, 1), (start + math.pi, start + TWO_PI, -1)]


class WindmillSign(SignFunction):
    """sign(cos(order * theta)) on the circle"""

    def __init__(self, order=config.WINDMILL_ORDER):
        if int(order) != order or order < 1:
            raise DomainError("order", order, "positive integers")
        self.order = int(order)
        self.n = 2

    def __call__(self, X):
        X = self._check_points(X)
        return np.where(np.cos(self.order * _angles(X)) >= 0, 1, -1)

    def arcs(self):
        h = math.pi / self.order
        out = []
        for j in range(2 * self.order):
            start = (-h / 2 + j * h) % TWO_PI
            out.append((start, start + h, 1 if j % 2 == 0 else -1))
        return out


class CellSign(SignFunction):
    """Sign constant on the cells of a partition"""

    def __init__(self, partition, labels):
        labels = np.asarray(labels)
        if labels.size != partition.num_cells:
            raise DimensionMismatchError("cell labels", partition.num_cells, labels.size)
        if not np.all(np.isin(labels, (-1, 1))):
            raise DomainError("labels", labels.tolist(), "{-1, 1}")
        self.partition = partition
        self.labels = labels.astype(int)
        self.n = partition.n

    def __call__(self, X):
        X = self._check_points(X)
        return self.labels[self.partition.assign(X)]

    def arcs(self):
        return [(a, b, int(s)) for (a, b), s in zip(self.partition.arcs(), self.labels)]


# ==================== REYNOLDS TRANSFORMS ====================

def arc_overlap(a0, a1, b0, b1):
    """Length of [a0, a1] intersected with [b0, b1] on the circle; arcs at most 2pi long"""
    shift = np.floor((np.asarray(b0) - a0) / TWO_PI) * TWO_PI
    b0 = b0 - shift
    b1 = b1 - shift
    ov = np.maximum(0.0, np.minimum(a1, b1) - np.maximum(a0, b0))
    ov = ov + np.maximum(0.0, np.minimum(a1, b1 - TWO_PI) - np.maximum(a0, b0 - TWO_PI))
    return ov


def circle_autocorrelation(arcs, delta):
    """(1/2pi) integral of f(theta) f(theta + delta) for f given by arcs"""
    delta = np.asarray(delta, dtype=float)
    total = np.zeros_like(delta)
    for a0, a1, sa in arcs:
        for b0, b1, sb in arcs:
            total = total + sa * sb * arc_overlap(a0, a1, b0 - delta, b1 - delta)
    return total / TWO_PI


def reynolds_exact_circle(f: SignFunction, t):
    """
    Exact Reynolds transform of f (x) f on S^1 at inner product t

    Rotations contribute the autocorrelation at delta = arccos t and
    reflections the one at -delta; each carries half the Haar mass.
    """
    if f.n != 2:
        raise DimensionMismatchError("sign function dimension", 2, f.n)
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + config.DOMAIN_TOLERANCE):
        raise DomainError("t", t, "[-1, 1]")
    delta = np.arccos(np.clip(arr, -1.0, 1.0))
    arcs = f.arcs()
    values = 0.5 * (circle_autocorrelation(arcs, delta) + circle_autocorrelation(arcs, -delta))
    return float(values) if np.ndim(t) == 0 else values


class ReynoldsEstimate(NamedTuple):
    estimate: float
    std_error: float
    samples: int


def _reynolds_chunk(f, t, rng, size):
    """Sums of f(Tu) f(Tv_t) over size Haar frames"""
    n = f.n
    g = rng.standard_normal((size, n, 2))
    a = g[:, :, 0]
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = g[:, :, 1] - np.sum(a * g[:, :, 1], axis=1, keepdims=True) * a
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    x = a
    y = t * a + math.sqrt(max(0.0, 1.0 - t * t)) * b
    v = f(x) * f(y)
    return float(v.sum()), float(np.sum(v * v))


def reynolds_estimate(f: SignFunction, t: float, samples: int, seed,
                      threads=None, method: str = 'mc') -> ReynoldsEstimate:
    """
    Estimate R(f (x) f)(t) by averaging f(Tu) f(Tv_t) over Haar-random T

    Only the images of u and v_t matter, so T is sampled through its first
    two columns: Gram-Schmidt on two standard normal vectors gives a
    Haar-distributed orthonormal pair. method='exact' uses arc overlaps on
    the circle and reports zero error.
    """
    if method == 'exact':
        return ReynoldsEstimate(reynolds_exact_circle(f, t), 0.0, 0)
    if samples < config.MIN_REYNOLDS_SAMPLES:
        raise SampleCountError(samples, config.MIN_REYNOLDS_SAMPLES)
    if abs(t) > 1.0 + config.DOMAIN_TOLERANCE:
        raise DomainError("t", t, "[-1, 1]")
    t = float(np.clip(t, -1.0, 1.0))

    seq = as_seed_sequence(seed, 'reynolds')
    sizes = chunk_sizes(samples)
    parts = map_substreams(lambda rng, size: _reynolds_chunk(f, t, rng, size), seq, sizes, threads)

    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
    return ReynoldsEstimate(mean, math.sqrt(var / samples), samples)


# ==================== WINDMILL ====================

def windmill_sign(order: int = config.WINDMILL_ORDER) -> WindmillSign:
    return WindmillSign(order)


def windmill_kernel(order: int = config.WINDMILL_ORDER) -> InvariantKernel:
    """K(cos theta) = cos(order theta) on S^1"""
    return InvariantKernel.single_degree(2, order)


def windmill_reynolds(t, order: int = config.WINDMILL_ORDER):
    """
    Reynolds transform of sign(cos(order theta)): a triangular wave in theta

    1 - 2u/h with h = pi/order and u the distance from arccos t to the
    nearest multiple of 2h.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + config.DOMAIN_TOLERANCE):
        raise DomainError("t", t, "[-1, 1]")
    h = math.pi / order
    delta = np.arccos(np.clip(arr, -1.0, 1.0))
    u = np.abs(delta - 2 * h * np.round(delta / (2 * h)))
    values = 1.0 - 2.0 * u / h
    return float(values) if np.ndim(t) == 0 else values


# ==================== RATIO CURVES ====================

class MinRatio(NamedTuple):
    value: float
    t: float


def ratio_curve(kernel_fn: Callable, ts):
    """(1 - K(t)) / (1 - t) on points strictly below 1"""
    ts = np.asarray(ts, dtype=float)
    return (1.0 - np.asarray(kernel_fn(ts), dtype=float)) / (1.0 - ts)


def min_ratio(kernel_fn: Callable, grid_size: int = config.MIX_INNER_GRID,
              polish: bool = True) -> MinRatio:
    """
    min over t in [-1, 1) of (1 - K(t)) / (1 - t)

    Dense grid, then a bounded scalar search between the neighbours of the
    best grid point.
    """
    if grid_size < 3:
        raise DomainError("grid_size", grid_size, "integers >= 3")
    ts = np.linspace(-1.0, 1.0, grid_size)[:-1]
    ratios = ratio_curve(kernel_fn, ts)
    i = int(np.argmin(ratios))
    best = MinRatio(float(ratios[i]), float(ts[i]))
    if not polish:
        return best

    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
    if hi <= lo:
        return best
    res = minimize_scalar(lambda s: float(ratio_curve(kernel_fn, np.array([s]))[0]),
                          bounds=(lo, hi), method='bounded', options={'xatol': 1e-13})
    if res.fun < best.value:
        return MinRatio(float(res.fun), float(res.x))
    return best


@dataclass
class MixedKernel:
    """lambda * windmill Reynolds transform + (1 - lambda) * Grothendieck kernel"""
    lam: float
    order: int = config.WINDMILL_ORDER

    def __call__(self, t):
        return self.lam * windmill_reynolds(t, self.order) + (1.0 - self.lam) * gw_kernel(t)


class MixResult(NamedTuple):
    lam: float
    alpha: float
    kernel: MixedKernel
    worst_t: float


def avidor_zwick_mix(lambda_grid_resolution: int = 101,
                     inner_grid: int = config.MIX_INNER_GRID) -> MixResult:
    """
    Choose lambda to maximize the min-ratio of the mixed kernel

    Coarse lambda grid, then a bounded scalar search around the best cell.
    """
    if lambda_grid_resolution < 3:
        raise DomainError("lambda_grid_resolution", lambda_grid_resolution, "integers >= 3")

    def objective(lam):
        return min_ratio(MixedKernel(lam), inner_grid).value

    lams = np.linspace(0.0, 1.0, lambda_grid_resolution)
    values = np.array([objective(lam) for lam in lams])
    i = int(np.argmax(values))
    lo, hi = lams[max(i - 1, 0)], lams[min(i + 1, lams.size - 1)]
    res = minimize_scalar(lambda lam: -objective(lam), bounds=(lo, hi), method='bounded',
                          options={'xatol': config.MIX_LAMBDA_TOLERANCE})
    lam = float(res.x) if -res.fun >= values[i] else float(lams[i])

    kernel = MixedKernel(lam)
    worst = min_ratio(kernel, inner_grid)
    logger.info("mixed kernel: lambda=%.9f alpha=%.9f at t=%.6f", lam, worst.value, worst.t)
    return MixResult(lam, worst.value, kernel, worst.t)


# ==================== POINT SAMPLES ====================

def random_sphere_points(n: int, count: int, rng) -> np.ndarray:
    """count uniform points on S^{n-1}"""
    X = rng.standard_normal((count, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sample_kernel_matrix(kernel_fn: Callable, n: int, count: int, seed):
    """
    (K(x.y)) for count random points on S^{n-1}

    Returns:
        (matrix, points)
    """
    rng = np.random.default_rng(as_seed_sequence(seed, 'kernel-points'))
    U = random_sphere_points(n, count, rng)
    G = np.clip(U @ U.T, -1.0, 1.0)
    np.fill_diagonal(G, 1.0)
    M = np.asarray(kernel_fn(G), dtype=float).reshape(G.shape)
    return 0.5 * (M + M.T), U


def is_positive_on_points(kernel_fn: Callable, points, tol: float = config.PSD_TOLERANCE) -> bool:
    """Smallest eigenvalue of (K(x.y)) is at least -tol"""
    U = np.asarray(points, dtype=float)
    G = np.clip(U @ U.T, -1.0, 1.0)
    M = np.asarray(kernel_fn(G), dtype=float).reshape(G.shape)
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() >= -tol)

