"""
Instances Module
Discretizes the sphere, turns a certificate's grid weights into a weighted
max-cut instance over the cells, and compares the exact cut value with
rank-n embeddings found by block-coordinate ascent
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.spatial.distance import pdist

from . import config
from .cutpoly import WeightedInstance, enumerate_sign_vectors, max_cut_exact
from .exceptions import DimensionMismatchError, DomainError, SampleCountError
from .kernels import TWO_PI, arc_overlap, gw_kernel, random_sphere_points
from .streams import as_seed_sequence, chunk_sizes, map_substreams, substream

logger = logging.getLogger(__name__)

MODE_EXACT = 'exact'
MODE_HEURISTIC = 'heuristic-lower-bound'


# ==================== PARTITIONS ====================

@dataclass
class SpherePartition:
    """
    Cells of S^{n-1} with unit representatives

    On the circle cells are arcs [b_i, b_{i+1}). Otherwise a point goes to the
    nearest representative, searched level by level through the parent
    partition so that refinements nest; ties go to the lowest index.
    """
    n: int
    representatives: np.ndarray
    boundaries: Optional[np.ndarray] = None
    parent: Optional['SpherePartition'] = None
    parents: Optional[np.ndarray] = None
    diameter: float = math.nan
    scheme: str = ''

    @property
    def num_cells(self):
        return self.representatives.shape[0]

    @property
    def is_arcs(self):
        return self.boundaries is not None

    def arcs(self):
        """(start, end) of each cell on the circle"""
        if not self.is_arcs:
            raise DimensionMismatchError("arc partition dimension", 2, self.n)
        b = self.boundaries
        ends = np.append(b[1:], b[0] + TWO_PI)
        return list(zip(b.tolist(), ends.tolist()))

    def assign(self, X) -> np.ndarray:
        """Cell index of each row of X"""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise DimensionMismatchError("point dimension", self.n, X.shape[1])
        if self.is_arcs:
            theta = np.mod(np.arctan2(X[:, 1], X[:, 0]) - self.boundaries[0], TWO_PI) + self.boundaries[0]
            idx = np.searchsorted(self.boundaries, theta, side='right') - 1
            return np.where(idx < 0, self.num_cells - 1, idx)

        scores = X @ self.representatives.T
        if self.parent is not None:
            owner = self.parent.assign(X)
            scores = np.where(self.parents[None, :] == owner[:, None], scores, -np.inf)
        return np.argmax(scores, axis=1)

    def depth(self):
        return 0 if self.parent is None else 1 + self.parent.depth()


def _arc_partition(boundaries, parent=None, parents=None, scheme='equal-arcs'):
    b = np.asarray(boundaries, dtype=float)
    ends = np.append(b[1:], b[0] + TWO_PI)
    mids = 0.5 * (b + ends)
    reps = np.column_stack([np.cos(mids), np.sin(mids)])
    lengths = ends - b
    diameter = float(np.max(2.0 * np.sin(np.minimum(lengths, math.pi) / 2.0)))
    return SpherePartition(2, reps, b, parent, parents, diameter, scheme)


def _repulsion_polish(X, steps=config.PARTITION_POLISH_STEPS):
    """Spread points on the sphere by a few projected repulsion steps"""
    m = X.shape[0]
    if m < 3:
        return X
    step = 0.1 / m
    for _ in range(steps):
        diff = X[:, None, :] - X[None, :, :]
        dist = np.linalg.norm(diff, axis=2) + np.eye(m)
        force = np.sum(diff / dist[:, :, None] ** 3, axis=1)
        force -= np.sum(force * X, axis=1, keepdims=True) * X
        X = X + step * force / max(1.0, np.abs(force).max())
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X


def estimate_diameter(P: SpherePartition, rng, samples: int = config.DIAMETER_SAMPLES) -> float:
    """Largest within-cell distance among sampled points"""
    X = random_sphere_points(P.n, samples, rng)
    labels = P.assign(X)
    best = 0.0
    for cell in range(P.num_cells):
        pts = X[labels == cell][:config.DIAMETER_CELL_CAP]
        if pts.shape[0] >= 2:
            best = max(best, float(pdist(pts).max()))
    return best


def build_partition(n: int, m_cells: int, seed=0) -> SpherePartition:
    """
    m_cells cells of S^{n-1}

    Equal arcs on the circle. For n >= 3 two cells are hemispheres with
    antipodal representatives; more cells use seeded random points spread
    by repulsion.
    """
    if n < 2:
        raise DomainError("n", n, "integers >= 2")
    if m_cells < 2:
        raise DomainError("m_cells", m_cells, "integers >= 2")
    if n == 2:
        return _arc_partition(TWO_PI * np.arange(m_cells) / m_cells)

    rng = np.random.default_rng(as_seed_sequence(seed, 'partition'))
    if m_cells == 2:
        e = np.zeros(n)
        e[0] = 1.0
        reps = np.vstack([e, -e])
    else:
        reps = _repulsion_polish(random_sphere_points(n, m_cells, rng))
    P = SpherePartition(n, reps, scheme='voronoi')
    P.diameter = 2.0 if m_cells == 2 else estimate_diameter(P, rng)
    return P


def _split_counts(m, m_new):
    """Children per cell: q everywhere, one more on r evenly spread cells"""
    q, r = divmod(m_new, m)
    counts = np.full(m, q)
    if r:
        counts[(np.arange(r) * m) // r] += 1
    return counts


def refine_partition(P: SpherePartition, m_new: int, seed=0) -> SpherePartition:
    """
    Split existing cells until there are m_new of them

    Arcs split into equal sub-arcs. Voronoi cells split by a few Lloyd
    iterations on sample points of the cell; a child representative that
    falls outside its parent is replaced by the nearest sample of its cluster.
    """
    m = P.num_cells
    if m_new < m:
        raise DomainError("m_new", m_new, f"integers >= {m}")
    counts = _split_counts(m, m_new)
    parents = np.repeat(np.arange(m), counts)

    if P.is_arcs:
        bounds = []
        for (a, b), c in zip(P.arcs(), counts):
            bounds.extend(a + (b - a) * np.arange(c) / c)
        return _arc_partition(np.array(bounds), P, parents, 'nested-arcs')

    rng = np.random.default_rng(as_seed_sequence(seed, f'refine-{m_new}'))
    X = random_sphere_points(P.n, max(200 * m_new, config.DIAMETER_SAMPLES), rng)
    owner = P.assign(X)
    reps = []
    for cell, c in enumerate(counts):
        pts = X[owner == cell]
        if c == 1 or pts.shape[0] < c:
            reps.append(np.repeat(P.representatives[cell][None, :], c, axis=0))
            continue
        centers = pts[rng.choice(pts.shape[0], size=c, replace=False)]
        for _ in range(20):
            labels = np.argmax(pts @ centers.T, axis=1)
            for j in range(c):
                members = pts[labels == j]
                if members.shape[0]:
                    v = members.sum(axis=0)
                    centers[j] = v / np.linalg.norm(v)
        inside = P.assign(centers) == cell
        for j in np.flatnonzero(~inside):
            members = pts[labels == j] if np.any(labels == j) else pts
            centers[j] = members[np.argmax(members @ centers[j])]
        reps.append(centers)

    child = SpherePartition(P.n, np.vstack(reps), parent=P, parents=parents, scheme='nested-voronoi')
    child.diameter = estimate_diameter(child, rng)
    return child


# ==================== A_z MATRIX ====================

class AzResult(NamedTuple):
    instance: WeightedInstance
    mass: float
    removed_diagonal: float
    noise: float
    mode: str


def _az_exact_circle(P, ts, zs):
    arcs = np.array(P.arcs())
    a0, a1 = arcs[:, 0][:, None], arcs[:, 1][:, None]
    b0, b1 = arcs[:, 0][None, :], arcs[:, 1][None, :]
    A = np.zeros((P.num_cells, P.num_cells))
    for t, z in zip(ts, zs):
        delta = math.acos(float(np.clip(t, -1.0, 1.0)))
        both = arc_overlap(a0, a1, b0 - delta, b1 - delta) + arc_overlap(a0, a1, b0 + delta, b1 + delta)
        A += z * both / (2.0 * TWO_PI)
    return A


def _latitude_pairs(rng, n, t, size):
    """x uniform on S^{n-1}, y uniform on {y : x.y = t}"""
    x = random_sphere_points(n, size, rng)
    g = rng.standard_normal((size, n))
    u = g - np.sum(g * x, axis=1, keepdims=True) * x
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return x, t * x + math.sqrt(max(0.0, 1.0 - t * t)) * u


def estimate_Az(P: SpherePartition, grid, samples: int = config.DEFAULT_MC_SAMPLES, seed=0,
                threads=None, exact: Optional[bool] = None) -> AzResult:
    """
    A_z(X, Y) = sum_t z(t) Pr[Tu in X and Tv_t in Y]

    Arc partitions of the circle are integrated exactly. Otherwise pairs are
    drawn from the latitude construction, samples per grid point. The matrix
    is symmetrized and its diagonal removed; the removed mass is reported.
    """
    if grid.z is None:
        raise DomainError("grid weights", None, "nonnegative weights")
    if np.any(grid.z < 0):
        raise DomainError("grid weight", float(grid.z.min()), "[0, inf)")
    keep = grid.z > 0
    ts, zs = grid.ts[keep], grid.z[keep]
    m = P.num_cells
    if exact is None:
        exact = P.is_arcs
    noise = 0.0

    if exact:
        A = _az_exact_circle(P, ts, zs)
        mode = MODE_EXACT
    else:
        if samples < config.MIN_AZ_SAMPLES:
            raise SampleCountError(samples, config.MIN_AZ_SAMPLES)
        jobs = [(i, size) for i in range(ts.size) for size in chunk_sizes(samples)]

        def work(rng, job):
            i, size = job
            x, y = _latitude_pairs(rng, P.n, float(ts[i]), size)
            return np.bincount(P.assign(x) * m + P.assign(y), minlength=m * m)

        counts = map_substreams(work, as_seed_sequence(seed, 'az'), jobs, threads)
        A = np.zeros(m * m)
        var = np.zeros(m * m)
        per_t = {}
        for (i, _), c in zip(jobs, counts):
            per_t[i] = per_t.get(i, 0) + c
        for i, c in per_t.items():
            p = c / samples
            A += zs[i] * p
            var += zs[i] ** 2 * p * (1.0 - p) / samples
        A = A.reshape(m, m)
        noise = float(np.sqrt(var.sum()))
        mode = 'monte-carlo'

    A = 0.5 * (A + A.T)
    mass = float(A.sum())
    removed = float(np.trace(A))
    np.fill_diagonal(A, 0.0)
    logger.debug("A_z over %d cells (%s): mass %.12f, diagonal %.3e", m, mode, mass, removed)
    return AzResult(WeightedInstance(A, dim_hint=P.n), mass, removed, noise, mode)


# ==================== RANK-n HEURISTIC ====================

@dataclass
class Embedding:
    """Unit vectors in R^n indexed by vertex"""
    vectors: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        norms = np.linalg.norm(F, axis=1)
        if np.any(np.abs(norms - 1.0) > config.UNIT_VECTOR_TOLERANCE):
            raise DomainError("embedding vector norm", float(norms[np.argmax(np.abs(norms - 1.0))]), "{1}")
        self.vectors = F

    @property
    def dim(self):
        return self.vectors.shape[1]

    def padded(self, n):
        """Same vectors with zero coordinates appended up to dimension n"""
        if n < self.dim:
            raise DimensionMismatchError("padded dimension", f">= {self.dim}", n)
        return Embedding(np.hstack([self.vectors, np.zeros((self.vectors.shape[0], n - self.dim))]))

    def lifted(self, parents):
        """Each child cell takes its parent's vector"""
        return Embedding(self.vectors[np.asarray(parents)])


def sdp_objective(A: WeightedInstance, F) -> float:
    """sum A(x, y)(1 - f(x).f(y))"""
    F = np.asarray(F, dtype=float)
    return A.total_weight - float(np.sum(A.weights * (F @ F.T)))


def _ascent(W, F, sweeps, trace=None):
    """Block-coordinate ascent in place: f(x) <- -w/|w| with w = 2 (A F)(x)"""
    V = F.shape[0]
    for _ in range(sweeps):
        moved = 0.0
        for x in range(V):
            w = 2.0 * (W[x] @ F)
            norm = np.linalg.norm(w)
            if norm == 0.0:
                continue
            new = -w / norm
            moved = max(moved, float(np.abs(new - F[x]).max()))
            F[x] = new
        if trace is not None:
            trace.append(float(W.sum() - np.sum(W * (F @ F.T))))
        if moved < 1e-13:
            break
    return F


class HeuristicResult(NamedTuple):
    value: float
    embedding: Embedding


def sdp_rank_n_heuristic(A: WeightedInstance, n: int, restarts: int = config.HEURISTIC_RESTARTS,
                         sweeps: int = config.HEURISTIC_SWEEPS, seed=0,
                         warm_starts: Optional[List[Embedding]] = None,
                         threads=None) -> HeuristicResult:
    """
    Lower bound on sdp_n(A) from the best of several ascents

    Starts: the given warm starts (zero-padded to dimension n), then random
    unit vectors. For n = 1 with restarts >= 2^(|V|-1) the random starts are
    replaced by every sign pattern, which makes the result exact.
    """
    if n < 1:
        raise DomainError("n", n, "integers >= 1")
    V = A.n_vertices
    W = A.weights
    if V == 0:
        return HeuristicResult(0.0, Embedding(np.ones((0, n))))

    starts = []
    for emb in warm_starts or []:
        if emb.vectors.shape[0] != V:
            raise DimensionMismatchError("warm start size", V, emb.vectors.shape[0])
        if emb.dim <= n:
            starts.append(emb.padded(n).vectors.copy())

    jobs = []
    if n == 1 and V <= config.MAX_ENUMERATION_SIZE and restarts >= (1 << (V - 1)):
        starts.extend(f[:, None].copy() for f in enumerate_sign_vectors(V))
    else:
        jobs = list(range(restarts))

    def random_start(rng, _):
        return _ascent(W, random_sphere_points(n, V, rng) if n > 1
                       else np.where(rng.random((V, 1)) < 0.5, -1.0, 1.0), sweeps)

    results = [_ascent(W, F, sweeps) for F in starts]
    if jobs:
        results.extend(map_substreams(random_start, as_seed_sequence(seed, 'heuristic'), jobs, threads))

    values = [sdp_objective(A, F) for F in results]
    best = int(np.argmax(values))
    return HeuristicResult(values[best], Embedding(results[best]))


# ==================== ROUNDING ====================

def hyperplane_rounding(embedding: Embedding, A: WeightedInstance, mode: str = 'expectation',
                        count: int = config.ROUNDING_SAMPLES, seed=0) -> float:
    """
    Expected or best sampled hyperplane-rounded cut value, in sdp_1 units

    expectation: sum A(x, y)(1 - (2/pi) arcsin(f(x).f(y))).
    sampled: best sign(F r) over count Gaussian directions r.
    """
    F = embedding.vectors
    if F.shape[0] != A.n_vertices:
        raise DimensionMismatchError("embedding size", A.n_vertices, F.shape[0])
    if mode == 'expectation':
        G = np.clip(F @ F.T, -1.0, 1.0)
        return float(np.sum(A.weights * (1.0 - gw_kernel(G))))
    if mode != 'sampled':
        raise DomainError("mode", mode, "{expectation, sampled}")

    rng = np.random.default_rng(as_seed_sequence(seed, 'rounding'))
    R = rng.standard_normal((F.shape[1], count))
    S = np.where(F @ R >= 0, 1.0, -1.0)
    values = A.total_weight - np.einsum('ij,ij->j', S, A.weights @ S)
    return float(values.max())


# ==================== REPORTS ====================

@dataclass
class RatioReport:
    m: int
    sdp1: float
    sdp1_mode: str
    sdpn: float
    ratio: float
    noise: float
    instance: Optional[WeightedInstance] = field(default=None, repr=False)
    embedding: Optional[Embedding] = field(default=None, repr=False)
    partition: Optional[SpherePartition] = field(default=None, repr=False)

    @property
    def demonstrated(self):
        """A ratio only counts as an integrality gap when sdp_1 is exact"""
        return self.sdp1_mode == MODE_EXACT

    def row(self):
        return {'m': self.m, 'sdp1': repr(self.sdp1), 'sdp1_mode': self.sdp1_mode,
                'sdpn': repr(self.sdpn), 'ratio': repr(self.ratio), 'noise': repr(self.noise)}


def _circle_lifts(P: SpherePartition, kmax=config.SINGLE_DEGREE_KMAX):
    """(cos k theta, sin k theta) at cell representatives, k = 1..kmax"""
    theta = np.arctan2(P.representatives[:, 1], P.representatives[:, 0])
    return [Embedding(np.column_stack([np.cos(k * theta), np.sin(k * theta)])) for k in range(1, kmax + 1)]


def instance_from_certificate(cert, m_cells: int, samples: int = config.DEFAULT_MC_SAMPLES, seed=0,
                              partition: Optional[SpherePartition] = None,
                              warm_starts: Optional[List[Embedding]] = None, threads=None,
                              restarts: int = config.HEURISTIC_RESTARTS,
                              sweeps: int = config.HEURISTIC_SWEEPS) -> RatioReport:
    """
    Weighted instance over the cells of a partition and its sdp_1 / sdp_n ratio

    sdp_1 is exact up to MAX_EXACT_MAXCUT_VERTICES cells and otherwise the
    best sampled hyperplane rounding, labelled as a heuristic lower bound.
    """
    if cert.grid.z is None or not np.any(cert.grid.z > 0):
        raise DomainError("certificate grid weights", None, "at least one positive weight")
    n = cert.n
    P = partition or build_partition(n, m_cells, substream(seed, 'partition'))
    az = estimate_Az(P, cert.grid, samples, substream(seed, f'az-{P.num_cells}'), threads)
    A = az.instance

    starts = list(warm_starts or [])
    starts.append(Embedding(P.representatives))
    if n == 2:
        starts.extend(_circle_lifts(P))
    heur = sdp_rank_n_heuristic(A, n, restarts, sweeps, substream(seed, f'sdpn-{P.num_cells}'),
                                warm_starts=starts, threads=threads)

    if A.n_vertices <= config.MAX_EXACT_MAXCUT_VERTICES:
        sdp1, _ = max_cut_exact(A)
        mode = MODE_EXACT
    else:
        sdp1 = hyperplane_rounding(heur.embedding, A, 'sampled', seed=substream(seed, f'round-{P.num_cells}'))
        mode = MODE_HEURISTIC

    ratio = 1.0 if heur.value <= 0 else sdp1 / heur.value
    logger.info("m=%d: sdp1=%.9f (%s) sdp%d=%.9f ratio=%.6f", P.num_cells, sdp1, mode, n, heur.value, ratio)
    return RatioReport(P.num_cells, sdp1, mode, heur.value, ratio, az.noise, A, heur.embedding, P)


def ratio_trend(cert, m_list, samples: int = config.DEFAULT_MC_SAMPLES, seed=0, threads=None,
                restarts: int = config.HEURISTIC_RESTARTS,
                sweeps: int = config.HEURISTIC_SWEEPS) -> List[RatioReport]:
    """
    instance_from_certificate along nested refinements

    Each partition splits the previous one's cells and the previous best
    embedding is lifted to the children as a warm start.
    """
    m_list = [int(m) for m in m_list]
    if not m_list:
        raise DomainError("m_list", m_list, "a nonempty ascending list")
    if any(b < a for a, b in zip(m_list, m_list[1:])):
        raise DomainError("m_list", m_list, "an ascending list")

    reports = []
    P = None
    for m in m_list:
        P = (build_partition(cert.n, m, substream(seed, 'partition')) if P is None
             else refine_partition(P, m, substream(seed, f'refine-{m}')))
        warm = []
        if reports and P.parents is not None:
            warm.append(reports[-1].embedding.lifted(P.parents))
        reports.append(instance_from_certificate(cert, m, samples, seed, partition=P, warm_starts=warm,
                                                 threads=threads, restarts=restarts, sweeps=sweeps))
    return reports


def write_ratio_csv(path, reports: List[RatioReport]) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=config.RATIO_CSV_FIELDS)
        writer.writeheader()
        for report in reports:
            writer.writerow(report.row())
