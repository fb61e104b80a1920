"""
Jacobi Module
Symmetric Jacobi polynomials P_k^(nu,nu) normalized to P_k(1) = 1, the
envelope polynomials bounding them near t = 1, and the cosine-power
integral representation used as an independent oracle
"""

import math
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple

import mpmath
import numpy as np
from scipy import special

from . import config
from .exceptions import DomainError

logger = logging.getLogger(__name__)


# ==================== BASIS ====================

@dataclass(frozen=True)
class JacobiBasis:
    """Symmetric Jacobi basis with parameter nu > -1"""
    nu: float

    def __post_init__(self):
        if not self.nu > -1:
            raise DomainError("nu", self.nu, "(-1, inf)")

    @classmethod
    def for_dimension(cls, n):
        """Basis of the Schoenberg expansion on S^{n-1}"""
        if n < 2:
            raise DomainError("n", n, "integers >= 2")
        return cls(config.nu_for_dimension(n))

    def shifted(self):
        """Basis with nu + 1 (derivatives live there)"""
        return JacobiBasis(self.nu + 1)


def _check_t(t):
    """Clip t into [-1, 1], rejecting values beyond the domain tolerance"""
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + config.DOMAIN_TOLERANCE) or np.any(np.isnan(arr)):
        bad = arr[np.argmax(np.abs(np.nan_to_num(arr, nan=np.inf)))] if arr.ndim else float(arr)
        raise DomainError("t", bad, "[-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def _check_k(k, name="k"):
    if int(k) != k or k < 0:
        raise DomainError(name, k, "nonnegative integers")
    return int(k)


# ==================== EVALUATION ====================

def _recurrence_mp(nu, kmax, t):
    """All R_0..R_kmax at a single mpf point"""
    values = [mpmath.mpf(1)]
    if kmax == 0:
        return values
    values.append(t)
    two_nu = 2 * nu
    for k in range(1, kmax):
        nxt = ((2 * k + two_nu + 1) * t * values[k] - k * values[k - 1]) / (k + two_nu + 1)
        values.append(nxt)
    return values


def eval_all(basis: JacobiBasis, kmax: int, t, precision: Optional[int] = None):
    """
    Evaluate R_0..R_kmax at one point in a single recurrence pass

    Uses (k + 2nu + 1) R_{k+1} = (2k + 2nu + 1) t R_k - k R_{k-1}, which is the
    classical recurrence with the value at t = 1 divided out term by term.

    Args:
        basis: JacobiBasis
        kmax: Highest degree
        t: Point in [-1, 1]
        precision: Decimal digits for mpmath, or None for double

    Returns:
        numpy array of length kmax + 1 (list of mpf in precision mode)
    """
    kmax = _check_k(kmax, "kmax")
    t = float(_check_t(t)) if precision is None else t

    if precision is not None:
        with mpmath.workdps(precision):
            tm = mpmath.mpf(t)
            if abs(tm) > 1 + mpmath.mpf(config.DOMAIN_TOLERANCE):
                raise DomainError("t", t, "[-1, 1]")
            tm = max(min(tm, mpmath.mpf(1)), mpmath.mpf(-1))
            nu = mpmath.mpf(basis.nu)
            return _recurrence_mp(nu, kmax, tm)

    return jacobi_table(basis, kmax, np.array([t]))[0]


def eval_jacobi(basis: JacobiBasis, k: int, t, precision: Optional[int] = None):
    """Evaluate R_k = P_k^(nu,nu)(t) / P_k^(nu,nu)(1)"""
    k = _check_k(k)
    values = eval_all(basis, k, t, precision=precision)
    return values[k] if precision is not None else float(values[k])


def jacobi_table(basis: JacobiBasis, kmax: int, ts) -> np.ndarray:
    """
    Evaluate R_0..R_kmax at many points at once

    Returns:
        Array of shape (len(ts), kmax + 1)
    """
    kmax = _check_k(kmax, "kmax")
    ts = _check_t(np.atleast_1d(ts)).ravel()
    table = np.empty((ts.size, kmax + 1))
    table[:, 0] = 1.0
    if kmax == 0:
        return table
    table[:, 1] = ts
    two_nu = 2.0 * basis.nu
    for k in range(1, kmax):
        table[:, k + 1] = ((2 * k + two_nu + 1) * ts * table[:, k]
                           - k * table[:, k - 1]) / (k + two_nu + 1)
    return table


def derivative_table(basis: JacobiBasis, kmax: int, ts) -> np.ndarray:
    """
    Derivatives R_k'(t) for k = 0..kmax

    R_k^(nu)' = k (k + 2nu + 1) / (2nu + 2) * R_{k-1}^(nu+1)
    """
    kmax = _check_k(kmax, "kmax")
    ts = np.atleast_1d(ts)
    out = np.zeros((np.size(ts), kmax + 1))
    if kmax == 0:
        return out
    lower = jacobi_table(basis.shifted(), kmax - 1, ts)
    k = np.arange(1, kmax + 1)
    out[:, 1:] = lower * (k * (k + 2 * basis.nu + 1) / (2 * basis.nu + 2))
    return out


def eval_derivative(basis: JacobiBasis, k: int, t) -> float:
    """Derivative of R_k at t"""
    k = _check_k(k)
    return float(derivative_table(basis, k, np.array([float(_check_t(t))]))[0, k])


# ==================== NORMS AND DECAY ====================

def squared_norm(basis: JacobiBasis, k: int, precision: Optional[int] = None):
    """
    h_k = integral of R_k(t)^2 (1 - t^2)^nu over [-1, 1]

    Equals 2^(2nu+1) Gamma(nu+1)^2 k! / ((2k + 2nu + 1) Gamma(k + 2nu + 1)).
    """
    nu = basis.nu
    if precision is None:
        if k == 0 and nu == -0.5:
            return math.pi
        log_h = ((2 * nu + 1) * math.log(2) + 2 * special.gammaln(nu + 1)
                 + special.gammaln(k + 1) - math.log(2 * k + 2 * nu + 1)
                 - special.gammaln(k + 2 * nu + 1))
        return float(math.exp(log_h))
    with mpmath.workdps(precision):
        nu = mpmath.mpf(nu)
        if k == 0 and nu == mpmath.mpf(-0.5):
            return +mpmath.pi
        return (mpmath.power(2, 2 * nu + 1) * mpmath.gamma(nu + 1) ** 2 * mpmath.factorial(k)
                / ((2 * k + 2 * nu + 1) * mpmath.gamma(k + 2 * nu + 1)))


def decay_constant(basis: JacobiBasis, precision: Optional[int] = None):
    """Constant C with (1 - t^2)^(nu + 1/2) R_k(t)^2 / h_k <= C on [-1, 1]"""
    if basis.nu < -0.5:
        return None
    if precision is None:
        return 2 * math.e * (2 + math.sqrt(2) * basis.nu) / math.pi
    with mpmath.workdps(precision):
        return 2 * mpmath.e * (2 + mpmath.sqrt(2) * mpmath.mpf(basis.nu)) / mpmath.pi


def decay_envelope(basis: JacobiBasis, k: int, t, precision: Optional[int] = None):
    """
    Certified bound on |R_k(t)| for nu >= -1/2

    min(1, sqrt(C h_k) (1 - t^2)^(-(2nu + 1)/4)); nonincreasing in k since
    h_k is. Returns None when no such bound is available.
    """
    c = decay_constant(basis, precision)
    if c is None:
        return None
    if precision is None:
        s = 1.0 - float(t) ** 2
        if s <= 0:
            return 1.0
        env = math.sqrt(c * squared_norm(basis, k)) * s ** (-(2 * basis.nu + 1) / 4)
        return min(1.0, env)
    with mpmath.workdps(precision):
        s = 1 - mpmath.mpf(t) ** 2
        if s <= 0:
            return mpmath.mpf(1)
        env = (mpmath.sqrt(c * squared_norm(basis, k, precision))
               * mpmath.power(s, -(2 * mpmath.mpf(basis.nu) + 1) / 4))
        return min(mpmath.mpf(1), env)


def envelope_table(basis: JacobiBasis, k: int, ts) -> Optional[np.ndarray]:
    """decay_envelope at many points in double precision, or None"""
    c = decay_constant(basis)
    if c is None:
        return None
    s = 1.0 - np.atleast_1d(np.asarray(ts, dtype=float)) ** 2
    scale = math.sqrt(c * squared_norm(basis, k))
    inside = s > 0
    env = np.ones_like(s)
    env[inside] = scale * s[inside] ** (-(2 * basis.nu + 1) / 4)
    return np.minimum(env, 1.0)


# ==================== ENVELOPE POLYNOMIAL ====================

class EnvelopePolynomial(NamedTuple):
    """q(t) with R_k(t) <= q(t) for all k >= min_degree"""
    n: int
    coefficients: Tuple[Fraction, ...]   # ascending powers
    min_degree: int
    precision: Optional[int] = None

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, t):
        if self.precision is not None:
            with mpmath.workdps(self.precision):
                coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(self.coefficients)]
                return mpmath.polyval(coeffs, mpmath.mpf(t))
        coeffs = [float(c) for c in self.coefficients]
        return np.polynomial.polynomial.polyval(t, coeffs)

    def exact(self, t: Fraction) -> Fraction:
        """Evaluate in rational arithmetic"""
        t = Fraction(t)
        return sum((c * t ** i for i, c in enumerate(self.coefficients)), Fraction(0))


def _cosine_power_ratios(n):
    """
    I_{j} / I_0 for I_j = integral of cos^(2nu + 2j) over [0, pi/2], j = 1, 2

    Exact rationals because 2nu = n - 3 is an integer.
    """
    two_nu = n - 3
    r1 = Fraction(two_nu + 1, two_nu + 2)
    r2 = r1 * Fraction(two_nu + 3, two_nu + 4)
    return r1, r2


def envelope_poly(n: int, degree: Optional[int] = None,
                  precision: Optional[int] = None) -> EnvelopePolynomial:
    """
    Envelope polynomial from the cosine-power integral representation

    Bounding the Chebyshev factor by 1 and (1 - s cos^2)^(k/2) by its value at
    k = degree gives q(t) = c * integral cos^(2nu) (1 - (1 - t^2) cos^2)^(degree/2).
    degree defaults to 2 for n >= 4 and 4 for n = 3.

    Args:
        n: Sphere dimension (>= 3)
        degree: 2 or 4
        precision: Decimal digits the returned polynomial evaluates in, or None for double

    Returns:
        EnvelopePolynomial with exact rational coefficients
    """
    if n < 3:
        raise DomainError("n", n, "integers >= 3")
    if degree is None:
        degree = 4 if n == 3 else 2
    if degree not in (2, 4):
        raise DomainError("degree", degree, "{2, 4}")

    r1, r2 = _cosine_power_ratios(n)
    if degree == 2:
        # 1 - r1 (1 - t^2)
        coeffs = (1 - r1, Fraction(0), r1)
    else:
        # 1 - 2 r1 s + r2 s^2 with s = 1 - t^2
        coeffs = (1 - 2 * r1 + r2, Fraction(0), 2 * r1 - 2 * r2, Fraction(0), r2)
    return EnvelopePolynomial(n=n, coefficients=coeffs, min_degree=degree, precision=precision)


def exact_jacobi_coefficients(n: int, k: int):
    """Ascending rational coefficients of R_k for sphere dimension n"""
    two_nu = n - 3
    polys = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for j in range(1, k):
        a = Fraction(2 * j + two_nu + 1, j + two_nu + 1)
        b = Fraction(j, j + two_nu + 1)
        shifted = [Fraction(0)] + [a * c for c in polys[j]]
        prev = polys[j - 1] + [Fraction(0)] * (len(shifted) - len(polys[j - 1]))
        polys.append([s - b * p for s, p in zip(shifted, prev)])
    return polys[k]


class DeltaThreshold(NamedTuple):
    """Largest delta with the envelope below t on [1 - delta, 1]"""
    delta: float
    exact: Optional[Fraction]   # set when the crossing point is rational
    crossing: float             # 1 - delta


def _deflate_at_one(coeffs):
    """Divide g(t) - t by (t - 1); g(1) must equal 1"""
    g = list(coeffs) + [Fraction(0)] * max(0, 2 - len(coeffs))
    g[1] -= 1
    # synthetic division from the top
    quotient = [Fraction(0)] * (len(g) - 1)
    carry = Fraction(0)
    for i in range(len(g) - 1, 0, -1):
        carry = g[i] + carry
        quotient[i - 1] = carry
    remainder = g[0] + carry
    if remainder != 0:
        raise DomainError("g(1)", float(1 + remainder), "{1}")
    while len(quotient) > 1 and quotient[-1] == 0:
        quotient.pop()
    return quotient


def _last_crossing(coeffs, digits=config.ENVELOPE_ROOT_DIGITS):
    """
    Largest t in [-1, 1) with g(t) - t changing sign, as an upper bound

    Returns (t_up: Fraction, exact: bool). Below t_up the quotient
    (g(t) - t) / (t - 1) stays positive up to 1, so g <= t on [t_up, 1].
    """
    quotient = _deflate_at_one(coeffs)
    if len(quotient) == 1:
        return Fraction(-1), True
    if len(quotient) == 2:
        root = -quotient[0] / quotient[1]
        return max(root, Fraction(-1)), True

    roots = np.roots([float(c) for c in reversed(quotient)])
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-9 and -1 - 1e-9 < r.real < 1)
    if not real:
        return Fraction(-1), False

    with mpmath.workdps(digits):
        poly = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(quotient)]
        polished = mpmath.findroot(lambda x: mpmath.polyval(poly, x), real[-1])
        scale = 10 ** 15
        t_up = Fraction(int(mpmath.ceil(polished * scale)), scale)

    value = sum((c * t_up ** i for i, c in enumerate(quotient)), Fraction(0))
    if value < 0:
        # sign check failed at the rounded point; step up once more
        t_up += Fraction(1, 10 ** 15)
    return max(t_up, Fraction(-1)), False


def delta_threshold(n: int, precision: Optional[int] = None) -> DeltaThreshold:
    """
    Largest delta such that every R_k (k >= 2) is at most t on [1 - delta, 1]

    Covers the envelope's range of degrees and, for n = 3, the low degrees
    below the quartic envelope's reach, checked directly. delta is capped at 1
    and rounded down when the crossing point is irrational. precision sets
    the digits used to polish irrational crossings.
    """
    digits = max(precision or 0, config.ENVELOPE_ROOT_DIGITS)
    env = envelope_poly(n)
    crossing, exact = _last_crossing(env.coefficients, digits)
    for k in range(2, env.min_degree):
        low, low_exact = _last_crossing(exact_jacobi_coefficients(n, k), digits)
        if low > crossing:
            crossing, exact = low, low_exact

    crossing = max(crossing, Fraction(0))
    delta_exact = 1 - crossing
    delta = float(delta_exact)
    if Fraction(delta) > delta_exact:
        delta = math.nextafter(delta, 0.0)
    logger.debug("delta_threshold(n=%d) = %r (exact=%s)", n, delta, exact)
    return DeltaThreshold(delta=delta, exact=delta_exact if exact else None,
                          crossing=float(crossing))


# ==================== INTEGRAL REPRESENTATION ====================

def _composite_gauss_legendre(a, b, points):
    """Nodes and weights of a composite 16-point rule with >= points nodes"""
    per_panel = config.QUADRATURE_PANEL_POINTS
    panels = max(1, math.ceil(points / per_panel))
    x, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def cosine_power_integral(nu: float, quadrature_points: Optional[int] = None,
                          precision: Optional[int] = None):
    """
    Integral of cos^(2nu) over [0, pi/2]

    Closed form Gamma(1/2) Gamma(nu + 1/2) / (2 Gamma(nu + 1)) unless
    quadrature_points is given, in which case it is integrated numerically.
    With precision the closed form is evaluated in mpmath and returned as mpf.
    """
    if nu < 0:
        raise DomainError("nu", nu, "[0, inf)")
    if precision is not None:
        with mpmath.workdps(precision):
            nu = mpmath.mpf(nu)
            return mpmath.sqrt(mpmath.pi) * mpmath.gamma(nu + 0.5) / (2 * mpmath.gamma(nu + 1))
    if quadrature_points is None:
        return float(math.exp(special.gammaln(0.5) + special.gammaln(nu + 0.5)
                              - special.gammaln(nu + 1)) / 2)
    nodes, weights = _composite_gauss_legendre(0.0, math.pi / 2, quadrature_points)
    return float(np.dot(weights, np.cos(nodes) ** (2 * nu)))


def integral_representation(nu: float, k: int, theta: float,
                            quadrature_points: int = 1024, precision: Optional[int] = None):
    """
    R_k(cos theta) from its cosine-power integral representation

    c * integral over [0, pi/2] of cos^(2nu) phi * w^(k/2) T_k(cos theta / sqrt(w)),
    w = 1 - sin^2 theta cos^2 phi, c = 2 Gamma(nu + 1) / (Gamma(1/2) Gamma(nu + 1/2)).
    The product w^(k/2) T_k(.) is evaluated as Re((cos theta + i sin theta sin phi)^k).
    With precision the integral is taken by mpmath.quad and returned as mpf.
    """
    if nu < 0:
        raise DomainError("nu", nu, "[0, inf)")
    if quadrature_points < config.MIN_QUADRATURE_POINTS:
        raise DomainError("quadrature_points", quadrature_points,
                          f"integers >= {config.MIN_QUADRATURE_POINTS}")
    k = _check_k(k)

    if precision is not None:
        with mpmath.workdps(precision):
            c, s = mpmath.cos(mpmath.mpf(theta)), mpmath.sin(mpmath.mpf(theta))
            two_nu = 2 * mpmath.mpf(nu)
            value = mpmath.quad(
                lambda phi: mpmath.cos(phi) ** two_nu * mpmath.re(mpmath.mpc(c, s * mpmath.sin(phi)) ** k),
                [0, mpmath.pi / 4, mpmath.pi / 2])
            return value / cosine_power_integral(nu, precision=precision)

    nodes, weights = _composite_gauss_legendre(0.0, math.pi / 2, quadrature_points)
    z = math.cos(theta) + 1j * math.sin(theta) * np.sin(nodes)
    integrand = np.cos(nodes) ** (2 * nu) * np.real(z ** k)
    return float(np.dot(weights, integrand) / cosine_power_integral(nu))


def gauss_jacobi_rule(basis: JacobiBasis, points: int):
    """Gauss-Jacobi nodes and weights for the weight (1 - t^2)^nu"""
    return special.roots_jacobi(points, basis.nu, basis.nu)


def project_onto_basis(basis: JacobiBasis, func, degree: int, points: Optional[int] = None):
    """
    Expansion coefficients a_k = <f, R_k> / h_k for k = 0..degree

    Args:
        func: Vectorized callable on [-1, 1]
        points: Gauss-Jacobi nodes (defaults to 4 * degree + 64)
    """
    if points is None:
        points = 4 * degree + 64
    nodes, weights = gauss_jacobi_rule(basis, points)
    table = jacobi_table(basis, degree, nodes)
    values = np.asarray(func(nodes), dtype=float)
    norms = np.array([squared_norm(basis, k) for k in range(degree + 1)])
    return (table.T @ (weights * values)) / norms
