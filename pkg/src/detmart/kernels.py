"""Space-time correlation kernels and correlation-function determinants.

The defining structure: for a finite configuration xi,

    K(s, x; t, y) = sum_v xi({v}) p(s, x | v) M_xi^v(t, y)
                    - 1(s > t) p(s - t, x | y),

and every multi-time correlation function is a block determinant of K.
The module also carries the closed-form extended kernels (Hermite,
Laguerre, sine, Bessel) and kernels of the two canonical infinite
configurations (full integer lattice, squared Bessel zeros), the latter
evaluated by an exact image resummation: the naive site sum is a
difference of terms of size exp(pi^2 (t + tau) / 2) with an O(1) result,
hopeless in double precision already for tau around 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import configurations as cfg
from . import martingales as mart
from . import quadrature, specfun
from .errors import DomainError, NumericError
from .processes import ProcessKind, bm, besq, rw

__all__ = [
    "CorrelationKernel",
    "SpaceTimeQuery",
    "general_kernel",
    "rw_kernel",
    "multipoint_kernel",
    "extended_hermite_kernel",
    "extended_laguerre_kernel",
    "sine_kernel",
    "bessel_kernel",
    "kernel_eval",
    "kernel_eval_grid",
    "kernel_extended_hermite",
    "hermite_gauge",
    "kernel_extended_laguerre",
    "laguerre_gauge",
    "kernel_sine",
    "kernel_bessel",
    "correlation",
    "gue_density",
    "lattice_kernel",
    "besselzero_kernel_half",
    "relaxation_probe",
]

_VARIANTS = (
    "general",
    "rw",
    "multipoint",
    "extended_hermite",
    "extended_laguerre",
    "sine",
    "bessel",
)


@dataclass(frozen=True)
class CorrelationKernel:
    variant: str
    process: ProcessKind | None = None
    xi: cfg.PointConfiguration | None = None
    size: int | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise DomainError(f"unknown kernel variant {self.variant!r}")


def general_kernel(process: ProcessKind, xi: cfg.PointConfiguration) -> CorrelationKernel:
    if process.tag == "RW":
        return rw_kernel(xi)
    if not xi.simple():
        raise DomainError("general kernel needs a simple configuration")
    return CorrelationKernel("general", process=process, xi=xi)


def rw_kernel(xi: cfg.PointConfiguration) -> CorrelationKernel:
    if not xi.simple():
        raise DomainError("walk kernel needs a simple configuration")
    for u in xi.support():
        if u != int(u) or int(u) % 2 != 0:
            raise DomainError("walk kernel needs even integer starting sites")
    return CorrelationKernel("rw", process=rw(), xi=xi)


def multipoint_kernel(process: ProcessKind, xi: cfg.PointConfiguration) -> CorrelationKernel:
    if process.tag not in ("BM", "BESQ"):
        raise DomainError("multipoint kernel supports BM and BESQ")
    return CorrelationKernel("multipoint", process=process, xi=xi)


def extended_hermite_kernel(size: int) -> CorrelationKernel:
    return CorrelationKernel("extended_hermite", process=bm(), size=int(size))


def extended_laguerre_kernel(size: int, nu: float) -> CorrelationKernel:
    return CorrelationKernel(
        "extended_laguerre", process=besq(nu), size=int(size), nu=float(nu)
    )


def sine_kernel() -> CorrelationKernel:
    return CorrelationKernel("sine")


def bessel_kernel(nu: float) -> CorrelationKernel:
    return CorrelationKernel("bessel", nu=float(nu))


@dataclass(frozen=True)
class SpaceTimeQuery:
    """Strictly increasing positive times with per-time point lists."""

    times: tuple
    points: tuple  # tuple of tuples, one per time

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        ps = tuple(tuple(float(x) for x in row) for row in self.points)
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "points", ps)
        if len(ts) != len(ps):
            raise DomainError("times and point lists must align")
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise DomainError("query times must be strictly increasing")
        if any(t <= 0 for t in ts):
            raise DomainError("query times must be positive")
        if sum(len(row) for row in ps) > 64:
            raise DomainError("queries support at most 64 points in total")


# --------------------------------------------------------------------------
# Finite-configuration kernels
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _phi_coeff_matrix(process: ProcessKind, xi: cfg.PointConfiguration) -> np.ndarray:
    """Columns: monomial coefficients of Phi_xi^{u_k}; shape (N, N)."""
    sup = xi.support()
    n = len(sup)
    out = np.empty((n, n))
    for k, u in enumerate(sup):
        out[:, k] = cfg.phi_coeffs(xi, u)
    return out


@lru_cache(maxsize=4096)
def _twotime_coeff_matrix(
    process: ProcessKind, xi: cfg.PointConfiguration, s: float, x: float
) -> np.ndarray:
    """Columns: coefficients of the two-time Phi for each support point."""
    sup = xi.support()
    d = xi.total()
    out = np.empty((d, len(sup)))
    for k, u in enumerate(sup):
        out[:, k] = cfg.phi_twotime_coeffs(process, xi, u, s, x)
    return out


def _rw_parity_ok(t: float, x: float) -> bool:
    return (
        t >= 0
        and float(t).is_integer()
        and float(x).is_integer()
        and (int(t) + int(x)) % 2 == 0
    )


def kernel_eval(kern: CorrelationKernel, s: float, x: float, t: float, y: float) -> float:
    """Evaluate the kernel at (s, x; t, y)."""
    v = kern.variant
    if v == "general":
        return float(kernel_eval_grid(kern, s, np.array([x]), t, np.array([y]))[0, 0])
    if v == "rw":
        return float(kernel_eval_grid(kern, s, np.array([x]), t, np.array([y]))[0, 0])
    if v == "multipoint":
        proc, xi = kern.process, kern.xi
        cmat = _twotime_coeff_matrix(proc, xi, float(s), float(x))
        vals = mart.poly_values(proc, cmat.shape[0] - 1, t, np.array([y]))[0]
        msum = 0.0
        for k, u in enumerate(xi.support()):
            msum += specfun.transition_density(proc, s, x, u) * float(vals @ cmat[:, k])
        if s > t:
            msum -= specfun.transition_density(proc, s - t, x, y)
        return float(msum)
    if v == "extended_hermite":
        return kernel_extended_hermite(kern.size, s, x, t, y)
    if v == "extended_laguerre":
        return kernel_extended_laguerre(kern.size, kern.nu, s, x, t, y)
    if v == "sine":
        return kernel_sine(t - s, y - x)
    if v == "bessel":
        return kernel_bessel(kern.nu, t - s, y, x)
    raise DomainError(f"unknown kernel variant {v!r}")


def kernel_eval_grid(
    kern: CorrelationKernel, s: float, xs: np.ndarray, t: float, ys: np.ndarray
) -> np.ndarray:
    """Matrix of kernel values over xs x ys at a fixed time pair."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if kern.variant == "general":
        proc, xi = kern.process, kern.xi
        sup = np.array(xi.support())
        cmat = _phi_coeff_matrix(proc, xi)
        mvals = mart.poly_values(proc, len(sup) - 1, t, ys) @ cmat  # (ny, N)
        pvals = np.stack(
            [specfun.transition_density(proc, s, xs, u) for u in sup], axis=-1
        )  # (nx, N)
        out = pvals @ mvals.T
        if s > t:
            out -= np.stack(
                [specfun.transition_density(proc, s - t, xs, yv) for yv in ys],
                axis=-1,
            )
        return out
    if kern.variant == "rw":
        xi = kern.xi
        sup = np.array(xi.support())
        out = np.zeros((len(xs), len(ys)))
        ok_x = np.array([_rw_parity_ok(s, xv) for xv in xs])
        ok_y = np.array([_rw_parity_ok(t, yv) for yv in ys])
        if not ok_x.any() or not ok_y.any():
            return out
        proc = rw()
        cmat = _phi_coeff_matrix(proc, xi)
        mvals = mart.poly_values(proc, len(sup) - 1, t, ys) @ cmat
        pvals = np.stack(
            [
                np.array([specfun.rw_transition(int(s), int(xv), int(u)) for xv in xs])
                for u in sup
            ],
            axis=-1,
        )
        body = pvals @ mvals.T
        if s > t:
            body -= np.array(
                [
                    [specfun.rw_transition(int(s - t), int(xv), int(yv)) for yv in ys]
                    for xv in xs
                ]
            )
        mask = np.outer(ok_x, ok_y)
        out[mask] = body[mask]
        return out
    # fall back to scalar evaluation for the closed-form variants
    return np.array([[kernel_eval(kern, s, xv, t, yv) for yv in ys] for xv in xs])


# --------------------------------------------------------------------------
# Extended Hermite / Laguerre kernels
# --------------------------------------------------------------------------


def _hermite_fn(n: int, x: float) -> float:
    # orthonormal oscillator function
    return (
        specfun.hermite(n, x)
        * math.exp(-x * x / 2.0)
        / math.sqrt(math.sqrt(math.pi) * 2.0**n * math.factorial(n))
    )


def hermite_gauge(s: float, x: float, t: float, y: float) -> float:
    """Factor linking the concentrated-start kernel to the Hermite kernel."""
    return math.exp(-x * x / (4.0 * s) + y * y / (4.0 * t))


def kernel_extended_hermite(size: int, s: float, x: float, t: float, y: float) -> float:
    """Extended Hermite kernel of rank ``size``.

    The s > t subtraction uses the Mehler sum form, i.e. the heat kernel
    conjugated by the oscillator gauge; with that convention the
    concentrated-start kernel equals gauge times this one identically.
    """
    xs, yt = x / math.sqrt(2.0 * s), y / math.sqrt(2.0 * t)
    ratio = math.sqrt(t / s)
    acc = 0.0
    for n in range(size):
        acc += ratio**n * _hermite_fn(n, xs) * _hermite_fn(n, yt)
    acc /= math.sqrt(2.0 * s)
    if s > t:
        acc -= (
            math.exp(x * x / (4.0 * s) - y * y / (4.0 * t))
            * specfun.transition_density(bm(), s - t, x, y)
        )
    return acc


def _laguerre_fn(n: int, nu: float, x: float) -> float:
    return (
        math.sqrt(math.gamma(n + 1.0) / math.gamma(n + nu + 1.0))
        * x ** (nu / 2.0)
        * specfun.laguerre(n, nu, x)
        * math.exp(-x / 2.0)
    )


def laguerre_gauge(nu: float, s: float, x: float, t: float, y: float) -> float:
    num = (x / (2.0 * s)) ** (nu / 2.0) * math.exp(-x / (4.0 * s))
    den = (y / (2.0 * t)) ** (nu / 2.0) * math.exp(-y / (4.0 * t))
    return num / den


def kernel_extended_laguerre(
    size: int, nu: float, s: float, x: float, t: float, y: float
) -> float:
    """Extended Laguerre kernel of rank ``size`` and index nu.

    Same gauge convention as the Hermite variant, with the Hardy-Hille sum
    supplying the s > t subtraction.
    """
    xs, yt = x / (2.0 * s), y / (2.0 * t)
    ratio = t / s
    acc = 0.0
    for n in range(size):
        acc += ratio**n * _laguerre_fn(n, nu, xs) * _laguerre_fn(n, nu, yt)
    acc /= 2.0 * s
    if s > t:
        acc -= specfun.transition_density(besq(nu), s - t, x, y) / laguerre_gauge(
            nu, s, x, t, y
        )
    return acc


# --------------------------------------------------------------------------
# Sine and Bessel kernels
# --------------------------------------------------------------------------


def kernel_sine(t: float, x: float, tol: float = 1e-10) -> float:
    """Extended sine kernel K_sin(t, x)."""
    if t == 0.0:
        if x == 0.0:
            return 1.0
        return math.sin(math.pi * x) / (math.pi * x)
    if t > 0.0:

        def f(lam):
            return np.exp(math.pi**2 * lam * lam * t / 2.0) * np.cos(
                math.pi * lam * x
            )

        return quadrature.adaptive_gauss_legendre(f, 0.0, 1.0, tol)

    def f(lam):
        return np.exp(math.pi**2 * lam * lam * t / 2.0) * np.cos(math.pi * lam * x)

    hi = 1.0 + math.sqrt(100.0 / (math.pi**2 * abs(t) / 2.0))
    return -quadrature.adaptive_gauss_legendre(f, 1.0, hi, tol)


def kernel_bessel(nu: float, t: float, y: float, x: float, tol: float = 1e-10) -> float:
    """Extended Bessel kernel K_J(t, y | x), nu > -1, x, y >= 0."""
    if nu <= -1.0:
        raise DomainError("kernel_bessel requires nu > -1")
    if x < 0 or y < 0:
        raise DomainError("kernel_bessel requires x, y >= 0")
    if t == 0.0:
        if x == y:
            if x == 0.0:
                raise DomainError("equal-time Bessel kernel undefined at the origin")
            a = math.sqrt(x)
            jv = specfun.bessel_j(nu, a)
            jd = specfun.bessel_j_derivative(nu, a)
            return 0.25 * ((1.0 - nu * nu / x) * jv * jv + jd * jd)
        sx, sy = math.sqrt(x), math.sqrt(y)
        return (
            specfun.bessel_j(nu, sx) * sy * specfun.bessel_j_derivative(nu, sy)
            - sx * specfun.bessel_j_derivative(nu, sx) * specfun.bessel_j(nu, sy)
        ) / (2.0 * (x - y))

    def f(lam):
        root = np.sqrt(lam)
        return (
            np.exp(lam * t / 2.0)
            * specfun.bessel_j(nu, root * math.sqrt(x))
            * specfun.bessel_j(nu, root * math.sqrt(y))
        )

    if t > 0.0:
        return 0.25 * quadrature.adaptive_gauss_legendre(f, 0.0, 1.0, tol)
    hi = 1.0 + 100.0 / (abs(t) / 2.0)
    return -0.25 * quadrature.adaptive_gauss_legendre(f, 1.0, hi, tol)


# --------------------------------------------------------------------------
# Correlation functions
# --------------------------------------------------------------------------


def correlation(kern, query: SpaceTimeQuery) -> float:
    """Determinant of the block kernel matrix over the query points.

    ``kern`` may be a CorrelationKernel or any callable (s, x, t, y) -> K.
    Walk queries that violate the time-space parity return 0.
    """
    evaluate = kern if callable(kern) else (lambda s, x, t, y: kernel_eval(kern, s, x, t, y))
    if isinstance(kern, CorrelationKernel) and kern.variant == "rw":
        for t, row in zip(query.times, query.points):
            if any(not _rw_parity_ok(t, x) for x in row):
                return 0.0
    flat = [(t, x) for t, row in zip(query.times, query.points) for x in row]
    n = len(flat)
    if n == 0:
        return 1.0
    matrix = np.empty((n, n))
    for i, (ti, xi_) in enumerate(flat):
        for j, (tj, xj) in enumerate(flat):
            matrix[i, j] = evaluate(ti, xi_, tj, xj)
    return float(np.linalg.det(matrix))


def gue_density(size: int, t: float, x) -> float:
    """Eigenvalue density of the Gaussian unitary ensemble, variance t."""
    if t <= 0:
        raise DomainError("gue_density requires t > 0")
    x = np.asarray(x, dtype=float)
    if len(x) != size:
        raise DomainError("point count must equal the ensemble size")
    norm = t ** (-size * size / 2.0) / (
        (2.0 * math.pi) ** (size / 2.0)
        * np.prod([math.gamma(j) for j in range(1, size + 1)])
    )
    h = cfg.vandermonde(x)
    return float(norm * math.exp(-float(x @ x) / (2.0 * t)) * h * h)


# --------------------------------------------------------------------------
# Infinite-configuration kernels by image resummation
# --------------------------------------------------------------------------


def _lattice_image_term(j: int, sp: float, x: float, tp: float, y: float, tol: float):
    # (1/2pi) int_{-pi}^{pi} exp((tp l^2 - sp (l + 2 pi j)^2)/2)
    #                        cos(l (y - x) - 2 pi j x) dl
    def f(lam):
        expo = 0.5 * (tp * lam * lam - sp * (lam + 2.0 * math.pi * j) ** 2)
        return np.exp(expo) * np.cos(lam * (y - x) - 2.0 * math.pi * j * x)

    return quadrature.adaptive_gauss_legendre(f, -math.pi, math.pi, tol) / (
        2.0 * math.pi
    )


def _auto_images(s: float, unit: float) -> int:
    # image m contributes at most exp(-s * unit^2 (2m - 1)^2 / 2); pick the
    # count that pushes the first dropped image below 1e-18
    target = math.sqrt(2.0 * 88.0 / s) / unit
    return max(3, int(math.ceil((target + 1.0) / 2.0)) + 1)


def lattice_kernel(
    s: float, x: float, t: float, y: float, images: int | None = None,
    tol: float = 1e-11,
) -> float:
    """Kernel of the noncolliding motion started from the full lattice.

    Exact Poisson resummation of sum_k p(s, x | k) M^k(t, y): the image
    j = 0 reproduces the extended sine kernel in (t - s), the others decay
    with s; ``images`` bounds |j| and is sized automatically by default.
    """
    if images is None:
        images = _auto_images(s, 2.0 * math.pi)
    acc = 0.0
    for j in range(-images, images + 1):
        acc += _lattice_image_term(j, s, x, t, y, tol)
    if s > t:
        acc -= specfun.transition_density(bm(), s - t, x, y)
    return acc


def besselzero_kernel_half(
    s: float, x: float, t: float, y: float, images: int | None = None,
    tol: float = 1e-11,
) -> float:
    """Kernel of the squared-Bessel-zero configuration at index 1/2.

    For nu = 1/2 the Fourier-Bessel sum over zeros (k pi)^2 collapses to a
    theta function; Poisson resummation gives images of the half-line heat
    kernel:

      sum part = (1/(pi sqrt(y))) sum_m int_0^1
                 exp(mu^2 t/2 - s (mu - 2m)^2 / 2)
                 sin(mu sqrt(y)) sin(sqrt(x) (mu - 2m)) d mu.
    """
    if x <= 0 or y <= 0:
        raise DomainError("positive coordinates required")
    if images is None:
        images = _auto_images(s, 1.0)
    sx, sy = math.sqrt(x), math.sqrt(y)
    acc = 0.0
    for m in range(-images, images + 1):

        def f(mu, m=m):
            shift = mu - 2.0 * m
            expo = 0.5 * (t * mu * mu - s * shift * shift)
            return np.exp(expo) * np.sin(mu * sy) * np.sin(sx * shift)

        acc += quadrature.adaptive_gauss_legendre(f, 0.0, 1.0, tol)
    acc /= math.pi * sy
    if s > t:
        acc -= specfun.transition_density(besq(0.5), s - t, x, y)
    return acc


def besselzero_kernel_direct(
    nu: float,
    s: float,
    x: float,
    t: float,
    y: float,
    zero_count: int,
    table: specfun.BesselZeroTable | None = None,
    tol: float = 1e-10,
) -> float:
    """Direct zero-by-zero sum for general nu.

    Terms carry a factor e^{t/2} against an O(1) result, so cancellation
    limits this route to small times; a conditioning guard raises once the
    attainable precision is worse than requested.
    """
    if math.exp(t / 2.0) * 1e-15 > 0.1 * max(tol, 1e-12):
        raise NumericError(
            "direct Bessel-zero summation loses too much precision at this time; "
            "only the nu = 1/2 image form reaches large times"
        )
    if table is None:
        table = specfun.bessel_zeros(nu, zero_count)
    acc = 0.0
    proc = besq(nu)
    for k in range(1, zero_count + 1):
        v = table.zeros[k - 1] ** 2
        p = specfun.transition_density(proc, s, x, v)
        if p == 0.0:
            continue
        acc += p * mart.besselzero_martingale(nu, k, t, y, table=table, tol=tol)
    if s > t:
        acc -= specfun.transition_density(proc, s - t, x, y)
    return acc


def relaxation_probe(
    variant: str,
    s: float,
    x: float,
    t: float,
    y: float,
    tau_ladder,
    nu: float = 0.5,
):
    """Distances from the time-shifted kernel to its equilibrium limit.

    Returns (discrepancies, truncation_moves): one entry per tau, where
    ``truncation_moves`` records how much doubling the image count shifts
    the kernel value (the empirical convergence monitor).
    """
    if variant == "sine":
        limit = kernel_sine(t - s, y - x)
        unit = 2.0 * math.pi

        def at(tau, images):
            return lattice_kernel(s + tau, x, t + tau, y, images=images)

    elif variant == "bessel":
        if abs(nu - 0.5) > 1e-12:
            raise DomainError(
                "relaxation probe reaches large times for nu = 1/2 only; "
                "use besselzero_kernel_direct for other indices at small times"
            )
        limit = (x / y) ** (nu / 2.0) * kernel_bessel(nu, t - s, y, x)
        unit = 1.0

        def at(tau, images):
            return besselzero_kernel_half(s + tau, x, t + tau, y, images=images)

    else:
        raise DomainError(f"unknown relaxation variant {variant!r}")

    discrepancies = []
    moves = []
    for tau in tau_ladder:
        count = _auto_images(s + tau, unit)
        base = at(tau, count)
        double = at(tau, 2 * count)
        moves.append(abs(double - base))
        if abs(double - base) > 1e-8:
            raise NumericError("image count did not converge for the probe")
        discrepancies.append(abs(double - limit))
    return discrepancies, moves
