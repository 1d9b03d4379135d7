"""The geometrically lifted observable of the softened leftmost-particle step.

The rational cardinal polynomials of a drift configuration are lifted to
Gamma-function ratios

    Phi^{u,a}(x) = Gamma(1 - a(u - x)) prod_{r != u}
                   Gamma(a(r - u)) / Gamma(a(r - x)),

which interpolate between the stochastic Toda world (a > 0) and the
noncolliding Brownian motion (a -> 0, the combinatorial limit).  The
expectation of the softened indicator of the lowest particle admits both a
complex-path and a real-path (quadrature transform) Monte Carlo
representation; both are implemented here, together with the plain
noncolliding reference obtained through the reciprocal time relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import configurations as cfg
from . import quadrature, simulate, specfun
from .errors import DomainError, NumericError
from .processes import bm

__all__ = [
    "LiftParams",
    "phi_lift",
    "pole_distance",
    "oconnell_theta_cpr",
    "oconnell_theta_dmr",
    "reciprocal_reference",
]


@dataclass(frozen=True)
class LiftParams:
    a: float
    nu_hat: cfg.PointConfiguration
    t: float
    h: float

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError("lift scale a must be positive")
        if self.t <= 0:
            raise DomainError("time must be positive")
        if not self.nu_hat.simple():
            raise DomainError("drift configuration must be simple")
        if self.nu_hat.total() > 5:
            raise DomainError("at most 5 drift components supported")

    @classmethod
    def from_dict(cls, d: dict) -> "LiftParams":
        try:
            return cls(
                a=float(d["a"]),
                nu_hat=cfg.PointConfiguration.from_points(d["nu_hat"]),
                t=float(d["t"]),
                h=float(d["h"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad lift parameter payload: {exc}") from exc


_POLE_TOL = 1e-8


def pole_distance(nu_hat: cfg.PointConfiguration, u: float, a: float, x) -> np.ndarray:
    """Distance from x to the nearest pole u - n/a, n >= 1."""
    x = np.asarray(x, dtype=complex)
    w = a * (u - x)  # poles at w = 1, 2, 3, ...
    nearest = np.clip(np.round(w.real), 1, None)
    return np.abs(w - nearest) / a


def phi_lift(nu_hat: cfg.PointConfiguration, u: float, a: float, x):
    """Lifted cardinal function; vectorized over complex x.

    Computed through complex log-gamma sums; the exponential of the sum is
    branch-independent.  Arguments within 1e-8 of a pole raise.
    """
    if a <= 0:
        raise DomainError("lift scale a must be positive")
    sup = nu_hat.support()
    if u not in sup:
        raise DomainError(f"{u} is not a drift component")
    x = np.asarray(x, dtype=complex)
    dist = pole_distance(nu_hat, u, a, x)
    if (dist < _POLE_TOL).any():
        w = a * (u - x)
        idx = int(np.clip(np.round(np.atleast_1d(w.real)[np.argmin(dist)]), 1, None))
        raise DomainError(f"argument within 1e-8 of pole {idx} at {u} - {idx}/a")
    acc = specfun.log_gamma(1.0 - a * (u - x))
    for r in sup:
        if r == u:
            continue
        acc = acc + specfun.log_gamma(np.asarray(a * (r - u), dtype=complex))
        acc = acc - specfun.log_gamma(a * (r - x))
    out = np.exp(acc)
    return complex(out) if out.ndim == 0 else out


def _ridge_clearance(params: LiftParams) -> float:
    """Smallest pole gap, in units of the Gaussian scale sqrt(1/t)."""
    sigma = math.sqrt(1.0 / params.t)
    sup = params.nu_hat.support()
    worst = math.inf
    for u in sup:
        first_pole = u - 1.0 / params.a
        for v in sup:
            worst = min(worst, (v - first_pole) / sigma)
    return worst


def _lift_weight(params: LiftParams, z: np.ndarray) -> np.ndarray:
    """det[Phi^{nu_k, a}(Z_j)] over a batch: z has shape (paths, N)."""
    sup = params.nu_hat.support()
    n = len(sup)
    mat = np.empty(z.shape[:-1] + (n, n), dtype=complex)
    for k, u in enumerate(sup):
        mat[..., :, k] = phi_lift(params.nu_hat, u, params.a, z)
    return np.linalg.det(mat)


def oconnell_theta_cpr(
    params: LiftParams, n_paths: int, seed: int, workers: int = 1
) -> simulate.Estimate:
    """Complex-path estimate of the softened-step expectation.

    E[prod_j 1(Re Z_j(1/t) >= h/t) det Phi^{nu_k,a}(Z_j(1/t))] with
    Z_j = nu_j + B_j + i W_j.  Paths within pole tolerance are rejected
    and counted; more than 0.01% rejections fails the run.
    """
    sup = np.array(params.nu_hat.support())
    n = len(sup)
    tinv = 1.0 / params.t
    threshold = params.h / params.t

    def one_block(block, size):
        rng = simulate.stream(seed, block)
        real = sup + math.sqrt(tinv) * rng.standard_normal((size, n))
        imag = math.sqrt(tinv) * rng.standard_normal((size, n))
        z = real + 1j * imag
        keep = np.ones(size, dtype=bool)
        for u in sup:
            keep &= (
                pole_distance(params.nu_hat, u, params.a, z) >= _POLE_TOL
            ).all(axis=1)
        z = z[keep]
        real = real[keep]
        weights = _lift_weight(params, z)
        indicator = (real >= threshold).all(axis=1)
        return indicator * weights

    values = simulate._run_blocks(n_paths, workers, one_block)
    rejected = n_paths - len(values)
    if rejected > 1e-4 * n_paths:
        raise NumericError(
            f"{rejected} of {n_paths} paths fell on the pole ladder; "
            "the lift scale is too coarse"
        )
    return simulate.Estimate.from_samples(values)


def _lift_transform(params: LiftParams, u: float, x: np.ndarray, order: int):
    """E_g[Phi^{u,a}(x + i g)] with g centered Gaussian of variance 1/t."""
    nodes, weights = quadrature.gauss_hermite(order)
    scale = math.sqrt(2.0 / params.t)
    z = x[..., None] + 1j * scale * nodes
    vals = phi_lift(params.nu_hat, u, params.a, z)
    return (vals @ weights) / math.sqrt(math.pi)


def _stable_order(params: LiftParams, probe: np.ndarray, start: int = 128) -> int:
    order = start
    while order <= 1024:
        a = np.concatenate(
            [_lift_transform(params, u, probe, order) for u in params.nu_hat.support()]
        )
        b = np.concatenate(
            [
                _lift_transform(params, u, probe, 2 * order)
                for u in params.nu_hat.support()
            ]
        )
        if np.max(np.abs(a - b)) <= 1e-8:
            return 2 * order
        order *= 2
    raise NumericError("quadrature transform did not stabilize by order 1024")


class _TransformTable:
    """Chebyshev interpolant of x -> E_g[Phi^{u,a}(x + i g)] on [lo, hi].

    The transform is analytic with its nearest singularities on the pole
    ladder, so a modest node count reaches full precision; a spot self
    check against direct quadrature guards the construction.
    """

    def __init__(self, params, u, lo, hi, order, nodes=96):
        self.lo, self.hi = lo, hi
        k = np.arange(nodes)
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * math.pi / (2 * nodes))
        vals = _lift_transform(params, u, x, order)
        scaled = (2.0 * x - (lo + hi)) / (hi - lo)
        self.coef = np.polynomial.chebyshev.chebfit(scaled, vals, nodes - 1)
        check = np.linspace(lo, hi, 7)[1:-1]
        direct = _lift_transform(params, u, check, order)
        if np.max(np.abs(self(check) - direct)) > 1e-8:
            raise NumericError("transform interpolant failed its self check")

    def __call__(self, x):
        scaled = (2.0 * np.asarray(x) - (self.lo + self.hi)) / (self.hi - self.lo)
        return np.polynomial.chebyshev.chebval(scaled, self.coef)


def oconnell_theta_dmr(
    params: LiftParams,
    n_paths: int,
    seed: int,
    quad_order: int = 128,
    workers: int = 1,
) -> simulate.Estimate:
    """Real-path estimate through the quadrature transform of the lift.

    Requires the first pole of every lifted factor to sit at least three
    Gaussian standard deviations below the drift components.
    """
    clearance = _ridge_clearance(params)
    if clearance < 3.0:
        raise DomainError(
            f"poles are {clearance:.2f} standard deviations from the ridge; "
            "need at least 3 (decrease a or increase t)"
        )
    sup = np.array(params.nu_hat.support())
    n = len(sup)
    tinv = 1.0 / params.t
    sigma = math.sqrt(tinv)
    threshold = params.h / params.t
    probe = np.concatenate([sup + d for d in (-3 * sigma, 0.0, 3 * sigma)])
    order = _stable_order(params, probe, quad_order)
    lo = float(sup.min() - 6.0 * sigma)
    hi = float(sup.max() + 6.0 * sigma)
    first_pole = float(sup.max() - 1.0 / params.a)
    tables = None
    if lo - first_pole > 1.5 * sigma:
        tables = [_TransformTable(params, u, lo, hi, order) for u in sup]

    def one_block(block, size):
        rng = simulate.stream(seed, block)
        real = sup + sigma * rng.standard_normal((size, n))
        mat = np.empty((size, n, n), dtype=complex)
        if tables is not None and real.min() > lo and real.max() < hi:
            for k in range(n):
                mat[:, :, k] = tables[k](real)
        else:
            for k, u in enumerate(sup):
                mat[:, :, k] = _lift_transform(params, u, real, order)
        weights = np.linalg.det(mat)
        indicator = (real >= threshold).all(axis=1)
        return indicator * weights

    values = simulate._run_blocks(n_paths, workers, one_block)
    return simulate.Estimate.from_samples(values)


def reciprocal_reference(
    nu_hat: cfg.PointConfiguration,
    t: float,
    h: float,
    n_paths: int,
    seed: int,
    dt: float = 5e-4,
) -> simulate.Estimate:
    """P(all particles >= h at time t) for the noncolliding motion from
    the drift configuration; the reciprocal-time counterpart of the lifted
    estimates."""
    ens = simulate.sample_noncolliding(bm(), nu_hat, [t], dt, n_paths, seed)
    vals = (ens.paths[:, 0, :] >= h).all(axis=1).astype(float)
    return simulate.Estimate.from_samples(vals)
