"""Truncated Fredholm determinants of the finite-rank correlation kernels.

Three routes to the same moment generating function
E[prod_m prod_j (1 + chi_{t_m}(V_j(t_m))) * det-weight]:

  * ``fredholm_series``     the block-determinant multi-sum, quadrature or
                            exact site sums,
  * ``finite_rank_det``     the N x N shortcut det(I + A) available at a
                            single time,
  * ``mgf_monte_carlo``     the direct weighted Monte Carlo.

The multi-sum truncates block sizes at the particle number N; higher
blocks vanish by rank, which ``rank_overflow_probe`` verifies empirically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import configurations as cfg
from . import kernels as ker
from . import martingales as mart
from . import quadrature, simulate, specfun
from .errors import DomainError, NumericError
from .processes import ProcessKind

__all__ = [
    "ContinuousChi",
    "SiteChi",
    "TestFunctionSpec",
    "fredholm_series",
    "finite_rank_det",
    "mgf_monte_carlo",
    "rank_overflow_probe",
]


@dataclass(frozen=True)
class ContinuousChi:
    """chi supported on a compact interval; ``fn`` vectorized on it."""

    support: tuple
    fn: Callable

    def __post_init__(self):
        a, b = self.support
        if not a < b:
            raise DomainError("chi support must be a nonempty interval")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        a, b = self.support
        inside = (y >= a) & (y <= b)
        vals = np.where(inside, self.fn(y), 0.0)
        return vals

    @classmethod
    def indicator(cls, a: float, b: float, scale: float) -> "ContinuousChi":
        if scale <= -1.0:
            raise DomainError("chi must stay above -1")
        return cls(support=(float(a), float(b)), fn=lambda y: np.full_like(y, scale))


@dataclass(frozen=True)
class SiteChi:
    """chi supported on finitely many lattice sites."""

    sites: tuple  # ((site, value), ...)

    def __post_init__(self):
        items = tuple(sorted((float(s), float(v)) for s, v in self.sites))
        object.__setattr__(self, "sites", items)
        if any(v <= -1.0 for _, v in items):
            raise DomainError("chi must stay above -1")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for s, v in self.sites:
            out = np.where(y == s, v, out)
        return out


@dataclass(frozen=True)
class TestFunctionSpec:
    """Times with one chi per time; times strictly increasing."""

    times: tuple
    chis: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "chis", tuple(self.chis))
        if len(ts) != len(self.chis):
            raise DomainError("need exactly one chi per time")
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise DomainError("times must be strictly increasing")

    @classmethod
    def collapsed(cls, times, chis) -> "TestFunctionSpec":
        """Build a spec merging repeated times by (1+a)(1+b) - 1."""
        pairs = sorted(zip((float(t) for t in times), chis), key=lambda p: p[0])
        out_t: list[float] = []
        out_c: list = []
        for t, c in pairs:
            if out_t and t == out_t[-1]:
                out_c[-1] = _merge_chi(out_c[-1], c)
            else:
                out_t.append(t)
                out_c.append(c)
        return cls(tuple(out_t), tuple(out_c))

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunctionSpec":
        try:
            times = d["times"]
            chis = []
            for item in d["chi"]:
                if "sites" in item:
                    chis.append(SiteChi(tuple((s, v) for s, v in item["sites"])))
                else:
                    a, b = item["support"]
                    if item.get("kind", "indicator") != "indicator":
                        raise DomainError("only indicator chis parse from JSON")
                    chis.append(ContinuousChi.indicator(a, b, item["scale"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad test-function payload: {exc}") from exc
        return cls(tuple(times), tuple(chis))


def _merge_chi(a, b):
    if isinstance(a, SiteChi) and isinstance(b, SiteChi):
        sites = sorted(set(s for s, _ in a.sites) | set(s for s, _ in b.sites))
        arr = np.array(sites)
        vals = (1.0 + a(arr)) * (1.0 + b(arr)) - 1.0
        return SiteChi(tuple(zip(sites, vals)))
    if isinstance(a, ContinuousChi) and isinstance(b, ContinuousChi):
        lo = min(a.support[0], b.support[0])
        hi = max(a.support[1], b.support[1])
        return ContinuousChi(
            support=(lo, hi), fn=lambda y: (1.0 + a(y)) * (1.0 + b(y)) - 1.0
        )
    raise DomainError("cannot merge chi functions of different kinds")


# --------------------------------------------------------------------------
# Quadrature discretization of each time slice
# --------------------------------------------------------------------------


def _slice_nodes(chi, order: int):
    """(points, weights, chi values) discretizing one time slice."""
    if isinstance(chi, SiteChi):
        pts = np.array([s for s, _ in chi.sites])
        wts = np.ones_like(pts)
        return pts, wts, np.array([v for _, v in chi.sites])
    a, b = chi.support
    x, w = quadrature.gauss_legendre(order)
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    wts = 0.5 * (b - a) * w
    return pts, wts, chi(pts)


def _series_value(kern, spec, order: int, grid_fn=None) -> float:
    xi = kern.xi
    if xi is None:
        raise DomainError("the series needs a finite-configuration kernel")
    if grid_fn is None:
        grid_fn = lambda s, xs, t, ys: ker.kernel_eval_grid(kern, s, xs, t, ys)
    rank = len(xi.support())
    m_times = len(spec.times)
    slices = [_slice_nodes(chi, order) for chi in spec.chis]
    pair = {}
    for a in range(m_times):
        for b in range(m_times):
            pair[a, b] = grid_fn(
                spec.times[a], slices[a][0], spec.times[b], slices[b][0]
            )
    total = 0.0
    for sizes in itertools.product(range(rank + 1), repeat=m_times):
        dim = sum(sizes)
        if dim == 0:
            total += 1.0
            continue
        slot_time = [m for m, c in enumerate(sizes) for _ in range(c)]
        node_counts = [len(slices[m][0]) for m in slot_time]
        sym = 1.0
        for c in sizes:
            sym *= math.factorial(c)
        grids = np.meshgrid(*[np.arange(c) for c in node_counts], indexing="ij")
        idx = np.stack([g.reshape(-1) for g in grids], axis=1)  # (combos, dim)
        chunk = 1 << 18
        for lo in range(0, idx.shape[0], chunk):
            sel = idx[lo : lo + chunk]
            mats = np.empty((sel.shape[0], dim, dim))
            wprod = np.ones(sel.shape[0])
            for a in range(dim):
                ma = slot_time[a]
                wprod *= (
                    slices[ma][1][sel[:, a]] * slices[ma][2][sel[:, a]]
                )
                for b in range(dim):
                    mb = slot_time[b]
                    mats[:, a, b] = pair[ma, mb][sel[:, a], sel[:, b]]
            total += float(wprod @ np.linalg.det(mats)) / sym
    return total


def fredholm_series(
    kern: ker.CorrelationKernel,
    spec: TestFunctionSpec,
    quad_order: int = 64,
    monitor: bool = True,
) -> float:
    """Block-determinant expansion of the Fredholm determinant.

    Gauss-Legendre of ``quad_order`` per continuous dimension, exact sums
    on site chis; block sizes run to the particle number (higher blocks
    vanish by rank).  With ``monitor`` the order is doubled once and a
    shift beyond 1e-6 raises.
    """
    coarse = _series_value(kern, spec, quad_order)
    if not monitor or all(isinstance(c, SiteChi) for c in spec.chis):
        return coarse
    fine = _series_value(kern, spec, 2 * quad_order)
    if abs(fine - coarse) > 1e-6:
        raise NumericError(
            f"fredholm series moved {abs(fine - coarse):.2e} on order doubling"
        )
    return fine


def finite_rank_det(
    kern: ker.CorrelationKernel, spec: TestFunctionSpec, quad_order: int = 200
) -> float:
    """det(I_N + A) with A_jk the chi-weighted overlap of M^{u_j} with
    p(t, . | u_k); single time only."""
    if len(spec.times) != 1:
        raise DomainError("the finite-rank shortcut is a single-time formula")
    xi = kern.xi
    proc = kern.process
    if xi is None or not xi.simple():
        raise DomainError("the finite-rank shortcut needs a simple configuration")
    t = spec.times[0]
    pts, wts, chiv = _slice_nodes(spec.chis[0], quad_order)
    sup = xi.support()
    n = len(sup)
    mvals = np.column_stack(
        [mart.martingale_transform(proc, xi, u, t, pts) for u in sup]
    )
    pvals = np.column_stack(
        [specfun.transition_density(proc, t, pts, u) for u in sup]
    )
    a = np.einsum("q,qj,qk->jk", wts * chiv, mvals, pvals)
    return float(np.linalg.det(np.eye(n) + a))


def mgf_monte_carlo(
    process: ProcessKind,
    xi: cfg.PointConfiguration,
    spec: TestFunctionSpec,
    n_paths: int,
    seed: int,
    T: float | None = None,
    workers: int = 1,
) -> simulate.Estimate:
    """Monte Carlo of the chi-product observable under the det weight."""

    def observable(paths):
        out = np.ones(paths.shape[0])
        for m, chi in enumerate(spec.chis):
            out *= np.prod(1.0 + chi(paths[:, m, :]), axis=1)
        return out

    return simulate.dmr_expectation(
        process, xi, observable, spec.times, n_paths, seed, T=T, workers=workers
    )


def rank_overflow_probe(
    kern: ker.CorrelationKernel, spec: TestFunctionSpec, quad_order: int = 64
) -> float:
    """|det| of one (N+1)-point equal-time block; rank forces it to vanish."""
    xi = kern.xi
    rank = len(xi.support())
    t = spec.times[0]
    pts, _, _ = _slice_nodes(spec.chis[0], max(quad_order, rank + 1))
    if len(pts) < rank + 1:
        raise DomainError("need at least N + 1 nodes to probe the rank")
    sel = pts[: rank + 1]
    mat = ker.kernel_eval_grid(kern, t, sel, t, sel)
    return abs(float(np.linalg.det(mat)))
