"""Path sampling, Monte Carlo representation estimators, and exact oracles.

Estimators compute E[F * det-weight] where the weight is the determinantal
martingale det[M_xi^{u_k}(T, V_j(T))] over independent free paths (real
representation) or det[phi^{u_k}(Z_j(T))] over complex paths (complex
representation).  ``brute_force_rw`` enumerates every walk outcome exactly
and is the ground truth the walk estimators are tested against.

Randomness: Philox counter streams keyed by (seed, block index) with a
fixed block size, so results are bit-reproducible and independent of how
blocks are distributed over workers.  Observables receive positions sorted
within each time slice (the unlabeled configuration) as an array of shape
(paths, times, particles) and must return one value per path.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import configurations as cfg
from . import martingales as mart
from .errors import CapacityError, DomainError, NumericError
from .processes import ProcessKind, rw

__all__ = [
    "Estimate",
    "PathEnsemble",
    "stream",
    "sample_free",
    "attach_companions",
    "det_weight",
    "cpr_weight",
    "dmr_expectation",
    "cpr_expectation",
    "sample_noncolliding_rw",
    "sample_noncolliding",
    "brute_force_rw",
    "reducibility_check",
]

BLOCK = 4096
_MASK64 = (1 << 64) - 1


def stream(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one path block; 2^64 blocks per seed."""
    key = ((int(seed) & _MASK64) << 64) | (int(block) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with standard error; complex means carry both SEs."""

    mean: complex | float
    std_error: float
    n: int
    std_error_imag: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("an estimate needs at least two samples")
        if self.std_error < 0:
            raise DomainError("standard error must be nonnegative")

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "Estimate":
        n = len(values)
        if np.iscomplexobj(values):
            return cls(
                mean=complex(values.mean()),
                std_error=float(values.real.std(ddof=1) / math.sqrt(n)),
                n=n,
                std_error_imag=float(values.imag.std(ddof=1) / math.sqrt(n)),
            )
        return cls(
            mean=float(values.mean()),
            std_error=float(values.std(ddof=1) / math.sqrt(n)),
            n=n,
        )

    def combined_se(self, other: "Estimate") -> float:
        return math.sqrt(self.std_error**2 + other.std_error**2)


@dataclass(frozen=True)
class PathEnsemble:
    """Sampled trajectories: paths[p, m, j] = particle j at times[m]."""

    process: ProcessKind
    times: tuple
    paths: np.ndarray
    seed: int
    companions: np.ndarray | None = None

    def __post_init__(self):
        if self.paths.ndim != 3 or self.paths.shape[1] != len(self.times):
            raise DomainError("path array must be (paths, times, particles)")
        if self.companions is not None and self.companions.shape != self.paths.shape:
            raise DomainError("companions must match the path array shape")

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def sorted_positions(self) -> np.ndarray:
        return np.sort(self.paths, axis=2)


def _blocks(n_paths: int):
    start = 0
    block = 0
    while start < n_paths:
        size = min(BLOCK, n_paths - start)
        yield block, start, size
        start += size
        block += 1


def _check_times(process: ProcessKind, times) -> tuple:
    ts = tuple(float(t) for t in times)
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
        raise DomainError("times must be strictly increasing")
    if any(t < 0 for t in ts):
        raise DomainError("times must be nonnegative")
    if process.tag == "RW" and any(not float(t).is_integer() for t in ts):
        raise DomainError("walk times must be integers")
    return ts


def sample_free(
    process: ProcessKind, u, times, n_paths: int, seed: int
) -> PathEnsemble:
    """Independent free paths from u_j, exact transition sampling."""
    ts = _check_times(process, times)
    u = np.asarray(u, dtype=float)
    n_particles = len(u)
    if process.tag == "BESQ" and (u < 0).any():
        raise DomainError("BESQ starts must be nonnegative")
    if process.tag == "BES" and (u < 0).any():
        raise DomainError("BES starts must be nonnegative")
    if process.tag == "RW" and any(not float(v).is_integer() for v in u):
        raise DomainError("walk starts must be integers")
    out = np.empty((n_paths, len(ts), n_particles))
    for block, start, size in _blocks(n_paths):
        rng = stream(seed, block)
        out[start : start + size] = _sample_free_block(process, u, ts, size, rng)
    return PathEnsemble(process=process, times=ts, paths=out, seed=int(seed))


def _sample_free_block(process, u, ts, size, rng):
    n_particles = len(u)
    out = np.empty((size, len(ts), n_particles))
    state = np.broadcast_to(u, (size, n_particles)).copy()
    prev_t = 0.0
    for m, t in enumerate(ts):
        dt = t - prev_t
        if dt > 0:
            if process.tag == "BM":
                state = state + math.sqrt(dt) * rng.standard_normal(state.shape)
            elif process.tag == "BESQ":
                mix = rng.poisson(state / (2.0 * dt))
                state = 2.0 * dt * rng.standard_gamma(process.nu + 1.0 + mix)
            elif process.tag == "BES":
                sq = state * state
                mix = rng.poisson(sq / (2.0 * dt))
                state = np.sqrt(2.0 * dt * rng.standard_gamma(process.nu + 1.0 + mix))
            elif process.tag == "RW":
                steps = int(round(dt))
                jumps = rng.integers(0, 2, size=state.shape + (steps,)) * 2 - 1
                state = state + jumps.sum(axis=-1)
            else:
                raise DomainError(f"unsupported process {process}")
        out[:, m, :] = state
        prev_t = t
    return out


def attach_companions(ens: PathEnsemble, seed2: int) -> PathEnsemble:
    """Independent imaginary parts: Brownian for BM/BES, time-changed
    Brownian W(C(t)) for the walk."""
    proc = ens.process
    if proc.tag not in ("BM", "BES", "RW"):
        raise DomainError(f"no complex companion defined for {proc}")
    comp = np.empty_like(ens.paths)
    n_particles = ens.paths.shape[2]
    for block, start, size in _blocks(ens.n_paths):
        rng = stream(seed2, block)
        state = np.zeros((size, n_particles))
        prev_t = 0.0
        for m, t in enumerate(ens.times):
            dt = t - prev_t
            if dt > 0:
                if proc.tag == "RW":
                    dc = mart.sample_ctime(dt, rng, size=(size, n_particles))
                    state = state + np.sqrt(dc) * rng.standard_normal(state.shape)
                else:
                    state = state + math.sqrt(dt) * rng.standard_normal(state.shape)
            comp[start : start + size, m, :] = state
            prev_t = t
    return PathEnsemble(
        process=proc,
        times=ens.times,
        paths=ens.paths,
        seed=ens.seed,
        companions=comp,
    )


# --------------------------------------------------------------------------
# Determinantal weights
# --------------------------------------------------------------------------


def det_weight(
    process: ProcessKind, xi: cfg.PointConfiguration, T: float, end_positions
) -> np.ndarray:
    """det[M_xi^{u_k}(T, V_j(T))] for a batch of end positions (n, N)."""
    pts = np.asarray(end_positions, dtype=float)
    sup = xi.support()
    n = len(sup)
    if pts.shape[-1] != n:
        raise DomainError("end positions must have one column per particle")
    cmat = np.column_stack([cfg.phi_coeffs(xi, u) for u in sup])
    vals = mart.poly_values(process, n - 1, T, pts)  # (n_paths, N, degrees)
    return np.linalg.det(vals @ cmat)


def _phi_tilde_even(xi: cfg.PointConfiguration, u: float, z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    for r in xi.support():
        if r == u:
            continue
        out = out * (z * z - r * r) / (u * u - r * r)
    return out


def cpr_weight(
    process: ProcessKind, xi: cfg.PointConfiguration, T: float, z_end
) -> np.ndarray:
    """det[phi_xi^{u_k}(Z_j(T))] for complex end points (n, N)."""
    z = np.asarray(z_end, dtype=complex)
    sup = xi.support()
    n = len(sup)
    mat = np.empty(z.shape[:-1] + (n, n), dtype=complex)
    if process.tag in ("BM", "RW"):
        for k, u in enumerate(sup):
            mat[..., :, k] = cfg.phi_simple(xi, u, z)
    elif process.tag == "BES":
        order = process.nu - 0.5
        if order < 0 or order != int(order):
            raise DomainError("complex representation needs index n + 1/2")
        q = np.empty_like(z)
        flat = z.reshape(-1)
        q.reshape(-1)[:] = [mart.bes_q_factor(int(order), T, w) for w in flat]
        for k, u in enumerate(sup):
            mat[..., :, k] = q * _phi_tilde_even(xi, u, z)
    else:
        raise DomainError(f"no complex representation for {process}")
    return np.linalg.det(mat)


# --------------------------------------------------------------------------
# Representation estimators
# --------------------------------------------------------------------------


def _run_blocks(n_paths, workers, block_fn):
    chunks = list(_blocks(n_paths))
    results = [None] * len(chunks)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {
                pool.submit(block_fn, block, size): i
                for i, (block, _, size) in enumerate(chunks)
            }
            for fut, i in futs.items():
                results[i] = fut.result()
    else:
        for i, (block, _, size) in enumerate(chunks):
            results[i] = block_fn(block, size)
    return np.concatenate(results)


def dmr_expectation(
    process: ProcessKind,
    xi: cfg.PointConfiguration,
    observable,
    times,
    n_paths: int,
    seed: int,
    T: float | None = None,
    workers: int = 1,
) -> Estimate:
    """Monte Carlo of E[F(configuration path) * det-weight at horizon T].

    ``observable`` maps sorted positions (paths, len(times), N) to one
    value per path; the default horizon is the last observation time.
    """
    if not xi.simple():
        raise DomainError("representation estimators need a simple configuration")
    if xi.total() > 8:
        raise DomainError("representation estimators support at most 8 particles")
    ts = _check_times(process, times)
    horizon = float(ts[-1]) if T is None else float(T)
    if horizon < ts[-1]:
        raise DomainError("horizon must not precede the last observation time")
    grid = ts if horizon == ts[-1] else ts + (horizon,)
    u = np.array(xi.support())

    def one_block(block, size):
        rng = stream(seed, block)
        paths = _sample_free_block(process, u, grid, size, rng)
        weights = det_weight(process, xi, horizon, paths[:, -1, :])
        obs = np.asarray(
            observable(np.sort(paths[:, : len(ts), :], axis=2)), dtype=float
        )
        return obs * weights

    values = _run_blocks(n_paths, workers, one_block)
    return Estimate.from_samples(values)


def cpr_expectation(
    process: ProcessKind,
    xi: cfg.PointConfiguration,
    observable,
    times,
    n_paths: int,
    seed: int,
    T: float | None = None,
    workers: int = 1,
) -> Estimate:
    """Complex-representation estimate; the real part is the estimate and
    the imaginary part a diagnostic that must vanish within noise."""
    if process.tag not in ("BM", "RW", "BES"):
        raise DomainError(f"no complex representation for {process}")
    if not xi.simple():
        raise DomainError("representation estimators need a simple configuration")
    ts = _check_times(process, times)
    horizon = float(ts[-1]) if T is None else float(T)
    if horizon < ts[-1]:
        raise DomainError("horizon must not precede the last observation time")
    grid = ts if horizon == ts[-1] else ts + (horizon,)
    u = np.array(xi.support())

    def one_block(block, size):
        rng = stream(seed, block)
        paths = _sample_free_block(process, u, grid, size, rng)
        # imaginary companions, one stream offset away from the real draws
        rng2 = stream(seed ^ 0x9E3779B97F4A7C15, block)
        comp = np.zeros((size, len(u)))
        prev_t = 0.0
        for t in grid:
            dt = t - prev_t
            if dt > 0:
                if process.tag == "RW":
                    dc = mart.sample_ctime(dt, rng2, size=comp.shape)
                    comp = comp + np.sqrt(dc) * rng2.standard_normal(comp.shape)
                else:
                    comp = comp + math.sqrt(dt) * rng2.standard_normal(comp.shape)
            prev_t = t
        z_end = paths[:, -1, :] + 1j * comp
        weights = cpr_weight(process, xi, horizon, z_end)
        obs = np.asarray(
            observable(np.sort(paths[:, : len(ts), :], axis=2)), dtype=float
        )
        return obs * weights

    values = _run_blocks(n_paths, workers, one_block)
    return Estimate.from_samples(values)


# --------------------------------------------------------------------------
# Noncolliding samplers
# --------------------------------------------------------------------------


def sample_noncolliding_rw(
    xi: cfg.PointConfiguration, times, n_paths: int, seed: int
) -> PathEnsemble:
    """Exact sampler of the ordered walk via the Vandermonde h-transform.

    One-step law P(x -> x + e) = 2^{-N} h(x + e) / h(x) over the 2^N sign
    vectors; moves that leave the ordered sector carry h = 0.  The weights
    must sum to one at every visited state, which is asserted.
    """
    if not xi.simple():
        raise DomainError("starting configuration must be simple")
    u = np.array(xi.support())
    if any(v != int(v) or int(v) % 2 != 0 for v in u):
        raise DomainError("starting sites must be distinct even integers")
    ts = _check_times(rw(), times)
    n = len(u)
    horizon = int(ts[-1])
    moves = np.array(list(itertools.product((-1, 1), repeat=n)), dtype=float)
    record = {int(t): i for i, t in enumerate(ts)}
    out = np.empty((n_paths, len(ts), n))
    for block, start, size in _blocks(n_paths):
        rng = stream(seed, block)
        state = np.broadcast_to(u, (size, n)).copy()
        if 0 in record:
            out[start : start + size, record[0], :] = state
        for step in range(1, horizon + 1):
            cand = state[:, None, :] + moves[None, :, :]  # (size, 2^n, n)
            h_new = np.ones(cand.shape[:2])
            for a in range(n):
                for b in range(a + 1, n):
                    h_new *= cand[:, :, b] - cand[:, :, a]
            h_old = np.ones(size)
            for a in range(n):
                for b in range(a + 1, n):
                    h_old *= state[:, b] - state[:, a]
            weights = np.maximum(h_new, 0.0) / (2.0**n * h_old[:, None])
            total = weights.sum(axis=1)
            if np.max(np.abs(total - 1.0)) > 1e-9:
                raise NumericError(
                    "one-step weights failed to sum to one; "
                    "harmonicity of the Vandermonde factor is broken"
                )
            cum = np.cumsum(weights, axis=1)
            draws = rng.random(size)
            pick = (draws[:, None] >= cum).sum(axis=1)
            state = cand[np.arange(size), pick, :]
            if step in record:
                out[start : start + size, record[step], :] = state
    return PathEnsemble(process=rw(), times=ts, paths=out, seed=int(seed))


def sample_noncolliding(
    process: ProcessKind,
    xi: cfg.PointConfiguration,
    times,
    dt: float,
    n_paths: int,
    seed: int,
) -> PathEnsemble:
    """Euler integration of the interacting (noncolliding) diffusion.

    Steps that would break the ordering are retried with locally halved
    increments up to 8 times; persistent violations reject the step and
    count against a 0.1% budget, beyond which the run fails (the step size
    is too coarse for the repulsion strength).
    """
    if process.tag not in ("BM", "BESQ"):
        raise DomainError("interacting sampler supports BM and BESQ")
    if dt <= 0:
        raise DomainError("dt must be positive")
    if not xi.simple():
        raise DomainError("starting configuration must be simple")
    u = np.array(xi.support())
    if process.tag == "BESQ" and (u < 0).any():
        raise DomainError("BESQ starts must be nonnegative")
    ts = _check_times(process, times)
    horizon = ts[-1]
    n_steps = max(1, int(math.ceil(horizon / dt)))
    dt_eff = horizon / n_steps
    record = {}
    for i, t in enumerate(ts):
        record.setdefault(int(round(t / dt_eff)), []).append(i)
    n = len(u)
    out = np.empty((n_paths, len(ts), n))
    rejected = 0
    proposed = 0
    for block, start, size in _blocks(n_paths):
        rng = stream(seed, block)
        state = np.broadcast_to(u, (size, n)).copy()
        if 0 in record:
            for i in record[0]:
                out[start : start + size, i, :] = state
        for step in range(1, n_steps + 1):
            state, rej, prop = _em_step(process, state, dt_eff, rng, 0)
            rejected += rej
            proposed += prop
            if step in record:
                for i in record[step]:
                    out[start : start + size, i, :] = state
    if proposed and rejected > 1e-3 * proposed:
        raise NumericError(
            f"collision guard rejected {rejected} of {proposed} steps; "
            "decrease dt"
        )
    return PathEnsemble(process=process, times=ts, paths=out, seed=int(seed))


def _drift_diffusion(process, x):
    n = x.shape[1]
    inter = np.zeros_like(x)
    for j in range(n):
        for k in range(n):
            if k != j:
                inter[:, j] += 1.0 / (x[:, j] - x[:, k])
    if process.tag == "BM":
        return inter, np.ones_like(x)
    pos = np.maximum(x, 0.0)
    drift = 2.0 * (process.nu + 1.0) + 4.0 * pos * inter
    return drift, 2.0 * np.sqrt(pos)


def _em_step(process, state, dt, rng, depth, max_depth=8):
    drift, sigma = _drift_diffusion(process, state)
    noise = rng.standard_normal(state.shape)
    prop = state + drift * dt + sigma * math.sqrt(dt) * noise
    if process.tag == "BESQ":
        prop = np.maximum(prop, 0.0)
    ordered = (np.diff(prop, axis=1) > 0).all(axis=1)
    rejected = 0
    proposed = state.shape[0]
    if not ordered.all():
        bad = ~ordered
        if depth >= max_depth:
            prop[bad] = state[bad]
            rejected += int(bad.sum())
        else:
            half1, r1, p1 = _em_step(
                process, state[bad], dt / 2.0, rng, depth + 1, max_depth
            )
            half2, r2, p2 = _em_step(
                process, half1, dt / 2.0, rng, depth + 1, max_depth
            )
            prop[bad] = half2
            rejected += r1 + r2
    return prop, rejected, proposed


# --------------------------------------------------------------------------
# Exact enumeration for the walk
# --------------------------------------------------------------------------


def brute_force_rw(
    xi: cfg.PointConfiguration, observable, times, T: int | None = None
):
    """Exact expectations over every outcome of the free walk.

    Returns (free_value, doob_value): the free-path expectation of
    F * det-weight, and the conditioned-walk expectation of F computed by
    the harmonic-transform weighting 1(ordered through T) h(V(T)) / h(u).
    Bounded by 2^(N T) <= 2^24 outcomes.
    """
    if not xi.simple():
        raise DomainError("starting configuration must be simple")
    u = np.array(xi.support())
    n = len(u)
    ts = [int(t) for t in _check_times(rw(), times)]
    horizon = int(ts[-1]) if T is None else int(T)
    if horizon < ts[-1]:
        raise DomainError("horizon must not precede the last observation time")
    bits = n * horizon
    if bits > 24:
        raise CapacityError("enumeration bounded by 2^(N T) <= 2^24 outcomes")
    total = 1 << bits
    cmat = np.column_stack([cfg.phi_coeffs(xi, v) for v in u])
    h_u = cfg.vandermonde(u)
    free_acc = 0.0
    doob_acc = 0.0
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        # bit (j * horizon + s) is the step of particle j at time s+1
        steps = ((idx[:, None] >> np.arange(bits)) & 1) * 2 - 1
        steps = steps.reshape(len(idx), n, horizon)
        pos = u[None, :, None] + np.cumsum(steps, axis=2)  # (chunk, n, T)
        at_obs = np.stack([pos[:, :, t - 1] for t in ts], axis=1)  # (chunk, M, n)
        fvals = np.asarray(observable(np.sort(at_obs, axis=2)), dtype=float)
        end = pos[:, :, horizon - 1].astype(float)
        weights = det_weight(rw(), xi, horizon, end)
        free_acc += float(fvals @ weights)
        ordered = (np.diff(pos, axis=1) > 0).all(axis=(1, 2))
        h_end = np.ones(len(idx))
        for a in range(n):
            for b in range(a + 1, n):
                h_end *= end[:, b] - end[:, a]
        doob_acc += float(fvals @ (ordered * h_end / h_u))
    return free_acc / total, doob_acc / total


# --------------------------------------------------------------------------
# Reducibility of the determinantal weight
# --------------------------------------------------------------------------


def reducibility_check(
    process: ProcessKind,
    xi: cfg.PointConfiguration,
    n_prime: int,
    observable,
    t: float,
    n_paths: int,
    seed: int,
    T: float | None = None,
):
    """Both sides of the size-reduction identity, as Monte Carlo estimates.

    Left: sum over size-n' index subsets J of E[F(V_J(t)) * full det].
    Right: sum over ordered n'-subsets v of the support of
    E_v[F(V(t)) * n'-by-n' det of M_xi^{v_k}].
    """
    if not xi.simple():
        raise DomainError("reducibility check needs a simple configuration")
    sup = xi.support()
    n = len(sup)
    if not 1 <= n_prime <= n <= 4:
        raise DomainError("supported sizes: 1 <= n_prime <= N <= 4")
    ts = _check_times(process, (t,))
    horizon = float(ts[-1]) if T is None else float(T)
    grid = ts if horizon == ts[-1] else ts + (horizon,)
    u = np.array(sup)
    cmat_full = np.column_stack([cfg.phi_coeffs(xi, v) for v in sup])

    # left side: one ensemble from the full configuration
    lhs_vals = np.zeros(n_paths)
    for block, start, size in _blocks(n_paths):
        rng = stream(seed, block)
        paths = _sample_free_block(process, u, grid, size, rng)
        dets = det_weight(process, xi, horizon, paths[:, -1, :])
        acc = np.zeros(size)
        for subset in itertools.combinations(range(n), n_prime):
            sub = np.sort(paths[:, 0, list(subset)], axis=1)
            acc += np.asarray(observable(sub[:, None, :]), dtype=float)
        lhs_vals[start : start + size] = acc * dets
    lhs = Estimate.from_samples(lhs_vals)

    # right side: one ensemble per ordered support subset
    rhs_mean = 0.0
    rhs_var = 0.0
    count = 0
    for si, subset in enumerate(itertools.combinations(range(n), n_prime)):
        v = u[list(subset)]
        cmat = cmat_full[:, list(subset)]
        vals = np.zeros(n_paths)
        for block, start, size in _blocks(n_paths):
            rng = stream(seed + 7919 * (si + 1), block)
            paths = _sample_free_block(process, v, grid, size, rng)
            mvals = mart.poly_values(process, n - 1, horizon, paths[:, -1, :])
            dets = np.linalg.det(mvals @ cmat)
            obs = np.asarray(
                observable(np.sort(paths[:, :1, :], axis=2)), dtype=float
            )
            vals[start : start + size] = obs * dets
        est = Estimate.from_samples(vals)
        rhs_mean += est.mean
        rhs_var += est.std_error**2
        count += 1
    rhs = Estimate(mean=rhs_mean, std_error=math.sqrt(rhs_var), n=n_paths * count)
    return lhs, rhs
