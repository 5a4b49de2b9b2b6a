"""Time integration of the Galerkin mode system.

The N-mode truncation is a stiff SDE system for the sine coefficients,

    da = [-nu*lam*a - alpha*Bhat(a) + beta*chat(a)] dt + sigma(a) dW,

integrated here by a semi-implicit Euler-Maruyama scheme (linear part
implicit, so the k^2 pi^2 stiffness never restricts dt) or a tamed explicit
scheme that divides the whole drift by 1 + dt*|drift| to survive rare large
excursions.  Nonlinear terms always use the previous state so the implicit
solve stays diagonal.

Ensembles draw each trajectory's noise from its own counter-based stream
keyed by (base_seed, path_index); results are therefore independent of how
paths are divided among workers.
"""

from __future__ import annotations

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .noise import CovarianceSpec, NoiseCoefficient, stream
from .operators import dealias_grid_size, nonlinear_drift_coeffs
from .params import ModelParams
from .spectral import SpectralField, batch_l4_p4, eigenvalues

SCHEMES = ("semi-implicit", "tamed")

# time steps of noise generated per call to each path's stream; bounds
# memory without changing the per-path stream contents
_TIME_BLOCK = 512


class BlowupError(RuntimeError):
    """A trajectory crossed the L2 blow-up threshold."""

    def __init__(self, time: float, norm: float, trajectory=None):
        super().__init__(f"L2 blow-up at t={time:.6g} (||u|| = {norm:.3g})")
        self.time = time
        self.norm = norm
        self.trajectory = trajectory


@dataclass(frozen=True)
class SolverConfig:
    n_modes: int
    dt: float
    t_end: float
    scheme: str = "semi-implicit"
    blowup_threshold: float = 1e6
    grid_size: int | None = None

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray            # (n+1,)
    coeffs: np.ndarray           # (n+1, N)
    noise_stream_id: tuple | None = None
    aborted: bool = False

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[-1]

    def state(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i])

    def diagnostics(self) -> dict:
        lam = eigenvalues(self.n_modes)
        return {
            "l2": np.sqrt(np.sum(self.coeffs ** 2, axis=-1)),
            "h1": np.sqrt(np.sum(lam * self.coeffs ** 2, axis=-1)),
            "l4": batch_l4_p4(self.coeffs) ** 0.25,
        }


def _explicit_drift(a, p: ModelParams, grid_size):
    """-alpha*B(u) + beta*c(u) in coefficients; the stiff A part is handled
    implicitly and is not included here."""
    if p.alpha == 0.0 and p.beta == 0.0:
        return None
    return nonlinear_drift_coeffs(a, p.alpha, p.beta, p.gamma, grid_size)


def step(
    state: SpectralField,
    p: ModelParams,
    coef: NoiseCoefficient,
    cov: CovarianceSpec,
    dt: float,
    rng: np.random.Generator,
    scheme: str = "semi-implicit",
    blowup_threshold: float = 1e6,
) -> SpectralField:
    """Advance one state by one step, drawing the increment from rng."""
    a = state.coeffs
    dw = cov.sample_increment(dt, rng)
    new = _advance(a[np.newaxis, :], p, coef, dw[np.newaxis, :], dt, scheme,
                   _grid_for(state.n_modes, None))[0]
    norm_sq = float(new @ new)
    if norm_sq > blowup_threshold ** 2:
        raise BlowupError(dt, np.sqrt(norm_sq))
    return SpectralField(new)


def _grid_for(n_modes: int, grid_size: int | None) -> int:
    return grid_size if grid_size is not None else dealias_grid_size(n_modes)


def _advance(a, p, coef, dw, dt, scheme, grid_size):
    """One step of the chosen scheme on a batch of states a (P, N)."""
    lam = eigenvalues(a.shape[-1])
    noise = coef.apply(a, dw)
    if scheme == "semi-implicit":
        expl = _explicit_drift(a, p, grid_size)
        rhs = a + noise if expl is None else a + dt * expl + noise
        return rhs / (1.0 + dt * p.nu * lam)
    # tamed explicit: full drift, divided by 1 + dt*||f||_L2 per path
    f = -p.nu * lam * a
    expl = _explicit_drift(a, p, grid_size)
    if expl is not None:
        f = f + expl
    fnorm = np.sqrt(np.sum(f ** 2, axis=-1, keepdims=True))
    return a + dt * f / (1.0 + dt * fnorm) + noise


def integrate(
    u0: SpectralField,
    cfg: SolverConfig,
    p: ModelParams,
    coef: NoiseCoefficient,
    cov: CovarianceSpec,
    rng_stream: tuple[int, int] | np.random.Generator,
) -> Trajectory:
    """Full trajectory from u0; deterministic given the stream key."""
    stream_id = None
    if isinstance(rng_stream, tuple):
        stream_id = tuple(rng_stream)
        rng = stream(*rng_stream)
    else:
        rng = rng_stream
    n = cfg.n_steps
    a = np.array(u0.coeffs[: cfg.n_modes], dtype=float)
    if a.size < cfg.n_modes:
        a = np.pad(a, (0, cfg.n_modes - a.size))
    out = np.empty((n + 1, cfg.n_modes))
    out[0] = a
    grid = _grid_for(cfg.n_modes, cfg.grid_size)
    state = a[np.newaxis, :]
    thresh_sq = cfg.blowup_threshold ** 2
    for i in range(n):
        dw = cov.sample_increment(cfg.dt, rng)[np.newaxis, : cfg.n_modes]
        state = _advance(state, p, coef, dw, cfg.dt, cfg.scheme, grid)
        out[i + 1] = state[0]
        if float(state[0] @ state[0]) > thresh_sq:
            partial = Trajectory(
                times=cfg.dt * np.arange(i + 2),
                coeffs=out[: i + 2].copy(),
                noise_stream_id=stream_id,
                aborted=True,
            )
            raise BlowupError((i + 1) * cfg.dt, np.sqrt(float(state[0] @ state[0])), partial)
    return Trajectory(times=cfg.dt * np.arange(n + 1), coeffs=out, noise_stream_id=stream_id)


def coupled_integrate(
    u0: SpectralField,
    v0: SpectralField,
    cfg: SolverConfig,
    p: ModelParams,
    coef: NoiseCoefficient,
    cov: CovarianceSpec,
    rng_stream: tuple[int, int] | np.random.Generator,
) -> tuple[Trajectory, Trajectory]:
    """Two trajectories driven by the identical increment sequence."""
    stream_id = tuple(rng_stream) if isinstance(rng_stream, tuple) else None
    rng = stream(*rng_stream) if isinstance(rng_stream, tuple) else rng_stream
    n = cfg.n_steps
    a = np.vstack([u0.coeffs[: cfg.n_modes], v0.coeffs[: cfg.n_modes]])
    out = np.empty((2, n + 1, cfg.n_modes))
    out[:, 0] = a
    grid = _grid_for(cfg.n_modes, cfg.grid_size)
    thresh_sq = cfg.blowup_threshold ** 2
    for i in range(n):
        dw = cov.sample_increment(cfg.dt, rng)[np.newaxis, : cfg.n_modes]
        a = _advance(a, p, coef, np.broadcast_to(dw, a.shape), cfg.dt, cfg.scheme, grid)
        out[:, i + 1] = a
        norms = np.sum(a ** 2, axis=-1)
        if np.any(norms > thresh_sq):
            raise BlowupError((i + 1) * cfg.dt, float(np.sqrt(norms.max())))
    times = cfg.dt * np.arange(n + 1)
    return (
        Trajectory(times=times, coeffs=out[0], noise_stream_id=stream_id),
        Trajectory(times=times, coeffs=out[1], noise_stream_id=stream_id),
    )


def skeleton_solve(
    u0: SpectralField | None,
    forcing,
    cfg: SolverConfig,
    p: ModelParams,
    mode: str = "heat",
) -> Trajectory:
    """Deterministic controlled equations, semi-implicit in the Laplacian.

    mode="heat": dz/dt + nu*A z = h(t), z(0) = 0, with h the forcing
    (array (n_steps, N) of per-step values, or a callable of t).
    mode="psi": dv/dt + nu*A v = -alpha*B(v+psi) + beta*c(v+psi), v(0)=u0,
    where the forcing argument supplies psi on the step grid (n_steps+1, N).
    """
    if mode not in ("heat", "psi"):
        raise ValueError("mode must be 'heat' or 'psi'")
    n = cfg.n_steps
    lam = eigenvalues(cfg.n_modes)
    denom = 1.0 + cfg.dt * p.nu * lam
    grid = _grid_for(cfg.n_modes, cfg.grid_size)
    out = np.zeros((n + 1, cfg.n_modes))
    if mode == "psi":
        if u0 is not None:
            out[0, : u0.n_modes] = u0.coeffs[: cfg.n_modes]
        psi = np.asarray(forcing, dtype=float)
        if psi.shape != (n + 1, cfg.n_modes):
            raise ValueError("psi path must have shape (n_steps+1, n_modes)")
    a = out[0].copy()
    thresh_sq = cfg.blowup_threshold ** 2
    for i in range(n):
        if mode == "heat":
            h = forcing(i * cfg.dt) if callable(forcing) else np.asarray(forcing)[i]
            a = (a + cfg.dt * h) / denom
        else:
            w = (a + psi[i])[np.newaxis, :]
            expl = _explicit_drift(w, p, grid)
            rhs = a if expl is None else a + cfg.dt * expl[0]
            a = rhs / denom
        out[i + 1] = a
        if float(a @ a) > thresh_sq:
            raise BlowupError((i + 1) * cfg.dt, np.sqrt(float(a @ a)))
    return Trajectory(times=cfg.dt * np.arange(n + 1), coeffs=out)


@dataclass
class EnsembleResult:
    """Per-path diagnostics recorded while integrating an ensemble.

    Series arrays have shape (n_paths, n_records); the running integrals
    int_h1 / int_l4 are trapezoid quadratures of |u|_H1^2 and |u|_L4^4
    accumulated at full step resolution.
    """

    times: np.ndarray
    l2_sq: np.ndarray
    h1_sq: np.ndarray
    int_h1: np.ndarray
    int_l4: np.ndarray | None
    sup_l2_sq: np.ndarray        # (n_paths,) running sup over all steps
    final_coeffs: np.ndarray     # (n_paths, N)
    snapshots: np.ndarray | None  # (n_paths, n_snapshots, N)
    snapshot_times: np.ndarray | None


@dataclass
class CoupledResult:
    """Synchronous-coupling diagnostics for ensembles of solution pairs."""

    times: np.ndarray
    diff_l2_sq: np.ndarray       # (n_paths, n_records)
    l2_sq_a: np.ndarray
    l2_sq_b: np.ndarray
    int_h1_a: np.ndarray
    int_h1_b: np.ndarray


def _record_indices(n_steps: int, record_every: int) -> np.ndarray:
    idx = np.arange(0, n_steps + 1, record_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _run_chunk(args) -> EnsembleResult:
    (u0_coeffs, cfg, p, coef, cov, base_seed, start, count,
     record_every, snapshot_steps, track_l4) = args
    n = cfg.n_steps
    lam = eigenvalues(cfg.n_modes)
    grid = _grid_for(cfg.n_modes, cfg.grid_size)
    rec = _record_indices(n, record_every)
    rec_pos = {s: j for j, s in enumerate(rec)}
    snap_pos = {s: j for j, s in enumerate(snapshot_steps)}

    a = np.tile(np.asarray(u0_coeffs, dtype=float), (count, 1))
    l2_sq = np.empty((count, rec.size))
    h1_sq = np.empty((count, rec.size))
    int_h1 = np.empty((count, rec.size))
    int_l4 = np.empty((count, rec.size)) if track_l4 else None
    snaps = np.empty((count, len(snapshot_steps), cfg.n_modes)) if snapshot_steps else None

    gens = [stream(base_seed, start + j) for j in range(count)]
    cur_l2 = np.sum(a ** 2, axis=-1)
    cur_h1 = np.sum(lam * a ** 2, axis=-1)
    cur_l4 = batch_l4_p4(a) if track_l4 else None
    acc_h1 = np.zeros(count)
    acc_l4 = np.zeros(count) if track_l4 else None
    sup_l2 = cur_l2.copy()
    l2_sq[:, 0], h1_sq[:, 0], int_h1[:, 0] = cur_l2, cur_h1, 0.0
    if track_l4:
        int_l4[:, 0] = 0.0
    if snaps is not None and 0 in snap_pos:
        snaps[:, snap_pos[0]] = a
    thresh_sq = cfg.blowup_threshold ** 2
    mus = cov.mus[: cfg.n_modes]
    sqrt_mudt = np.sqrt(mus * cfg.dt)

    i = 0
    while i < n:
        block = min(_TIME_BLOCK, n - i)
        xi = np.empty((count, block, cfg.n_modes))
        for j, g in enumerate(gens):
            xi[j] = g.standard_normal((block, cfg.n_modes))
        for b in range(block):
            dw = sqrt_mudt * xi[:, b, :]
            a = _advance(a, p, coef, dw, cfg.dt, cfg.scheme, grid)
            i += 1
            new_l2 = np.sum(a ** 2, axis=-1)
            new_h1 = np.sum(lam * a ** 2, axis=-1)
            acc_h1 += 0.5 * cfg.dt * (cur_h1 + new_h1)
            cur_h1 = new_h1
            if track_l4:
                new_l4 = batch_l4_p4(a)
                acc_l4 += 0.5 * cfg.dt * (cur_l4 + new_l4)
                cur_l4 = new_l4
            cur_l2 = new_l2
            np.maximum(sup_l2, cur_l2, out=sup_l2)
            if np.any(cur_l2 > thresh_sq):
                k = int(np.argmax(cur_l2))
                raise BlowupError(i * cfg.dt, float(np.sqrt(cur_l2[k])))
            if i in rec_pos:
                j = rec_pos[i]
                l2_sq[:, j], h1_sq[:, j], int_h1[:, j] = cur_l2, cur_h1, acc_h1
                if track_l4:
                    int_l4[:, j] = acc_l4
            if snaps is not None and i in snap_pos:
                snaps[:, snap_pos[i]] = a

    return EnsembleResult(
        times=rec * cfg.dt,
        l2_sq=l2_sq,
        h1_sq=h1_sq,
        int_h1=int_h1,
        int_l4=int_l4,
        sup_l2_sq=sup_l2,
        final_coeffs=a,
        snapshots=snaps,
        snapshot_times=np.array(snapshot_steps, dtype=float) * cfg.dt if snapshot_steps else None,
    )


def run_ensemble(
    u0: SpectralField,
    cfg: SolverConfig,
    p: ModelParams,
    coef: NoiseCoefficient,
    cov: CovarianceSpec,
    n_paths: int,
    base_seed: int,
    record_every: int = 1,
    snapshot_times: list[float] | None = None,
    track_l4: bool | None = None,
    workers: int = 1,
    chunk_size: int = 64,
) -> EnsembleResult:
    """Integrate n_paths independent trajectories and stack diagnostics.

    Path j always uses stream (base_seed, j), so the result is identical for
    any worker count or chunk size.
    """
    u0c = np.zeros(cfg.n_modes)
    u0c[: min(u0.n_modes, cfg.n_modes)] = u0.coeffs[: cfg.n_modes]
    if track_l4 is None:
        track_l4 = p.beta != 0.0
    snapshot_steps = tuple(
        int(round(t / cfg.dt)) for t in (snapshot_times or [])
    )
    jobs = []
    start = 0
    while start < n_paths:
        count = min(chunk_size, n_paths - start)
        jobs.append((u0c, cfg, p, coef, cov, base_seed, start, count,
                     record_every, snapshot_steps, track_l4))
        start += count
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    return EnsembleResult(
        times=parts[0].times,
        l2_sq=np.concatenate([r.l2_sq for r in parts]),
        h1_sq=np.concatenate([r.h1_sq for r in parts]),
        int_h1=np.concatenate([r.int_h1 for r in parts]),
        int_l4=np.concatenate([r.int_l4 for r in parts]) if track_l4 else None,
        sup_l2_sq=np.concatenate([r.sup_l2_sq for r in parts]),
        final_coeffs=np.concatenate([r.final_coeffs for r in parts]),
        snapshots=(np.concatenate([r.snapshots for r in parts])
                   if snapshot_steps else None),
        snapshot_times=parts[0].snapshot_times,
    )


def _run_coupled_chunk(args) -> CoupledResult:
    (u0c, v0c, cfg, p_a, p_b, coef, cov, base_seed, start, count,
     record_every) = args
    n = cfg.n_steps
    lam = eigenvalues(cfg.n_modes)
    grid = _grid_for(cfg.n_modes, cfg.grid_size)
    rec = _record_indices(n, record_every)
    rec_pos = {s: j for j, s in enumerate(rec)}

    a = np.tile(np.asarray(u0c, dtype=float), (count, 1))
    b = np.tile(np.asarray(v0c, dtype=float), (count, 1))
    diff = np.empty((count, rec.size))
    l2a = np.empty((count, rec.size))
    l2b = np.empty((count, rec.size))
    int_a = np.empty((count, rec.size))
    int_b = np.empty((count, rec.size))

    gens = [stream(base_seed, start + j) for j in range(count)]
    cur_h1_a = np.sum(lam * a ** 2, axis=-1)
    cur_h1_b = np.sum(lam * b ** 2, axis=-1)
    acc_a = np.zeros(count)
    acc_b = np.zeros(count)
    diff[:, 0] = np.sum((a - b) ** 2, axis=-1)
    l2a[:, 0] = np.sum(a ** 2, axis=-1)
    l2b[:, 0] = np.sum(b ** 2, axis=-1)
    int_a[:, 0] = int_b[:, 0] = 0.0
    thresh_sq = cfg.blowup_threshold ** 2
    sqrt_mudt = np.sqrt(cov.mus[: cfg.n_modes] * cfg.dt)

    i = 0
    while i < n:
        block = min(_TIME_BLOCK, n - i)
        xi = np.empty((count, block, cfg.n_modes))
        for j, g in enumerate(gens):
            xi[j] = g.standard_normal((block, cfg.n_modes))
        for s in range(block):
            dw = sqrt_mudt * xi[:, s, :]
            a = _advance(a, p_a, coef, dw, cfg.dt, cfg.scheme, grid)
            b = _advance(b, p_b, coef, dw, cfg.dt, cfg.scheme, grid)
            i += 1
            new_h1_a = np.sum(lam * a ** 2, axis=-1)
            new_h1_b = np.sum(lam * b ** 2, axis=-1)
            acc_a += 0.5 * cfg.dt * (cur_h1_a + new_h1_a)
            acc_b += 0.5 * cfg.dt * (cur_h1_b + new_h1_b)
            cur_h1_a, cur_h1_b = new_h1_a, new_h1_b
            na = np.sum(a ** 2, axis=-1)
            nb = np.sum(b ** 2, axis=-1)
            if np.any(na > thresh_sq) or np.any(nb > thresh_sq):
                raise BlowupError(i * cfg.dt, float(np.sqrt(max(na.max(), nb.max()))))
            if i in rec_pos:
                j = rec_pos[i]
                diff[:, j] = np.sum((a - b) ** 2, axis=-1)
                l2a[:, j], l2b[:, j] = na, nb
                int_a[:, j], int_b[:, j] = acc_a, acc_b
    return CoupledResult(times=rec * cfg.dt, diff_l2_sq=diff, l2_sq_a=l2a,
                         l2_sq_b=l2b, int_h1_a=int_a, int_h1_b=int_b)


def run_coupled_ensemble(
    u0: SpectralField,
    v0: SpectralField,
    cfg: SolverConfig,
    p_a: ModelParams,
    coef: NoiseCoefficient,
    cov: CovarianceSpec,
    n_paths: int,
    base_seed: int,
    p_b: ModelParams | None = None,
    record_every: int = 1,
    workers: int = 1,
    chunk_size: int = 64,
) -> CoupledResult:
    """Pairs (u, v) driven by identical increments; p_b defaults to p_a."""
    if p_b is None:
        p_b = p_a
    u0c = np.zeros(cfg.n_modes)
    u0c[: min(u0.n_modes, cfg.n_modes)] = u0.coeffs[: cfg.n_modes]
    v0c = np.zeros(cfg.n_modes)
    v0c[: min(v0.n_modes, cfg.n_modes)] = v0.coeffs[: cfg.n_modes]
    jobs = []
    start = 0
    while start < n_paths:
        count = min(chunk_size, n_paths - start)
        jobs.append((u0c, v0c, cfg, p_a, p_b, coef, cov, base_seed,
                     start, count, record_every))
        start += count
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_coupled_chunk, jobs))
    else:
        parts = [_run_coupled_chunk(j) for j in jobs]
    return CoupledResult(
        times=parts[0].times,
        diff_l2_sq=np.concatenate([r.diff_l2_sq for r in parts]),
        l2_sq_a=np.concatenate([r.l2_sq_a for r in parts]),
        l2_sq_b=np.concatenate([r.l2_sq_b for r in parts]),
        int_h1_a=np.concatenate([r.int_h1_a for r in parts]),
        int_h1_b=np.concatenate([r.int_h1_b for r in parts]),
    )


def trajectory_to_csv(traj: Trajectory, path, include_coeffs: bool = False) -> None:
    d = traj.diagnostics()
    cols = [traj.times, d["l2"], d["h1"], d["l4"]]
    header = "t,l2,h1,l4"
    if include_coeffs:
        cols.extend(traj.coeffs[:, k] for k in range(traj.n_modes))
        header += "," + ",".join(f"a{k+1}" for k in range(traj.n_modes))
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="")


def save_coeffs_binary(traj: Trajectory, path) -> None:
    """Header: N, step count, dt as 64-bit values; then row-major float64."""
    n_steps = traj.times.size - 1
    dt = float(traj.times[1] - traj.times[0]) if n_steps else 0.0
    with open(path, "wb") as f:
        f.write(struct.pack("<qqd", traj.n_modes, n_steps, dt))
        f.write(np.ascontiguousarray(traj.coeffs, dtype="<f8").tobytes())


def load_coeffs_binary(path) -> Trajectory:
    with open(path, "rb") as f:
        n_modes, n_steps, dt = struct.unpack("<qqd", f.read(24))
        data = np.frombuffer(f.read(), dtype="<f8").reshape(n_steps + 1, n_modes)
    return Trajectory(times=dt * np.arange(n_steps + 1), coeffs=data.copy())