"""Quantum stochastic walks with an absorbing sink.

The density matrix lives on the maze sites plus one extra sink state
(always the last index). The generator mixes coherent hopping and
classical hopping with weight ``p``::

    drho/dt = -(1-p) i [H, rho]
              + p sum_ij (L_ij rho L_ij^+ - 1/2 {L_ij^+ L_ij, rho})
              + sink term,        L_ij = T_ij |i><j|

and the sink transfers population from the OUT site at rate ``2*gamma``.
Because every L_ij is rank one the dissipator never needs the jump
operators themselves: it feeds populations through the rate matrix
``R = T**2`` and damps row/column ``j`` by ``sum_i R_ij / 2``.

Two integrators are provided: ``evolve`` (fixed-step RK4 on the dense
density matrix, with per-sample diagnostics) and ``evolve_expm`` (Krylov
style action of the sparse Liouvillian exponential), which is what long
sweeps use.
"""
from __future__ import annotations

import csv
import io
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_simpson
from scipy.sparse.linalg import expm_multiply


class StepTooLarge(ValueError):
    pass


class PositivityViolation(RuntimeError):
    pass


class ConsistencyFailure(RuntimeError):
    pass


_EXPM_LOCK = threading.Lock()


def _expm_action(L, v, **kw):
    """``expm_multiply`` with its norm estimates made reproducible.

    scipy estimates ||L^p||_1 with the legacy global numpy RNG, so the chosen
    Taylor degree, and with it the last bits of the result, would vary from
    run to run. The global state is pinned for the call and then restored.
    """
    with _EXPM_LOCK:
        state = np.random.get_state()
        np.random.seed(0)
        try:
            return expm_multiply(L, v, **kw)
        finally:
            np.random.set_state(state)


POSITIVITY_TOL = 1e-6
EFFICIENCY_TOL = 1e-5
MAX_STEP_RATE = 0.1


@dataclass(frozen=True)
class QswParams:
    p: float
    gamma: float = 1.0
    sink_node: int = -1  # maze index of the OUT site; -1 means the last maze site

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class EvolutionSpec:
    """Everything the right-hand side needs, in sparse form.

    ``dim`` counts maze sites plus the sink state; ``sink`` is the sink
    state's index (``dim - 1``) and ``out`` the maze site it drains.
    """

    H: sp.csr_matrix
    rates: sp.csr_matrix
    decay: np.ndarray
    p: float
    gamma: float
    out: int

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def sink(self) -> int:
        return self.dim - 1

    @property
    def max_rate(self) -> float:
        spectral = float(abs(self.H).sum(axis=1).max()) if self.H.nnz else 0.0
        return max(2.0 * self.gamma, float(self.decay.max(initial=0.0)), spectral)


def build_generator(couplings: np.ndarray, params: QswParams) -> EvolutionSpec:
    K = np.asarray(couplings, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("coupling matrix must be square")
    if not np.allclose(K, K.T, rtol=0, atol=1e-12):
        raise ValueError("coupling matrix must be symmetric")
    if np.any(np.diag(K) != 0):
        raise ValueError("coupling matrix must have a zero diagonal")
    out = params.sink_node % n
    padded = np.zeros((n + 1, n + 1))
    padded[:n, :n] = K
    H = sp.csr_matrix(padded)
    R = sp.csr_matrix(padded**2)
    decay = np.asarray(R.sum(axis=0)).ravel()
    return EvolutionSpec(H=H, rates=R, decay=decay, p=params.p, gamma=params.gamma, out=out)


def initial_state(spec: EvolutionSpec, node: int = 0) -> np.ndarray:
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    rho[node, node] = 1.0
    return rho


def rhs(rho: np.ndarray, spec: EvolutionSpec) -> np.ndarray:
    """drho/dt for a Hermitian ``rho``; O(nnz * dim) per call."""
    p, g, N, s = spec.p, spec.gamma, spec.out, spec.sink
    Hrho = spec.H @ rho
    # rho H = (H rho^T)^T for real symmetric H
    drho = -1j * (1.0 - p) * (Hrho - (spec.H @ rho.T).T)
    if p:
        lam = spec.decay
        drho -= 0.5 * p * (lam[:, None] * rho + rho * lam[None, :])
        feed = spec.rates @ np.diagonal(rho)
        drho[np.diag_indices_from(drho)] += p * feed
    if g:
        drho[N, :] -= g * rho[N, :]
        drho[:, N] -= g * rho[:, N]
        drho[s, s] += 2.0 * g * rho[N, N]
    return drho


def liouvillian(spec: EvolutionSpec) -> sp.csr_matrix:
    """The generator as a sparse superoperator on row-major vec(rho)."""
    m = spec.dim
    I = sp.identity(m, format="csr")
    H = spec.H
    L = -1j * (1.0 - spec.p) * (sp.kron(H, I) - sp.kron(I, H.T))
    if spec.p:
        lam = sp.diags(spec.decay)
        L = L - 0.5 * spec.p * (sp.kron(lam, I) + sp.kron(I, lam))
        R = spec.rates.tocoo()
        L = L + spec.p * sp.csr_matrix(
            (R.data, (R.row * m + R.row, R.col * m + R.col)), shape=(m * m, m * m)
        )
    if spec.gamma:
        N, s, g = spec.out, spec.sink, spec.gamma
        P = sp.csr_matrix(([1.0], ([N], [N])), shape=(m, m))
        L = L - g * (sp.kron(P, I) + sp.kron(I, P))
        L = L + sp.csr_matrix(([2.0 * g], ([s * m + s], [N * m + N])), shape=(m * m, m * m))
    return sp.csr_matrix(L)


@dataclass
class Trajectory:
    times: np.ndarray  # sample times
    rhos: np.ndarray  # (samples, dim, dim)
    trace: np.ndarray  # trace over maze sites only
    min_eig: np.ndarray
    purity: np.ndarray
    fine_times: np.ndarray  # every integrator step
    out_population: np.ndarray
    sink_population: np.ndarray
    spec: EvolutionSpec


def _diagnostics(rho: np.ndarray, sink: int) -> tuple[float, float, float]:
    maze = rho[:sink, :sink]
    trace = float(np.real(np.trace(maze)))
    min_eig = float(np.linalg.eigvalsh(rho).min())
    purity = float(np.real(np.vdot(rho, rho)))
    return trace, min_eig, purity


def evolve(
    rho0: np.ndarray,
    spec: EvolutionSpec,
    t_end: float,
    h: float,
    n_samples: int = 100,
    check_positivity: bool = True,
) -> Trajectory:
    """Classical fixed-step RK4 from 0 to ``t_end``.

    The step is shrunk (never grown) so that the ``n_samples`` equally spaced
    sample times land on step boundaries. After every step rho is
    re-Hermitized. Raises StepTooLarge if ``h * max_rate > 0.1`` and
    PositivityViolation if a sampled state has an eigenvalue below -1e-6.
    """
    if h <= 0 or t_end < 0:
        raise ValueError("need h > 0 and t_end >= 0")
    if h * spec.max_rate > MAX_STEP_RATE:
        raise StepTooLarge(
            f"h={h:g} with max rate {spec.max_rate:g}: need h <= {MAX_STEP_RATE / spec.max_rate:g}"
        )
    n_samples = max(int(n_samples), 1)
    per_sample = max(math.ceil(t_end / (n_samples * h) - 1e-9), 1)
    n_steps = per_sample * n_samples
    dt = t_end / n_steps if t_end > 0 else 0.0

    rho = np.array(rho0, dtype=complex)
    N, s = spec.out, spec.sink
    out_pop = np.empty(n_steps + 1)
    sink_pop = np.empty(n_steps + 1)
    samples = [rho.copy()]
    diag = [_diagnostics(rho, s)]
    if check_positivity and diag[0][1] < -POSITIVITY_TOL:
        raise PositivityViolation(f"initial state has min eigenvalue {diag[0][1]:.3e}")
    out_pop[0], sink_pop[0] = rho[N, N].real, rho[s, s].real
    for step in range(1, n_steps + 1):
        k1 = rhs(rho, spec)
        k2 = rhs(rho + 0.5 * dt * k1, spec)
        k3 = rhs(rho + 0.5 * dt * k2, spec)
        k4 = rhs(rho + dt * k3, spec)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        out_pop[step], sink_pop[step] = rho[N, N].real, rho[s, s].real
        if step % per_sample == 0:
            d = _diagnostics(rho, s)
            if check_positivity and d[1] < -POSITIVITY_TOL:
                raise PositivityViolation(f"min eigenvalue {d[1]:.3e} at t={step * dt:g}")
            samples.append(rho.copy())
            diag.append(d)
    diag_arr = np.array(diag)
    return Trajectory(
        times=np.linspace(0.0, t_end, n_samples + 1),
        rhos=np.array(samples),
        trace=diag_arr[:, 0],
        min_eig=diag_arr[:, 1],
        purity=diag_arr[:, 2],
        fine_times=np.linspace(0.0, t_end, n_steps + 1),
        out_population=out_pop,
        sink_population=sink_pop,
        spec=spec,
    )


def evolve_expm(rho0: np.ndarray, spec: EvolutionSpec, times: Sequence[float]) -> np.ndarray:
    """rho(t) at ascending ``times`` via expm_multiply on the sparse Liouvillian."""
    times = np.asarray(times, dtype=float)
    m = spec.dim
    L = liouvillian(spec)
    v = np.asarray(rho0, dtype=complex).reshape(-1)
    steps = np.diff(times)
    if np.any(steps < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be ascending and non-negative")
    if len(times) > 2 and np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        out = _expm_action(L, v, start=times[0], stop=times[-1], num=len(times), endpoint=True)
    else:
        out = np.empty((len(times), m * m), dtype=complex)
        t_prev = 0.0
        for k, t in enumerate(times):
            v = _expm_action(L * (t - t_prev), v) if t > t_prev else v
            out[k] = v
            t_prev = t
    rhos = out.reshape(len(times), m, m)
    return 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))


@dataclass
class EfficiencyTrace:
    times: np.ndarray
    values: np.ndarray  # sink population
    quadrature: np.ndarray | None = None  # 2*gamma * integral of rho_NN


def transfer_efficiency(traj: Trajectory, tol: float = EFFICIENCY_TOL) -> EfficiencyTrace:
    """Sink population at the sample times, cross-checked by quadrature.

    The cumulative Simpson integral of ``2 * gamma * rho_NN`` on the
    integrator grid (fourth order, like the integrator) must agree with the sink population to ``tol`` at every sample, else
    ConsistencyFailure.
    """
    g = traj.spec.gamma
    f = 2.0 * g * traj.out_population
    if len(f) > 2:
        cumulative = cumulative_simpson(f, x=traj.fine_times, initial=0.0)
    else:
        cumulative = np.concatenate([[0.0], 0.5 * np.diff(traj.fine_times) * (f[1:] + f[:-1])])
    per_sample = (len(traj.fine_times) - 1) // (len(traj.times) - 1) if len(traj.times) > 1 else 1
    quad = cumulative[::per_sample]
    sink = traj.sink_population[::per_sample]
    gap = np.abs(quad - sink)
    if gap.max(initial=0.0) > tol:
        i = int(gap.argmax())
        raise ConsistencyFailure(
            f"sink population {sink[i]:.8f} vs integral {quad[i]:.8f} at t={traj.times[i]:g}"
        )
    return EfficiencyTrace(times=traj.times.copy(), values=sink, quadrature=quad)


def final_efficiency(
    couplings: np.ndarray, params: QswParams, t_end: float, in_node: int = 0
) -> float:
    spec = build_generator(couplings, params)
    if params.gamma == 0:
        return 0.0
    rho = evolve_expm(initial_state(spec, in_node), spec, [t_end])[0]
    return float(rho[spec.sink, spec.sink].real)


def efficiency_curve(
    couplings: np.ndarray, params: QswParams, times: Sequence[float], in_node: int = 0
) -> np.ndarray:
    """E(t) on an equally spaced grid (exact propagator)."""
    spec = build_generator(couplings, params)
    rhos = evolve_expm(initial_state(spec, in_node), spec, times)
    return rhos[:, spec.sink, spec.sink].real.copy()


def sweep_p(
    couplings: np.ndarray,
    gammas: Iterable[float],
    p_grid: Iterable[float],
    t_end: float,
    in_node: int = 0,
    out_node: int = -1,
    threads: int = 1,
) -> list[dict]:
    """E(p, gamma, t_end) for every grid point, one evolution each.

    Rows come back sorted by (gamma, p) no matter how the work was scheduled.
    """
    keys = [(float(g), float(p)) for g in gammas for p in p_grid]
    for _, p in keys:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p grid must lie in [0, 1], got {p}")

    def work(key):
        g, p = key
        return key, final_efficiency(couplings, QswParams(p, g, out_node), t_end, in_node)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = dict(pool.map(work, keys))
    else:
        results = dict(map(work, keys))
    return [
        {"p": p, "gamma": g, "t_end": float(t_end), "E": results[(g, p)]}
        for g, p in sorted(results)
    ]


def trace_to_csv(traj: Trajectory, eff: EfficiencyTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "E", "trace", "min_eig", "purity"])
    for row in zip(traj.times, eff.values, traj.trace, traj.min_eig, traj.purity):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "gamma", "t_end", "E"])
    for r in rows:
        w.writerow([repr(r["p"]), repr(r["gamma"]), repr(r["t_end"]), repr(r["E"])])
    return buf.getvalue()
