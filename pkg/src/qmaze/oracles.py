"""Reference dynamics used to cross-check the two engines.

- classical rate walk: dP_i/dt = sum_j T_ij^2 (P_j - P_i)
- pure-state quantum walk: psi(t) = exp(-i H t) psi0
- the 101-waveguide linear-array decoherence benchmark
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def _times(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


def rate_matrix(couplings: np.ndarray) -> np.ndarray:
    R = np.asarray(couplings, dtype=float) ** 2
    np.fill_diagonal(R, 0.0)
    return R - np.diag(R.sum(axis=1))


def classical_rate_walk(pop0: np.ndarray, couplings: np.ndarray, times) -> np.ndarray:
    """Populations at each time in ``times``, shape (len(times), n).

    The rate matrix is symmetric, so the solution is a spectral sum.
    """
    w, V = np.linalg.eigh(rate_matrix(couplings))
    c = V.T @ np.asarray(pop0, dtype=float)
    t = _times(times)
    return (np.exp(np.outer(t, w)) * c[None, :]) @ V.T


def schrodinger_walk(psi0: np.ndarray, couplings: np.ndarray, times) -> np.ndarray:
    """Amplitudes exp(-i H t) psi0 for each t, shape (len(times), n)."""
    H = np.asarray(couplings)
    if not np.allclose(H, H.conj().T):
        raise ValueError("Hamiltonian must be Hermitian")
    w, V = np.linalg.eigh(H)
    c = V.conj().T @ np.asarray(psi0, dtype=complex)
    t = _times(times)
    return (np.exp(-1j * np.outer(t, w)) * c[None, :]) @ V.T


def chain_couplings(count: int, kappa: float) -> np.ndarray:
    K = np.zeros((count, count))
    idx = np.arange(count - 1)
    K[idx, idx + 1] = K[idx + 1, idx] = kappa
    return K


def profile_variance(intensity: np.ndarray, center: int | None = None) -> np.ndarray:
    """Second moment about the array centre, along the last axis."""
    intensity = np.asarray(intensity, dtype=float)
    n = intensity.shape[-1]
    center = n // 2 if center is None else center
    x = np.arange(n) - center
    total = intensity.sum(axis=-1)
    return (intensity * x**2).sum(axis=-1) / total


def fit_power_law(z: np.ndarray, variance: np.ndarray) -> float:
    """Exponent gamma of variance ~ z**gamma from a log-log least-squares line."""
    slope, _ = np.polyfit(np.log(z), np.log(variance), 1)
    return float(slope)


@dataclass
class LinearArrayResult:
    count: int
    length: float
    kappa: float
    z: np.ndarray  # sample distances
    noisy_mean: dict[float, np.ndarray]  # dbeta_max -> (len(z), count) mean intensity
    noisy_std: dict[float, np.ndarray]
    lindblad: dict[float, np.ndarray]  # p -> (len(z), count) populations
    rms: dict[tuple[float, float], float] = field(default_factory=dict)

    def exponents(self, z_min: float = 0.0) -> dict[str, float]:
        mask = self.z >= max(z_min, 1e-12)
        out = {}
        for d, prof in self.noisy_mean.items():
            out[f"dbeta={d:g}"] = fit_power_law(self.z[mask], profile_variance(prof)[mask])
        for p, prof in self.lindblad.items():
            out[f"p={p:g}"] = fit_power_law(self.z[mask], profile_variance(prof)[mask])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["waveguide_index", "mean_intensity", "std_intensity", "dbeta_max", "p"])
        for d in sorted(self.noisy_mean):
            for i, (m, s) in enumerate(zip(self.noisy_mean[d][-1], self.noisy_std[d][-1])):
                w.writerow([i, repr(float(m)), repr(float(s)), repr(d), ""])
        for p in sorted(self.lindblad):
            for i, m in enumerate(self.lindblad[p][-1]):
                w.writerow([i, repr(float(m)), "0.0", "", repr(p)])
        return buf.getvalue()


def linear_array_benchmark(
    dbeta_list: Sequence[float],
    p_grid: Sequence[float] = (),
    count: int = 101,
    length: float = 50.0,
    kappa: float = 0.4,
    n_realizations: int = 200,
    segment_length: float = 3.0,
    base_seed: int = 0,
    z_samples: int = 50,
    width_convention: str = "full",
) -> LinearArrayResult:
    """Centre-injected straight array: noisy ensembles next to Lindblad profiles.

    Every realization shares the z grid ``linspace(0, length, z_samples+1)``.
    RMS distances between the final-plane noisy mean and each Lindblad
    profile are reported for every (dbeta_max, p) pair.
    """
    from qmaze.photonic import PhotonicParams, ensemble_intensities
    from qmaze.qsw import QswParams, build_generator, evolve_expm, initial_state

    K = chain_couplings(count, kappa)
    center = count // 2
    z = np.linspace(0.0, length, z_samples + 1)
    a0 = np.zeros(count, dtype=complex)
    a0[center] = 1.0

    noisy_mean, noisy_std = {}, {}
    for d in dbeta_list:
        params = PhotonicParams(
            kappa=kappa,
            dbeta_max=float(d),
            segment_length=segment_length,
            sink_length=0,
            width_convention=width_convention,
        )
        stack = ensemble_intensities(
            a0, K, params, z, n_realizations if d > 0 else 1, base_seed, noisy_rows=range(count)
        )
        noisy_mean[float(d)] = stack.mean(axis=0)
        noisy_std[float(d)] = stack.std(axis=0)

    lindblad = {}
    for p in p_grid:
        spec = build_generator(K, QswParams(float(p), 0.0, center))
        rhos = evolve_expm(initial_state(spec, center), spec, z)
        lindblad[float(p)] = np.real(np.diagonal(rhos, axis1=1, axis2=2))[:, :count]

    rms = {
        (d, p): float(np.sqrt(np.mean((noisy_mean[d][-1] - lindblad[p][-1]) ** 2)))
        for d in noisy_mean
        for p in lindblad
    }
    return LinearArrayResult(count, length, kappa, z, noisy_mean, noisy_std, lindblad, rms)
