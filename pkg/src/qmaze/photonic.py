"""Coupled-mode propagation in segmented waveguide arrays.

    i dA_n/dz = dbeta_n(z) A_n + sum_m kappa_mn A_m

``dbeta_n(z)`` is piecewise constant on segments of fixed length and drawn
i.i.d. uniform around zero for maze waveguides; sink waveguides are never
segmented. Within a segment the propagator is an exact matrix exponential:
Hermitian eigendecomposition when lossless, ``scipy.linalg.expm`` once a
uniform maze loss makes the generator non-Hermitian.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from qmaze._rng import RNG_ID, make_rng
from qmaze.layout import Layout, append_sink_chain, layout_to_couplings

WIDTH_CONVENTIONS = ("full", "half")


@dataclass(frozen=True)
class PhotonicParams:
    """Array parameters in mm and mm^-1.

    ``width_convention='full'`` reads ``dbeta_max`` as the peak-to-peak width
    of the uniform law (draws in [-dbeta_max/2, dbeta_max/2]); ``'half'``
    draws in [-dbeta_max, dbeta_max].
    """

    kappa: float = 0.40
    nnn_ratio: float = 0.2
    dbeta_max: float = 0.40
    segment_length: float = 3.0
    sink_length: int = 62
    maze_loss_db: float = 0.0
    loss_reference_length: float = 60.0
    width_convention: str = "full"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.dbeta_max < 0:
            raise ValueError("dbeta_max must be non-negative")
        if self.segment_length <= 0:
            raise ValueError("segment_length must be positive")
        if self.maze_loss_db < 0:
            raise ValueError("maze_loss_db must be non-negative")
        if self.width_convention not in WIDTH_CONVENTIONS:
            raise ValueError(f"width_convention must be one of {WIDTH_CONVENTIONS}")

    @property
    def half_width(self) -> float:
        return self.dbeta_max / 2 if self.width_convention == "full" else self.dbeta_max


@dataclass(frozen=True)
class NoiseMap:
    seed: int
    segment_length: float
    dbeta: np.ndarray  # (waveguides, segments), mm^-1

    @property
    def segments(self) -> int:
        return self.dbeta.shape[1]

    @property
    def coverage(self) -> float:
        return self.segments * self.segment_length

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rng_id": RNG_ID,
            "segment_length_mm": self.segment_length,
            "dbeta": self.dbeta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseMap":
        return cls(int(data["seed"]), float(data["segment_length_mm"]), np.array(data["dbeta"], float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def sample_noise_map(
    params: PhotonicParams,
    total_length: float,
    waveguide_count: int,
    seed: int,
    noisy_rows: Sequence[int] | None = None,
) -> NoiseMap:
    """Uniform detunings for ``noisy_rows`` (default: all); other rows stay 0."""
    if total_length <= 0:
        raise ValueError("total_length must be positive")
    segments = max(math.ceil(total_length / params.segment_length - 1e-9), 1)
    rows = np.arange(waveguide_count) if noisy_rows is None else np.asarray(list(noisy_rows), int)
    dbeta = np.zeros((waveguide_count, segments))
    if params.dbeta_max > 0 and len(rows):
        hw = params.half_width
        dbeta[rows] = make_rng(seed).uniform(-hw, hw, size=(len(rows), segments))
    return NoiseMap(seed, params.segment_length, dbeta)


def apply_maze_loss(
    waveguide_count: int,
    maze_rows: Sequence[int],
    loss_db: float,
    reference_length: float = 60.0,
) -> np.ndarray:
    """Complex diagonal shift -i*alpha/2 on maze rows.

    ``alpha`` is the power attenuation coefficient that removes ``loss_db``
    over ``reference_length``. Add the result to the generator diagonal.
    """
    if loss_db < 0:
        raise ValueError("loss_db must be non-negative")
    extra = np.zeros(waveguide_count, dtype=complex)
    if loss_db == 0:
        return extra
    alpha = loss_db * math.log(10.0) / 10.0 / reference_length
    extra[np.asarray(list(maze_rows), int)] = -0.5j * alpha
    return extra


def _segment_step(M: np.ndarray, hermitian: bool):
    if hermitian:
        w, V = np.linalg.eigh(M)
        Vh = V.conj().T
        return lambda a, dz: V @ (np.exp(-1j * w * dz) * (Vh @ a))
    return lambda a, dz: expm(-1j * dz * M) @ a


def propagate(
    a0: np.ndarray,
    couplings: np.ndarray,
    noise: NoiseMap,
    z_samples: Sequence[float],
    extra_diagonal: np.ndarray | None = None,
) -> np.ndarray:
    """Amplitudes at each requested z (ascending), shape (len(z_samples), n).

    Segment boundaries are stepped over exactly; samples inside a segment
    are reached by a partial step with that segment's generator.
    """
    z = np.asarray(z_samples, dtype=float)
    if len(z) and (np.any(np.diff(z) < 0) or z[0] < 0):
        raise ValueError("z samples must be ascending and non-negative")
    if len(z) and z[-1] > noise.coverage + 1e-9:
        raise ValueError(f"z={z[-1]:g} mm is beyond the noise map coverage of {noise.coverage:g} mm")
    K = np.asarray(couplings)
    hermitian = extra_diagonal is None or not np.any(extra_diagonal)
    diag_extra = 0 if extra_diagonal is None else extra_diagonal

    a = np.asarray(a0, dtype=complex).copy()
    out = np.empty((len(z), len(a)), dtype=complex)
    L = noise.segment_length
    pos = 0.0
    k = 0
    for seg in range(noise.segments):
        if k == len(z):
            break
        seg_end = (seg + 1) * L
        M = K + np.diag(noise.dbeta[:, seg] + diag_extra)
        step = _segment_step(M, hermitian)
        while k < len(z) and z[k] <= seg_end + 1e-12:
            if z[k] > pos:
                a = step(a, z[k] - pos)
                pos = z[k]
            out[k] = a
            k += 1
        if k < len(z):
            a = step(a, seg_end - pos)
            pos = seg_end
    return out


def sink_fraction(amplitudes: np.ndarray, sink: Sequence[int]) -> np.ndarray:
    """Power in the sink over total power present (last axis = waveguides)."""
    power = np.abs(np.asarray(amplitudes)) ** 2
    total = power.sum(axis=-1)
    return power[..., list(sink)].sum(axis=-1) / total


@dataclass
class PhotonicArray:
    couplings: np.ndarray  # mm^-1, maze sites then sink chain
    layout: Layout
    in_node: int

    @property
    def sink(self) -> tuple[int, ...]:
        return self.layout.sink

    @property
    def maze_rows(self) -> range:
        return range(self.couplings.shape[0] - len(self.layout.sink))

    @property
    def size(self) -> int:
        return self.couplings.shape[0]

    def input_field(self) -> np.ndarray:
        a0 = np.zeros(self.size, dtype=complex)
        a0[self.in_node] = 1.0
        return a0


def build_array(layout: Layout, params: PhotonicParams) -> PhotonicArray:
    K = layout_to_couplings(layout, params.kappa, params.nnn_ratio)
    K, extended = append_sink_chain(K, layout, params.sink_length, params.kappa)
    return PhotonicArray(K, extended, layout.in_node)


def realization(
    array: PhotonicArray, params: PhotonicParams, z: np.ndarray, seed: int
) -> dict[str, np.ndarray]:
    """One noise map: sink fractions with and without the maze loss."""
    z = np.asarray(z, dtype=float)
    noise = sample_noise_map(params, max(z[-1], params.segment_length), array.size, seed, array.maze_rows)
    amps = propagate(array.input_field(), array.couplings, noise, z)
    result = {"E": sink_fraction(amps, array.sink), "power": (np.abs(amps) ** 2).sum(-1)}
    if params.maze_loss_db > 0:
        extra = apply_maze_loss(
            array.size, array.maze_rows, params.maze_loss_db, params.loss_reference_length
        )
        lossy = propagate(array.input_field(), array.couplings, noise, z, extra)
        power = np.abs(lossy) ** 2
        result["measured"] = sink_fraction(lossy, array.sink)
        result["lossy_power"] = power.sum(-1)
        result["lossy_sink_power"] = power[:, list(array.sink)].sum(-1)
    return result


@dataclass
class EnsembleResult:
    z: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    traces: np.ndarray  # (realizations, len(z))
    seeds: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.seeds)

    def to_csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_mm", "mean_E", "std_E", "n"])
        for z, m, s in zip(self.z, self.mean, self.std):
            w.writerow([repr(float(z)), repr(float(m)), repr(float(s)), self.n])
        return buf.getvalue()


def read_ensemble_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.DictReader(l for l in text.splitlines() if l and not l.startswith("#")))
    return (
        np.array([float(r["z_mm"]) for r in rows]),
        np.array([float(r["mean_E"]) for r in rows]),
    )


def _run_seeds(fn, seeds, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return dict(zip(seeds, pool.map(fn, seeds)))
    return {s: fn(s) for s in seeds}


def ensemble_efficiency(
    array: PhotonicArray,
    params: PhotonicParams,
    z_grid: Sequence[float],
    n_realizations: int,
    base_seed: int = 0,
    threads: int = 1,
    key: str = "E",
) -> EnsembleResult:
    """Mean and std of the sink fraction over seeds base_seed .. base_seed+n-1."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    z = np.asarray(z_grid, dtype=float)
    seeds = tuple(range(base_seed, base_seed + n_realizations))
    results = _run_seeds(lambda s: realization(array, params, z, s)[key], seeds, threads)
    traces = np.array([results[s] for s in sorted(results)])
    return EnsembleResult(z, traces.mean(axis=0), traces.std(axis=0), traces, seeds)


def ensemble_intensities(
    a0: np.ndarray,
    couplings: np.ndarray,
    params: PhotonicParams,
    z: Sequence[float],
    n_realizations: int,
    base_seed: int = 0,
    noisy_rows: Sequence[int] | None = None,
) -> np.ndarray:
    """Output intensity profiles, shape (realizations, len(z), waveguides)."""
    z = np.asarray(z, dtype=float)
    n = len(a0)
    out = np.empty((n_realizations, len(z), n))
    for r in range(n_realizations):
        noise = sample_noise_map(params, max(z[-1], params.segment_length), n, base_seed + r, noisy_rows)
        out[r] = np.abs(propagate(a0, couplings, noise, z)) ** 2
    return out


def calibrate_p(
    z: Sequence[float],
    ensemble_mean: Sequence[float],
    maze_couplings: np.ndarray,
    gamma_equivalent: float,
    p_grid: Sequence[float],
    in_node: int = 0,
    out_node: int = -1,
) -> tuple[float, float, dict[float, float]]:
    """Best-matching Lindblad mixing parameter for an efficiency trace.

    ``z`` in mm is used directly as time, so the couplings must be in mm^-1.
    Returns (best p, its RMS residual, residual for every p). Ties go to the
    smallest p.
    """
    from qmaze.qsw import QswParams, efficiency_curve

    z = np.asarray(z, dtype=float)
    target = np.asarray(ensemble_mean, dtype=float)
    residuals = {}
    for p in p_grid:
        model = efficiency_curve(maze_couplings, QswParams(float(p), gamma_equivalent, out_node), z, in_node)
        residuals[float(p)] = float(np.sqrt(np.mean((model - target) ** 2)))
    best = min(residuals, key=lambda p: (residuals[p], p))
    return best, residuals[best], residuals
