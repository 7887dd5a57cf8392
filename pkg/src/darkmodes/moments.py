"""
First and second moment dynamics of a quantum linear system.

For Gaussian states, ``d<x>/dt = A <x>`` and the symmetrised covariance obeys
``dV/dt = A V + V A^T + B N B^T``. ``N`` is the quadrature noise intensity;
vacuum input fields give ``N = I/2`` with quadratures normalised as
``X = (b + b^dag)/sqrt(2)``. A thermal bath with occupation ``nbar`` gives
``N = (nbar + 1/2) I``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError, NoSteadyStateError
from .model import QuantumLinearSystem
from .symplectic import DEFAULT_TOLERANCES, Tolerances, as_real_matrix, max_abs, sigma

OVERFLOW_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class NoiseModel:
    intensity: np.ndarray

    def __post_init__(self):
        N = as_real_matrix(self.intensity, "noise intensity")
        if N.shape[0] != N.shape[1] or N.shape[0] % 2:
            raise DimensionError(f"noise intensity must be 2m x 2m, got {N.shape}")
        if max_abs(N - N.T) > DEFAULT_TOLERANCES.zero_threshold(N):
            raise InvalidInputError("noise intensity is not symmetric")
        N = (N + N.T) / 2.0
        if N.size and np.linalg.eigvalsh(N).min() < -DEFAULT_TOLERANCES.zero_threshold(N):
            raise InvalidInputError("noise intensity is not positive semidefinite")
        object.__setattr__(self, "intensity", N)

    @classmethod
    def vacuum(cls, m: int, scale: float = 1.0) -> "NoiseModel":
        return cls(scale * 0.5 * np.eye(2 * m))

    @classmethod
    def thermal(cls, m: int, nbar: float) -> "NoiseModel":
        return cls((nbar + 0.5) * np.eye(2 * m))


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    """
    Sampled moments; ``covariances[k]`` is ``V(times[k])``.

    ``aborted`` is set when the covariance norm exceeded the overflow limit;
    the arrays then hold the samples computed up to that point.
    """

    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    aborted: bool = False

    def output_means(self, C) -> np.ndarray:
        """Mean output field rate ``C <x(t)>`` at every sample."""
        return self.means @ np.asarray(C, dtype=float).T

    def uncertainty_violation(self) -> float:
        """Most negative eigenvalue of ``V + i sigma/2`` over the trajectory (0 if none)."""
        S = sigma(self.means.shape[1] // 2)
        worst = 0.0
        for V in self.covariances:
            worst = min(worst, float(np.linalg.eigvalsh(V + 0.5j * S).min()))
        return worst

    def csv_header(self) -> list[str]:
        dim = self.means.shape[1]
        header = ["t"] + [f"mean_{i + 1}" for i in range(dim)]
        header += [f"v_{i + 1}{j + 1}" for i in range(dim) for j in range(i, dim)]
        return header

    def write_csv(self, path_or_file, digits: int = 12) -> None:
        """One row per sample: time, mean vector, covariance upper triangle (row-major)."""
        dim = self.means.shape[1]
        iu = np.triu_indices(dim)
        fmt = f"{{:.{digits}g}}".format

        def _write(fh):
            writer = csv.writer(fh)
            writer.writerow(self.csv_header())
            for t, mu, V in zip(self.times, self.means, self.covariances):
                writer.writerow([fmt(t)] + [fmt(x) for x in mu] + [fmt(x) for x in V[iu]])

        if hasattr(path_or_file, "write"):
            _write(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                _write(fh)


def _diffusion(sys, noise):
    N = noise.intensity
    if N.shape[0] != sys.B.shape[1]:
        raise DimensionError(f"noise intensity is {N.shape[0]}-dim, system has {sys.B.shape[1]} input quadratures")
    return sys.B @ N @ sys.B.T


def simulate(sys: QuantumLinearSystem, mean0, V0, noise: NoiseModel, t_end: float, dt: float) -> MomentTrajectory:
    """
    Integrate the moment equations with fixed-step classical RK4.

    Every step is sampled, starting at ``t = 0``. If ``t_end`` is not a
    multiple of `dt` the last step is shortened to land on it.
    """
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if not t_end >= dt:
        raise InvalidInputError(f"t_end must be at least dt, got t_end={t_end}, dt={dt}")
    A = sys.A
    dim = A.shape[0]
    x = np.asarray(mean0, dtype=float).reshape(-1)
    V = as_real_matrix(V0, "V0")
    if x.shape != (dim,) or V.shape != (dim, dim):
        raise DimensionError(f"initial moments must have sizes {dim} and {dim}x{dim}")
    if max_abs(V - V.T) > DEFAULT_TOLERANCES.zero_threshold(V):
        raise InvalidInputError("V0 is not symmetric")
    D = _diffusion(sys, noise)

    n_steps = max(1, math.ceil(t_end / dt - 1e-9))
    times = np.empty(n_steps + 1)
    means = np.empty((n_steps + 1, dim))
    covs = np.empty((n_steps + 1, dim, dim))
    times[0], means[0], covs[0] = 0.0, x, (V + V.T) / 2.0

    def fV(V):
        AV = A @ V
        return AV + AV.T + D

    t = 0.0
    for k in range(1, n_steps + 1):
        h = min(dt, t_end - t) if k == n_steps else dt
        k1 = A @ x
        k2 = A @ (x + 0.5 * h * k1)
        k3 = A @ (x + 0.5 * h * k2)
        k4 = A @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        K1 = fV(V)
        K2 = fV(V + 0.5 * h * K1)
        K3 = fV(V + 0.5 * h * K2)
        K4 = fV(V + h * K3)
        V = V + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)
        V = (V + V.T) / 2.0
        t = k * dt if k < n_steps else t_end
        times[k], means[k], covs[k] = t, x, V
        if not np.isfinite(V).all() or np.abs(V).max() > OVERFLOW_LIMIT:
            return MomentTrajectory(times[: k + 1], means[: k + 1], covs[: k + 1], aborted=True)
    return MomentTrajectory(times, means, covs)


def steady_state_covariance(sys: QuantumLinearSystem, noise: NoiseModel,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Stationary covariance: solve ``A V + V A^T + B N B^T = 0``.

    The Lyapunov equation is restricted to symmetric ``V`` (upper-triangle
    unknowns) and solved densely. Requires every eigenvalue of ``A`` to have
    a strictly negative real part.
    """
    A = sys.A
    dim = A.shape[0]
    margin = tol.zero_abs * (1.0 + max_abs(A))
    worst = float(np.linalg.eigvals(A).real.max())
    if worst >= -margin:
        raise NoSteadyStateError(f"drift matrix is not Hurwitz (max Re eigenvalue {worst:.3g})")
    D = _diffusion(sys, noise)
    iu = np.triu_indices(dim)
    n_unknowns = iu[0].size
    L = np.empty((n_unknowns, n_unknowns))
    for col, (i, j) in enumerate(zip(*iu)):
        E = np.zeros((dim, dim))
        E[i, j] = E[j, i] = 1.0
        AE = A @ E
        L[:, col] = (AE + AE.T)[iu]
    V = np.zeros((dim, dim))
    V[iu] = np.linalg.solve(L, -D[iu])
    V = V + np.triu(V, 1).T
    res = A @ V + V @ A.T + D
    if max_abs(res) > 1e-10 * (1.0 + max_abs(D) + max_abs(A) * max_abs(V)):
        raise NoSteadyStateError(f"Lyapunov residual {max_abs(res):.3g} too large")
    return V
