"""
Quantum linear systems in quadrature form.

A system of ``n`` oscillators with Hamiltonian ``H = x^T G x`` and ``m``
couplings ``L_i = c_i^T x`` evolves as ``dx = A x dt + B dW`` with output
``dW_out = C x dt + dW`` where::

    C = sqrt(2) (Re c_1, Im c_1, ..., Re c_m, Im c_m)^T
    A = sigma_n (G + C^T sigma_m C / 2)
    B = sigma_n C^T sigma_m

hbar = 1 and field quadratures are ``X = (b + b^dag)/sqrt(2)``, ``P = (b - b^dag)/(sqrt(2) i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError
from .symplectic import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_real_matrix,
    is_symplectic_orthogonal,
    max_abs,
    numeric_rank,
    sigma,
)


def build_C_matrix(couplings: Sequence) -> np.ndarray:
    """
    Stack complex coupling vectors into the real ``2m x 2n`` output matrix.

    >>> build_C_matrix([[1, 0, 0, 0]])
    array([[1.41421356, 0.        , 0.        , 0.        ],
           [0.        , 0.        , 0.        , 0.        ]])
    """
    if len(couplings) == 0:
        raise DimensionError("at least one coupling vector is required")
    vecs = [np.asarray(c, dtype=complex).ravel() for c in couplings]
    size = vecs[0].size
    if size == 0 or size % 2:
        raise DimensionError(f"coupling vectors need even length 2n, got {size}")
    for i, c in enumerate(vecs):
        if c.size != size:
            raise DimensionError(f"coupling {i} has length {c.size}, expected {size}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError(f"coupling {i} has non-finite entries")
    rows = []
    for c in vecs:
        rows.extend([c.real, c.imag])
    return np.sqrt(2.0) * np.array(rows)


def couplings_from_C(C: np.ndarray) -> np.ndarray:
    """Inverse of :func:`build_C_matrix`: one complex row per coupling."""
    C = np.asarray(C, dtype=float)
    return (C[0::2] + 1j * C[1::2]) / np.sqrt(2.0)


def drift_matrix(G, C) -> np.ndarray:
    n = G.shape[0] // 2
    m = C.shape[0] // 2
    return sigma(n) @ (G + C.T @ sigma(m) @ C / 2.0)


def input_matrix(C, n) -> np.ndarray:
    m = C.shape[0] // 2
    return sigma(n) @ C.T @ sigma(m)


@dataclass(frozen=True, eq=False)
class QuantumLinearSystem:
    """
    State-space triplet ``(A, B, C)`` with optional physical data.

    ``G`` is present when the system comes from a Hamiltonian. ``n1`` marks the
    first ``n1`` oscillators as the designated subsystem D (the rest form the
    noisy subsystem N), and ``G_D``, ``G_N``, ``G_int`` split ``G`` accordingly.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    G: np.ndarray | None = None
    n1: int | None = None
    G_D: np.ndarray | None = None
    G_N: np.ndarray | None = None
    G_int: np.ndarray | None = None
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        A = as_real_matrix(self.A, "A")
        dim = A.shape[0]
        if A.shape != (dim, dim) or dim % 2:
            raise DimensionError(f"A must be square with even size, got {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(dim, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, dim)
        if B.shape[1] % 2 or C.shape[0] != B.shape[1]:
            raise DimensionError(f"B {B.shape} and C {C.shape} disagree on the input count")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        for name in ("G", "G_D", "G_N", "G_int"):
            val = getattr(self, name)
            if val is not None:
                val = as_real_matrix(val, name)
                if val.shape != (dim, dim):
                    raise DimensionError(f"{name} has shape {val.shape}, expected {(dim, dim)}")
                object.__setattr__(self, name, val)
        if self.n1 is not None and not (0 <= self.n1 <= self.n):
            raise DimensionError(f"n1={self.n1} outside [0, {self.n}]")
        labels = tuple(self.labels) or tuple(str(i + 1) for i in range(self.n))
        if len(labels) != self.n:
            raise DimensionError(f"{len(labels)} oscillator labels for n={self.n}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    @property
    def m(self) -> int:
        return self.C.shape[0] // 2

    @property
    def couplings(self) -> np.ndarray:
        return couplings_from_C(self.C)

    @property
    def has_summands(self) -> bool:
        return self.n1 is not None and self.G_D is not None and self.G_int is not None

    def with_partition(self, n1, G_D=None, G_N=None, G_int=None, tol=DEFAULT_TOLERANCES):
        """
        Copy of the system with D = first `n1` oscillators.

        Summands are required unless ``n1 == n``, in which case ``G_D = G``.
        """
        if n1 == self.n and G_D is None and self.G is not None:
            zero = np.zeros_like(self.G)
            return replace(self, n1=n1, G_D=self.G, G_N=zero, G_int=zero.copy())
        if G_D is None or G_int is None:
            return replace(self, n1=n1, G_D=None, G_N=None, G_int=None)
        G_N = np.zeros_like(np.asarray(G_D, dtype=float)) if G_N is None else G_N
        G_D, G_N, G_int = _check_summands(G_D, G_N, G_int, n1, self.G, tol)
        return replace(self, n1=n1, G_D=G_D, G_N=G_N, G_int=G_int)


def _check_summands(G_D, G_N, G_int, n1, G, tol):
    G_D = as_real_matrix(G_D, "G_D")
    G_N = as_real_matrix(G_N, "G_N")
    G_int = as_real_matrix(G_int, "G_int")
    k = 2 * n1
    for name, M in (("G_D", G_D), ("G_N", G_N), ("G_int", G_int)):
        if max_abs(M - M.T) > tol.zero_threshold(M):
            raise InvalidInputError(f"{name} is not symmetric")
    if max_abs(G_D[k:, :]) > tol.zero_threshold(G_D) or max_abs(G_D[:, k:]) > tol.zero_threshold(G_D):
        raise InvalidInputError("G_D has entries outside the D block")
    if max_abs(G_N[:k, :]) > tol.zero_threshold(G_N) or max_abs(G_N[:, :k]) > tol.zero_threshold(G_N):
        raise InvalidInputError("G_N has entries outside the N block")
    if max_abs(G_int[:k, :k]) > tol.zero_threshold(G_int) or max_abs(G_int[k:, k:]) > tol.zero_threshold(G_int):
        raise InvalidInputError("G_int has entries inside a diagonal block")
    if G is not None and max_abs(G - (G_D + G_N + G_int)) > tol.zero_threshold(G):
        raise InvalidInputError("G differs from G_D + G_N + G_int")
    return G_D, G_N, G_int


def build_system(G, couplings=(), n1=None, *, G_D=None, G_N=None, G_int=None,
                 labels=(), tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """
    Derive ``(A, B, C)`` from a Hamiltonian matrix and coupling vectors.

    Parameters
    ----------
    G : (2n, 2n) array_like or None
        Symmetric Hamiltonian matrix. May be ``None`` when all three summands
        are given, in which case ``G = G_D + G_N + G_int``.
    couplings : sequence of complex vectors of length 2n
        Empty for a closed system.
    n1 : int, optional
        Number of leading oscillators forming the designated subsystem.
    G_D, G_N, G_int : array_like, optional
        Hamiltonian split between the subsystems (``G_N`` defaults to zero).
    """
    if G is None:
        if G_D is None or G_int is None:
            raise InvalidInputError("either G or the summands G_D and G_int are required")
        G_N_ = np.zeros_like(np.asarray(G_D, dtype=float)) if G_N is None else G_N
        G = as_real_matrix(G_D, "G_D") + as_real_matrix(G_N_, "G_N") + as_real_matrix(G_int, "G_int")
    G = as_real_matrix(G, "G")
    dim = G.shape[0]
    if len(couplings):
        C = build_C_matrix(couplings)
        if C.shape[1] != dim:
            raise DimensionError(f"couplings have length {C.shape[1]}, G needs {dim}")
    else:
        C = np.zeros((0, dim))
    return _assemble(G, C, n1, G_D, G_N, G_int, labels, tol)


def system_from_C(G, C, n1=None, *, G_D=None, G_N=None, G_int=None,
                  labels=(), tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """Like :func:`build_system` but with the real output matrix ``C`` given directly."""
    G = as_real_matrix(G, "G")
    C = as_real_matrix(np.asarray(C, dtype=float).reshape(-1, G.shape[1]), "C")
    if C.shape[0] % 2:
        raise DimensionError(f"C needs an even number of rows, got {C.shape[0]}")
    return _assemble(G, C, n1, G_D, G_N, G_int, labels, tol)


def _assemble(G, C, n1, G_D, G_N, G_int, labels, tol):
    dim = G.shape[0]
    if G.shape != (dim, dim) or dim % 2 or dim == 0:
        raise DimensionError(f"G must be square with even positive size, got {G.shape}")
    if max_abs(G - G.T) > tol.zero_threshold(G):
        raise InvalidInputError("G is not symmetric")
    G = (G + G.T) / 2.0
    sys = QuantumLinearSystem(
        A=drift_matrix(G, C), B=input_matrix(C, dim // 2), C=C, G=G, labels=tuple(labels)
    )
    if n1 is not None:
        sys = sys.with_partition(n1, G_D, G_N, G_int, tol)
    return sys


def hamiltonian_from_triplet(A, C) -> np.ndarray:
    """
    The (unsymmetrised) ``G`` that reproduces drift `A` for output matrix `C`.

    It is symmetric exactly when ``(A, sigma C^T sigma, C)`` is physically realizable.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    n = A.shape[0] // 2
    m = C.shape[0] // 2
    return -sigma(n) @ A - C.T @ sigma(m) @ C / 2.0


def transform(sys: QuantumLinearSystem, T, tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """
    Change coordinates ``x = T x'``: ``A' = T^-1 A T``, ``B' = T^-1 B``, ``C' = C T``.

    For symplectic orthogonal `T` the inverse is ``T^T`` and ``G' = T^T G T``
    is carried along. The subsystem partition is dropped.
    """
    T = as_real_matrix(T, "T")
    dim = sys.A.shape[0]
    if T.shape != (dim, dim):
        raise DimensionError(f"T has shape {T.shape}, expected {(dim, dim)}")
    if numeric_rank(T, tol) < dim:
        raise InvalidInputError("transformation matrix is singular")
    G = None
    if is_symplectic_orthogonal(T, tol):
        Tinv = T.T
        if sys.G is not None:
            G = T.T @ sys.G @ T
    else:
        Tinv = np.linalg.inv(T)
    return QuantumLinearSystem(
        A=Tinv @ sys.A @ T, B=Tinv @ sys.B, C=sys.C @ T, G=G, labels=sys.labels
    )


@dataclass(frozen=True)
class RealizabilityReport:
    passed: bool
    residual: float
    threshold: float


def check_physical_realizability(sys: QuantumLinearSystem,
                                 tol: Tolerances = DEFAULT_TOLERANCES) -> RealizabilityReport:
    """Residual of ``A sigma_n + sigma_n A^T + B sigma_m B^T = 0``."""
    S_n = sigma(sys.n)
    S_m = sigma(sys.m)
    res = sys.A @ S_n + S_n @ sys.A.T + sys.B @ S_m @ sys.B.T
    residual = max_abs(res)
    threshold = tol.zero_abs * (1.0 + max_abs(sys.A) + max_abs(sys.B) ** 2)
    return RealizabilityReport(residual <= threshold, residual, threshold)
