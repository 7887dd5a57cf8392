"""
Dark-mode characterization.

The designated subsystem D (first ``n1`` oscillators) hosts dark-mode
candidates wherever the stacked matrix ``(sigma X sigma ; X)`` built from
``X = (C_1 ; G_{1,int}^T)`` loses column rank. Its kernel is closed under the
symplectic form, so a symplectic orthogonal change of coordinates
``T = (P1 P2)`` splits off the candidates. They become genuine dark modes
when the D Hamiltonian does not mix them with the rest (``P1^T G_D P2 = 0``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, InsufficientDataError
from .model import QuantumLinearSystem, transform
from .symplectic import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_real_matrix,
    kernel_basis,
    max_abs,
    orthonormal_complement,
    sigma,
    symplectic_pair_basis,
)

DARK_CANDIDATE = "dark-candidate"
BRIGHT_DIRECT = "bright-direct"
BRIGHT_INDIRECT = "bright-indirect"
RESIDUAL = "residual"

# ratio of singular values on either side of the rank cut below which q is flagged
_MARGINAL_RATIO = 10.0


@dataclass(frozen=True, eq=False)
class PMatrix:
    """``matrix = (sigma_m X sigma_n ; X)`` for a ``2m x 2n`` block ``X``."""

    X: np.ndarray
    matrix: np.ndarray

    @property
    def m(self) -> int:
        return self.X.shape[0] // 2

    @property
    def n(self) -> int:
        return self.X.shape[1] // 2


def pmatrix(X) -> PMatrix:
    X = as_real_matrix(X, "X")
    rows, cols = X.shape
    if rows % 2 or cols % 2 or cols == 0:
        raise DimensionError(f"X must be 2m x 2n with n >= 1, got {X.shape}")
    top = sigma(rows // 2) @ X @ sigma(cols // 2)
    return PMatrix(X=X, matrix=np.vstack([top, X]))


def _require_partition(sys: QuantumLinearSystem):
    if not sys.has_summands:
        raise InsufficientDataError(
            "analysis needs the subsystem partition n1 and the Hamiltonian summands G_D, G_int"
        )


def build_analysis_pmatrix(sys: QuantumLinearSystem) -> PMatrix:
    """P-matrix of ``(C_1 ; G_{1,int}^T)``, size ``2(m+n) x 2n1``."""
    _require_partition(sys)
    k = 2 * sys.n1
    if k == 0:
        raise DimensionError("subsystem D is empty (n1 = 0)")
    C1 = sys.C[:, :k]
    G1_int = sys.G_int[:k, :]
    return pmatrix(np.vstack([C1, G1_int.T]))


def _rank_split(M, tol, scale=0.0):
    """
    Rank of `M` with its kernel, from a single SVD.

    Singular values at or below ``rank_rel * s_max`` are dropped, and so are
    those below ``zero_abs * (1 + scale)``: an operand that is round-off
    relative to the system it was built from has rank zero.
    """
    _, s, vt = np.linalg.svd(M)
    cols = M.shape[1]
    s_full = np.zeros(cols)
    s_full[: s.size] = s
    if s.size == 0 or s[0] == 0.0:
        return s_full, 0, False, np.eye(cols)
    thr = max(tol.rank_threshold(M.shape) * s[0], tol.zero_abs * (1.0 + scale))
    q = int(np.sum(s > thr))
    if q == cols:
        marginal = s[-1] / thr < _MARGINAL_RATIO
    elif q == 0:
        marginal = s[0] > 0.0 and thr / s[0] < _MARGINAL_RATIO
    else:
        marginal = s_full[q] > 0.0 and s[q - 1] / s_full[q] < _MARGINAL_RATIO
    return s_full, q, bool(marginal), vt[q:].T


def _paired_split(kernel, dim, tol):
    """Symplectically paired bases of a kernel and of its orthogonal complement."""
    J = sigma(dim // 2).T  # pairs (v, sigma^T v) make T symplectic
    P1 = symplectic_pair_basis(kernel, J, tol)
    P2 = symplectic_pair_basis(orthonormal_complement(P1, dim), J, tol)
    return P1, P2


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    """
    Coordinates ``x = T x'`` with ``T = (P1 P2)`` symplectic and orthogonal.

    ``P1`` spans the dark-mode candidates (zero on the N oscillators); the
    first ``q`` columns of ``P2`` are the remaining D modes and the rest are
    the N oscillators. Block names follow the transformed drift matrix.
    """

    system: QuantumLinearSystem
    T: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    q: int
    singular_values: np.ndarray
    rank_marginal: bool
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B2: np.ndarray
    C2: np.ndarray
    labels: tuple[str, ...] = field(default=())

    @property
    def n1(self) -> int:
        return self.system.n1

    @property
    def dark_candidate_count(self) -> int:
        return self.P1.shape[1]

    @property
    def has_candidates(self) -> bool:
        return self.dark_candidate_count > 0

    def transformed(self, tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
        return transform(self.system, self.T, tol)


def decompose(sys: QuantumLinearSystem, tol: Tolerances = DEFAULT_TOLERANCES) -> ModeDecomposition:
    """
    Split D into dark-mode candidates and the rest.

    When the analysis P-matrix has full column rank there are no candidates;
    the result then has ``T = I`` and an empty ``P1`` instead of raising.
    """
    P = build_analysis_pmatrix(sys).matrix
    s, q, marginal, kernel = _rank_split(P, tol, max_abs(sys.C) + max_abs(sys.G_int))
    n, n1 = sys.n, sys.n1
    k, dim = 2 * n1, 2 * n
    G = sys.G if sys.G is not None else sys.G_D + sys.G_N + sys.G_int

    if q == k:
        T = np.eye(dim)
        P1, P2 = T[:, :0], T
    else:
        P1_D, P2_D = _paired_split(kernel, k, tol)
        P1 = np.vstack([P1_D, np.zeros((dim - k, P1_D.shape[1]))])
        P2 = np.zeros((dim, dim - P1.shape[1]))
        P2[:k, : P2_D.shape[1]] = P2_D
        P2[k:, P2_D.shape[1]:] = np.eye(dim - k)
        T = np.hstack([P1, P2])

    S = sigma(n)
    dec = ModeDecomposition(
        system=sys,
        T=T,
        P1=P1,
        P2=P2,
        q=q,
        singular_values=s,
        rank_marginal=marginal,
        A11=P1.T @ S @ G @ P1,
        A12=P1.T @ S @ sys.G_D @ P2,
        A21=P2.T @ S @ sys.G_D @ P1,
        A22=P2.T @ sys.A @ P2,
        B2=P2.T @ sys.B,
        C2=sys.C @ P2,
    )
    return replace(dec, labels=classify_modes(dec, tol))


@dataclass(frozen=True)
class ConditionReport:
    """Verdict of a sufficient condition together with the evidence."""

    verdict: str
    holds: bool
    residual: float
    threshold: float
    diagnostics: dict = field(default_factory=dict)


def _G_D(dec, G_D):
    return dec.system.G_D if G_D is None else as_real_matrix(G_D, "G_D")


def check_dark_condition(dec: ModeDecomposition, G_D=None,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> ConditionReport:
    """
    Test ``P1^T G_D P2 = 0``, which makes the candidates dark modes.

    Diagnostics carry the four symplectic variants of the condition and the
    residual of the full block-diagonal form of the transformed system
    (off-diagonal drift blocks, dark rows of the input matrix, dark columns
    of the output matrix).
    """
    if not dec.has_candidates:
        return ConditionReport("no-candidates", False, float("nan"), float("nan"))
    G_D = _G_D(dec, G_D)
    S = sigma(dec.system.n)
    P1, P2 = dec.P1, dec.P2
    residual = max_abs(P1.T @ G_D @ P2)
    threshold = tol.zero_threshold(G_D)
    sys = dec.system
    A_t = dec.T.T @ sys.A @ dec.T
    kd = dec.dark_candidate_count
    diagnostics = {
        "P1T_G_P2": residual,
        "P1T_S_G_P2": max_abs(P1.T @ S @ G_D @ P2),
        "P1T_G_S_P2": max_abs(P1.T @ G_D @ S @ P2),
        "P1T_S_G_S_P2": max_abs(P1.T @ S @ G_D @ S @ P2),
        "A12": max_abs(A_t[:kd, kd:]),
        "A21": max_abs(A_t[kd:, :kd]),
        "B_dark_rows": max_abs(P1.T @ sys.B),
        "C_dark_cols": max_abs(sys.C @ P1),
        "block_form_threshold": tol.zero_threshold(sys.A, sys.B),
    }
    holds = residual <= threshold
    return ConditionReport("dark" if holds else "not-dark", holds, residual, threshold, diagnostics)


def check_invariance_condition(dec: ModeDecomposition, G_D=None,
                               tol: Tolerances = DEFAULT_TOLERANCES) -> ConditionReport:
    """Test ``P1^T G_D = 0``, under which the dark modes do not evolve at all."""
    if not dec.has_candidates:
        return ConditionReport("no-candidates", False, float("nan"), float("nan"))
    G_D = _G_D(dec, G_D)
    residual = max_abs(dec.P1.T @ G_D)
    threshold = tol.zero_threshold(G_D)
    holds = residual <= threshold
    return ConditionReport(
        "invariant" if holds else "evolving", holds, residual, threshold,
        {"A11": max_abs(dec.A11)},
    )


def classify_modes(dec: ModeDecomposition, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[str, ...]:
    """
    Label the ``2 n1`` modes of subsystem D in the column order of ``T``.

    P1 columns are dark candidates. A remaining D mode is bright-direct when
    noise enters it (nonzero input row) or its drift row reaches an N
    oscillator; bright-indirect when its drift row reaches a bright-direct
    mode through other D modes; residual otherwise.
    """
    kd = dec.dark_candidate_count
    q = dec.q
    labels = [DARK_CANDIDATE] * kd
    if q == 0:
        return tuple(labels)
    A22, B2 = dec.A22, dec.B2
    thr_A = tol.zero_threshold(A22)
    thr_B = tol.zero_threshold(B2)
    edges = np.abs(A22) > thr_A
    np.fill_diagonal(edges, False)
    n_total = A22.shape[0]
    direct = np.zeros(n_total, dtype=bool)
    direct[q:] = True  # N oscillators themselves act as sinks
    for i in range(q):
        noisy = B2.shape[1] > 0 and np.max(np.abs(B2[i])) > thr_B
        direct[i] = noisy or bool(np.any(edges[i, q:]))
    reach = direct.copy()
    changed = True
    while changed:
        changed = False
        for i in range(q):
            if not reach[i] and np.any(edges[i] & reach):
                reach[i] = changed = True
    for i in range(q):
        labels.append(BRIGHT_DIRECT if direct[i] else BRIGHT_INDIRECT if reach[i] else RESIDUAL)
    return tuple(labels)


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Intersection of the uncontrollable and unobservable subspaces."""

    dimension: int
    basis: np.ndarray
    controllable_dim: int
    observable_dim: int

    def projection_residual(self, vectors) -> float:
        V = np.asarray(vectors, dtype=float)
        if V.size == 0:
            return 0.0
        return max_abs(V - self.basis @ (self.basis.T @ V))


def _krylov_span(A, B, tol):
    """Orthonormal basis of ``span(B, AB, A^2 B, ...)`` by block Arnoldi."""
    dim = A.shape[0]
    if B.shape[1] == 0 or max_abs(B) == 0.0:
        return np.zeros((dim, 0))
    thr_A = tol.zero_abs * (1.0 + np.linalg.norm(A, 2))

    def _orth(W, thr):
        u, s, _ = np.linalg.svd(W, full_matrices=False)
        return u[:, s > thr]

    basis = _orth(B, tol.zero_abs * (1.0 + np.linalg.norm(B, 2)))
    new = basis
    while new.shape[1] and basis.shape[1] < dim:
        W = A @ new
        for _ in range(2):
            W = W - basis @ (basis.T @ W)
        new = _orth(W, thr_A)
        basis = np.hstack([basis, new])
    return basis


def pbh_oracle(sys: QuantumLinearSystem, tol: Tolerances = DEFAULT_TOLERANCES) -> OracleResult:
    """
    Modes that are both uncontrollable from ``B`` and unobservable through ``C``.

    Works on ``(A, B, C)`` alone: the controllable subspace of ``(A, B)`` and
    the observable row space of ``(C, A)`` are grown by orthonormalised
    Krylov iterations, and the result is the orthogonal complement of their
    sum. A mode ``v^T x`` with ``v`` in this subspace never sees the inputs
    and never shows up in the outputs. Intended for ``2n <= 40``.
    """
    dim = sys.A.shape[0]
    R = _krylov_span(sys.A, sys.B, tol)
    O = _krylov_span(sys.A.T, sys.C.T, tol)
    both = np.hstack([R, O])
    if both.shape[1] == 0:
        basis = np.eye(dim)
    else:
        basis = kernel_basis(both.T, Tolerances(rank_rel=tol.zero_abs, zero_abs=tol.zero_abs))
    return OracleResult(basis.shape[1], basis, R.shape[1], O.shape[1])


@dataclass(frozen=True, eq=False)
class IODecomposition:
    """Modes decoupled from a chosen set of input channels."""

    selected_inputs: tuple[int, ...]
    T: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    q: int
    transformed: QuantumLinearSystem | None
    residual: float
    threshold: float

    @property
    def has_candidates(self) -> bool:
        return self.P1.shape[1] > 0

    @property
    def decoupled(self) -> bool:
        return self.has_candidates and self.residual <= self.threshold


def decompose_io(sys: QuantumLinearSystem, selected_inputs, tol: Tolerances = DEFAULT_TOLERANCES) -> IODecomposition:
    """
    Find modes that neither feel nor show up in the selected input channels.

    The kernel of the P-matrix of the selected rows of ``C`` is paired into
    ``P1`` (full length, no subsystem restriction). The modes ``P1^T x`` are
    decoupled from those channels when ``P1^T A P2 = 0``.
    """
    selected = tuple(int(i) for i in selected_inputs)
    if not selected:
        raise DimensionError("select at least one input channel")
    if len(set(selected)) != len(selected) or min(selected) < 0 or max(selected) >= sys.m:
        raise DimensionError(f"invalid input selection {selected} for m={sys.m}")
    rows = [r for i in selected for r in (2 * i, 2 * i + 1)]
    P = pmatrix(sys.C[rows]).matrix
    dim = sys.A.shape[0]
    _, q, _, kernel = _rank_split(P, tol, max_abs(sys.C))
    if q == dim:
        eye = np.eye(dim)
        return IODecomposition(selected, eye, eye[:, :0], eye, q, None, float("nan"), float("nan"))
    P1, P2 = _paired_split(kernel, dim, tol)
    T = np.hstack([P1, P2])
    residual = max_abs(P1.T @ sys.A @ P2)
    return IODecomposition(
        selected, T, P1, P2, q, transform(sys, T, tol), residual, tol.zero_threshold(sys.A)
    )
