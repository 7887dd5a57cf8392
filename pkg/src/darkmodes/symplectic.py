"""
Dense linear algebra with symplectic structure.

Conventions: phase-space vectors are ordered ``(x_1, p_1, ..., x_n, p_n)`` and
the symplectic form is block diagonal with ``n`` copies of ``[[0, 1], [-1, 0]]``.
Matrices are plain 2D ``numpy`` float arrays.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError, StructureError

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])

# a candidate column counts as "largest" when within this relative margin of the max
_TIE_MARGIN = 1e-9


@dataclass(frozen=True)
class Tolerances:
    """
    Numerical thresholds.

    Parameters
    ----------
    rank_rel : float or None
        Singular values above ``rank_rel * s_max`` count towards the rank.
        ``None`` means ``max(rows, cols) * machine epsilon`` of the matrix at hand.
    zero_abs : float
        A quantity that should vanish analytically is treated as zero when
        ``max|residual| <= zero_abs * (1 + max|operand|)``.
    """

    rank_rel: float | None = None
    zero_abs: float = 1e-10

    def __post_init__(self):
        for name in ("rank_rel", "zero_abs"):
            value = getattr(self, name)
            if value is None and name == "rank_rel":
                continue
            if not (0.0 < value < 1.0):
                raise InvalidInputError(f"{name} must lie in (0, 1), got {value!r}")

    @classmethod
    def from_env(cls, **overrides) -> "Tolerances":
        """Default tolerances with ``DMK_TOL_ZERO`` applied, then explicit overrides."""
        kwargs = {}
        env = os.environ.get("DMK_TOL_ZERO")
        if env:
            try:
                kwargs["zero_abs"] = float(env)
            except ValueError as exc:
                raise InvalidInputError(f"DMK_TOL_ZERO is not a number: {env!r}") from exc
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def rank_threshold(self, shape) -> float:
        if self.rank_rel is not None:
            return self.rank_rel
        return max(shape) * np.finfo(float).eps

    def zero_threshold(self, *operands) -> float:
        scale = max((max_abs(op) for op in operands), default=0.0)
        return self.zero_abs * (1.0 + scale)


DEFAULT_TOLERANCES = Tolerances()


def max_abs(M) -> float:
    """Max-norm that is 0 for empty arrays."""
    M = np.asarray(M)
    return float(np.max(np.abs(M))) if M.size else 0.0


def as_real_matrix(M, name="matrix") -> np.ndarray:
    """Coerce to a finite 2D float array."""
    try:
        arr = np.array(M, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not a real matrix") from exc
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def make_sigma(n: int) -> np.ndarray:
    """
    Symplectic form for ``n`` oscillators.

    >>> make_sigma(1)
    array([[ 0.,  1.],
           [-1.,  0.]])
    """
    if int(n) != n or n < 1:
        raise DimensionError(f"oscillator count must be >= 1, got {n!r}")
    return np.kron(np.eye(int(n)), _J)


def sigma(n: int) -> np.ndarray:
    # like make_sigma but allows n == 0 (closed systems have no input quadratures)
    return np.kron(np.eye(n), _J) if n else np.zeros((0, 0))


def numeric_rank(M, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    M = as_real_matrix(M)
    if M.size == 0:
        raise DimensionError("numeric_rank of an empty matrix")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_threshold(M.shape) * s[0]))


def kernel_basis(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Orthonormal basis of the null space of `M`, one vector per column.

    The split between range and kernel uses the same threshold as
    :func:`numeric_rank`, so ``rank + nullity == cols`` always holds.
    """
    M = as_real_matrix(M)
    rows, cols = M.shape
    if cols == 0:
        return np.zeros((0, 0))
    if rows == 0:
        return np.eye(cols)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.sum(s > tol.rank_threshold(M.shape) * s[0]))
    return vt[r:].T.copy()


def orthonormal_complement(Q, dim=None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(Q)`` in R^dim."""
    Q = np.asarray(Q, dtype=float)
    dim = Q.shape[0] if dim is None else dim
    if Q.shape[1] == 0:
        return np.eye(dim)
    u, s, _ = np.linalg.svd(Q, full_matrices=True)
    r = int(np.sum(s > 0.5))  # Q has orthonormal columns: singular values are all ~1
    return u[:, r:].copy()


def is_sigma_invariant(Q, J, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Whether ``J @ span(Q)`` stays inside ``span(Q)`` for orthonormal `Q`."""
    Q = np.asarray(Q, dtype=float)
    JQ = J @ Q
    leak = JQ - Q @ (Q.T @ JQ)
    return max_abs(leak) <= tol.zero_abs * (1.0 + max_abs(JQ))


def symplectic_pair_basis(subspace, J, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Re-express a ``J``-invariant subspace in a basis of pairs ``(v_1, J v_1, v_2, J v_2, ...)``.

    Parameters
    ----------
    subspace : (d, k) array
        Orthonormal columns spanning a subspace closed under `J`; ``k`` must be even.
    J : (d, d) array
        Orthogonal antisymmetric matrix, normally ``make_sigma(d // 2)`` or its
        transpose. Passing the transpose gives pairs whose matrix ``T``
        satisfies ``T.T @ sigma @ T == sigma``.
    tol : Tolerances

    Returns
    -------
    (d, k) array with orthonormal columns and the same span as `subspace`.
    Column ``2i+1`` is exactly ``J @ column[2i]``.

    Notes
    -----
    Candidate vectors are the columns of the orthogonal projector onto the
    subspace, so the result depends only on the span, not on the basis
    handed in. At every step the candidate with the largest norm after
    projecting out the pairs already chosen is taken (first index wins ties).
    """
    Q = as_real_matrix(subspace, "subspace")
    J = as_real_matrix(J, "J")
    d, k = Q.shape
    if J.shape != (d, d):
        raise DimensionError(f"J has shape {J.shape}, expected {(d, d)}")
    if k % 2:
        raise StructureError(
            f"subspace has odd dimension {k}; a J-invariant subspace is even-dimensional "
            "(check the rank tolerance)"
        )
    if k == 0:
        return np.zeros((d, 0))
    if not is_sigma_invariant(Q, J, tol):
        raise StructureError("subspace is not invariant under J")

    proj = Q @ Q.T
    chosen = np.zeros((d, 0))
    for _ in range(k // 2):
        residual = proj - chosen @ (chosen.T @ proj)
        norms = np.linalg.norm(residual, axis=0)
        best = norms.max()
        if best <= tol.zero_abs:
            raise StructureError("ran out of directions while pairing the subspace")
        idx = int(np.flatnonzero(norms >= best * (1.0 - _TIE_MARGIN))[0])
        v = residual[:, idx] / norms[idx]
        # second Gram-Schmidt pass; J v inherits orthogonality from v
        v = v - chosen @ (chosen.T @ v)
        v /= np.linalg.norm(v)
        chosen = np.column_stack([chosen, v, J @ v])
    return chosen


def is_symplectic_orthogonal(T, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """True when ``T.T T = I`` and ``T.T sigma T = sigma`` to ``zero_abs``."""
    T = np.asarray(T, dtype=float)
    d = T.shape[0]
    if T.shape != (d, d) or d % 2:
        return False
    S = sigma(d // 2)
    return (
        max_abs(T.T @ T - np.eye(d)) <= tol.zero_abs
        and max_abs(T.T @ S @ T - S) <= tol.zero_abs
    )
