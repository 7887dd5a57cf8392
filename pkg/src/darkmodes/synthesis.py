"""
Building composite systems and engineering Hamiltonians.

Interconnections act on the ``(A, B, C)`` triplets. A *port* is a tuple of
input channel indices of a system (each channel carries two quadratures).
The composite Hamiltonian is recovered from the closed-loop drift, so every
result is again a :class:`QuantumLinearSystem` with ``G`` set. Unless stated
otherwise the whole composite is taken as the designated subsystem.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError
from .model import QuantumLinearSystem, hamiltonian_from_triplet, system_from_C
from .symplectic import (
    DEFAULT_TOLERANCES,
    Tolerances,
    as_real_matrix,
    kernel_basis,
    max_abs,
)

KINDS = ("cascade", "direct", "feedback1", "cross_feedback")


@dataclass(frozen=True, eq=False)
class InterconnectionSpec:
    """Recipe for one of the four interconnections, see :func:`interconnect`."""

    kind: str
    operands: tuple[QuantumLinearSystem, QuantumLinearSystem]
    coupling: np.ndarray | None = None
    ports: dict | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown interconnection kind {self.kind!r}; expected one of {KINDS}")


def _rows(port):
    return [r for i in port for r in (2 * i, 2 * i + 1)]


def _port_blocks(sys, port):
    rows = _rows(port)
    return sys.B[:, rows], sys.C[rows, :]


def _check_ports(sys, ports, name):
    flat = [i for p in ports for i in p]
    if sorted(flat) != list(range(sys.m)):
        raise DimensionError(
            f"ports {tuple(tuple(p) for p in ports)} of {name} must partition its {sys.m} channels"
        )


def _default_halves(sys):
    if sys.m % 2:
        raise DimensionError(f"cannot split {sys.m} channels into two equal ports; give ports explicitly")
    h = sys.m // 2
    return tuple(range(h)), tuple(range(h, sys.m))


def _composite(A, C, labels, tol):
    G = hamiltonian_from_triplet(A, C)
    if max_abs(G - G.T) > tol.zero_threshold(G, A):
        raise InvalidInputError("composite is not physically realizable (operands lack consistent B)")
    n = A.shape[0] // 2
    return system_from_C((G + G.T) / 2.0, C, n1=n, labels=labels, tol=tol)


def _labels(sys1, sys2):
    def default(sys):
        return sys.labels == tuple(str(i + 1) for i in range(sys.n))

    if default(sys1) and default(sys2):
        return ()  # renumber 1..n
    labels = sys1.labels + sys2.labels
    if len(set(labels)) == len(labels):
        return labels
    return tuple(f"{lab}a" for lab in sys1.labels) + tuple(f"{lab}b" for lab in sys2.labels)


def cascade(sys1: QuantumLinearSystem, sys2: QuantumLinearSystem,
            tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """Feed every output channel of `sys1` into the matching input of `sys2`."""
    if sys1.m != sys2.m:
        raise DimensionError(f"cascade needs equal channel counts, got {sys1.m} and {sys2.m}")
    n1, n2 = sys1.A.shape[0], sys2.A.shape[0]
    A = np.block([[sys1.A, np.zeros((n1, n2))], [sys2.B @ sys1.C, sys2.A]])
    C = np.hstack([sys1.C, sys2.C])
    return _composite(A, C, _labels(sys1, sys2), tol)


def direct_coupling(sys1: QuantumLinearSystem, sys2: QuantumLinearSystem, G_int,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """
    Join two systems through an interaction Hamiltonian.

    The composite keeps each operand's channels and is partitioned with
    `sys1` as subsystem D and `sys2` as subsystem N.
    """
    if sys1.G is None or sys2.G is None:
        raise InvalidInputError("direct coupling needs the operands' Hamiltonians")
    d1, d2 = sys1.A.shape[0], sys2.A.shape[0]
    dim = d1 + d2
    G_int = as_real_matrix(G_int, "G_int")
    if G_int.shape != (dim, dim):
        raise DimensionError(f"G_int has shape {G_int.shape}, expected {(dim, dim)}")
    if max_abs(G_int - G_int.T) > tol.zero_threshold(G_int):
        raise InvalidInputError("G_int is not symmetric")
    if max_abs(G_int[:d1, :d1]) > tol.zero_threshold(G_int) or max_abs(G_int[d1:, d1:]) > tol.zero_threshold(G_int):
        raise InvalidInputError("G_int must only couple the two operands (off-diagonal blocks)")
    G_D = np.zeros((dim, dim))
    G_D[:d1, :d1] = sys1.G
    G_N = np.zeros((dim, dim))
    G_N[d1:, d1:] = sys2.G
    C = np.block([
        [sys1.C, np.zeros((sys1.C.shape[0], d2))],
        [np.zeros((sys2.C.shape[0], d1)), sys2.C],
    ])
    return system_from_C(
        G_D + G_N + G_int, C, n1=sys1.n, G_D=G_D, G_N=G_N, G_int=G_int,
        labels=_labels(sys1, sys2), tol=tol,
    )


def feedback_loop(plant: QuantumLinearSystem, controller: QuantumLinearSystem,
                  plant_ports: Sequence[Sequence[int]] | None = None,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """
    Route plant port 1 through the controller and back into plant port 2.

    ``plant_ports = (port1, port2)`` defaults to the first and second half of
    the plant channels; the controller uses all its channels as one port. The
    external input enters port 1 and the external output leaves port 2.
    """
    port1, port2 = plant_ports if plant_ports is not None else _default_halves(plant)
    _check_ports(plant, (port1, port2), "plant")
    if not (len(port1) == len(port2) == controller.m):
        raise DimensionError(
            f"port sizes {len(port1)}, {len(port2)} and controller channels {controller.m} must match"
        )
    B1, C1 = _port_blocks(plant, port1)
    B2, C2 = _port_blocks(plant, port2)
    B3, C3 = controller.B, controller.C
    A = np.block([[plant.A + B2 @ C1, B2 @ C3], [B3 @ C1, controller.A]])
    C = np.hstack([C1 + C2, C3])
    return _composite(A, C, _labels(plant, controller), tol)


def cross_feedback(sys1: QuantumLinearSystem, sys2: QuantumLinearSystem,
                   ports1: Sequence[Sequence[int]] | None = None,
                   ports2: Sequence[Sequence[int]] | None = None,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    """
    Cross-wire two two-port systems.

    Output of `sys1` port 1 drives `sys2` port 3 and output of `sys2` port 4
    drives `sys1` port 2. The composite inputs are (port 1, port 4), paired
    with outputs leaving port 3 and port 2 respectively.
    """
    p1, p2 = ports1 if ports1 is not None else _default_halves(sys1)
    p3, p4 = ports2 if ports2 is not None else _default_halves(sys2)
    _check_ports(sys1, (p1, p2), "sys1")
    _check_ports(sys2, (p3, p4), "sys2")
    if len(p1) != len(p3) or len(p2) != len(p4):
        raise DimensionError(
            f"port map mismatch: 1->3 has sizes {len(p1)}->{len(p3)}, 4->2 has {len(p4)}->{len(p2)}"
        )
    B1, C1 = _port_blocks(sys1, p1)
    B2, C2 = _port_blocks(sys1, p2)
    B3, C3 = _port_blocks(sys2, p3)
    B4, C4 = _port_blocks(sys2, p4)
    A = np.block([[sys1.A, B2 @ C4], [B3 @ C1, sys2.A]])
    C = np.block([[C1, C3], [C2, C4]])
    return _composite(A, C, _labels(sys1, sys2), tol)


def interconnect(spec: InterconnectionSpec, tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumLinearSystem:
    a, b = spec.operands
    ports = spec.ports or {}
    if spec.kind == "cascade":
        return cascade(a, b, tol)
    if spec.kind == "direct":
        if spec.coupling is None:
            raise InvalidInputError("direct coupling needs G_int")
        return direct_coupling(a, b, spec.coupling, tol)
    if spec.kind == "feedback1":
        return feedback_loop(a, b, ports.get("plant"), tol)
    return cross_feedback(a, b, ports.get("sys1"), ports.get("sys2"), tol)


def _check_orthonormal(P, name, tol):
    P = as_real_matrix(P, name)
    if max_abs(P.T @ P - np.eye(P.shape[1])) > tol.zero_abs:
        raise InvalidInputError(f"{name} must have orthonormal columns")
    return P


def hamiltonian_invariant_family(P1, Z, symmetrize=False,
                                 tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    ``G = (I - P1 P1^T) Z (I - P1 P1^T)``, every solution of ``P1^T G = 0``.

    `Z` must be symmetric so that `G` is a Hamiltonian matrix. With
    ``symmetrize=True`` a general `Z` is accepted and the result replaced by
    ``(G + G^T) / 2`` (a warning notes the correction).
    """
    P1 = _check_orthonormal(P1, "P1", tol)
    Z = as_real_matrix(Z, "Z")
    dim = P1.shape[0]
    if Z.shape != (dim, dim):
        raise DimensionError(f"Z has shape {Z.shape}, expected {(dim, dim)}")
    asym = max_abs(Z - Z.T)
    if asym > tol.zero_threshold(Z):
        if not symmetrize:
            raise InvalidInputError("Z is not symmetric (pass symmetrize=True to accept it)")
        warnings.warn(f"Z was asymmetric (max {asym:.3g}); result symmetrized", stacklevel=2)
    proj = np.eye(dim) - P1 @ P1.T
    G = proj @ Z @ proj
    return (G + G.T) / 2.0


@dataclass(frozen=True, eq=False)
class RangeInvarianceReport:
    holds: bool
    residual: float
    threshold: float
    M: np.ndarray


def hamiltonian_range_invariant_check(G, P2, tol: Tolerances = DEFAULT_TOLERANCES) -> RangeInvarianceReport:
    """
    Whether ``G P2 = P2 M`` for some ``M``; if so ``P1^T G P2 = 0`` for every P1 orthogonal to P2.

    ``M = P2^T G P2`` is returned either way.
    """
    G = as_real_matrix(G, "G")
    P2 = _check_orthonormal(P2, "P2", tol)
    GP2 = G @ P2
    M = P2.T @ GP2
    residual = max_abs(GP2 - P2 @ M)
    threshold = tol.zero_threshold(G)
    return RangeInvarianceReport(residual <= threshold, residual, threshold, M)


def dark_hamiltonian_basis(P1, P2, tol: Tolerances = DEFAULT_TOLERANCES) -> list[np.ndarray]:
    """
    Basis of all symmetric ``G`` with ``P1^T G P2 = 0`` (experimental).

    Dense null-space computation over the ``d(d+1)/2`` dimensional space of
    symmetric matrices; limited to ``d = 2n <= 20``.
    """
    P1 = _check_orthonormal(P1, "P1", tol)
    P2 = _check_orthonormal(P2, "P2", tol)
    dim = P1.shape[0]
    if dim > 20:
        raise DimensionError(f"dark_hamiltonian_basis is limited to 2n <= 20, got {dim}")
    iu = np.triu_indices(dim)
    sym_basis = []
    for i, j in zip(*iu):
        E = np.zeros((dim, dim))
        E[i, j] = E[j, i] = 1.0
        sym_basis.append(E)
    L = np.column_stack([(P1.T @ E @ P2).ravel() for E in sym_basis])
    if L.shape[0] == 0:
        return sym_basis
    null = kernel_basis(L, tol)
    return [sum(c * E for c, E in zip(col, sym_basis)) for col in null.T]
