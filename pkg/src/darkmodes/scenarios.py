"""Ready-made systems: the optomechanical dark-mode setup and single-oscillator building blocks."""
from __future__ import annotations

import numpy as np

from .model import QuantumLinearSystem, build_system
from .synthesis import cross_feedback


def optomechanical(gamma1=1.0, gamma2=2.0, m1=1.0, m2=1.0, omega1=2.0, omega2=2.0,
                   m3=1.0, omega3=2.0, kappa=1.0) -> QuantumLinearSystem:
    """
    Two optical modes coupled through the position of a damped mechanical mode.

    Oscillators 1, 2 are the cavities (subsystem D), oscillator 3 the mirror
    (subsystem N), which leaks into a bath through ``L = sqrt(kappa) b_3``.
    ``H_D = p1^2/m1 + m1 w1^2 x1^2 + p2^2/m2 + m2 w2^2 x2^2`` and the
    linearised radiation-pressure interaction couples ``x_i`` to ``x_3``
    with strength ``gamma_i``.
    """
    G_D = np.diag([m1 * omega1**2, 1.0 / m1, m2 * omega2**2, 1.0 / m2, 0.0, 0.0])
    G_N = np.diag([0.0, 0.0, 0.0, 0.0, m3 * omega3**2, 1.0 / m3])
    G_int = np.zeros((6, 6))
    G_int[0, 4] = G_int[4, 0] = gamma1
    G_int[2, 4] = G_int[4, 2] = gamma2
    c = np.sqrt(kappa / 2.0) * np.array([0, 0, 0, 0, 1, 1j])
    return build_system(None, [c], 2, G_D=G_D, G_N=G_N, G_int=G_int)


def oscillator(G, kappa=1.0, ports=1) -> QuantumLinearSystem:
    """One oscillator with `ports` identical channels ``L = sqrt(kappa)(x + i p)/sqrt(2)``."""
    c = np.sqrt(kappa / 2.0) * np.array([1, 1j])
    return build_system(np.asarray(G, dtype=float), [c] * ports)


def cross_feedback_pair(G1, G2, kappa=1.0) -> QuantumLinearSystem:
    """Two two-port oscillators in cross feedback (port 1 -> port 3, port 4 -> port 2)."""
    return cross_feedback(oscillator(G1, kappa, 2), oscillator(G2, kappa, 2))
