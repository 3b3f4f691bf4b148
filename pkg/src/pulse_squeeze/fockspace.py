"""Explicit truncated-Fock circuit construction for small instances.

Builds the three-mode beam-splitter/squeezer sequence as dense unitaries
and traces out the vacuum ports.  This is the brute-force cross-check for
the characteristic-function propagation path; keep dims small (<= 14 per
mode) or the tensor space explodes.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .states import QuantumState, destroy

__all__ = [
    "beamsplitter_unitary",
    "squeezer_unitary",
    "three_mode_output_state",
]


def _two_mode_bs(dim: int, theta: float, phi: float) -> np.ndarray:
    """exp(theta (e^{i phi} a^dag b - e^{-i phi} a b^dag)) on H_a (x) H_b.

    Heisenberg action: U^dag a U = cos(theta) a + e^{i phi} sin(theta) b.
    """
    a = np.kron(destroy(dim), np.eye(dim))
    b = np.kron(np.eye(dim), destroy(dim))
    gen = theta * (np.exp(1j * phi) * a.conj().T @ b - np.exp(-1j * phi) * a @ b.conj().T)
    return expm(gen)


def _single_mode_squeeze(dim: int, r: float) -> np.ndarray:
    """exp(r/2 (a^dag^2 - a^2)); Heisenberg: U^dag a U = cosh(r) a + sinh(r) a^dag."""
    a = destroy(dim)
    gen = 0.5 * r * (a.conj().T @ a.conj().T - a @ a)
    return expm(gen)


def _swap_last_two(dim: int) -> np.ndarray:
    """Index permutation exchanging modes 2 and 3 of a three-mode tensor basis."""
    return np.arange(dim**3).reshape(dim, dim, dim).transpose(0, 2, 1).ravel()


def beamsplitter_unitary(dim: int, theta: float, phi: float, pair: str) -> np.ndarray:
    """Three-mode embedding of a two-mode beam splitter on (u,k) or (u,s)."""
    u2 = _two_mode_bs(dim, theta, phi)
    full = np.kron(u2, np.eye(dim))
    if pair == "uk":
        return full
    if pair == "us":
        perm = _swap_last_two(dim)
        return full[np.ix_(perm, perm)]
    raise ValueError(f"unknown pair {pair!r}")


def squeezer_unitary(dim: int, r: float, mode: int) -> np.ndarray:
    """Three-mode embedding of a single-mode squeezer on mode 0, 1 or 2."""
    s = _single_mode_squeeze(dim, r)
    eye = np.eye(dim)
    ops = [eye, eye, eye]
    ops[mode] = s
    return np.kron(np.kron(ops[0], ops[1]), ops[2])


def phase_unitary(dim: int, phi: float, mode: int) -> np.ndarray:
    """Three-mode embedding of exp(i phi n) on one mode (vacuum-port gauge)."""
    ph = np.diag(np.exp(1j * phi * np.arange(dim)))
    eye = np.eye(dim)
    ops = [eye, eye, eye]
    ops[mode] = ph
    return np.kron(np.kron(ops[0], ops[1]), ops[2])


def three_mode_output_state(params: dict, rho_u: np.ndarray, dim: int) -> QuantumState:
    """Apply the circuit to rho_u (x) |0><0| (x) |0><0| and trace out ports.

    The circuit and conventions match
    :func:`pulse_squeeze.decomposition.reconstruct_row`; the reduced state of
    mode u is the brute-force counterpart of the characteristic-function
    propagation.
    """
    u = (
        beamsplitter_unitary(dim, params["theta3"], params["phi3"], "us")
        @ beamsplitter_unitary(dim, params["theta2"], params["phi2"], "uk")
        @ squeezer_unitary(dim, params["r1"], 0)
        @ squeezer_unitary(dim, params["r2"], 1)
        @ beamsplitter_unitary(dim, params["theta1"], params["phi1"], "uk")
        @ phase_unitary(dim, params.get("phi_k", 0.0), 1)
        @ phase_unitary(dim, params.get("phi_u", 0.0), 0)
    )
    vac = np.zeros((dim, dim), dtype=complex)
    vac[0, 0] = 1.0
    rho3 = np.kron(np.kron(rho_u, vac), vac)
    out = u @ rho3 @ u.conj().T
    out6 = out.reshape(dim, dim, dim, dim, dim, dim)
    reduced = np.einsum("iklmkl->im", out6)
    reduced = 0.5 * (reduced + reduced.conj().T)
    reduced /= np.real(np.trace(reduced))
    # Truncation can leave tiny negative weights; clamp like the
    # reconstruction path does.
    vals, vecs = np.linalg.eigh(reduced)
    vals = np.clip(vals, 0.0, None)
    reduced = (vecs * vals) @ vecs.conj().T
    reduced /= np.real(np.trace(reduced))
    return QuantumState(reduced)
