"""Kernel pairs (F, G) for multi-mode Bogoliubov transformations.

A device acting on a continuum field maps the input operators as

    a_out(x) = int dx' F(x, x') a_in(x') + int dx' G*(x, x') a_in^dag(x'),

which on a grid becomes ``a_out = (F a_in + G* a_in^dag) dt`` with the
delta function stored explicitly as ``identity / dt``.  Commutator
preservation pins the two symplectic conditions checked by
:func:`verify_symplectic`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grids import (
    DegenerateModeError,
    GridMismatchError,
    ModeFunction,
    TemporalGrid,
)

__all__ = [
    "BogoliubovKernels",
    "PullbackResult",
    "SymplecticReport",
    "identity_kernels",
    "ideal_squeezer_kernels",
    "compose",
    "verify_symplectic",
    "renormalize_symplectic",
    "pullback_output_mode",
    "apply_to_mode",
    "save_kernels",
    "load_kernels",
]

# A pullback with xi below this is treated as purely dispersive (no g mode).
DISPERSIVE_XI_TOL = 1e-9


@dataclass(frozen=True)
class BogoliubovKernels:
    """Transfer object for a quadratic optical element.

    ``F`` and ``G`` hold the sampled kernels F(x, x') and G(x, x'); the
    operator action carries the quadrature weight dt, so the identity map
    stores ``F = eye / dt``.
    """

    grid: TemporalGrid
    F: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.n_points
        F = np.ascontiguousarray(np.asarray(self.F, dtype=complex))
        G = np.ascontiguousarray(np.asarray(self.G, dtype=complex))
        if F.shape != (n, n) or G.shape != (n, n):
            raise ValueError("F and G must be n x n for an n-point grid")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)


@dataclass(frozen=True)
class SymplecticReport:
    """Frobenius-relative residuals of the two commutator-preservation conditions."""

    commutator_residual: float
    pairing_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.commutator_residual, self.pairing_residual)


@dataclass(frozen=True)
class PullbackResult:
    """Input-side picture ``a_v_out = zeta a_f + xi a_g^dag`` of an output mode.

    ``zeta`` and ``xi`` are real non-negative (phases live in f and g) and
    satisfy ``zeta^2 - xi^2 = 1``; ``g`` is None for dispersive kernels.
    """

    zeta: float
    f: ModeFunction
    xi: float
    g: ModeFunction | None


def identity_kernels(grid: TemporalGrid) -> BogoliubovKernels:
    """Zero-interaction element: F is the grid delta, G vanishes."""
    n = grid.n_points
    return BogoliubovKernels(grid, np.eye(n, dtype=complex) / grid.dt, np.zeros((n, n), complex))


def ideal_squeezer_kernels(
    grid: TemporalGrid, mode: ModeFunction, r: float
) -> BogoliubovKernels:
    """Single-mode squeezer acting only on ``mode``.

    The seeded mode transforms as ``a -> cosh(r) a + sinh(r) a^dag`` while
    every orthogonal mode passes through unchanged.
    """
    if mode.grid != grid:
        raise GridMismatchError("mode does not live on the target grid")
    if not np.isfinite(r):
        raise ValueError("squeeze parameter must be finite")
    u = mode.amplitudes
    n = grid.n_points
    F = np.eye(n, dtype=complex) / grid.dt + (np.cosh(r) - 1.0) * np.outer(u, u.conj())
    g_star = np.sinh(r) * np.outer(u, u)
    return BogoliubovKernels(grid, F, g_star.conj())


def compose(second: BogoliubovKernels, first: BogoliubovKernels) -> BogoliubovKernels:
    """Kernels of ``second`` applied after ``first`` (matrix products carry dt)."""
    if second.grid != first.grid:
        raise GridMismatchError("cannot compose kernels on different grids")
    dt = first.grid.dt
    F = (second.F @ first.F + second.G.conj() @ first.G) * dt
    G = (second.F.conj() @ first.G + second.G @ first.F) * dt
    return BogoliubovKernels(first.grid, F, G)


def verify_symplectic(k: BogoliubovKernels) -> SymplecticReport:
    """Residuals of ``F F^dag - G* G^T = delta`` and ``F (G*)^T = G* F^T``."""
    dt = k.grid.dt
    n = k.grid.n_points
    delta_norm = np.sqrt(n) / dt
    gs = k.G.conj()
    c1 = dt * (k.F @ k.F.conj().T - gs @ gs.conj().T)
    c1[np.diag_indices(n)] -= 1.0 / dt
    c2 = dt * (k.F @ gs.T - gs @ k.F.T)
    return SymplecticReport(
        commutator_residual=float(np.linalg.norm(c1) / delta_norm),
        pairing_residual=float(np.linalg.norm(c2) / delta_norm),
    )


def renormalize_symplectic(k: BogoliubovKernels) -> BogoliubovKernels:
    """Re-project drifted kernels onto the symplectic manifold.

    Left-multiplies by the inverse Hermitian square root of
    ``F F^dag - G* G^T`` (the polar correction of the doubled-up matrix),
    which restores the commutator condition exactly and preserves the
    pairing condition.
    """
    dt = k.grid.dt
    A = k.F * dt
    B = k.G.conj() * dt
    N = A @ A.conj().T - B @ B.conj().T
    N = 0.5 * (N + N.conj().T)
    vals, vecs = np.linalg.eigh(N)
    if np.any(vals <= 0):
        raise ValueError("kernels drifted too far from symplectic to renormalize")
    X = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return BogoliubovKernels(k.grid, (X @ A) / dt, (X @ B).conj() / dt)


def apply_to_mode(k: BogoliubovKernels, u: ModeFunction) -> tuple[np.ndarray, np.ndarray]:
    """Forward images ``(F u, G u)`` (dt-weighted), unnormalized.

    These are the seeded-field amplitudes entering the output coherence
    function for an input occupying ``u``.
    """
    if u.grid != k.grid:
        raise GridMismatchError("mode does not live on the kernel grid")
    dt = k.grid.dt
    return dt * (k.F @ u.amplitudes), dt * (k.G @ u.amplitudes)


def pullback_output_mode(k: BogoliubovKernels, v: ModeFunction) -> PullbackResult:
    """Express the output-mode operator of ``v`` through input-mode operators.

    Computes ``f*(x) = sum_x' v*(x') F(x', x) dt / zeta`` and
    ``g(x) = sum_x' v*(x') G*(x', x) dt / xi`` with zeta, xi the
    pre-normalization norms, so that ``a_v_out = zeta a_f + xi a_g^dag``.
    """
    if v.grid != k.grid:
        raise GridMismatchError("mode does not live on the kernel grid")
    dt = k.grid.dt
    f_raw = dt * (k.F.conj().T @ v.amplitudes)
    g_raw = dt * (k.G.conj().T @ v.amplitudes.conj())
    f_mode = ModeFunction(k.grid, f_raw)
    zeta = f_mode.norm
    if zeta < DISPERSIVE_XI_TOL:
        raise DegenerateModeError(
            "pullback produced zeta = 0, which violates commutator preservation"
        )
    f = ModeFunction(k.grid, f_raw / zeta)
    g_mode = ModeFunction(k.grid, g_raw)
    xi = g_mode.norm
    if xi < DISPERSIVE_XI_TOL:
        return PullbackResult(zeta=zeta, f=f, xi=0.0, g=None)
    return PullbackResult(zeta=zeta, f=f, xi=xi, g=ModeFunction(k.grid, g_raw / xi))


def save_kernels(path: str | Path, k: BogoliubovKernels) -> None:
    """Write kernels plus their grid descriptor to a binary .npz container."""
    np.savez_compressed(
        Path(path),
        t_start=k.grid.t_start,
        t_end=k.grid.t_end,
        n_points=k.grid.n_points,
        F=k.F,
        G=k.G,
    )


def load_kernels(path: str | Path) -> BogoliubovKernels:
    with np.load(Path(path)) as data:
        grid = TemporalGrid(
            float(data["t_start"]), float(data["t_end"]), int(data["n_points"])
        )
        return BogoliubovKernels(grid, data["F"], data["G"])
