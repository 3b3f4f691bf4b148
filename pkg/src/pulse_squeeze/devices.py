"""Kernel builders for the three amplifier archetypes: OPO, OPA, TWPA.

The cavity device (OPO) is integrated as a chain of exactly symplectic
steps: a half-step of the internal detuning/gain dynamics, an exact
decay/exchange rotation between the cavity and the current field slice,
and a second half-step.  The initial-cavity port is closed by feeding the
(vacuum) end-of-window cavity back into it, which keeps the grid-to-grid
map symplectic to round-off instead of leaking one vacuum mode at the
window edge.  The chain converges to the continuum input-output kernels
at second order in dt.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .grids import TemporalGrid
from .kernels import (
    BogoliubovKernels,
    compose,
    renormalize_symplectic,
    verify_symplectic,
)

__all__ = [
    "GaussianPump",
    "OpoParams",
    "OpaParams",
    "TwpaParams",
    "GridTooShortError",
    "build_opo",
    "build_opa",
    "build_twpa",
    "default_opo_grid",
]

# Residual cavity amplitude / anomalous content tolerated at the window end.
RING_DOWN_TOL = 1e-3

# Stage count beyond which composition chains get re-projected onto the
# symplectic manifold after every accumulation step.
RENORM_CHAIN_LENGTH = 50


class GridTooShortError(ValueError):
    """Raised when the grid truncates the pump or the cavity ring-down."""


@dataclass(frozen=True)
class GaussianPump:
    """Gaussian drive pulse with a fixed integrated area.

    The profile is ``area / sqrt(2 pi width^2) * exp(-(t-center)^2 / (2 width^2))``
    so that the total pulse area equals ``area`` regardless of the width.
    """

    area: float
    center: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("pump width must be positive")

    def profile(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        norm = self.area / np.sqrt(2.0 * np.pi * self.width**2)
        return norm * np.exp(-((t - self.center) ** 2) / (2.0 * self.width**2))

    def step_areas(self, grid: TemporalGrid) -> np.ndarray:
        """Exact pulse area inside each dt-slice centered on a grid point.

        Integrating analytically (rather than sampling the profile) keeps
        pumps much narrower than dt honest: the sum of slice areas is the
        full pulse area whenever the grid covers the pump support.
        """
        dt = grid.dt
        edges = np.linspace(grid.t_start - dt / 2, grid.t_end + dt / 2, grid.n_points + 1)
        z = (edges - self.center) / (np.sqrt(2.0) * self.width)
        cumulative = 0.5 * self.area * (1.0 + erf(z))
        return np.diff(cumulative)


@dataclass(frozen=True)
class OpoParams:
    """Pulse-pumped degenerate OPO: detuning and decay in cavity units."""

    detuning: float
    decay: float
    pump: GaussianPump

    def __post_init__(self):
        if self.decay <= 0:
            raise ValueError("cavity decay rate must be positive")


@dataclass(frozen=True)
class OpaParams:
    """Single-pass amplifier in the frequency domain (no cavity).

    Detuning and spectral width are measured in units of the seed's
    spectral width; ``gain`` scales the pair-creation amplitude.
    """

    gain: float
    pump_center_detuning: float
    pump_spectral_width: float

    def __post_init__(self):
        if self.pump_spectral_width <= 0:
            raise ValueError("pump spectral width must be positive")


@dataclass(frozen=True)
class TwpaParams:
    """Traveling-wave amplifier modeled as identical concatenated OPO stages."""

    stage: OpoParams
    n_stages: int
    per_stage_gain: float

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValueError("need at least one stage")


def default_opo_grid(gamma: float = 1.0, n_points: int = 1024) -> TemporalGrid:
    """Window covering the pump region and the cavity ring-down tail."""
    return TemporalGrid(-10.0 / gamma, 30.0 / gamma, n_points)


def _gain_half_step(delta: float, xi_bar: float, tau: float) -> tuple[complex, float]:
    """Entries (E11, E12) of exp(tau * [[-i delta, xi], [xi, i delta]]).

    The generator squares to (xi^2 - delta^2) * identity, giving a closed
    form; E22 = conj(E11) and E21 = E12.
    """
    w = xi_bar * xi_bar - delta * delta
    lam = np.sqrt(complex(w))
    z = lam * tau
    if abs(z) < 1e-8:
        ch = 1.0 + z * z / 2.0
        shf = tau * (1.0 + z * z / 6.0)
    else:
        ch = np.cosh(z)
        shf = np.sinh(z) / lam
    e11 = complex(ch - 1j * delta * shf)
    e12 = float(np.real(xi_bar * shf))
    return e11, e12


def build_opo(params: OpoParams, grid: TemporalGrid) -> BogoliubovKernels:
    """Input-output kernels of a pulse-pumped OPO cavity.

    Raises
    ------
    GridTooShortError
        If the pump support sticks out of the window or the cavity has not
        rung down at the window end (residual above ``RING_DOWN_TOL``); the
        message suggests how far to extend the grid.
    """
    gamma = params.decay
    n = grid.n_points
    dt = grid.dt

    areas = params.pump.step_areas(grid)
    missing = abs(float(areas.sum()) - params.pump.area)
    if missing > 1e-6 * max(abs(params.pump.area), 1e-12):
        raise GridTooShortError(
            f"grid covers only {areas.sum():.6g} of the pump area "
            f"{params.pump.area:.6g}; widen the window around t = {params.pump.center:g}"
        )
    xi_bar = areas / dt

    eta = float(np.exp(-gamma * dt / 2.0))
    s = float(np.sqrt(1.0 - eta * eta))

    # Coefficient rows of the running cavity operator over the n field
    # slices plus the initial-cavity port (column n).
    phi = np.zeros(n + 1, dtype=complex)
    psi = np.zeros(n + 1, dtype=complex)
    phi[n] = 1.0
    out_f = np.zeros((n, n + 1), dtype=complex)
    out_g = np.zeros((n, n + 1), dtype=complex)

    for k in range(n):
        e11, e12 = _gain_half_step(params.detuning, xi_bar[k], dt / 2.0)
        phi, psi = e11 * phi + e12 * psi.conj(), e11 * psi + e12 * phi.conj()
        # Exact cavity <-> slice exchange; the emitted slice leaves before
        # the second half-step.
        out_f[k] = s * phi
        out_f[k, k] += eta
        out_g[k] = s * psi
        phi = eta * phi
        phi[k] -= s
        psi = eta * psi
        phi, psi = e11 * phi + e12 * psi.conj(), e11 * psi + e12 * phi.conj()

    anomalous = float(np.linalg.norm(psi[:n]))
    loop = np.array([[phi[n], psi[n]], [np.conj(psi[n]), np.conj(phi[n])]])
    loop_norm = float(np.linalg.norm(loop, 2))
    if loop_norm > RING_DOWN_TOL or anomalous > RING_DOWN_TOL:
        worst = max(loop_norm, anomalous)
        extend = 2.0 * np.log(worst / RING_DOWN_TOL) / gamma + 5.0 / gamma
        raise GridTooShortError(
            f"cavity ring-down truncated (residual {worst:.2e} > {RING_DOWN_TOL:g}); "
            f"extend t_end by about {extend:.3g}"
        )

    # Close the initial-cavity port with the (vacuum) final cavity field so
    # the n x n map stays symplectic.  The loop gain is the ring-down
    # residual, far below RING_DOWN_TOL.
    rhs = np.vstack([phi[:n], psi[:n]])
    c0 = np.linalg.solve(np.eye(2) - loop, rhs)
    f_b = out_f[:, :n] + np.outer(out_f[:, n], c0[0]) + np.outer(out_g[:, n], c0[1].conj())
    g_star_b = out_g[:, :n] + np.outer(out_f[:, n], c0[1]) + np.outer(out_g[:, n], c0[0].conj())

    return BogoliubovKernels(grid, f_b / dt, g_star_b.conj() / dt)


def build_opa(params: OpaParams, grid: TemporalGrid) -> BogoliubovKernels:
    """Kernels of a single-pass amplifier, grid interpreted as frequency.

    The pair-creation kernel ``J(w, w') = gain * exp(-(w + w' - 2 d)^2 /
    (2 s_p^2))`` (flat phase matching, pump detuned by ``d`` from the seed
    carrier) is exponentiated exactly through its normal modes: J is real
    symmetric, so its eigenbasis gives the independent squeezers.
    """
    w = grid.points
    dw = grid.dt
    pump = np.exp(
        -((w[:, None] + w[None, :] - 2.0 * params.pump_center_detuning) ** 2)
        / (2.0 * params.pump_spectral_width**2)
    )
    J = params.gain * pump

    lam, O = np.linalg.eigh(J)
    sigma = 2.0 * np.abs(lam) * dw
    if sigma.max() > 300.0:
        raise ValueError(
            f"gain too large for this grid: squeeze exponent {sigma.max():.3g} "
            "would overflow; reduce gain or refine the grid"
        )
    # Takagi phases absorbing -2i * sign(lam): P = -2i dw J = U diag(sigma) U^T.
    phase = np.exp(-1j * np.pi / 4.0 * np.sign(lam))
    U = O * phase[None, :]
    f_b = (U * np.cosh(sigma)[None, :]) @ U.conj().T
    g_star_b = (U * np.sinh(sigma)[None, :]) @ U.T
    kernels = BogoliubovKernels(grid, f_b / dw, g_star_b.conj() / dw)

    report = verify_symplectic(kernels)
    if report.max_residual > 1e-5:
        raise ValueError(
            f"amplifier exponential lost symplecticity "
            f"(residual {report.max_residual:.2e}); gain too large for grid resolution"
        )
    return kernels


def build_twpa(params: TwpaParams, grid: TemporalGrid) -> BogoliubovKernels:
    """Fold ``n_stages`` identical OPO stages into one kernel pair.

    Stage folding uses binary exponentiation (composition is associative),
    re-projecting onto the symplectic manifold after each accumulation for
    chains longer than ``RENORM_CHAIN_LENGTH`` stages.
    """
    stage_params = dataclasses.replace(
        params.stage,
        pump=dataclasses.replace(params.stage.pump, area=params.per_stage_gain),
    )
    base = build_opo(stage_params, grid)
    renorm = params.n_stages > RENORM_CHAIN_LENGTH

    result: BogoliubovKernels | None = None
    power = base
    m = params.n_stages
    while m:
        if m & 1:
            result = power if result is None else compose(power, result)
            if renorm:
                result = renormalize_symplectic(result)
        m >>= 1
        if m:
            power = compose(power, power)
            if renorm:
                power = renormalize_symplectic(power)
    assert result is not None
    return result
