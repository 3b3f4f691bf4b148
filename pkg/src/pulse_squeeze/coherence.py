"""Output coherence function and its seeded / squeezed-vacuum mode split.

The first-order coherence of the output field is assembled from the input
pulse's second moments and the device kernels:

    g1(x1, x2) = n f~*(x1) f~(x2) + m* f~*(x1) g~*(x2)
               + m g~(x1) f~(x2) + n g~(x1) g~*(x2)
               + sum_x' G(x1, x') G*(x2, x') dt

with ``f~ = F u`` and ``g~ = G u`` (dt-weighted) and n, m the input
occupation and anomalous moment.  The first four terms depend on the input
state and have rank at most two; the last is the squeezed vacuum the
device emits on its own.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import HermitianKernel, ModeFunction, eigendecompose
from .kernels import BogoliubovKernels, apply_to_mode
from .states import QuantumState, destroy

__all__ = [
    "InputMoments",
    "ModeSpectrum",
    "input_moments",
    "g1_total",
    "vacuum_kernel",
    "seeded_vacuum_split",
    "single_mode_condition",
    "occupation_ratio",
]

# Occupations below this fraction of the total are reported as unpopulated.
OCCUPATION_CUT = 1e-8

# The seeded kernel may dip slightly negative for states with |m| > n (the
# even cat exceeds the single-mode condition by ~1e-5 relative); anything
# below this relative level is a real error.
SEEDED_NEG_TOL = 1e-4


@dataclass(frozen=True)
class InputMoments:
    """Second moments of the input mode: n = <a^dag a>, m = <a a>."""

    n: float
    m: complex

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("occupation must be non-negative")
        bound = np.sqrt(self.n * (self.n + 1.0))
        if abs(self.m) > bound * (1.0 + 1e-9) + 1e-12:
            raise ValueError(
                f"|m| = {abs(self.m):.6g} violates the uncertainty bound "
                f"sqrt(n(n+1)) = {bound:.6g}"
            )


@dataclass(frozen=True)
class ModeSpectrum:
    """Occupations and mode shapes of the output field.

    ``seeded`` holds the (at most two) input-fed modes, ``vacuum`` the
    squeezed-vacuum ladder truncated at ``OCCUPATION_CUT`` of the total.
    """

    seeded: list[tuple[float, ModeFunction]]
    vacuum: list[tuple[float, ModeFunction]]
    seeded_total: float
    vacuum_total: float

    @property
    def total(self) -> float:
        return self.seeded_total + self.vacuum_total


def input_moments(state: QuantumState) -> InputMoments:
    """Moments n = Tr[rho a^dag a], m = Tr[rho a a] in the truncated basis."""
    a = destroy(state.dim)
    top = float(np.real(state.rho[-1, -1] + state.rho[-2, -2]))
    if top > 1e-4:
        warnings.warn(
            f"top two Fock levels carry population {top:.2e}; "
            "moments may be truncation-biased",
            stacklevel=2,
        )
    n = float(np.real(state.expect(a.conj().T @ a)))
    m = state.expect(a @ a)
    return InputMoments(n=max(n, 0.0), m=m)


def vacuum_kernel(k: BogoliubovKernels) -> HermitianKernel:
    """Squeezed-vacuum part of g1: the device's output with no input pulse."""
    dt = k.grid.dt
    vac = dt * (k.G @ k.G.conj().T)
    return HermitianKernel(k.grid, vac, atol=1e-8)


def g1_total(
    k: BogoliubovKernels, u: ModeFunction, moments: InputMoments
) -> HermitianKernel:
    """Full output coherence function for an input pulse in mode u."""
    fu, gu = apply_to_mode(k, u)
    n, m = moments.n, moments.m
    seeded = (
        n * np.outer(fu.conj(), fu)
        + np.conj(m) * np.outer(fu.conj(), gu.conj())
        + m * np.outer(gu, fu)
        + n * np.outer(gu, gu.conj())
    )
    total = seeded + vacuum_kernel(k).entries
    return HermitianKernel(k.grid, total, atol=1e-8)


def seeded_vacuum_split(
    k: BogoliubovKernels, u: ModeFunction, moments: InputMoments
) -> ModeSpectrum:
    """Split g1 into input-seeded modes and squeezed-vacuum modes.

    The seeded part is the difference ``g1_total - vacuum``; its rank must
    not exceed two (more than two significant eigenvalues indicates a bug
    upstream and raises).
    """
    vac = vacuum_kernel(k)
    g1 = g1_total(k, u, moments)
    seeded_entries = g1.entries - vac.entries
    total = max(g1.trace(), 1e-300)

    seeded_pairs = eigendecompose(
        HermitianKernel(k.grid, seeded_entries, atol=1e-8),
        neg_tol=SEEDED_NEG_TOL,
    )
    cut = OCCUPATION_CUT * total
    seeded = [(lam, mode) for lam, mode in seeded_pairs if lam > cut]
    if len(seeded) > 2:
        raise RuntimeError(
            f"seeded part has {len(seeded)} significant modes; "
            "a single input pulse can feed at most two"
        )
    vac_pairs = eigendecompose(vac)
    vacuum = [(lam, mode) for lam, mode in vac_pairs if lam > cut]
    seeded_total = float(sum(lam for lam, _ in seeded_pairs))
    vacuum_total = vac.trace()
    return ModeSpectrum(
        seeded=seeded,
        vacuum=vacuum,
        seeded_total=seeded_total,
        vacuum_total=vacuum_total,
    )


def single_mode_condition(moments: InputMoments) -> tuple[bool, float]:
    """Test n = |m|, the condition for the input to feed exactly one mode."""
    deviation = abs(moments.n - abs(moments.m)) / max(moments.n, 1e-12)
    return deviation < 1e-6, float(deviation)


def occupation_ratio(spectrum: ModeSpectrum) -> float:
    """Dominant-mode fraction n1 / (n1 + n2) of the seeded output."""
    if not spectrum.seeded:
        raise ValueError("no seeded modes: the input did not feed the output")
    n1 = spectrum.seeded[0][0]
    n2 = spectrum.seeded[1][0] if len(spectrum.seeded) > 1 else 0.0
    return float(n1 / (n1 + n2))
