"""Weyl characteristic functions: evaluation, propagation, and transforms.

Conventions, fixed once for the whole package:

    a = (x + i p) / sqrt(2)        [x, p] = i
    D(beta) = exp(beta a^dag - beta* a)
    chi(beta) = Tr[rho D(beta)]
    W(x, p) = (1 / 2 pi^2) int chi(beta) exp(beta* alpha - beta alpha*) d^2 beta,
              alpha = (x + i p) / sqrt(2),  normalized so int W dx dp = 1.

States propagate through an output-mode decomposition exactly in this
picture: the seeded part maps the argument of the input characteristic
function and every orthogonal port contributes a Gaussian vacuum factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .states import QuantumState

__all__ = [
    "CharGrid",
    "CharFunction",
    "WignerGrid",
    "JointCharFunction",
    "char_from_rho",
    "char_of_state",
    "propagate_char",
    "wigner_from_char",
    "fock_from_char",
    "char_overlap",
    "rotate_char",
    "joint_two_mode_char",
]

BASE_EXTENT = 6.0
BASE_SPACING = 12.0 / 128.0
MAX_EXTENT = 34.0
BOUNDARY_TOL = 1e-4

# Fock reconstruction cap: displacement matrix elements above this size are
# not resolved by the default grid spacing.
MAX_FOCK_DIM = 60


@dataclass(frozen=True)
class CharGrid:
    """Square grid in the complex beta plane, symmetric about the origin."""

    extent: float
    n_side: int

    def __post_init__(self):
        if self.extent <= 0 or self.n_side < 3:
            raise ValueError("need positive extent and at least 3 points per side")
        if self.n_side % 2 == 0:
            raise ValueError("n_side must be odd so the grid contains beta = 0")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.n_side)

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.n_side - 1)

    @property
    def weight(self) -> float:
        return self.spacing**2

    def mesh(self) -> np.ndarray:
        re, im = np.meshgrid(self.axis, self.axis, indexing="ij")
        return re + 1j * im

    @staticmethod
    def with_extent(extent: float, spacing: float = BASE_SPACING) -> "CharGrid":
        half = max(2, int(np.ceil(extent / spacing)))
        return CharGrid(half * spacing, 2 * half + 1)


@dataclass(frozen=True)
class CharFunction:
    """Sampled characteristic function, plus an exact evaluator when known.

    ``values[i, j] = chi(axis[i] + 1j * axis[j])``.  The evaluator (closed
    form or Fock-sum) lets downstream transforms query chi off-grid without
    interpolation error; the sampled values are the general-purpose view.
    """

    grid: CharGrid
    values: np.ndarray = field(repr=False)
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_side, self.grid.n_side):
            raise ValueError("values shape does not match the grid")
        object.__setattr__(self, "values", v)

    def boundary_magnitude(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    def __call__(self, beta: np.ndarray) -> np.ndarray:
        """Evaluate chi at arbitrary points: exact if possible, else bilinear."""
        if self.evaluator is not None:
            return self.evaluator(np.asarray(beta, dtype=complex))
        return self._interpolate(beta)

    def _interpolate(self, beta: np.ndarray) -> np.ndarray:
        from scipy.interpolate import RegularGridInterpolator

        beta = np.asarray(beta, dtype=complex)
        pts = np.stack([beta.real.ravel(), beta.imag.ravel()], axis=-1)
        outside = np.max(np.abs(pts), axis=-1) > self.grid.extent
        if np.any(outside) and self.boundary_magnitude() > BOUNDARY_TOL:
            raise ValueError(
                "requested points leave the sampled grid while chi is still "
                f"{self.boundary_magnitude():.2e} at the boundary; extend the grid"
            )
        axes = (self.grid.axis, self.grid.axis)
        out = np.empty(pts.shape[0], dtype=complex)
        for part, comp in ((np.real, 1.0), (np.imag, 1j)):
            interp = RegularGridInterpolator(
                axes, part(self.values), bounds_error=False, fill_value=0.0
            )
            if part is np.real:
                out = interp(pts).astype(complex)
            else:
                out += 1j * interp(pts)
        return out.reshape(beta.shape)


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a phase-space rectangle.

    ``values[i, j] = W(x_axis[i], p_axis[j])``.
    """

    x_axis: np.ndarray = field(repr=False)
    p_axis: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def integral(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(np.sum(self.values) * dx * dp)

    def at_origin(self) -> float:
        i = int(np.argmin(np.abs(self.x_axis)))
        j = int(np.argmin(np.abs(self.p_axis)))
        return float(self.values[i, j])


def _laguerre_seq(x: np.ndarray, d: int, count: int):
    """Yield associated Laguerre values L_a^{(d)}(x) for a = 0 .. count-1."""
    prev2 = None
    prev = np.ones_like(x)
    yield prev
    if count == 1:
        return
    curr = (1.0 + d) - x
    yield curr
    prev2, prev = prev, curr
    for a in range(2, count):
        curr = ((2.0 * a - 1.0 + d - x) * prev - (a - 1.0 + d) * prev2) / a
        yield curr
        prev2, prev = prev, curr


def char_from_rho(rho: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """chi(beta) = Tr[rho D(beta)] from displacement matrix elements.

    Uses the closed form <a+d|D|a> = sqrt(a!/(a+d)!) beta^d e^{-|b|^2/2}
    L_a^{(d)}(|b|^2) with the associated Laguerre recurrence; diagonals of
    rho that vanish are skipped.
    """
    beta = np.asarray(beta, dtype=complex)
    shape = beta.shape
    b = beta.ravel()
    x = np.abs(b) ** 2
    pref = np.exp(-0.5 * x)
    dim = rho.shape[0]
    out = np.zeros_like(b)
    for d in range(dim):
        diag = np.diagonal(rho, offset=d)
        live = np.abs(diag) > 1e-18
        if not live.any():
            continue
        bd = b**d
        bdm = (-b.conj()) ** d
        coeff = float(np.exp(-0.5 * gammaln(d + 1.0)))
        for a, lag in enumerate(_laguerre_seq(x, d, dim - d)):
            w = diag[a]
            if live[a]:
                base = (coeff * pref) * lag
                if d == 0:
                    out += w.real * base
                else:
                    out += base * (w * bd + np.conj(w) * bdm)
            coeff *= np.sqrt((a + 1.0) / (a + 1.0 + d))
    return out.reshape(shape)


def _auto_grid(
    evaluator, grid: CharGrid | None, what: str, boundary_tol: float = BOUNDARY_TOL
) -> tuple[CharGrid, np.ndarray]:
    """Evaluate on the given grid, or grow the extent until chi has decayed."""
    if grid is not None:
        values = evaluator(grid.mesh())
        cf = CharFunction(grid, values)
        if cf.boundary_magnitude() > BOUNDARY_TOL:
            warnings.warn(
                f"{what}: |chi| = {cf.boundary_magnitude():.2e} at the grid "
                "boundary; results may alias",
                stacklevel=3,
            )
        return grid, values
    extent = BASE_EXTENT
    while True:
        g = CharGrid.with_extent(extent)
        values = evaluator(g.mesh())
        if CharFunction(g, values).boundary_magnitude() <= boundary_tol:
            return g, values
        if extent >= MAX_EXTENT:
            if CharFunction(g, values).boundary_magnitude() > 1e-3:
                warnings.warn(
                    f"{what}: chi not decayed even at extent {extent:g}", stacklevel=3
                )
            return g, values
        extent = min(extent * 1.5, MAX_EXTENT)


def char_of_state(state: QuantumState, grid: CharGrid | None = None) -> CharFunction:
    """Characteristic function of a Fock-basis state.

    Uses the state's closed-form evaluator when available; the grid is
    enlarged automatically until the boundary magnitude falls below
    ``BOUNDARY_TOL`` (unless an explicit grid is passed, which only warns).
    """
    if state.char_eval is not None:
        evaluator = state.char_eval
    else:
        rho = state.rho

        def evaluator(b, _rho=rho):
            return char_from_rho(_rho, b)

    g, values = _auto_grid(evaluator, grid, "char_of_state")
    return CharFunction(g, values, evaluator)


def propagate_char(decomp, chi_u: CharFunction, grid: CharGrid | None = None) -> CharFunction:
    """Characteristic function of the output-mode state.

    With the output operator ``A a_u + B a_u^dag + C a_k + D a_k^dag + E a_s``
    and vacuum in the k and s ports,

        chi_out(beta) = chi_u(beta A* - beta* B)
                        * exp(-|beta C* - beta* D|^2 / 2)
                        * exp(-|beta E*|^2 / 2).

    The input chi is queried through its exact evaluator when present and
    by bilinear interpolation otherwise (raising if the mapped points leave
    a grid whose boundary has not decayed).
    """
    A, B, C, D, E = decomp.A, decomp.B, decomp.C, decomp.D, decomp.E

    def evaluator(beta):
        beta = np.asarray(beta, dtype=complex)
        mu_u = beta * np.conj(A) - np.conj(beta) * B
        mu_k = beta * np.conj(C) - np.conj(beta) * D
        mu_s = beta * np.conj(E)
        vac = np.exp(-0.5 * (np.abs(mu_k) ** 2 + np.abs(mu_s) ** 2))
        return chi_u(mu_u) * vac

    g, values = _auto_grid(evaluator, grid, "propagate_char")
    return CharFunction(g, values, evaluator)


def wigner_from_char(
    chi: CharFunction, extent: float = 6.0, n_side: int = 129
) -> WignerGrid:
    """Fourier transform chi to the Wigner function on an (x, p) rectangle.

    The kernel exp(beta* alpha - beta alpha*) is separable in (Re beta,
    Im beta), so the transform is two small matrix products and the output
    grid is free to differ from the beta grid.
    """
    if chi.boundary_magnitude() > 1e-3:
        warnings.warn(
            "chi has not decayed at the grid boundary; Wigner transform may alias",
            stacklevel=2,
        )
    axis = np.linspace(-extent, extent, n_side)
    u = chi.grid.axis  # Re beta
    v = chi.grid.axis  # Im beta
    # W(x,p) = (1/2 pi^2) sum_{u,v} chi e^{i sqrt2 (u p - v x)} h^2
    phase_p = np.exp(1j * np.sqrt(2.0) * np.outer(u, axis))
    phase_x = np.exp(-1j * np.sqrt(2.0) * np.outer(v, axis))
    # chi.values has indices [u, v]; contract v with phase_x then u with phase_p.
    inner = chi.values @ phase_x  # (u, x)
    w = (phase_p.T @ inner).T  # (x, p)
    values = np.real(w) * chi.grid.weight / (2.0 * np.pi**2)
    return WignerGrid(x_axis=axis, p_axis=axis, values=values)


def fock_from_char(chi: CharFunction, dim: int) -> QuantumState:
    """Invert the Weyl transform: rho = (1/pi) int chi(beta) D(-beta) d^2 beta.

    The reconstruction is Hermitized, tiny negative eigenvalues (quadrature
    round-off, above -1e-6) are clamped to zero, and the result is
    renormalized; larger negativity means the grid is too coarse and raises.
    """
    if dim > MAX_FOCK_DIM:
        raise ValueError(f"dim {dim} exceeds the supported cap {MAX_FOCK_DIM}")
    if chi.evaluator is not None and chi.boundary_magnitude() > 1e-6:
        # Boundary truncation of the quadrature feeds straight into spurious
        # negativity of rho; with an exact evaluator at hand, resample on a
        # reconstruction-grade grid instead.
        g, values = _auto_grid(chi.evaluator, None, "fock_from_char", boundary_tol=1e-6)
        chi = CharFunction(g, values, chi.evaluator)
    if chi.boundary_magnitude() > 1e-3:
        warnings.warn(
            "chi has not decayed at the grid boundary; reconstruction may alias",
            stacklevel=2,
        )
    b = chi.grid.mesh().ravel()
    vals = chi.values.ravel()
    x = np.abs(b) ** 2
    pref = np.exp(-0.5 * x)
    scale = chi.grid.weight / np.pi
    weighted = vals * pref
    rho = np.zeros((dim, dim), dtype=complex)
    for d in range(dim):
        bdm = (-b) ** d
        coeff = float(np.exp(-0.5 * gammaln(d + 1.0)))
        core = weighted * bdm
        for a, lag in enumerate(_laguerre_seq(x, d, dim - d)):
            rho[a + d, a] = scale * coeff * np.sum(core * lag)
            coeff *= np.sqrt((a + 1.0) / (a + 1.0 + d))
    rho = rho + np.tril(rho, -1).conj().T
    rho = 0.5 * (rho + rho.conj().T)

    eigvals, eigvecs = np.linalg.eigh(rho)
    if eigvals.min() < -1e-6:
        raise ValueError(
            f"reconstructed state has eigenvalue {eigvals.min():.3e}; "
            "the beta grid is too coarse for this dim"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    rho = (eigvecs * eigvals) @ eigvecs.conj().T
    rho /= np.real(np.trace(rho))
    return QuantumState(rho)


def char_overlap(chi_a: CharFunction, chi_b_values: np.ndarray) -> float:
    """Tr[rho_a rho_b] = (1/pi) int chi_a(beta) conj(chi_b(beta)) d^2 beta.

    ``chi_b_values`` must be sampled on chi_a's grid.
    """
    acc = np.sum(chi_a.values * np.conj(chi_b_values)) * chi_a.grid.weight / np.pi
    return float(np.real(acc))


def save_char_csv(chi: CharFunction, path) -> None:
    """CSV of Re/Im chi with grid metadata in '#' headers and a JSON sidecar."""
    import json
    from pathlib import Path

    path = Path(path)
    header = [
        f"# extent: {chi.grid.extent}",
        f"# n_side: {chi.grid.n_side}",
        "# layout: row = Re(beta) index, column = Im(beta) index; Re block then Im block",
    ]
    rows = [",".join(f"{v:.16e}" for v in row) for row in chi.values.real]
    rows += [",".join(f"{v:.16e}" for v in row) for row in chi.values.imag]
    path.write_text("\n".join(header + rows) + "\n")
    sidecar = {"extent": chi.grid.extent, "n_side": chi.grid.n_side,
               "boundary_magnitude": chi.boundary_magnitude()}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def save_wigner_csv(w: WignerGrid, path) -> None:
    """CSV of W(x, p) values with axis metadata and a JSON sidecar."""
    import json
    from pathlib import Path

    path = Path(path)
    header = [
        f"# x_axis: {w.x_axis[0]} .. {w.x_axis[-1]} ({len(w.x_axis)} points)",
        f"# p_axis: {w.p_axis[0]} .. {w.p_axis[-1]} ({len(w.p_axis)} points)",
        "# convention: a = (x + ip)/sqrt2, int W dx dp = 1",
    ]
    rows = [",".join(f"{v:.16e}" for v in row) for row in w.values]
    path.write_text("\n".join(header + rows) + "\n")
    sidecar = {
        "x_extent": [float(w.x_axis[0]), float(w.x_axis[-1])],
        "p_extent": [float(w.p_axis[0]), float(w.p_axis[-1])],
        "integral": w.integral(),
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def rotate_char(chi: CharFunction, phi: float) -> CharFunction:
    """Phase-space rotation by ``phi``: the quadrature x_theta maps to
    x_(theta+phi), implemented as chi(beta) -> chi(beta e^{i phi})."""
    rot = np.exp(1j * phi)

    def evaluator(b):
        return chi(np.asarray(b, dtype=complex) * rot)

    values = evaluator(chi.grid.mesh())
    return CharFunction(chi.grid, values, evaluator if chi.evaluator is not None else None)


@dataclass(frozen=True)
class JointCharFunction:
    """Two-mode characteristic function chi(beta1, beta2) on a 4-D grid.

    ``values[i, j, k, l] = chi(axis[i] + 1j axis[j], axis[k] + 1j axis[l])``.
    """

    grid: CharGrid
    values: np.ndarray = field(repr=False)
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def marginal(self, which: int) -> CharFunction:
        """Single-mode chi of one output mode (the other argument at 0)."""
        mesh = self.grid.mesh()
        zero = np.zeros_like(mesh)
        args = (mesh, zero) if which == 0 else (zero, mesh)
        return CharFunction(self.grid, self.evaluator(*args), None)

    def purity(self) -> float:
        """Global two-mode purity (1/pi^2) int |chi|^2 d^4 beta."""
        return float(
            np.sum(np.abs(self.values) ** 2) * self.grid.weight**2 / np.pi**2
        )


def joint_two_mode_char(
    kernels,
    u,
    v1,
    v2,
    chi_u: CharFunction,
    extent: float = 5.0,
    n_side: int = 33,
) -> JointCharFunction:
    """Joint state of two orthogonal output modes in the Weyl picture.

    Both output operators are pulled back onto one orthonormal input family
    ``{u, e_1, ...}``; each family mode contributes a displacement argument
    ``mu_e = sum_i (beta_i conj(P_ie) - beta_i* Q_ie)`` so that

        chi(b1, b2) = chi_u(mu_u) * prod_(e>0) exp(-|mu_e|^2 / 2).

    Setting one argument to zero recovers the single-mode propagation.
    """
    from .decomposition import pullback_rows
    from .grids import inner_product

    if abs(inner_product(v1, v2)) > 1e-8:
        raise ValueError("output modes must be orthogonal")
    _family, P, Q = pullback_rows(kernels, [v1, v2], u)

    def evaluator(b1, b2):
        b1 = np.asarray(b1, dtype=complex)
        b2 = np.asarray(b2, dtype=complex)
        mu_u = (
            b1 * np.conj(P[0, 0]) - np.conj(b1) * Q[0, 0]
            + b2 * np.conj(P[1, 0]) - np.conj(b2) * Q[1, 0]
        )
        out = chi_u(mu_u)
        for e in range(1, P.shape[1]):
            mu = (
                b1 * np.conj(P[0, e]) - np.conj(b1) * Q[0, e]
                + b2 * np.conj(P[1, e]) - np.conj(b2) * Q[1, e]
            )
            out = out * np.exp(-0.5 * np.abs(mu) ** 2)
        return out

    grid = CharGrid(extent, n_side)
    mesh = grid.mesh()
    b1 = mesh[:, :, None, None]
    b2 = mesh[None, None, :, :]
    values = evaluator(
        np.broadcast_to(b1, (n_side,) * 4).reshape(-1),
        np.broadcast_to(b2, (n_side,) * 4).reshape(-1),
    ).reshape((n_side,) * 4)
    return JointCharFunction(grid, values, evaluator)
