"""Single-mode quantum states in a truncated Fock basis.

The library states carry closed-form characteristic-function evaluators
where one exists; downstream phase-space code uses those to avoid both
interpolation and truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

__all__ = [
    "QuantumState",
    "DEFAULT_DIM",
    "destroy",
    "vacuum_state",
    "fock_state",
    "coherent_state",
    "even_cat_state",
    "squeezed_state",
    "state_library",
]

DEFAULT_DIM = 60

# Population allowed beyond the truncation when building library states.
TAIL_TOL = 1e-6


@dataclass(frozen=True)
class QuantumState:
    """Density matrix in the number basis.

    ``char_eval``, when present, evaluates the Weyl characteristic function
    chi(beta) = Tr[rho D(beta)] in closed form at arbitrary complex beta.
    """

    rho: np.ndarray = field(repr=False)
    char_eval: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("rho must be a square matrix")
        herm = np.linalg.norm(rho - rho.conj().T)
        if herm > 1e-10 * max(np.linalg.norm(rho), 1.0):
            raise ValueError(f"rho is not Hermitian (deviation {herm:.3e})")
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.real(np.trace(rho)))
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"rho has trace {tr!r}, expected 1")
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -1e-8:
            raise ValueError(f"rho has a negative eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.rho @ op))


def destroy(dim: int) -> np.ndarray:
    """Truncated annihilation operator."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def _pure(coeffs: np.ndarray, char_eval=None) -> QuantumState:
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    return QuantumState(np.outer(c, c.conj()), char_eval=char_eval)


def vacuum_state(dim: int = DEFAULT_DIM) -> QuantumState:
    c = np.zeros(dim, complex)
    c[0] = 1.0
    return _pure(c, char_eval=lambda b: np.exp(-0.5 * np.abs(b) ** 2))


def fock_state(n: int, dim: int = DEFAULT_DIM) -> QuantumState:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside truncation {dim}")
    c = np.zeros(dim, complex)
    c[n] = 1.0
    eval_ = None
    if n == 1:
        eval_ = lambda b: np.exp(-0.5 * np.abs(b) ** 2) * (1.0 - np.abs(b) ** 2)
    elif n == 0:
        eval_ = lambda b: np.exp(-0.5 * np.abs(b) ** 2)
    return _pure(c, char_eval=eval_)


def _coherent_coeffs(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    log_mag = n * np.log(np.abs(alpha) + 1e-300) - 0.5 * gammaln(n + 1.0)
    c = np.exp(log_mag - 0.5 * np.abs(alpha) ** 2) * np.exp(1j * n * np.angle(alpha))
    if np.abs(alpha) == 0:
        c = np.zeros(dim)
        c[0] = 1.0
    return c.astype(complex)


def _check_tail(c: np.ndarray, what: str):
    tail = float(np.sum(np.abs(c) ** 2)) if len(c) else 0.0
    # c here is normalized over the infinite basis; the missing weight is
    # 1 - captured.
    missing = max(0.0, 1.0 - tail)
    if missing > TAIL_TOL:
        raise ValueError(
            f"{what}: truncation keeps only {tail:.8f} of the population; "
            "increase dim"
        )


def coherent_state(alpha: complex, dim: int = DEFAULT_DIM) -> QuantumState:
    c = _coherent_coeffs(alpha, dim)
    _check_tail(c, f"coherent alpha={alpha}")
    a = complex(alpha)
    return _pure(
        c,
        char_eval=lambda b: np.exp(-0.5 * np.abs(b) ** 2)
        * np.exp(b * np.conj(a) - np.conj(b) * a),
    )


def even_cat_state(alpha: complex, dim: int = DEFAULT_DIM) -> QuantumState:
    """Even Schroedinger cat |alpha> + |-alpha>, norm 2(1 + exp(-2|alpha|^2))."""
    cp = _coherent_coeffs(alpha, dim)
    cm = _coherent_coeffs(-alpha, dim)
    norm_sq = 2.0 * (1.0 + np.exp(-2.0 * np.abs(alpha) ** 2))
    c = (cp + cm) / np.sqrt(norm_sq)
    _check_tail(c, f"even cat alpha={alpha}")
    a = complex(alpha)

    def char_eval(b):
        # Each term's full exponent is assembled before exponentiating: the
        # cross terms have large positive real parts that overflow on their
        # own even though every displacement matrix element is bounded by 1.
        b = np.asarray(b, dtype=complex)
        half = -0.5 * np.abs(b) ** 2
        drift = b * np.conj(a) - np.conj(b) * a
        cross = b * np.conj(a) + np.conj(b) * a
        off = 2.0 * np.abs(a) ** 2
        return (
            np.exp(half + drift)
            + np.exp(half - drift)
            + np.exp(half + cross - off)
            + np.exp(half - cross - off)
        ) / norm_sq

    return _pure(c, char_eval=char_eval)


def squeezed_state(r: float, dim: int = DEFAULT_DIM) -> QuantumState:
    """Squeezed vacuum with amplitude gain exp(r) in the p quadrature.

    Quadrature variances are exp(2r)/2 along p and exp(-2r)/2 along x;
    populations follow (2n)! / (2^n n!)^2 * tanh(r)^(2n) / cosh(r).
    """
    n_half = np.arange((dim + 1) // 2)
    log_mag = (
        0.5 * gammaln(2 * n_half + 1.0)
        - n_half * np.log(2.0)
        - gammaln(n_half + 1.0)
        + n_half * np.log(np.tanh(np.abs(r)) + 1e-300)
        - 0.5 * np.log(np.cosh(r))
    )
    c = np.zeros(dim, complex)
    c[2 * n_half] = np.exp(log_mag) * (-np.sign(r)) ** n_half
    _check_tail(c, f"squeezed r={r}")
    ch, sh = np.cosh(r), np.sinh(r)

    def char_eval(b):
        b = np.asarray(b, dtype=complex)
        mu = b * ch + np.conj(b) * sh
        return np.exp(-0.5 * np.abs(mu) ** 2)

    return _pure(c, char_eval=char_eval)


def state_library(spec: dict | str, dim: int = DEFAULT_DIM) -> QuantumState:
    """Build a library state from a config-style specifier.

    Accepts ``{"kind": "fock", "n": 1}``-style dicts or the bare strings
    ``vacuum`` / ``fock`` / ``coherent`` / ``even_cat`` / ``squeezed``
    (with their parameter defaulting to the spec dict's entries).
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    dim = int(spec.get("dim", dim))
    if kind == "vacuum":
        return vacuum_state(dim)
    if kind == "fock":
        return fock_state(int(spec["n"]), dim)
    if kind == "coherent":
        return coherent_state(complex(spec["alpha"]), dim)
    if kind == "even_cat":
        return even_cat_state(complex(spec["alpha"]), dim)
    if kind == "squeezed":
        return squeezed_state(float(spec["r"]), dim)
    raise ValueError(f"unknown state kind {kind!r}")
