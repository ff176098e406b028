"""Truncated Fock-space linear algebra for a single field mode.

Operators and density matrices are plain dense ``numpy`` complex arrays of
shape ``(dim, dim)`` where ``dim = N_max + 1``.  The helpers here build the
ladder and phase operators, apply jump super-operators and provide the
validation and truncation diagnostics used by the detector models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
LEAKAGE_TOL = 1e-8


class DimensionError(ValueError):
    """Raised for an invalid or mismatched Fock-space dimension."""


class TruncationError(RuntimeError):
    """Raised when probability weight reaches the top of the truncated space."""


class LadderOps(NamedTuple):
    a: np.ndarray
    a_dagger: np.ndarray
    number: np.ndarray


class PhaseOps(NamedTuple):
    e_minus: np.ndarray
    e_plus: np.ndarray


def _frozen(x: np.ndarray) -> np.ndarray:
    x.setflags(write=False)
    return x


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 2:
        raise DimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def annihilation(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def build_ladder_ops(dim: int) -> LadderOps:
    """Return ``(a, a_dagger, number)`` on a ``dim``-level truncated space.

    ``<n-1|a|n> = sqrt(n)``; the returned arrays are read-only.
    """
    a = annihilation(dim)
    ad = a.conj().T.copy()
    return LadderOps(_frozen(a), _frozen(ad), _frozen(ad @ a))


def phase_ops(dim: int) -> PhaseOps:
    """Susskind-Glogower operators ``E- = (n+1)^(-1/2) a`` and ``E+ = E-^dagger``.

    On the truncated space ``E- E+`` equals the identity except in the top
    row/column, which the truncation cuts off.
    """
    a = annihilation(dim)
    scale = 1.0 / np.sqrt(np.arange(dim) + 1.0)
    e_minus = scale[:, None] * a
    return PhaseOps(_frozen(e_minus), _frozen(e_minus.conj().T.copy()))


def fock_projector(n: int, dim: int) -> np.ndarray:
    """Density matrix ``|n><n|``."""
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise DimensionError(f"Fock level {n} outside truncated space of dim {dim}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def diag_part(x: np.ndarray) -> np.ndarray:
    """Zero every off-diagonal entry of a square matrix."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {x.shape}")
    return np.diag(np.diag(x))


def sandwich(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``op @ rho @ op^dagger``."""
    return op @ rho @ op.conj().T


def is_hermitian(x: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(x - x.conj().T), initial=0.0) <= tol)


def validate_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Check hermiticity, trace in (0, 1] and positivity; return ``rho`` as complex.

    Sub-normalized states are accepted since no-count evolution shrinks the trace.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    _check_dim(rho.shape[0])
    if not is_hermitian(rho):
        raise ValueError("density matrix is not hermitian")
    tr = np.trace(rho)
    if abs(tr.imag) > HERMITIAN_TOL or not 0.0 < tr.real <= 1.0 + HERMITIAN_TOL:
        raise ValueError(f"density matrix trace {tr} outside (0, 1]")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def leakage(rho: np.ndarray) -> float:
    """Probability weight in the top two Fock levels."""
    d = np.real(np.diag(rho))
    return float(d[-2:].sum())


def check_leakage(rho: np.ndarray, tol: float = LEAKAGE_TOL) -> float:
    leak = leakage(rho)
    if leak >= tol:
        raise TruncationError(
            f"truncation leakage {leak:.3e} >= {tol:.1e}; enlarge the Fock dimension"
        )
    return leak


@dataclass(frozen=True)
class DiagonalF:
    """Diagonal function ``F(n)`` for n = 0..N_max, optionally a power law ``(n+1)^-beta``."""

    values: np.ndarray
    beta: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise DimensionError("F must be a vector with at least two entries")
        if np.any(v < 0):
            raise ValueError("F(n) must be non-negative")
        object.__setattr__(self, "values", _frozen(v.copy()))

    @classmethod
    def power_law(cls, dim: int, beta: float) -> "DiagonalF":
        dim = _check_dim(dim)
        return cls((np.arange(dim) + 1.0) ** (-beta), beta=beta)

    @classmethod
    def ones(cls, dim: int) -> "DiagonalF":
        return cls.power_law(dim, 0.0)

    @property
    def dim(self) -> int:
        return self.values.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.values).astype(complex)


@dataclass(frozen=True)
class JumpSpec:
    """Jump super-operator ``gamma * F(n) a . a^dagger F(n)``, optionally diagonalized."""

    gamma: float
    F: DiagonalF
    diagonal_only: bool = False

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def srinivas_davies(cls, gamma: float, dim: int) -> "JumpSpec":
        return cls(gamma, DiagonalF.ones(dim), diagonal_only=False)

    @classmethod
    def e_model(cls, gamma: float, dim: int) -> "JumpSpec":
        return cls(gamma, DiagonalF.power_law(dim, 0.5), diagonal_only=False)


def apply_jump(spec: JumpSpec, rho: np.ndarray) -> np.ndarray:
    """Apply ``gamma F(n) a rho a^dagger F(n)``; drop off-diagonals if requested.

    With ``F == 1`` and ``diagonal_only=False`` this is the Srinivas-Davies jump.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.F.dim, spec.F.dim):
        raise DimensionError(
            f"rho has shape {rho.shape}, jump operator acts on dim {spec.F.dim}"
        )
    op = spec.F.values[:, None] * annihilation(spec.F.dim)
    out = spec.gamma * sandwich(op, rho)
    return diag_part(out) if spec.diagonal_only else out
