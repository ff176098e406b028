"""Coefficient tables f_mn and the operations built on them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .fock import DiagonalF, DimensionError

HERMITIAN_TABLE_TOL = 1e-10


class Provenance(str, Enum):
    QUADRATURE = "quadrature"
    ANALYTIC_EXACT = "analytic_exact"
    ANALYTIC_INTERP = "analytic_interp"
    STEEPEST_DESCENT = "steepest_descent"
    EMPIRICAL = "empirical"


class Model(str, Enum):
    JC = "jc"
    OSCILLATOR = "oscillator"


@dataclass(frozen=True)
class CoefficientTable:
    """Time-averaged jump coefficients ``f[m-1, n-1] = f_mn`` for 1 <= m, n <= N_max.

    Entries not computed (e.g. off-diagonals of a diagonal-only table) are zero.
    ``tail_bound`` is the neglected factor ``exp(-lambda T)``.
    """

    model: Model
    params: dict
    T: float
    f: np.ndarray
    provenance: Provenance
    tail_bound: float = 0.0
    diagonal_only: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.array(self.f, dtype=complex)
        if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] < 1:
            raise DimensionError(f"coefficient matrix must be square, got {f.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def n_max(self) -> int:
        return self.f.shape[0]

    def fnn(self, n: int) -> float:
        return float(self.f[n - 1, n - 1].real)

    def diagonal(self) -> np.ndarray:
        """Real diagonal ``f_11 .. f_NN``."""
        return np.real(np.diag(self.f)).copy()

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.f - self.f.conj().T)))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``J_T rho = sum_mn rho_mn sqrt(mn) f_mn |m-1><n-1|`` on a ``dim = N_max+1`` space."""
        rho = np.asarray(rho, dtype=complex)
        dim = self.n_max + 1
        if rho.shape != (dim, dim):
            raise DimensionError(f"rho must have shape {(dim, dim)}, got {rho.shape}")
        k = np.arange(1, dim)
        weights = np.sqrt(np.outer(k, k)) * self.f
        out = np.zeros_like(rho)
        out[:-1, :-1] = rho[1:, 1:] * weights
        return out

    def diagonal_f(self) -> DiagonalF:
        """``F(n) = sqrt(T f_{n+1,n+1})`` for n = 0..N_max-1 (the overall scale goes into gamma)."""
        return DiagonalF(np.sqrt(np.clip(self.T * self.diagonal(), 0.0, None)))


def build_table(entry: Callable[[int, int], complex], n_max: int, *,
                diagonal_only: bool = True, workers: int = 1) -> np.ndarray:
    """Evaluate ``entry(m, n)`` on the upper triangle and fill by hermitian symmetry.

    Each entry is computed independently, so the result does not depend on
    ``workers``.
    """
    if diagonal_only:
        pairs = [(n, n) for n in range(1, n_max + 1)]
    else:
        pairs = [(m, n) for m in range(1, n_max + 1) for n in range(m, n_max + 1)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            values = list(ex.map(lambda mn: entry(*mn), pairs))
    else:
        values = [entry(m, n) for m, n in pairs]
    f = np.zeros((n_max, n_max), dtype=complex)
    for (m, n), v in zip(pairs, values):
        f[m - 1, n - 1] = v
        if m != n:
            f[n - 1, m - 1] = np.conj(v)
    return f


class PowerLawFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def fit_power_law(table: CoefficientTable, n_lo: int, n_hi: int) -> PowerLawFit:
    """Least-squares line through ``(ln n, ln f_nn)`` for ``n_lo <= n <= n_hi``."""
    if not 1 <= n_lo < n_hi <= table.n_max:
        raise ValueError(f"need 1 <= n_lo < n_hi <= {table.n_max}, got {n_lo}, {n_hi}")
    n = np.arange(n_lo, n_hi + 1)
    f = table.diagonal()[n_lo - 1:n_hi]
    if np.any(f <= 0):
        raise ValueError("power-law fit needs strictly positive f_nn")
    x, y = np.log(n), np.log(f)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2)


def implied_beta(slope: float) -> float:
    """Exponent of ``F(n) = (n+1)^-beta`` from ``f_nn ~ n^slope`` (``F = sqrt(f)``)."""
    return -slope / 2.0


def tail_bound(lambda_T: float) -> float:
    return math.exp(-lambda_T)
