"""Adaptive Gauss-Kronrod quadrature and the few special functions the models need.

The integrator is a globally adaptive G7/K15 scheme vectorized over panels.
Integrands are called with a 1-d array of abscissae and must return an array
of the same shape (real or complex).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# QUADPACK qk15 nodes (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes.
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; ``result`` holds the last estimate."""

    def __init__(self, message: str, result: "QuadratureResult | None" = None):
        super().__init__(message)
        self.result = result


class IntegrandError(ArithmeticError):
    """The integrand produced NaN or Inf."""

    def __init__(self, abscissa: float):
        super().__init__(f"integrand is not finite at z = {abscissa!r}")
        self.abscissa = abscissa


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 10_000
    oscillation_frequency_hint: float = 0.0
    min_panels: int = 8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 8:
            raise ValueError("max_subdivisions must be >= 8")
        if self.oscillation_frequency_hint < 0:
            raise ValueError("oscillation_frequency_hint must be >= 0")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    subdivisions_used: int
    converged: bool

    def tolerance(self, spec: QuadratureSpec) -> float:
        return max(spec.rel_tol * abs(self.value), spec.abs_tol)


def _gk15(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    y = np.asarray(f(x.ravel())).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = np.argwhere(~np.isfinite(y))[0]
        raise IntegrandError(float(x[tuple(bad)]))
    k = half * (y @ KRONROD_WEIGHTS)
    g = half * (y @ GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def initial_panels(lo: float, hi: float, spec: QuadratureSpec) -> np.ndarray:
    n = spec.min_panels
    if spec.oscillation_frequency_hint > 0:
        period = 2 * math.pi / spec.oscillation_frequency_hint
        n = max(n, math.ceil((hi - lo) / period))
    return np.linspace(lo, hi, n + 1)


def integrate(f, lo: float, hi: float, spec: QuadratureSpec | None = None,
              breakpoints=None) -> QuadratureResult:
    """Integrate ``f`` over ``[lo, hi]`` to ``max(rel_tol*|I|, abs_tol)``.

    Panels start no wider than one period of ``spec.oscillation_frequency_hint``;
    the panels carrying the largest error are bisected until the summed error
    estimate meets the tolerance or ``max_subdivisions`` panels exist. Extra
    ``breakpoints`` inside ``(lo, hi)`` are added to the initial partition.
    """
    spec = spec or QuadratureSpec()
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"need finite lo < hi, got [{lo}, {hi}]")

    edges = initial_panels(lo, hi, spec)
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        edges = np.union1d(edges, bp[(bp > lo) & (bp < hi)])
    a, b = edges[:-1], edges[1:]
    vals, errs = _gk15(f, a, b)

    while True:
        total = vals.sum()
        err = float(errs.sum())
        tol = max(spec.rel_tol * abs(total), spec.abs_tol)
        if err <= tol:
            return QuadratureResult(complex(total), err, a.size, True)
        room = spec.max_subdivisions - a.size
        if room <= 0:
            return QuadratureResult(complex(total), err, a.size, False)
        # bisect the worst panels that together carry half of the error
        order = np.argsort(errs)[::-1]
        cum = np.cumsum(errs[order])
        k = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        split = order[:min(k, room)]
        keep = np.ones(a.size, dtype=bool)
        keep[split] = False
        m = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], m])
        nb = np.concatenate([m, b[split]])
        nv, ne = _gk15(f, na, nb)
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


def integrate_or_raise(f, lo, hi, spec=None, breakpoints=None) -> QuadratureResult:
    res = integrate(f, lo, hi, spec, breakpoints)
    if not res.converged:
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] did not converge: error estimate "
            f"{res.error_estimate:.3e} after {res.subdivisions_used} panels", res)
    return res


def log_factorial(n: int) -> float:
    """``ln(n!)`` via the log-Gamma function."""
    if int(n) != n or n < 0:
        raise ValueError(f"log_factorial needs an integer n >= 0, got {n!r}")
    return math.lgamma(n + 1)


def _psi3_log_integrand(n: int):
    # t^2 (1+t)^(2n-2) exp(-2nt), peak at t = 1/sqrt(n)
    def logf(t):
        return 2 * np.log(t) + (2 * n - 2) * np.log1p(t) - 2 * n * t
    return logf


def tricomi_psi_3(n: int) -> float:
    """Tricomi ``Psi(3; 2n+2; 2n)`` from its integral representation.

    ``Psi = (1/2) int_0^inf t^2 (1+t)^(2n-2) exp(-2nt) dt``.  The integrand is
    scaled by its peak value (at ``t = 1/sqrt(n)``) so that large ``n`` does not
    overflow, and the range is cut where it has dropped by ``e^-50``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"tricomi_psi_3 needs an integer n >= 1, got {n!r}")
    n = int(n)
    logf = _psi3_log_integrand(n)
    t_peak = 1.0 / math.sqrt(n)
    log_peak = float(logf(np.array(t_peak)))
    hi = 2 * t_peak
    while logf(np.array(hi)) - log_peak > -50.0:
        hi *= 2
    width = 1.0 / math.sqrt(4.0 * n)
    bps = t_peak + width * np.arange(-4, 41)

    def scaled(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(logf(t[pos]) - log_peak)
        return out

    res = integrate_or_raise(scaled, 0.0, hi, QuadratureSpec(rel_tol=1e-13, abs_tol=1e-300),
                             breakpoints=bps)
    return 0.5 * res.value.real * math.exp(log_peak)


def tricomi_psi_3_laguerre(n: int) -> float:
    """``Psi(3; 2n+2; 2n)`` through a terminating Laguerre polynomial.

    Kummer's transformation turns ``Psi(3; 2n+2; z)`` into
    ``z^(-2n-1) Psi(2-2n; -2n; z)``, and ``Psi(-k; alpha+1; z) = (-1)^k k! L_k^(alpha)(z)``
    with ``k = 2n-2``, so ``Psi = (2n-2)! / (2n)^(2n+1) * L_{2n-2}^(-1-2n)(2n)``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need an integer n >= 1, got {n!r}")
    n = int(n)
    log_pref = log_factorial(2 * n - 2) - (2 * n + 1) * math.log(2 * n)
    return math.exp(log_pref) * laguerre_assoc(2 * n - 2, -1.0 - 2 * n, 2.0 * n)


def laguerre_assoc(k: int, alpha: float, x: float) -> float:
    """Associated Laguerre polynomial ``L_k^(alpha)(x)`` by upward recurrence."""
    if int(k) != k or k < 0:
        raise ValueError(f"laguerre_assoc needs an integer k >= 0, got {k!r}")
    prev, cur = 1.0, 1.0 + alpha - x
    if k == 0:
        return prev
    for j in range(1, int(k)):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur
