"""Harmonic-oscillator detector: su(1,1)-factorized evolution and jump coefficients.

Detector mode ``b`` is damped at rate ``2 lam`` and coupled to the field mode
``a``.  Joint matrices use the ordering ``index = n_b * d + n_a``.  The
coefficient integrals are written in the dimensionless variable ``z`` in
which the damped Rabi oscillation has unit frequency, with one integrand per
damping regime (``chi < 1``, ``chi = 1``, ``chi > 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .fock import annihilation, DimensionError
from .quadrature import (QuadratureSpec, integrate, integrate_or_raise, log_factorial,
                         tricomi_psi_3)
from .tables import CoefficientTable, Model, Provenance, build_table, tail_bound

CRITICAL_EPS = 1e-6
SINGULAR_TOL = 1e-14
_TAIL_RTOL = 1e-17


class Regime(str, Enum):
    SUB = "sub"
    CRITICAL = "critical"
    SUPER = "super"


class SingularFactorizationError(ArithmeticError):
    """The disentangling coefficients blow up where ``Upsilon(t) = 0``."""


class UnsupportedRegimeError(ValueError):
    pass


class RegimeViolationError(ValueError):
    pass


def classify(chi: float, eps: float = CRITICAL_EPS) -> Regime:
    if abs(chi - 1.0) <= eps:
        return Regime.CRITICAL
    return Regime.SUB if chi < 1.0 else Regime.SUPER


@dataclass(frozen=True)
class OscParams:
    omega_a: float
    omega_b: float
    g: complex
    lam: float

    def __post_init__(self):
        if not (self.omega_a > 0 and self.omega_b > 0):
            raise ValueError("mode frequencies must be positive")
        if abs(self.g) == 0:
            raise ValueError("coupling g must be nonzero")
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")

    @classmethod
    def from_chi(cls, chi: float, lambda_T: float = 10.0, omega_over_g: float = 1e3,
                 T: float = 1.0, g_phase: float = 0.0, detuning: float = 0.0) -> "OscParams":
        """Resonant pair with ``lam = lambda_T / T``, ``|g| = lam / (2 chi)``.

        ``detuning`` is ``omega_b - omega_a`` in units of ``|g|``.
        """
        if not chi > 0:
            raise ValueError("chi must be positive")
        lam = lambda_T / T
        abs_g = lam / (2 * chi)
        omega = omega_over_g * abs_g
        return cls(omega, omega + detuning * abs_g, abs_g * np.exp(1j * g_phase), lam)

    @property
    def abs_g(self) -> float:
        return abs(self.g)

    @property
    def chi(self) -> float:
        return self.lam / (2 * abs(self.g))

    @property
    def regime(self) -> Regime:
        return classify(self.chi)

    @property
    def resonant(self) -> bool:
        return self.omega_a == self.omega_b

    @property
    def xi(self) -> float:
        c = self.chi
        return c / math.sqrt(1 - c * c) if c < 1 else math.inf

    @property
    def zeta(self) -> float:
        c = self.chi
        return c / math.sqrt(c * c - 1) if c > 1 else math.inf

    @property
    def omega_bar(self) -> float:
        c = self.chi
        return self.omega_a / (self.abs_g * math.sqrt(1 - c * c)) if c < 1 else math.inf

    @property
    def eta0(self) -> complex:
        return np.sqrt(complex(self.abs_g ** 2 - self.lam ** 2 / 4))

    @property
    def omega_ba(self) -> complex:
        return self.omega_b - self.omega_a - 1j * self.lam

    @property
    def eta(self) -> complex:
        return np.sqrt(self.abs_g ** 2 + self.omega_ba ** 2 / 4)

    @property
    def Omega(self) -> complex:
        return self.omega_b + self.omega_a - 1j * self.lam

    def snapshot(self) -> dict:
        return {"omega_a": self.omega_a, "omega_b": self.omega_b, "g_re": self.g.real,
                "g_im": self.g.imag, "lambda": self.lam, "chi": self.chi,
                "regime": self.regime.value}


def _sin_over(eta: complex, t):
    """``sin(eta t) / eta``, even in ``eta`` and finite at ``eta = 0``."""
    x = eta * np.asarray(t, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    sinc = np.where(small, 1 - x2 / 6 + x2 * x2 / 120, np.sin(safe) / safe)
    return t * sinc


def upsilon(p: OscParams, t):
    """``Upsilon(t) = cos(eta t) + i (omega_ba / 2) sin(eta t) / eta``."""
    t = np.asarray(t, dtype=float)
    return np.cos(p.eta * t) + 0.5j * p.omega_ba * _sin_over(p.eta, t)


@dataclass(frozen=True)
class SU11Coefficients:
    t: float
    A: complex
    B: complex
    C: complex
    Upsilon: complex


def su11_coefficients(p: OscParams, t: float) -> SU11Coefficients:
    """Coefficients of ``U = e^{-i Omega t N} e^{A K+} e^{B K0} e^{C K-}``.

    ``B = -2 ln Upsilon`` uses the phase of ``Upsilon`` unwrapped along
    ``[0, t]``.  Raises :class:`SingularFactorizationError` at zeros of
    ``Upsilon``; for ``chi < 1`` on resonance these occur at
    ``eta0 t = pi - arctan(1/xi) (mod pi)``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    ups = complex(upsilon(p, t))
    if abs(ups) < SINGULAR_TOL:
        raise SingularFactorizationError(f"Upsilon({t}) = {ups:.3e}; factorization is singular")
    s = complex(_sin_over(p.eta, t))
    steps = max(16, math.ceil((abs(p.eta) + abs(p.omega_ba)) * t / 0.05))
    path = upsilon(p, np.linspace(0.0, t, steps + 1))
    phase = np.unwrap(np.angle(path))[-1]
    B = -2.0 * (math.log(abs(ups)) + 1j * phase)
    return SU11Coefficients(float(t), -1j * np.conj(p.g) * s / ups, B, 1j * p.g * s / ups, ups)


def _sector_ops(N: int):
    k = np.arange(N + 1)
    kp = np.zeros((N + 1, N + 1))
    km = np.zeros((N + 1, N + 1))
    kp[k[:-1] + 1, k[:-1]] = np.sqrt((k[:-1] + 1.0) * (N - k[:-1]))   # b^dag a
    km[k[1:] - 1, k[1:]] = -np.sqrt(k[1:] * (N - k[1:] + 1.0))         # -b a^dag
    return kp, km, k


def _nilpotent_exp(x: np.ndarray) -> np.ndarray:
    out = np.eye(x.shape[0], dtype=complex)
    term = out.copy()
    for j in range(1, x.shape[0]):
        term = term @ x / j
        out = out + term
    return out


def su11_evolution(p: OscParams, t: float, max_quanta: int) -> np.ndarray:
    """Assemble the factorized ``U(t)`` on the sectors with ``n_a + n_b <= max_quanta``.

    The product space has ``d = max_quanta + 1`` levels per mode; entries outside
    the complete sectors are left zero. Each exponential acts exactly inside a
    fixed-total-number sector: ``K+`` and ``K-`` are nilpotent there and
    ``e^{B K0}`` reduces to integer powers of ``Upsilon``.
    """
    co = su11_coefficients(p, t)
    d = max_quanta + 1
    U = np.zeros((d * d, d * d), dtype=complex)
    for N in range(d):
        kp, km, k = _sector_ops(N)
        k0 = co.Upsilon ** (N - 2.0 * k)
        block = (np.exp(-0.5j * p.Omega * t * N) * _nilpotent_exp(co.A * kp)
                 @ np.diag(k0) @ _nilpotent_exp(co.C * km))
        idx = k * d + (N - k)
        U[np.ix_(idx, idx)] = block
    return U


def effective_hamiltonian_osc(p: OscParams, d: int) -> np.ndarray:
    """``(omega_b - i lam) b^dag b + omega_a a^dag a + g b a^dag + g* b^dag a`` on ``d x d`` levels."""
    a = annihilation(d)
    num = a.conj().T @ a
    eye = np.eye(d)
    b_ = np.kron(a, eye)
    a_ = np.kron(eye, a)
    return ((p.omega_b - 1j * p.lam) * np.kron(num, eye) + p.omega_a * np.kron(eye, num)
            + p.g * b_ @ a_.conj().T + np.conj(p.g) * b_.conj().T @ a_)


def transition_operator_osc(p: OscParams, t: float, field_dim: int) -> np.ndarray:
    """``Gamma(t) = <1_b| U(t) |0_b> = A exp[-(i Omega t + B)(n+1)/2] a``.

    Evaluated as ``-i g* (sin(eta t)/eta) Upsilon^n e^{-i Omega t (n+1)/2} a``, which
    is regular at the zeros of ``Upsilon``.
    """
    if field_dim < 2:
        raise DimensionError("field_dim must be >= 2")
    n = np.arange(1, field_dim)
    s = complex(_sin_over(p.eta, t))
    ups = complex(upsilon(p, t))
    amp = -1j * np.conj(p.g) * s * ups ** (n - 1.0) * np.exp(-0.5j * p.Omega * t * n)
    gam = np.zeros((field_dim, field_dim), dtype=complex)
    gam[n - 1, n] = np.sqrt(n) * amp
    return gam


def transition_superop_osc(p: OscParams, t: float, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    gam = transition_operator_osc(p, t, rho.shape[0])
    return 2 * p.lam * gam @ rho @ gam.conj().T


def waiting_density_osc(p: OscParams, t, populations) -> np.ndarray:
    """``p(t) = 2 lam |g|^2 |sin(eta t)/eta|^2 sum_n P_n n |Upsilon|^{2n-2} e^{-lam n t}``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pop = np.asarray(populations, dtype=float)
    s2 = np.abs(_sin_over(p.eta, t)) ** 2
    log_u = np.log(np.abs(upsilon(p, t)) + 1e-300)
    out = np.zeros_like(t)
    for k in np.nonzero(pop)[0]:
        if k == 0:
            continue
        out += pop[k] * k * np.exp((2 * k - 2) * log_u - p.lam * k * t)
    return 2 * p.lam * p.abs_g ** 2 * s2 * out


# --- coefficient integrals -------------------------------------------------

def _log_sinh(z):
    return z + np.log1p(-np.exp(-2 * z)) - math.log(2)


def _sub_integrand(m: int, n: int, xi: float, wbar: float):
    power = m + n - 2

    def f(z):
        with np.errstate(divide="ignore"):
            ups = np.cos(z) + xi * np.sin(z)
            logv = 2 * np.log(np.abs(np.sin(z))) - xi * (m + n) * z
            if power:
                logv = logv + power * np.log(np.abs(ups))
        v = np.exp(logv)
        if power % 2:
            v = v * np.sign(ups)
        if m != n:
            v = v * np.exp(1j * wbar * (n - m) * z)
        return v
    return f


def _critical_integrand(n: int):
    def f(y):
        with np.errstate(divide="ignore"):
            return np.exp(2 * np.log(y) + (2 * n - 2) * np.log1p(y) - 2 * n * y)
    return f


def _super_integrand(n: int, zeta: float):
    def f(z):
        with np.errstate(divide="ignore"):
            log_ups = z + np.log(0.5 * (1 + zeta) + 0.5 * (1 - zeta) * np.exp(-2 * z))
            return np.exp(2 * _log_sinh(z) + (2 * n - 2) * log_ups - 2 * n * zeta * z)
    return f


def _scaled_spec(f, lo, hi, hint, rel_tol=1e-10) -> QuadratureSpec:
    # absolute tolerance relative to the integral of |f|, so cancelling
    # oscillatory integrals can converge
    rough = integrate(lambda z: np.abs(f(z)), lo, hi,
                      QuadratureSpec(rel_tol=1e-3, abs_tol=1e-300,
                                     oscillation_frequency_hint=hint))
    scale = abs(rough.value)
    return QuadratureSpec(rel_tol=rel_tol, abs_tol=max(rel_tol * 1e-3 * scale, 1e-300),
                          max_subdivisions=200_000, oscillation_frequency_hint=hint)


class OscIntegral(NamedTuple):
    value: complex
    upper_limit: float
    cut_at: float
    truncation_bound: float


def _sub_integral(p: OscParams, T: float, m: int, n: int) -> OscIntegral:
    xi, wbar = p.xi, p.omega_bar
    Z = p.lam * T / (2 * xi)
    f = _sub_integrand(m, n, xi, wbar)
    hint = wbar * abs(n - m) + 2.0
    c = xi * (m + n)
    log_amp = 0.5 * (m + n - 2) * math.log1p(xi * xi)

    def tail(z):
        return math.exp(log_amp - c * z) / c

    z1 = min(Z, (log_amp + 40.0) / c + math.pi)
    spec = _scaled_spec(f, 0.0, z1, hint)
    total = integrate_or_raise(f, 0.0, z1, spec).value
    while z1 < Z and tail(z1) > _TAIL_RTOL * abs(total):
        z2 = min(Z, 2 * z1)
        total += integrate_or_raise(f, z1, z2, spec).value
        z1 = z2
    return OscIntegral(total, Z, z1, tail(z1) if z1 < Z else 0.0)


def fnn_integral_osc(p: OscParams, T: float, m: int, n: int):
    """Coefficient ``f_mn`` of the oscillator detector by quadrature (resonance).

    ``chi < 1``: prefactor ``4 chi / (T (1-chi^2)^{3/2})`` on ``[0, lam T / (2 xi)]``;
    ``|chi - 1| <= 1e-6``: ``(4/T) int_0^{lam T/2} y^2 (1+y)^{2n-2} e^{-2ny} dy``;
    ``chi > 1``: prefactor ``4 chi / (T (chi^2-1)^{3/2})`` on ``[0, lam T / (2 zeta)]``.
    Off-diagonal entries exist only for ``chi < 1``. The sub-regime integral is
    cut where the remaining envelope is below ``1e-17`` of the accumulated value.
    Diagonal entries are returned as float.
    """
    if m < 1 or n < 1:
        raise ValueError("m, n must be >= 1")
    if not (p.lam > 0 and T > 0):
        raise ValueError("time averaging needs lam > 0 and T > 0")
    if not p.resonant:
        raise UnsupportedRegimeError("coefficient integrals are implemented on resonance only")
    regime = p.regime
    if m != n and regime is not Regime.SUB:
        raise UnsupportedRegimeError(
            f"off-diagonal coefficients are only available for chi < 1 (regime {regime.value})")
    chi = p.chi
    if regime is Regime.SUB:
        res = _sub_integral(p, T, m, n).value
        val = 4 * chi / (T * (1 - chi * chi) ** 1.5) * res
        return max(float(val.real), 0.0) if m == n else complex(val)
    if regime is Regime.CRITICAL:
        f = _critical_integrand(n)
        hi = p.lam * T / 2
        res = integrate_or_raise(f, 0.0, hi, _scaled_spec(f, 0.0, hi, 2.0),
                                 breakpoints=[1 / math.sqrt(n)]).value
        return float(max(4.0 / T * float(res.real), 0.0))
    zeta = p.zeta
    Y = p.lam * T / (2 * zeta)
    f = _super_integrand(n, zeta)
    bps = [math.atanh(_nu(chi, n))] if _nu(chi, n) < 1 else None
    res = integrate_or_raise(f, 0.0, Y, _scaled_spec(f, 0.0, Y, 2.0), breakpoints=bps).value
    return float(max(4 * chi / (T * (chi * chi - 1) ** 1.5) * float(res.real), 0.0))


def fnn_tricomi(n: int, T: float) -> float:
    """``f_nn = (8/T) Psi(3; 2n+2; 2n)``: the ``chi = 1`` integral with infinite upper limit."""
    return 8.0 * tricomi_psi_3(n) / T


class SmallChi(NamedTuple):
    exact: float
    stirling: float


def fnn_small_chi(n: int, T: float) -> SmallChi:
    """``chi << 1`` limit ``4 (2n-2)! / (T (2^n n!)^2)`` and its Stirling form ``1/(T sqrt(pi n^5))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    log_exact = (math.log(4.0) + log_factorial(2 * n - 2)
                 - 2 * (n * math.log(2.0) + log_factorial(n)))
    return SmallChi(math.exp(log_exact) / T, 1.0 / (T * math.sqrt(math.pi * n ** 5)))


# --- steepest descent ---------------------------------------------------------

@dataclass(frozen=True)
class SaddleData:
    """Saddle-point diagnostics.

    ``z0`` is ``arctan(mu)`` below ``chi = 1``, ``artanh(nu)`` above, and the
    maximum ``1/sqrt(n)`` of the ``y`` integrand at ``chi = 1``.
    """

    regime: Regime
    mu: float | None
    nu: float | None
    z0: float
    second_derivative: float
    saddle_values: tuple


def _nu(chi: float, n: int) -> float:
    return math.sqrt((chi * chi - 1) / (n + chi * chi - 1))


def _mu(chi: float, n: int) -> float:
    return math.sqrt((1 - chi * chi) / (n + chi * chi - 1))


def n_star(chi: float, lambda_T: float) -> float:
    """Approximate lower bound ``n* ~ 4 chi^2 exp(-lam T)`` of the power-law region for ``chi > 1``."""
    return 4 * chi * chi * math.exp(-lambda_T)


def saddle_data(p: OscParams, n: int, n_terms: int = 5) -> SaddleData:
    chi = p.chi
    regime = p.regime
    s = chi / math.sqrt(n + chi * chi - 1)      # xi*mu = zeta*nu
    if regime is Regime.SUB:
        xi, mu = p.xi, _mu(chi, n)
        z0 = math.atan(mu)
        g2 = -4 * n * (xi * xi + 1) / (1 + s)
        base = (2 * math.log(mu) + (2 * n - 2) * math.log1p(s) - n * math.log1p(mu * mu)
                - 2 * z0 * xi * n)
        vals = tuple(math.exp(base - 2 * xi * math.pi * n * k) for k in range(n_terms))
        return SaddleData(regime, mu, None, z0, g2, vals)
    if regime is Regime.SUPER:
        zeta, nu = p.zeta, _nu(chi, n)
        z0 = math.atanh(nu)
        g2 = -4 * n * (zeta * zeta - 1) / (1 + s)
        val = float(_super_integrand(n, zeta)(np.array([z0]))[0])
        return SaddleData(regime, None, nu, z0, g2, (val,))
    y0 = 1 / math.sqrt(n)
    rn = math.sqrt(n)
    g2 = -4 * n * rn / (rn + 1)
    val = float(_critical_integrand(n)(np.array([y0]))[0])
    return SaddleData(regime, 0.0, 0.0, y0, g2, (val,))


def fnn_steepest_descent(p: OscParams, n: int, T: float):
    """Steepest-descent approximation of ``f_nn``; returns ``(value, SaddleData)``.

    Below ``chi = 1`` the sum over the periodic saddles gives the
    ``coth(xi n pi)`` factor; above, a single saddle at ``artanh(nu)``; at
    ``chi = 1`` the common limit of both. For ``chi > 1`` requires
    ``n > n* = 4 chi^2 exp(-lam T)`` (the threshold is approximate).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    chi = p.chi
    regime = p.regime
    if regime is Regime.SUPER:
        ns = n_star(chi, p.lam * T)
        if n <= ns:
            raise RegimeViolationError(
                f"n = {n} is below n* ~ 4 chi^2 exp(-lam T) = {ns:.4g}; "
                "the saddle has left the integration range")
    s = chi / math.sqrt(n + chi * chi - 1)
    log_common = (math.log(chi * math.sqrt(8 * math.pi)) + (2 * n - 1.5) * math.log1p(s)
                  - math.log(T * math.sqrt(n) * (n + chi * chi - 1)))
    if regime is Regime.SUB:
        xi, mu = p.xi, _mu(chi, n)
        logv = (log_common - 2 * math.atan(mu) * xi * n - n * math.log1p(mu * mu)
                - math.log(math.tanh(xi * n * math.pi)))
    elif regime is Regime.SUPER:
        zeta, nu = p.zeta, _nu(chi, n)
        logv = log_common + n * (zeta - 1) * math.log1p(-nu) - n * (zeta + 1) * math.log1p(nu)
    else:
        logv = log_common - 2 * math.sqrt(n)
    return math.exp(logv), saddle_data(p, n)


def fnn_asymptotic(chi: float, n: int, T: float) -> float:
    """Large-``n`` form ``chi sqrt(8 pi) / (e T) n^{-3/2}``, times ``coth(chi n pi / sqrt(1-chi^2))`` for ``chi < 1``."""
    base = chi * math.sqrt(8 * math.pi) / (math.e * T) * n ** -1.5
    if chi < 1:
        base /= math.tanh(chi * n * math.pi / math.sqrt(1 - chi * chi))
    return base


class AsymptoticRegime(str, Enum):
    SMALL_CHI = "small_chi"
    MODERATE_CHI = "moderate_chi"


class BetaLaw(NamedTuple):
    beta: float
    gamma_coeff: float
    T_scaled: bool


def asymptotic_beta(regime: AsymptoticRegime | str, chi: float) -> BetaLaw:
    """Exponent ``beta`` of ``F(n) = (n+1)^-beta`` and the rate ``gamma`` in units of ``1/T``.

    ``small_chi``: ``beta = 5/4``, ``gamma = 1/sqrt(pi)``.
    ``moderate_chi`` (``chi ~ 1``, or ``chi > 1`` with ``n >> chi^2``):
    ``beta = 3/4``, ``gamma = chi sqrt(8 pi) / e``.
    """
    regime = AsymptoticRegime(regime)
    if regime is AsymptoticRegime.SMALL_CHI:
        return BetaLaw(1.25, 1 / math.sqrt(math.pi), True)
    return BetaLaw(0.75, chi * math.sqrt(8 * math.pi) / math.e, True)


def small_chi_alt_prefactor() -> float:
    """``gamma' T = sqrt(8/pi) / e``: the ``chi -> 0`` limit of the large-``n`` form."""
    return math.sqrt(8 / math.pi) / math.e


# --- tables ----------------------------------------------------------------

def osc_table(p: OscParams, T: float, n_max: int, *, diagonal_only: bool = True,
              workers: int = 1) -> CoefficientTable:
    f = build_table(lambda m, n: fnn_integral_osc(p, T, m, n), n_max,
                    diagonal_only=diagonal_only, workers=workers)
    return CoefficientTable(Model.OSCILLATOR, p.snapshot(), T, f, Provenance.QUADRATURE,
                            tail_bound(p.lam * T), diagonal_only)


def osc_steepest_descent_table(p: OscParams, T: float, n_max: int) -> CoefficientTable:
    f = np.diag([fnn_steepest_descent(p, n, T)[0] for n in range(1, n_max + 1)])
    return CoefficientTable(Model.OSCILLATOR, p.snapshot(), T, f, Provenance.STEEPEST_DESCENT,
                            tail_bound(p.lam * T))
