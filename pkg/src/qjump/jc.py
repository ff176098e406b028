"""Two-level-atom detector: damped Jaynes-Cummings evolution and jump coefficients.

Joint states are ordered detector-major, ``index = d * field_dim + n`` with
``d = 0`` the ground level ``|g>`` and ``d = 1`` the excited level ``|e>``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import DimensionError, annihilation, leakage, sandwich
from .quadrature import QuadratureSpec, integrate_or_raise
from .tables import CoefficientTable, Model, Provenance, build_table, tail_bound

GROUND, EXCITED = 0, 1


@dataclass(frozen=True)
class JCParams:
    """Field frequency ``omega``, atomic frequency ``omega0``, coupling ``g`` and
    half decay rate ``lam`` (the excited level decays at ``2 lam``)."""

    omega: float
    omega0: float
    g: complex
    lam: float

    def __post_init__(self):
        if not (self.omega > 0 and self.omega0 > 0):
            raise ValueError("frequencies must be positive")
        if abs(self.g) == 0:
            raise ValueError("coupling g must be nonzero")
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")

    @classmethod
    def from_chi(cls, chi: float, lambda_T: float = 10.0, omega_over_g: float = 1e3,
                 T: float = 1.0, g_phase: float = 0.0, detuning: float = 0.0) -> "JCParams":
        """Resonant parameters with ``lam = lambda_T / T`` and ``|g| = lam / (2 chi)``.

        ``detuning`` is ``omega0 - omega`` in units of ``|g|``.
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
    def delta(self) -> complex:
        return 0.5 * (self.omega0 - self.omega - 1j * self.lam)

    @property
    def resonant(self) -> bool:
        return self.omega0 == self.omega

    def snapshot(self) -> dict:
        return {"omega": self.omega, "omega0": self.omega0, "g_re": self.g.real,
                "g_im": self.g.imag, "lambda": self.lam, "chi": self.chi}


def _sinc(x):
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1 - x2 / 6 + x2 * x2 / 120, np.sin(safe) / safe)


def rabi_b(n, p: JCParams):
    """``B_n = sqrt(n + (delta/|g|)^2)``, principal branch."""
    return np.sqrt(np.asarray(n, dtype=complex) + (p.delta / p.abs_g) ** 2)


def cn_sn(n, t, p: JCParams):
    """``C_n(t) = cos(|g| B_n t)`` and ``S_n(t) = sin(|g| B_n t) / B_n``.

    ``S_n`` is written as ``|g| t sinc(|g| B_n t)`` so it is finite at ``B_n = 0``
    and does not depend on the branch of the square root. Broadcasts over
    ``n`` and ``t``.
    """
    b = rabi_b(n, p)
    t = np.asarray(t, dtype=float)
    x = p.abs_g * b * t
    return np.cos(x), p.abs_g * t * _sinc(x)


def _sn(n, t, p):
    return cn_sn(n, t, p)[1]


def _sn_damped(n, t, p):
    """``S_n(t) e^{-lam t/2}`` without overflow of ``sinh`` at large ``t``."""
    b = rabi_b(n, p)
    t = np.asarray(t, dtype=float)
    x = p.abs_g * b * t
    half = 0.5 * p.lam * t
    small = np.abs(x) < 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        safe_b = np.where(b != 0, b, 1.0)
        big = (np.exp(1j * x - half) - np.exp(-1j * x - half)) / (2j * safe_b)
    return np.where(small, p.abs_g * t * _sinc(x) * np.exp(-half), big)


@dataclass(frozen=True)
class JCEvolution:
    t: float
    U: np.ndarray
    field_dim: int

    def evolve(self, rho: np.ndarray):
        """Return ``(U rho U^dagger, field leakage)`` for a joint density matrix."""
        out = sandwich(self.U, rho)
        field = out.reshape(2, self.field_dim, 2, self.field_dim).trace(axis1=0, axis2=2)
        return out, leakage(field)


def jc_evolution(p: JCParams, t: float, field_dim: int) -> JCEvolution:
    """Closed-form non-unitary evolution ``exp(-i H_eff t)`` on qubit x field.

    The state ``|e, N_max>`` couples to ``|g, N_max+1>``, which is outside the
    truncated space; its diagonal entry still uses ``B_{N_max+1}``, so it agrees
    with the infinite-dimensional operator rather than with a truncated
    matrix exponential.
    """
    if field_dim < 2:
        raise DimensionError("field_dim must be >= 2")
    if t < 0:
        raise ValueError("t must be non-negative")
    n = np.arange(field_dim)
    c0, s0 = cn_sn(n, t, p)
    c1, s1 = cn_sn(n + 1, t, p)
    r = p.delta / p.abs_g
    damp = math.exp(-p.lam * t / 2)
    phase_e = damp * np.exp(-1j * p.omega * (n + 0.5) * t)
    phase_g = damp * np.exp(-1j * p.omega * (n - 0.5) * t)

    dim = field_dim
    U = np.zeros((2 * dim, 2 * dim), dtype=complex)
    e, g = EXCITED * dim, GROUND * dim
    U[e + n, e + n] = phase_e * (c1 - 1j * r * s1)
    U[g + n, g + n] = phase_g * (c0 + 1j * r * s0)
    # <e,n| U |g,n+1> and <g,n+1| U |e,n>
    k = n[:-1]
    amp = s1[:-1] * np.sqrt(k + 1.0) * phase_e[:-1]
    U[e + k, g + k + 1] = -1j * (p.g / p.abs_g) * amp
    U[g + k + 1, e + k] = -1j * (np.conj(p.g) / p.abs_g) * amp
    U.setflags(write=False)
    return JCEvolution(float(t), U, dim)


def effective_hamiltonian(p: JCParams, field_dim: int) -> np.ndarray:
    """Dense ``H_eff = (omega0 - i lam) sigma_z / 2 + omega n + g a s+ + g* a^dag s- - i lam/2``."""
    a = annihilation(field_dim)
    eye = np.eye(field_dim)
    sp = np.zeros((2, 2))
    sp[EXCITED, GROUND] = 1.0
    sz = np.diag([-1.0, 1.0])
    num = a.conj().T @ a
    return (0.5 * (p.omega0 - 1j * p.lam) * np.kron(sz, eye)
            + p.omega * np.kron(np.eye(2), num)
            + p.g * np.kron(sp, a) + np.conj(p.g) * np.kron(sp.T, a.conj().T)
            - 0.5j * p.lam * np.eye(2 * field_dim))


def transition_operator_jc(p: JCParams, t: float, field_dim: int) -> np.ndarray:
    """``Gamma(t) = -i (g/|g|) exp(-lam t/2 - i omega n t) S_{n+1}(t) a``.

    Differs from ``<e|U(t)|g>`` only by the global phase ``exp(-i omega t/2)``.
    """
    n = np.arange(field_dim)
    s = _sn_damped(n + 1, t, p)
    diag = -1j * (p.g / p.abs_g) * np.exp(-1j * p.omega * n * t) * s
    return diag[:, None] * annihilation(field_dim)


def transition_superop_jc(p: JCParams, t: float, rho: np.ndarray) -> np.ndarray:
    """``Xi(t) rho = 2 lam Gamma(t) rho Gamma(t)^dagger``; its trace is the waiting density."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"rho must be square, got {rho.shape}")
    gam = transition_operator_jc(p, t, rho.shape[0])
    return 2 * p.lam * sandwich(gam, rho)


def waiting_density_jc(p: JCParams, t, populations) -> np.ndarray:
    """``p(t) = 2 lam e^{-lam t} sum_n P_n n |S_n(t)|^2`` for Fock populations ``P_n``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pop = np.asarray(populations, dtype=float)
    n = np.nonzero(pop)[0]
    n = n[n > 0]
    out = np.zeros_like(t)
    for k in n:
        out += pop[k] * k * np.abs(_sn_damped(k, t, p)) ** 2
    return 2 * p.lam * out


def gamma_sd(p: JCParams, dt: float) -> float:
    return 2 * p.lam * (p.abs_g * dt) ** 2


def small_dt_qjs(p: JCParams, dt: float, rho: np.ndarray) -> np.ndarray:
    """Short-interaction jump ``e^{-i omega n dt} [gamma_SD a rho a^dag] e^{i omega n dt}``.

    Valid while ``|g| dt sqrt(N_max + 1) << 1``; a warning is issued above 0.1.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if p.abs_g * dt * math.sqrt(dim) > 0.1:
        warnings.warn(
            f"|g| dt sqrt(N_max+1) = {p.abs_g * dt * math.sqrt(dim):.3g} is not small",
            RuntimeWarning, stacklevel=2)
    ph = np.exp(-1j * p.omega * np.arange(dim) * dt)
    jumped = gamma_sd(p, dt) * sandwich(annihilation(dim), rho)
    return ph[:, None] * jumped * ph.conj()[None, :]


def fmn_jc(p: JCParams, T: float, m: int, n: int, spec: QuadratureSpec | None = None):
    """Time-averaged coefficient ``f_mn = (2 lam/T) int_0^T e^{i omega t (n-m) - lam t} S_m conj(S_n) dt``.

    Integrated in ``s = lam t`` over ``[0, lam T]``. Diagonal entries are returned
    as a non-negative float, off-diagonal ones as complex.
    """
    if m < 1 or n < 1:
        raise ValueError("m, n must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    if not p.lam > 0:
        raise ValueError("time averaging needs lam > 0")
    lt = p.lam * T
    bm, bn = rabi_b(m, p), rabi_b(n, p)
    w = p.omega * (n - m) / p.lam
    hint = abs(w) + p.abs_g * (abs(bm.real) + abs(bn.real)) / p.lam
    spec = spec or QuadratureSpec(oscillation_frequency_hint=hint)

    if m == n:
        def integrand(s):
            return np.abs(_sn_damped(n, s / p.lam, p)) ** 2
    else:
        def integrand(s):
            t = s / p.lam
            return np.exp(1j * w * s) * _sn_damped(m, t, p) * np.conj(_sn_damped(n, t, p))

    res = integrate_or_raise(integrand, 0.0, lt, spec)
    val = 2.0 * res.value / T
    return max(val.real, 0.0) if m == n else val


def fnn_exact_jc(n: int, T: float) -> float:
    """``f_nn = 1 / (n T)`` (upper limit pushed to infinity)."""
    if n < 1 or not T > 0:
        raise ValueError("need n >= 1 and T > 0")
    return 1.0 / (n * T)


def fnn_interp_jc(n: int, T: float, p: JCParams) -> float:
    """``f_nn = (1 - exp(-lam T n / (2 chi^2))) / (n T)``; meant for ``n / chi^2 << 1``."""
    x = p.lam * T * n / (2 * p.chi ** 2)
    return -math.expm1(-x) / (n * T)


def interp_regime_ratio(n: int, p: JCParams) -> float:
    """``n / chi^2``, which must be small for the interpolation formula to hold."""
    return n / p.chi ** 2


def jc_table(p: JCParams, T: float, n_max: int, *, diagonal_only: bool = True,
             workers: int = 1) -> CoefficientTable:
    f = build_table(lambda m, n: fmn_jc(p, T, m, n), n_max,
                    diagonal_only=diagonal_only, workers=workers)
    return CoefficientTable(Model.JC, p.snapshot(), T, f, Provenance.QUADRATURE,
                            tail_bound(p.lam * T), diagonal_only)


def jc_exact_table(n_max: int, T: float, p: JCParams | None = None) -> CoefficientTable:
    f = np.diag([fnn_exact_jc(n, T) for n in range(1, n_max + 1)])
    snap = p.snapshot() if p else {}
    tb = tail_bound(p.lam * T) if p else 0.0
    return CoefficientTable(Model.JC, snap, T, f, Provenance.ANALYTIC_EXACT, tb)


def jc_interp_table(p: JCParams, T: float, n_max: int) -> CoefficientTable:
    f = np.diag([fnn_interp_jc(n, T, p) for n in range(1, n_max + 1)])
    return CoefficientTable(Model.JC, p.snapshot(), T, f, Provenance.ANALYTIC_INTERP,
                            tail_bound(p.lam * T))
