"""First-photoemission Monte Carlo for both detector models.

Each trajectory draws one uniform from its own counter-based stream and
inverts the cumulative of the waiting density ``p(t)`` tabulated on a grid.
Trajectory ``i`` uses draw ``i`` of ``Philox(key=master_seed)``, so the
ensemble does not depend on how the work is split across workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, stats

from .fock import validate_density_matrix
from .jc import JCParams, waiting_density_jc
from .oscillator import OscParams, waiting_density_osc
from .tables import Model

NO_JUMP = math.inf
MIN_TRAJECTORIES_FOR_STATS = 100
_PHILOX_BLOCK = 4


class DegenerateEnsembleWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class TrajectoryConfig:
    model: Model
    params: Union[JCParams, OscParams]
    T: float
    initial_state: np.ndarray
    n_trajectories: int
    master_seed: int
    time_grid_points: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        expected = JCParams if self.model is Model.JC else OscParams
        if not isinstance(self.params, expected):
            raise TypeError(f"{self.model.value} model needs {expected.__name__}")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.time_grid_points < 2:
            raise ValueError("time_grid_points must be >= 2")
        rho = validate_density_matrix(self.initial_state)
        rho = np.array(rho, dtype=complex)
        rho.setflags(write=False)
        object.__setattr__(self, "initial_state", rho)
        dt = self.T / (self.time_grid_points - 1)
        if dt > self.max_grid_step:
            raise ValueError(
                f"grid step {dt:.3e} does not resolve the Rabi period; need <= "
                f"{self.max_grid_step:.3e} (raise time_grid_points)")

    @property
    def n_max(self) -> int:
        return self.initial_state.shape[0] - 1

    @property
    def max_grid_step(self) -> float:
        """A twentieth of the fastest Rabi period ``2 pi / (|g| sqrt(N_max))``."""
        return 2 * math.pi / (abs(self.params.g) * math.sqrt(max(self.n_max, 1))) / 20

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.initial_state)).clip(0.0, None)

    @property
    def mean_photon_number(self) -> float:
        pop = self.populations
        return float(np.arange(pop.size) @ pop)

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.time_grid_points)


def waiting_density(config: TrajectoryConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(t, p(t))`` on the configuration's time grid."""
    t = config.time_grid()
    fn = waiting_density_jc if config.model is Model.JC else waiting_density_osc
    return t, np.clip(fn(config.params, t, config.populations), 0.0, None)


def cumulative_jump_probability(config: TrajectoryConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(t, P(t))`` with ``P(t) = int_0^t p``, by the trapezoid rule on the grid."""
    t, p = waiting_density(config)
    return t, integrate.cumulative_trapezoid(p, t, initial=0.0)


def uniform_draws(master_seed: int, start: int, stop: int) -> np.ndarray:
    """Draws ``start .. stop-1`` of the ``Philox(key=master_seed)`` stream, in ``(0, 1]``."""
    block, offset = divmod(start, _PHILOX_BLOCK)
    gen = np.random.Generator(np.random.Philox(key=master_seed, counter=block))
    u = gen.random(offset + stop - start)[offset:]
    return 1.0 - u


def invert_cdf(t: np.ndarray, cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """First time with ``cdf = u`` by linear interpolation; ``NO_JUMP`` where ``u > cdf[-1]``."""
    out = np.full(u.shape, NO_JUMP)
    hit = u <= cdf[-1]
    uh = u[hit]
    idx = np.clip(np.searchsorted(cdf, uh, side="left"), 1, cdf.size - 1)
    lo, hi = cdf[idx - 1], cdf[idx]
    frac = np.where(hi > lo, (uh - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
    out[hit] = t[idx - 1] + frac * (t[idx] - t[idx - 1])
    return out


@dataclass(frozen=True)
class TrajectoryEnsemble:
    config: TrajectoryConfig
    first_jump_times: np.ndarray
    jump_fraction: float
    empirical_fnn: float
    stderr: float
    survival_t: np.ndarray
    survival_curve: np.ndarray

    @property
    def jumped(self) -> np.ndarray:
        return self.first_jump_times[np.isfinite(self.first_jump_times)]

    @property
    def grid_jump_probability(self) -> float:
        return float(1.0 - self.survival_curve[-1])

    def z_score(self, reference_fnn: float) -> float:
        """Deviation from ``reference_fnn`` in binomial standard errors of the reference.

        With ``p_ref = <n> T f_ref``, ``sigma = sqrt(p_ref (1 - p_ref) / N)``. A
        zero-variance reference gives ``z = 0`` on exact agreement and ``inf``
        otherwise.
        """
        nbar = self.config.mean_photon_number
        n = self.config.n_trajectories
        p_ref = nbar * self.config.T * reference_fnn
        diff = self.jump_fraction - p_ref
        var = p_ref * (1 - p_ref) / n
        if var <= 0:
            return 0.0 if abs(diff) < 1e-15 else math.copysign(math.inf, diff)
        return diff / math.sqrt(var)

    def ks_test(self):
        """KS test of the jump times against the conditional grid CDF ``P(t) / P(T)``."""
        t, cdf = self.survival_t, 1.0 - self.survival_curve
        total = cdf[-1]
        return stats.kstest(self.jumped, lambda x: np.interp(x, t, cdf) / total)


def sample_first_jumps(config: TrajectoryConfig, workers: int = 1,
                       chunk_size: int = 65_536) -> TrajectoryEnsemble:
    """Sample one first-emission time per trajectory (``NO_JUMP`` if none in ``(0, T]``).

    ``empirical_fnn = jump_fraction / (<n> T)``, which is ``f_nn`` for an
    initial Fock state ``|n><n|``; ``stderr`` is its binomial standard error.
    """
    t, cdf = cumulative_jump_probability(config)
    n = config.n_trajectories
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]

    def run(bound):
        s, e = bound
        return invert_cdf(t, cdf, uniform_draws(config.master_seed, s, e))

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    times = np.concatenate(parts)
    times.setflags(write=False)

    frac = float(np.count_nonzero(np.isfinite(times))) / n
    nbar = config.mean_photon_number
    if cdf[-1] <= 0 or nbar == 0:
        warnings.warn("total jump probability is zero; ensemble is degenerate",
                      DegenerateEnsembleWarning, stacklevel=2)
        fnn, err = 0.0, 0.0
    else:
        scale = nbar * config.T
        fnn = frac / scale
        err = math.sqrt(frac * (1 - frac) / n) / scale
    survival = 1.0 - cdf
    return TrajectoryEnsemble(config, times, frac, fnn, err, t, survival)
