"""Acceptance gates, one test per criterion, each at its stated tolerance.

Every test records a pass/fail line (printed in the terminal summary) before
asserting, so a failing gate still reports its measured numbers.
"""

import math
import time

import numpy as np
import pytest
import scipy.linalg as sl

from qjump.fock import fock_projector
from qjump.jc import (EXCITED, JCParams, effective_hamiltonian, fmn_jc, fnn_interp_jc,
                      jc_evolution, jc_table, small_dt_qjs, transition_superop_jc)
from qjump.oscillator import (OscParams, effective_hamiltonian_osc, fnn_asymptotic,
                              fnn_integral_osc, fnn_steepest_descent, fnn_tricomi, osc_table,
                              su11_evolution)
from qjump.quadrature import laguerre_assoc, log_factorial, tricomi_psi_3
from qjump.tables import fit_power_law
from qjump.trajectories import TrajectoryConfig, sample_first_jumps

T = 1.0
FIG1_CHI = (0.1, 0.3, 0.5, 0.8, 1.1)
FIG2_CHI = (5, 10, 20, 40, 70)
FIG3_CHI = (0.5, 1.1, 2, 3, 4)


def worst(pairs):
    """The (key, value) pair with the largest |value|."""
    return max(pairs, key=lambda kv: abs(kv[1]))


def test_c01_jc_exact_law(acceptance):
    t0 = time.perf_counter()
    devs = []
    for chi in (0.2, 0.5, 2.0):
        p = JCParams.from_chi(chi, lambda_T=20.0, omega_over_g=1e3)
        for n in range(1, 51):
            devs.append(((chi, n), T * n * fmn_jc(p, T, n, n) - 1))
    elapsed = time.perf_counter() - t0
    bad = [k for k, d in devs if abs(d) >= 0.01]
    key, dev = worst(devs)
    ok = not bad and elapsed < 30
    acceptance(1, "JC exact law |T n f_nn - 1| < 0.01",
               ok, f"worst {dev:+.4g} at (chi, n)={key}; {len(bad)} failing {bad[:5]}; "
                   f"{elapsed:.1f}s")
    assert ok


def test_c02_oscillator_unit_point(acceptance):
    t0 = time.perf_counter()
    vals = {chi: T * fnn_integral_osc(OscParams.from_chi(chi, lambda_T=15.0), T, 1, 1)
            for chi in (0.1, 0.5, 1.0, 2.0, 5.0)}
    elapsed = time.perf_counter() - t0
    bad = {c: round(v, 4) for c, v in vals.items() if abs(v - 1) > 0.005}
    ok = not bad and elapsed < 10
    acceptance(2, "oscillator T f_11 = 1 within 0.5% at lam T = 15",
               ok, f"values {({c: round(v, 5) for c, v in vals.items()})}; failing {bad}; "
                   f"{elapsed:.1f}s")
    assert ok


def test_c03_figure_families(acceptance):
    t0 = time.perf_counter()
    n_max = 300
    monotone = {}
    f11 = {}
    for chi in FIG1_CHI + FIG2_CHI:
        d = osc_table(OscParams.from_chi(chi, lambda_T=10.0), T, n_max).diagonal()
        monotone[chi] = bool(np.all(np.diff(d) < 0))
        f11[chi] = d[0]
    plateau = {chi: f11[chi] / fnn_interp_jc(1, T, JCParams.from_chi(chi, lambda_T=10.0))
               for chi in FIG2_CHI}
    scaled = [chi ** 2 * f11[chi] for chi in FIG2_CHI]
    spread = max(scaled) / min(scaled) - 1
    elapsed = time.perf_counter() - t0
    plateau_bad = {c: round(float(r), 4) for c, r in plateau.items() if abs(r - 1) > 0.05}
    ok = all(monotone.values()) and not plateau_bad and spread < 0.10 and elapsed < 120
    acceptance(3, "figure 1/2 families",
               ok, f"monotone {all(monotone.values())}; plateau/interp outside 5% {plateau_bad}; "
                   f"chi^2 T f_11 spread {spread:.3f} (<0.10); {elapsed:.1f}s")
    assert ok


def test_c04_figure3_errors(acceptance):
    t0 = time.perf_counter()
    errs = []
    for chi in FIG3_CHI:
        p = OscParams.from_chi(chi, lambda_T=10.0)
        for n in range(20, 301):
            num = fnn_integral_osc(p, T, n, n)
            anal = fnn_steepest_descent(p, n, T)[0]
            errs.append(((chi, n), (num - anal) / num))
    elapsed = time.perf_counter() - t0
    bad = [k for k, e in errs if abs(e) >= 0.05]
    key, err = worst(errs)
    ok = not bad and elapsed < 120
    acceptance(4, "figure 3 |Er| < 0.05 for n >= 20",
               ok, f"worst {err:+.4g} at (chi, n)={key}; {len(bad)} failing, n range per chi "
                   f"{_ranges(bad)}; {elapsed:.1f}s")
    assert ok


def _ranges(keys):
    out = {}
    for chi, n in keys:
        lo, hi = out.get(chi, (n, n))
        out[chi] = (min(lo, n), max(hi, n))
    return out


def test_c05_power_law_exponents(acceptance):
    t0 = time.perf_counter()
    jc = jc_table(JCParams.from_chi(0.5, lambda_T=10.0), T, 300)
    cases = [("JC", jc, -1.0, 0.02)]
    for chi, target in ((0.05, -2.5), (2.0, -1.5)):
        cases.append((f"osc chi={chi}", osc_table(OscParams.from_chi(chi, lambda_T=10.0), T, 300),
                      target, 0.05))
    slopes = {name: fit_power_law(tab, 50, 300).slope for name, tab, _, _ in cases}
    elapsed = time.perf_counter() - t0
    bad = {name: round(slopes[name], 4) for name, _, target, tol in cases
           if abs(slopes[name] - target) > tol}
    ok = not bad and elapsed < 180
    acceptance(5, "log-log slopes on n in [50, 300]",
               ok, f"slopes {({k: round(v, 4) for k, v in slopes.items()})}; failing {bad}; "
                   f"{elapsed:.1f}s")
    assert ok


def test_c06_stirling_prefactor(acceptance):
    n = 200
    tf = T * fnn_integral_osc(OscParams.from_chi(0.05, lambda_T=10.0), T, n, n)
    stirling = tf / (math.pi * n ** 5) ** -0.5
    # gamma' from the large-n form in the chi -> 0 limit, gamma_5 = 1/sqrt(pi)
    m = 10 ** 6
    gamma_alt = T * fnn_asymptotic(1e-9, m, T) * m ** 2.5
    ratio = gamma_alt * math.sqrt(math.pi)
    ok_stirling = 0.97 <= stirling <= 1.03
    ok_ratio = abs(ratio / 1.04 - 1) < 0.01
    ok = ok_stirling and ok_ratio
    acceptance(6, "Stirling prefactor and gamma'/gamma_5",
               ok, f"T f_nn sqrt(pi n^5) = {stirling:.4g} (need [0.97, 1.03]); "
                   f"gamma'/gamma_5 = {ratio:.5f} (need 1.04 +- 1%)")
    assert ok


def laguerre_with_wide_prefactor(n: int) -> float:
    """Laguerre form of ``Psi(3; 2n+2; 2n)`` with prefactor ``(2n)! / (2 (2n)^{1+2n})``."""
    log_pref = log_factorial(2 * n) - math.log(2.0) - (1 + 2 * n) * math.log(2 * n)
    return math.exp(log_pref) * laguerre_assoc(2, -(2 * n + 1), -2 * n)


def test_c07_special_function_identities(acceptance):
    p = OscParams.from_chi(1.0, lambda_T=30.0)
    tri = {n: fnn_tricomi(n, T) / fnn_integral_osc(p, T, n, n) - 1 for n in range(1, 51)}
    lag = {n: laguerre_with_wide_prefactor(n) / tricomi_psi_3(n) - 1 for n in (2, 3, 4)}
    tri_bad = [n for n, e in tri.items() if abs(e) > 1e-6]
    lag_bad = {n: f"{e:+.3g}" for n, e in lag.items() if abs(e) > 1e-8}
    ok = not tri_bad and not lag_bad
    acceptance(7, "Tricomi and Laguerre identities",
               ok, f"Tricomi worst rel {max(map(abs, tri.values())):.2g} (1e-6), failing "
                   f"{tri_bad}; Laguerre rel errors {({n: f'{e:+.3g}' for n, e in lag.items()})}, "
                   f"failing {sorted(lag_bad)}")
    assert ok


def test_c08_critical_continuity(acceptance):
    sd, quad = {}, {}
    for n in (10, 50):
        lo = OscParams.from_chi(1 - 1e-4, lambda_T=10.0)
        hi = OscParams.from_chi(1 + 1e-4, lambda_T=10.0)
        a, b = fnn_steepest_descent(lo, n, T)[0], fnn_steepest_descent(hi, n, T)[0]
        sd[n] = abs(a - b) / abs(b)
        a, b = fnn_integral_osc(lo, T, n, n), fnn_integral_osc(hi, T, n, n)
        quad[n] = abs(a - b) / abs(b)
    ok = all(v < 1e-3 for v in (*sd.values(), *quad.values()))
    acceptance(8, "continuity across chi = 1 +- 1e-4",
               ok, f"steepest descent {({n: f'{v:.2g}' for n, v in sd.items()})}; "
                   f"quadrature {({n: f'{v:.2g}' for n, v in quad.items()})} (1e-3)")
    assert ok


def test_c09_off_diagonal_suppression(acceptance):
    ratios = {}
    bounds = {}
    pj = JCParams.from_chi(0.5, lambda_T=10.0, omega_over_g=1e3)
    ratios["JC"] = abs(fmn_jc(pj, T, 2, 1)) / fmn_jc(pj, T, 1, 1)
    bounds["JC"] = 10 * pj.lam / pj.omega
    po = OscParams.from_chi(0.5, lambda_T=10.0, omega_over_g=1e3)
    ratios["osc"] = abs(fnn_integral_osc(po, T, 2, 1)) / fnn_integral_osc(po, T, 1, 1)
    bounds["osc"] = 10 * po.lam / po.omega_a
    ok = all(ratios[k] <= bounds[k] for k in ratios)
    acceptance(9, "|f_21| / f_11 <= 10 lam/omega",
               ok, ", ".join(f"{k} {ratios[k]:.2g} (bound {bounds[k]:.2g})" for k in ratios))
    assert ok


def _rand_osc(rng, lam=None):
    g = rng.uniform(0.5, 3.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    wa = rng.uniform(1.0, 5.0)
    lam = rng.uniform(0.1, 6.0) if lam is None else lam
    return OscParams(wa, wa + rng.uniform(-1, 1), g, lam)


def _rand_jc(rng, lam=None):
    w = rng.uniform(1.0, 5.0)
    g = rng.uniform(0.5, 3.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    lam = rng.uniform(0.1, 6.0) if lam is None else lam
    return JCParams(w + rng.uniform(-1, 1), w, g, lam)


def test_c10_factorization_oracle(acceptance):
    from qjump.oscillator import SingularFactorizationError

    rng = np.random.default_rng(2024)
    cap, d = 2, 3
    idx = [nb * d + na for nb in range(d) for na in range(d) if nb + na <= cap]
    err_osc = err_jc = 0.0
    for _ in range(20):
        p, t = _rand_osc(rng), rng.uniform(0.05, 2.0)
        E = sl.expm(-1j * effective_hamiltonian_osc(p, d) * t)
        U = su11_evolution(p, t, cap)
        err_osc = max(err_osc, np.max(np.abs(U - E)[np.ix_(idx, idx)]))
        q, dj = _rand_jc(rng), 6
        keep = np.ones(2 * dj, bool)
        keep[EXCITED * dj + dj - 1] = False
        E = sl.expm(-1j * effective_hamiltonian(q, dj) * t)
        U = jc_evolution(q, t, dj).U
        err_jc = max(err_jc, np.max(np.abs(U - E)[np.ix_(keep, keep)]))

    contraction = unitary = True
    skipped = 0
    for _ in range(100):
        t = rng.uniform(0.0, 3.0)
        for lam in (None, 0.0):
            try:
                U = su11_evolution(_rand_osc(rng, lam), t, 3)
            except SingularFactorizationError:
                skipped += 1
                continue
            V = jc_evolution(_rand_jc(rng, lam), t, 6).U
            if lam is None:
                contraction &= np.linalg.norm(U, 2) <= 1 + 1e-10
                contraction &= np.linalg.norm(V, 2) <= 1 + 1e-10
            else:
                ib = [nb * 4 + na for nb in range(4) for na in range(4) if nb + na <= 3]
                B = U[np.ix_(ib, ib)]
                unitary &= np.allclose(B.conj().T @ B, np.eye(len(ib)), atol=1e-9)
                keep = np.ones(12, bool)
                keep[EXCITED * 6 + 5] = False
                unitary &= np.allclose((V.conj().T @ V)[np.ix_(keep, keep)],
                                       np.eye(11), atol=1e-9)
    ok = err_osc < 1e-9 and err_jc < 1e-9 and contraction and unitary
    acceptance(10, "factorization vs matrix exponential",
               ok, f"su(1,1) max err {err_osc:.2g}, JC max err {err_jc:.2g} (1e-9); "
                   f"contraction {contraction}, unitarity {unitary}, "
                   f"{skipped} singular samples skipped")
    assert ok


def test_c11_trajectories(acceptance):
    t0 = time.perf_counter()
    pj = JCParams.from_chi(0.5, lambda_T=10.0)
    po = OscParams.from_chi(0.3, lambda_T=15.0)
    cases = {
        "JC |5>": (TrajectoryConfig("jc", pj, T, fock_projector(5, 6), 100_000, 20240611),
                   fmn_jc(pj, T, 5, 5)),
        "osc |1>": (TrajectoryConfig("oscillator", po, T, fock_projector(1, 2), 100_000,
                                     20240612), fnn_integral_osc(po, T, 1, 1)),
    }
    z = {}
    identical = True
    for name, (cfg, ref) in cases.items():
        a = sample_first_jumps(cfg)
        b = sample_first_jumps(cfg, workers=4, chunk_size=10_000)
        identical &= a.first_jump_times.tobytes() == b.first_jump_times.tobytes()
        z[name] = a.z_score(ref)
    elapsed = time.perf_counter() - t0
    ok = all(abs(v) <= 3 for v in z.values()) and identical and elapsed < 60
    acceptance(11, "trajectory ensembles within 3 sigma",
               ok, f"z {({k: round(v, 3) for k, v in z.items()})}; byte-identical {identical}; "
                   f"{elapsed:.1f}s")
    assert ok


def _sd_ratio_errors(p, n, undamped=False):
    rho = fock_projector(n, n + 2)
    errs = []
    for k in (1e-3, 5e-4, 2.5e-4):
        dt = k / (p.abs_g * math.sqrt(n + 1))
        exact = np.trace(transition_superop_jc(p, dt, rho)).real
        if undamped:
            exact *= math.exp(p.lam * dt)
        sd = np.trace(small_dt_qjs(p, dt, rho)).real
        errs.append(abs(exact / sd - 1))
    return errs


def test_c12_sd_limit(acceptance):
    p = JCParams.from_chi(0.5, lambda_T=10.0)
    orders = {}
    for n in range(1, 6):
        e = _sd_ratio_errors(p, n)
        orders[n] = (math.log2(e[0] / e[1]), math.log2(e[1] / e[2]))
    ok = all(min(o) >= 1.9 for o in orders.values())
    # diagnostic: without the exp(-lam dt) survival factor the remainder is quadratic
    undamped = {n: math.log2(np.divide(*_sd_ratio_errors(p, n, True)[:2])) for n in range(1, 6)}
    acceptance(12, "SD limit with quadratic convergence",
               ok, f"observed orders {({n: round(min(o), 2) for n, o in orders.items()})} "
                   f"(need ~2); damping-removed orders "
                   f"{({n: round(v, 2) for n, v in undamped.items()})}")
    assert ok
