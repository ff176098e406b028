import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qjump.fock import (DiagonalF, DimensionError, JumpSpec, TruncationError, apply_jump,
                        build_ladder_ops, check_leakage, diag_part, fock_projector, leakage,
                        phase_ops, sandwich, validate_density_matrix)


def random_density(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def test_ladder_dim2():
    a, ad, num = build_ladder_ops(2)
    assert np.array_equal(a, [[0, 1], [0, 0]])
    assert np.array_equal(ad, a.conj().T)


def test_ladder_sqrt_rule():
    a, _, _ = build_ladder_ops(4)
    assert a[2, 3] == pytest.approx(1.7320508, abs=1e-7)
    nz = np.argwhere(a != 0)
    assert all(j == i + 1 for i, j in nz)


def test_number_operator_dim3():
    _, _, num = build_ladder_ops(3)
    assert np.allclose(num, np.diag([0, 1, 2]))


def test_ladder_ops_read_only():
    a, _, _ = build_ladder_ops(3)
    with pytest.raises(ValueError):
        a[0, 1] = 5.0


@pytest.mark.parametrize("dim", [0, 1, 2.5])
def test_ladder_invalid_dim(dim):
    with pytest.raises(DimensionError):
        build_ladder_ops(dim)


def test_adjoint_involution():
    a, ad, _ = build_ladder_ops(6)
    assert np.array_equal(ad.conj().T, a)


def test_phase_ops_identities():
    dim = 8
    em, ep = phase_ops(dim)
    assert np.allclose(ep, em.conj().T)
    k = dim - 1  # truncation row excluded
    assert np.allclose((em @ ep)[:k, :k], np.eye(k), atol=1e-14)
    proj = np.eye(dim)
    proj[0, 0] = 0
    assert np.allclose((ep @ em)[:k, :k], proj[:k, :k], atol=1e-14)


def test_e_minus_definition():
    a, _, num = build_ladder_ops(6)
    em, _ = phase_ops(6)
    scale = np.diag(1 / np.sqrt(np.diag(num).real + 1))
    assert np.allclose(em, scale @ a, atol=1e-15)


def test_apply_jump_vacuum_is_zero():
    spec = JumpSpec(2.0, DiagonalF.power_law(5, 0.7))
    assert np.allclose(apply_jump(spec, fock_projector(0, 5)), 0)


def test_apply_jump_single_photon():
    out = apply_jump(JumpSpec.srinivas_davies(1.0, 4), fock_projector(1, 4))
    assert np.allclose(out, fock_projector(0, 4))


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_e_model_unit_rate(n):
    out = apply_jump(JumpSpec.e_model(1.0, 10), fock_projector(n, 10))
    assert np.allclose(out, fock_projector(n - 1, 10), atol=1e-14)


def test_apply_jump_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply_jump(JumpSpec.srinivas_davies(1.0, 4), fock_projector(1, 5))


def test_apply_jump_requires_positive_gamma():
    with pytest.raises(ValueError):
        JumpSpec(0.0, DiagonalF.ones(3))


def test_apply_jump_diagonal_only():
    rho = random_density(np.random.default_rng(1), 6)
    spec = JumpSpec(1.5, DiagonalF.power_law(6, 1.25), diagonal_only=True)
    out = apply_jump(spec, rho)
    assert np.allclose(out, np.diag(np.diag(out)))
    full = apply_jump(JumpSpec(1.5, spec.F, diagonal_only=False), rho)
    assert np.allclose(np.diag(out), np.diag(full))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10))
def test_sd_jump_equals_plain_sandwich(seed, gamma):
    rho = random_density(np.random.default_rng(seed), 7)
    a, _, _ = build_ladder_ops(7)
    out = apply_jump(JumpSpec.srinivas_davies(gamma, 7), rho)
    assert np.allclose(out, gamma * a @ rho @ a.conj().T, rtol=0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sandwich_keeps_psd(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 8)
    op = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    out = sandwich(op, rho)
    assert np.allclose(out, out.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(out).min() >= -1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_jump_trace_is_mean_number(seed):
    rho = random_density(np.random.default_rng(seed), 9)
    a, _, _ = build_ladder_ops(9)
    direct = sum(n * rho[n, n].real for n in range(9))
    assert np.trace(a @ rho @ a.conj().T).real == pytest.approx(direct, abs=1e-12)


def test_diag_part_examples():
    assert np.array_equal(diag_part(np.eye(3)), np.eye(3))
    assert np.array_equal(diag_part(np.array([[1, 2], [3, 4]])), [[1, 0], [0, 4]])


@given(arrays(np.float64, (4, 4), elements=st.floats(-5, 5)))
def test_diag_part_keeps_hermiticity_and_trace(x):
    h = x + x.T
    d = diag_part(h)
    assert np.array_equal(d, d.T)
    assert np.trace(d) == np.trace(h)


def test_diag_part_needs_square():
    with pytest.raises(DimensionError):
        diag_part(np.zeros((2, 3)))


def test_diagonal_f_power_law():
    F = DiagonalF.power_law(50, 0.75)
    n = np.arange(50)
    assert np.allclose(F.values, (n + 1.0) ** -0.75, rtol=1e-14, atol=0)
    with pytest.raises(ValueError):
        DiagonalF(np.array([1.0, -0.1]))


def test_validate_density_matrix():
    rho = random_density(np.random.default_rng(0), 5)
    validate_density_matrix(0.5 * rho)  # sub-normalized is fine
    bad = rho.copy()
    bad[0, 1] += 0.1
    with pytest.raises(ValueError):
        validate_density_matrix(bad)
    with pytest.raises(ValueError):
        validate_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        validate_density_matrix(2 * rho)


def test_leakage_guard():
    rho = np.diag([0.5, 0.5 - 1e-6, 0.0, 1e-6])
    assert leakage(rho) == pytest.approx(1e-6)
    with pytest.raises(TruncationError):
        check_leakage(rho)
    assert check_leakage(np.diag([1.0, 0, 0, 0])) == 0.0
