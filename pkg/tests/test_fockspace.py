import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gemsim import fockspace as fs

small = st.floats(-1.5, 1.5, allow_nan=False)
amplitudes = st.builds(complex, small, small)


def test_coherent_coeffs_match_poisson_weights():
    alpha = 1.3 - 0.4j
    vec = fs.coherent_coeffs(alpha, 40)
    n = np.arange(41)
    mean = abs(alpha) ** 2
    poisson = np.array([math.exp(-mean) * mean ** k / math.factorial(k) for k in n])
    assert np.allclose(np.abs(vec.coeffs) ** 2, poisson, atol=1e-15)
    assert vec.norm_deficit < 1e-12


@given(amplitudes)
@settings(max_examples=40, deadline=None)
def test_number_statistics_are_poissonian(alpha):
    n_max = fs.default_cutoff(abs(alpha))
    vec = fs.coherent_coeffs(alpha, n_max)
    num = fs.number_operator(n_max)
    mean = vec.expectation(num).real
    second = vec.expectation(num @ num).real
    assert mean == pytest.approx(abs(alpha) ** 2, abs=1e-9)
    assert second - mean ** 2 == pytest.approx(abs(alpha) ** 2, abs=1e-9)


def test_annihilation_eigenvalue():
    alpha = 0.7 + 0.9j
    n_max = 40
    vec = fs.coherent_coeffs(alpha, n_max)
    out = fs.apply(fs.annihilation(n_max), vec)
    # the top level is cut, compare below it
    assert np.allclose(out.coeffs[:-1], alpha * vec.coeffs[:-1], atol=1e-14)


def test_cutoff_too_small_reports_deficit():
    with pytest.raises(fs.CutoffTooSmall) as err:
        fs.coherent_coeffs(3.0, 5)
    assert err.value.deficit > 0.1


def test_displacement_cutoff_check():
    with pytest.raises(fs.CutoffTooSmall):
        fs.displacement_matrix(4.0, 12)
    op = fs.displacement_matrix(1.0, 40)
    assert op.unitarity_defect(fs.displacement_margin(1.0, 40)) < 1e-8


def test_apply_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        fs.apply(fs.number_operator(5), fs.fock_state(0, 6))


@given(amplitudes, amplitudes)
@settings(max_examples=40, deadline=None)
def test_overlap_closed_form_against_truncated_numerics(alpha, beta):
    n_max = fs.default_cutoff(max(abs(alpha), abs(beta)))
    numeric = fs.coherent_coeffs(alpha, n_max).inner(fs.coherent_coeffs(beta, n_max))
    assert abs(numeric - fs.overlap(alpha, beta)) < 1e-9
    assert abs(fs.overlap(alpha, beta)) ** 2 == pytest.approx(math.exp(-abs(alpha - beta) ** 2), rel=1e-12)


@given(amplitudes, amplitudes)
@settings(max_examples=30, deadline=None)
def test_displacement_acts_with_weyl_phase(beta, gamma):
    # D(beta)|gamma> = exp(i Im(beta gamma^*)) |gamma + beta>
    n_max = fs.default_cutoff(abs(beta) + abs(gamma)) + 10
    start = fs.coherent_coeffs(gamma, n_max)
    moved = fs.apply(fs.displacement_matrix(beta, n_max), start)
    expected = cmath.exp(1j * (beta * gamma.conjugate()).imag) * fs.coherent_coeffs(gamma + beta, n_max).coeffs
    assert np.max(np.abs(moved.coeffs - expected)) < 1e-9


@given(amplitudes, amplitudes)
@settings(max_examples=20, deadline=None)
def test_displacement_composition(beta, gamma):
    # D(beta) D(gamma) = exp(i Im(beta gamma^*)) D(beta + gamma), compared on low levels
    n_max = 50
    lhs = fs.displacement_matrix(beta, n_max) @ fs.displacement_matrix(gamma, n_max)
    rhs = fs.displacement_matrix(beta + gamma, n_max).matrix * cmath.exp(1j * (beta * gamma.conjugate()).imag)
    assert np.max(np.abs(lhs.matrix[:20, :20] - rhs[:20, :20])) < 1e-9


def test_rotation_maps_coherent_label_without_phase():
    alpha, theta = 1.1 + 0.3j, 0.77
    n_max = 40
    out = fs.apply(fs.rotation_matrix(theta, n_max), fs.coherent_coeffs(alpha, n_max))
    assert np.allclose(out.coeffs, fs.coherent_coeffs(alpha * cmath.exp(1j * theta), n_max).coeffs, atol=1e-14)


def test_log_overlap_vectorised():
    a = np.array([0.1, 1j, 2 + 1j])
    b = np.array([0.0, 1.0, -1j])
    vals = np.exp(fs.log_overlap(a, b))
    assert np.allclose(vals, [fs.overlap(x, y) for x, y in zip(a, b)])


def test_non_finite_amplitude_rejected():
    with pytest.raises(ValueError):
        fs.overlap(float("nan"), 0)
