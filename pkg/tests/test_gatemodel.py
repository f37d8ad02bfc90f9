import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gemsim import analysis, fockspace, gatemodel as gm, register
from gemsim.config import ExperimentConfig


def _wrap(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def _angle_dist(a, b):
    return abs(_wrap(a - b))


def _only_11(alpha0, xi, w):
    return gm.GateParams(alpha0, [0, 0, 0, xi], w, [0, 0, 0, w * xi])


@pytest.mark.parametrize("alpha, xi, w", [(0.0, 0.3, 1.0), (1.5, 0.2, 0.7), (3.0, 1.0, 2.5)])
def test_branch_11_label_and_phase(alpha, xi, w):
    final, _ = gm.run_protocol(_only_11(alpha, xi, w))
    s = 1j * math.sqrt(xi)
    assert final.labels[3, 0] == pytest.approx((alpha + s) * cmath.exp(1j * w) - s)
    assert final.labels[0, 0] == pytest.approx(alpha * cmath.exp(1j * w))
    # Weyl phases of the two displacements, worked out by hand for real alpha
    expected = alpha * math.sqrt(xi) * (1 - math.cos(w)) + xi * math.sin(w)
    with pytest.warns(gm.NonElasticWarning):
        phases = gm.branch_phases(final)
    assert _angle_dist(phases[3], expected) < 1e-12
    assert np.allclose(phases[:3], 0)


@pytest.mark.parametrize("alpha, bound", [(10, 1.1e-2), (100, 1.1e-4), (1000, 1.1e-6)])
def test_large_alpha_split_approaches_ideal_gate(alpha, bound):
    params = gm.large_alpha_params(alpha, [0, 0, 0, math.pi])
    final, rho = gm.run_protocol(params)
    ideal = register.to_density(gm.ideal_final_state(params.phi_target))
    assert analysis.trace_distance(rho, ideal) < bound
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", gm.NonElasticWarning)
        phases = gm.branch_phases(final)
    # the phase approaches pi from above, so it sits near -pi after folding
    assert _angle_dist(phases[3], math.pi) < 10 / alpha ** 2


@given(st.floats(0.01, 3.0), st.floats(0.0, 2.0))
@settings(max_examples=30, deadline=None)
def test_entropy_after_first_displacement(xi, alpha):
    state = gm.apply_U1(gm.initial_state(alpha), _only_11(alpha, xi, 1.0))
    # direct 4x4 Gram: only pairs involving branch 11 have overlap magnitude e^{-xi/2}
    gram = np.ones((4, 4))
    gram[3, :3] = gram[:3, 3] = math.exp(-xi / 2)
    oracle = 1 - np.sum(gram ** 2) / 16
    assert gm.field_mass_entanglement(state) == pytest.approx(oracle, abs=1e-9)
    assert gm.field_mass_entanglement(state) == pytest.approx(3 / 8 * (1 - math.exp(-xi)), abs=1e-9)


def test_numeric_backend_matches_on_one_point():
    params = _only_11(1.0, 0.25, 1.0)
    _, exact = gm.run_protocol(params)
    numeric, norms = gm.run_protocol_numeric(params, return_norms=True)
    assert analysis.trace_distance(exact, numeric) < 1e-10
    assert min(norms) > 1 - 1e-9


def test_numeric_backend_detects_small_cutoff():
    with pytest.raises(fockspace.CutoffTooSmall):
        gm.run_protocol_numeric(_only_11(2.0, 0.5, 1.0), n_max=6)


def test_gate_params_validation():
    with pytest.raises(ValueError):
        gm.GateParams(0, [0, 0, 0, -1], 1.0, [0, 0, 0, 0])
    with pytest.raises(ValueError):
        gm.GateParams(0, [0, 0, 1], 1.0, [0, 0, 0])
    with pytest.raises(ValueError):
        gm.GateParams.from_phases(1, [0, 0, 0, 1], 0.0)


def test_protocol_is_local_and_normalised():
    final, rho = gm.run_protocol(_only_11(1.0, 0.5, 0.8))
    assert final.norm == pytest.approx(1.0)
    assert np.trace(rho).real == pytest.approx(1.0)


def test_newtonian_phases_default_experiment():
    config = ExperimentConfig()
    phases = gm.newtonian_phases(config)
    k = config.constants
    rate = k.G * 1e-12 ** 2 / (k.hbar * 1e-4)
    assert phases[3] == pytest.approx(rate * 5e-4, rel=1e-12)
    assert np.all(phases[:3] == 0)


@pytest.mark.parametrize("split, largest_xi", [("physical", None), ("unit", 0.5)])
def test_split_modes(split, largest_xi):
    config = ExperimentConfig()
    params = gm.newtonian_params(config, split)
    if largest_xi is None:
        largest_xi = config.planck_ratio_sq
    assert max(params.xi) == pytest.approx(largest_xi, rel=1e-12)
    assert np.allclose(params.w * params.xi, params.phi_target, rtol=1e-12)


def test_large_alpha_split_needs_big_amplitude():
    config = ExperimentConfig(alpha0=0.5)
    with pytest.raises(ValueError):
        gm.newtonian_params(config, "large-alpha")
