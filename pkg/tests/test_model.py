import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from seqescape.model import (
    Diffusive,
    GaussianPulse,
    NetworkSpec,
    UnitParams,
    chain_network,
    chain_unidirectional,
    coupling_response,
    drift_unit,
    network_drift,
    potential,
    standard_topology,
    two_node_bidirectional,
    two_node_network,
)

P = UnitParams(0.01)
PULSE = GaussianPulse(0.5, 0.1)


def test_unit_equilibria():
    assert drift_unit(1.0, P) == 0.0
    assert drift_unit(-0.1, P) == pytest.approx(0.0, abs=1e-17)
    assert drift_unit(0.1, P) == pytest.approx(0.0, abs=1e-17)
    assert (P.x_q, P.x_s, P.x_a) == (-0.1, 0.1, 1.0)


def test_transit_speed_at_pulse_centre():
    assert drift_unit(0.5, P) == pytest.approx(0.120, abs=1e-12)


@pytest.mark.parametrize("nu", [0.0, 1.0, -0.3, 1.5])
def test_unit_params_range(nu):
    with pytest.raises(ValueError):
        UnitParams(nu)


def test_potential_zero_and_barrier():
    assert potential(0.0, P) == 0.0
    # exact rational evaluation of the quartic
    nu = Fraction(1, 100)

    def v(x):
        return x**4 / 4 - x**3 / 3 + nu * (x - x**2 / 2)

    barrier = v(Fraction(1, 10)) - v(Fraction(-1, 10))
    assert barrier == Fraction(1, 750)
    assert potential(0.1, P) - potential(-0.1, P) == pytest.approx(float(barrier), rel=1e-12)


def test_potential_gradient_is_minus_drift():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1.5, 1.5, 50)
    h = 1e-5
    fd = (potential(x + h, P) - potential(x - h, P)) / (2 * h)
    np.testing.assert_allclose(fd, -drift_unit(x, P), atol=1e-8)


def test_pulse_peak_and_far_field():
    assert coupling_response(0.5, 0.0, PULSE) == pytest.approx(5.64190, abs=1e-5)
    assert PULSE.peak == pytest.approx(1 / (0.1 * math.sqrt(math.pi)), rel=1e-15)
    assert max(PULSE.pulse(-0.1), PULSE.pulse(0.1)) < 1e-6
    assert PULSE.pulse(1.0) < 1e-6


def test_diffusive_response():
    assert coupling_response(0.3, 0.3, Diffusive()) == 0.0
    assert coupling_response(0.7, 0.2, Diffusive()) == pytest.approx(0.5)


def test_pulse_normalisation():
    val, err = integrate.quad(PULSE.pulse, 0.5 - 1.0, 0.5 + 1.0, epsabs=1e-13, epsrel=1e-13)
    assert abs(val - 1.0) < 1e-8


@given(st.floats(0.0, 5.0), st.floats(-2.0, 2.0), st.floats(0.01, 1.0))
def test_pulse_symmetric(d, xc, sigma):
    c = GaussianPulse(xc, sigma)
    assert c.pulse(xc + d) == pytest.approx(c.pulse(xc - d), rel=1e-12, abs=1e-300)


def test_pulse_positive_everywhere_finite():
    assert np.all(PULSE.pulse(np.linspace(-1, 2, 200)) > 0)


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        GaussianPulse(0.5, 0.0)


def test_drift_uncoupled_is_componentwise():
    net = chain_network(3, beta=0.0)
    s = np.array([-0.3, 0.2, 0.9])
    np.testing.assert_array_equal(network_drift(s, net), drift_unit(s, P))


def test_two_node_drift_at_pulse_centre():
    beta = 0.02
    net = two_node_network(beta)
    out = network_drift(np.array([P.x_q, 0.5]), net)
    assert out[0] == pytest.approx(drift_unit(-0.1, P) + beta * 5.641895835477563, rel=1e-12)
    assert out[1] == pytest.approx(drift_unit(0.5, P) + beta * float(PULSE.pulse(-0.1)), rel=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.03, 10.0])
def test_chain_head_is_uncoupled(beta):
    net = chain_network(3, beta=beta)
    s = np.array([0.4, 0.5, 0.45])
    assert network_drift(s, net)[2] == drift_unit(0.45, P)


def test_gradient_consistency_uncoupled():
    net = chain_network(3, beta=0.0)
    rng = np.random.default_rng(2)
    h = 1e-6
    for _ in range(100):
        s = rng.uniform(-1.0, 1.5, 3)
        grad = np.array([(potential(s[i] + h, P) - potential(s[i] - h, P)) / (2 * h) for i in range(3)])
        np.testing.assert_allclose(network_drift(s, net), -grad, atol=1e-9)


@given(st.floats(-1.0, 1.5), st.floats(-1.0, 1.5), st.floats(0.0, 0.1))
def test_two_node_swap_symmetry(a, b, beta):
    net = two_node_network(beta)
    d = network_drift(np.array([a, b]), net)
    ds = network_drift(np.array([b, a]), net)
    assert d[0] == ds[1] and d[1] == ds[0]


def test_standard_topologies():
    assert two_node_bidirectional() == ((1,), (0,))
    assert chain_unidirectional(3) == ((1,), (2,), ())
    assert chain_unidirectional(2) == ((1,), ())
    assert standard_topology("chain_unidirectional", 4) == ((1,), (2,), (3,), ())
    with pytest.raises(ValueError):
        chain_unidirectional(1)
    with pytest.raises(ValueError):
        standard_topology("ring", 3)


def test_network_validation():
    with pytest.raises(ValueError, match="self-loop"):
        NetworkSpec(((0,),))
    with pytest.raises(ValueError, match="outside"):
        NetworkSpec(((1,), (2,)))
    with pytest.raises(ValueError):
        NetworkSpec(((1,), (0,)), beta=-1.0)
    with pytest.raises(ValueError):
        network_drift(np.zeros(3), two_node_network())


def test_csr_layout():
    indptr, indices = chain_network(3).csr()
    assert indptr.tolist() == [0, 1, 2, 2]
    assert indices.tolist() == [1, 2]
