import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdpinn import net, transform
from cdpinn.errors import ConfigError, ShapeError
from cdpinn.transform import AffineTransform
from oracles import fd_derivs_richardson


def test_apply_examples():
    assert np.array_equal(AffineTransform.identity().apply([0.3]), [[0.3]])
    assert AffineTransform((100.0,), (-1.0,)).apply([1.0])[0, 0] == 0.0
    t = AffineTransform((1.0, 10.0), (0.0, -1.0))
    assert np.array_equal(t.apply(np.array([[0.5, 1.0]])), [[0.5, 0.0]])


def test_zero_scale_rejected():
    with pytest.raises(ConfigError):
        AffineTransform((0.0,), (1.0,))
    with pytest.raises(ConfigError):
        AffineTransform((1.0, 2.0), (0.0,))


def test_dimension_mismatch():
    with pytest.raises(ShapeError):
        AffineTransform((1.0, 1.0), (0.0, 0.0)).apply(np.zeros((3, 1)))


def test_identity_is_bitwise_neutral():
    p = net.init_xavier([2, 6, 1], 4)
    x = np.random.default_rng(1).uniform(-1, 1, (10, 2))
    assert np.array_equal(transform.evaluate(p, AffineTransform.identity(2), x), net.forward(p, x))


def test_jet_scaling_rule():
    # d1 picks up a, d2 picks up a^2 relative to derivatives in the transformed variable
    p = net.init_xavier([1, 5, 1], 2)
    a, b = 7.0, -0.3
    x = np.linspace(0.1, 0.9, 5)
    t = AffineTransform((a,), (b,))
    j = transform.jet(p, t, x)
    z = net.trace(p, t.apply(x), 0)
    assert np.allclose(j.d1, a * z.d1, rtol=1e-14)
    assert np.allclose(j.d2, a * a * z.d2, rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    a=st.floats(0.2, 20.0) | st.floats(-20.0, -0.2),
    b=st.floats(-1.5, 1.5),
    coord=st.integers(0, 1),
)
def test_chain_rule_against_finite_differences(seed, a, b, coord):
    p = net.init_xavier([2, 6, 4, 1], seed)
    t = AffineTransform((1.3, a) if coord else (a, 0.7), (0.2, b) if coord else (b, -0.1))
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (5, 2))
    j = transform.jet(p, t, x, coord)
    step = np.zeros(2)
    step[coord] = 1.0
    d1, _ = fd_derivs_richardson(lambda q: transform.evaluate(p, t, q), x, step, 1e-3 / abs(a))
    _, d2 = fd_derivs_richardson(lambda q: transform.evaluate(p, t, q), x, step, 1e-2 / abs(a))
    scale1 = max(np.max(np.abs(j.d1)), abs(a) * 1e-3)
    scale2 = max(np.max(np.abs(j.d2)), a * a * 1e-3)
    assert np.max(np.abs(j.d1 - d1)) / scale1 < 1e-6
    assert np.max(np.abs(j.d2 - d2)) / scale2 < 1e-6
