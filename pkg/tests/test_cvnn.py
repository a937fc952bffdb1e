import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridbf.cvnn import (
    AdamState,
    CvnnNetwork,
    Layer,
    LayerSpec,
    adam_step,
    backward,
    chain_specs,
    cprelu,
    crelu,
    e2e_loss,
    flatten_grads,
    flatten_params,
    forward,
    init_network,
    mae_loss,
)
from hybridbf.errors import DimensionMismatch
from hybridbf.numerics import RngStream

from conftest import random_complex
from gradcheck import max_relative_error, numeric_gradients

finite_complex = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def _net(widths, act, seed, bias_scale=0.3, output="linear"):
    net = init_network(chain_specs(widths, act, output), RngStream(seed))
    for i, layer in enumerate(net.layers):
        layer.bias = bias_scale * random_complex(layer.bias.shape, seed + 100 + i)
    return net


def _identity_layer(n, activation="linear"):
    return Layer(np.eye(n, dtype=complex), np.zeros(n, dtype=complex), activation)


# ---------------------------------------------------------------- activations


def test_crelu_examples():
    np.testing.assert_equal(crelu(np.array([1 - 2j, -1 + 3j, 0j])), [1 + 0j, 3j, 0j])


def test_cprelu_examples():
    assert cprelu(np.array([-2 + 1j]), 0.1)[0] == pytest.approx(-0.2 + 1j)
    z = random_complex(10, 1)
    np.testing.assert_array_equal(cprelu(z, 1.0), z)


def test_activations_keep_shape():
    z = random_complex((3, 4), 2)
    assert crelu(z).shape == (3, 4)
    assert cprelu(z, 0.3).shape == (3, 4)
    assert np.ndim(crelu(np.complex128(-1 + 1j))) == 0


@given(finite_complex, st.floats(1e-3, 1e3), st.floats(1e-3, 1.0))
def test_positive_homogeneity(z, c, a):
    z = np.array([z])
    np.testing.assert_allclose(crelu(c * z), c * crelu(z), rtol=1e-12, atol=0)
    np.testing.assert_allclose(cprelu(c * z, a), c * cprelu(z, a), rtol=1e-12, atol=0)


def test_homogeneity_example():
    z = random_complex(100, 3)
    np.testing.assert_allclose(cprelu(3.7 * z, 0.25), 3.7 * cprelu(z, 0.25), rtol=1e-12)


# ---------------------------------------------------------------- network structure


def test_layer_spec_validation():
    with pytest.raises(ValueError):
        LayerSpec(0, 2)
    with pytest.raises(ValueError):
        LayerSpec(2, 2, "tanh")


def test_network_dims_must_chain():
    with pytest.raises(DimensionMismatch):
        CvnnNetwork([_identity_layer(2), _identity_layer(3)])


def test_network_rejects_nonpositive_slope():
    layer = _identity_layer(2, "cprelu")
    layer.slope = np.array([0.0])
    with pytest.raises(ValueError):
        CvnnNetwork([layer])


def test_init_statistics():
    net = init_network([LayerSpec(200, 300, "cprelu")], RngStream(0), slope=0.5)
    w = net.layers[0].weight
    assert np.var(w.real) == pytest.approx(1 / 500, rel=0.02)
    assert np.var(w.imag) == pytest.approx(1 / 500, rel=0.02)
    np.testing.assert_array_equal(net.layers[0].bias, 0)
    assert net.layers[0].slope[0] == 0.5


def test_chain_specs():
    specs = chain_specs([2, 4, 4, 3], "cprelu")
    assert [(s.in_dim, s.out_dim, s.activation) for s in specs] == [
        (2, 4, "cprelu"), (4, 4, "cprelu"), (4, 3, "linear")]


# ---------------------------------------------------------------- forward


def test_forward_identity():
    x = random_complex(3, 4)
    np.testing.assert_array_equal(CvnnNetwork([_identity_layer(3)])(x), x)


def test_forward_single_crelu_layer():
    y, _ = forward(CvnnNetwork([_identity_layer(2, "crelu")]), np.array([-1 + 2j, 3 - 1j]))
    np.testing.assert_array_equal(y, [2j, 3 + 0j])


def test_forward_matches_straight_line_evaluation():
    net = _net([3, 5, 2], "cprelu", seed=1)
    l1, l2 = net.layers
    a = l1.slope[0]
    for i in range(10):
        x = random_complex(3, 50 + i)
        z = l1.weight @ x + l1.bias
        h = np.where(z.real < 0, a * z.real, z.real) + 1j * np.where(z.imag < 0, a * z.imag, z.imag)
        y = l2.weight @ h + l2.bias
        np.testing.assert_allclose(net(x), y, rtol=0, atol=1e-12)


def test_forward_batch_equals_rowwise():
    net = _net([3, 6, 2], "crelu", seed=2)
    x = random_complex((7, 3), 3)
    batch = net(x)
    for i in range(7):
        np.testing.assert_allclose(batch[i], net(x[i]), atol=1e-14)


def test_forward_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(_net([3, 2], "crelu", 0), np.zeros(4))


def test_forward_is_pure():
    net = _net([3, 4, 2], "cprelu", seed=5)
    x = random_complex((4, 3), 6)
    np.testing.assert_array_equal(net(x), net(x))


# ---------------------------------------------------------------- losses


def test_mae_zero_error():
    y = random_complex(5, 1)
    loss, grad = mae_loss(y, y)
    assert loss == 0.0
    np.testing.assert_array_equal(grad, 0)


def test_mae_modulus():
    assert mae_loss(np.array([3 + 4j]), np.array([0j]))[0] == pytest.approx(5.0)


def test_mae_gradient_matches_finite_differences():
    y, t = random_complex(6, 1), random_complex(6, 2)
    _, grad = mae_loss(y, t)
    step = 1e-6
    for k in range(6):
        for unit in (1.0, 1j):
            d = np.zeros(6, complex)
            d[k] = step * unit
            num = (mae_loss(y + d, t)[0] - mae_loss(y - d, t)[0]) / (2 * step)
            ana = grad[k].real if unit == 1.0 else grad[k].imag
            assert ana == pytest.approx(num, rel=1e-6)


def test_e2e_loss_zero_at_inverse():
    g = RngStream(3)
    h = random_complex((4, 6), 1)
    c = random_complex((2, 4), 2)
    s = random_complex(2, 3)
    net = init_network([LayerSpec(2, 6)], g)
    net.layers[0].weight = np.linalg.pinv(c @ h)  # C H W = I
    loss, _ = e2e_loss(net, s, c, h)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_e2e_loss_zero_output():
    net = init_network([LayerSpec(2, 6)], RngStream(0))
    net.layers[0].weight[:] = 0
    s = random_complex(2, 7)
    loss, _ = e2e_loss(net, s, random_complex((2, 4), 1), random_complex((4, 6), 2))
    assert loss == pytest.approx(np.linalg.norm(s))


def test_e2e_loss_gradient():
    net = _net([2, 5, 6], "cprelu", seed=4)
    c, h = random_complex((2, 4), 5), random_complex((4, 6), 6)
    s = random_complex((3, 2), 7)
    _, grads = e2e_loss(net, s, c, h)
    numeric, valid = numeric_gradients(net, lambda: e2e_loss(net, s, c, h)[0], s)
    assert max_relative_error(grads, numeric, valid) <= 1e-5


def test_e2e_dimension_mismatch():
    net = _net([2, 6], "linear", 0)
    with pytest.raises(DimensionMismatch):
        e2e_loss(net, random_complex(2, 1), random_complex((3, 4), 2), random_complex((4, 6), 3))


# ---------------------------------------------------------------- backward


def test_backward_sign_pattern_single_linear():
    net = CvnnNetwork([Layer(np.array([[1.0 + 0j]]), np.zeros(1, complex))])
    x, t = np.array([1.0 + 0j]), np.array([2.0 - 3j])
    y, cache = forward(net, x)
    _, g = mae_loss(y, t)
    grads = backward(net, cache, g)
    err = y - t
    assert np.sign(grads[1][0].real) == np.sign(err[0].real)
    assert np.sign(grads[1][0].imag) == np.sign(err[0].imag)


def test_backward_zero_output_grad():
    net = _net([3, 4, 2], "cprelu", seed=0)
    y, cache = forward(net, random_complex((5, 3), 1))
    for g in backward(net, cache, np.zeros_like(y)):
        np.testing.assert_array_equal(g, 0)


def test_backward_grad_order_matches_params():
    net = _net([3, 4, 2], "cprelu", seed=0, output="cprelu")
    y, cache = forward(net, random_complex((5, 3), 1))
    grads = backward(net, cache, np.ones_like(y))
    assert [g.shape for g in grads] == [p.shape for p in net.params()]


def test_backward_three_layer_crelu():
    net = _net([6, 8, 8, 4], "crelu", seed=11)
    x, t = random_complex((4, 6), 12), random_complex((4, 4), 13)
    y, cache = forward(net, x)
    grads = backward(net, cache, mae_loss(y, t)[1])
    numeric, valid = numeric_gradients(net, lambda: mae_loss(forward(net, x)[0], t)[0], x)
    assert max_relative_error(grads, numeric, valid) <= 1e-5


def test_input_gradient():
    net = _net([3, 5, 2], "cprelu", seed=8)
    x, t = random_complex((2, 3), 9), random_complex((2, 2), 10)
    y, cache = forward(net, x)
    _, gx = backward(net, cache, mae_loss(y, t)[1], return_input_grad=True)
    step = 1e-6
    for i in range(2):
        for k in range(3):
            for unit in (1.0, 1j):
                d = np.zeros_like(x)
                d[i, k] = step * unit
                num = (mae_loss(net(x + d), t)[0] - mae_loss(net(x - d), t)[0]) / (2 * step)
                ana = gx[i, k].real if unit == 1.0 else gx[i, k].imag
                assert ana == pytest.approx(num, rel=1e-5, abs=1e-8)


@given(
    st.lists(st.integers(1, 16), min_size=2, max_size=5),
    st.sampled_from(["crelu", "cprelu", "linear"]),
    st.integers(0, 10**6),
)
def test_gradient_check_random_architectures(widths, act, seed):
    net = _net(widths, act, seed)
    x, t = random_complex((3, widths[0]), seed + 1), random_complex((3, widths[-1]), seed + 2)
    y, cache = forward(net, x)
    grads = backward(net, cache, mae_loss(y, t)[1])
    numeric, valid = numeric_gradients(net, lambda: mae_loss(forward(net, x)[0], t)[0], x)
    assert max_relative_error(grads, numeric, valid) <= 1e-5


def test_gradient_check_twenty_architectures():
    g = np.random.default_rng(0)
    for trial in range(20):
        depth = int(g.integers(1, 4))
        widths = [int(w) for w in g.integers(1, 17, size=depth + 2)]
        net = _net(widths, ("crelu", "cprelu")[trial % 2], seed=trial)
        x, t = random_complex((2, widths[0]), 500 + trial), random_complex((2, widths[-1]), 900 + trial)
        y, cache = forward(net, x)
        grads = backward(net, cache, mae_loss(y, t)[1])
        numeric, valid = numeric_gradients(net, lambda: mae_loss(forward(net, x)[0], t)[0], x)
        assert max_relative_error(grads, numeric, valid) <= 1e-5, f"architecture {widths}"


# ---------------------------------------------------------------- flat buffers and Adam


def test_flatten_params_binds_views():
    net = _net([2, 3, 2], "cprelu", seed=0)
    before = [p.copy() for p in net.params()]
    flat = flatten_params(net)
    for p, b in zip(net.params(), before):
        np.testing.assert_array_equal(p, b)
    flat += 1.0
    np.testing.assert_allclose(net.layers[0].weight, before[0] + (1 + 1j))
    np.testing.assert_allclose(net.layers[0].slope, before[2] + 1)
    assert flatten_grads(before).shape == flat.shape


def test_adam_zero_gradient_leaves_params():
    w = random_complex((2, 2), 1)
    w0 = w.copy()
    state = AdamState(lr=0.1)
    for _ in range(3):
        adam_step([w], [np.zeros_like(w)], state)
    np.testing.assert_array_equal(w, w0)
    assert state.step == 3


def test_adam_first_step_is_sign_like():
    w = np.zeros(3, complex)
    g = np.array([2 - 0.5j, -3 + 1e-3j, 1e-2 - 7j])
    adam_step([w], [g], AdamState(lr=0.01))
    np.testing.assert_allclose(w.real, -0.01 * np.sign(g.real), rtol=1e-5)
    np.testing.assert_allclose(w.imag, -0.01 * np.sign(g.imag), rtol=1e-4)


def test_adam_matches_reference_componentwise():
    w = random_complex(4, 2)
    ref = np.stack([w.real, w.imag], -1).copy()
    state = AdamState(lr=0.05)
    m = np.zeros_like(ref)
    v = np.zeros_like(ref)
    for t in range(1, 6):
        g = random_complex(4, 10 + t)
        adam_step([w], [g], state)
        gr = np.stack([g.real, g.imag], -1)
        m = 0.9 * m + 0.1 * gr
        v = 0.999 * v + 0.001 * gr**2
        ref -= 0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    np.testing.assert_allclose(np.stack([w.real, w.imag], -1), ref, rtol=1e-12)


def test_adam_quadratic_bowl():
    target = np.array([1.5 - 2j, -0.25 + 0.75j])
    w = np.zeros(2, complex)
    state = AdamState(lr=0.05)
    for step in range(5000):
        lr = 0.05 * 0.998**step  # decaying step so Adam settles inside the tolerance
        state.lr = lr
        adam_step([w], [2 * (w - target)], state)
    np.testing.assert_allclose(w, target, atol=1e-6)


def test_adam_length_mismatch():
    with pytest.raises(DimensionMismatch):
        adam_step([np.zeros(2)], [], AdamState())


def test_linear_regression_sanity():
    m = random_complex((2, 3), 0)
    gen = RngStream(1).gen
    s = (gen.choice([-1, 1], (4000, 3)) + 1j * gen.choice([-1, 1], (4000, 3))) / np.sqrt(2)
    y = s @ m.T
    net = init_network([LayerSpec(3, 2)], RngStream(2))
    flat = flatten_params(net)
    state = AdamState(lr=1e-2)
    for epoch in range(30):
        state.lr = 1e-2 * 0.8**epoch
        for b in range(0, 4000, 50):
            out, cache = forward(net, s[b:b + 50])
            _, g = mae_loss(out, y[b:b + 50])
            adam_step([flat], [flatten_grads(backward(net, cache, g))], state)
    assert mae_loss(net(s), y)[0] < 1e-3
