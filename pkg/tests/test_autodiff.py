import numpy as np
import pytest

from slt.autodiff.tensor import make_result
from slt.autodiff import (
    Tape,
    Tensor,
    add,
    add_constant,
    backward,
    batch_norm,
    conv3d,
    dropout,
    embedding,
    exp,
    global_avg_pool3d,
    gradcheck,
    group_norm,
    layer_norm,
    linear,
    log,
    log_softmax,
    matmul,
    max_pool3d,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    softmax,
    sub,
    transpose,
    tsum,
)
from slt.errors import ContractError, NumericalError, ShapeError
from slt.rng import SplitMix64


def rand(rng, *shape, scale=1.0, grad=True):
    return Tensor(scale * rng.normal(shape), requires_grad=grad)


# -- forward values ----------------------------------------------------------------

def test_matmul_examples():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(Tensor(np.eye(2)), a).data, a.data)
    assert np.array_equal(matmul(a, Tensor([[0.0], [0.0]])).data, [[0.0], [0.0]])
    assert np.array_equal(matmul(a, Tensor([[5.0], [6.0]])).data, [[17.0], [39.0]])


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_conv3d_identity_kernel(rng):
    x = Tensor(rng.random((1, 3, 4, 5)))
    out = conv3d(x, Tensor(np.ones((1, 1, 1, 1, 1))))
    assert np.array_equal(out.data, x.data)


def test_conv3d_zero_kernel(rng):
    x = Tensor(rng.random((2, 3, 4, 4)))
    assert not conv3d(x, Tensor(np.zeros((3, 2, 2, 2, 2)))).data.any()


def test_conv3d_window_sum():
    out = conv3d(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones((1, 1, 2, 2, 2))))
    assert out.shape == (1, 1, 1, 1)
    assert out.data.item() == 8.0


def test_conv3d_output_size_and_padding(rng):
    x = Tensor(rng.random((1, 2, 5, 7, 7)))
    out = conv3d(x, Tensor(rng.random((3, 2, 3, 3, 3))), stride=(1, 2, 2), padding=1)
    assert out.shape == (1, 3, 5, 4, 4)


def test_conv3d_matches_direct_loop(rng):
    x = rng.normal((2, 5, 6, 4))
    k = rng.normal((3, 2, 3, 2, 3))
    out = conv3d(Tensor(x), Tensor(k), stride=(2, 1, 1), padding=(1, 0, 1)).data
    xp = np.pad(x, ((0, 0), (1, 1), (0, 0), (1, 1)))
    ref = np.zeros(out.shape)
    for o in range(3):
        for d in range(out.shape[1]):
            for h in range(out.shape[2]):
                for w in range(out.shape[3]):
                    ref[o, d, h, w] = (xp[:, 2 * d:2 * d + 3, h:h + 2, w:w + 3] * k[o]).sum()
    np.testing.assert_allclose(out, ref, rtol=1e-5, atol=1e-5)


def test_conv3d_kernel_too_large():
    with pytest.raises(ShapeError):
        conv3d(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones((1, 1, 3, 3, 3))))


def test_softmax_values():
    np.testing.assert_allclose(softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    np.testing.assert_allclose(softmax(Tensor([1.0, 2.0, 3.0])).data,
                               [0.0900306, 0.2447285, 0.6652410], atol=1e-6)


def test_softmax_sums_and_shift_invariance(rng):
    x = rng.normal((4, 7)) * 5
    p = softmax(Tensor(x)).data
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-6)
    np.testing.assert_allclose(softmax(Tensor(x + 123.0)).data, p, atol=1e-6)


def test_softmax_large_inputs_stable():
    p = softmax(Tensor([1000.0, 1000.0])).data
    np.testing.assert_allclose(p, [0.5, 0.5])


def test_layer_norm_examples():
    one, zero = Tensor(np.ones(2)), Tensor(np.zeros(2))
    np.testing.assert_allclose(layer_norm(Tensor([[1.0, 3.0]]), one, zero, eps=0.0).data, [[-1.0, 1.0]])
    assert not layer_norm(Tensor(np.full((1, 2), 4.0)), one, zero).data.any()
    bias = Tensor([0.5, -2.0])
    np.testing.assert_allclose(layer_norm(Tensor([[1.0, 3.0]]), zero, bias).data, [[0.5, -2.0]])


def test_non_finite_forward_raises():
    with pytest.raises(NumericalError):
        log(Tensor([0.0, 1.0]))


def test_broadcasting_restricted_to_last_axis():
    with pytest.raises(ShapeError):
        add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 1))))
    out = add(Tensor(np.ones((2, 3))), Tensor(np.arange(3.0)))
    assert out.shape == (2, 3)


def test_max_pool_and_global_pool_shapes(rng):
    x = Tensor(rng.random((2, 3, 5, 8, 8)))
    assert max_pool3d(x, 3, 2, 1).shape == (2, 3, 3, 4, 4)
    g = global_avg_pool3d(x)
    np.testing.assert_allclose(g.data, x.data.mean(axis=(2, 3, 4)), rtol=1e-6)


def test_dropout_off_in_eval_and_scaled_in_train():
    x = Tensor(np.ones((100, 100)))
    assert dropout(x, 0.5, SplitMix64(0), training=False) is x
    y = dropout(x, 0.5, SplitMix64(0), training=True).data
    assert set(np.unique(y)) <= {0.0, 2.0}
    assert abs(y.mean() - 1.0) < 0.05


# -- backward ----------------------------------------------------------------------

def test_backward_sum_and_quadratic(rng):
    x = rand(rng, 3, 4)
    backward(tsum(x))
    assert np.array_equal(x.grad, np.ones((3, 4)))
    x.grad = None
    backward(mul(tsum(mul(x, x)), 0.5))
    np.testing.assert_allclose(x.grad, x.data, rtol=1e-6)


def test_backward_accumulates_without_reset(rng):
    x = rand(rng, 5)
    backward(tsum(x))
    backward(tsum(x))
    assert np.array_equal(x.grad, np.full(5, 2.0))


def test_backward_requires_scalar(rng):
    with pytest.raises(ContractError):
        backward(mul(rand(rng, 3), 2.0))


def test_tape_is_topological_and_visits_once(rng):
    x = rand(rng, 3)
    y = mul(x, 2.0)
    z = add(y, y)  # y reached twice
    loss = tsum(mul(z, y))
    tape = Tape.record(loss)
    ids = [id(n) for n in tape.nodes]
    assert len(ids) == len(set(ids))
    pos = {id(n): i for i, n in enumerate(tape.nodes)}
    for node in tape.nodes:
        for parent in node._parents:
            assert pos[id(parent)] < pos[id(node)]
    backward(loss, tape)
    np.testing.assert_allclose(x.grad, 16 * x.data, rtol=1e-6)  # d/dx sum(4x * 2x)


def test_backward_deterministic(rng):
    x = rand(rng, 1, 3, 3, 3)
    k = rand(rng, 2, 1, 2, 2, 2)
    grads = []
    for _ in range(2):
        x.grad = k.grad = None
        backward(tsum(relu(conv3d(x, k))))
        grads.append((x.grad.copy(), k.grad.copy()))
    assert np.array_equal(grads[0][0], grads[1][0]) and np.array_equal(grads[0][1], grads[1][1])


def test_no_grad_builds_no_graph(rng):
    x = rand(rng, 3)
    with no_grad():
        y = mul(x, 2.0)
    assert not y.requires_grad


# -- gradient checks (f32, extents <= 4) ----------------------------------------

def _cases():
    r = SplitMix64(77)
    const = r.normal((3, 4))
    ids = np.array([[0, 2, 2], [2, 1, 0]])
    emb_mult = Tensor(r.normal((2, 3, 4)))

    def case(name, make):
        return pytest.param(make, id=name)

    return [
        case("add", lambda x: tsum(mul(add(x, Tensor(const)), Tensor(const)))),
        case("add_bias", lambda x: tsum(mul(add(Tensor(const), reshape(tsum(x, axis=0), (4,))), Tensor(const)))),
        case("sub", lambda x: tsum(mul(sub(x, mul(x, x)), Tensor(const)))),
        case("mul", lambda x: tsum(mul(mul(x, x), Tensor(const)))),
        case("matmul", lambda x: tsum(matmul(x, transpose(x, (1, 0))))),
        case("linear", lambda x: tsum(mul(linear(x, Tensor(const.T), Tensor(np.ones(3))), Tensor(const[:, :3])))),
        case("exp_log", lambda x: tsum(log(add_constant(exp(x), np.ones((3, 4)))))),
        case("mean", lambda x: mean(mul(x, x))),
        case("reshape_transpose", lambda x: tsum(mul(transpose(reshape(x, (2, 6)), (1, 0)), Tensor(const.reshape(6, 2))))),
        case("softmax", lambda x: tsum(mul(softmax(x), Tensor(const)))),
        case("log_softmax", lambda x: tsum(mul(log_softmax(x), Tensor(const)))),
        case("layer_norm", lambda x: tsum(mul(layer_norm(x, Tensor(np.linspace(0.5, 2, 4)), Tensor(np.zeros(4))), Tensor(const)))),
        case("embedding", lambda x: tsum(mul(embedding(x, ids), emb_mult))),
    ]


@pytest.mark.parametrize("f", _cases())
def test_gradcheck_elementwise_ops(f):
    x = Tensor(SplitMix64(3).normal((3, 4)), requires_grad=True)
    report = gradcheck(lambda: f(x), x)
    assert report.passed, report


def test_gradcheck_conv_relu_sum():
    r = SplitMix64(26)
    x = Tensor(r.normal((1, 1, 3, 3, 3)), requires_grad=True)
    k = Tensor(r.normal((2, 1, 2, 2, 2)), requires_grad=True)
    # finite differences are only valid away from the ReLU kink
    assert np.abs(conv3d(x, k, 1, 1).data).min() > 10 * 1e-3
    mult = Tensor(r.normal((1, 2, 4, 4, 4)))
    f = lambda: tsum(mul(relu(conv3d(x, k, stride=1, padding=1)), mult))
    assert gradcheck(f, x).passed
    assert gradcheck(f, k).passed


@pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), ((1, 2, 2), 1)])
def test_gradcheck_conv3d_strided(stride, padding):
    r = SplitMix64(5)
    x = Tensor(r.normal((2, 2, 4, 4, 4)), requires_grad=True)
    k = Tensor(r.normal((3, 2, 3, 3, 3)), requires_grad=True)
    out_shape = conv3d(x, k, stride, padding).shape
    mult = Tensor(r.normal(out_shape))
    f = lambda: tsum(mul(conv3d(x, k, stride, padding), mult))
    assert gradcheck(f, x).passed
    assert gradcheck(f, k).passed


def test_gradcheck_pools():
    r = SplitMix64(6)
    x = Tensor(r.normal((1, 2, 4, 4, 4)), requires_grad=True)
    mult = Tensor(r.normal((1, 2, 2, 2, 2)))
    assert gradcheck(lambda: tsum(mul(max_pool3d(x, 3, 2, 1), mult)), x).passed
    gmult = Tensor(r.normal((1, 2)))
    assert gradcheck(lambda: tsum(mul(global_avg_pool3d(x), gmult)), x).passed


@pytest.mark.parametrize("norm", ["group1", "group2", "batch"])
def test_gradcheck_channel_norms(norm):
    r = SplitMix64(8)
    x = Tensor(r.normal((2, 4, 2, 3, 3)), requires_grad=True)
    gain = Tensor(r.normal(4), requires_grad=True)
    bias = Tensor(r.normal(4), requires_grad=True)
    mult = Tensor(r.normal(x.shape))
    if norm == "batch":
        fn = lambda: batch_norm(x, gain, bias)
    else:
        fn = lambda: group_norm(x, gain, bias, groups=int(norm[-1]))
    f = lambda: tsum(mul(fn(), mult))
    for t in (x, gain, bias):
        assert gradcheck(f, t).passed


def test_gradcheck_batched_matmul():
    r = SplitMix64(9)
    a = Tensor(r.normal((2, 3, 4, 2)), requires_grad=True)
    b = Tensor(r.normal((2, 3, 2, 4)), requires_grad=True)
    mult = Tensor(r.normal((2, 3, 4, 4)))
    f = lambda: tsum(mul(matmul(a, b), mult))
    assert gradcheck(f, a).passed and gradcheck(f, b).passed


def test_gradcheck_linear_function_is_exact():
    x = Tensor(SplitMix64(1).normal((3, 4)), requires_grad=True, dtype=np.float64)
    report = gradcheck(lambda: tsum(mul(x, 3.0)), x)
    assert report.max_rel_err < 1e-9


def test_gradcheck_sum_softmax_passes():
    x = Tensor(SplitMix64(2).normal((2, 4)), requires_grad=True)
    assert gradcheck(lambda: tsum(softmax(x)), x).passed


def test_gradcheck_detects_corrupted_backward():
    def bad_square(a):
        return make_result(a.data**2, (a,), lambda g: (3 * g * a.data,), "bad_square")

    x = Tensor(SplitMix64(4).normal(5), requires_grad=True)
    assert not gradcheck(lambda: tsum(bad_square(x)), x).passed


def test_gradcheck_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        gradcheck(lambda: mul(x, 2.0), x)
