#!/usr/bin/env python3
"""
Test Autodiff
Verify every backward rule against central finite differences, plus the optimizers
"""

import numpy as np
import pytest

from chaostat.autodiff import tensor as ad
from chaostat.autodiff.optim import Adam, AdamW, StepLR
from chaostat.autodiff.tensor import Tape, numerical_gradient
from chaostat.utils.errors import ShapeError

RTOL = 1e-4


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def check_gradient(build, x: np.ndarray):
    """build(tape, leaf) -> scalar DiffArray; compares the tape gradient with finite differences"""
    tape = Tape()
    leaf = tape.leaf(x, name="x")
    grads = tape.backward(build(tape, leaf))
    numeric = numerical_gradient(lambda v: _value(build, v), x)
    assert relative_error(grads["x"], numeric) < RTOL


def _value(build, v: np.ndarray) -> float:
    tape = Tape()
    return float(build(tape, tape.leaf(v, requires_grad=False)).value)


def rng_array(*shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


def test_elementwise_chain():
    def build(tape, x):
        y = x * x + 3.0 * x
        return ad.mean(ad.gelu(y))
    check_gradient(build, rng_array(3, 5))


def test_sqrt_of_sum_of_squares():
    def build(tape, x):
        return ad.sqrt(ad.reduce_sum(x * x))
    check_gradient(build, rng_array(7, seed=1))


def test_matmul_on_both_operands():
    w0 = rng_array(4, 3, seed=2)
    x0 = rng_array(2, 5, 4, seed=3)

    def through_weight(tape, w):
        y = ad.matmul(tape.constant(x0), w)
        return ad.mean(y * y)

    def through_input(tape, x):
        y = ad.matmul(x, tape.constant(w0))
        return ad.reduce_sum(ad.gelu(y))

    check_gradient(through_weight, w0)
    check_gradient(through_input, x0)


def test_complex_spectral_multiplier():
    """real(ifft(fft(u) * (re + i im))) with gradients flowing into the real pair"""
    u = rng_array(2, 16, seed=4)
    re0 = rng_array(2, 16, seed=5)
    im0 = rng_array(2, 16, seed=6)
    target = rng_array(2, 16, seed=7)

    def make(re_part, im_part):
        def build(tape, leaf):
            re = leaf if re_part is None else tape.constant(re_part)
            im = leaf if im_part is None else tape.constant(im_part)
            w = ad.make_complex(re, im)
            out = ad.real(ad.ifft(ad.mul(ad.fft(tape.constant(u), axes=(1,)), w), axes=(1,)))
            diff = out - target
            return ad.mean(diff * diff)
        return build

    check_gradient(make(None, im0), re0)
    check_gradient(make(re0, None), im0)


def test_slicing_concat_roll_broadcast():
    b0 = rng_array(3, seed=8)

    def build(tape, x):
        rolled = ad.roll(x, 2, axis=1)
        head = ad.take(rolled, 1, 0, 3)
        joined = ad.concat([head, ad.take(x, 1, 3, 6)], axis=1)
        shifted = joined + ad.broadcast(tape.constant(b0.reshape(3, 1)), joined.shape)
        flat = ad.reshape(shifted, (18,))
        return ad.reduce_sum(flat * flat) / 18.0
    check_gradient(build, rng_array(3, 6, seed=9))


def test_contract_with_explicit_subscripts():
    a0 = rng_array(2, 3, 4, seed=10)
    r0 = rng_array(3, 4, 5, seed=11)

    def build(tape, r):
        y = ad.contract(tape.constant(a0), r, "bxc,xcd->bxd")
        return ad.mean(ad.gelu(y))
    check_gradient(build, r0)


def test_conj_and_imag():
    def build(tape, x):
        z = ad.make_complex(x, tape.constant(np.ones_like(x.value)))
        w = ad.mul(ad.conj(z), z)
        return ad.reduce_sum(ad.real(w)) + ad.reduce_sum(ad.imag(ad.mul(z, z)))
    check_gradient(build, rng_array(4, seed=12))


def test_backward_contract():
    tape = Tape()
    x = tape.leaf(np.ones(3), name="x")
    with pytest.raises(ShapeError):
        tape.backward(x * x)
    loss = ad.reduce_sum(x * x)
    tape.backward(loss)
    with pytest.raises(RuntimeError):
        tape.backward(loss)
    with pytest.raises(ShapeError):
        ad.add(x, tape.constant(np.ones(4)))


def test_unused_leaf_gets_zero_gradient():
    tape = Tape()
    x = tape.leaf(np.ones(2), name="x")
    y = tape.leaf(np.ones(2), name="y")
    grads = tape.backward(ad.reduce_sum(x * x))
    assert np.array_equal(grads["y"], np.zeros(2))
    assert np.allclose(grads["x"], 2.0)


def test_step_lr_schedule():
    sched = StepLR(0.1, gamma=0.5, step_size=10)
    assert sched.lr_at(0) == 0.1
    assert sched.lr_at(9) == 0.1
    assert abs(sched.lr_at(25) - 0.025) < 1e-15


def test_adam_minimizes_a_quadratic():
    target = np.array([1.0, -2.0, 0.5])
    opt = Adam({"p": np.zeros(3)}, lr=0.05)
    for _ in range(2000):
        opt.step({"p": 2.0 * (opt.params["p"] - target)})
        opt.end_epoch()
    assert np.max(np.abs(opt.params["p"] - target)) < 1e-2


def test_adamw_decays_without_gradient_signal():
    opt = AdamW({"p": np.ones(2)}, lr=0.1, weight_decay=0.5)
    opt.step({"p": np.zeros(2)})
    assert np.allclose(opt.params["p"], 1.0 - 0.1 * 0.5)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
