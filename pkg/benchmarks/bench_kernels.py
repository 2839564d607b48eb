#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each kernel on training-shaped inputs (batch 128, the canonical layer
widths) and prints per-call timings for both backends plus the speedup.

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from ned_entrain.kernels import _ckernels, _pykernels

BATCH = 128
WIDTH = 128  # the presets' widest hidden layer
FRAME_ROWS = 400  # a long utterance's worth of LLD frames


def _timeit(fn, repeats):
    # warm up, then take the best-of-3 mean to damp scheduler noise
    fn()
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def _cases(rng):
    x = rng.normal(size=(BATCH, WIDTH))
    gamma = rng.uniform(0.5, 1.5, size=WIDTH)
    beta = rng.normal(size=WIDTH)
    dy = rng.normal(size=(BATCH, WIDTH))
    y = np.maximum(rng.normal(size=(BATCH, WIDTH)), 0.0)
    pred = rng.normal(size=(BATCH, WIDTH))
    target = rng.normal(size=(BATCH, WIDTH))
    grad = rng.normal(size=(WIDTH, WIDTH))
    frames = rng.normal(size=(FRAME_ROWS, 38))

    def bn_train(mod):
        rm = np.zeros(WIDTH)
        rv = np.ones(WIDTH)
        return lambda: mod.bn_train(x, gamma, beta, rm, rv, 0.1, 1e-5)

    def bn_eval(mod):
        rm = np.zeros(WIDTH)
        rv = np.ones(WIDTH)
        return lambda: mod.bn_eval(x, gamma, beta, rm, rv, 1e-5)

    def bn_backward(mod):
        _, xhat, var = _pykernels.bn_train(
            x, gamma, beta, np.zeros(WIDTH), np.ones(WIDTH), 0.1, 1e-5
        )
        return lambda: mod.bn_backward(dy, xhat, gamma, var, 1e-5)

    def relu(mod):
        return lambda: mod.relu(x)

    def relu_backward(mod):
        return lambda: mod.relu_backward(dy, y)

    def smooth_l1(mod):
        return lambda: mod.smooth_l1(pred, target)

    def kl_softmax(mod):
        return lambda: mod.kl_softmax(pred, target)

    def adam_update(mod):
        param = rng.normal(size=(WIDTH, WIDTH))
        m = np.zeros_like(param)
        v = np.zeros_like(param)
        return lambda: mod.adam_update(param, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8)

    def column_functionals(mod):
        return lambda: mod.column_functionals(frames)

    return [
        ("bn_train", bn_train),
        ("bn_eval", bn_eval),
        ("bn_backward", bn_backward),
        ("relu", relu),
        ("relu_backward", relu_backward),
        ("smooth_l1", smooth_l1),
        ("kl_softmax", kl_softmax),
        ("adam_update", adam_update),
        ("column_functionals", column_functionals),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"batch {BATCH}, width {WIDTH}, {FRAME_ROWS}x38 frames, "
          f"{args.repeats} repeats\n")
    print(f"{'kernel':<20} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, make in _cases(rng):
        t_py = _timeit(make(_pykernels), args.repeats) * 1e6
        t_cy = _timeit(make(_ckernels), args.repeats) * 1e6
        print(f"{name:<20} {t_py:>10.1f}us {t_cy:>10.1f}us {t_py / t_cy:>8.2f}x")


if __name__ == "__main__":
    main()
