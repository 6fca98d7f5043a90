#!/usr/bin/env python3
# Copyright 2026 The saedrift Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent numpy reference for the synthetic convergence check.

Rebuilds the sparse-dictionary data set and runs the same minibatch Adam
recipe (ReLU encoder, affine decoder, MSE + lambda * mean_b sum_i h_i) with
numpy's own matmuls. Prints the per-epoch mean losses; the final total is the
frozen value asserted by the acceptance suite.
"""
import argparse

import numpy as np

from splitmix import SplitMix64


def synth(dim, atoms, k, samples, scale, seed):
    rng = SplitMix64(seed)
    dictionary = np.empty((atoms, dim))
    for a in range(atoms):
        v = np.array([rng.uniform(-1.0, 1.0) for _ in range(dim)])
        dictionary[a] = v / np.sqrt(np.sum(v * v))
    data = np.empty((samples, dim), dtype=np.float32)
    for s in range(samples):
        order = list(range(atoms))
        for j in range(k):
            pick = j + rng.next_below(atoms - j)
            order[j], order[pick] = order[pick], order[j]
        coeffs = [rng.uniform(0.5, 1.0) for _ in range(k)]
        row = np.zeros(dim)
        for j in range(k):
            row += coeffs[j] * dictionary[order[j]]
        data[s] = (scale * row).astype(np.float32)
    return data


def uniform_f32(rng, lo, hi, n):
    out = np.empty(n, dtype=np.float32)
    for i in range(n):
        v = np.float32(rng.uniform(lo, hi))
        while float(v) >= hi:
            v = np.nextafter(v, np.float32(-np.inf))
        out[i] = v
    return out


def train(data, hidden, lam, lr, epochs, batch, seed, beta1=0.9, beta2=0.999, eps=1e-8):
    n, d = data.shape
    rng = SplitMix64(seed)
    enc = 1.0 / np.sqrt(d)
    dec = 1.0 / np.sqrt(hidden)
    params = {
        "We": uniform_f32(rng, -enc, enc, hidden * d).reshape(hidden, d),
        "be": np.zeros(hidden, dtype=np.float32),
        "Wd": uniform_f32(rng, -dec, dec, d * hidden).reshape(d, hidden),
        "bd": np.zeros(d, dtype=np.float32),
    }
    m1 = {k: np.zeros(v.shape) for k, v in params.items()}
    m2 = {k: np.zeros(v.shape) for k, v in params.items()}
    step = 0
    order = list(range(n))
    history = []
    for _ in range(epochs):
        for i in range(n - 1, 0, -1):
            j = rng.next_below(i + 1)
            order[i], order[j] = order[j], order[i]
        sums = np.zeros(2)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            x = data[idx].astype(np.float64)
            b = x.shape[0]
            p = {k: v.astype(np.float64) for k, v in params.items()}
            pre = x @ p["We"].T + p["be"]
            h = np.maximum(pre, 0.0)
            xhat = h @ p["Wd"].T + p["bd"]
            r = xhat - x
            mse = np.sum(r * r) / (b * d)
            sparsity = lam * np.sum(h) / b
            sums += np.array([mse, sparsity]) * b
            g_xhat = 2.0 * r / (b * d)
            g = {"Wd": g_xhat.T @ h, "bd": g_xhat.sum(axis=0)}
            g_pre = np.where(pre > 0.0, g_xhat @ p["Wd"] + lam / b, 0.0)
            g["We"] = g_pre.T @ x
            g["be"] = g_pre.sum(axis=0)
            step += 1
            c1 = 1.0 - beta1 ** step
            c2 = 1.0 - beta2 ** step
            for k in params:
                gk = g[k].astype(np.float32).astype(np.float64)
                m1[k] = beta1 * m1[k] + (1.0 - beta1) * gk
                m2[k] = beta2 * m2[k] + (1.0 - beta2) * gk * gk
                upd = lr * (m1[k] / c1) / (np.sqrt(m2[k] / c2) + eps)
                params[k] = (params[k].astype(np.float64) - upd).astype(np.float32)
        mse, sparsity = sums / n
        history.append((mse, sparsity, mse + sparsity))
    return params, history


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--atoms", type=int, default=128)
    ap.add_argument("--sparsity", type=int, default=4)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--scale", type=float, default=0.05)
    ap.add_argument("--synth-seed", type=int, default=7)
    ap.add_argument("--hidden", type=int, default=1024)
    ap.add_argument("--lam", type=float, default=1e-3)
    ap.add_argument("--lr", type=float, default=2e-5)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--train-seed", type=int, default=0)
    a = ap.parse_args()
    data = synth(a.dim, a.atoms, a.sparsity, a.samples, a.scale, a.synth_seed)
    _, history = train(data, a.hidden, a.lam, a.lr, a.epochs, a.batch, a.train_seed)
    print("epoch,mse,sparsity,total")
    for e, (mse, sp, tot) in enumerate(history, 1):
        print(f"{e},{mse:.9g},{sp:.9g},{tot:.9g}")
    print(f"ratio_final_over_first={history[-1][2] / history[0][2]:.6f}")


if __name__ == "__main__":
    main()
