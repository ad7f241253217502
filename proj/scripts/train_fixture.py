#!/usr/bin/env python3
"""Train the bundled victim fixture: a bias-free 3-layer MLP (64-32-16-10)
on the sklearn 8x8 digits set, quantize weights to int8 with per-layer
scales, and write the model/dataset binaries plus a manifest.

Run from the repo root:  python3 scripts/train_fixture.py
"""
import hashlib
import struct
import numpy as np
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split

SEED = 12345
DIMS = [64, 32, 16, 10]
MAGIC = 0x504C4D51  # "QMLP" little-endian


def relu(x):
    return np.maximum(x, 0.0)


def forward(ws, x):
    h = x
    for i, w in enumerate(ws):
        h = h @ w.T
        if i < len(ws) - 1:
            h = relu(h)
    return h


def train(x, y, rng):
    ws = [rng.standard_normal((DIMS[i + 1], DIMS[i])) * np.sqrt(2.0 / DIMS[i])
          for i in range(3)]
    onehot = np.eye(10)[y]
    lr = 0.5e-3
    for epoch in range(400):
        perm = rng.permutation(len(x))
        for start in range(0, len(x), 32):
            idx = perm[start:start + 32]
            xb, yb = x[idx], onehot[idx]
            # forward, keeping intermediates
            a0 = xb
            z1 = a0 @ ws[0].T
            a1 = relu(z1)
            z2 = a1 @ ws[1].T
            a2 = relu(z2)
            z3 = a2 @ ws[2].T
            p = np.exp(z3 - z3.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            d3 = (p - yb) / len(idx)
            d2 = (d3 @ ws[2]) * (z2 > 0)
            d1 = (d2 @ ws[1]) * (z1 > 0)
            ws[2] -= lr * d3.T @ a2
            ws[1] -= lr * d2.T @ a1
            ws[0] -= lr * d1.T @ a0
    return ws


def quantize(ws):
    qs, scales = [], []
    for w in ws:
        s = np.abs(w).max() / 127.0
        q = np.clip(np.round(w / s), -127, 127).astype(np.int8)
        qs.append(q)
        scales.append(s)
    return qs, scales


def q_accuracy(qs, scales, x, y):
    h = x.astype(np.float64)
    for i, (q, s) in enumerate(zip(qs, scales)):
        h = (h @ q.T.astype(np.float64)) * s
        if i < len(qs) - 1:
            h = relu(h)
    return float((h.argmax(axis=1) == y).mean())


def write_model(path, qs, scales):
    with open(path, "wb") as f:
        f.write(struct.pack("<IIII", MAGIC, len(qs), DIMS[0], DIMS[-1]))
        for q, s in zip(qs, scales):
            # activation: 0 = relu, 1 = identity (output layer)
            act = 1 if q is qs[-1] else 0
            f.write(struct.pack("<IIdB", q.shape[0], q.shape[1], s, act))
            f.write(q.tobytes(order="C"))


def write_dataset(path, x, y):
    with open(path, "wb") as f:
        for xi, yi in zip(x, y):
            f.write(bytes([int(yi)]) + bytes(int(v) for v in xi))


def main():
    rng = np.random.default_rng(SEED)
    digits = load_digits()
    x, y = digits.data, digits.target  # pixels in [0,16]
    xtr, xte, ytr, yte = train_test_split(
        x, y, test_size=0.2, random_state=SEED, stratify=y)
    ws = train(xtr, ytr, rng)
    qs, scales = quantize(ws)
    acc = q_accuracy(qs, scales, xte, yte)
    print(f"quantized test accuracy: {acc:.4f}")
    assert acc >= 0.90, "fixture must reach 0.90 quantized accuracy"
    write_model("fixtures/mlp_digits.qmodel", qs, scales)
    write_dataset("fixtures/digits_test.bin", xte, yte)
    model_sha = hashlib.sha256(open("fixtures/mlp_digits.qmodel", "rb").read()).hexdigest()
    data_sha = hashlib.sha256(open("fixtures/digits_test.bin", "rb").read()).hexdigest()
    with open("fixtures/manifest.txt", "w") as f:
        f.write("fixture: mlp_digits\n")
        f.write("source: sklearn load_digits (8x8 grayscale, pixel range 0..16)\n")
        f.write(f"split: 80/20 train/test, seed {SEED}, stratified\n")
        f.write("architecture: 64-32-16-10 MLP, no biases, relu hidden, "
                "int8 weights with per-layer scale\n")
        f.write(f"training: scripts/train_fixture.py, numpy SGD, seed {SEED}\n")
        f.write(f"clean_quantized_accuracy: {acc:.4f}\n")
        f.write(f"test_samples: {len(yte)}\n")
        f.write(f"model_sha256: {model_sha}\n")
        f.write(f"dataset_sha256: {data_sha}\n")


if __name__ == "__main__":
    main()
