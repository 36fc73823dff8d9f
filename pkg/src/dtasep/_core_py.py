"""NumPy fallback for the compiled core; same signatures and results."""
from __future__ import annotations

import numpy as np

FAR = 1 << 62


def simulate_batch(y0, prob, u):
    y0 = np.asarray(y0, dtype=np.int64)
    prob = np.asarray(prob, dtype=float)
    u = np.asarray(u, dtype=float)
    R, T, N = u.shape
    traj = np.empty((R, T + 1, N), dtype=np.int64)
    traj[:, 0, :] = y0
    jumps = u < prob[None, :, :]
    for s in range(T):
        left = np.full(R, FAR, dtype=np.int64)
        for k in range(N):
            cand = np.minimum(traj[:, s, k] + jumps[:, s, k], left - 1)
            traj[:, s + 1, k] = cand
            left = cand
    return traj


def endpoint_weights(y0, odds, chunk: int = 1 << 16):
    y0 = np.asarray(y0, dtype=np.int64)
    odds = np.asarray(odds, dtype=float)
    T, N = odds.shape
    nbits = T * N
    if nbits > 30:
        raise ValueError("too many driving matrices to enumerate")
    base = T + 1
    strides = base ** np.arange(N, dtype=np.int64)
    acc = np.zeros(base ** N, dtype=float)
    shifts = np.arange(nbits, dtype=np.int64).reshape(T, N)
    for start in range(0, 1 << nbits, chunk):
        masks = np.arange(start, min(start + chunk, 1 << nbits), dtype=np.int64)
        bits = (masks[:, None, None] >> shifts[None, :, :]) & 1
        w = np.prod(np.where(bits == 1, odds[None, :, :], 1.0), axis=(1, 2))
        pos = np.tile(y0, (len(masks), 1))
        for s in range(T):
            left = np.full(len(masks), FAR, dtype=np.int64)
            for k in range(N):
                cand = np.minimum(pos[:, k] + bits[:, s, k], left - 1)
                pos[:, k] = cand
                left = cand
        idx = (pos - y0) @ strides
        acc += np.bincount(idx, weights=w, minlength=acc.size)
    return acc
