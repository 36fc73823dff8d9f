# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for particle updates and brute-force enumeration."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef long long FAR = 1 << 62


def simulate_batch(const long long[:] y0, const double[:, :] prob, const double[:, :, :] u):
    """Trajectories of independent replicas, shape (replicas, steps + 1, particles).

    ``prob[s, k]`` is the jump probability of particle ``k`` at step ``s`` and
    ``u[r, s, k]`` the uniform deciding it for replica ``r``.
    """
    cdef Py_ssize_t R = u.shape[0], T = u.shape[1], N = u.shape[2]
    cdef Py_ssize_t r, s, k
    cdef long long left, cand
    out = np.empty((R, T + 1, N), dtype=np.int64)
    cdef long long[:, :, :] traj = out
    with nogil:
        for r in range(R):
            for k in range(N):
                traj[r, 0, k] = y0[k]
            for s in range(T):
                left = FAR
                for k in range(N):
                    cand = traj[r, s, k] + (1 if u[r, s, k] < prob[s, k] else 0)
                    if cand > left - 1:
                        cand = left - 1
                    traj[r, s + 1, k] = cand
                    left = cand
    return out


def endpoint_weights(const long long[:] y0, const double[:, :] odds):
    """Sum of prod(odds over ones) over all 0/1 driving matrices, by final displacement.

    The result has length (T + 1) ** N; displacement vector ``d`` sits at
    index sum_k d_k (T + 1) ** k.
    """
    cdef Py_ssize_t T = odds.shape[0], N = odds.shape[1]
    cdef Py_ssize_t nbits = T * N, s, k
    cdef unsigned long long mask, total = 1ULL << nbits
    cdef long long left, cand, idx, base = T + 1, stride
    cdef double w
    cdef long long[64] pos
    out = np.zeros(int(base) ** int(N), dtype=np.float64)
    cdef double[:] acc = out
    if nbits > 30:
        raise ValueError("too many driving matrices to enumerate")
    with nogil:
        for mask in range(total):
            w = 1.0
            for k in range(N):
                pos[k] = y0[k]
            for s in range(T):
                left = FAR
                for k in range(N):
                    cand = pos[k]
                    if (mask >> (s * N + k)) & 1:
                        w *= odds[s, k]
                        cand += 1
                    if cand > left - 1:
                        cand = left - 1
                    pos[k] = cand
                    left = cand
            idx = 0
            stride = 1
            for k in range(N):
                idx += (pos[k] - y0[k]) * stride
                stride *= base
            acc[idx] += w
    return out
