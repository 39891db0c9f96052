# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled graph kernels. Semantics mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t idx_t


def neighbor_sum(indptr, indices, h):
    cdef const idx_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const idx_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[:, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t d = hv.shape[1]
    out = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t v, j, k, u
    with nogil:
        for v in range(n):
            for j in range(ip[v], ip[v + 1]):
                u = ix[j]
                for k in range(d):
                    ov[v, k] += hv[u, k]
    return out


def harmonic_centrality(indptr, indices):
    cdef const idx_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const idx_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    scores = np.zeros(n, dtype=np.float64)
    cdef double[::1] sv = scores
    cdef idx_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef idx_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef idx_t[::1] counts = np.zeros(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t s, v, u, j, head, tail, maxd, dd
    cdef double total
    with nogil:
        for s in range(n):
            for v in range(n):
                dist[v] = -1
            dist[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            maxd = 0
            while head < tail:
                v = queue[head]
                head += 1
                for j in range(ip[v], ip[v + 1]):
                    u = ix[j]
                    if dist[u] < 0:
                        dist[u] = dist[v] + 1
                        if dist[u] > maxd:
                            maxd = dist[u]
                        counts[dist[u] - 1] += 1
                        queue[tail] = u
                        tail += 1
            total = 0.0
            for dd in range(maxd):
                total = total + (<double> counts[dd]) / (<double> (dd + 1))
                counts[dd] = 0
            sv[s] = total
    return scores


def connected_components(indptr, indices):
    cdef const idx_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const idx_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] lv = labels
    cdef idx_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t s, v, u, j, head, tail
    cdef idx_t current = 0
    with nogil:
        for s in range(n):
            if lv[s] >= 0:
                continue
            lv[s] = current
            queue[0] = s
            head = 0
            tail = 1
            while head < tail:
                v = queue[head]
                head += 1
                for j in range(ip[v], ip[v + 1]):
                    u = ix[j]
                    if lv[u] < 0:
                        lv[u] = current
                        queue[tail] = u
                        tail += 1
            current += 1
    return labels
