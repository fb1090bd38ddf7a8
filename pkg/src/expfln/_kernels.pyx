# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sample loops for the time-domain EFLN and EFsLMS filters.

Mirrors ``_kernels_py`` exactly; see there for the state layout.
"""

from libc.math cimport exp, sin, cos, fabs, tanh, M_PI

cdef double DIVERGENCE_LIMIT = 1e12


cdef inline int _push(double[::1] xb, double[:, ::1] tb, int pos, int M, int P,
                      double un) nogil:
    cdef int p
    cdef double s, c
    pos = (pos - 1 + M) % M
    xb[pos] = un
    xb[pos + M] = un
    for p in range(1, P + 1):
        s = sin(p * M_PI * un)
        c = cos(p * M_PI * un)
        tb[2 * p - 2, pos] = s
        tb[2 * p - 2, pos + M] = s
        tb[2 * p - 1, pos] = c
        tb[2 * p - 1, pos + M] = c
    return pos


cdef inline void _vectors(double[::1] xb, double[:, ::1] tb, int pos, int M, int P,
                          double q, double[::1] g, double[::1] h) nogil:
    cdef int m, r
    cdef double x, a, env
    for m in range(M):
        x = xb[pos + m]
        a = fabs(x)
        env = exp(-q * a)
        g[m] = x
        h[m] = 0.0
        for r in range(2 * P):
            g[(r + 1) * M + m] = env * tb[r, pos + m]
            h[(r + 1) * M + m] = -a * env * tb[r, pos + m]


def efln_lms_run(double[::1] u, double[::1] d, double[::1] w, double[::1] xb,
                 double[:, ::1] tb, int pos, double q, int P, double mu_w,
                 double mu_q, double[::1] y_out, double[::1] e_out):
    cdef int M = xb.shape[0] // 2
    cdef int L = w.shape[0]
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef int j
    cdef double y, e, zt, step
    cdef double[::1] g = w.copy()
    cdef double[::1] h = w.copy()
    with nogil:
        for i in range(n):
            pos = _push(xb, tb, pos, M, P, u[i])
            _vectors(xb, tb, pos, M, P, q, g, h)
            y = 0.0
            zt = 0.0
            for j in range(L):
                y += g[j] * w[j]
            e = d[i] - y
            y_out[i] = y
            e_out[i] = e
            if not fabs(e) <= DIVERGENCE_LIMIT:
                with gil:
                    return q, pos, i
            for j in range(L):
                zt += h[j] * w[j]
            step = mu_w * e
            for j in range(L):
                w[j] += step * g[j]
            q = q + mu_q * e * zt
    return q, pos, n


def efslms_run(double[::1] u, double[::1] d, double[::1] w, double[::1] xb,
               double[:, ::1] tb, int pos, double[:, ::1] gh, double[:, ::1] hh,
               double[::1] yb, int spos, double[::1] s, double q, int P,
               double mu_w, double mu_q, double nl_a, double nl_b, bint use_nl,
               double[::1] e_out):
    cdef int M = xb.shape[0] // 2
    cdef int L = w.shape[0]
    cdef int N = s.shape[0]
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef int j, l
    cdef double y, ys, e, zt, step, sl, gf, hf
    cdef double[::1] g = w.copy()
    cdef double[::1] h = w.copy()
    with nogil:
        for i in range(n):
            pos = _push(xb, tb, pos, M, P, u[i])
            _vectors(xb, tb, pos, M, P, q, g, h)
            spos = (spos - 1 + N) % N
            y = 0.0
            for j in range(L):
                gh[spos, j] = g[j]
                gh[spos + N, j] = g[j]
                hh[spos, j] = h[j]
                hh[spos + N, j] = h[j]
                y += g[j] * w[j]
            yb[spos] = y
            yb[spos + N] = y
            ys = 0.0
            for l in range(N):
                ys += s[l] * yb[spos + l]
            if use_nl:
                ys = nl_a * tanh(nl_b * ys)
            e = d[i] - ys
            e_out[i] = e
            if not fabs(e) <= DIVERGENCE_LIMIT:
                with gil:
                    return q, pos, spos, i
            step = mu_w * e
            zt = 0.0
            for j in range(L):
                gf = 0.0
                hf = 0.0
                for l in range(N):
                    sl = s[l]
                    gf += sl * gh[spos + l, j]
                    hf += sl * hh[spos + l, j]
                zt += hf * w[j]
                g[j] = gf
            for j in range(L):
                w[j] += step * g[j]
            q = q + mu_q * e * zt
    return q, pos, spos, n
