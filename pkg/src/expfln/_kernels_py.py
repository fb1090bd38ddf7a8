"""Pure-numpy sample loops; same contract as the compiled ``_kernels``.

State lives in caller-owned arrays that are updated in place:

``xb`` (2M,)
    input delay line, written twice so ``xb[pos:pos + M]`` is newest-first.
``tb`` (2P, 2M)
    ``sin(p pi u)``, ``cos(p pi u)`` delay lines, same double layout.
``gh``, ``hh`` (2N, C*M) and ``yb`` (2N,)
    past expanded vectors, derivative vectors and outputs for the
    filtered-s loop, indexed from ``spos``.

Each run returns the number of samples processed; a value short of
``len(u)`` flags divergence at that sample.
"""

import numpy as np

DIVERGENCE_LIMIT = 1e12


def _push(xb, tb, pos, M, P, un):
    pos = (pos - 1) % M
    xb[pos] = xb[pos + M] = un
    for p in range(1, P + 1):
        s, c = np.sin(p * np.pi * un), np.cos(p * np.pi * un)
        tb[2 * p - 2, pos] = tb[2 * p - 2, pos + M] = s
        tb[2 * p - 1, pos] = tb[2 * p - 1, pos + M] = c
    return pos


def _vectors(xb, tb, pos, M, q):
    x = xb[pos:pos + M]
    a = np.abs(x)
    env = np.exp(-q * a)
    trig = tb[:, pos:pos + M]
    g = np.concatenate([x, (env * trig).ravel()])
    h = np.concatenate([np.zeros(M), (-a * env * trig).ravel()])
    return g, h


def efln_lms_run(u, d, w, xb, tb, pos, q, P, mu_w, mu_q, y_out, e_out):
    M = xb.size // 2
    n = u.size
    for i in range(n):
        pos = _push(xb, tb, pos, M, P, u[i])
        g, h = _vectors(xb, tb, pos, M, q)
        y = float(g @ w)
        e = d[i] - y
        y_out[i] = y
        e_out[i] = e
        if not abs(e) <= DIVERGENCE_LIMIT:
            return q, pos, i
        zt = float(h @ w)
        w += (mu_w * e) * g
        q = q + mu_q * e * zt
    return q, pos, n


def efslms_run(u, d, w, xb, tb, pos, gh, hh, yb, spos, s, q, P, mu_w, mu_q,
               nl_a, nl_b, use_nl, e_out):
    M = xb.size // 2
    N = s.size
    n = u.size
    for i in range(n):
        pos = _push(xb, tb, pos, M, P, u[i])
        g, h = _vectors(xb, tb, pos, M, q)
        spos = (spos - 1) % N
        gh[spos] = gh[spos + N] = g
        hh[spos] = hh[spos + N] = h
        y = float(g @ w)
        yb[spos] = yb[spos + N] = y
        ys = float(s @ yb[spos:spos + N])
        if use_nl:
            ys = nl_a * np.tanh(nl_b * ys)
        e = d[i] - ys
        e_out[i] = e
        if not abs(e) <= DIVERGENCE_LIMIT:
            return q, pos, spos, i
        gf = s @ gh[spos:spos + N]
        hf = s @ hh[spos:spos + N]
        zt = float(hf @ w)
        w += (mu_w * e) * gf
        q = q + mu_q * e * zt
    return q, pos, spos, n
