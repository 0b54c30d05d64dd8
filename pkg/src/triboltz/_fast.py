"""Compiled inner loops for angular averages."""

import numpy as np
from numba import njit


@njit(cache=True)
def ternary_average(ks, xi, alpha, u_bar, v_hat, omega, kern_phi, theta):
    """Average of sum_i mu_i^{k/2} against b3 for each parameter row.

    ``kern_phi`` holds quadrature weight times phi(omega1 . omega2) per node.
    Returns an array shaped (P, len(ks)).
    """
    P = xi.shape[0]
    M = omega.shape[0]
    d = v_hat.shape[1]
    nk = ks.shape[0]
    out = np.zeros((P, nk))
    hk = 0.5 * ks
    for p in range(P):
        r = 2.0 * np.sqrt(max(alpha[p] * xi[p] - xi[p] * xi[p], 0.0))
        x = xi[p]
        acc = np.zeros(nk)
        for m in range(M):
            s12 = 0.0
            uw = 0.0
            for j in range(d):
                s12 += omega[m, j] * omega[m, d + j]
                uw += u_bar[p, j] * omega[m, j] + u_bar[p, d + j] * omega[m, d + j]
            c = uw / (1.0 + s12)
            sq0 = 0.0
            sq1 = 0.0
            sq2 = 0.0
            pr0 = 0.0
            pr1 = 0.0
            pr2 = 0.0
            for j in range(d):
                u1 = u_bar[p, j]
                u2 = u_bar[p, d + j]
                w1 = omega[m, j]
                w2 = omega[m, d + j]
                a = u1 + u2 - 3.0 * c * (w1 + w2)
                b = 2.0 * u1 - u2 - 3.0 * c * w1
                e = 2.0 * u2 - u1 - 3.0 * c * w2
                sq0 += a * a
                sq1 += b * b
                sq2 += e * e
                pr0 += a * v_hat[p, j]
                pr1 += b * v_hat[p, j]
                pr2 += e * v_hat[p, j]
            mu0 = max((1.0 - r * pr0 + x * (sq0 - 1.0)) / 3.0, 1e-300)
            mu1 = max((1.0 + r * pr1 + x * (sq1 - 1.0)) / 3.0, 1e-300)
            mu2 = max((1.0 + r * pr2 + x * (sq2 - 1.0)) / 3.0, 1e-300)
            wk = kern_phi[m]
            if theta != 0.0:
                wk *= abs(uw) ** theta
            l0 = np.log(mu0)
            l1 = np.log(mu1)
            l2 = np.log(mu2)
            for i in range(nk):
                acc[i] += wk * (np.exp(hk[i] * l0) + np.exp(hk[i] * l1) + np.exp(hk[i] * l2))
        for i in range(nk):
            out[p, i] = acc[i]
    return out


@njit(cache=True)
def _polyval(c, z):
    acc = 0.0
    for j in range(c.shape[0] - 1, -1, -1):
        acc = acc * z + c[j]
    return acc


@njit(cache=True)
def _bracket_pow(V, i, q):
    s = 1.0
    for j in range(V.shape[1]):
        s += V[i, j] * V[i, j]
    return s ** (0.5 * q)


@njit(cache=True)
def collide_events(V, kinds, idx, dirs, unif, gamma2, gamma3, theta3, b2c, phic,
                   bound2, bound3, rmax_sq, q_trace):
    """Apply candidate events in draw order, in place.

    ``kinds`` is 0 (binary) or 1 (ternary); ``idx`` rows hold distinct
    particle indices, the first being central for ternary events; ``dirs``
    holds uniform directions (the first d entries for binary). ``bound2`` and
    ``bound3`` bound the kernel divided by the sphere area. A candidate whose
    kernel exceeds its bound stops the pass: the returned status is 1 and
    ``stop`` is the offending position. Returns (status, stop, accepted
    binary, accepted ternary, change of sum <v>^q_trace, change of energy,
    largest ratio binary, largest ratio ternary).
    """
    d = V.shape[1]
    acc2 = 0
    acc3 = 0
    dtrace = 0.0
    denergy = 0.0
    rmax2 = 0.0
    rmax3 = 0.0
    for n in range(kinds.shape[0]):
        i = idx[n, 0]
        j = idx[n, 1]
        if kinds[n] == 0:
            skip = False
            if rmax_sq > 0.0:
                si = 0.0
                sj = 0.0
                for a in range(d):
                    si += V[i, a] * V[i, a]
                    sj += V[j, a] * V[j, a]
                skip = 1.0 + si > rmax_sq or 1.0 + sj > rmax_sq
            if skip:
                continue
            un = 0.0
            uw = 0.0
            for a in range(d):
                ua = V[j, a] - V[i, a]
                un += ua * ua
                uw += ua * dirs[n, a]
            un = np.sqrt(un)
            if un == 0.0:
                continue
            kern = un ** gamma2 * _polyval(b2c, uw / un)
            ratio = kern / bound2
            if ratio > rmax2:
                rmax2 = ratio
            if ratio > 1.0:
                return 1, n, acc2, acc3, dtrace, denergy, rmax2, rmax3
            if unif[n] < ratio:
                before = _bracket_pow(V, i, q_trace) + _bracket_pow(V, j, q_trace)
                e0 = 0.0
                for a in range(d):
                    e0 += V[i, a] * V[i, a] + V[j, a] * V[j, a]
                e1 = 0.0
                for a in range(d):
                    s = uw * dirs[n, a]
                    V[i, a] += s
                    V[j, a] -= s
                    e1 += V[i, a] * V[i, a] + V[j, a] * V[j, a]
                dtrace += _bracket_pow(V, i, q_trace) + _bracket_pow(V, j, q_trace) - before
                denergy += e1 - e0
                acc2 += 1
        else:
            k = idx[n, 2]
            if rmax_sq > 0.0:
                si = 0.0
                sj = 0.0
                sk = 0.0
                for a in range(d):
                    si += V[i, a] * V[i, a]
                    sj += V[j, a] * V[j, a]
                    sk += V[k, a] * V[k, a]
                if 1.0 + si > rmax_sq or 1.0 + sj > rmax_sq or 1.0 + sk > rmax_sq:
                    continue
            ut2 = 0.0
            uw = 0.0
            s12 = 0.0
            for a in range(d):
                x1 = V[j, a] - V[i, a]
                x2 = V[k, a] - V[i, a]
                x3 = V[j, a] - V[k, a]
                ut2 += x1 * x1 + x2 * x2 + x3 * x3
                uw += x1 * dirs[n, a] + x2 * dirs[n, d + a]
                s12 += dirs[n, a] * dirs[n, d + a]
            ut = np.sqrt(ut2)
            if ut == 0.0:
                continue
            kern = ut ** gamma3 * _polyval(phic, s12)
            if theta3 != 0.0:
                kern *= abs(uw / ut) ** theta3
            ratio = kern / bound3
            if ratio > rmax3:
                rmax3 = ratio
            if ratio > 1.0:
                return 1, n, acc2, acc3, dtrace, denergy, rmax2, rmax3
            if unif[n] < ratio:
                before = (_bracket_pow(V, i, q_trace) + _bracket_pow(V, j, q_trace)
                          + _bracket_pow(V, k, q_trace))
                e0 = 0.0
                for a in range(d):
                    e0 += V[i, a] * V[i, a] + V[j, a] * V[j, a] + V[k, a] * V[k, a]
                c = uw / (1.0 + s12)
                e1 = 0.0
                for a in range(d):
                    w1 = dirs[n, a]
                    w2 = dirs[n, d + a]
                    V[i, a] += c * (w1 + w2)
                    V[j, a] -= c * w1
                    V[k, a] -= c * w2
                    e1 += V[i, a] * V[i, a] + V[j, a] * V[j, a] + V[k, a] * V[k, a]
                dtrace += (_bracket_pow(V, i, q_trace) + _bracket_pow(V, j, q_trace)
                           + _bracket_pow(V, k, q_trace) - before)
                denergy += e1 - e0
                acc3 += 1
    return 0, kinds.shape[0], acc2, acc3, dtrace, denergy, rmax2, rmax3


@njit(cache=True)
def spread_radius(V):
    """max_i |v_i - mean velocity|."""
    n, d = V.shape
    c = np.zeros(d)
    for i in range(n):
        for a in range(d):
            c[a] += V[i, a]
    c /= n
    r2 = 0.0
    for i in range(n):
        s = 0.0
        for a in range(d):
            x = V[i, a] - c[a]
            s += x * x
        if s > r2:
            r2 = s
    return np.sqrt(r2)


@njit(cache=True)
def ensemble_sums(V, orders):
    """(sums of <v>^k per order, momentum sum, energy sum) in one pass."""
    n, d = V.shape
    out = np.zeros(orders.shape[0])
    mom = np.zeros(d)
    en = 0.0
    for i in range(n):
        s = 0.0
        for a in range(d):
            s += V[i, a] * V[i, a]
            mom[a] += V[i, a]
        en += s
        b = 1.0 + s
        for m in range(orders.shape[0]):
            k = orders[m]
            if k == 0.0:
                out[m] += 1.0
            elif k == 2.0:
                out[m] += b
            elif k == 4.0:
                out[m] += b * b
            else:
                out[m] += b ** (0.5 * k)
    return out, mom, en


@njit(cache=True, inline="always")
def _half_power(x, h, ip, half):
    """x^h with fast paths when 2h is an integer (``ip`` = floor(h))."""
    if ip < 0:
        return np.exp(h * np.log(x))
    r = 1.0
    for _ in range(ip):
        r *= x
    if half:
        r *= np.sqrt(x)
    return r


@njit(cache=True)
def ternary_gain_integrals(v, v1, v2, omega, kern_phi, theta, ks):
    """Angular integral of b3 times sum of post-collision <.>^k per triple.

    ``kern_phi`` is quadrature weight times phi(omega1 . omega2). Returns an
    array shaped (P, len(ks)).
    """
    P, d = v.shape
    M = omega.shape[0]
    nk = ks.shape[0]
    hk = 0.5 * ks
    ip = np.empty(nk, np.int64)
    half = np.zeros(nk, np.bool_)
    for i in range(nk):
        f = np.floor(hk[i])
        if hk[i] == f:
            ip[i] = int(f)
        elif hk[i] - f == 0.5:
            ip[i] = int(f)
            half[i] = True
        else:
            ip[i] = -1
    s12 = np.empty(M)
    for m in range(M):
        acc = 0.0
        for j in range(d):
            acc += omega[m, j] * omega[m, d + j]
        s12[m] = 1.0 / (1.0 + acc)
    out = np.zeros((P, nk))
    for p in range(P):
        un = 0.0
        for j in range(d):
            un += (v1[p, j] - v[p, j]) ** 2 + (v2[p, j] - v[p, j]) ** 2
        un = np.sqrt(un)
        acc = np.zeros(nk)
        for m in range(M):
            uw = 0.0
            for j in range(d):
                uw += (v1[p, j] - v[p, j]) * omega[m, j] + (v2[p, j] - v[p, j]) * omega[m, d + j]
            c = uw * s12[m]
            e0 = 1.0
            e1 = 1.0
            e2 = 1.0
            for j in range(d):
                w1 = omega[m, j]
                w2 = omega[m, d + j]
                a = v[p, j] + c * (w1 + w2)
                b = v1[p, j] - c * w1
                e = v2[p, j] - c * w2
                e0 += a * a
                e1 += b * b
                e2 += e * e
            wk = kern_phi[m]
            if theta != 0.0:
                wk *= abs(uw / un) ** theta
            for i in range(nk):
                acc[i] += wk * (_half_power(e0, hk[i], ip[i], half[i])
                                + _half_power(e1, hk[i], ip[i], half[i])
                                + _half_power(e2, hk[i], ip[i], half[i]))
        for i in range(nk):
            out[p, i] = acc[i]
    return out
