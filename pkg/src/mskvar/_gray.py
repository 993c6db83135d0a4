"""Gray-code enumeration kernels (numba-jitted, nogil).

All sweeps walk the reflected-Gray order of the spin cube: step m flips the
single spin indexed by the number of trailing zero bits of m, so the running
Hamiltonian can be updated in O(N) via the cached field vector f = B sigma,
where B = G + G^T.  Flipping spin a changes the energy by

    dH = -(2/sqrt(N)) * sigma_a * (f_a - B_aa * sigma_a)

after which f -= 2 * sigma_a_old * B[:, a].  Per-species overlap counters are
kept as integers, so overlap values never accumulate float drift.

Pair sweeps walk a single Gray code over 2N bits: low bits drive the first
replica, high bits the second, visiting all 4^N replica pairs one flip at a
time.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _ctz(m):
    a = 0
    while m & 1 == 0:
        a += 1
        m >>= 1
    return a


@njit(cache=True, nogil=True)
def free_energy_sweep(B, beta, sqrtn):
    """log sum over all spin states of exp(beta * H), streaming log-sum-exp.

    Keeps a running maximum and rescales the partial sum when it moves, so
    no per-state storage is needed.
    """
    n = B.shape[0]
    sigma = np.ones(n)
    f = np.empty(n)
    h = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += B[i, j]
        f[i] = s
        h += s
    h *= 0.5 / sqrtn

    mx = beta * h
    acc = 1.0
    for m in range(1, 1 << n):
        a = _ctz(m)
        sa = sigma[a]
        h += -2.0 / sqrtn * sa * (f[a] - B[a, a] * sa)
        sigma[a] = -sa
        for i in range(n):
            f[i] -= 2.0 * sa * B[i, a]
        e = beta * h
        if e <= mx:
            acc += math.exp(e - mx)
        else:
            acc = acc * math.exp(mx - e) + 1.0
            mx = e
    return mx + math.log(acc)


@njit(cache=True, nogil=True)
def energy_sweep(B, sqrtn):
    """Hamiltonian of every spin state, in Gray visit order."""
    n = B.shape[0]
    sigma = np.ones(n)
    f = np.empty(n)
    h = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += B[i, j]
        f[i] = s
        h += s
    h *= 0.5 / sqrtn

    out = np.empty(1 << n)
    out[0] = h
    for m in range(1, 1 << n):
        a = _ctz(m)
        sa = sigma[a]
        h += -2.0 / sqrtn * sa * (f[a] - B[a, a] * sa)
        sigma[a] = -sa
        for i in range(n):
            f[i] -= 2.0 * sa * B[i, a]
        out[m] = h
    return out


@njit(cache=True, nogil=True)
def pair_sweep(B1, B2, species, delta2, beta, lam):
    """Sweep all 4^N replica pairs under exp(beta(H1+H2) + lam beta^2 N R).

    Returns (log partition sum, Gibbs mean of the multi-overlap R, max
    exponent).  The max exponent lets two-pass observers reuse the shift.
    """
    n = B1.shape[0]
    k = delta2.shape[0]
    sqrtn = math.sqrt(n)
    nn = float(n)

    sigma = np.ones(n)
    rho = np.ones(n)
    f1 = np.empty(n)
    f2 = np.empty(n)
    h1 = 0.0
    h2 = 0.0
    for i in range(n):
        s1 = 0.0
        s2 = 0.0
        for j in range(n):
            s1 += B1[i, j]
            s2 += B2[i, j]
        f1[i] = s1
        f2[i] = s2
        h1 += s1
        h2 += s2
    h1 *= 0.5 / sqrtn
    h2 *= 0.5 / sqrtn

    # integer per-species overlap counts: c_s = sum_{i in I_s} sigma_i rho_i
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        counts[species[i]] += 1

    r_val = 0.0
    for s in range(k):
        for u in range(k):
            r_val += delta2[s, u] * counts[s] * counts[u]
    r_val /= nn * nn

    tilt = lam * beta * beta * nn
    e = beta * (h1 + h2) + tilt * r_val
    mx = e
    acc_z = 1.0
    acc_r = r_val

    for m in range(1, 1 << (2 * n)):
        b = _ctz(m)
        if b < n:
            a = b
            sa = sigma[a]
            h1 += -2.0 / sqrtn * sa * (f1[a] - B1[a, a] * sa)
            sigma[a] = -sa
            for i in range(n):
                f1[i] -= 2.0 * sa * B1[i, a]
            counts[species[a]] += int(-2.0 * sa * rho[a])
        else:
            a = b - n
            ra = rho[a]
            h2 += -2.0 / sqrtn * ra * (f2[a] - B2[a, a] * ra)
            rho[a] = -ra
            for i in range(n):
                f2[i] -= 2.0 * ra * B2[i, a]
            counts[species[a]] += int(-2.0 * ra * sigma[a])

        r_val = 0.0
        for s in range(k):
            for u in range(k):
                r_val += delta2[s, u] * counts[s] * counts[u]
        r_val /= nn * nn

        e = beta * (h1 + h2) + tilt * r_val
        if e <= mx:
            w = math.exp(e - mx)
            acc_z += w
            acc_r += w * r_val
        else:
            c = math.exp(mx - e)
            acc_z = acc_z * c + 1.0
            acc_r = acc_r * c + r_val
            mx = e

    return mx + math.log(acc_z), acc_r / acc_z, mx


@njit(cache=True, nogil=True)
def pair_two_point_sweep(B1, B2, species, delta2, beta, lam, shift):
    """Second pass over replica pairs: weighted two-point sums per replica.

    With w = exp(e - shift), accumulates sum(w), and the matrices
    sum(w * sigma sigma^T) and sum(w * rho rho^T) needed for the
    independent-pair cross overlap.  ``shift`` should be the max exponent
    from pair_sweep over the same inputs.
    """
    n = B1.shape[0]
    k = delta2.shape[0]
    sqrtn = math.sqrt(n)
    nn = float(n)

    sigma = np.ones(n)
    rho = np.ones(n)
    f1 = np.empty(n)
    f2 = np.empty(n)
    h1 = 0.0
    h2 = 0.0
    for i in range(n):
        s1 = 0.0
        s2 = 0.0
        for j in range(n):
            s1 += B1[i, j]
            s2 += B2[i, j]
        f1[i] = s1
        f2[i] = s2
        h1 += s1
        h2 += s2
    h1 *= 0.5 / sqrtn
    h2 *= 0.5 / sqrtn

    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        counts[species[i]] += 1

    tilt = lam * beta * beta * nn
    sum_w = 0.0
    m_sig = np.zeros((n, n))
    m_rho = np.zeros((n, n))

    for m in range(0, 1 << (2 * n)):
        if m > 0:
            b = _ctz(m)
            if b < n:
                a = b
                sa = sigma[a]
                h1 += -2.0 / sqrtn * sa * (f1[a] - B1[a, a] * sa)
                sigma[a] = -sa
                for i in range(n):
                    f1[i] -= 2.0 * sa * B1[i, a]
                counts[species[a]] += int(-2.0 * sa * rho[a])
            else:
                a = b - n
                ra = rho[a]
                h2 += -2.0 / sqrtn * ra * (f2[a] - B2[a, a] * ra)
                rho[a] = -ra
                for i in range(n):
                    f2[i] -= 2.0 * ra * B2[i, a]
                counts[species[a]] += int(-2.0 * ra * sigma[a])

        r_val = 0.0
        for s in range(k):
            for u in range(k):
                r_val += delta2[s, u] * counts[s] * counts[u]
        r_val /= nn * nn

        w = math.exp(beta * (h1 + h2) + tilt * r_val - shift)
        sum_w += w
        for i in range(n):
            wsi = w * sigma[i]
            wri = w * rho[i]
            for j in range(i, n):
                m_sig[i, j] += wsi * sigma[j]
                m_rho[i, j] += wri * rho[j]

    for i in range(n):
        for j in range(i + 1, n):
            m_sig[j, i] = m_sig[i, j]
            m_rho[j, i] = m_rho[i, j]
    return sum_w, m_sig, m_rho


def states_in_visit_order(n: int) -> np.ndarray:
    """(2^n, n) matrix of +-1 spins, row m = state after m Gray steps.

    Row 0 is all +1; bit i of gray(m) = m ^ (m >> 1) marks spin i flipped.
    """
    m = np.arange(1 << n, dtype=np.int64)
    gray = m ^ (m >> 1)
    bits = (gray[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.float64)
