"""Compiled inner loops for the path simulator.

The kernels advance a path over one chunk of pre-drawn standard normals and
carry all state in caller-owned arrays, so a path can be integrated chunk by
chunk with bounded memory. They return ``-1`` on success or the index of the
first step whose state left the overflow region.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# coefficient vector layout
DT, SQRT_DT, DRIFT, BETA, PF_AF, PC_AC, K, BIG_Z = 0, 1, 2, 3, 4, 5, 6, 7
ALPHA_F, ALPHA_C, SF0, SF1, SN0, SN1, HALF_NN, DECAY_TAU, OVERFLOW = (
    8, 9, 10, 11, 12, 13, 14, 15, 16,
)
N_COEF = 17

# state vector layout
F, U, M, LVF, LVC = 0, 1, 2, 3, 4
N_STATE = 5

# accumulator layout: count and sums over post-burn-in recorded states
A_N, A_U, A_M, A_UU, A_UM, A_MM, A_LVF_BURN, A_LVC_BURN = 0, 1, 2, 3, 4, 5, 6, 7
N_ACC = 8


@njit(cache=True, nogil=True)
def _observe(x, step, stride, burn_step, rec, acc):
    if step == burn_step:
        acc[A_LVF_BURN] = x[LVF]
        acc[A_LVC_BURN] = x[LVC]
    if step % stride != 0:
        return
    row = step // stride
    if row < rec.shape[0]:
        for j in range(N_STATE):
            rec[row, j] = x[j]
    if step >= burn_step:
        u = x[U]
        m = x[M]
        acc[A_N] += 1.0
        acc[A_U] += u
        acc[A_M] += m
        acc[A_UU] += u * u
        acc[A_UM] += u * m
        acc[A_MM] += m * m


@njit(cache=True, nogil=True)
def observe_initial(x, stride, burn_step, rec, acc):
    _observe(x, 0, stride, burn_step, rec, acc)


@njit(cache=True, nogil=True)
def euler_chunk(x, z, first_step, coef, lag, ring, stride, burn_step, rec, acc, ds_out):
    """Euler-Maruyama over ``z.shape[0]`` steps starting at ``first_step``.

    ``lag > 0`` enables the delayed momentum term: ``ring`` then holds the last
    ``lag`` excess log-price increments, slot ``n % lag`` being the one from
    step ``n - lag``.
    """
    dt = coef[DT]
    sqdt = coef[SQRT_DT]
    drift = coef[DRIFT]
    beta = coef[BETA]
    pf_af = coef[PF_AF]
    pc_ac = coef[PC_AC]
    k = coef[K]
    big_z = coef[BIG_Z]
    a_f = coef[ALPHA_F]
    a_c = coef[ALPHA_C]
    sf0 = coef[SF0]
    sf1 = coef[SF1]
    sn0 = coef[SN0]
    sn1 = coef[SN1]
    su0 = sn0 - sf0
    su1 = sn1 - sf1
    half_nn = coef[HALF_NN]
    decay = coef[DECAY_TAU]
    limit = coef[OVERFLOW]
    keep_ds = ds_out.shape[0] > 0

    f = x[F]
    u = x[U]
    m = x[M]
    lvf = x[LVF]
    lvc = x[LVC]
    for i in range(z.shape[0]):
        n = first_step + i
        w0 = z[i, 0] * sqdt
        w1 = z[i, 1] * sqdt
        sfw = sf0 * w0 + sf1 * w1
        snw = sn0 * w0 + sn1 * w1
        suw = su0 * w0 + su1 * w1

        excess = pc_ac * m - pf_af * u
        push = beta * excess * dt
        ds_prime = push + snw
        ret = (drift + half_nn + beta * excess) * dt + snw
        z_f = big_z - a_f * u
        z_c = big_z + a_c * m

        dm = ds_prime - k * m * dt
        if lag > 0:
            slot = n % lag
            dm -= decay * ring[slot]
            ring[slot] = ds_prime
        if keep_ds:
            ds_out[n] = ds_prime

        f += drift * dt + sfw
        u += push + suw
        m += dm
        lvf += z_f * ret - z_f * z_f * half_nn * dt
        lvc += z_c * ret - z_c * z_c * half_nn * dt

        x[F] = f
        x[U] = u
        x[M] = m
        x[LVF] = lvf
        x[LVC] = lvc
        if not (abs(u) <= limit and abs(m) <= limit):
            return n + 1
        _observe(x, n + 1, stride, burn_step, rec, acc)
    return -1


@njit(cache=True, nogil=True)
def exact_chunk(x, z, first_step, phi, shift, chol, limit, stride, burn_step, rec, acc):
    """Exact Gaussian transition of the affine (f, u, m) system.

    Log wealth is not integrated in this mode and stays at its initial value.
    """
    y0 = np.empty(3)
    for i in range(z.shape[0]):
        n = first_step + i
        y0[0] = x[F]
        y0[1] = x[U]
        y0[2] = x[M]
        for r in range(3):
            acc_r = shift[r]
            for c in range(3):
                acc_r += phi[r, c] * y0[c] + chol[r, c] * z[i, c]
            x[r] = acc_r
        if not (abs(x[U]) <= limit and abs(x[M]) <= limit):
            return n + 1
        _observe(x, n + 1, stride, burn_step, rec, acc)
    return -1

