"""Numba kernels for row updates.

Every function takes extended rows (radius padding already attached on both
sides) and returns the interior output.  The numpy backend implements the same
contracts; parity between the two is enforced by tests.

Tape letter codes: 0 = blank, 1 = R carrier, 2 = L carrier, 3..6 = emitter
states A..D.  A (code 3) is the emitting state; emitters hit by a flag-1 from
the left are pinned to B (code 4).
"""

import numpy as np
from numba import njit

BLANK = 0
CAR_R = 1
CAR_L = 2
EMIT_A = 3
EMIT_B = 4

BIG = 1 << 30


@njit(cache=True)
def table_row(ext, r, arity, table):
    n = ext.size - 2 * r
    out = np.empty(n, np.int8)
    for i in range(n):
        code = 0
        for j in range(2 * r + 1):
            code = code * arity + ext[i + j]
        out[i] = table[code]
    return out


@njit(cache=True)
def erosion_row(p):
    """Pulse plane, radius 3: a cell turns 1 iff the three cells to its left are 1."""
    n = p.size - 6
    out = np.zeros(n, np.int8)
    for i in range(n):
        j = i + 3
        out[i] = p[j - 3] & p[j - 2] & p[j - 1]
    return out


@njit(cache=True)
def emission_row(t, p):
    """Pulse plane, radius 2: keep existing 1s, add 1 where an A-emitter sits at 0, -1 or -2."""
    n = p.size - 4
    out = np.zeros(n, np.int8)
    for i in range(n):
        j = i + 2
        if p[j] == 1 or t[j] == EMIT_A or t[j - 1] == EMIT_A or t[j - 2] == EMIT_A:
            out[i] = 1
    return out


@njit(cache=True)
def isolation_row(t):
    """Tape plane, radius 152: an emitter survives iff no other emitter within 152."""
    r = 152
    n = t.size - 2 * r
    em = np.zeros(t.size + 1, np.int64)
    for q in range(t.size):
        em[q + 1] = em[q] + (1 if t[q] >= EMIT_A else 0)
    out = np.empty(n, np.int8)
    for i in range(n):
        j = i + r
        c = t[j]
        if c < EMIT_A:
            out[i] = c
        else:
            out[i] = c if em[j + 153] - em[j - 152] == 1 else BLANK
    return out


@njit(cache=True)
def freeze_rows(f, t):
    """Flag and tape planes, radius 10.

    Flag: 1 right of an emitter; elsewhere 1 when the tape window (truncated
    at the nearest emitters, capped at 10 per side) is all blank and there is
    a flag-1 within 5 to the left or an emitter within 5 to the left.
    Tape: an emitter whose left neighbour carries flag 1 is pinned to B.
    """
    r = 10
    N = t.size
    n = N - 2 * r
    f_out = np.zeros(n, np.int8)
    t_out = np.empty(n, np.int8)
    nz = np.zeros(N + 1, np.int64)
    for q in range(N):
        nz[q + 1] = nz[q] + (1 if t[q] != BLANK else 0)
    dl = np.empty(N, np.int64)       # distance to nearest emitter strictly left
    near_f1 = np.empty(N, np.uint8)  # flag 1 somewhere in [q-5, q]
    last_em = -BIG
    last_f1 = -BIG
    for q in range(N):
        if f[q] == 1:
            last_f1 = q
        near_f1[q] = 1 if q - last_f1 <= 5 else 0
        dl[q] = q - last_em
        if t[q] >= EMIT_A:
            last_em = q
    dr = np.empty(N, np.int64)       # distance to nearest emitter strictly right
    nxt = BIG
    for q in range(N - 1, -1, -1):
        dr[q] = nxt - q
        if t[q] >= EMIT_A:
            nxt = q
    for i in range(n):
        j = i + r
        c = t[j]
        t_out[i] = EMIT_B if (f[j - 1] == 1 and c >= EMIT_A) else c
        if t[j - 1] >= EMIT_A:
            f_out[i] = 1
        elif c < EMIT_A:
            a = dl[j] - 1 if dl[j] <= 10 else 10
            b = dr[j] - 1 if dr[j] <= 10 else 10
            if nz[j + b + 1] - nz[j - a] == 0 and (dl[j] <= 5 or near_f1[j] == 1):
                f_out[i] = 1
    return f_out, t_out


@njit(cache=True)
def rotation_row(t):
    """Tape plane, radius 11: carrier motion, reflection at emitters, emitter stepping.

    Emitter cell: advances one state (A->B->C->D->A) when the nearest nonblank
    within 10 to its left is an R; otherwise unchanged.  Non-emitter cells:
    with two carriers in sight the output is blank (collision); otherwise an R
    ten to the left moves in when the strip ahead is blank up to the next
    emitter (capped at 10), mirrored for L; an R arriving at an emitter
    reflects to an L landing ten left of that emitter, an L arriving at an
    emitter reflects to an R landing just right of it.
    """
    r = 11
    N = t.size
    n = N - 2 * r
    out = np.zeros(n, np.int8)
    car = np.zeros(N + 1, np.int64)
    for q in range(N):
        v = t[q]
        car[q + 1] = car[q] + (1 if v == CAR_R or v == CAR_L else 0)
    for i in range(n):
        j = i + r
        c = t[j]
        if c >= EMIT_A:
            val = c
            for k in range(1, 11):
                v = t[j - k]
                if v != BLANK:
                    if v == CAR_R:
                        val = EMIT_A + ((c - EMIT_A + 1) % 4)
                    break
            out[i] = val
            continue
        if car[j + 12] - car[j - 11] >= 2:
            continue
        if t[j - 10] == CAR_R:
            ok = True
            for off in range(-9, 11):
                v = t[j + off]
                if v != BLANK:
                    ok = v >= EMIT_A and off >= 1
                    break
            if ok:
                out[i] = CAR_R
                continue
        if t[j + 10] == CAR_L:
            ok = True
            for off in range(9, -11, -1):
                v = t[j + off]
                if v != BLANK:
                    ok = v >= EMIT_A and off <= -1
                    break
            if ok:
                out[i] = CAR_L
                continue
        if t[j + 10] >= EMIT_A:
            nonblank = 0
            rs = 0
            for q in range(j, j + 10):
                if t[q] != BLANK:
                    nonblank += 1
                    if t[q] == CAR_R:
                        rs += 1
            if nonblank == 1 and rs == 1:
                out[i] = CAR_L
                continue
        if t[j - 1] >= EMIT_A:
            nonblank = 0
            ls = 0
            for q in range(j, j + 10):
                if t[q] != BLANK:
                    nonblank += 1
                    if t[q] == CAR_L:
                        ls += 1
            if nonblank == 1 and ls == 1:
                out[i] = CAR_R
    return out


@njit(cache=True)
def settled_planes(f, t, p):
    """One settled machine step (freeze, erosion, emission, rotation) on plane
    arrays; output planes are 26 cells shorter on each side.

    Stage-by-stage composition computes intermediate cells that later stages
    never read; this fused version computes each intermediate on exactly the
    span the final output needs, and matches the composite bit for bit.
    """
    f1, t1 = freeze_rows(f, t)                  # covers input coords [10, N-10)
    p1 = erosion_row(p[7: p.size - 7])          # same coords as t1
    p2 = emission_row(t1, p1)                   # coords [12, N-12)
    t2 = rotation_row(t1[5: t1.size - 5])       # coords [26, N-26)
    return f1[16: f1.size - 16], t2, p2[14: p2.size - 14]
