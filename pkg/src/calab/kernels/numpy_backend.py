"""Pure-numpy kernels, semantically identical to the numba backend.

Selected with CALAB_KERNELS=numpy (or automatically when numba is absent).
The per-offset loops below run over a constant number of offsets, so every
operation stays vectorized over the row.
"""

import numpy as np

BLANK = 0
CAR_R = 1
CAR_L = 2
EMIT_A = 3
EMIT_B = 4


def _view(ext, r, n):
    def v(off):
        return ext[r + off: r + off + n]
    return v


def table_row(ext, r, arity, table):
    n = ext.size - 2 * r
    code = np.zeros(n, np.int64)
    for j in range(2 * r + 1):
        code = code * arity + ext[j: j + n]
    return table[code].astype(np.int8)


def erosion_row(p):
    n = p.size - 6
    v = _view(p, 3, n)
    return (v(-3) & v(-2) & v(-1)).astype(np.int8)


def emission_row(t, p):
    n = p.size - 4
    vt = _view(t, 2, n)
    vp = _view(p, 2, n)
    lit = (vp(0) == 1) | (vt(0) == EMIT_A) | (vt(-1) == EMIT_A) | (vt(-2) == EMIT_A)
    return lit.astype(np.int8)


def _prefix(mask):
    s = np.zeros(mask.size + 1, np.int64)
    np.cumsum(mask, out=s[1:])
    return s


def isolation_row(t):
    r = 152
    n = t.size - 2 * r
    em = _prefix(t >= EMIT_A)
    j = np.arange(n) + r
    total = em[j + 153] - em[j - 152]
    center = t[r: r + n]
    out = center.copy()
    out[(center >= EMIT_A) & (total != 1)] = BLANK
    return out.astype(np.int8)


def freeze_rows(f, t):
    r = 10
    n = t.size - 2 * r
    vt = _view(t, r, n)
    vf = _view(f, r, n)
    emitter = t >= EMIT_A
    vem = _view(emitter, r, n)

    center = vt(0)
    center_em = vem(0)
    t_out = center.copy()
    t_out[(vf(-1) == 1) & center_em] = EMIT_B

    # nearest emitter distance per side, 0 when none within 10
    dl = np.zeros(n, np.int64)
    dr = np.zeros(n, np.int64)
    for k in range(10, 0, -1):
        dl[vem(-k)] = k
        dr[vem(k)] = k
    a = np.where(dl > 0, dl - 1, 10)
    b = np.where(dr > 0, dr - 1, 10)
    nz = _prefix(t != BLANK)
    j = np.arange(n) + r
    clear = (nz[j + b + 1] - nz[j - a]) == 0

    near_flag = np.zeros(n, bool)
    for l in range(0, 6):
        near_flag |= vf(-l) == 1
    seeded = (dl > 0) & (dl <= 5)

    f_out = np.where(
        vem(-1), 1,
        np.where(center_em, 0, (clear & (near_flag | seeded)).astype(np.int8)),
    ).astype(np.int8)
    return f_out, t_out


def rotation_row(t):
    r = 11
    n = t.size - 2 * r
    v = _view(t, r, n)
    emitter = t >= EMIT_A
    vem = _view(emitter, r, n)
    c = v(0)
    center_em = vem(0)

    # emitter stepping: nearest nonblank within 10 left is an R
    near_code = np.zeros(n, np.int8)
    for k in range(10, 0, -1):
        m = v(-k) != BLANK
        near_code[m] = v(-k)[m]
    stepped = np.where(near_code == CAR_R, EMIT_A + ((c - EMIT_A + 1) % 4), c)

    car = _prefix((t == CAR_R) | (t == CAR_L))
    j = np.arange(n) + r
    crowded = (car[j + 12] - car[j - 11]) >= 2

    # R move: first nonblank over offsets -9..10 must be an emitter at offset >= 1
    ok_r = np.ones(n, bool)
    found = np.zeros(n, bool)
    for off in range(-9, 11):
        cur = v(off) != BLANK
        first = cur & ~found
        ok_r &= ~(first & ((off < 1) | ~vem(off)))
        found |= cur
    move_r = (v(-10) == CAR_R) & ok_r

    # L move: first nonblank over offsets 9..-10 (scanned downward) must be an emitter at offset <= -1
    ok_l = np.ones(n, bool)
    found = np.zeros(n, bool)
    for off in range(9, -11, -1):
        cur = v(off) != BLANK
        first = cur & ~found
        ok_l &= ~(first & ((off > -1) | ~vem(off)))
        found |= cur
    move_l = (v(10) == CAR_L) & ok_l

    nzp = _prefix(t != BLANK)
    rp = _prefix(t == CAR_R)
    lp = _prefix(t == CAR_L)
    strip_nz = nzp[j + 10] - nzp[j]
    strip_r = rp[j + 10] - rp[j]
    strip_l = lp[j + 10] - lp[j]
    land_l = vem(10) & (strip_nz == 1) & (strip_r == 1)
    land_r = vem(-1) & (strip_nz == 1) & (strip_l == 1)

    out = np.zeros(n, np.int8)
    quiet = ~center_em & ~crowded
    out[quiet & move_r] = CAR_R
    out[quiet & move_l] = CAR_L
    out[quiet & land_l & ~move_r & ~move_l] = CAR_L
    out[quiet & land_r & ~move_r & ~move_l & ~land_l] = CAR_R
    out[center_em] = stepped[center_em]
    return out


def settled_planes(f, t, p):
    """One settled machine step on plane arrays; mirrors the numba version."""
    f1, t1 = freeze_rows(f, t)
    p1 = erosion_row(p[7: p.size - 7])
    p2 = emission_row(t1, p1)
    t2 = rotation_row(t1[5: t1.size - 5])
    return f1[16: f1.size - 16], t2, p2[14: p2.size - 14]
