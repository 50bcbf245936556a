"""Numba-jitted local kernel evaluation (hot assembly path).

These functions mirror the batched numpy kernels in :mod:`r13fem.forms`
entry for entry; they loop per cell/edge instead of building large einsum
temporaries, which keeps memory flat on big meshes.  The caller hands in the
precomputed basis tables, geometry and boundary data arrays from the
LocalForms context, so no object-mode code runs inside.
"""

import numpy as np

from numba import njit


@njit(cache=True)
def volume_kernels(qw, det, g_hi, g_lo, n_hi, n_lo, kn, grad_gram, lift_gram, sig):
    """Local volume matrices (a, b, c, d, e, g) for every cell.

    g_* are physical basis gradients (ncells, nq, nloc, 2), n_* basis values
    (nq, nloc); sig holds the three symmetric stress basis tensors.
    """
    m = det.shape[0]
    nq = qw.shape[0]
    nlh = g_hi.shape[2]
    nll = g_lo.shape[2]

    a_loc = np.zeros((m, 2 * nlh, 2 * nlh))
    b_loc = np.zeros((m, nll, 2 * nlh))
    c_loc = np.zeros((m, 3 * nlh, 2 * nlh))
    d_loc = np.zeros((m, 3 * nlh, 3 * nlh))
    e_loc = np.zeros((m, 2 * nll, 3 * nlh))
    g_loc = np.zeros((m, nll, 2 * nll))

    t = np.empty((nlh, 2, nlh, 2))
    mass = np.empty((nlh, nlh))
    tu_h = np.empty((nlh, nlh, 2))
    tu_l = np.empty((nll, nlh, 2))
    gn = np.empty((nll, 2, nll))

    c_sym = (24.0 / 25.0) * kn * 0.5
    c_div = (12.0 / 25.0) * kn
    c_mass = (4.0 / 15.0) / kn

    for c in range(m):
        t[:] = 0.0
        mass[:] = 0.0
        tu_h[:] = 0.0
        tu_l[:] = 0.0
        gn[:] = 0.0
        for q in range(nq):
            w = qw[q] * det[c]
            for a in range(nlh):
                for k in range(2):
                    gak = g_hi[c, q, a, k]
                    for b in range(nlh):
                        t[a, k, b, 0] += w * gak * g_hi[c, q, b, 0]
                        t[a, k, b, 1] += w * gak * g_hi[c, q, b, 1]
                for b in range(nlh):
                    mass[a, b] += w * n_hi[q, a] * n_hi[q, b]
            for b in range(nlh):
                wn = w * n_hi[q, b]
                for a in range(nlh):
                    tu_h[b, a, 0] += wn * g_hi[c, q, a, 0]
                    tu_h[b, a, 1] += wn * g_hi[c, q, a, 1]
            for b in range(nll):
                wn = w * n_lo[q, b]
                for a in range(nlh):
                    tu_l[b, a, 0] += wn * g_hi[c, q, a, 0]
                    tu_l[b, a, 1] += wn * g_hi[c, q, a, 1]
            for i in range(nll):
                for k in range(2):
                    wg = w * g_lo[c, q, i, k]
                    for b in range(nll):
                        gn[i, k, b] += wg * n_lo[q, b]

        # heat-flux diagonal
        for ci in range(2):
            for cj in range(2):
                for a in range(nlh):
                    for b in range(nlh):
                        val = c_sym * t[a, cj, b, ci] + c_div * t[a, ci, b, cj]
                        if ci == cj:
                            val += c_sym * (t[a, 0, b, 0] + t[a, 1, b, 1])
                            val += c_mass * mass[a, b]
                        a_loc[c, ci * nlh + a, cj * nlh + b] = val

        # theta rows vs s columns
        for i in range(nll):
            for k in range(2):
                for a in range(nlh):
                    b_loc[c, i, k * nlh + a] = tu_l[i, a, k]

        # sigma-test rows vs s columns, and u rows vs sigma columns
        for mm in range(3):
            for cc in range(2):
                s0 = sig[mm, cc, 0]
                s1 = sig[mm, cc, 1]
                for b in range(nlh):
                    for a in range(nlh):
                        c_loc[c, mm * nlh + b, cc * nlh + a] = 0.4 * (
                            s0 * tu_h[b, a, 0] + s1 * tu_h[b, a, 1]
                        )
                for b in range(nll):
                    for a in range(nlh):
                        e_loc[c, cc * nll + b, mm * nlh + a] = (
                            s0 * tu_l[b, a, 0] + s1 * tu_l[b, a, 1]
                        )

        # stress diagonal
        for mi in range(3):
            for mj in range(3):
                lg = (0.5 / kn) * lift_gram[mi, mj]
                for a in range(nlh):
                    for b in range(nlh):
                        val = lg * mass[a, b]
                        for k in range(2):
                            for l in range(2):
                                val += kn * grad_gram[mi, k, mj, l] * t[a, k, b, l]
                        d_loc[c, mi * nlh + a, mj * nlh + b] = val

        # pressure-test rows vs u columns
        for i in range(nll):
            for cc in range(2):
                for b in range(nll):
                    g_loc[c, i, cc * nll + b] = gn[i, cc, b]

    return a_loc, b_loc, c_loc, d_loc, e_loc, g_loc


@njit(cache=True)
def boundary_kernels(
    ew,
    blen,
    bn,
    bt,
    chi,
    eps,
    tb_hi,
    tb_lo,
    theta_w,
    u_t_w,
    u_n_w,
    p_w,
):
    """Local boundary matrices (a, c, d, f, h) and loads (l1, l3, l5)."""
    nb = blen.shape[0]
    nqe = ew.shape[0]
    nlh = tb_hi.shape[2]
    nll = tb_lo.shape[2]

    ab = np.zeros((nb, 2 * nlh, 2 * nlh))
    cb = np.zeros((nb, 3 * nlh, 2 * nlh))
    db = np.zeros((nb, 3 * nlh, 3 * nlh))
    fb = np.zeros((nb, nll, 3 * nlh))
    hb = np.zeros((nb, nll, nll))
    l1 = np.zeros((nb, 2 * nlh))
    l3 = np.zeros((nb, 3 * nlh))
    l5 = np.zeros((nb, nll))

    em_hh = np.empty((nlh, nlh))
    em_lh = np.empty((nll, nlh))
    em_ll = np.empty((nll, nll))
    v_theta = np.empty(nlh)
    v_t = np.empty(nlh)
    v_n = np.empty(nlh)
    v_eff = np.empty(nll)
    ann = np.empty(3)
    ant = np.empty(3)
    att = np.empty(3)

    for e in range(nb):
        em_hh[:] = 0.0
        em_lh[:] = 0.0
        em_ll[:] = 0.0
        v_theta[:] = 0.0
        v_t[:] = 0.0
        v_n[:] = 0.0
        v_eff[:] = 0.0
        ec = eps[e] * chi[e]
        for q in range(nqe):
            w = ew[q] * blen[e]
            eff = u_n_w[e, q] - ec * p_w[e, q]
            for a in range(nlh):
                wa = w * tb_hi[e, q, a]
                for b in range(nlh):
                    em_hh[a, b] += wa * tb_hi[e, q, b]
                v_theta[a] += wa * theta_w[e, q]
                v_t[a] += wa * u_t_w[e, q]
                v_n[a] += wa * eff
            for i in range(nll):
                wi = w * tb_lo[e, q, i]
                for a in range(nlh):
                    em_lh[i, a] += wi * tb_hi[e, q, a]
                for j in range(nll):
                    em_ll[i, j] += wi * tb_lo[e, q, j]
                v_eff[i] += wi * eff

        nx, ny = bn[e, 0], bn[e, 1]
        tx, ty = bt[e, 0], bt[e, 1]
        ann[0], ann[1], ann[2] = nx * nx, 2.0 * nx * ny, ny * ny
        ant[0], ant[1], ant[2] = nx * tx, nx * ty + ny * tx, ny * ty
        att[0], att[1], att[2] = tx * tx, 2.0 * tx * ty, ty * ty

        # heat-flux boundary accommodation
        half_inv_chi = 0.5 / chi[e]
        tang = (12.0 / 25.0) * chi[e]
        nvec = (nx, ny)
        tvec = (tx, ty)
        for ci in range(2):
            for cj in range(2):
                cn = half_inv_chi * nvec[ci] * nvec[cj] + tang * tvec[ci] * tvec[cj]
                for a in range(nlh):
                    for b in range(nlh):
                        ab[e, ci * nlh + a, cj * nlh + b] = cn * em_hh[a, b]

        # heat/stress boundary coupling
        for mm in range(3):
            for cc in range(2):
                coef = (3.0 / 20.0) * ann[mm] * nvec[cc] + 0.2 * ant[mm] * tvec[cc]
                for b in range(nlh):
                    for a in range(nlh):
                        cb[e, mm * nlh + b, cc * nlh + a] = -coef * em_hh[b, a]

        # stress boundary terms
        for mi in range(3):
            ci_combo = att[mi] + 0.5 * ann[mi]
            for mj in range(3):
                cj_combo = att[mj] + 0.5 * ann[mj]
                coef = (
                    ((9.0 / 8.0) * chi[e] + ec) * ann[mi] * ann[mj]
                    + chi[e] * ci_combo * cj_combo
                    + (1.0 / chi[e]) * ant[mi] * ant[mj]
                )
                for a in range(nlh):
                    for b in range(nlh):
                        db[e, mi * nlh + a, mj * nlh + b] = coef * em_hh[a, b]

        # inflow pressure couplings
        for mm in range(3):
            coef = ec * ann[mm]
            for i in range(nll):
                for a in range(nlh):
                    fb[e, i, mm * nlh + a] = coef * em_lh[i, a]
        for i in range(nll):
            for j in range(nll):
                hb[e, i, j] = ec * em_ll[i, j]

        # loads
        for a in range(nlh):
            l1[e, a] = -nx * v_theta[a]
            l1[e, nlh + a] = -ny * v_theta[a]
        for mm in range(3):
            for a in range(nlh):
                l3[e, mm * nlh + a] = -(ant[mm] * v_t[a] + ann[mm] * v_n[a])
        for i in range(nll):
            l5[e, i] = -v_eff[i]

    return ab, cb, db, fb, hb, l1, l3, l5


@njit(cache=True)
def cip_kernels(wlen, jumps, h_avg, delta_theta, delta_u, delta_p):
    """CIP jump matrices per interior edge for theta, u-component and p."""
    ne = wlen.shape[0]
    nqe = wlen.shape[1]
    nun = jumps.shape[2]
    k_theta = np.zeros((ne, nun, nun))
    k_u = np.zeros((ne, nun, nun))
    k_p = np.zeros((ne, nun, nun))
    base = np.empty((nun, nun))
    for e in range(ne):
        base[:] = 0.0
        for q in range(nqe):
            w = wlen[e, q]
            for a in range(nun):
                wj = w * jumps[e, q, a]
                for b in range(nun):
                    base[a, b] += wj * jumps[e, q, b]
        h3 = h_avg[e] ** 3
        for a in range(nun):
            for b in range(nun):
                k_theta[e, a, b] = delta_theta * h3 * base[a, b]
                k_u[e, a, b] = delta_u * h3 * base[a, b]
                k_p[e, a, b] = delta_p * h_avg[e] * base[a, b]
    return k_theta, k_u, k_p
