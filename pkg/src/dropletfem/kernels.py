"""Element loops for the mixed P1 system and the slope-recovery estimator.

Each kernel exists twice: an explicit loop compiled with numba and a
vectorised NumPy version. They compute the same quantities; summation order
differs, so results agree to rounding, not bitwise.

Unknowns are interleaved per node as ``(u, h, s)``. The Jacobian is kept in
LAPACK band storage with 5 sub- and 5 super-diagonals:
``ab[5 + r - c, c] = J[r, c]``.
"""

import math

import numpy as np

from ._backend import njit, resolve

BAND = 5

# parameter vector layout for the assembly kernels
P_GR, P_NU, P_A1, P_A2, P_BODY, P_IDT, P_DLDT, P_L, P_TIP = range(9)
N_PARAMS = 9


@njit
def _assemble_numba(zeta, u, h, s, uo, ho, prm, qx, qw, fu, fh, res, ab):
    gr = prm[0]
    c6 = 6.0 * prm[1] * prm[2]
    c3 = 3.0 * prm[1] * prm[3]
    body = prm[4]
    idt = prm[5]
    dLdt = prm[6]
    L = prm[7]
    tip = prm[8]

    n = zeta.size
    ne = n - 1
    nq = qx.size
    res[:] = 0.0
    ab[:, :] = 0.0
    bad = -1
    Re = np.zeros(6)
    Ke = np.zeros((6, 6))
    Nv = np.zeros(2)
    dNv = np.zeros(2)

    for e in range(ne):
        i0 = e
        i1 = e + 1
        dz = L * (zeta[i1] - zeta[i0])
        idz = 1.0 / dz
        uz = (u[i1] - u[i0]) * idz
        hz = (h[i1] - h[i0]) * idz
        sz = (s[i1] - s[i0]) * idz
        dNv[0] = -idz
        dNv[1] = idz
        Re[:] = 0.0
        Ke[:, :] = 0.0
        for q in range(nq):
            x = qx[q]
            wt = qw[q] * dz
            Nv[0] = 1.0 - x
            Nv[1] = x
            uq = Nv[0] * u[i0] + Nv[1] * u[i1]
            hq = Nv[0] * h[i0] + Nv[1] * h[i1]
            sq = Nv[0] * s[i0] + Nv[1] * s[i1]
            uoq = Nv[0] * uo[i0] + Nv[1] * uo[i1]
            hoq = Nv[0] * ho[i0] + Nv[1] * ho[i1]
            if hq <= 0.0:
                if bad < 0:
                    bad = e
                continue
            wq = (Nv[0] * zeta[i0] + Nv[1] * zeta[i1]) * dLdt
            Q = 1.0 + sq * sq
            r1 = 1.0 / math.sqrt(Q)
            r3 = r1 / Q
            r5 = r3 / Q
            ih = 1.0 / hq
            adv = uq - wq

            M0 = ((uq - uoq) * idt + adv * uz - c6 * sq * uz * ih
                  + gr * (-sq * sz * r3 * ih - sq * r1 * ih * ih) + body - fu[e, q])
            M1 = c3 * uz + gr * sz * r3
            I0 = (hq - hoq) * idt + adv * hz + 0.5 * hq * uz - fh[e, q]
            S0 = sq - hz

            M0_u = idt + uz
            M0_uz = adv - c6 * sq * ih
            M0_h = c6 * sq * uz * ih * ih + gr * (sq * sz * r3 * ih * ih + 2.0 * sq * r1 * ih * ih * ih)
            M0_s = -c6 * uz * ih + gr * (-sz * ih * (r3 - 3.0 * sq * sq * r5) - r3 * ih * ih)
            M0_sz = -gr * sq * r3 * ih
            M1_s = -3.0 * gr * sz * sq * r5
            M1_sz = gr * r3
            I0_h = idt + 0.5 * uz

            for a in range(2):
                Na = Nv[a]
                dNa = dNv[a]
                ra = 3 * a
                Re[ra] += wt * (Na * M0 + dNa * M1)
                Re[ra + 1] += wt * Na * I0
                Re[ra + 2] += wt * Na * S0
                for b in range(2):
                    Nb = Nv[b]
                    dNb = dNv[b]
                    cb = 3 * b
                    Ke[ra, cb] += wt * (Na * (M0_u * Nb + M0_uz * dNb) + dNa * c3 * dNb)
                    Ke[ra, cb + 1] += wt * Na * M0_h * Nb
                    Ke[ra, cb + 2] += wt * (Na * (M0_s * Nb + M0_sz * dNb) + dNa * (M1_s * Nb + M1_sz * dNb))
                    Ke[ra + 1, cb] += wt * Na * (hz * Nb + 0.5 * hq * dNb)
                    Ke[ra + 1, cb + 1] += wt * Na * (I0_h * Nb + adv * dNb)
                    Ke[ra + 2, cb + 1] -= wt * Na * dNb
                    Ke[ra + 2, cb + 2] += wt * Na * Nb

        base = 3 * e
        for A in range(6):
            res[base + A] += Re[A]
            for B in range(6):
                ab[BAND + A - B, base + B] += Ke[A, B]

    if tip > 0.0:
        # natural flux term at z = L, evaluated from the last element
        i0 = n - 2
        i1 = n - 1
        idz = 1.0 / (L * (zeta[i1] - zeta[i0]))
        uz = (u[i1] - u[i0]) * idz
        sz = (s[i1] - s[i0]) * idz
        sN = s[i1]
        Q = 1.0 + sN * sN
        r3 = 1.0 / (Q * math.sqrt(Q))
        r5 = r3 / Q
        r = 3 * i1
        res[r] -= c3 * uz + gr * sz * r3
        dM1_s = -3.0 * gr * sz * sN * r5
        ab[BAND + r - 3 * i0, 3 * i0] -= c3 * -idz
        ab[BAND, r] -= c3 * idz
        ab[BAND + r - (3 * i0 + 2), 3 * i0 + 2] -= gr * r3 * -idz
        ab[BAND + r - (r + 2), r + 2] -= gr * r3 * idz + dM1_s
    return bad


def _assemble_numpy(zeta, u, h, s, uo, ho, prm, qx, qw, fu, fh, res, ab):
    gr = prm[P_GR]
    c6 = 6.0 * prm[P_NU] * prm[P_A1]
    c3 = 3.0 * prm[P_NU] * prm[P_A2]
    body, idt, dLdt, L, tip = prm[P_BODY], prm[P_IDT], prm[P_DLDT], prm[P_L], prm[P_TIP]
    n = zeta.size
    ne = n - 1

    dz = L * np.diff(zeta)
    idz = 1.0 / dz
    uz = (np.diff(u) * idz)[:, None]
    hz = (np.diff(h) * idz)[:, None]
    sz = (np.diff(s) * idz)[:, None]

    N0 = (1.0 - qx)[None, :]
    N1 = qx[None, :]

    def at_q(f):
        return N0 * f[:-1, None] + N1 * f[1:, None]

    uq, hq, sq, uoq, hoq = at_q(u), at_q(h), at_q(s), at_q(uo), at_q(ho)
    wq = at_q(zeta) * dLdt
    bad_el = np.flatnonzero((hq <= 0.0).any(axis=1))
    bad = int(bad_el[0]) if bad_el.size else -1
    ok = hq > 0.0
    hq = np.where(ok, hq, 1.0)

    Q = 1.0 + sq * sq
    r1 = 1.0 / np.sqrt(Q)
    r3 = r1 / Q
    r5 = r3 / Q
    ih = 1.0 / hq
    adv = uq - wq

    M0 = ((uq - uoq) * idt + adv * uz - c6 * sq * uz * ih
          + gr * (-sq * sz * r3 * ih - sq * r1 * ih * ih) + body - fu)
    M1 = c3 * uz + gr * sz * r3
    I0 = (hq - hoq) * idt + adv * hz + 0.5 * hq * uz - fh
    S0 = sq - hz

    M0_u = idt + uz
    M0_uz = adv - c6 * sq * ih
    M0_h = c6 * sq * uz * ih * ih + gr * (sq * sz * r3 * ih * ih + 2.0 * sq * r1 * ih**3)
    M0_s = -c6 * uz * ih + gr * (-sz * ih * (r3 - 3.0 * sq * sq * r5) - r3 * ih * ih)
    M0_sz = -gr * sq * r3 * ih
    M1_s = -3.0 * gr * sz * sq * r5
    M1_sz = gr * r3 * np.ones_like(sq)
    I0_u = hz * np.ones_like(sq)
    I0_uz = 0.5 * hq
    I0_h = idt + 0.5 * uz

    wt = np.where(ok, qw[None, :] * dz[:, None], 0.0)
    N = np.stack([np.broadcast_to(N0, wt.shape), np.broadcast_to(N1, wt.shape)])
    dN = np.stack([np.broadcast_to(-idz[:, None], wt.shape), np.broadcast_to(idz[:, None], wt.shape)])

    Re = np.zeros((ne, 6))
    Ke = np.zeros((ne, 6, 6))
    for a in range(2):
        ra = 3 * a
        Re[:, ra] = np.sum(wt * (N[a] * M0 + dN[a] * M1), axis=1)
        Re[:, ra + 1] = np.sum(wt * N[a] * I0, axis=1)
        Re[:, ra + 2] = np.sum(wt * N[a] * S0, axis=1)
        for b in range(2):
            cb = 3 * b
            Na, Nb, dNa, dNb = N[a], N[b], dN[a], dN[b]
            Ke[:, ra, cb] = np.sum(wt * (Na * (M0_u * Nb + M0_uz * dNb) + dNa * c3 * dNb), axis=1)
            Ke[:, ra, cb + 1] = np.sum(wt * Na * M0_h * Nb, axis=1)
            Ke[:, ra, cb + 2] = np.sum(
                wt * (Na * (M0_s * Nb + M0_sz * dNb) + dNa * (M1_s * Nb + M1_sz * dNb)), axis=1)
            Ke[:, ra + 1, cb] = np.sum(wt * Na * (I0_u * Nb + I0_uz * dNb), axis=1)
            Ke[:, ra + 1, cb + 1] = np.sum(wt * Na * (I0_h * Nb + adv * dNb), axis=1)
            Ke[:, ra + 2, cb + 1] = -np.sum(wt * Na * dNb, axis=1)
            Ke[:, ra + 2, cb + 2] = np.sum(wt * Na * Nb, axis=1)

    res[:] = 0.0
    ab[:, :] = 0.0
    base = 3 * np.arange(ne)
    for A in range(6):
        res[base + A] += Re[:, A]
        for B in range(6):
            ab[BAND + A - B, base + B] += Ke[:, A, B]

    if tip > 0.0:
        i0, i1 = n - 2, n - 1
        idzl = idz[-1]
        uzl = (u[i1] - u[i0]) * idzl
        szl = (s[i1] - s[i0]) * idzl
        sN = s[i1]
        Qn = 1.0 + sN * sN
        r3n = 1.0 / (Qn * np.sqrt(Qn))
        r5n = r3n / Qn
        r = 3 * i1
        res[r] -= c3 * uzl + gr * szl * r3n
        ab[BAND + r - 3 * i0, 3 * i0] += c3 * idzl
        ab[BAND, r] -= c3 * idzl
        ab[BAND + r - (3 * i0 + 2), 3 * i0 + 2] += gr * r3n * idzl
        ab[BAND - 2, r + 2] -= gr * r3n * idzl - 3.0 * gr * szl * sN * r5n
    return bad


def assemble_arrays(zeta, u, h, s, uo, ho, prm, qx, qw, fu, fh, backend=None):
    """Residual and banded Jacobian of the interior weak form.

    Returns ``(res, ab, bad)`` where ``bad`` is the first element index with
    a non-positive radius at a quadrature point, or -1.
    """
    n3 = 3 * zeta.size
    res = np.zeros(n3)
    ab = np.zeros((2 * BAND + 1, n3))
    args = (zeta, u, h, s, uo, ho, prm, qx, qw, fu, fh, res, ab)
    if resolve(backend) == "numba":
        bad = _assemble_numba(*args)
    else:
        bad = _assemble_numpy(*args)
    return res, ab, int(bad)


@njit
def _eta_sq_numba(zeta, h, s, L, qx, qw):
    ne = zeta.size - 1
    out = np.zeros(ne)
    for e in range(ne):
        dz = L * (zeta[e + 1] - zeta[e])
        hz = (h[e + 1] - h[e]) / dz
        acc = 0.0
        for q in range(qx.size):
            d = (1.0 - qx[q]) * s[e] + qx[q] * s[e + 1] - hz
            acc += qw[q] * d * d
        out[e] = acc * dz
    return out


def _eta_sq_numpy(zeta, h, s, L, qx, qw):
    dz = L * np.diff(zeta)
    hz = np.diff(h) / dz
    sq = (1.0 - qx)[None, :] * s[:-1, None] + qx[None, :] * s[1:, None]
    return dz * ((sq - hz[:, None]) ** 2 @ qw)


def element_eta_squared(zeta, h, s, L, qx, qw, backend=None):
    """Per-element ``int_K (s - dh/dz)^2 dz`` by Gauss quadrature."""
    args = (np.ascontiguousarray(zeta, dtype=float), np.ascontiguousarray(h, dtype=float),
            np.ascontiguousarray(s, dtype=float), float(L), qx, qw)
    if resolve(backend) == "numba":
        return _eta_sq_numba(*args)
    return _eta_sq_numpy(*args)


def gauss_unit(order: int):
    """Gauss-Legendre points and weights on ``[0, 1]`` (weights sum to 1)."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w
