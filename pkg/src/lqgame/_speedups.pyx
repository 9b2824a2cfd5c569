# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the two-player, two-state, scalar-input shape.

Semantics match ``_kernels_py`` exactly (same reduced Lyapunov system,
update order, and status codes); see that module for documentation.
"""

from libc.math cimport fabs, sqrt, INFINITY

import numpy as np

cdef double MARGIN = 1e-9

backend_name = "c"


cdef inline double _rho2(double* F) noexcept nogil:
    cdef double tr = F[0] + F[3]
    cdef double det = F[0] * F[3] - F[1] * F[2]
    cdef double disc = tr * tr - 4.0 * det
    cdef double s, l1, l2
    if disc >= 0.0:
        s = sqrt(disc)
        l1 = fabs(0.5 * (tr + s))
        l2 = fabs(0.5 * (tr - s))
        return l1 if l1 > l2 else l2
    return sqrt(det)


cdef inline int _dlyap2(double* F, double* W, double* X) noexcept nogil:
    """X = F X F' + W reduced to 3 unknowns; 3x3 Gauss elimination with
    partial pivoting. Returns 0 on success, 1 if singular."""
    cdef double M[3][4]
    cdef double f11 = F[0], f12 = F[1], f21 = F[2], f22 = F[3]
    cdef int i, j, jj, p
    cdef double piv, fac, tmp

    M[0][0] = f11 * f11 - 1.0; M[0][1] = 2.0 * f11 * f12; M[0][2] = f12 * f12
    M[1][0] = f11 * f21; M[1][1] = f11 * f22 + f12 * f21 - 1.0; M[1][2] = f12 * f22
    M[2][0] = f21 * f21; M[2][1] = 2.0 * f21 * f22; M[2][2] = f22 * f22 - 1.0
    M[0][3] = -W[0]
    M[1][3] = -W[1]
    M[2][3] = -W[3]

    for i in range(3):
        p = i
        for j in range(i + 1, 3):
            if fabs(M[j][i]) > fabs(M[p][i]):
                p = j
        if fabs(M[p][i]) < 1e-300:
            return 1
        if p != i:
            for j in range(4):
                tmp = M[i][j]; M[i][j] = M[p][j]; M[p][j] = tmp
        piv = M[i][i]
        for j in range(i + 1, 3):
            fac = M[j][i] / piv
            M[j][i] = 0.0
            for jj in range(i + 1, 4):
                M[j][jj] -= fac * M[i][jj]
    cdef double x2 = M[2][3] / M[2][2]
    cdef double x1 = (M[1][3] - M[1][2] * x2) / M[1][1]
    cdef double x0 = (M[0][3] - M[0][1] * x1 - M[0][2] * x2) / M[0][0]
    X[0] = x0; X[1] = x1; X[2] = x1; X[3] = x2
    return 0


cdef int _omega2(double* A, double* B1, double* B2,
                 double* Q1, double* Q2, double r1, double r2,
                 double* S0, double* k,
                 double* w, double* f1, double* f2) noexcept nogil:
    """Gradient field and per-player costs. Returns 0 ok, 1 failure."""
    cdef double Abar[4]
    cdef double AbarT[4]
    cdef double Sig[4]
    cdef double P[4]
    cdef double W[4]
    cdef double bb0, bb1, r, k0, k1, t0, t1, g0, g1, denom_unused
    cdef int i

    Abar[0] = A[0] - B1[0] * k[0] - B2[0] * k[2]
    Abar[1] = A[1] - B1[0] * k[1] - B2[0] * k[3]
    Abar[2] = A[2] - B1[1] * k[0] - B2[1] * k[2]
    Abar[3] = A[3] - B1[1] * k[1] - B2[1] * k[3]
    if _rho2(Abar) >= 1.0 - MARGIN:
        return 1
    if _dlyap2(Abar, S0, Sig):
        return 1
    AbarT[0] = Abar[0]; AbarT[1] = Abar[2]
    AbarT[2] = Abar[1]; AbarT[3] = Abar[3]
    for i in range(2):
        if i == 0:
            bb0 = B1[0]; bb1 = B1[1]; r = r1
            k0 = k[0]; k1 = k[1]
        else:
            bb0 = B2[0]; bb1 = B2[1]; r = r2
            k0 = k[2]; k1 = k[3]
        W[0] = r * k0 * k0 + (Q1[0] if i == 0 else Q2[0])
        W[1] = r * k0 * k1 + (Q1[1] if i == 0 else Q2[1])
        W[2] = W[1]
        W[3] = r * k1 * k1 + (Q1[3] if i == 0 else Q2[3])
        if _dlyap2(AbarT, W, P):
            return 1
        # b'P
        t0 = bb0 * P[0] + bb1 * P[2]
        t1 = bb0 * P[1] + bb1 * P[3]
        # row = r*k - (b'P) Abar
        g0 = r * k0 - (t0 * Abar[0] + t1 * Abar[2])
        g1 = r * k1 - (t0 * Abar[1] + t1 * Abar[3])
        # D = 2 * row @ Sig
        w[2 * i] = 2.0 * (g0 * Sig[0] + g1 * Sig[2])
        w[2 * i + 1] = 2.0 * (g0 * Sig[1] + g1 * Sig[3])
        if i == 0:
            f1[0] = P[0] * S0[0] + 2.0 * P[1] * S0[1] + P[3] * S0[3]
        else:
            f2[0] = P[0] * S0[0] + 2.0 * P[1] * S0[1] + P[3] * S0[3]
    return 0


cdef inline void _load2(const double[:, :] src, double* dst) noexcept:
    dst[0] = src[0, 0]; dst[1] = src[0, 1]
    dst[2] = src[1, 0]; dst[3] = src[1, 1]


cdef inline void _loadB(const double[:, :] src, double* dst) noexcept:
    dst[0] = src[0, 0]; dst[1] = src[1, 0]


def omega2(A, B1, B2, Q1, Q2, R1, R2, S0, k):
    cdef double cA[4]
    cdef double cB1[2]
    cdef double cB2[2]
    cdef double cQ1[4]
    cdef double cQ2[4]
    cdef double cS0[4]
    cdef double ck[4]
    cdef double w[4]
    cdef double f1 = 0.0, f2 = 0.0
    cdef double[:, :] mv
    cdef double[:] kv
    _load2(A, cA); _loadB(B1, cB1); _loadB(B2, cB2)
    _load2(Q1, cQ1); _load2(Q2, cQ2); _load2(S0, cS0)
    kv = np.ascontiguousarray(k, dtype=np.float64)
    ck[0] = kv[0]; ck[1] = kv[1]; ck[2] = kv[2]; ck[3] = kv[3]
    cdef double r1 = R1[0, 0], r2 = R2[0, 0]
    if _omega2(cA, cB1, cB2, cQ1, cQ2, r1, r2, cS0, ck, w, &f1, &f2):
        return False, np.zeros(4), 0.0, 0.0
    return True, np.array([w[0], w[1], w[2], w[3]]), f1, f2


cdef int _gs_solve2(double* A, double* B1, double* B2,
                    double* Q1, double* Q2, double r1, double r2,
                    double* S0, double* k, double tol, long max_iter,
                    long* sweeps, double* grad_norm, double* last_delta) noexcept nogil:
    cdef double Abar[4]
    cdef double AbarT[4]
    cdef double P[4]
    cdef double W[4]
    cdef double w4[4]
    cdef double f1, f2, delta, bb0, bb1, r, k0, k1
    cdef double t0, t1, a0, a1, m00, m01, m10, m11, denom, kn0, kn1, d
    cdef double gn
    cdef long sweep
    cdef int i

    delta = INFINITY
    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for i in range(2):
            Abar[0] = A[0] - B1[0] * k[0] - B2[0] * k[2]
            Abar[1] = A[1] - B1[0] * k[1] - B2[0] * k[3]
            Abar[2] = A[2] - B1[1] * k[0] - B2[1] * k[2]
            Abar[3] = A[3] - B1[1] * k[1] - B2[1] * k[3]
            if _rho2(Abar) >= 1.0 - MARGIN:
                sweeps[0] = sweep
                grad_norm[0] = INFINITY
                last_delta[0] = delta
                return 2
            if i == 0:
                bb0 = B1[0]; bb1 = B1[1]; r = r1; k0 = k[0]; k1 = k[1]
                W[0] = r * k0 * k0 + Q1[0]
                W[1] = r * k0 * k1 + Q1[1]
                W[3] = r * k1 * k1 + Q1[3]
            else:
                bb0 = B2[0]; bb1 = B2[1]; r = r2; k0 = k[2]; k1 = k[3]
                W[0] = r * k0 * k0 + Q2[0]
                W[1] = r * k0 * k1 + Q2[1]
                W[3] = r * k1 * k1 + Q2[3]
            W[2] = W[1]
            AbarT[0] = Abar[0]; AbarT[1] = Abar[2]
            AbarT[2] = Abar[1]; AbarT[3] = Abar[3]
            if _dlyap2(AbarT, W, P):
                sweeps[0] = sweep
                grad_norm[0] = INFINITY
                last_delta[0] = delta
                return 2
            # dynamics seen by player i: Abar + B_i K_i
            m00 = Abar[0] + bb0 * k0; m01 = Abar[1] + bb0 * k1
            m10 = Abar[2] + bb1 * k0; m11 = Abar[3] + bb1 * k1
            t0 = bb0 * P[0] + bb1 * P[2]
            t1 = bb0 * P[1] + bb1 * P[3]
            denom = r + bb0 * t0 + bb1 * t1
            kn0 = (t0 * m00 + t1 * m10) / denom
            kn1 = (t0 * m01 + t1 * m11) / denom
            d = fabs(kn0 - k0)
            if fabs(kn1 - k1) > d:
                d = fabs(kn1 - k1)
            if d > delta:
                delta = d
            if i == 0:
                k[0] = kn0; k[1] = kn1
            else:
                k[2] = kn0; k[3] = kn1
        if delta < tol:
            if _omega2(A, B1, B2, Q1, Q2, r1, r2, S0, k, w4, &f1, &f2) == 0:
                gn = fabs(w4[0])
                if fabs(w4[1]) > gn: gn = fabs(w4[1])
                if fabs(w4[2]) > gn: gn = fabs(w4[2])
                if fabs(w4[3]) > gn: gn = fabs(w4[3])
                if gn < tol:
                    sweeps[0] = sweep
                    grad_norm[0] = gn
                    last_delta[0] = delta
                    return 0
    sweeps[0] = max_iter
    last_delta[0] = delta
    if _omega2(A, B1, B2, Q1, Q2, r1, r2, S0, k, w4, &f1, &f2) == 0:
        gn = fabs(w4[0])
        if fabs(w4[1]) > gn: gn = fabs(w4[1])
        if fabs(w4[2]) > gn: gn = fabs(w4[2])
        if fabs(w4[3]) > gn: gn = fabs(w4[3])
        grad_norm[0] = gn
    else:
        grad_norm[0] = INFINITY
    return 1


def gs_solve2(A, B1, B2, Q1, Q2, R1, R2, S0, k0, tol, max_iter):
    cdef double cA[4]
    cdef double cB1[2]
    cdef double cB2[2]
    cdef double cQ1[4]
    cdef double cQ2[4]
    cdef double cS0[4]
    cdef double ck[4]
    cdef double[:] kv
    cdef long sweeps = 0
    cdef double gn = 0.0, ld = 0.0
    cdef int status
    _load2(A, cA); _loadB(B1, cB1); _loadB(B2, cB2)
    _load2(Q1, cQ1); _load2(Q2, cQ2); _load2(S0, cS0)
    kv = np.ascontiguousarray(k0, dtype=np.float64)
    ck[0] = kv[0]; ck[1] = kv[1]; ck[2] = kv[2]; ck[3] = kv[3]
    status = _gs_solve2(cA, cB1, cB2, cQ1, cQ2, R1[0, 0], R2[0, 0], cS0,
                        ck, tol, max_iter, &sweeps, &gn, &ld)
    return (status, sweeps, np.array([ck[0], ck[1], ck[2], ck[3]]),
            (gn if gn != INFINITY else np.inf), ld)


def dare2(A, B, Q, R, tol, long max_iter):
    cdef double cA[4]
    cdef double cB[2]
    cdef double cQ[4]
    cdef double P[4]
    cdef double Pn[4]
    cdef double r, s, l0, l1, t0, t1, d, dd
    cdef long it
    _load2(A, cA); _loadB(B, cB); _load2(Q, cQ)
    r = R[0, 0]
    P[0] = cQ[0]; P[1] = cQ[1]; P[2] = cQ[2]; P[3] = cQ[3]
    cdef double ctol = tol
    for it in range(1, max_iter + 1):
        # b'P and closed-form Riccati map
        t0 = cB[0] * P[0] + cB[1] * P[2]
        t1 = cB[0] * P[1] + cB[1] * P[3]
        s = r + cB[0] * t0 + cB[1] * t1
        l0 = t0 * cA[0] + t1 * cA[2]
        l1 = t0 * cA[1] + t1 * cA[3]
        # A'PA
        Pn[0] = cA[0] * (P[0] * cA[0] + P[1] * cA[2]) + cA[2] * (P[2] * cA[0] + P[3] * cA[2])
        Pn[1] = cA[0] * (P[0] * cA[1] + P[1] * cA[3]) + cA[2] * (P[2] * cA[1] + P[3] * cA[3])
        Pn[2] = cA[1] * (P[0] * cA[0] + P[1] * cA[2]) + cA[3] * (P[2] * cA[0] + P[3] * cA[2])
        Pn[3] = cA[1] * (P[0] * cA[1] + P[1] * cA[3]) + cA[3] * (P[2] * cA[1] + P[3] * cA[3])
        Pn[0] += cQ[0] - l0 * l0 / s
        Pn[1] += cQ[1] - l0 * l1 / s
        Pn[2] += cQ[2] - l1 * l0 / s
        Pn[3] += cQ[3] - l1 * l1 / s
        # symmetrize
        d = 0.5 * (Pn[1] + Pn[2])
        Pn[1] = d; Pn[2] = d
        dd = fabs(Pn[0] - P[0])
        if fabs(Pn[1] - P[1]) > dd: dd = fabs(Pn[1] - P[1])
        if fabs(Pn[3] - P[3]) > dd: dd = fabs(Pn[3] - P[3])
        P[0] = Pn[0]; P[1] = Pn[1]; P[2] = Pn[2]; P[3] = Pn[3]
        # step test relative to the iterate scale (matches _kernels_py)
        d = fabs(P[0])
        if fabs(P[1]) > d: d = fabs(P[1])
        if fabs(P[3]) > d: d = fabs(P[3])
        if dd < ctol * (1.0 + d):
            t0 = cB[0] * P[0] + cB[1] * P[2]
            t1 = cB[0] * P[1] + cB[1] * P[3]
            s = r + cB[0] * t0 + cB[1] * t1
            return (True,
                    np.array([[P[0], P[1]], [P[2], P[3]]]),
                    np.array([[(t0 * cA[0] + t1 * cA[2]) / s,
                               (t0 * cA[1] + t1 * cA[3]) / s]]),
                    it)
    return (False, np.array([[P[0], P[1]], [P[2], P[3]]]),
            np.zeros((1, 2)), max_iter)


def simulate2(A, B1, B2, Q1, Q2, R1, R2, S0, k0, double g1, double g2,
              long max_iters, long record_every, double tol_crit,
              long[:] rec_it, double[:, :] rec_k, double[:, :] rec_f,
              double[:] rec_g):
    cdef double cA[4]
    cdef double cB1[2]
    cdef double cB2[2]
    cdef double cQ1[4]
    cdef double cQ2[4]
    cdef double cS0[4]
    cdef double k[4]
    cdef double prev[4]
    cdef double w[4]
    cdef double[:] kv
    cdef double r1 = R1[0, 0], r2 = R2[0, 0]
    cdef double f1 = 0.0, f2 = 0.0, gn, prev_f1 = 0.0, prev_f2 = 0.0, prev_gn = 0.0
    cdef long n = 0, n_rec = 0
    cdef bint recorded, prev_recorded = False
    cdef int status, j
    _load2(A, cA); _loadB(B1, cB1); _loadB(B2, cB2)
    _load2(Q1, cQ1); _load2(Q2, cQ2); _load2(S0, cS0)
    kv = np.ascontiguousarray(k0, dtype=np.float64)
    for j in range(4):
        k[j] = kv[j]
        prev[j] = kv[j]
    while True:
        if _omega2(cA, cB1, cB2, cQ1, cQ2, r1, r2, cS0, k, w, &f1, &f2):
            if n > 0 and not prev_recorded:
                rec_it[n_rec] = n - 1
                for j in range(4):
                    rec_k[n_rec, j] = prev[j]
                rec_f[n_rec, 0] = prev_f1
                rec_f[n_rec, 1] = prev_f2
                rec_g[n_rec] = prev_gn
                n_rec += 1
            return 2, n_rec, n, np.array([prev[0], prev[1], prev[2], prev[3]])
        gn = fabs(w[0])
        if fabs(w[1]) > gn: gn = fabs(w[1])
        if fabs(w[2]) > gn: gn = fabs(w[2])
        if fabs(w[3]) > gn: gn = fabs(w[3])
        recorded = False
        if n % record_every == 0:
            rec_it[n_rec] = n
            for j in range(4):
                rec_k[n_rec, j] = k[j]
            rec_f[n_rec, 0] = f1
            rec_f[n_rec, 1] = f2
            rec_g[n_rec] = gn
            n_rec += 1
            recorded = True
        if gn < tol_crit:
            status = 1
        elif n >= max_iters:
            status = 0
        else:
            for j in range(4):
                prev[j] = k[j]
            prev_f1 = f1; prev_f2 = f2; prev_gn = gn
            prev_recorded = recorded
            k[0] -= g1 * w[0]
            k[1] -= g1 * w[1]
            k[2] -= g2 * w[2]
            k[3] -= g2 * w[3]
            n += 1
            continue
        if not recorded:
            rec_it[n_rec] = n
            for j in range(4):
                rec_k[n_rec, j] = k[j]
            rec_f[n_rec, 0] = f1
            rec_f[n_rec, 1] = f2
            rec_g[n_rec] = gn
            n_rec += 1
        return status, n_rec, n, np.array([k[0], k[1], k[2], k[3]])
