"""Pure-python reference kernels for the hot loops.

These mirror the compiled kernels in ``_speedups.pyx`` exactly (same
reduced 3x3 Lyapunov solve, same update order, same status codes) and
serve as the fallback backend when the extension is unavailable. All
kernels are specialized to the two-player, two-state, scalar-input shape
that dominates the experiment workload; general shapes take the plain
numpy paths in the library modules instead.

Status codes shared with the compiled kernels:
    0 converged / completed, 1 iteration budget exhausted, 2 destabilized.
"""

import numpy as np

MARGIN = 1e-9


def _rho2(F):
    # closed-form spectral radius of a 2x2 matrix
    tr = F[0, 0] + F[1, 1]
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        s = np.sqrt(disc)
        return max(abs(0.5 * (tr + s)), abs(0.5 * (tr - s)))
    return np.sqrt(det)


def _dlyap2(F, W):
    """X = F X F' + W for symmetric X, reduced to the 3 free entries.

    Returns None if the 3x3 system is singular.
    """
    f11, f12 = F[0, 0], F[0, 1]
    f21, f22 = F[1, 0], F[1, 1]
    M = np.array([
        [f11 * f11 - 1.0, 2.0 * f11 * f12, f12 * f12],
        [f11 * f21, f11 * f22 + f12 * f21 - 1.0, f12 * f22],
        [f21 * f21, 2.0 * f21 * f22, f22 * f22 - 1.0],
    ])
    rhs = -np.array([W[0, 0], W[0, 1], W[1, 1]])
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    return np.array([[x[0], x[1]], [x[1], x[2]]])


def omega2(A, B1, B2, Q1, Q2, R1, R2, S0, k):
    """Gradient field for the specialized shape at stacked gains k[4].

    Returns (ok, w[4], f1, f2) with ok False when the closed loop is
    outside the stability margin (w, f are then zeros).
    """
    K1 = k[:2].reshape(1, 2)
    K2 = k[2:].reshape(1, 2)
    Abar = A - B1 @ K1 - B2 @ K2
    if _rho2(Abar) >= 1.0 - MARGIN:
        return False, np.zeros(4), 0.0, 0.0
    Sig = _dlyap2(Abar, S0)
    if Sig is None:
        return False, np.zeros(4), 0.0, 0.0
    w = np.empty(4)
    fs = [0.0, 0.0]
    for i, (B, Q, R, K) in enumerate(((B1, Q1, R1, K1), (B2, Q2, R2, K2))):
        P = _dlyap2(Abar.T, K.T @ R @ K + Q)
        if P is None:
            return False, np.zeros(4), 0.0, 0.0
        w[2 * i:2 * i + 2] = (2.0 * (R @ K - B.T @ P @ Abar) @ Sig).ravel()
        fs[i] = P[0, 0] * S0[0, 0] + 2.0 * P[0, 1] * S0[0, 1] + P[1, 1] * S0[1, 1]
    return True, w, fs[0], fs[1]


def gs_solve2(A, B1, B2, Q1, Q2, R1, R2, S0, k0, tol, max_iter):
    """Gauss-Seidel Lyapunov iterations, specialized shape.

    Convergence requires both the gain increment and the gradient norm
    below tol. Returns (status, sweeps, k, grad_norm, last_delta).
    """
    k = np.array(k0, dtype=float)
    Bs = (B1, B2)
    Qs = (Q1, Q2)
    Rs = (R1, R2)
    delta = np.inf
    for sweep in range(1, max_iter + 1):
        delta = 0.0
        for i in range(2):
            K1 = k[:2].reshape(1, 2)
            K2 = k[2:].reshape(1, 2)
            Abar = A - B1 @ K1 - B2 @ K2
            if _rho2(Abar) >= 1.0 - MARGIN:
                return 2, sweep, k, np.inf, delta
            Ki = k[2 * i:2 * i + 2].reshape(1, 2)
            P = _dlyap2(Abar.T, Ki.T @ Rs[i] @ Ki + Qs[i])
            if P is None:
                return 2, sweep, k, np.inf, delta
            Ai = Abar + Bs[i] @ Ki  # dynamics seen by player i
            denom = float(Rs[i][0, 0] + (Bs[i].T @ P @ Bs[i])[0, 0])
            Kn = (Bs[i].T @ P @ Ai).ravel() / denom
            delta = max(delta, float(np.max(np.abs(Kn - k[2 * i:2 * i + 2]))))
            k[2 * i:2 * i + 2] = Kn
        if delta < tol:
            ok, w, _, _ = omega2(A, B1, B2, Q1, Q2, R1, R2, S0, k)
            gn = float(np.max(np.abs(w))) if ok else np.inf
            if ok and gn < tol:
                return 0, sweep, k, gn, delta
    ok, w, _, _ = omega2(A, B1, B2, Q1, Q2, R1, R2, S0, k)
    gn = float(np.max(np.abs(w))) if ok else np.inf
    return 1, max_iter, k, gn, delta


def dare2(A, B, Q, R, tol, max_iter):
    """Riccati fixed-point iteration from P = Q, specialized shape.

    Returns (ok, P, K, iters).
    """
    P = Q.copy()
    r = float(R[0, 0])
    for it in range(1, max_iter + 1):
        BtP = B.T @ P
        s = r + float((BtP @ B)[0, 0])
        L = BtP @ A  # 1x2
        Pn = A.T @ P @ A - (L.T @ L) / s + Q
        Pn = 0.5 * (Pn + Pn.T)
        d = float(np.max(np.abs(Pn - P)))
        P = Pn
        # step test is relative to the iterate scale: an absolute cutoff
        # is unreachable for large P (float noise exceeds it)
        if d < tol * (1.0 + float(np.max(np.abs(P)))):
            BtP = B.T @ P
            s = r + float((BtP @ B)[0, 0])
            K = (BtP @ A) / s
            return True, P, K, it
    return False, P, np.zeros((1, 2)), max_iter


def simulate2(A, B1, B2, Q1, Q2, R1, R2, S0, k0, g1, g2,
              max_iters, record_every, tol_crit,
              rec_it, rec_k, rec_f, rec_g):
    """Simultaneous gradient play, specialized shape.

    Records iterate n whenever n % record_every == 0, plus the terminal
    stabilizing iterate. The destabilizing iterate itself is never
    recorded. Returns (status, n_rec, n_done, k_final) where k_final is
    the last stabilizing iterate.
    """
    k = np.array(k0, dtype=float)
    prev = k.copy()
    prev_f1 = prev_f2 = prev_gn = 0.0
    prev_recorded = False
    n_rec = 0
    n = 0
    while True:
        ok, w, f1, f2 = omega2(A, B1, B2, Q1, Q2, R1, R2, S0, k)
        if not ok:
            # iterate n destabilized; close the record at n-1
            if n > 0 and not prev_recorded:
                rec_it[n_rec] = n - 1
                rec_k[n_rec] = prev
                rec_f[n_rec, 0] = prev_f1
                rec_f[n_rec, 1] = prev_f2
                rec_g[n_rec] = prev_gn
                n_rec += 1
            return 2, n_rec, n, prev
        gn = float(np.max(np.abs(w)))
        recorded = False
        if n % record_every == 0:
            rec_it[n_rec] = n
            rec_k[n_rec] = k
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
            prev = k.copy()
            prev_f1, prev_f2, prev_gn = f1, f2, gn
            prev_recorded = recorded
            k = k - np.array([g1, g1, g2, g2]) * w
            n += 1
            continue
        if not recorded:  # terminal iterate always lands in the record
            rec_it[n_rec] = n
            rec_k[n_rec] = k
            rec_f[n_rec, 0] = f1
            rec_f[n_rec, 1] = f2
            rec_g[n_rec] = gn
            n_rec += 1
        return status, n_rec, n, k
