"""Compiled inner loops for the enclosing-ellipse solvers.

Both solvers work on the dual of the minimum-area problem: a weight vector on
the input points whose weighted second moments define the ellipse.  Each
outer iteration takes one global Frank-Wolfe (or away) step, which admits the
most violated point or sheds the weakest support point, then polishes the
weights on the current support with equality-constrained Newton steps.  The
support of the optimum has at most a handful of points, so the polish is tiny
and the method stops on a two-sided optimality gap.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def convex_hull_indices(pts):
    """Andrew's monotone chain; returns hull vertex indices counter-clockwise.

    Collinear boundary points are dropped.
    """
    n = pts.shape[0]
    if n < 3:
        return np.arange(n)
    order = np.argsort(pts[:, 1], kind="mergesort")
    order = order[np.argsort(pts[order, 0], kind="mergesort")]
    hull = np.empty(2 * n, dtype=np.int64)
    k = 0
    for ii in range(n):
        i = order[ii]
        while k >= 2:
            o = hull[k - 2]
            a = hull[k - 1]
            cross = (pts[a, 0] - pts[o, 0]) * (pts[i, 1] - pts[o, 1]) - (
                pts[a, 1] - pts[o, 1]
            ) * (pts[i, 0] - pts[o, 0])
            if cross <= 0.0:
                k -= 1
            else:
                break
        hull[k] = i
        k += 1
    lower = k + 1
    for ii in range(n - 2, -1, -1):
        i = order[ii]
        while k >= lower:
            o = hull[k - 2]
            a = hull[k - 1]
            cross = (pts[a, 0] - pts[o, 0]) * (pts[i, 1] - pts[o, 1]) - (
                pts[a, 1] - pts[o, 1]
            ) * (pts[i, 0] - pts[o, 0])
            if cross <= 0.0:
                k -= 1
            else:
                break
        hull[k] = i
        k += 1
    return hull[: k - 1].copy()


@njit(cache=True)
def _initial_weights(pts):
    # mass on the coordinate extremes (Kumar-Yildirim style start)
    n = pts.shape[0]
    u = np.zeros(n)
    ix0 = np.argmin(pts[:, 0])
    ix1 = np.argmax(pts[:, 0])
    iy0 = np.argmin(pts[:, 1])
    iy1 = np.argmax(pts[:, 1])
    s0 = pts[:, 0] + pts[:, 1]
    s1 = pts[:, 0] - pts[:, 1]
    idx = np.array([ix0, ix1, iy0, iy1, np.argmin(s0), np.argmax(s0),
                    np.argmin(s1), np.argmax(s1)])
    for i in idx:
        u[i] = 1.0
    return u / u.sum()


# ---------------------------------------------------------------------------
# general orientation: lifted q = (x, y, 1), objective log det sum u q q^T


@njit(cache=True)
def _moments3(pts, u):
    q = np.zeros((3, 3))
    for i in range(pts.shape[0]):
        w = u[i]
        if w == 0.0:
            continue
        x = pts[i, 0]
        y = pts[i, 1]
        q[0, 0] += w * x * x
        q[0, 1] += w * x * y
        q[0, 2] += w * x
        q[1, 1] += w * y * y
        q[1, 2] += w * y
        q[2, 2] += w
    q[1, 0] = q[0, 1]
    q[2, 0] = q[0, 2]
    q[2, 1] = q[1, 2]
    return q


@njit(cache=True)
def _logdet_general(pts, u):
    d = np.linalg.det(_moments3(pts, u))
    return np.log(d) if d > 0.0 else -np.inf


@njit(cache=True)
def _kappa_general(pts, qi, i):
    x = pts[i, 0]
    y = pts[i, 1]
    return (qi[0, 0] * x * x + qi[1, 1] * y * y + qi[2, 2]
            + 2.0 * (qi[0, 1] * x * y + qi[0, 2] * x + qi[1, 2] * y))


@njit(cache=True)
def _grad_hess_general(pts, u, sup):
    m = sup.shape[0]
    qi = np.linalg.inv(_moments3(pts, u))
    g = np.empty(m)
    h = np.empty((m, m))
    for a in range(m):
        va = np.array([pts[sup[a], 0], pts[sup[a], 1], 1.0])
        wa = qi @ va
        for b in range(a, m):
            vb = np.array([pts[sup[b], 0], pts[sup[b], 1], 1.0])
            s = wa @ vb
            h[a, b] = -s * s
            h[b, a] = -s * s
        g[a] = wa @ va
    return g, h


# ---------------------------------------------------------------------------
# axis-aligned: objective log Var_u(x) + log Var_u(y)


@njit(cache=True)
def _var2(pts, u):
    mx = 0.0
    my = 0.0
    sx = 0.0
    sy = 0.0
    for i in range(pts.shape[0]):
        w = u[i]
        if w == 0.0:
            continue
        mx += w * pts[i, 0]
        my += w * pts[i, 1]
        sx += w * pts[i, 0] ** 2
        sy += w * pts[i, 1] ** 2
    return mx, my, sx - mx * mx, sy - my * my


@njit(cache=True)
def _logdet_diag(pts, u):
    _, _, vx, vy = _var2(pts, u)
    if vx <= 0.0 or vy <= 0.0:
        return -np.inf
    return np.log(vx) + np.log(vy)


@njit(cache=True)
def _grad_hess_diag(pts, u, sup):
    m = sup.shape[0]
    mx, my, vx, vy = _var2(pts, u)
    g = np.empty(m)
    h = np.empty((m, m))
    ax = np.empty(m)
    ay = np.empty(m)
    for a in range(m):
        x = pts[sup[a], 0]
        y = pts[sup[a], 1]
        ax[a] = (x * x - 2.0 * mx * x) / vx
        ay[a] = (y * y - 2.0 * my * y) / vy
        g[a] = ax[a] + ay[a]
    for a in range(m):
        xa = pts[sup[a], 0]
        ya = pts[sup[a], 1]
        for b in range(a, m):
            xb = pts[sup[b], 0]
            yb = pts[sup[b], 1]
            v = (-2.0 * xa * xb / vx - ax[a] * ax[b]
                 - 2.0 * ya * yb / vy - ay[a] * ay[b])
            h[a, b] = v
            h[b, a] = v
    return g, h


# ---------------------------------------------------------------------------
# shared driver


@njit(cache=True)
def _objective(pts, u, diag):
    return _logdet_diag(pts, u) if diag else _logdet_general(pts, u)


@njit(cache=True)
def _kappas(pts, u, diag, out):
    n = pts.shape[0]
    if diag:
        mx, my, vx, vy = _var2(pts, u)
        for i in range(n):
            out[i] = (pts[i, 0] - mx) ** 2 / vx + (pts[i, 1] - my) ** 2 / vy
    else:
        qi = np.linalg.inv(_moments3(pts, u))
        for i in range(n):
            out[i] = _kappa_general(pts, qi, i)


@njit(cache=True)
def _line_search(pts, u, d, diag, amax):
    # backtracking on the concave objective along u + alpha d
    f0 = _objective(pts, u, diag)
    alpha = amax
    trial = u.copy()
    for _ in range(60):
        for i in range(u.shape[0]):
            trial[i] = u[i] + alpha * d[i]
        f1 = _objective(pts, trial, diag)
        if f1 >= f0:
            return alpha, trial
        alpha *= 0.5
    return 0.0, u.copy()


@njit(cache=True)
def _newton_polish(pts, u, diag, max_steps):
    n = pts.shape[0]
    for _ in range(max_steps):
        cnt = 0
        for i in range(n):
            if u[i] > 0.0:
                cnt += 1
        sup = np.empty(cnt, dtype=np.int64)
        k = 0
        for i in range(n):
            if u[i] > 0.0:
                sup[k] = i
                k += 1
        if cnt < 2:
            return u
        if diag:
            g, h = _grad_hess_diag(pts, u, sup)
        else:
            g, h = _grad_hess_general(pts, u, sup)
        # KKT system for max f s.t. sum(du) = 0
        kkt = np.zeros((cnt + 1, cnt + 1))
        rhs = np.zeros(cnt + 1)
        scale = 0.0
        for a in range(cnt):
            scale = max(scale, abs(h[a, a]))
        for a in range(cnt):
            for b in range(cnt):
                kkt[a, b] = h[a, b]
            kkt[a, a] -= 1e-12 * scale
            kkt[a, cnt] = 1.0
            kkt[cnt, a] = 1.0
            rhs[a] = -g[a]
        sol = np.linalg.solve(kkt, rhs)
        du = sol[:cnt]
        dec = -(du @ (h @ du))
        if not np.isfinite(dec):
            return u
        if dec < 1e-24:
            return u
        # largest feasible step keeping weights non-negative
        amax = 1.0
        blocking = -1
        for a in range(cnt):
            if du[a] < 0.0:
                r = -u[sup[a]] / du[a]
                if r < amax:
                    amax = r
                    blocking = a
        d = np.zeros(n)
        for a in range(cnt):
            d[sup[a]] = du[a]
        alpha, nu = _line_search(pts, u, d, diag, amax)
        if alpha == 0.0:
            return u
        if blocking >= 0 and alpha == amax:
            nu[sup[blocking]] = 0.0
        for i in range(n):
            if nu[i] < 1e-15:
                nu[i] = 0.0
        u = nu / nu.sum()
    return u


@njit(cache=True)
def _solve(pts, tol, max_iter, diag):
    n = pts.shape[0]
    dim = 2.0 if diag else 3.0
    u = _initial_weights(pts)
    kappa = np.empty(n)
    gap = np.inf
    it = 0
    for it in range(max_iter):
        _kappas(pts, u, diag, kappa)
        kmax = -1.0
        jmax = 0
        kmin = np.inf
        jmin = -1
        for i in range(n):
            k = kappa[i]
            if k > kmax:
                kmax = k
                jmax = i
            if u[i] > 0.0 and k < kmin:
                kmin = k
                jmin = i
        eps_plus = kmax / dim - 1.0
        eps_minus = 1.0 - kmin / dim
        gap = max(eps_plus, eps_minus)
        if gap <= tol:
            break
        d = -u.copy()
        if eps_plus >= eps_minus:
            d[jmax] += 1.0
            amax = 1.0 - 1e-12
        else:
            # away step: move mass off jmin
            d = u.copy()
            d[jmin] -= 1.0
            amax = u[jmin] / (1.0 - u[jmin]) if u[jmin] < 1.0 else 0.0
        alpha, nu = _line_search(pts, u, d, diag, amax)
        if alpha > 0.0:
            if eps_plus < eps_minus and alpha == amax:
                nu[jmin] = 0.0
            u = nu / nu.sum()
        u = _newton_polish(pts, u, diag, 50)
    return u, it + 1, gap


@njit(cache=True)
def mvee_weights(pts, tol, max_iter):
    """Dual weights of the minimum-area enclosing ellipse (any orientation).

    Works in the lifted space q = (x, y, 1), where the problem becomes a
    centred 3-D minimum-volume ellipsoid.  Returns (weights, iterations, gap).
    """
    return _solve(pts, tol, max_iter, False)


@njit(cache=True)
def mvee_diag_weights(pts, tol, max_iter):
    """Dual weights of the minimum-area axis-aligned enclosing ellipse.

    With the shape matrix restricted to a diagonal, the dual objective is
    log Var_u(x) + log Var_u(y); optimality holds when every point satisfies
    (x - m_x)^2 / V_x + (y - m_y)^2 / V_y <= 2 with equality on the support.
    """
    return _solve(pts, tol, max_iter, True)
