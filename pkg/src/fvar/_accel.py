"""Hot numeric kernels: restart-based block FISTA and lagged VAR recursion.

Both kernels are written once in plain numpy and compiled with numba when it
is available.  Set the environment variable ``FVAR_NUMBA=0`` (or ``false`` /
``off``) before import to force the pure-numpy path; ``fvar.accel_backend()``
reports which path is active.  ``benchmarks/bench_kernels.py`` compares the
two paths on representative workloads.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("FVAR_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("0", "false", "off", "no")

# Status codes returned by the FISTA kernel.
FISTA_CONVERGED = 1
FISTA_MAX_ITER = 0
FISTA_DIVERGED = -1


def _fista_solve(gram, hmat, ynorm_sq, offsets, gamma, step, tol, max_iter, x0):
    """Minimize 0.5*||Y - B X||_F^2 + gamma * sum_k ||X_k||_F blockwise.

    Works on the Gram form: ``gram = B.T @ B``, ``hmat = B.T @ Y`` and
    ``ynorm_sq = ||Y||_F^2``, so the data matrix itself is never touched
    inside the iteration.  ``offsets`` delimits the row blocks of X.

    Per iteration: gradient step from the extrapolated point, blockwise
    group soft-threshold with threshold gamma*step, momentum update
    theta -> (1 + sqrt(1 + 4 theta^2))/2, extrapolation, and a restart
    whenever trace{(X - Xt_new)^T (Xt_new - Xt)} > 0, in which case the
    accumulated momentum is dropped (X reset to the previous iterate,
    theta reset to 1).

    Returns ``(x, trace, n_trace, status)`` where ``trace[:n_trace]`` holds
    the objective evaluated at each proximal point (entry 0 is the
    objective at ``x0``) and ``status`` is one of the FISTA_* codes.
    """
    r, q = hmat.shape
    nblocks = offsets.shape[0] - 1

    x = x0.copy()          # extrapolated iterate X^{(m)}
    xt = x0.copy()         # proximal point  Xt^{(m)}
    xt_new = np.empty((r, q))
    theta = 1.0
    tau = gamma * step

    trace = np.empty(max_iter + 1)
    g_prev = 0.5 * (ynorm_sq - 2.0 * np.sum(hmat * xt) + np.sum(xt * np.dot(gram, xt)))
    for k in range(nblocks):
        bn = 0.0
        for i in range(offsets[k], offsets[k + 1]):
            for j in range(q):
                bn += xt[i, j] * xt[i, j]
        g_prev += gamma * np.sqrt(bn)
    trace[0] = g_prev
    n_trace = 1
    status = FISTA_MAX_ITER
    skip_check = False
    pure_step = True  # x holds the last proximal point, no momentum mixed in

    for _ in range(max_iter):
        grad = np.dot(gram, x) - hmat
        z = x - step * grad

        penalty = 0.0
        for k in range(nblocks):
            lo = offsets[k]
            hi = offsets[k + 1]
            bn = 0.0
            for i in range(lo, hi):
                for j in range(q):
                    bn += z[i, j] * z[i, j]
            bn = np.sqrt(bn)
            if bn <= tau:
                for i in range(lo, hi):
                    for j in range(q):
                        xt_new[i, j] = 0.0
            else:
                scale = 1.0 - tau / bn
                for i in range(lo, hi):
                    for j in range(q):
                        xt_new[i, j] = scale * z[i, j]
                penalty += gamma * scale * bn

        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        omega = (theta - 1.0) / theta_new

        restart = 0.0
        for i in range(r):
            for j in range(q):
                restart += (x[i, j] - xt_new[i, j]) * (xt_new[i, j] - xt[i, j])

        g_cand = 0.5 * (ynorm_sq - 2.0 * np.sum(hmat * xt_new)
                        + np.sum(xt_new * np.dot(gram, xt_new))) + penalty

        restarted = restart > 0.0
        rejected = (not np.isfinite(g_cand)) or g_cand > g_prev
        if rejected and pure_step:
            # a momentum-free proximal step can only increase the objective
            # when the stepsize exceeds the inverse Lipschitz bound
            trace[n_trace] = g_cand
            n_trace += 1
            status = FISTA_DIVERGED
            break
        pure_step = rejected
        if rejected:
            # the restart test is only a proxy for descent; when the
            # candidate proximal point increases the objective, drop it and
            # restart the momentum from the previous proximal point
            x = xt.copy()
            theta = 1.0
            g = g_prev
        elif restarted:
            theta = 1.0
            # X^{(m+1)} = X^{(m)}: keep x as is.
            xt, xt_new = xt_new, xt
            g = g_cand
        else:
            theta = theta_new
            x = xt_new + omega * (xt_new - xt)
            xt, xt_new = xt_new, xt
            g = g_cand

        trace[n_trace] = g
        n_trace += 1

        rel = abs(g_prev - g) / max(abs(g_prev), 1e-12)
        g_prev = g
        # restarts re-derive the previous proximal point on the next pass,
        # so their zero objective change carries no convergence signal
        if rel < tol and not skip_check and not restarted and not rejected:
            status = FISTA_CONVERGED
            break
        skip_check = restarted or rejected

    return xt, trace, n_trace, status


def _var_lag_path(coefs, innov):
    """Iterate x_t = sum_h coefs[h-1] @ x_{t-h} + innov[t] from zero history.

    ``coefs`` has shape (L, d, d) and ``innov`` (nsteps, d); returns the
    (nsteps, d) path.
    """
    nsteps, d = innov.shape
    nlags = coefs.shape[0]
    out = np.zeros((nsteps, d))
    for t in range(nsteps):
        acc = innov[t].copy()
        for h in range(1, nlags + 1):
            if t - h >= 0:
                acc = acc + np.dot(coefs[h - 1], out[t - h])
        out[t] = acc
    return out


fista_solve_numpy = _fista_solve
var_lag_path_numpy = _var_lag_path

fista_solve_numba = None
var_lag_path_numba = None
USING_NUMBA = False

if NUMBA_REQUESTED:
    try:
        import numba

        fista_solve_numba = numba.njit(cache=True, nogil=True)(_fista_solve)
        var_lag_path_numba = numba.njit(cache=True, nogil=True)(_var_lag_path)
        USING_NUMBA = True
    except ImportError:
        pass

if USING_NUMBA:
    fista_solve = fista_solve_numba
    var_lag_path = var_lag_path_numba
else:
    fista_solve = fista_solve_numpy
    var_lag_path = var_lag_path_numpy


def accel_backend() -> str:
    """Name of the active kernel backend: 'numba' or 'numpy'."""
    return "numba" if USING_NUMBA else "numpy"
