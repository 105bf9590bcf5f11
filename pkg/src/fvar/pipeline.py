"""End-to-end orchestration: per-variable FPCA, row fits, path sweeps.

The p per-variable FPCA fits and the p row problems are independent, so both
parallelize over a thread pool with read-only shared state; results are
keyed by variable index, making the output independent of the schedule.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec
from .fpca import KLModel, cross_validate, fit_regularized_fpca
from .panel import CurvePanel
from .solver import (DesignSet, FitResult, KernelEstimate, build_design,
                     default_gamma_grid, fit_row, recover_kernels,
                     regularization_path, select_gamma)


@dataclass
class PanelFPCA:
    kl_models: list
    selections: list  # per variable (q, eta)


def _map_indexed(fn, count: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def fpca_panel(panel: CurvePanel, basis: BasisSpec, q_grid, eta_grid,
               folds: int = 5, seed: int = 0, threads: int = 1,
               eigen_floor: float = 1e-2) -> PanelFPCA:
    """Fit regularized FPCA to every variable, cross-validating (q, eta)
    whenever the grids leave a choice.

    Components whose eigenvalue falls below ``eigen_floor`` times the leading
    one are dropped: the downstream regression standardizes each score block,
    which amplifies a direction by 1 / sqrt(lambda_l / lambda_1), so keeping
    near-degenerate components injects unbounded noise into the recovered
    kernels.
    """
    q_grid = [int(q) for q in q_grid]
    eta_grid = [float(e) for e in eta_grid]

    def one(j: int):
        curves = panel.values[:, j, :]
        if len(q_grid) == 1 and len(eta_grid) == 1:
            q, eta = q_grid[0], eta_grid[0]
        else:
            cv = cross_validate(curves, panel.grid, basis, q_grid, eta_grid,
                                folds=folds, seed=seed * 100003 + j)
            q, eta = cv.q, cv.eta
        model = fit_regularized_fpca(curves, panel.grid, basis, q, eta)
        if eigen_floor > 0 and model.q > 1:
            keep = int(np.sum(model.eigenvalues >=
                              eigen_floor * model.eigenvalues[0]))
            if keep < model.q:
                model = truncate_models([model], keep)[0]
        return model, (model.q, eta)

    results = _map_indexed(one, panel.p, threads)
    return PanelFPCA(kl_models=[r[0] for r in results],
                     selections=[r[1] for r in results])


def truncate_models(kl_models, q: int) -> list:
    """Keep only the leading q components of each variable."""
    out = []
    for m in kl_models:
        keep = min(q, m.q)
        out.append(KLModel(basis=m.basis, mean_coeffs=m.mean_coeffs,
                           eigenvalues=m.eigenvalues[:keep],
                           eigen_coeffs=m.eigen_coeffs[:keep],
                           scores=m.scores[:, :keep], smoothing=m.smoothing,
                           truncated=m.truncated))
    return out


def fit_rows(design: DesignSet, gamma: float | None = None,
             criterion: str = "bic", n_gammas: int = 50,
             min_ratio: float = 1e-3, tol: float = 1e-8,
             max_iter: int = 10000, threads: int = 1):
    """Fit every row, either at a fixed gamma or at the IC-selected one.

    Returns (fits, ic_rows) where ic_rows holds one (j, gamma, rss, df, aic,
    bic) record per evaluated path point.
    """
    ic_rows = []

    def one(j: int):
        if gamma is not None:
            return fit_row(j, design, gamma, tol=tol, max_iter=max_iter), []
        best, path = select_gamma(design, j, criterion=criterion,
                                  n_gammas=n_gammas, min_ratio=min_ratio,
                                  tol=tol, max_iter=max_iter)
        rows = [(j, f.gamma, f.rss, f.df, f.aic, f.bic) for f in path]
        return best, rows

    results = _map_indexed(one, design.p, threads)
    fits = [r[0] for r in results]
    for r in results:
        ic_rows.extend(r[1])
    return fits, ic_rows


def sweep_path(design: DesignSet, kl_models, n_gammas: int = 50,
               min_ratio: float = 1e-3, tol: float = 1e-8,
               max_iter: int = 10000, threads: int = 1):
    """Row-wise regularization paths plus one kernel estimate per path index.

    Each row uses its own geometric grid from its own gamma_max, so path
    index i combines the i-th strongest penalty of every row.
    """
    def one(j: int):
        grid = default_gamma_grid(design, j, n_gammas, min_ratio)
        return regularization_path(design, j, gamma_grid=grid, tol=tol,
                                   max_iter=max_iter)

    paths = _map_indexed(one, design.p, threads)
    estimates = [recover_kernels([paths[j][i] for j in range(design.p)], kl_models)
                 for i in range(n_gammas)]
    return paths, estimates


def fit_vfar(panel: CurvePanel, basis: BasisSpec, L: int = 1,
             q_grid=(4, 5, 6), eta_grid=(0.0, 1e-4, 1e-2), folds: int = 5,
             gamma: float | None = None, criterion: str = "bic",
             n_gammas: int = 50, min_ratio: float = 1e-3, seed: int = 0,
             tol: float = 1e-8, max_iter: int = 10000, threads: int = 1):
    """Full three-stage fit: FPCA per variable, penalized row regressions,
    kernel recovery.  Returns (kernel estimate, fits, fpca result, ic rows)."""
    stage1 = fpca_panel(panel, basis, q_grid, eta_grid, folds=folds,
                        seed=seed, threads=threads)
    design = build_design(stage1.kl_models, L)
    fits, ic_rows = fit_rows(design, gamma=gamma, criterion=criterion,
                             n_gammas=n_gammas, min_ratio=min_ratio, tol=tol,
                             max_iter=max_iter, threads=threads)
    kernels = recover_kernels(fits, stage1.kl_models)
    return kernels, fits, stage1, ic_rows
